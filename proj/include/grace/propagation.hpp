#ifndef GRACE_PROPAGATION_HPP
#define GRACE_PROPAGATION_HPP

#include <cmath>
#include <cstddef>
#include <iostream>
#include <string>
#include <utility>

#include <Eigen/LU>

#include "grace/error.hpp"
#include "grace/graph.hpp"

namespace grace {

enum class PropagationVariant { ExactStationary, NeumannTruncated, PlainPower };

inline const char* to_string(PropagationVariant v) {
    switch (v) {
        case PropagationVariant::ExactStationary: return "exact";
        case PropagationVariant::NeumannTruncated: return "neumann";
        case PropagationVariant::PlainPower: return "power";
    }
    return "?";
}

inline PropagationVariant parse_propagation_variant(const std::string& s) {
    if (s == "exact") return PropagationVariant::ExactStationary;
    if (s == "neumann") return PropagationVariant::NeumannTruncated;
    if (s == "power") return PropagationVariant::PlainPower;
    throw ParameterError("unknown propagation variant '" + s + "' (expected exact|neumann|power)");
}

/// Nodes above which the stationary operator is not materialized densely.
inline constexpr std::size_t kDenseNodeGuard = 20000;
inline constexpr int kDefaultNeumannOrder = 50;

/// Influence-propagation operator X -> R X.
///
/// ExactStationary holds the dense R = (1-a)(I - aT)^-1, whose rows sum to one.
/// NeumannTruncated applies R_B = (1-a) sum_{b<=B} a^b T^b by Horner's rule
/// over sparse products, and PlainPower applies T^b; neither materializes R
/// unless asked to.
class PropagationOperator {
public:
    PropagationVariant variant() const { return variant_; }
    double alpha() const { return alpha_; }
    /// Self-propagation constant; fixed to one and absorbed by the (1-a) row normalization.
    double beta() const { return 1.0; }
    double gamma() const { return alpha_ / beta(); }
    /// B for NeumannTruncated, b for PlainPower, 0 for ExactStationary.
    int order() const { return order_; }
    std::size_t size() const { return n_; }

    /// Upper bound on ||R - R_B||_inf for the truncated series; 0 for the exact operator.
    double truncation_bound() const {
        return variant_ == PropagationVariant::NeumannTruncated ? std::pow(alpha_, order_ + 1) : 0.0;
    }

    const Matrix& dense() const {
        if (variant_ != PropagationVariant::ExactStationary) {
            throw StateError("PropagationOperator::dense: only the exact operator is materialized");
        }
        return r_;
    }

    /// Dense matrix of the operator (applies it to the identity).
    Matrix materialize() const {
        if (variant_ == PropagationVariant::ExactStationary) return r_;
        return apply(Matrix::Identity(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_)));
    }

    Matrix apply(const Matrix& x) const {
        detail::require_shape(x.rows() == static_cast<Eigen::Index>(n_), "propagate",
                              "operator n=" + std::to_string(n_) + ", X rows=" + std::to_string(x.rows()));
        return series(t_, x);
    }

    Matrix apply_transpose(const Matrix& g) const {
        detail::require_shape(g.rows() == static_cast<Eigen::Index>(n_), "backprop_propagation",
                              "operator n=" + std::to_string(n_) + ", G rows=" + std::to_string(g.rows()));
        if (variant_ == PropagationVariant::ExactStationary) return r_.transpose() * g;
        return series(tt_, g);
    }

    friend PropagationOperator exact_stationary(const CsrMatrix& transition, double alpha);
    friend PropagationOperator neumann_truncated(const CsrMatrix& transition, double alpha, int order);
    friend PropagationOperator plain_power(const CsrMatrix& transition, int steps);

private:
    Matrix series(const CsrMatrix& t, const Matrix& x) const {
        switch (variant_) {
            case PropagationVariant::ExactStationary: return r_ * x;
            case PropagationVariant::PlainPower: {
                Matrix y = x;
                for (int b = 0; b < order_; ++b) y = spmm(t, y);
                return y;
            }
            case PropagationVariant::NeumannTruncated: {
                // y = x + a T (x + a T (... x))
                Matrix y = x;
                for (int b = 0; b < order_; ++b) y = x + alpha_ * spmm(t, y);
                return (1.0 - alpha_) * y;
            }
        }
        return x;
    }

    PropagationVariant variant_ = PropagationVariant::ExactStationary;
    double alpha_ = 0.0;
    int order_ = 0;
    std::size_t n_ = 0;
    Matrix r_;
    CsrMatrix t_;
    CsrMatrix tt_;
};

namespace detail {

inline void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw ParameterError("damping alpha must lie in [0,1), got " + std::to_string(alpha));
    }
}

inline void check_square(const CsrMatrix& t) {
    if (t.rows() != t.cols()) throw InputError("transition matrix must be square");
}

}  // namespace detail

/// R = (1-a)(I - aT)^-1 via one LU factorization and n column solves.
inline PropagationOperator exact_stationary(const CsrMatrix& transition, double alpha) {
    detail::check_alpha(alpha);
    detail::check_square(transition);
    const auto n = static_cast<Eigen::Index>(transition.rows());
    PropagationOperator op;
    op.variant_ = PropagationVariant::ExactStationary;
    op.alpha_ = alpha;
    op.n_ = transition.rows();
    if (n == 0) return op;
    Matrix system = Matrix::Identity(n, n) - alpha * transition.to_dense();
    Eigen::PartialPivLU<Matrix> lu(system);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        throw NumericalError("exact_stationary: (I - alpha T) is singular (rcond=" + std::to_string(rcond) + ")");
    }
    op.r_ = lu.solve((1.0 - alpha) * Matrix::Identity(n, n));
    if (!op.r_.allFinite()) throw NumericalError("exact_stationary: non-finite entries in R");
    return op;
}

inline PropagationOperator neumann_truncated(const CsrMatrix& transition, double alpha, int order) {
    detail::check_alpha(alpha);
    detail::check_square(transition);
    if (order < 0) throw ParameterError("Neumann order must be >= 0, got " + std::to_string(order));
    PropagationOperator op;
    op.variant_ = PropagationVariant::NeumannTruncated;
    op.alpha_ = alpha;
    op.order_ = order;
    op.n_ = transition.rows();
    op.t_ = transition;
    op.tt_ = transition.transpose();
    return op;
}

inline PropagationOperator plain_power(const CsrMatrix& transition, int steps) {
    detail::check_square(transition);
    if (steps < 0) throw ParameterError("power steps must be >= 0, got " + std::to_string(steps));
    PropagationOperator op;
    op.variant_ = PropagationVariant::PlainPower;
    op.order_ = steps;
    op.n_ = transition.rows();
    op.t_ = transition;
    op.tt_ = transition.transpose();
    return op;
}

/// Builds the configured operator. A request for the exact operator on a graph
/// larger than `dense_guard` falls back to the truncated series.
inline PropagationOperator make_propagation(const Graph& g, PropagationVariant variant, double alpha,
                                            int order, std::size_t dense_guard = kDenseNodeGuard) {
    switch (variant) {
        case PropagationVariant::ExactStationary:
            if (g.n > dense_guard) {
                std::cerr << "warning: " << g.n << " nodes exceed the dense guard (" << dense_guard
                          << "); using Neumann order " << kDefaultNeumannOrder << "\n";
                return neumann_truncated(g.transition, alpha, kDefaultNeumannOrder);
            }
            return exact_stationary(g.transition, alpha);
        case PropagationVariant::NeumannTruncated: return neumann_truncated(g.transition, alpha, order);
        case PropagationVariant::PlainPower: return plain_power(g.transition, order);
    }
    throw ParameterError("unknown propagation variant");
}

/// X~ = R X (or T^b X).
inline Matrix propagate(const PropagationOperator& op, const Matrix& x) { return op.apply(x); }

/// R^T G: the gradient of propagate with respect to X for upstream gradient G.
inline Matrix backprop_propagation(const PropagationOperator& op, const Matrix& g_tilde) {
    return op.apply_transpose(g_tilde);
}

/// T^b X by b successive sparse products.
inline Matrix plain_power_propagate(const CsrMatrix& transition, const Matrix& x, int steps) {
    return plain_power(transition, steps).apply(x);
}

inline double inf_norm(const Matrix& m) {
    return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace grace

#endif  // GRACE_PROPAGATION_HPP
