#ifndef GRACE_CLUSTERING_HPP
#define GRACE_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grace/error.hpp"
#include "grace/graph.hpp"
#include "grace/random.hpp"

namespace grace {

inline constexpr double kFrequencyFloor = 1e-10;
inline constexpr double kProbabilityFloor = 1e-12;

struct KMeansOptions {
    int max_iterations = 300;
    double tolerance = 1e-6;  // stop once no center moves farther than this
};

/// k-means++ seeding followed by Lloyd iterations. Returns K x d centers.
/// Assignment ties go to the lowest center index; a center left without
/// points is moved to the point farthest from its current center.
inline Matrix kmeans_init(const Matrix& x, Eigen::Index k, Rng& rng, const KMeansOptions& opts = {}) {
    const Eigen::Index n = x.rows();
    if (k < 1) throw ParameterError("kmeans_init: K must be >= 1");
    if (n < k) {
        throw InputError("kmeans_init: " + std::to_string(n) + " points cannot seed " + std::to_string(k) +
                         " clusters");
    }
    Matrix centers(k, x.cols());
    std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);

    auto pick = [&](Eigen::Index c, Eigen::Index i) {
        centers.row(c) = x.row(i);
        chosen[static_cast<std::size_t>(i)] = true;
        for (Eigen::Index j = 0; j < n; ++j) {
            best[static_cast<std::size_t>(j)] =
                std::min(best[static_cast<std::size_t>(j)], (x.row(j) - x.row(i)).squaredNorm());
        }
    };
    pick(0, static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
    for (Eigen::Index c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : best) total += d;
        Eigen::Index next = -1;
        if (total > 0.0) {
            double target = uniform01(rng) * total;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double d = best[static_cast<std::size_t>(j)];
                if (d <= 0.0) continue;
                next = j;
                if (target < d) break;
                target -= d;
            }
        } else {
            // All remaining points coincide with a center.
            for (Eigen::Index j = 0; j < n && next < 0; ++j) {
                if (!chosen[static_cast<std::size_t>(j)]) next = j;
            }
        }
        pick(c, next);
    }

    std::vector<Eigen::Index> label(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double dmin = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < k; ++c) {
                const double d = (x.row(i) - centers.row(c)).squaredNorm();
                if (d < dmin) {
                    dmin = d;
                    label[static_cast<std::size_t>(i)] = c;
                }
            }
        }
        Matrix next = Matrix::Zero(k, x.cols());
        std::vector<Eigen::Index> count(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            next.row(label[static_cast<std::size_t>(i)]) += x.row(i);
            ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                next.row(c) /= static_cast<double>(count[static_cast<std::size_t>(c)]);
                continue;
            }
            Eigen::Index far = 0;
            double dfar = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d = (x.row(i) - centers.row(label[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > dfar) {
                    dfar = d;
                    far = i;
                }
            }
            next.row(c) = x.row(far);
        }
        double shift = 0.0;
        for (Eigen::Index c = 0; c < k; ++c) shift = std::max(shift, (next.row(c) - centers.row(c)).norm());
        centers = next;
        if (shift < opts.tolerance) break;
    }
    return centers;
}

/// q_ik proportional to (1 + ||x_i - u_k||^2)^-1, rows normalized.
inline Matrix soft_assign(const Matrix& x_tilde, const Matrix& centers) {
    detail::require_shape(x_tilde.cols() == centers.cols(), "soft_assign",
                          "embedding dim " + std::to_string(x_tilde.cols()) + ", centers dim " +
                              std::to_string(centers.cols()));
    Matrix q(x_tilde.rows(), centers.rows());
    for (Eigen::Index i = 0; i < x_tilde.rows(); ++i) {
        double z = 0.0;
        for (Eigen::Index k = 0; k < centers.rows(); ++k) {
            q(i, k) = 1.0 / (1.0 + (x_tilde.row(i) - centers.row(k)).squaredNorm());
            z += q(i, k);
        }
        q.row(i) /= z;
    }
    return q;
}

struct TargetDistribution {
    Matrix p;
    Vector frequency;  // f_k = sum_i q_ik
};

/// p_ik proportional to q_ik^2 / f_k. Sharpens confident assignments and
/// discounts large clusters.
inline TargetDistribution target_distribution(const Matrix& q) {
    TargetDistribution t;
    t.frequency = q.colwise().sum().transpose();
    t.p.resize(q.rows(), q.cols());
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        double z = 0.0;
        for (Eigen::Index k = 0; k < q.cols(); ++k) {
            t.p(i, k) = q(i, k) * q(i, k) / std::max(t.frequency(k), kFrequencyFloor);
            z += t.p(i, k);
        }
        t.p.row(i) /= z;
    }
    return t;
}

/// KL(P || Q) summed over all rows; 0 log 0 = 0.
inline double kl_loss(const Matrix& p, const Matrix& q) {
    detail::require_shape(p.rows() == q.rows() && p.cols() == q.cols(), "kl_loss");
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index k = 0; k < p.cols(); ++k) {
            const double pk = p(i, k);
            if (pk <= 0.0) continue;
            total += pk * std::log(pk / std::max(q(i, k), kProbabilityFloor));
        }
    }
    return total;
}

struct KlGradients {
    Matrix embedding;  // dJ2/dX~, n x d
    Matrix centers;    // dJ2/dU, K x d
};

/// Gradients of KL(P || Q(X~, U)) with P held fixed:
///   dJ2/dx_i =  2 sum_k (1 + ||x_i - u_k||^2)^-1 (p_ik - q_ik)(x_i - u_k)
///   dJ2/du_k = -2 sum_i (1 + ||x_i - u_k||^2)^-1 (p_ik - q_ik)(x_i - u_k)
inline KlGradients kl_gradients(const Matrix& p, const Matrix& q, const Matrix& x_tilde, const Matrix& centers) {
    detail::require_shape(p.rows() == q.rows() && p.cols() == q.cols() && q.rows() == x_tilde.rows() &&
                              q.cols() == centers.rows() && x_tilde.cols() == centers.cols(),
                          "kl_gradients");
    KlGradients g{Matrix::Zero(x_tilde.rows(), x_tilde.cols()), Matrix::Zero(centers.rows(), centers.cols())};
    for (Eigen::Index i = 0; i < x_tilde.rows(); ++i) {
        for (Eigen::Index k = 0; k < centers.rows(); ++k) {
            const auto diff = (x_tilde.row(i) - centers.row(k)).eval();
            const double kernel = 1.0 / (1.0 + diff.squaredNorm());
            const auto term = (2.0 * kernel * (p(i, k) - q(i, k)) * diff).eval();
            g.embedding.row(i) += term;
            g.centers.row(k) -= term;
        }
    }
    return g;
}

/// argmax per row, ties to the lowest index.
inline std::vector<std::size_t> hard_assign(const Matrix& q) {
    std::vector<std::size_t> labels(static_cast<std::size_t>(q.rows()), 0);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < q.cols(); ++k) {
            if (q(i, k) > q(i, best)) best = k;
        }
        labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return labels;
}

}  // namespace grace

#endif  // GRACE_CLUSTERING_HPP
