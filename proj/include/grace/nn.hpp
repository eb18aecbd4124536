#ifndef GRACE_NN_HPP
#define GRACE_NN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grace/error.hpp"
#include "grace/graph.hpp"
#include "grace/random.hpp"

namespace grace {

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Inverted-dropout mask: kept entries are 1/(1-rate), dropped entries 0.
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ParameterError("dropout rate must lie in [0,1), got " + std::to_string(rate));
    }
    if (rate == 0.0) return Matrix::Ones(rows, cols);
    const double keep = 1.0 / (1.0 - rate);
    Matrix m(rows, cols);
    // Row-major fill so masks do not depend on Eigen's storage order.
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform01(rng) < rate ? 0.0 : keep;
    }
    return m;
}

/// Evaluation mode is the identity mask regardless of the rate.
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng, bool training) {
    if (!training) return Matrix::Ones(rows, cols);
    return dropout_mask(rows, cols, rate, rng);
}

enum class Activation { ELU, Linear, Sigmoid };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::ELU: return "elu";
        case Activation::Linear: return "linear";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

inline Activation parse_activation(const std::string& s) {
    if (s == "elu") return Activation::ELU;
    if (s == "linear") return Activation::Linear;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw InputError("unknown activation '" + s + "'");
}

struct LayerGradients {
    Matrix weight;
    Vector bias;
    Matrix input;
};

/// Fully connected layer y = act(W (mask .* x) + b), batch along rows.
/// `weight` is out x in.
class DenseLayer {
public:
    Matrix weight;
    Vector bias;
    Activation activation = Activation::ELU;

    DenseLayer() = default;
    DenseLayer(Eigen::Index in, Eigen::Index out, Activation act)
        : weight(Matrix::Zero(out, in)), bias(Vector::Zero(out)), activation(act) {}

    Eigen::Index in_dim() const { return weight.cols(); }
    Eigen::Index out_dim() const { return weight.rows(); }
    Eigen::Index parameter_count() const { return weight.size() + bias.size(); }

    /// Glorot-uniform weights, zero bias.
    void initialize(Rng& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
        for (Eigen::Index i = 0; i < weight.rows(); ++i) {
            for (Eigen::Index j = 0; j < weight.cols(); ++j) weight(i, j) = uniform(rng, -limit, limit);
        }
        bias.setZero();
    }

    /// Caches the masked input and pre-activation for backward(). An empty
    /// mask means no dropout.
    Matrix forward(const Matrix& x, const Matrix& mask = Matrix()) {
        detail::require_shape(x.cols() == in_dim(), "layer_forward",
                              "input width " + std::to_string(x.cols()) + ", layer expects " +
                                  std::to_string(in_dim()));
        if (mask.size() != 0) {
            detail::require_shape(mask.rows() == x.rows() && mask.cols() == x.cols(), "layer_forward", "mask");
            input_ = x.cwiseProduct(mask);
        } else {
            input_ = x;
        }
        mask_ = mask;
        pre_ = input_ * weight.transpose();
        pre_.rowwise() += bias.transpose();
        return activate(pre_);
    }

    LayerGradients backward(const Matrix& grad_out) const {
        detail::require_shape(grad_out.rows() == pre_.rows() && grad_out.cols() == pre_.cols(), "layer_backward");
        Matrix dz = grad_out;
        switch (activation) {
            case Activation::ELU:
                for (Eigen::Index i = 0; i < dz.size(); ++i) dz.data()[i] *= elu_grad(pre_.data()[i]);
                break;
            case Activation::Sigmoid:
                for (Eigen::Index i = 0; i < dz.size(); ++i) {
                    const double s = sigmoid(pre_.data()[i]);
                    dz.data()[i] *= s * (1.0 - s);
                }
                break;
            case Activation::Linear: break;
        }
        LayerGradients g;
        g.weight = dz.transpose() * input_;
        g.bias = dz.colwise().sum().transpose();
        g.input = dz * weight;
        if (mask_.size() != 0) g.input = g.input.cwiseProduct(mask_);
        return g;
    }

    const Matrix& cached_preactivation() const { return pre_; }

private:
    Matrix activate(const Matrix& z) const {
        switch (activation) {
            case Activation::ELU: return z.unaryExpr([](double v) { return elu(v); });
            case Activation::Sigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
            case Activation::Linear: return z;
        }
        return z;
    }

    Matrix input_;
    Matrix mask_;
    Matrix pre_;
};

struct LossResult {
    double value = 0.0;
    Matrix gradient;  // d value / d (logits or outputs)
};

/// Sigmoid cross-entropy on logits, summed over features and averaged over rows.
inline LossResult bce_loss(const Matrix& target, const Matrix& logits) {
    detail::require_shape(target.rows() == logits.rows() && target.cols() == logits.cols(), "bce_loss");
    const double inv_n = target.rows() > 0 ? 1.0 / static_cast<double>(target.rows()) : 0.0;
    LossResult r;
    r.gradient.resize(logits.rows(), logits.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const double t = target(i, j);
            if (t != 0.0 && t != 1.0) {
                throw InputError("bce_loss: non-binary target " + std::to_string(t) + " at (" + std::to_string(i) +
                                 "," + std::to_string(j) + ")");
            }
            const double z = logits(i, j);
            total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
            r.gradient(i, j) = (sigmoid(z) - t) * inv_n;
        }
    }
    r.value = total * inv_n;
    return r;
}

/// Squared error, averaged over features and over rows.
inline LossResult mse_loss(const Matrix& target, const Matrix& output) {
    detail::require_shape(target.rows() == output.rows() && target.cols() == output.cols(), "mse_loss");
    LossResult r;
    if (target.size() == 0) {
        r.gradient = Matrix::Zero(target.rows(), target.cols());
        return r;
    }
    const Matrix diff = output - target;
    const double scale = 1.0 / static_cast<double>(target.size());
    r.value = diff.squaredNorm() * scale;
    r.gradient = 2.0 * scale * diff;
    return r;
}

enum class OptimizerRule { AccumulatedGradient, AdaptiveMoment };

inline const char* to_string(OptimizerRule r) {
    return r == OptimizerRule::AccumulatedGradient ? "accumulated" : "adam";
}

inline OptimizerRule parse_optimizer_rule(const std::string& s) {
    if (s == "accumulated" || s == "adagrad") return OptimizerRule::AccumulatedGradient;
    if (s == "adam") return OptimizerRule::AdaptiveMoment;
    throw ParameterError("unknown optimizer '" + s + "' (expected accumulated|adam)");
}

/// Per-parameter-block optimizer state. Blocks are addressed by position;
/// appending blocks later (cluster centers at co-training time) is allowed.
///
/// AccumulatedGradient: theta -= rho * g / sqrt(sum_i g_i^2 + eps).
/// AdaptiveMoment: bias-corrected first/second moments.
class Optimizer {
public:
    static constexpr double kEpsilon = 1e-8;
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;

    OptimizerRule rule = OptimizerRule::AccumulatedGradient;
    double rho = 1e-3;

    Optimizer() = default;
    Optimizer(OptimizerRule r, double learning_rate) : rule(r), rho(learning_rate) {
        if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be > 0");
    }

    long long steps_taken() const { return t_; }
    const std::vector<std::vector<double>>& first_accumulators() const { return acc1_; }
    const std::vector<std::vector<double>>& second_accumulators() const { return acc2_; }

    void restore(long long t, std::vector<std::vector<double>> acc1, std::vector<std::vector<double>> acc2) {
        t_ = t;
        acc1_ = std::move(acc1);
        acc2_ = std::move(acc2);
    }

    void step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads) {
        if (params.size() != grads.size()) throw InputError("optimizer_step: parameter/gradient block count differs");
        if (acc1_.size() < params.size()) {
            acc1_.resize(params.size());
            acc2_.resize(params.size());
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t b = 0; b < params.size(); ++b) {
            auto p = params[b];
            auto g = grads[b];
            if (p.size() != g.size()) throw InputError("optimizer_step: block " + std::to_string(b) + " size differs");
            auto& a1 = acc1_[b];
            auto& a2 = acc2_[b];
            if (a1.size() != p.size()) {
                a1.assign(p.size(), 0.0);
                a2.assign(p.size(), 0.0);
            }
            if (rule == OptimizerRule::AccumulatedGradient) {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    a2[i] += g[i] * g[i];
                    p[i] -= rho * g[i] / std::sqrt(a2[i] + kEpsilon);
                }
            } else {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    a1[i] = kBeta1 * a1[i] + (1.0 - kBeta1) * g[i];
                    a2[i] = kBeta2 * a2[i] + (1.0 - kBeta2) * g[i] * g[i];
                    const double m_hat = a1[i] / bc1;
                    const double v_hat = a2[i] / bc2;
                    p[i] -= rho * m_hat / (std::sqrt(v_hat) + kEpsilon);
                }
            }
        }
    }

private:
    long long t_ = 0;
    std::vector<std::vector<double>> acc1_;
    std::vector<std::vector<double>> acc2_;
};

inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

struct GradCheckOptions {
    double epsilon = 1e-5;
    std::size_t max_coordinates = 200;
    std::uint64_t seed = 0;
    /// Magnitude below which differences are judged absolutely rather than relatively.
    double floor = 1e-8;
};

/// Central-difference check of `analytic` against `loss` perturbed through
/// `params`. Parameter sets larger than max_coordinates are subsampled.
/// Returns the largest relative error seen.
inline double grad_check(const std::function<double()>& loss, std::span<double> params,
                         std::span<const double> analytic, const GradCheckOptions& opts = {}) {
    if (params.size() != analytic.size()) throw InputError("grad_check: parameter/gradient sizes differ");
    std::vector<std::size_t> coords(params.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > opts.max_coordinates) {
        Rng rng(opts.seed);
        for (std::size_t i = 0; i < opts.max_coordinates; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng() % (coords.size() - i));
            std::swap(coords[i], coords[j]);
        }
        coords.resize(opts.max_coordinates);
        std::sort(coords.begin(), coords.end());
    }
    double worst = 0.0;
    for (std::size_t c : coords) {
        const double saved = params[c];
        params[c] = saved + opts.epsilon;
        const double up = loss();
        params[c] = saved - opts.epsilon;
        const double down = loss();
        params[c] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericalError("grad_check: non-finite loss at coordinate " + std::to_string(c));
        }
        const double numeric = (up - down) / (2.0 * opts.epsilon);
        worst = std::max(worst, relative_error(analytic[c], numeric, opts.floor));
    }
    return worst;
}

inline std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> as_span(const Matrix& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace grace

#endif  // GRACE_NN_HPP
