#ifndef GRACE_MODEL_HPP
#define GRACE_MODEL_HPP

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grace/clustering.hpp"
#include "grace/config.hpp"
#include "grace/error.hpp"
#include "grace/nn.hpp"
#include "grace/propagation.hpp"
#include "grace/random.hpp"

namespace grace {

/// Encoder widths input -> ... -> embed_dim, halving per hidden layer and never
/// narrower than the embedding.
inline std::vector<Eigen::Index> encoder_widths(Eigen::Index input_dim, int hidden_layers, Eigen::Index embed_dim) {
    std::vector<Eigen::Index> widths{input_dim};
    Eigen::Index w = input_dim;
    for (int h = 1; h < hidden_layers; ++h) {
        w = std::max<Eigen::Index>(embed_dim, w / 2);
        widths.push_back(w);
    }
    widths.push_back(embed_dim);
    return widths;
}

inline Eigen::Index resolve_embed_dim(Eigen::Index input_dim, int embed_dim) {
    return embed_dim > 0 ? embed_dim : std::max<Eigen::Index>(1, input_dim / 4);
}

/// One inverted-dropout mask per layer input. Empty vectors mean evaluation mode.
struct DropoutMasks {
    std::vector<Matrix> encoder;
    std::vector<Matrix> decoder;
};

enum class Phase { Pretrain, Cotrain };

struct ForwardResult {
    Matrix embedding;         // X
    Matrix propagated;        // X~ (co-training only)
    Matrix reconstruction;    // decoder output: logits for binary contents
    Matrix assignment;        // Q (co-training only)
    double j1 = 0.0;
    double j2 = 0.0;
    double j = 0.0;
    Phase phase = Phase::Pretrain;
    // Caches for backward().
    Matrix j1_gradient;
    Matrix target;
};

struct ModelGradients {
    std::vector<Matrix> encoder_weight;
    std::vector<Vector> encoder_bias;
    std::vector<Matrix> decoder_weight;
    std::vector<Vector> decoder_bias;
    Matrix centers;
};

/// Denoising autoencoder + influence propagation + Student-t clustering head,
/// trained on J = J1 + lambda J2.
class GraceModel {
public:
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
    Matrix centers;  // K x embed_dim; empty until initialized
    double lambda = 0.1;
    double dropout = 0.5;
    ContentKind content_kind = ContentKind::Binary;
    std::optional<PropagationOperator> propagation;

    GraceModel() = default;

    /// Builds and Glorot-initializes the layer stacks. The decoder mirrors the
    /// encoder and ends in a linear layer (logits for cross-entropy, raw
    /// outputs for squared error).
    static GraceModel create(Eigen::Index input_dim, const TrainConfig& cfg, ContentKind kind) {
        if (input_dim < 1) throw InputError("GraceModel: input dimension must be >= 1");
        if (cfg.hidden_layers < 1) throw ParameterError("GraceModel: hidden_layers must be >= 1");
        GraceModel m;
        m.lambda = cfg.lambda;
        m.dropout = cfg.dropout;
        m.content_kind = kind;
        const auto widths = encoder_widths(input_dim, cfg.hidden_layers, resolve_embed_dim(input_dim, cfg.embed_dim));
        Rng rng = named_stream(cfg.seed, "init");
        for (std::size_t h = 0; h + 1 < widths.size(); ++h) {
            m.encoder.emplace_back(widths[h], widths[h + 1], Activation::ELU);
            m.encoder.back().initialize(rng);
        }
        for (std::size_t h = widths.size() - 1; h > 0; --h) {
            const Activation act = h == 1 ? Activation::Linear : Activation::ELU;
            m.decoder.emplace_back(widths[h], widths[h - 1], act);
            m.decoder.back().initialize(rng);
        }
        return m;
    }

    Eigen::Index input_dim() const { return encoder.front().in_dim(); }
    Eigen::Index embed_dim() const { return encoder.back().out_dim(); }
    Eigen::Index clusters() const { return centers.rows(); }

    DropoutMasks sample_masks(Eigen::Index n, Rng& rng) const {
        DropoutMasks masks;
        for (const auto& layer : encoder) masks.encoder.push_back(dropout_mask(n, layer.in_dim(), dropout, rng));
        for (const auto& layer : decoder) masks.decoder.push_back(dropout_mask(n, layer.in_dim(), dropout, rng));
        return masks;
    }

    Matrix encode(const Matrix& a, const std::vector<Matrix>& masks = {}) {
        detail::require_shape(a.cols() == input_dim(), "encode",
                              "contents width " + std::to_string(a.cols()) + ", model expects " +
                                  std::to_string(input_dim()));
        Matrix x = a;
        for (std::size_t h = 0; h < encoder.size(); ++h) {
            x = encoder[h].forward(x, masks.empty() ? Matrix() : masks[h]);
        }
        return x;
    }

    Matrix decode(const Matrix& x, const std::vector<Matrix>& masks = {}) {
        detail::require_shape(x.cols() == embed_dim(), "decode");
        Matrix y = x;
        for (std::size_t h = 0; h < decoder.size(); ++h) {
            y = decoder[h].forward(y, masks.empty() ? Matrix() : masks[h]);
        }
        return y;
    }

    LossResult reconstruction_loss(const Matrix& a, const Matrix& out) const {
        return content_kind == ContentKind::Binary ? bce_loss(a, out) : mse_loss(a, out);
    }

    /// Full forward pass. In co-training the target distribution must be supplied.
    ForwardResult forward(const Matrix& a, const DropoutMasks& masks, Phase phase, const Matrix* target = nullptr) {
        ForwardResult r;
        r.phase = phase;
        r.embedding = encode(a, masks.encoder);
        r.reconstruction = decode(r.embedding, masks.decoder);
        LossResult l1 = reconstruction_loss(a, r.reconstruction);
        r.j1 = l1.value;
        r.j1_gradient = std::move(l1.gradient);
        r.j = r.j1;
        if (phase == Phase::Pretrain) return r;

        if (target == nullptr) throw StateError("forward: co-training requires a target distribution P");
        if (centers.size() == 0) throw StateError("forward: cluster centers are not initialized");
        if (!propagation) throw StateError("forward: no propagation operator attached");
        detail::require_shape(target->rows() == a.rows() && target->cols() == centers.rows(), "forward", "target P");
        r.propagated = grace::propagate(*propagation, r.embedding);
        r.assignment = soft_assign(r.propagated, centers);
        r.target = *target;
        r.j2 = kl_loss(r.target, r.assignment);
        r.j = r.j1 + lambda * r.j2;
        return r;
    }

    /// Gradients of the cached forward pass. dJ/dX combines the decoder path
    /// with R^T (lambda dJ2/dX~).
    ModelGradients backward(const ForwardResult& f) const {
        ModelGradients g;
        Matrix upstream = f.j1_gradient;
        g.decoder_weight.resize(decoder.size());
        g.decoder_bias.resize(decoder.size());
        for (std::size_t h = decoder.size(); h-- > 0;) {
            LayerGradients lg = decoder[h].backward(upstream);
            g.decoder_weight[h] = std::move(lg.weight);
            g.decoder_bias[h] = std::move(lg.bias);
            upstream = std::move(lg.input);
        }
        if (f.phase == Phase::Cotrain) {
            KlGradients kg = kl_gradients(f.target, f.assignment, f.propagated, centers);
            upstream += backprop_propagation(*propagation, lambda * kg.embedding);
            g.centers = lambda * kg.centers;
        }
        g.encoder_weight.resize(encoder.size());
        g.encoder_bias.resize(encoder.size());
        for (std::size_t h = encoder.size(); h-- > 0;) {
            LayerGradients lg = encoder[h].backward(upstream);
            g.encoder_weight[h] = std::move(lg.weight);
            g.encoder_bias[h] = std::move(lg.bias);
            upstream = std::move(lg.input);
        }
        return g;
    }

    /// Parameter blocks in a fixed order: encoder (W, b)..., decoder (W, b)..., centers.
    std::vector<std::span<double>> parameters(bool with_centers) {
        std::vector<std::span<double>> out;
        for (auto& l : encoder) {
            out.push_back(as_span(l.weight));
            out.push_back(as_span(l.bias));
        }
        for (auto& l : decoder) {
            out.push_back(as_span(l.weight));
            out.push_back(as_span(l.bias));
        }
        if (with_centers) out.push_back(as_span(centers));
        return out;
    }

    static std::vector<std::span<const double>> gradient_blocks(const ModelGradients& g, bool with_centers) {
        std::vector<std::span<const double>> out;
        for (std::size_t h = 0; h < g.encoder_weight.size(); ++h) {
            out.push_back(as_span(g.encoder_weight[h]));
            out.push_back(as_span(g.encoder_bias[h]));
        }
        for (std::size_t h = 0; h < g.decoder_weight.size(); ++h) {
            out.push_back(as_span(g.decoder_weight[h]));
            out.push_back(as_span(g.decoder_bias[h]));
        }
        if (with_centers) out.push_back(as_span(g.centers));
        return out;
    }

    bool parameters_finite() const {
        for (const auto& l : encoder) {
            if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
        }
        for (const auto& l : decoder) {
            if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
        }
        return centers.allFinite();
    }

    /// Evaluation-mode embedding (no dropout).
    Matrix embed(const Matrix& a) { return encode(a); }

    /// Evaluation-mode propagated embedding X~ = R encode(A).
    Matrix propagated_embedding(const Matrix& a) {
        if (!propagation) throw StateError("propagated_embedding: no propagation operator attached");
        return grace::propagate(*propagation, encode(a));
    }

    /// Evaluation-mode soft assignment Q.
    Matrix soft_assignment(const Matrix& a) {
        if (centers.size() == 0) throw StateError("soft_assignment: cluster centers are not initialized");
        return soft_assign(propagated_embedding(a), centers);
    }
};

}  // namespace grace

#endif  // GRACE_MODEL_HPP
