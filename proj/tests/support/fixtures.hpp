#ifndef GRACE_TESTS_FIXTURES_HPP
#define GRACE_TESTS_FIXTURES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "grace/grace.hpp"

namespace fixture {

/// n = 12 nodes in two planted groups, kappa = 10 binary features.
inline grace::Dataset tiny_dataset() {
    grace::SbmParams p;
    p.blocks = 2;
    p.nodes_per_block = 6;
    p.p_in = 0.6;
    p.p_out = 0.05;
    p.sig_per_block = 3;
    p.noise_attrs = 4;
    p.p_sig_on = 0.8;
    p.p_noise_on = 0.2;
    p.p_flip = 0.1;
    p.seed = 11;
    return grace::generate_sbm(p);
}

/// embed_dim 4, H 2, K 2, alpha 0.9, lambda 0.1.
inline grace::TrainConfig tiny_config() {
    grace::TrainConfig c;
    c.embed_dim = 4;
    c.hidden_layers = 2;
    c.clusters = 2;
    c.alpha = 0.9;
    c.lambda = 0.1;
    c.dropout = 0.5;
    c.seed = 3;
    c.pretrain_epochs = 200;
    c.macro_steps = 3;
    c.micro_steps = 10;
    return c;
}

/// The model in co-training state after a short pre-training run (so biases
/// are off zero and no pre-activation sits on the ELU kink): centers from
/// k-means on X~, P from the evaluation-mode Q.
struct CotrainState {
    grace::GraceModel model;
    grace::Matrix target;
};

inline CotrainState tiny_cotrain_state(const grace::Dataset& ds, const grace::TrainConfig& cfg) {
    CotrainState s{grace::GraceModel::create(ds.features(), cfg, ds.kind), {}};
    s.model.propagation = grace::exact_stationary(ds.graph().transition, cfg.alpha);
    grace::TrainConfig warmup = cfg;
    warmup.pretrain_epochs = 20;
    warmup.optimizer = grace::OptimizerRule::AdaptiveMoment;
    warmup.rho = 1e-2;
    grace::Trainer(warmup).pretrain(s.model, ds.contents);
    grace::Rng rng = grace::named_stream(cfg.seed, "kmeans");
    s.model.centers = grace::kmeans_init(s.model.propagated_embedding(ds.contents), cfg.clusters, rng);
    s.target = grace::target_distribution(s.model.soft_assignment(ds.contents)).p;
    return s;
}

struct GateResult {
    // max |a - n| / max(|a|, |n|, 1e-8) over every coordinate
    double max_relative_error = 0.0;
    // max |a - n| / (tolerance * max(|a|, |n|) + roundoff); at most 1 when every
    // coordinate agrees to `tolerance` or to the difference quotient's own
    // round-off level, roundoff = 4 * machine epsilon * |J| / epsilon
    double max_roundoff_ratio = 0.0;
    double roundoff = 0.0;
    double worst_analytic = 0.0;  // at the coordinate with the largest relative error
    double worst_numeric = 0.0;
    std::size_t coordinates = 0;
};

/// Central differences of the joint loss J against backward() for every
/// parameter of every block (encoder, decoder, centers), dropout masks frozen.
inline GateResult full_gradient_check(grace::GraceModel& model, const grace::Matrix& a,
                                      const grace::DropoutMasks& masks, const grace::Matrix& target,
                                      double epsilon = 1e-5, double scale_gradient = 1.0,
                                      double tolerance = 1e-5) {
    const grace::ForwardResult f = model.forward(a, masks, grace::Phase::Cotrain, &target);
    const grace::ModelGradients g = model.backward(f);
    auto params = model.parameters(true);
    auto grads = grace::GraceModel::gradient_blocks(g, true);
    auto loss = [&] { return model.forward(a, masks, grace::Phase::Cotrain, &target).j; };
    GateResult r;
    r.roundoff = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f.j) / epsilon;
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].size(); ++i) {
            double& p = params[b][i];
            const double p0 = p;
            p = p0 + epsilon;
            const double up = loss();
            p = p0 - epsilon;
            const double down = loss();
            p = p0;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double analytic = grads[b][i] * scale_gradient;
            const double diff = std::abs(analytic - numeric);
            const double scale = std::max(std::abs(analytic), std::abs(numeric));
            const double rel = diff / std::max(scale, 1e-8);
            if (rel > r.max_relative_error) {
                r.max_relative_error = rel;
                r.worst_analytic = analytic;
                r.worst_numeric = numeric;
            }
            r.max_roundoff_ratio = std::max(r.max_roundoff_ratio, diff / (tolerance * scale + r.roundoff));
            ++r.coordinates;
        }
    }
    return r;
}

}  // namespace fixture

#endif  // GRACE_TESTS_FIXTURES_HPP
