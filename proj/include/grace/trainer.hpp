#ifndef GRACE_TRAINER_HPP
#define GRACE_TRAINER_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grace/clustering.hpp"
#include "grace/config.hpp"
#include "grace/error.hpp"
#include "grace/graph.hpp"
#include "grace/model.hpp"
#include "grace/nn.hpp"
#include "grace/propagation.hpp"
#include "grace/random.hpp"

namespace grace {

struct LossRecord {
    Phase phase = Phase::Pretrain;
    int step = 0;
    double j1 = 0.0;
    std::optional<double> j2;
    double j = 0.0;
};

struct CotrainResult {
    Matrix assignment;                  // final Q (evaluation mode)
    std::vector<std::size_t> labels;    // hard_assign(Q)
    std::vector<LossRecord> trace;
    // Evaluation-mode J2 against the macro-step's fixed P, before and after its micro-steps.
    std::vector<double> macro_j2_start;
    std::vector<double> macro_j2_end;
    // Sum of P entries weighted by position; one per macro-step.
    std::vector<double> target_checksums;
};

inline double checksum(const Matrix& m) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) s += m.data()[i] * static_cast<double>((i % 7919) + 1);
    return s;
}

/// Owns the optimizer state and the dropout stream of one run, so that
/// pre-training followed by co-training continues a single update schedule.
class Trainer {
public:
    using MacroStepCallback = std::function<void(int macro_step, const GraceModel&)>;

    explicit Trainer(const TrainConfig& cfg)
        : cfg_(cfg), optimizer_(cfg.optimizer, cfg.rho), dropout_rng_(named_stream(cfg.seed, "dropout")) {}

    const TrainConfig& config() const { return cfg_; }
    Optimizer& optimizer() { return optimizer_; }
    Rng& dropout_rng() { return dropout_rng_; }

    /// Autoencoder only: pretrain_epochs full-batch steps on J1. Returns the
    /// per-epoch J1 trace; stops early once J1 drops below pretrain_stop_loss.
    std::vector<LossRecord> pretrain(GraceModel& model, const Matrix& a) {
        std::vector<LossRecord> trace;
        for (int epoch = 1; epoch <= cfg_.pretrain_epochs; ++epoch) {
            const DropoutMasks masks = model.sample_masks(a.rows(), dropout_rng_);
            const ForwardResult f = model.forward(a, masks, Phase::Pretrain);
            if (!std::isfinite(f.j1)) throw NumericalError("pretrain: J1 is not finite at epoch " + std::to_string(epoch));
            trace.push_back({Phase::Pretrain, epoch, f.j1, std::nullopt, f.j});
            if (f.j1 < cfg_.pretrain_stop_loss) break;
            const ModelGradients g = model.backward(f);
            optimizer_.step(model.parameters(false), GraceModel::gradient_blocks(g, false));
            if (!model.parameters_finite()) {
                throw NumericalError("pretrain: non-finite parameters after epoch " + std::to_string(epoch));
            }
        }
        return trace;
    }

    /// K-means on the propagated pre-trained embedding X~0.
    void initialize_centers(GraceModel& model, const Matrix& a) {
        Rng rng = named_stream(cfg_.seed, "kmeans");
        model.centers = kmeans_init(model.propagated_embedding(a), cfg_.clusters, rng);
    }

    /// Self-training: each macro-step fixes P from the current Q, then takes
    /// micro_steps optimizer steps on J = J1 + lambda J2 over encoder,
    /// decoder and centers. Centers are initialized here if still empty.
    CotrainResult cotrain(GraceModel& model, const Matrix& a, const MacroStepCallback& on_macro_step = {}) {
        if (!model.propagation) throw StateError("cotrain: no propagation operator attached");
        if (model.centers.size() == 0) initialize_centers(model, a);
        CotrainResult res;
        int step = 0;
        for (int t = 1; t <= cfg_.macro_steps; ++t) {
            const Matrix p = target_distribution(model.soft_assignment(a)).p;
            res.target_checksums.push_back(checksum(p));
            res.macro_j2_start.push_back(kl_loss(p, model.soft_assignment(a)));
            bool converged = false;
            for (int s = 1; s <= cfg_.micro_steps; ++s) {
                ++step;
                const DropoutMasks masks = model.sample_masks(a.rows(), dropout_rng_);
                const ForwardResult f = model.forward(a, masks, Phase::Cotrain, &p);
                if (!std::isfinite(f.j)) {
                    throw NumericalError("cotrain: loss is not finite at macro-step " + std::to_string(t) +
                                         ", micro-step " + std::to_string(s));
                }
                res.trace.push_back({Phase::Cotrain, step, f.j1, f.j2, f.j});
                const ModelGradients g = model.backward(f);
                optimizer_.step(model.parameters(true), GraceModel::gradient_blocks(g, true));
                if (!model.parameters_finite()) {
                    throw NumericalError("cotrain: non-finite parameters at macro-step " + std::to_string(t));
                }
                if (cfg_.cotrain_stop_j1 > 0.0 && cfg_.cotrain_stop_j2 > 0.0 && f.j1 < cfg_.cotrain_stop_j1 &&
                    f.j2 < cfg_.cotrain_stop_j2) {
                    converged = true;
                    break;
                }
            }
            res.macro_j2_end.push_back(kl_loss(p, model.soft_assignment(a)));
            if (on_macro_step) on_macro_step(t, model);
            if (converged) break;
        }
        res.assignment = model.soft_assignment(a);
        res.labels = hard_assign(res.assignment);
        return res;
    }

private:
    TrainConfig cfg_;
    Optimizer optimizer_;
    Rng dropout_rng_;
};

struct TrainingRun {
    GraceModel model;
    std::vector<LossRecord> pretrain_trace;
    CotrainResult cotrain;
};

/// Pre-training, center initialization and co-training on one dataset.
inline TrainingRun train_grace(const Matrix& a, ContentKind kind, const Graph& graph, const TrainConfig& cfg,
                               const Trainer::MacroStepCallback& on_macro_step = {}) {
    cfg.validate();
    detail::require_shape(static_cast<std::size_t>(a.rows()) == graph.n, "train_grace", "contents rows vs graph nodes");
    TrainingRun run;
    run.model = GraceModel::create(a.cols(), cfg, kind);
    run.model.propagation = make_propagation(graph, cfg.propagation, cfg.alpha, cfg.propagation_order);
    Trainer trainer(cfg);
    run.pretrain_trace = trainer.pretrain(run.model, a);
    run.cotrain = trainer.cotrain(run.model, a, on_macro_step);
    return run;
}

}  // namespace grace

#endif  // GRACE_TRAINER_HPP
