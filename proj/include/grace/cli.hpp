#ifndef GRACE_CLI_HPP
#define GRACE_CLI_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grace/checkpoint.hpp"
#include "grace/clustering.hpp"
#include "grace/config.hpp"
#include "grace/data.hpp"
#include "grace/error.hpp"
#include "grace/metrics.hpp"
#include "grace/model.hpp"
#include "grace/propagation.hpp"
#include "grace/trainer.hpp"

namespace grace::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericalError = 3 };

/// Flags shared by every command.
struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
};

/// Paired lists: predictions[i] is scored against labels[i].
struct EvaluateOptions {
    std::vector<std::string> predictions;
    std::vector<std::string> labels;
};

struct ProjectOptions {
    std::string checkpoint;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// Relative paths in a config file resolve against the file's directory.
inline std::string resolve(const std::string& config_path, const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(config_path).parent_path() / p).string();
}

template <class Fn>
int guarded(const char* command, std::ostream& err, Fn&& body) {
    try {
        return body();
    } catch (const NumericalError& e) {
        err << command << ": numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        err << command << ": " << e.what() << '\n';
        return kInputError;
    }
}

inline Dataset load_configured_dataset(const KeyValueConfig& kv, const std::string& config_path) {
    const std::string features = resolve(config_path, kv.require_string("features"));
    const std::string edges = resolve(config_path, kv.get_string("edges", ""));
    const std::string labels = resolve(config_path, kv.get_string("labels", ""));
    const ContentKind kind = parse_content_kind(kv.get_string("kind", "binary"));
    const auto num_features = static_cast<Eigen::Index>(kv.get_int("num_features", 0));
    return load_dataset(features, edges, labels.empty() ? std::nullopt : std::optional<std::string>(labels), kind,
                        num_features);
}

inline void warn_unused(const KeyValueConfig& kv, const std::string& source, std::ostream& err) {
    for (const auto& k : kv.unused_keys()) err << "warning: " << source << ": unknown key '" << k << "' ignored\n";
}

inline std::string log_csv(const std::vector<LossRecord>& pre, const std::vector<LossRecord>& co, bool cluster_loss_active) {
    std::ostringstream os;
    os << "phase,step,J1,J2,J\n";
    for (const auto& r : pre) os << "pretrain," << r.step << ',' << fmt(r.j1) << ",," << fmt(r.j) << '\n';
    for (const auto& r : co) {
        os << "cotrain," << r.step << ',' << fmt(r.j1) << ',';
        if (cluster_loss_active && r.j2) os << fmt(*r.j2);
        os << ',' << fmt(r.j) << '\n';
    }
    return os.str();
}

inline std::string predictions_tsv(const std::vector<std::size_t>& labels) {
    std::ostringstream os;
    for (std::size_t i = 0; i < labels.size(); ++i) os << i << '\t' << labels[i] << '\n';
    return os.str();
}

inline std::vector<long long> first_truth_label(const std::optional<ClusterSet>& truth, std::size_t n) {
    std::vector<long long> out(n, -1);
    if (!truth) return out;
    for (std::size_t c = truth->size(); c-- > 0;) {
        for (NodeId node : (*truth)[c]) {
            if (node < n) out[node] = static_cast<long long>(c);
        }
    }
    return out;
}

inline std::string projection_csv(const Matrix& coords, const std::vector<std::size_t>& predicted,
                                  const std::vector<long long>& truth) {
    std::ostringstream os;
    os << "node_id,pc1,pc2,predicted_cluster,true_cluster\n";
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        os << i << ',' << fmt(coords(i, 0)) << ',' << fmt(coords(i, 1)) << ','
           << predicted[static_cast<std::size_t>(i)] << ',' << truth[static_cast<std::size_t>(i)] << '\n';
    }
    return os.str();
}

}  // namespace detail

/// Writes features.tsv, edges.tsv, labels.tsv and params.txt for an attributed SBM.
inline int cmd_generate(const GlobalOptions& g, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded("generate", err, [&] {
        SbmParams params;
        if (!g.config.empty()) {
            const KeyValueConfig kv = KeyValueConfig::load(g.config);
            params = SbmParams::from(kv);
            detail::warn_unused(kv, g.config, err);
        }
        if (g.seed) params.seed = *g.seed;
        const Dataset ds = generate_sbm(params);
        const std::filesystem::path dir(g.out);
        save_dataset(ds, dir);
        write_file(dir / "params.txt", params.echo());
        out << "generated " << ds.nodes() << " nodes, " << ds.edges.size() << " edges, " << ds.features()
            << " features in " << dir.string() << '\n';
        return int{kOk};
    });
}

/// Pre-training then co-training. Writes checkpoint.grace (refreshed every
/// macro-step), train_log.csv and predictions.tsv.
inline int cmd_train(const GlobalOptions& g, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded("train", err, [&] {
        if (g.config.empty()) throw InputError("train requires --config");
        const KeyValueConfig kv = KeyValueConfig::load(g.config);
        TrainConfig cfg = TrainConfig::from(kv);
        if (g.seed) cfg.seed = *g.seed;
        const Dataset ds = detail::load_configured_dataset(kv, g.config);
        detail::warn_unused(kv, g.config, err);
        cfg.validate();

        const std::filesystem::path dir(g.out);
        std::filesystem::create_directories(dir);
        const Graph graph = ds.graph();
        GraceModel model = GraceModel::create(ds.features(), cfg, ds.kind);
        model.propagation = make_propagation(graph, cfg.propagation, cfg.alpha, cfg.propagation_order);
        Trainer trainer(cfg);
        const auto pre = trainer.pretrain(model, ds.contents);
        const auto checkpoint_path = dir / "checkpoint.grace";
        const CotrainResult co = trainer.cotrain(model, ds.contents, [&](int, const GraceModel& m) {
            save_checkpoint(checkpoint_path, m, cfg, &trainer.dropout_rng());
        });
        write_file(dir / "train_log.csv", detail::log_csv(pre, co.trace, cfg.lambda > 0.0));
        write_file(dir / "predictions.tsv", detail::predictions_tsv(co.labels));
        out << "trained on " << ds.nodes() << " nodes; final J1 = "
            << (co.trace.empty() ? 0.0 : co.trace.back().j1) << '\n';
        if (ds.truth) {
            const ClusterSet detected = clusters_from_labels(co.labels);
            out << "F1 = " << detail::fmt_short(f1_sets(*ds.truth, detected))
                << "\nJC = " << detail::fmt_short(jc_sets(*ds.truth, detected)) << '\n';
        }
        return int{kOk};
    });
}

/// Scores predictions against ground truth; prints and writes evaluation.csv.
/// Several pairs (one per ego-network, say) report the unweighted mean.
inline int cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& e, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
    return detail::guarded("evaluate", err, [&] {
        if (e.predictions.empty() || e.predictions.size() != e.labels.size()) {
            throw InputError("evaluate needs one labels file per predictions file");
        }
        double f1 = 0.0, jc = 0.0;
        for (std::size_t i = 0; i < e.predictions.size(); ++i) {
            const auto predicted = read_memberships(e.predictions[i]);
            const auto truth = read_memberships(e.labels[i]);
            if (predicted.empty()) throw InputError(e.predictions[i] + ": no predictions");
            if (truth.empty()) throw InputError(e.labels[i] + ": no labels");
            const ClusterSet detected = clusters_from_pairs(predicted);
            const ClusterSet ground = clusters_from_pairs(truth);
            const double f = f1_sets(ground, detected), j = jc_sets(ground, detected);
            if (e.predictions.size() > 1) {
                out << e.predictions[i] << ": F1 = " << detail::fmt_short(f) << ", JC = " << detail::fmt_short(j) << '\n';
            }
            f1 += f;
            jc += j;
        }
        f1 /= static_cast<double>(e.predictions.size());
        jc /= static_cast<double>(e.predictions.size());
        out << "F1 = " << detail::fmt_short(f1) << "\nJC = " << detail::fmt_short(jc) << '\n';
        const std::filesystem::path dir(g.out);
        std::filesystem::create_directories(dir);
        write_file(dir / "evaluation.csv", "metric,value\nF1," + detail::fmt(f1) + "\nJC," + detail::fmt(jc) + "\n");
        return int{kOk};
    });
}

/// ||R - R_B||_inf against alpha^(B+1) for B = 0..max_order; writes
/// propagate_diag.csv. With variant = power, R_B is T^B and the bound column
/// stays empty.
inline int cmd_propagate_diag(const GlobalOptions& g, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded("propagate-diag", err, [&] {
        if (g.config.empty()) throw InputError("propagate-diag requires --config");
        const KeyValueConfig kv = KeyValueConfig::load(g.config);
        const double alpha = kv.get_double("alpha", 0.9);
        const long long max_order = kv.get_int("max_order", 40);
        const PropagationVariant variant = parse_propagation_variant(kv.get_string("variant", "neumann"));
        if (variant == PropagationVariant::ExactStationary) throw ParameterError("variant must be neumann or power");
        if (max_order < 0) throw ParameterError("max_order must be >= 0");
        const EdgeList el = read_edge_list(detail::resolve(g.config, kv.require_string("edges")));
        std::size_t n = el.max_node_plus_one;
        if (kv.has("nodes")) {
            const long long declared = kv.get_int("nodes", 0);
            if (declared < 0 || static_cast<std::size_t>(declared) < n) {
                throw InputError("nodes = " + std::to_string(declared) + " is smaller than the edge ids require");
            }
            n = static_cast<std::size_t>(declared);
        } else if (kv.has("features")) {
            std::ifstream fin(detail::resolve(g.config, kv.get_string("features", "")));
            if (!fin) throw InputError("cannot open features file");
            n = std::max<std::size_t>(n, static_cast<std::size_t>(parse_features(fin, "features").contents.rows()));
        }
        detail::warn_unused(kv, g.config, err);
        const Graph graph = el.weights.empty() ? build_adjacency(el.edges, n)
                                               : build_adjacency(el.edges, n, std::span<const double>(el.weights));
        const Matrix exact = exact_stationary(graph.transition, alpha).dense();
        std::ostringstream csv;
        csv << "B,measured_inf_norm_gap,bound_alpha_pow\n";
        for (int b = 0; b <= max_order; ++b) {
            const bool power = variant == PropagationVariant::PlainPower;
            const PropagationOperator approx =
                power ? plain_power(graph.transition, b) : neumann_truncated(graph.transition, alpha, b);
            const double gap = inf_norm(exact - approx.materialize());
            csv << b << ',' << detail::fmt(gap) << ',' << (power ? "" : detail::fmt(approx.truncation_bound())) << '\n';
        }
        const std::filesystem::path dir(g.out);
        std::filesystem::create_directories(dir);
        write_file(dir / "propagate_diag.csv", csv.str());
        out << "wrote " << (max_order + 1) << " rows to " << (dir / "propagate_diag.csv").string() << '\n';
        return int{kOk};
    });
}

/// 2-D PCA of the raw contents and of the propagated embedding;
/// writes projection_contents.csv and projection_propagated.csv.
inline int cmd_project(const GlobalOptions& g, const ProjectOptions& p, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    return detail::guarded("project", err, [&] {
        if (g.config.empty()) throw InputError("project requires --config naming the dataset");
        Checkpoint cp = load_checkpoint(p.checkpoint);
        const KeyValueConfig kv = KeyValueConfig::load(g.config);
        const Dataset ds = detail::load_configured_dataset(kv, g.config);
        TrainConfig::from(kv);  // the dataset config is usually the run config; accept its training keys
        detail::warn_unused(kv, g.config, err);
        const Graph graph = ds.graph();
        cp.model.propagation = make_propagation(graph, cp.config.propagation, cp.config.alpha, cp.config.propagation_order);
        const Matrix propagated = cp.model.propagated_embedding(ds.contents);
        const auto predicted = hard_assign(soft_assign(propagated, cp.model.centers));
        const auto truth = detail::first_truth_label(ds.truth, ds.nodes());
        const std::filesystem::path dir(g.out);
        std::filesystem::create_directories(dir);
        write_file(dir / "projection_contents.csv",
                   detail::projection_csv(pca_2d(ds.contents).coordinates, predicted, truth));
        write_file(dir / "projection_propagated.csv",
                   detail::projection_csv(pca_2d(propagated).coordinates, predicted, truth));
        out << "wrote projections for " << ds.nodes() << " nodes to " << dir.string() << '\n';
        return int{kOk};
    });
}

}  // namespace grace::cli

#endif  // GRACE_CLI_HPP
