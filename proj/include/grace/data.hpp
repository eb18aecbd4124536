#ifndef GRACE_DATA_HPP
#define GRACE_DATA_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "grace/config.hpp"
#include "grace/error.hpp"
#include "grace/graph.hpp"
#include "grace/metrics.hpp"
#include "grace/random.hpp"

namespace grace {

struct Dataset {
    std::string name;
    Matrix contents;  // A, n x kappa
    ContentKind kind = ContentKind::Binary;
    std::vector<Edge> edges;
    std::vector<double> edge_weights;  // empty for unweighted graphs
    std::optional<ClusterSet> truth;

    std::size_t nodes() const { return static_cast<std::size_t>(contents.rows()); }
    Eigen::Index features() const { return contents.cols(); }
    Graph graph() const {
        if (edge_weights.empty()) return build_adjacency(edges, nodes());
        return build_adjacency(edges, nodes(), std::span<const double>(edge_weights));
    }
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::string trim_copy(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

class LineError {
public:
    LineError(std::string source, std::size_t line) : source_(std::move(source)), line_(line) {}
    InputError operator()(const std::string& why) const {
        return InputError(source_ + ":" + std::to_string(line_) + ": " + why);
    }

private:
    std::string source_;
    std::size_t line_;
};

inline double parse_real(const std::string& raw, const LineError& err) {
    const std::string s = trim_copy(raw);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (s.empty() || pos != s.size() || !std::isfinite(v)) throw err("bad number '" + raw + "'");
    return v;
}

inline std::size_t parse_index(const std::string& raw, const LineError& err) {
    const std::string s = trim_copy(raw);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw err("bad index '" + raw + "'");
    return v;
}

inline long long parse_label(const std::string& raw, const LineError& err) {
    const std::string s = trim_copy(raw);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw err("bad cluster id '" + raw + "'");
    return v;
}

/// Integers print without a fraction; everything else round-trips at 17 digits.
inline std::string format_value(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

struct FeatureTable {
    Matrix contents;
    bool sparse = false;
};

/// Features as a dense CSV (one row per node) or as sparse
/// "node<TAB>feature<TAB>value" triplets. Triplet files may carry a
/// "# nodes=N features=K" header; otherwise the shape is the largest ids + 1
/// (or `num_features` columns when given).
inline FeatureTable parse_features(std::istream& in, const std::string& source, Eigen::Index num_features = 0) {
    std::vector<std::string> lines;
    std::vector<std::size_t> numbers;
    std::size_t header_nodes = 0, header_features = 0;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            unsigned long long hn = 0, hf = 0;
            if (std::sscanf(line.c_str(), "# nodes=%llu features=%llu", &hn, &hf) == 2) {
                header_nodes = hn;
                header_features = hf;
            }
            continue;
        }
        lines.push_back(line);
        numbers.push_back(lineno);
    }
    FeatureTable table;
    table.sparse = !lines.empty() ? lines.front().find('\t') != std::string::npos : header_nodes > 0;
    if (!table.sparse) {
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < lines.size(); ++r) {
            const detail::LineError err(source, numbers[r]);
            std::vector<double> row;
            for (const auto& f : detail::split(lines[r], ',')) row.push_back(detail::parse_real(f, err));
            if (!rows.empty() && row.size() != rows.front().size()) {
                throw err("expected " + std::to_string(rows.front().size()) + " columns, found " +
                          std::to_string(row.size()));
            }
            rows.push_back(std::move(row));
        }
        const Eigen::Index cols = rows.empty() ? num_features : static_cast<Eigen::Index>(rows.front().size());
        if (num_features > 0 && cols != num_features) {
            throw InputError(source + ": " + std::to_string(cols) + " feature columns, expected " +
                             std::to_string(num_features));
        }
        table.contents.resize(static_cast<Eigen::Index>(rows.size()), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                table.contents(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
            }
        }
        return table;
    }

    struct Triplet {
        std::size_t node, feature;
        double value;
    };
    std::vector<Triplet> triplets;
    std::size_t n = header_nodes, k = header_features;
    if (num_features > 0) {
        if (header_features != 0 && static_cast<Eigen::Index>(header_features) != num_features) {
            throw InputError(source + ": header declares " + std::to_string(header_features) +
                             " features, expected " + std::to_string(num_features));
        }
        k = static_cast<std::size_t>(num_features);
    }
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const detail::LineError err(source, numbers[r]);
        const auto f = detail::split(lines[r], '\t');
        if (f.size() != 3) throw err("expected node<TAB>feature<TAB>value");
        Triplet t{detail::parse_index(f[0], err), detail::parse_index(f[1], err), detail::parse_real(f[2], err)};
        if (header_nodes > 0 && t.node >= header_nodes) throw err("node id outside the declared node count");
        if ((header_features > 0 || num_features > 0) && t.feature >= k) {
            throw err("feature id " + std::to_string(t.feature) + " outside [0," + std::to_string(k) + ")");
        }
        if (header_nodes == 0) n = std::max(n, t.node + 1);
        if (header_features == 0 && num_features == 0) k = std::max(k, t.feature + 1);
        triplets.push_back(t);
    }
    table.contents = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (const auto& t : triplets) {
        table.contents(static_cast<Eigen::Index>(t.node), static_cast<Eigen::Index>(t.feature)) = t.value;
    }
    return table;
}

/// "node<TAB>cluster" membership lines; a node may belong to several clusters.
inline std::vector<std::pair<NodeId, long long>> parse_memberships(std::istream& in, const std::string& source) {
    std::vector<std::pair<NodeId, long long>> out;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const detail::LineError err(source, lineno);
        const auto f = detail::split(line, '\t');
        if (f.size() != 2) throw err("expected node<TAB>cluster");
        out.emplace_back(detail::parse_index(f[0], err), detail::parse_label(f[1], err));
    }
    return out;
}

inline std::vector<std::pair<NodeId, long long>> read_memberships(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open membership file '" + path + "'");
    return parse_memberships(in, path);
}

/// Loads contents, links and optional ground truth. The node count comes from
/// the contents file (extended by edge ids for triplet features, whose
/// featureless nodes have no lines); labels must stay within it.
inline Dataset load_dataset(const std::string& feature_path, const std::string& edge_path,
                            const std::optional<std::string>& label_path, ContentKind kind,
                            Eigen::Index num_features = 0) {
    std::ifstream fin(feature_path);
    if (!fin) throw InputError("cannot open feature file '" + feature_path + "'");
    FeatureTable table = parse_features(fin, feature_path, num_features);
    EdgeList el;
    if (!edge_path.empty()) el = read_edge_list(edge_path);

    Dataset ds;
    ds.name = std::filesystem::path(feature_path).parent_path().filename().string();
    ds.kind = kind;
    const auto n_feat = static_cast<std::size_t>(table.contents.rows());
    std::size_t n = n_feat;
    if (table.sparse) {
        n = std::max(n, el.max_node_plus_one);
    } else if (el.max_node_plus_one > n) {
        throw InputError(edge_path + ": node id " + std::to_string(el.max_node_plus_one - 1) +
                         " outside the " + std::to_string(n) + " nodes of '" + feature_path + "'");
    }
    ds.contents = Matrix::Zero(static_cast<Eigen::Index>(n), table.contents.cols());
    ds.contents.topRows(static_cast<Eigen::Index>(n_feat)) = table.contents;
    if (kind == ContentKind::Binary) {
        for (Eigen::Index i = 0; i < ds.contents.rows(); ++i) {
            for (Eigen::Index j = 0; j < ds.contents.cols(); ++j) {
                const double v = ds.contents(i, j);
                if (v != 0.0 && v != 1.0) {
                    throw InputError(feature_path + ": binary contents hold " + detail::format_value(v) +
                                     " at node " + std::to_string(i) + ", feature " + std::to_string(j));
                }
            }
        }
    }
    ds.edges = std::move(el.edges);
    ds.edge_weights = std::move(el.weights);

    if (label_path && !label_path->empty()) {
        const auto pairs = read_memberships(*label_path);
        for (const auto& [node, cluster] : pairs) {
            if (node >= n) {
                throw InputError(*label_path + ": node " + std::to_string(node) + " outside the " +
                                 std::to_string(n) + " nodes defined by the contents");
            }
        }
        if (!pairs.empty()) ds.truth = clusters_from_pairs(pairs);
    }
    return ds;
}

inline void write_features(std::ostream& out, const Matrix& a) {
    out << "# nodes=" << a.rows() << " features=" << a.cols() << "\n";
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (a(i, j) != 0.0) out << i << '\t' << j << '\t' << detail::format_value(a(i, j)) << '\n';
        }
    }
}

inline void write_edges(std::ostream& out, const std::vector<Edge>& edges, const std::vector<double>& weights = {}) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
        out << edges[e].first << '\t' << edges[e].second;
        if (!weights.empty()) out << '\t' << detail::format_value(weights[e]);
        out << '\n';
    }
}

/// One "node<TAB>cluster" line per membership, cluster ids by collection order.
inline void write_memberships(std::ostream& out, const ClusterSet& clusters) {
    std::vector<std::pair<NodeId, std::size_t>> rows;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (NodeId node : clusters[c]) rows.emplace_back(node, c);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [node, c] : rows) out << node << '\t' << c << '\n';
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw InputError("failed writing '" + path.string() + "'");
}

/// Writes features.tsv, edges.tsv and (with ground truth) labels.tsv into `dir`.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ostringstream f, e, l;
    write_features(f, ds.contents);
    write_edges(e, ds.edges, ds.edge_weights);
    write_file(dir / "features.tsv", f.str());
    write_file(dir / "edges.tsv", e.str());
    if (ds.truth) {
        write_memberships(l, *ds.truth);
        write_file(dir / "labels.tsv", l.str());
    }
}

/// Attributed stochastic block model. Defaults are the standard recovery fixture.
struct SbmParams {
    int blocks = 3;
    int nodes_per_block = 100;
    double p_in = 0.15;
    double p_out = 0.01;
    int sig_per_block = 5;
    int noise_attrs = 50;
    double p_sig_on = 0.8;
    double p_noise_on = 0.1;
    double p_flip = 0.05;
    std::uint64_t seed = 7;

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(std::string("sbm: ") + name + " must lie in [0,1]");
        };
        prob(p_in, "p_in");
        prob(p_out, "p_out");
        prob(p_sig_on, "p_sig_on");
        prob(p_noise_on, "p_noise_on");
        prob(p_flip, "p_flip");
        if (blocks < 1 || nodes_per_block < 1 || sig_per_block < 1 || noise_attrs < 1) {
            throw ParameterError("sbm: blocks, nodes_per_block, sig_per_block and noise_attrs must be >= 1");
        }
    }

    int nodes() const { return blocks * nodes_per_block; }
    int features() const { return blocks * sig_per_block + noise_attrs; }

    static SbmParams from(const KeyValueConfig& kv) {
        SbmParams p;
        p.blocks = static_cast<int>(kv.get_int("blocks", p.blocks));
        p.nodes_per_block = static_cast<int>(kv.get_int("nodes_per_block", p.nodes_per_block));
        p.p_in = kv.get_double("p_in", p.p_in);
        p.p_out = kv.get_double("p_out", p.p_out);
        p.sig_per_block = static_cast<int>(kv.get_int("sig_per_block", p.sig_per_block));
        p.noise_attrs = static_cast<int>(kv.get_int("noise_attrs", p.noise_attrs));
        p.p_sig_on = kv.get_double("p_sig_on", p.p_sig_on);
        p.p_noise_on = kv.get_double("p_noise_on", p.p_noise_on);
        p.p_flip = kv.get_double("p_flip", p.p_flip);
        const long long seed = kv.get_int("seed", static_cast<long long>(p.seed));
        if (seed < 0) throw ParameterError("sbm: seed must be >= 0");
        p.seed = static_cast<std::uint64_t>(seed);
        return p;
    }

    std::string echo() const {
        std::ostringstream os;
        os.precision(17);
        os << "blocks = " << blocks << "\nnodes_per_block = " << nodes_per_block << "\np_in = " << p_in
           << "\np_out = " << p_out << "\nsig_per_block = " << sig_per_block << "\nnoise_attrs = " << noise_attrs
           << "\np_sig_on = " << p_sig_on << "\np_noise_on = " << p_noise_on << "\np_flip = " << p_flip
           << "\nseed = " << seed << "\n";
        return os.str();
    }
};

/// Block b holds nodes [b*size, (b+1)*size). Pairs link with p_in inside a
/// block and p_out across. Block k's signature attributes fire with p_sig_on
/// on its members and p_flip elsewhere; noise attributes fire with p_noise_on
/// everywhere.
inline Dataset generate_sbm(const SbmParams& params) {
    params.validate();
    Rng rng = named_stream(params.seed, "sbm");
    const int n = params.nodes();
    const int kappa = params.features();
    auto block_of = [&](int i) { return i / params.nodes_per_block; };

    Dataset ds;
    ds.name = "sbm";
    ds.kind = ContentKind::Binary;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double p = block_of(i) == block_of(j) ? params.p_in : params.p_out;
            if (bernoulli(rng, p)) ds.edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
    }
    ds.contents = Matrix::Zero(n, kappa);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < params.blocks; ++k) {
            const double p = k == block_of(i) ? params.p_sig_on : params.p_flip;
            for (int s = 0; s < params.sig_per_block; ++s) {
                if (bernoulli(rng, p)) ds.contents(i, k * params.sig_per_block + s) = 1.0;
            }
        }
        for (int s = 0; s < params.noise_attrs; ++s) {
            if (bernoulli(rng, params.p_noise_on)) ds.contents(i, params.blocks * params.sig_per_block + s) = 1.0;
        }
    }
    ClusterSet truth(static_cast<std::size_t>(params.blocks));
    for (int i = 0; i < n; ++i) truth[static_cast<std::size_t>(block_of(i))].insert(static_cast<NodeId>(i));
    ds.truth = std::move(truth);
    return ds;
}

}  // namespace grace

#endif  // GRACE_DATA_HPP
