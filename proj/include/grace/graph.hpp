#ifndef GRACE_GRAPH_HPP
#define GRACE_GRAPH_HPP

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grace/error.hpp"

namespace grace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Square or rectangular matrix in compressed row form. Column indices are
/// sorted within each row, so products sum in a fixed order.
class CsrMatrix {
public:
    CsrMatrix() = default;

    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
              std::vector<std::size_t> col_idx, std::vector<double> values)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
          values_(std::move(values)) {
        if (row_ptr_.size() != rows_ + 1 || col_idx_.size() != values_.size() ||
            row_ptr_.back() != values_.size()) {
            throw InputError("CsrMatrix: inconsistent compressed-row arrays");
        }
    }

    static CsrMatrix identity(std::size_t n) {
        std::vector<std::size_t> ptr(n + 1), idx(n);
        for (std::size_t i = 0; i <= n; ++i) ptr[i] = i;
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        return CsrMatrix(n, n, std::move(ptr), std::move(idx), std::vector<double>(n, 1.0));
    }

    static CsrMatrix zero(std::size_t rows, std::size_t cols) {
        return CsrMatrix(rows, cols, std::vector<std::size_t>(rows + 1, 0), {}, {});
    }

    /// Keeps entries with |value| > 0.
    static CsrMatrix from_dense(const Matrix& m) {
        std::vector<std::size_t> ptr{0}, idx;
        std::vector<double> val;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (m(i, j) != 0.0) {
                    idx.push_back(static_cast<std::size_t>(j));
                    val.push_back(m(i, j));
                }
            }
            ptr.push_back(idx.size());
        }
        return CsrMatrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                         std::move(ptr), std::move(idx), std::move(val));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nonzeros() const { return values_.size(); }

    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::size_t> col_idx() const { return col_idx_; }
    std::span<const double> values() const { return values_; }

    double at(std::size_t i, std::size_t j) const {
        auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        auto it = std::lower_bound(first, last, j);
        return (it != last && *it == j) ? values_[static_cast<std::size_t>(it - col_idx_.begin())] : 0.0;
    }

    double row_sum(std::size_t i) const {
        double s = 0.0;
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p];
        return s;
    }

    CsrMatrix transpose() const {
        std::vector<std::size_t> ptr(cols_ + 1, 0);
        for (std::size_t c : col_idx_) ++ptr[c + 1];
        for (std::size_t c = 0; c < cols_; ++c) ptr[c + 1] += ptr[c];
        std::vector<std::size_t> idx(values_.size());
        std::vector<double> val(values_.size());
        std::vector<std::size_t> cursor(ptr.begin(), ptr.end() - 1);
        // Row-major sweep keeps the transposed column indices sorted.
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
                const std::size_t dst = cursor[col_idx_[p]]++;
                idx[dst] = i;
                val[dst] = values_[p];
            }
        }
        return CsrMatrix(cols_, rows_, std::move(ptr), std::move(idx), std::move(val));
    }

    Matrix to_dense() const {
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_idx_[p])) = values_[p];
            }
        }
        return m;
    }

    bool operator==(const CsrMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Sparse-dense product M * X, accumulated row by row in column-index order.
inline Matrix spmm(const CsrMatrix& m, const Matrix& x) {
    detail::require_shape(static_cast<Eigen::Index>(m.cols()) == x.rows(), "spmm",
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " * " +
                              std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(m.rows()), x.cols());
    const auto ptr = m.row_ptr();
    const auto idx = m.col_idx();
    const auto val = m.values();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = out.row(static_cast<Eigen::Index>(i));
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) {
            row.noalias() += val[p] * x.row(static_cast<Eigen::Index>(idx[p]));
        }
    }
    return out;
}

/// Undirected attributed-graph structure with mandatory unit self-loops.
/// Immutable once built.
struct Graph {
    std::size_t n = 0;
    std::vector<Edge> edges;   // as given (before symmetrization)
    CsrMatrix adjacency;       // W
    Vector degree;             // diagonal of D
    CsrMatrix transition;      // T = D^-1 W
};

/// Builds W, D and T from an edge list. Reciprocal and duplicate edges collapse
/// to the maximum weight; the diagonal is fixed at 1.
inline Graph build_adjacency(std::span<const Edge> edges, std::size_t n,
                             std::optional<std::span<const double>> weights = std::nullopt) {
    if (weights && weights->size() != edges.size()) {
        throw InputError("build_adjacency: " + std::to_string(weights->size()) + " weights for " +
                         std::to_string(edges.size()) + " edges");
    }
    std::vector<std::map<std::size_t, double>> rows(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [u, v] = edges[e];
        if (u >= n || v >= n) {
            throw InputError("build_adjacency: edge (" + std::to_string(u) + "," + std::to_string(v) +
                             ") outside [0," + std::to_string(n) + ")");
        }
        const double w = weights ? (*weights)[e] : 1.0;
        if (!(w >= 0.0)) {
            throw InputError("build_adjacency: negative or NaN weight on edge " + std::to_string(e));
        }
        if (u == v) continue;
        auto upd = [w](double& slot) { slot = std::max(slot, w); };
        upd(rows[u][v]);
        upd(rows[v][u]);
    }
    for (std::size_t i = 0; i < n; ++i) rows[i][i] = 1.0;

    std::vector<std::size_t> ptr{0}, idx;
    std::vector<double> val;
    for (const auto& row : rows) {
        for (const auto& [j, w] : row) {
            if (w == 0.0) continue;
            idx.push_back(j);
            val.push_back(w);
        }
        ptr.push_back(idx.size());
    }

    Graph g;
    g.n = n;
    g.edges.assign(edges.begin(), edges.end());
    g.degree = Vector(static_cast<Eigen::Index>(n));
    std::vector<double> tval(val.size());
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) d += val[p];
        g.degree(static_cast<Eigen::Index>(i)) = d;
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) tval[p] = val[p] / d;
    }
    g.transition = CsrMatrix(n, n, ptr, idx, std::move(tval));
    g.adjacency = CsrMatrix(n, n, std::move(ptr), std::move(idx), std::move(val));
    return g;
}

struct EdgeList {
    std::vector<Edge> edges;
    std::vector<double> weights;  // empty unless every line carried a weight
    std::size_t max_node_plus_one = 0;
};

/// Tab-separated "u<TAB>v[<TAB>w]" lines; '#' lines and blank lines ignored.
inline EdgeList parse_edge_list(std::istream& in, const std::string& source = "<edges>") {
    EdgeList out;
    std::string line;
    std::size_t lineno = 0;
    std::size_t weighted = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
        auto fail = [&](const std::string& why) {
            return InputError(source + ":" + std::to_string(lineno) + ": " + why);
        };
        if (fields.size() != 2 && fields.size() != 3) throw fail("expected 2 or 3 tab-separated fields");
        auto parse_id = [&](const std::string& s) {
            std::size_t pos = 0;
            unsigned long long v = 0;
            try {
                if (s.empty() || s[0] == '-') throw std::invalid_argument("neg");
                v = std::stoull(s, &pos);
            } catch (const std::exception&) {
                throw fail("bad node id '" + s + "'");
            }
            if (pos != s.size()) throw fail("bad node id '" + s + "'");
            return static_cast<NodeId>(v);
        };
        const NodeId u = parse_id(fields[0]);
        const NodeId v = parse_id(fields[1]);
        out.edges.emplace_back(u, v);
        out.max_node_plus_one = std::max({out.max_node_plus_one, u + 1, v + 1});
        if (fields.size() == 3) {
            std::size_t pos = 0;
            double w = 0.0;
            try {
                w = std::stod(fields[2], &pos);
            } catch (const std::exception&) {
                throw fail("bad weight '" + fields[2] + "'");
            }
            if (pos != fields[2].size()) throw fail("bad weight '" + fields[2] + "'");
            if (w < 0.0) throw fail("negative weight");
            out.weights.push_back(w);
            ++weighted;
        } else {
            out.weights.push_back(1.0);
        }
    }
    if (weighted == 0) out.weights.clear();
    return out;
}

inline EdgeList read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open edge list '" + path + "'");
    return parse_edge_list(in, path);
}

}  // namespace grace

#endif  // GRACE_GRAPH_HPP
