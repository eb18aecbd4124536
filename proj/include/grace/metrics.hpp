#ifndef GRACE_METRICS_HPP
#define GRACE_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "grace/error.hpp"
#include "grace/graph.hpp"

namespace grace {

using Cluster = std::set<NodeId>;
using ClusterSet = std::vector<Cluster>;

namespace detail {

inline std::size_t intersection_size(const Cluster& a, const Cluster& b) {
    std::size_t count = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

inline void require_nonempty(const Cluster& c, const char* where) {
    if (c.empty()) throw InputError(std::string(where) + ": empty cluster");
}

inline void require_nonempty(const ClusterSet& c, const char* where) {
    if (c.empty()) throw InputError(std::string(where) + ": empty cluster collection");
    for (const auto& s : c) require_nonempty(s, where);
}

}  // namespace detail

/// F1 of a ground-truth cluster `truth` and a detected cluster `detected`:
/// precision is measured against the detected cluster, recall against the truth.
inline double f1_pair(const Cluster& truth, const Cluster& detected) {
    detail::require_nonempty(truth, "f1_pair");
    detail::require_nonempty(detected, "f1_pair");
    const double common = static_cast<double>(detail::intersection_size(truth, detected));
    const double prec = common / static_cast<double>(detected.size());
    const double rec = common / static_cast<double>(truth.size());
    return prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
}

inline double jc_pair(const Cluster& truth, const Cluster& detected) {
    detail::require_nonempty(truth, "jc_pair");
    detail::require_nonempty(detected, "jc_pair");
    const std::size_t common = detail::intersection_size(truth, detected);
    return static_cast<double>(common) / static_cast<double>(truth.size() + detected.size() - common);
}

/// Size-weighted best-match F1 over detected clusters.
inline double f1_sets(const ClusterSet& truth, const ClusterSet& detected) {
    detail::require_nonempty(truth, "f1_sets");
    detail::require_nonempty(detected, "f1_sets");
    double total_size = 0.0;
    for (const auto& d : detected) total_size += static_cast<double>(d.size());
    double score = 0.0;
    for (const auto& d : detected) {
        double best = 0.0;
        for (const auto& c : truth) best = std::max(best, f1_pair(c, d));
        score += static_cast<double>(d.size()) / total_size * best;
    }
    return score;
}

/// Best-match Jaccard averaged in both directions, each direction weighted 1/2.
inline double jc_sets(const ClusterSet& truth, const ClusterSet& detected) {
    detail::require_nonempty(truth, "jc_sets");
    detail::require_nonempty(detected, "jc_sets");
    double forward = 0.0;
    for (const auto& c : truth) {
        double best = 0.0;
        for (const auto& d : detected) best = std::max(best, jc_pair(c, d));
        forward += best;
    }
    double backward = 0.0;
    for (const auto& d : detected) {
        double best = 0.0;
        for (const auto& c : truth) best = std::max(best, jc_pair(c, d));
        backward += best;
    }
    return forward / (2.0 * static_cast<double>(truth.size())) +
           backward / (2.0 * static_cast<double>(detected.size()));
}

/// Groups node ids by label; empty groups never appear. Ordered by label.
inline ClusterSet clusters_from_labels(const std::vector<std::size_t>& labels) {
    std::map<std::size_t, Cluster> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(i);
    ClusterSet out;
    for (auto& [label, members] : groups) out.push_back(std::move(members));
    return out;
}

/// (node, cluster) membership pairs; a node may appear in several clusters.
inline ClusterSet clusters_from_pairs(const std::vector<std::pair<NodeId, long long>>& pairs) {
    std::map<long long, Cluster> groups;
    for (const auto& [node, cluster] : pairs) groups[cluster].insert(node);
    ClusterSet out;
    for (auto& [label, members] : groups) out.push_back(std::move(members));
    return out;
}

struct Projection {
    Matrix coordinates;  // n x 2
    Matrix components;   // d x 2, orthonormal columns
    Vector mean;         // length d
    Vector variances;    // top-2 covariance eigenvalues, descending
};

/// Projects mean-centered rows onto the two leading covariance eigenvectors.
/// Each direction's sign makes its largest-magnitude entry positive. With
/// fewer than two non-degenerate directions, the missing axis is zero-filled.
inline Projection pca_2d(const Matrix& x) {
    if (x.rows() < 2 || x.cols() < 2) throw InputError("pca_2d: need at least 2 points and 2 dimensions");
    Projection out;
    out.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - out.mean.transpose();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericalError("pca_2d: eigen-decomposition failed");
    const Eigen::Index d = x.cols();
    out.components = Matrix::Zero(d, 2);
    out.variances = Vector::Zero(2);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    for (Eigen::Index c = 0; c < 2; ++c) {
        const double lambda = eig.eigenvalues()(d - 1 - c);
        if (lambda <= 1e-12 * scale) {
            std::cerr << "warning: pca_2d: data has rank < " << (c + 1) << "; axis " << (c + 1) << " zero-filled\n";
            continue;
        }
        Vector v = eig.eigenvectors().col(d - 1 - c);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.components.col(c) = v;
        out.variances(c) = lambda;
    }
    out.coordinates = centered * out.components;
    return out;
}

}  // namespace grace

#endif  // GRACE_METRICS_HPP
