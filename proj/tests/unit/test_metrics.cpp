#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "grace/metrics.hpp"
#include "support/oracles.hpp"

using grace::Cluster;
using grace::ClusterSet;
using grace::Matrix;

namespace {

// Up to six nonempty clusters over at most twenty nodes; clusters may overlap.
ClusterSet random_clusters(std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> count(1, 6);
    std::bernoulli_distribution in(0.3);
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    ClusterSet out(count(rng));
    for (auto& c : out) {
        for (std::size_t i = 0; i < n; ++i)
            if (in(rng)) c.insert(i);
        if (c.empty()) c.insert(node(rng));
    }
    return out;
}

}  // namespace

TEST(PairScores, IdenticalAndDisjoint) {
    const Cluster a{0, 1, 2};
    EXPECT_EQ(grace::f1_pair(a, a), 1.0);
    EXPECT_EQ(grace::jc_pair(a, a), 1.0);
    EXPECT_EQ(grace::f1_pair(a, {3, 4}), 0.0);
    EXPECT_EQ(grace::jc_pair(a, {3, 4}), 0.0);
}

TEST(PairScores, HandExample) {
    EXPECT_NEAR(grace::f1_pair({0, 1, 2}, {0, 1}), 0.8, 1e-15);
    EXPECT_NEAR(grace::jc_pair({0, 1, 2}, {0, 1}), 2.0 / 3.0, 1e-15);
    // F1 and Jaccard are both symmetric.
    EXPECT_NEAR(grace::f1_pair({0, 1}, {0, 1, 2}), 0.8, 1e-15);
}

TEST(PairScores, EmptyClusterThrows) {
    EXPECT_THROW(grace::f1_pair({}, {1}), grace::InputError);
    EXPECT_THROW(grace::jc_pair({1}, {}), grace::InputError);
}

TEST(SetScores, IdenticalCollections) {
    const ClusterSet c{{0, 1}, {2, 3, 4}};
    EXPECT_EQ(grace::f1_sets(c, c), 1.0);
    EXPECT_EQ(grace::jc_sets(c, c), 1.0);
}

TEST(SetScores, SinglePairReduction) {
    const ClusterSet truth{{0, 1, 2}};
    const ClusterSet detected{{0, 1}};
    EXPECT_NEAR(grace::f1_sets(truth, detected), 0.8, 1e-15);
    EXPECT_NEAR(grace::jc_sets(truth, detected), 2.0 / 3.0, 1e-15);
}

TEST(SetScores, EmptyInputsThrow) {
    EXPECT_THROW(grace::f1_sets({}, {{0}}), grace::InputError);
    EXPECT_THROW(grace::jc_sets({{0}}, {}), grace::InputError);
    EXPECT_THROW(grace::f1_sets({{0}, {}}, {{0}}), grace::InputError);
}

TEST(SetScores, MatchBruteForceOracle) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(2, 20);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size(rng);
        const auto truth = random_clusters(n, rng);
        const auto detected = random_clusters(n, rng);
        const auto want = oracle::brute_force_metrics(truth, detected, n);
        EXPECT_NEAR(grace::f1_sets(truth, detected), want.f1, 1e-12) << "trial " << trial;
        EXPECT_NEAR(grace::jc_sets(truth, detected), want.jc, 1e-12) << "trial " << trial;
    }
}

TEST(SetScores, RangeAndRelabelingInvariance) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto truth = random_clusters(15, rng);
        auto detected = random_clusters(15, rng);
        const double f1 = grace::f1_sets(truth, detected);
        const double jc = grace::jc_sets(truth, detected);
        EXPECT_GE(f1, 0.0);
        EXPECT_LE(f1, 1.0 + 1e-15);
        EXPECT_GE(jc, 0.0);
        EXPECT_LE(jc, 1.0 + 1e-15);
        std::shuffle(detected.begin(), detected.end(), rng);
        EXPECT_NEAR(grace::f1_sets(truth, detected), f1, 1e-12);
        EXPECT_NEAR(grace::jc_sets(truth, detected), jc, 1e-12);
    }
}

TEST(SetScores, PermutedLabelsScoreTheSame) {
    const std::vector<std::size_t> truth_labels{0, 0, 0, 1, 1, 2, 2, 2};
    const std::vector<std::size_t> permuted{2, 2, 2, 0, 0, 1, 1, 1};
    const auto truth = grace::clusters_from_labels(truth_labels);
    const auto detected = grace::clusters_from_labels(permuted);
    EXPECT_EQ(grace::f1_sets(truth, detected), 1.0);
    EXPECT_EQ(grace::jc_sets(truth, detected), 1.0);
}

TEST(Grouping, LabelsAndPairs) {
    const auto from_labels = grace::clusters_from_labels({1, 0, 1, 3});
    ASSERT_EQ(from_labels.size(), 3u);
    EXPECT_EQ(from_labels[0], (Cluster{1}));
    EXPECT_EQ(from_labels[1], (Cluster{0, 2}));
    EXPECT_EQ(from_labels[2], (Cluster{3}));
    const auto from_pairs = grace::clusters_from_pairs({{0, 5}, {1, 5}, {1, -2}});
    ASSERT_EQ(from_pairs.size(), 2u);
    EXPECT_EQ(from_pairs[0], (Cluster{1}));
    EXPECT_EQ(from_pairs[1], (Cluster{0, 1}));
}

TEST(Pca, AxisAlignedDataIsCenteredInput) {
    Matrix x(4, 2);
    x << 3, 0, -3, 0, 0, 1, 0, -1;
    const auto p = grace::pca_2d(x);
    const Matrix centered = x.rowwise() - x.colwise().mean();
    for (Eigen::Index c = 0; c < 2; ++c) {
        const double s = p.coordinates.col(c).dot(centered.col(c)) >= 0 ? 1.0 : -1.0;
        EXPECT_LT((p.coordinates.col(c) - s * centered.col(c)).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_GT(p.variances(0), p.variances(1));
}

TEST(Pca, PlanarDataReconstructsExactly) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Vector3d u(1, 2, -1), v(0.5, -1, 3), o(4, -2, 7);
    Matrix x(30, 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = (o + g(rng) * u + g(rng) * v).transpose();
    const auto p = grace::pca_2d(x);
    const Matrix back = (p.coordinates * p.components.transpose()).rowwise() + p.mean.transpose();
    EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((p.components.transpose() * p.components - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, DuplicatedPointsProjectIdentically) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(8, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    x.row(5) = x.row(2);
    const auto p = grace::pca_2d(x);
    EXPECT_EQ(p.coordinates.row(5), p.coordinates.row(2));
}

TEST(Pca, SignConventionMakesLargestEntryPositive) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(20, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const auto p = grace::pca_2d(x);
    for (Eigen::Index c = 0; c < 2; ++c) {
        Eigen::Index arg = 0;
        p.components.col(c).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(p.components(arg, c), 0.0);
    }
    const auto q = grace::pca_2d(-x);
    EXPECT_LT((q.components.cwiseAbs() - p.components.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Pca, RankOneZeroFillsSecondAxis) {
    Matrix x(5, 3);
    for (Eigen::Index i = 0; i < 5; ++i) x.row(i) = static_cast<double>(i) * Eigen::RowVector3d(1, -2, 0.5);
    const auto p = grace::pca_2d(x);
    EXPECT_EQ(p.coordinates.col(1), Eigen::VectorXd::Zero(5));
    EXPECT_EQ(p.variances(1), 0.0);
    EXPECT_GT(p.variances(0), 0.0);
}

TEST(Pca, TooSmallInputThrows) {
    EXPECT_THROW(grace::pca_2d(Matrix::Zero(1, 3)), grace::InputError);
    EXPECT_THROW(grace::pca_2d(Matrix::Zero(4, 1)), grace::InputError);
}
