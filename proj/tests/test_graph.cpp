#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include <jplay/graph.hpp>

#include "test_util.hpp"

using namespace jplay;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Independent kNN relation: full distance sort per sample, boundary ties kept.
std::vector<std::vector<bool>> knn_oracle(const MatrixXd& x, int k) {
    const Eigen::Index n = x.cols();
    std::vector<std::vector<bool>> kept(n, std::vector<bool>(n, false));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> d;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) d.push_back((x.col(i) - x.col(j)).norm());
        std::sort(d.begin(), d.end());
        const double threshold = d[static_cast<size_t>(k - 1)];
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i && (x.col(i) - x.col(j)).norm() <= threshold) kept[i][j] = true;
    }
    return kept;
}

}  // namespace

TEST_CASE("knn_adjacency: identical points", "[graph]") {
    MatrixXd x(2, 2);
    x << 1.0, 1.0, 2.0, 2.0;
    const MatrixXd w = knn_adjacency(x, 1);
    REQUIRE(w(0, 0) == 0.0);
    REQUIRE(w(1, 1) == 0.0);
    REQUIRE(w(0, 1) == 1.0);
    REQUIRE(w(1, 0) == 1.0);
}

TEST_CASE("knn_adjacency: collinear points at 0, 1, 10", "[graph]") {
    MatrixXd x(1, 3);
    x << 0.0, 1.0, 10.0;
    const MatrixXd w = knn_adjacency(x, 1, /*bandwidth=*/1.0);
    REQUIRE(w(0, 1) == Catch::Approx(std::exp(-0.5)).epsilon(1e-14));
    REQUIRE(w(1, 2) == Catch::Approx(std::exp(-81.0 / 2.0)).epsilon(1e-12));
    REQUIRE(w(0, 2) == 0.0);
    REQUIRE(w(1, 0) == w(0, 1));
    REQUIRE(w(2, 1) == w(1, 2));
}

TEST_CASE("knn_adjacency: two-cluster set against exhaustive scan", "[graph]") {
    testutil::Rng rng(1234);
    MatrixXd x(4, 50);
    for (int j = 0; j < 50; ++j) {
        const double offset = j < 25 ? 0.0 : 8.0;
        for (int i = 0; i < 4; ++i) x(i, j) = offset + rng.normal(0.7);
    }
    const int k = 5;
    const MatrixXd w = knn_adjacency(x, k);
    const auto oracle = knn_oracle(x, k);
    for (Eigen::Index i = 0; i < 50; ++i)
        for (Eigen::Index j = 0; j < 50; ++j) {
            const bool edge = oracle[i][j] || oracle[j][i];
            if (edge) {
                REQUIRE(w(i, j) > 0.0);
                REQUIRE(w(i, j) <= 1.0);
            } else {
                REQUIRE(w(i, j) == 0.0);
            }
        }
}

TEST_CASE("knn_adjacency: permutation equivariance", "[graph]") {
    testutil::Rng rng(77);
    const MatrixXd x = rng.matrix(3, 12);
    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine);

    MatrixXd xp(3, 12);
    for (int j = 0; j < 12; ++j) xp.col(j) = x.col(perm[j]);

    for (double bandwidth : {kAutoBandwidth, 0.5}) {
        const MatrixXd w = knn_adjacency(x, 3, bandwidth);
        const MatrixXd wp = knn_adjacency(xp, 3, bandwidth);
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j) REQUIRE(wp(i, j) == w(perm[i], perm[j]));
    }
}

TEST_CASE("knn_adjacency: supervised variant connects only same-label pairs", "[graph]") {
    testutil::Rng rng(5);
    const MatrixXd x = rng.matrix(2, 10);
    std::vector<int> labels{1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
    const MatrixXd w = knn_adjacency(x, 2, kAutoBandwidth, &labels);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            if (labels[i] != labels[j]) REQUIRE(w(i, j) == 0.0);
    REQUIRE(w.sum() > 0.0);
}

TEST_CASE("knn_adjacency: parameter and input errors", "[graph]") {
    MatrixXd x(2, 3);
    x << 0, 1, 2, 0, 1, 2;
    REQUIRE_THROWS_AS(knn_adjacency(x, 0), ParameterError);
    REQUIRE_THROWS_AS(knn_adjacency(x, 3), ParameterError);
    REQUIRE_THROWS_AS(knn_adjacency(x, 1, -1.0), ParameterError);
    MatrixXd bad = x;
    bad(0, 0) = std::nan("");
    REQUIRE_THROWS_AS(knn_adjacency(bad, 1), InputError);
    std::vector<int> short_labels{1, 2};
    REQUIRE_THROWS_AS(knn_adjacency(x, 1, kAutoBandwidth, &short_labels), ShapeError);
}

TEST_CASE("laplacian: 2-node graph", "[graph]") {
    MatrixXd w(2, 2);
    w << 0, 1, 1, 0;
    const GraphLaplacian g = laplacian(w);
    REQUIRE(g.degrees(0) == 1.0);
    REQUIRE(g.degrees(1) == 1.0);
    REQUIRE(g.laplacian(0, 0) == 1.0);
    REQUIRE(g.laplacian(0, 1) == -1.0);
    REQUIRE(g.laplacian(1, 0) == -1.0);
    REQUIRE(g.laplacian(1, 1) == 1.0);
}

TEST_CASE("laplacian: empty graph", "[graph]") {
    const GraphLaplacian g = laplacian(MatrixXd::Zero(3, 3));
    REQUIRE(g.laplacian.isZero(0.0));
    REQUIRE(g.degrees.isZero(0.0));
}

TEST_CASE("laplacian: quadratic-form identity", "[graph]") {
    testutil::Rng rng(99);
    MatrixXd w = MatrixXd::Zero(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < i; ++j) {
            const double v = rng.unif(rng.engine);
            w(i, j) = v;
            w(j, i) = v;
        }
    const GraphLaplacian g = laplacian(w);
    for (int trial = 0; trial < 100; ++trial) {
        const VectorXd v = rng.vector(6);
        double by_edges = 0.0;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                by_edges += w(i, j) * (v(i) - v(j)) * (v(i) - v(j));
        by_edges *= 0.5;
        const double quad = v.dot(g.laplacian * v);
        REQUIRE(std::abs(quad - by_edges) <= 1e-10);
    }
}

TEST_CASE("laplacian: row sums vanish and quadratic form is nonnegative", "[graph]") {
    testutil::Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = rng.integer(3, 20);
        const MatrixXd x = rng.matrix(rng.integer(1, 5), n);
        const GraphLaplacian g = build_graph(x, rng.integer(1, n - 1));
        for (int i = 0; i < n; ++i) REQUIRE(std::abs(g.laplacian.row(i).sum()) <= 1e-10);
        for (int probe = 0; probe < 10; ++probe) {
            const VectorXd v = rng.vector(n);
            REQUIRE(v.dot(g.laplacian * v) >= -1e-10 * v.squaredNorm());
        }
    }
}

TEST_CASE("laplacian: rejects malformed adjacency", "[graph]") {
    MatrixXd asym(2, 2);
    asym << 0, 1, 0.5, 0;
    REQUIRE_THROWS_AS(laplacian(asym), InputError);
    MatrixXd neg(2, 2);
    neg << 0, -1, -1, 0;
    REQUIRE_THROWS_AS(laplacian(neg), InputError);
    MatrixXd diag(2, 2);
    diag << 1, 0.5, 0.5, 0;
    REQUIRE_THROWS_AS(laplacian(diag), InputError);
    REQUIRE_THROWS_AS(laplacian(MatrixXd::Zero(2, 3)), ShapeError);
}
