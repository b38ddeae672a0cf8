#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <jplay/errors.hpp>
#include <jplay/types.hpp>

namespace jplay {

/// Pass as `bandwidth` to derive the heat-kernel width from the data
/// (mean Euclidean length of the kept edges).
constexpr double kAutoBandwidth = 0.0;

/// Similarity graph over the N samples: symmetric nonnegative adjacency W
/// with zero diagonal, degrees D_ii = sum_j W_ij, and laplacian = D - W.
struct GraphLaplacian {
    Eigen::MatrixXd adjacency;
    Eigen::VectorXd degrees;
    Eigen::MatrixXd laplacian;

    Eigen::Index size() const { return adjacency.rows(); }
    Eigen::MatrixXd degree_matrix() const { return degrees.asDiagonal(); }
};

/// Builds the kNN heat-kernel adjacency over the columns of X.
///
/// An edge (i, j) is kept when j is among the k nearest neighbors of i or
/// vice versa (OR symmetrization); distance ties at the kNN boundary keep
/// every tied neighbor, so the result does not depend on sample order.
/// Kept edges get weight exp(-|x_i - x_j|^2 / (2 sigma^2)).
///
/// When `same_label_of` is given, neighbor candidates are restricted to
/// samples with the same label (supervised graph variant).
inline Eigen::MatrixXd knn_adjacency(const DataMatrix& x, int k,
                                     double bandwidth = kAutoBandwidth,
                                     const std::vector<int>* same_label_of = nullptr) {
    const Eigen::Index n = x.cols();
    if (n < 2) throw ParameterError("knn_adjacency: need at least 2 samples");
    if (k <= 0 || k >= n)
        throw ParameterError("knn_adjacency: k must satisfy 0 < k < N, got k=" +
                             std::to_string(k) + " with N=" + std::to_string(n));
    if (bandwidth < 0.0)
        throw ParameterError("knn_adjacency: bandwidth must be positive (or 0 for auto)");
    if (!x.allFinite()) throw InputError("knn_adjacency: data contains non-finite entries");
    if (same_label_of && static_cast<Eigen::Index>(same_label_of->size()) != n)
        throw ShapeError("knn_adjacency: label list size does not match sample count");

    Eigen::MatrixXd dist2 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d2 = (x.col(i) - x.col(j)).squaredNorm();
            dist2(i, j) = d2;
            dist2(j, i) = d2;
        }

    // Directed kNN relation; boundary ties are all kept.
    std::vector<unsigned char> keep(static_cast<size_t>(n) * n, 0);
    std::vector<double> cand;
    for (Eigen::Index i = 0; i < n; ++i) {
        cand.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (same_label_of && (*same_label_of)[i] != (*same_label_of)[j]) continue;
            cand.push_back(dist2(i, j));
        }
        if (cand.empty()) continue;  // isolated sample (supervised singleton class)
        const size_t kk = std::min<size_t>(static_cast<size_t>(k), cand.size());
        std::nth_element(cand.begin(), cand.begin() + (kk - 1), cand.end());
        const double threshold = cand[kk - 1];
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (same_label_of && (*same_label_of)[i] != (*same_label_of)[j]) continue;
            if (dist2(i, j) <= threshold) keep[static_cast<size_t>(i) * n + j] = 1;
        }
    }

    const auto kept = [&](Eigen::Index i, Eigen::Index j) {
        return keep[static_cast<size_t>(i) * n + j] || keep[static_cast<size_t>(j) * n + i];
    };

    double sigma = bandwidth;
    if (sigma == kAutoBandwidth) {
        // Summed in sorted order so the result is independent of sample order.
        std::vector<double> lengths;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                if (kept(i, j)) lengths.push_back(std::sqrt(dist2(i, j)));
        std::sort(lengths.begin(), lengths.end());
        double sum = 0.0;
        for (double len : lengths) sum += len;
        sigma = lengths.empty() ? 0.0 : sum / static_cast<double>(lengths.size());
    }

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            if (!kept(i, j)) continue;
            const double d2 = dist2(i, j);
            // d2 == 0 covers the sigma == 0 case (all kept edges degenerate).
            const double weight = d2 == 0.0 ? 1.0 : std::exp(-d2 / (2.0 * sigma * sigma));
            w(i, j) = weight;
            w(j, i) = weight;
        }
    return w;
}

/// Degree and Laplacian matrices of a symmetric nonnegative adjacency.
inline GraphLaplacian laplacian(const Eigen::MatrixXd& w) {
    const Eigen::Index n = w.rows();
    if (w.cols() != n) throw ShapeError("laplacian: adjacency must be square");
    if (!w.allFinite()) throw InputError("laplacian: adjacency contains non-finite entries");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i, i) != 0.0) throw InputError("laplacian: adjacency diagonal must be zero");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (w(i, j) != w(j, i)) throw InputError("laplacian: adjacency must be symmetric");
            if (w(i, j) < 0.0) throw InputError("laplacian: adjacency must be nonnegative");
        }
    }
    GraphLaplacian g;
    g.adjacency = w;
    g.degrees = w.rowwise().sum();
    g.laplacian = -w;
    g.laplacian.diagonal() = g.degrees;
    return g;
}

inline GraphLaplacian build_graph(const DataMatrix& x, int k,
                                  double bandwidth = kAutoBandwidth,
                                  const std::vector<int>* same_label_of = nullptr) {
    return laplacian(knn_adjacency(x, k, bandwidth, same_label_of));
}

}  // namespace jplay
