#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <jplay/errors.hpp>
#include <jplay/graph.hpp>
#include <jplay/types.hpp>

namespace jplay {

/// Pass as `ridge` to use 1e-6 * trace(X D X^T) / d_in.
constexpr double kAutoRidge = -1.0;

/// Linear map into a learned subspace. Rows of `matrix` are the learned
/// directions; `values` carries the generalized eigenvalues (ascending, for
/// the graph embedding) or the per-direction variances (descending, for PCA).
struct Projection {
    Eigen::MatrixXd matrix;  // d_out x d_in
    Eigen::VectorXd values;

    Eigen::Index d_in() const { return matrix.cols(); }
    Eigen::Index d_out() const { return matrix.rows(); }
};

namespace detail {

// Deterministic sign convention: first entry of largest magnitude in each
// row is made positive.
inline void normalize_row_signs(Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double a = std::abs(m(r, c));
            if (a > best_abs) {
                best_abs = a;
                best = c;
            }
        }
        if (m(r, best) < 0.0) m.row(r) = -m.row(r);
    }
}

}  // namespace detail

inline double default_lpp_ridge(const DataMatrix& x, const GraphLaplacian& g) {
    // trace(X D X^T) = sum_i D_ii |x_i|^2
    const double trace =
        (x.colwise().squaredNorm().transpose().array() * g.degrees.array()).sum();
    return 1e-6 * trace / static_cast<double>(x.rows());
}

/// Locality preserving projection: the d_out generalized eigenvectors of
///   (X L X^T) v = lambda (X D X^T + ridge I) v
/// with smallest eigenvalues, each normalized so v^T (X D X^T + ridge I) v = 1.
inline Projection fit_lpp(const DataMatrix& x, const GraphLaplacian& g, int d_out,
                          double ridge = kAutoRidge) {
    const Eigen::Index d = x.rows();
    const Eigen::Index n = x.cols();
    if (g.size() != n) throw ShapeError("fit_lpp: graph size does not match sample count");
    if (d_out <= 0) throw ParameterError("fit_lpp: d_out must be positive");
    if (d_out > d)
        throw RankError("fit_lpp: d_out=" + std::to_string(d_out) +
                        " exceeds feature dimension " + std::to_string(d));
    if (!x.allFinite()) throw InputError("fit_lpp: data contains non-finite entries");
    if (ridge == kAutoRidge)
        ridge = default_lpp_ridge(x, g);
    else if (ridge < 0.0)
        throw ParameterError("fit_lpp: ridge must be nonnegative");

    Eigen::MatrixXd a = x * g.laplacian * x.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    Eigen::MatrixXd b = x * g.degrees.asDiagonal() * x.transpose();
    b = 0.5 * (b + b.transpose()).eval();
    b.diagonal().array() += ridge;

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        a, b, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success || !solver.eigenvectors().allFinite() ||
        !solver.eigenvalues().allFinite())
        throw SingularityError(
            "fit_lpp: constraint matrix X D X^T + ridge I is numerically singular; "
            "increase ridge");

    Projection p;
    p.matrix = solver.eigenvectors().leftCols(d_out).transpose();
    p.values = solver.eigenvalues().head(d_out);
    detail::normalize_row_signs(p.matrix);
    return p;
}

/// Top principal directions of the column-centered data, orthonormal rows
/// ordered by descending variance (population denominator N).
inline Projection fit_pca(const DataMatrix& x, int d_out) {
    const Eigen::Index d = x.rows();
    const Eigen::Index n = x.cols();
    if (d_out <= 0) throw ParameterError("fit_pca: d_out must be positive");
    if (d_out > std::min(d, n))
        throw RankError("fit_pca: d_out=" + std::to_string(d_out) + " exceeds min(d, N)");
    if (!x.allFinite()) throw InputError("fit_pca: data contains non-finite entries");

    const Eigen::VectorXd mean = x.rowwise().mean();
    const Eigen::MatrixXd centered = x.colwise() - mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    const Eigen::VectorXd& sv = svd.singularValues();

    const double tol = static_cast<double>(std::max(d, n)) *
                       std::numeric_limits<double>::epsilon() * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    if (d_out > rank)
        throw RankError("fit_pca: d_out=" + std::to_string(d_out) +
                        " exceeds numerical rank " + std::to_string(rank));

    Projection p;
    p.matrix = svd.matrixU().leftCols(d_out).transpose();
    p.values = sv.head(d_out).array().square() / static_cast<double>(n);
    detail::normalize_row_signs(p.matrix);
    return p;
}

/// Applies a projection to samples: returns M X.
inline DataMatrix apply(const Projection& p, const DataMatrix& x) {
    if (p.matrix.cols() != x.rows())
        throw ShapeError("apply: projection expects " + std::to_string(p.matrix.cols()) +
                         " features, data has " + std::to_string(x.rows()));
    return p.matrix * x;
}

}  // namespace jplay
