#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

#include <jplay/embed.hpp>
#include <jplay/errors.hpp>
#include <jplay/graph.hpp>
#include <jplay/types.hpp>

namespace jplay {

/// Settings of the per-layer ADMM pre-trainer.
struct AdmmConfig {
    double eta = 1.0;      // manifold regularization weight
    double mu0 = 1e-3;     // initial penalty
    double mu_max = 1e6;   // penalty cap
    double rho = 2.0;      // per-iteration penalty growth
    double eps = 1e-6;     // residual tolerance
    int max_iter = 500;
    // Divide each residual by the norm of its target (useful for
    // ill-scaled data); the plain absolute norms are the default.
    bool relative_residuals = false;

    void validate() const {
        if (eta < 0.0) throw ParameterError("admm: eta must be nonnegative");
        if (mu0 <= 0.0) throw ParameterError("admm: mu0 must be positive");
        if (mu_max <= 0.0) throw ParameterError("admm: mu_max must be positive");
        if (mu0 > mu_max) throw ParameterError("admm: mu0 must not exceed mu_max");
        if (rho <= 1.0) throw ParameterError("admm: rho must be greater than 1");
        if (eps <= 0.0) throw ParameterError("admm: eps must be positive");
        if (max_iter < 0) throw ParameterError("admm: max_iter must be nonnegative");
    }
};

/// Solver state. The four auxiliary matrices copy the latent features
/// (h, q, s) and the projection (g); lam1..lam4 are their multipliers.
struct AdmmState {
    Eigen::MatrixXd theta;  // d_l x d_{l-1}
    Eigen::MatrixXd h;      // d_l x N
    Eigen::MatrixXd g;      // d_l x d_{l-1}
    Eigen::MatrixXd q;      // d_l x N, nonnegative copy
    Eigen::MatrixXd s;      // d_l x N, unit-column copy
    Eigen::MatrixXd lam1, lam3, lam4;  // d_l x N
    Eigen::MatrixXd lam2;              // d_l x d_{l-1}
    double mu = 0.0;
    int iter = 0;
};

struct ConvergenceReport {
    int iterations = 0;
    // Frobenius norms of H - Theta X, G - Theta, Q - Theta X, S - Theta X.
    std::array<double, 4> residuals{};
    bool converged = false;
};

/// Entrywise projection onto the nonnegative orthant.
inline Eigen::MatrixXd project_nonneg(const Eigen::MatrixXd& m) {
    return m.cwiseMax(0.0);
}

/// Scales every column with Euclidean norm above 1 back to the unit ball;
/// shorter columns (including zero columns) pass through unchanged. The
/// recomputed norm of a scaled column is <= 1, so applying the projection
/// twice changes nothing.
inline Eigen::MatrixXd project_unit_columns(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out = m;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        double norm = out.col(c).norm();
        if (norm <= 1.0) continue;
        // Rounding can leave the rescaled norm an ulp above 1; repeat, with a
        // conservative downscale of the original column as the last resort.
        for (int attempt = 0; norm > 1.0; ++attempt) {
            if (attempt == 8) {
                const double eps = std::numeric_limits<double>::epsilon();
                const double safety =
                    1.0 - 4.0 * static_cast<double>(m.rows() + 2) * eps;
                out.col(c) = m.col(c) * (safety / m.col(c).norm());
                break;
            }
            out.col(c) /= norm;
            norm = out.col(c).norm();
        }
    }
    return out;
}

namespace detail {

inline Eigen::MatrixXd solve_spd(Eigen::MatrixXd sys, const Eigen::MatrixXd& rhs,
                                 const char* who) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(std::move(sys));
    if (ldlt.info() != Eigen::Success)
        throw SolverError(std::string(who) + ": factorization of the system matrix failed");
    Eigen::MatrixXd out = ldlt.solve(rhs);
    if (!out.allFinite())
        throw SolverError(std::string(who) + ": solve produced non-finite values");
    return out;
}

// X L X^T (symmetrized) and X X^T, constant across the ADMM iterations.
struct ThetaSystemInputs {
    Eigen::MatrixXd xlxt;
    Eigen::MatrixXd xxt;
};

inline ThetaSystemInputs make_theta_system_inputs(const DataMatrix& x,
                                                  const GraphLaplacian& g) {
    ThetaSystemInputs t;
    t.xlxt = x * g.laplacian * x.transpose();
    t.xlxt = 0.5 * (t.xlxt + t.xlxt.transpose()).eval();
    t.xxt = x * x.transpose();
    return t;
}

inline Eigen::MatrixXd theta_update_impl(const AdmmState& st, const DataMatrix& x,
                                         const ThetaSystemInputs& sys_in,
                                         const AdmmConfig& cfg) {
    const double mu = st.mu;
    Eigen::MatrixXd rhs =
        (mu * st.h + st.lam1 + mu * st.q + st.lam3 + mu * st.s + st.lam4) * x.transpose() +
        mu * st.g + st.lam2;
    Eigen::MatrixXd sys = cfg.eta * sys_in.xlxt + 3.0 * mu * sys_in.xxt;
    sys.diagonal().array() += mu;
    // Theta sys = rhs with sys symmetric.
    return solve_spd(std::move(sys), rhs.transpose(), "theta_update").transpose();
}

}  // namespace detail

/// Exact minimizer of the augmented Lagrangian in Theta with the other
/// blocks held fixed:
///   Theta (eta X L X^T + 3 mu X X^T + mu I) =
///     (mu H + L1 + mu Q + L3 + mu S + L4) X^T + mu G + L2.
inline Eigen::MatrixXd theta_update(const AdmmState& st, const DataMatrix& x_prev,
                                    const GraphLaplacian& g, const AdmmConfig& cfg) {
    return detail::theta_update_impl(st, x_prev,
                                     detail::make_theta_system_inputs(x_prev, g), cfg);
}

/// Block minimizer in H: (G G^T + mu I)^{-1} (G X + mu Theta X - L1).
inline Eigen::MatrixXd h_update(const AdmmState& st, const DataMatrix& x_prev,
                                const AdmmConfig&) {
    Eigen::MatrixXd sys = st.g * st.g.transpose();
    sys.diagonal().array() += st.mu;
    const Eigen::MatrixXd rhs = st.g * x_prev + st.mu * (st.theta * x_prev) - st.lam1;
    return detail::solve_spd(std::move(sys), rhs, "h_update");
}

/// H update with the label-prediction term of the fine-tuning subproblem:
/// (alpha Pl^T Pl + G G^T + mu I)^{-1} (alpha Pl^T Y + G X + mu Theta X - L1).
inline Eigen::MatrixXd h_update_supervised(const AdmmState& st, const DataMatrix& x_prev,
                                           const AdmmConfig&,
                                           const Eigen::MatrixXd& p_residual,
                                           const LabelMatrix& y, double alpha) {
    Eigen::MatrixXd sys =
        alpha * (p_residual.transpose() * p_residual) + st.g * st.g.transpose();
    sys.diagonal().array() += st.mu;
    const Eigen::MatrixXd rhs = alpha * (p_residual.transpose() * y) + st.g * x_prev +
                                st.mu * (st.theta * x_prev) - st.lam1;
    return detail::solve_spd(std::move(sys), rhs, "h_update");
}

/// Block minimizer in G: (H H^T + mu I)^{-1} (H X^T + mu Theta - L2).
inline Eigen::MatrixXd g_update(const AdmmState& st, const DataMatrix& x_prev,
                                const AdmmConfig&) {
    Eigen::MatrixXd sys = st.h * st.h.transpose();
    sys.diagonal().array() += st.mu;
    const Eigen::MatrixXd rhs = st.h * x_prev.transpose() + st.mu * st.theta - st.lam2;
    return detail::solve_spd(std::move(sys), rhs, "g_update");
}

namespace detail {

// Optional label-prediction term turning the pre-trainer into the
// fine-tuning subproblem. With alpha == 0 the solver runs the exact same
// arithmetic as the unsupervised path.
struct SupervisedTerm {
    Eigen::MatrixXd p_residual;  // L x d_l
    LabelMatrix labels;          // L x N
    double alpha = 0.0;
};

inline void ensure_finite(const Eigen::MatrixXd& m, const char* name, int iter) {
    if (!m.allFinite())
        throw DivergenceError(std::string("admm diverged: non-finite ") + name +
                              " at iteration " + std::to_string(iter));
}

inline std::pair<Eigen::MatrixXd, ConvergenceReport> run_admm(
    const DataMatrix& x_prev, const Eigen::MatrixXd& theta0, const GraphLaplacian& g,
    const AdmmConfig& cfg, const SupervisedTerm* supervised = nullptr,
    const std::function<void(const AdmmState&)>& on_iteration = {}) {
    cfg.validate();
    const Eigen::Index n = x_prev.cols();
    if (!x_prev.allFinite()) throw InputError("admm: data contains non-finite entries");
    if (theta0.cols() != x_prev.rows())
        throw ShapeError("admm: theta0 columns must match the layer input dimension");
    if (g.size() != n) throw ShapeError("admm: graph size does not match sample count");
    if (supervised) {
        if (supervised->alpha < 0.0) throw ParameterError("admm: alpha must be nonnegative");
        if (supervised->p_residual.cols() != theta0.rows() ||
            supervised->labels.cols() != n ||
            supervised->p_residual.rows() != supervised->labels.rows())
            throw ShapeError("admm: prediction term dimensions are inconsistent");
    }

    const ThetaSystemInputs sys_in = make_theta_system_inputs(x_prev, g);
    const bool with_prediction = supervised && supervised->alpha > 0.0;

    AdmmState st;
    st.theta = theta0;
    st.h = theta0 * x_prev;
    st.g = Eigen::MatrixXd::Zero(theta0.rows(), theta0.cols());
    st.q = Eigen::MatrixXd::Zero(theta0.rows(), n);
    st.s = Eigen::MatrixXd::Zero(theta0.rows(), n);
    st.lam1 = Eigen::MatrixXd::Zero(theta0.rows(), n);
    st.lam2 = Eigen::MatrixXd::Zero(theta0.rows(), theta0.cols());
    st.lam3 = Eigen::MatrixXd::Zero(theta0.rows(), n);
    st.lam4 = Eigen::MatrixXd::Zero(theta0.rows(), n);
    st.mu = cfg.mu0;
    st.iter = 0;

    const auto residuals_at = [&](const Eigen::MatrixXd& tx) {
        std::array<double, 4> r{(st.h - tx).norm(), (st.g - st.theta).norm(),
                                (st.q - tx).norm(), (st.s - tx).norm()};
        if (cfg.relative_residuals) {
            const double tx_scale = std::max(1.0, tx.norm());
            const double th_scale = std::max(1.0, st.theta.norm());
            r[0] /= tx_scale;
            r[1] /= th_scale;
            r[2] /= tx_scale;
            r[3] /= tx_scale;
        }
        return r;
    };

    ConvergenceReport report;
    report.residuals = residuals_at(st.h);  // h holds theta0 * x_prev here

    for (int t = 0; t < cfg.max_iter; ++t) {
        // Solver failures mid-loop mean the iteration blew up, not that the
        // systems are structurally singular (mu > 0 keeps them definite).
        try {
            st.theta = theta_update_impl(st, x_prev, sys_in, cfg);
            ensure_finite(st.theta, "Theta", t);
            st.h = with_prediction
                       ? h_update_supervised(st, x_prev, cfg, supervised->p_residual,
                                             supervised->labels, supervised->alpha)
                       : h_update(st, x_prev, cfg);
            ensure_finite(st.h, "H", t);
            st.g = g_update(st, x_prev, cfg);
            ensure_finite(st.g, "G", t);
        } catch (const SolverError& e) {
            throw DivergenceError("admm diverged at iteration " + std::to_string(t) + ": " +
                                  e.what());
        }

        const Eigen::MatrixXd tx = st.theta * x_prev;
        ensure_finite(tx, "Theta X", t);
        st.q = project_nonneg(tx - st.lam3 / st.mu);
        st.s = project_unit_columns(tx - st.lam4 / st.mu);

        st.lam1 += st.mu * (st.h - tx);
        st.lam2 += st.mu * (st.g - st.theta);
        st.lam3 += st.mu * (st.q - tx);
        st.lam4 += st.mu * (st.s - tx);
        ensure_finite(st.lam1, "Lambda1", t);
        ensure_finite(st.lam2, "Lambda2", t);
        ensure_finite(st.lam3, "Lambda3", t);
        ensure_finite(st.lam4, "Lambda4", t);

        report.residuals = residuals_at(tx);
        st.mu = std::min(cfg.rho * st.mu, cfg.mu_max);
        st.iter = t + 1;
        report.iterations = st.iter;
        if (on_iteration) on_iteration(st);

        if (report.residuals[0] < cfg.eps && report.residuals[1] < cfg.eps &&
            report.residuals[2] < cfg.eps && report.residuals[3] < cfg.eps) {
            report.converged = true;
            break;
        }
    }
    return {std::move(st.theta), report};
}

}  // namespace detail

/// Pre-trains one layer: runs the splitting loop (Theta, H, G, Q, S,
/// multiplier ascent, penalty growth) from theta0 until all four constraint
/// residuals fall below cfg.eps or the iteration budget runs out.
inline std::pair<Projection, ConvergenceReport> fit_autorule(
    const DataMatrix& x_prev, const Projection& theta0, const GraphLaplacian& g,
    const AdmmConfig& cfg, const std::function<void(const AdmmState&)>& on_iteration = {}) {
    auto [theta, report] = detail::run_admm(x_prev, theta0.matrix, g, cfg, nullptr,
                                            on_iteration);
    Projection p;
    p.matrix = std::move(theta);
    return {std::move(p), report};
}

}  // namespace jplay
