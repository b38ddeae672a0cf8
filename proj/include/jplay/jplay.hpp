#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <jplay/autorule.hpp>
#include <jplay/embed.hpp>
#include <jplay/errors.hpp>
#include <jplay/graph.hpp>
#include <jplay/model.hpp>
#include <jplay/types.hpp>

namespace jplay {

/// Pass as `upto` to apply the whole projection stack.
constexpr int kTransformTop = -1;

namespace detail {

inline void check_label_matrix(const LabelMatrix& y) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        double sum = 0.0;
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const double v = y(r, c);
            if (v != 0.0 && v != 1.0)
                throw InputError("label matrix entries must be exactly 0 or 1");
            sum += v;
        }
        if (sum != 1.0) throw InputError("every label matrix column must sum to 1");
    }
}

inline std::vector<int> decode_label_matrix(const LabelMatrix& y) {
    std::vector<int> labels(static_cast<size_t>(y.cols()));
    for (Eigen::Index c = 0; c < y.cols(); ++c)
        for (Eigen::Index r = 0; r < y.rows(); ++r)
            if (y(r, c) == 1.0) {
                labels[static_cast<size_t>(c)] = static_cast<int>(r) + 1;
                break;
            }
    return labels;
}

inline DataMatrix transform_stack(const std::vector<Eigen::MatrixXd>& thetas,
                                  const DataMatrix& x, int upto) {
    DataMatrix z = x;
    for (int l = 0; l < upto; ++l) z = thetas[static_cast<size_t>(l)] * z;
    return z;
}

// Four-term training objective with one Laplacian per layer (they all
// alias the same graph unless per-layer graphs are enabled).
inline ObjectiveBreakdown objective_terms(const std::vector<Eigen::MatrixXd>& thetas,
                                          const Eigen::MatrixXd& p, const DataMatrix& x,
                                          const LabelMatrix& y,
                                          const std::vector<const GraphLaplacian*>& laps,
                                          double alpha, double beta, double gamma) {
    ObjectiveBreakdown b;
    DataMatrix x_prev = x;
    for (size_t l = 0; l < thetas.size(); ++l) {
        const DataMatrix tx = thetas[l] * x_prev;
        b.reconstruction += (x_prev - thetas[l].transpose() * tx).squaredNorm();
        // tr(A L A^T) = sum_ij (A L)_ij A_ij
        b.manifold += ((tx * laps[l]->laplacian).cwiseProduct(tx)).sum();
        x_prev = tx;
    }
    b.reconstruction *= 0.5;
    b.manifold *= 0.5 * beta;
    b.prediction = 0.5 * alpha * (y - p * x_prev).squaredNorm();
    b.ridge = 0.5 * gamma * p.squaredNorm();
    return b;
}

}  // namespace detail

/// Applies the first `upto` layers (kTransformTop: all of them) to X.
inline DataMatrix transform(const TrainedModel& model, const DataMatrix& x,
                            int upto = kTransformTop) {
    if (x.rows() != model.input_dim)
        throw ShapeError("transform: model expects " + std::to_string(model.input_dim) +
                         " features, data has " + std::to_string(x.rows()));
    if (upto == kTransformTop) upto = model.depth();
    if (upto < 1 || upto > model.depth())
        throw ParameterError("transform: layer index out of range");
    return detail::transform_stack(model.thetas, x, upto);
}

/// The composite map Theta_m ... Theta_1 collapsing the stack into a
/// single d_m x d_0 matrix.
inline Eigen::MatrixXd composite_projection(const TrainedModel& model) {
    if (model.thetas.empty()) throw ParameterError("composite_projection: empty model");
    Eigen::MatrixXd v = model.thetas.front();
    for (size_t l = 1; l < model.thetas.size(); ++l) v = model.thetas[l] * v;
    return v;
}

/// Evaluates the four-term training objective for the current model on the
/// given data, with the same Laplacian applied to every layer.
inline ObjectiveBreakdown objective(const TrainedModel& model, const DataMatrix& x,
                                    const LabelMatrix& y, const GraphLaplacian& g,
                                    const JPlayConfig& cfg) {
    if (x.cols() != y.cols()) throw ShapeError("objective: X and Y sample counts differ");
    if (g.size() != x.cols()) throw ShapeError("objective: graph size mismatch");
    std::vector<const GraphLaplacian*> laps(model.thetas.size(), &g);
    return detail::objective_terms(model.thetas, model.p, x, y, laps, cfg.alpha, cfg.beta,
                                   cfg.gamma);
}

/// Closed-form regression map: the unique minimizer of
///   alpha/2 |Y - P X_top|_F^2 + gamma/2 |P|_F^2,
/// i.e. P = (alpha Y X_top^T)(alpha X_top X_top^T + gamma I)^{-1}.
inline Eigen::MatrixXd update_p(const LabelMatrix& y, const DataMatrix& x_top, double alpha,
                                double gamma) {
    if (alpha < 0 || gamma < 0)
        throw ParameterError("update_p: alpha and gamma must be nonnegative");
    if (alpha == 0 && gamma == 0)
        throw ParameterError("update_p: alpha and gamma cannot both be zero");
    if (y.cols() != x_top.cols()) throw ShapeError("update_p: sample counts differ");
    Eigen::MatrixXd sys = alpha * (x_top * x_top.transpose());
    sys.diagonal().array() += gamma;
    // P sys = alpha Y X_top^T with sys symmetric.
    return detail::solve_spd(std::move(sys), alpha * (x_top * y.transpose()), "update_p")
        .transpose();
}

/// Left factor P Theta_m ... Theta_{l+1} multiplying layer l's latent
/// features in the prediction term (P itself for l = m).
inline Eigen::MatrixXd residual_map(const TrainedModel& model, int l) {
    const int m = model.depth();
    if (l < 1 || l > m) throw ParameterError("residual_map: layer index out of range");
    Eigen::MatrixXd r = model.p;
    for (int j = m; j > l; --j) r = r * model.thetas[static_cast<size_t>(j - 1)];
    return r;
}

/// Refines layer l with the ADMM solver, using manifold weight beta and the
/// prediction-aware H update. With alpha == 0 this runs exactly the
/// unsupervised pre-trainer (manifold weight beta).
inline Projection finetune_theta(int l, const TrainedModel& model, const DataMatrix& x,
                                 const LabelMatrix& y, const GraphLaplacian& g,
                                 const JPlayConfig& cfg) {
    const int m = model.depth();
    if (l < 1 || l > m) throw ParameterError("finetune_theta: layer index out of range");
    const DataMatrix x_prev = detail::transform_stack(model.thetas, x, l - 1);

    AdmmConfig acfg = cfg.admm;
    acfg.eta = cfg.beta;

    Eigen::MatrixXd theta;
    ConvergenceReport report;
    if (cfg.alpha > 0) {
        detail::SupervisedTerm sup;
        sup.p_residual = residual_map(model, l);
        sup.labels = y;
        sup.alpha = cfg.alpha;
        std::tie(theta, report) =
            detail::run_admm(x_prev, model.thetas[static_cast<size_t>(l - 1)], g, acfg, &sup);
    } else {
        std::tie(theta, report) =
            detail::run_admm(x_prev, model.thetas[static_cast<size_t>(l - 1)], g, acfg);
    }
    Projection out;
    out.matrix = std::move(theta);
    return out;
}

/// Trains the full model: greedy layer-wise pre-training (graph embedding
/// init, then the ADMM pre-trainer), followed by alternating sweeps that
/// update P in closed form and refine each Theta_l, until the relative
/// objective change drops below zeta.
inline TrainedModel fit(const DataMatrix& x, const LabelMatrix& y, const JPlayConfig& cfg) {
    cfg.validate();
    if (!x.allFinite()) throw InputError("fit: data contains non-finite entries");
    if (x.cols() != y.cols()) throw ShapeError("fit: X and Y sample counts differ");
    detail::check_label_matrix(y);
    const std::vector<int> labels = detail::decode_label_matrix(y);
    {
        int present = 0;
        for (Eigen::Index r = 0; r < y.rows(); ++r)
            if (y.row(r).sum() > 0) ++present;
        if (present < 2) throw InputError("fit: need samples from at least 2 classes");
    }

    const int m = cfg.depth();
    const std::vector<int>* graph_labels = cfg.supervised_graph ? &labels : nullptr;

    TrainedModel model;
    model.config = cfg;
    model.input_dim = static_cast<int>(x.rows());
    model.num_classes = static_cast<int>(y.rows());

    // Pre-training. The graph is built once on the input space; with
    // per-layer graphs enabled it is rebuilt on each layer's input features
    // and kept fixed through fine-tuning.
    std::vector<GraphLaplacian> graphs;
    graphs.reserve(cfg.per_layer_graph ? m : 1);
    graphs.push_back(build_graph(x, cfg.graph_k, cfg.graph_bandwidth, graph_labels));
    DataMatrix x_prev = x;
    for (int l = 0; l < m; ++l) {
        if (cfg.per_layer_graph && l > 0)
            graphs.push_back(build_graph(x_prev, cfg.graph_k, cfg.graph_bandwidth,
                                         graph_labels));
        const GraphLaplacian& gl = cfg.per_layer_graph ? graphs[static_cast<size_t>(l)]
                                                       : graphs.front();
        const Projection init = fit_lpp(x_prev, gl, cfg.layer_dims[static_cast<size_t>(l)]);
        AdmmConfig acfg = cfg.admm;
        acfg.eta = cfg.eta;
        auto [theta, rep] = detail::run_admm(x_prev, init.matrix, gl, acfg);
        model.report.pretrain.push_back(rep);
        model.thetas.push_back(std::move(theta));
        x_prev = model.thetas.back() * x_prev;
    }

    std::vector<const GraphLaplacian*> laps;
    for (int l = 0; l < m; ++l)
        laps.push_back(cfg.per_layer_graph ? &graphs[static_cast<size_t>(l)]
                                           : &graphs.front());

    const auto eval_objective = [&]() {
        return detail::objective_terms(model.thetas, model.p, x, y, laps, cfg.alpha,
                                       cfg.beta, cfg.gamma);
    };

    model.p = update_p(y, x_prev, cfg.alpha, cfg.gamma);
    {
        const ObjectiveBreakdown terms0 = eval_objective();
        model.report.trace.push_back({0, terms0.total(), terms0, terms0.total()});
    }
    double prev_objective = model.report.trace.back().objective;

    for (int t = 1; t <= cfg.outer_max_iter; ++t) {
        model.p = update_p(y, detail::transform_stack(model.thetas, x, m), cfg.alpha,
                           cfg.gamma);
        const double after_p = eval_objective().total();
        for (int l = 1; l <= m; ++l)
            model.thetas[static_cast<size_t>(l - 1)] =
                finetune_theta(l, model, x, y, *laps[static_cast<size_t>(l - 1)], cfg)
                    .matrix;

        const ObjectiveBreakdown terms = eval_objective();
        const double obj = terms.total();
        model.report.trace.push_back({t, after_p, terms, obj});
        model.report.outer_iterations = t;
        if (!std::isfinite(obj)) {
            std::string trace_str;
            for (const auto& rec : model.report.trace)
                trace_str += (trace_str.empty() ? "" : "; ") +
                             std::to_string(rec.iteration) + ": " +
                             std::to_string(rec.objective);
            throw DivergenceError("fit: objective diverged at outer iteration " +
                                  std::to_string(t) + " (trace: " + trace_str + ")");
        }
        const double rel =
            std::abs(obj - prev_objective) / (prev_objective != 0.0 ? std::abs(prev_objective)
                                                                    : 1.0);
        if (rel < cfg.zeta) {
            model.report.converged = true;
            break;
        }
        prev_objective = obj;
    }

    model.train_features_latent = detail::transform_stack(model.thetas, x, m);
    model.train_labels = labels;
    return model;
}

}  // namespace jplay
