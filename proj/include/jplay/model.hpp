#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <jplay/autorule.hpp>
#include <jplay/data.hpp>
#include <jplay/errors.hpp>
#include <jplay/types.hpp>

namespace jplay {

/// Full training configuration: layer widths d_1..d_m, the four penalty
/// weights, the outer-loop stopping rule, and the graph/ADMM settings.
struct JPlayConfig {
    std::vector<int> layer_dims;
    double alpha = 1.0;  // label-prediction weight
    double beta = 1.0;   // manifold weight in fine-tuning
    double gamma = 1.0;  // ridge weight on the regression map
    double eta = 1.0;    // manifold weight in pre-training
    double zeta = 1e-4;  // relative objective tolerance of the outer loop
    int outer_max_iter = 50;
    AdmmConfig admm;
    int graph_k = 10;
    double graph_bandwidth = kAutoBandwidth;
    bool per_layer_graph = false;
    bool supervised_graph = false;
    std::int64_t seed = 0;

    int depth() const { return static_cast<int>(layer_dims.size()); }

    void validate() const {
        if (layer_dims.empty()) throw ParameterError("config: layer_dims must be non-empty");
        for (int d : layer_dims)
            if (d <= 0) throw ParameterError("config: layer dimensions must be positive");
        if (alpha < 0 || beta < 0 || gamma < 0 || eta < 0)
            throw ParameterError("config: penalty weights must be nonnegative");
        if (zeta <= 0) throw ParameterError("config: zeta must be positive");
        if (outer_max_iter < 0)
            throw ParameterError("config: outer_max_iter must be nonnegative");
        if (graph_k < 1) throw ParameterError("config: graph_k must be positive");
        if (graph_bandwidth < 0)
            throw ParameterError("config: graph bandwidth must be positive (or 0 for auto)");
        admm.validate();
    }
};

/// Weighted values of the four objective terms; they sum to the objective.
struct ObjectiveBreakdown {
    double reconstruction = 0.0;  // 1/2 sum_l |X_{l-1} - Theta_l^T Theta_l X_{l-1}|_F^2
    double prediction = 0.0;      // alpha/2 |Y - P Theta_m ... Theta_1 X|_F^2
    double manifold = 0.0;        // beta/2 sum_l tr(Theta_l X_{l-1} L X_{l-1}^T Theta_l^T)
    double ridge = 0.0;           // gamma/2 |P|_F^2

    double total() const { return reconstruction + prediction + manifold + ridge; }
};

struct OuterIteration {
    int iteration = 0;                // 0 is the state right after pre-training
    double objective_after_p = 0.0;   // objective right after the P update
    ObjectiveBreakdown terms;         // at the end of the sweep
    double objective = 0.0;
};

struct TrainReport {
    std::vector<ConvergenceReport> pretrain;  // one per layer
    std::vector<OuterIteration> trace;        // trace[0] is the initial state
    int outer_iterations = 0;
    bool converged = false;
};

/// The trained artifact: the projection stack, the label-regression map,
/// and the latent training features + labels used as the nearest-neighbor
/// reference set at evaluation time.
struct TrainedModel {
    std::vector<Eigen::MatrixXd> thetas;  // Theta_l is d_l x d_{l-1}
    Eigen::MatrixXd p;                    // L x d_m
    int input_dim = 0;
    int num_classes = 0;
    JPlayConfig config;
    TrainReport report;
    Eigen::MatrixXd train_features_latent;  // d_m x N_train
    std::vector<int> train_labels;
    NormalizeParams normalization;

    int depth() const { return static_cast<int>(thetas.size()); }
};

}  // namespace jplay
