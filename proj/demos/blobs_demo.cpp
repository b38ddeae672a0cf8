// Minimal library walkthrough: generate blobs, train a two-layer model,
// classify a held-out split.

#include <cstdio>

#include <jplay/classify.hpp>
#include <jplay/data.hpp>
#include <jplay/jplay.hpp>

int main() {
    using namespace jplay;

    Dataset ds = synth_blobs(/*classes=*/3, /*per_class=*/60, /*d=*/20,
                             /*center_spread=*/2.0, /*noise_sigma=*/0.8, /*seed=*/5);
    auto [train_idx, test_idx] = train_test_split_per_class(ds.labels, 30, 6);
    const Dataset train = subset(ds, train_idx);
    const Dataset test = subset(ds, test_idx);

    auto [x_train, norm] = normalize(train.x, NormalizeMode::UnitColumns);
    const Eigen::MatrixXd x_test = apply_normalize(norm, test.x);

    JPlayConfig cfg;
    cfg.layer_dims = {8, 8};
    cfg.alpha = 1.0;
    cfg.beta = 0.1;
    cfg.gamma = 1.0;
    cfg.eta = 1.0;
    cfg.graph_k = 8;

    const TrainedModel model = fit(x_train, one_hot(train.labels, ds.num_classes), cfg);

    std::printf("objective: %.4f -> %.4f over %d outer iterations\n",
                model.report.trace.front().objective, model.report.trace.back().objective,
                model.report.outer_iterations);

    const double raw = overall_accuracy(nn_classify(x_train, train.labels, x_test),
                                        test.labels);
    const double learned = overall_accuracy(
        nn_classify(model.train_features_latent, model.train_labels,
                    transform(model, x_test)),
        test.labels);
    std::printf("held-out accuracy: raw %.4f, learned subspace %.4f\n", raw, learned);
    return 0;
}
