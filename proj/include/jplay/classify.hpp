#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <jplay/detail/util.hpp>
#include <jplay/errors.hpp>
#include <jplay/jplay.hpp>
#include <jplay/types.hpp>

namespace jplay {

/// One-hot encoding: Y(t-1, k) = 1 iff sample k belongs to class t.
inline LabelMatrix one_hot(const std::vector<int>& labels, int num_classes) {
    if (num_classes < 1) throw ParameterError("one_hot: class count must be positive");
    LabelMatrix y = LabelMatrix::Zero(num_classes, static_cast<Eigen::Index>(labels.size()));
    for (size_t k = 0; k < labels.size(); ++k) {
        const int label = labels[k];
        if (label < 1 || label > num_classes)
            throw InputError("one_hot: label " + std::to_string(label) +
                             " out of range [1, " + std::to_string(num_classes) + "]");
        y(label - 1, static_cast<Eigen::Index>(k)) = 1.0;
    }
    return y;
}

/// Inverse of one_hot: the 1-based row index of the 1 in each column.
inline std::vector<int> decode_labels(const LabelMatrix& y) {
    detail::check_label_matrix(y);
    return detail::decode_label_matrix(y);
}

/// Each test sample receives the label of its Euclidean-nearest training
/// sample; distance ties go to the lowest training-sample index.
inline std::vector<int> nn_classify(const DataMatrix& train_feats,
                                    const std::vector<int>& train_labels,
                                    const DataMatrix& test_feats) {
    if (train_feats.cols() == 0) throw InputError("nn_classify: empty training set");
    if (train_feats.rows() != test_feats.rows())
        throw ShapeError("nn_classify: feature dimensions differ");
    if (static_cast<Eigen::Index>(train_labels.size()) != train_feats.cols())
        throw ShapeError("nn_classify: label count does not match training samples");

    std::vector<int> pred(static_cast<size_t>(test_feats.cols()));
    for (Eigen::Index t = 0; t < test_feats.cols(); ++t) {
        Eigen::Index best = 0;
        double best_d2 = (train_feats.col(0) - test_feats.col(t)).squaredNorm();
        for (Eigen::Index j = 1; j < train_feats.cols(); ++j) {
            const double d2 = (train_feats.col(j) - test_feats.col(t)).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = j;
            }
        }
        pred[static_cast<size_t>(t)] = train_labels[static_cast<size_t>(best)];
    }
    return pred;
}

/// Fraction of positions where the prediction equals the ground truth.
inline double overall_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.empty()) throw InputError("overall_accuracy: empty prediction list");
    if (pred.size() != truth.size())
        throw InputError("overall_accuracy: prediction and truth lengths differ");
    size_t hits = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// Stratified fold assignment: per class (ascending), the sample indices
/// are shuffled with the seeded generator and dealt round-robin.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int folds,
                                         uint64_t seed) {
    if (folds < 2) throw ParameterError("stratified_folds: need at least 2 folds");
    if (static_cast<int>(labels.size()) < folds)
        throw ParameterError("stratified_folds: fewer samples than folds");
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    std::mt19937_64 rng(seed);
    std::vector<int> fold_of(labels.size(), -1);
    for (int c : classes) {
        if (c <= 0) throw InputError("stratified_folds: all samples must be labeled");
        std::vector<int> idx;
        for (size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) idx.push_back(static_cast<int>(i));
        if (static_cast<int>(idx.size()) < folds)
            throw StratificationError("stratified_folds: class " + std::to_string(c) +
                                      " has " + std::to_string(idx.size()) +
                                      " samples, fewer than " + std::to_string(folds) +
                                      " folds");
        std::shuffle(idx.begin(), idx.end(), rng);
        for (size_t pos = 0; pos < idx.size(); ++pos)
            fold_of[static_cast<size_t>(idx[pos])] = static_cast<int>(pos) % folds;
    }
    return fold_of;
}

/// The canonical grid parameter order; candidate value lists are sorted
/// ascending, so cells enumerate in lexicographic order of their tuples.
inline const std::vector<std::string>& grid_parameter_names() {
    static const std::vector<std::string> names{"alpha", "beta", "gamma", "eta"};
    return names;
}

struct GridCell {
    std::vector<double> values;  // one per gridded parameter, canonical order
    std::vector<double> fold_accuracies;
    double mean_accuracy = 0.0;
};

struct GridSearchResult {
    std::vector<std::string> param_names;
    std::vector<GridCell> cells;
    size_t best_index = 0;
    JPlayConfig best_config;

    const GridCell& best() const { return cells[best_index]; }
};

/// Cross-validated grid search over any subset of {alpha, beta, gamma,
/// eta}. For every cell the model is fit on the training folds and scored
/// by held-out nearest-neighbor accuracy; the best cell is the highest
/// mean accuracy, ties resolved toward the lexicographically smallest
/// parameter tuple. Cells may be evaluated by `jobs` worker threads; the
/// result does not depend on scheduling.
inline GridSearchResult grid_search(const DataMatrix& x, const std::vector<int>& labels,
                                    const JPlayConfig& cfg_template,
                                    const std::map<std::string, std::vector<double>>& grid,
                                    int folds, uint64_t seed, int jobs = 1) {
    if (grid.empty()) throw ParameterError("grid_search: empty grid");
    if (static_cast<Eigen::Index>(labels.size()) != x.cols())
        throw ShapeError("grid_search: label count does not match sample count");
    if (jobs < 1) throw ParameterError("grid_search: jobs must be positive");
    cfg_template.validate();

    GridSearchResult result;
    std::vector<std::vector<double>> value_lists;
    for (const std::string& name : grid_parameter_names()) {
        const auto it = grid.find(name);
        if (it == grid.end()) continue;
        if (it->second.empty())
            throw ParameterError("grid_search: empty candidate list for " + name);
        for (double v : it->second)
            if (v < 0.0) throw ParameterError("grid_search: negative candidate for " + name);
        std::vector<double> values = it->second;
        std::sort(values.begin(), values.end());
        result.param_names.push_back(name);
        value_lists.push_back(std::move(values));
    }
    for (const auto& [name, _] : grid)
        if (std::find(grid_parameter_names().begin(), grid_parameter_names().end(), name) ==
            grid_parameter_names().end())
            throw ParameterError("grid_search: unknown grid parameter '" + name + "'");

    // Cartesian product in canonical order.
    std::vector<std::vector<double>> tuples{{}};
    for (const auto& values : value_lists) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : tuples)
            for (double v : values) {
                std::vector<double> t = prefix;
                t.push_back(v);
                next.push_back(std::move(t));
            }
        tuples = std::move(next);
    }

    const std::vector<int> fold_of = stratified_folds(labels, folds, seed);
    const int num_classes = *std::max_element(labels.begin(), labels.end());

    const auto apply_tuple = [&](const std::vector<double>& tuple) {
        JPlayConfig cfg = cfg_template;
        for (size_t i = 0; i < result.param_names.size(); ++i) {
            const std::string& name = result.param_names[i];
            if (name == "alpha") cfg.alpha = tuple[i];
            else if (name == "beta") cfg.beta = tuple[i];
            else if (name == "gamma") cfg.gamma = tuple[i];
            else cfg.eta = tuple[i];
        }
        return cfg;
    };

    const auto evaluate_cell = [&](const std::vector<double>& tuple) {
        const JPlayConfig cfg = apply_tuple(tuple);
        GridCell cell;
        cell.values = tuple;
        double sum = 0.0;
        for (int f = 0; f < folds; ++f) {
            std::vector<int> train_idx, test_idx;
            for (size_t i = 0; i < fold_of.size(); ++i)
                (fold_of[i] == f ? test_idx : train_idx).push_back(static_cast<int>(i));
            std::vector<int> train_labels, test_labels;
            for (int i : train_idx) train_labels.push_back(labels[static_cast<size_t>(i)]);
            for (int i : test_idx) test_labels.push_back(labels[static_cast<size_t>(i)]);

            const DataMatrix x_train = x(Eigen::all, train_idx);
            const DataMatrix x_test = x(Eigen::all, test_idx);
            const TrainedModel model = fit(x_train, one_hot(train_labels, num_classes), cfg);
            const std::vector<int> pred = nn_classify(
                model.train_features_latent, model.train_labels, transform(model, x_test));
            const double acc = overall_accuracy(pred, test_labels);
            cell.fold_accuracies.push_back(acc);
            sum += acc;
        }
        cell.mean_accuracy = sum / static_cast<double>(folds);
        return cell;
    };

    result.cells.resize(tuples.size());
    if (jobs == 1 || tuples.size() == 1) {
        for (size_t i = 0; i < tuples.size(); ++i) result.cells[i] = evaluate_cell(tuples[i]);
    } else {
        std::atomic<size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const auto worker = [&]() {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= tuples.size()) return;
                try {
                    result.cells[i] = evaluate_cell(tuples[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const size_t nthreads = std::min<size_t>(static_cast<size_t>(jobs), tuples.size());
        for (size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    // Cells are in lexicographic tuple order, so keeping the first
    // strictly-better cell realizes the tie-break.
    result.best_index = 0;
    for (size_t i = 1; i < result.cells.size(); ++i)
        if (result.cells[i].mean_accuracy > result.cells[result.best_index].mean_accuracy)
            result.best_index = i;
    result.best_config = apply_tuple(result.cells[result.best_index].values);
    return result;
}

/// CSV rendering of a grid-search table: one column per gridded parameter,
/// the mean held-out accuracy, and the per-fold accuracies joined by ';'.
inline std::string accuracy_table_csv(const GridSearchResult& result) {
    std::string out;
    for (const auto& name : result.param_names) out += name + ",";
    out += "mean_accuracy,fold_accuracies\n";
    for (const auto& cell : result.cells) {
        for (double v : cell.values) out += detail::format_shortest(v) + ",";
        out += detail::format_shortest(cell.mean_accuracy) + ",";
        for (size_t f = 0; f < cell.fold_accuracies.size(); ++f) {
            if (f) out += ';';
            out += detail::format_shortest(cell.fold_accuracies[f]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace jplay
