// Command-line front end: train, eval, gridsearch, export-features, synth.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <jplay/classify.hpp>
#include <jplay/data.hpp>
#include <jplay/jplay.hpp>
#include <jplay/model_io.hpp>
#include <jplay/visualize.hpp>

namespace {

using namespace jplay;

struct DataArgs {
    std::string data_path;
    std::string labels_path;
    std::string label_column;
    std::string orientation = "rows";
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
    cmd->add_option("--data", args.data_path, "Data file (.jpld or .csv)");
    cmd->add_option("--labels", args.labels_path,
                    "Label file: one integer per line (overrides labels in --data)");
    cmd->add_option("--label-column", args.label_column,
                    "CSV column holding the labels (header name or 0-based index)");
    cmd->add_option("--orientation", args.orientation, "CSV sample layout: rows | columns")
        ->check(CLI::IsMember({"rows", "columns"}));
}

// Applies a plain `key = value` config file (# comments) to a subcommand.
// Keys are the long option names without the leading dashes; values given
// on the command line win over the file.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    if (path.empty()) return;
    std::string content;
    try {
        content = detail::read_file(path);
    } catch (const InputError& e) {
        throw ParameterError(e.what());
    }

    std::vector<std::pair<std::string, std::string>> items;
    size_t start = 0;
    int line_no = 0;
    while (start < content.size()) {
        size_t nl = content.find('\n', start);
        if (nl == std::string::npos) nl = content.size();
        std::string line = content.substr(start, nl - start);
        start = nl + 1;
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParameterError(path + ": line " + std::to_string(line_no) +
                                 ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParameterError(path + ": line " + std::to_string(line_no) +
                                 ": expected key = value");
        items.emplace_back(key, value);
    }

    std::map<CLI::Option*, bool> touched;
    for (const auto& [key, value] : items) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config")
            throw ParameterError(path + ": unknown config key '" + key + "'");
        if (!touched.count(opt)) {
            if (opt->count() > 0) {
                touched[opt] = false;  // set on the command line; file loses
                continue;
            }
            touched[opt] = true;
        }
        if (touched[opt]) opt->add_result(value);
    }
    for (auto& [opt, injected] : touched)
        if (injected) opt->run_callback();
}

std::vector<int> load_label_file(const std::string& path) {
    const std::string content = detail::read_file(path);
    std::vector<int> labels;
    size_t start = 0;
    size_t line_no = 0;
    while (start < content.size()) {
        size_t nl = content.find('\n', start);
        if (nl == std::string::npos) nl = content.size();
        std::string line = detail::trim(content.substr(start, nl - start));
        ++line_no;
        if (!line.empty()) {
            double v;
            if (!detail::parse_double(line, v) || v != std::floor(v) || v < 0)
                throw FormatError(path + ": line " + std::to_string(line_no) +
                                  ": expected a nonnegative integer label");
            labels.push_back(static_cast<int>(v));
        }
        start = nl + 1;
    }
    if (labels.empty()) throw FormatError(path + ": no labels");
    return labels;
}

Dataset load_dataset(const DataArgs& args) {
    const std::filesystem::path p(args.data_path);
    Dataset ds;
    if (p.extension() == ".jpld") {
        ds = load_jpld(args.data_path);
    } else {
        const Orientation orient = args.orientation == "columns"
                                       ? Orientation::SamplesAsColumns
                                       : Orientation::SamplesAsRows;
        std::optional<std::string> label_column;
        if (!args.label_column.empty()) {
            label_column = args.label_column;
        } else if (orient == Orientation::SamplesAsRows) {
            // Convention: a header column named "cls" carries labels.
            try {
                ds = load_csv(args.data_path, orient, std::string("cls"));
                if (!args.labels_path.empty()) {
                    ds.labels = load_label_file(args.labels_path);
                    if (static_cast<Eigen::Index>(ds.labels.size()) != ds.samples())
                        throw ShapeError(args.labels_path + ": label count mismatch");
                    ds.num_classes =
                        *std::max_element(ds.labels.begin(), ds.labels.end());
                }
                return ds;
            } catch (const ParameterError&) {
                // no "cls" column; fall through to an unlabeled load
            }
        }
        ds = load_csv(args.data_path, orient, label_column);
    }
    if (!args.labels_path.empty()) {
        ds.labels = load_label_file(args.labels_path);
        if (static_cast<Eigen::Index>(ds.labels.size()) != ds.samples())
            throw ShapeError(args.labels_path + ": expected " +
                             std::to_string(ds.samples()) + " labels, got " +
                             std::to_string(ds.labels.size()));
        ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end());
    }
    return ds;
}

struct ConfigArgs {
    std::vector<int> layers;
    double alpha = 1.0, beta = 1.0, gamma = 1.0, eta = 1.0;
    double zeta = 1e-4;
    int outer_max_iter = 50;
    int graph_k = 10;
    double graph_bandwidth = kAutoBandwidth;
    bool per_layer_graph = false;
    bool supervised_graph = false;
    double admm_eps = 1e-6;
    int admm_max_iter = 500;
    double mu0 = 1e-3, mu_max = 1e6, rho = 2.0;
    bool admm_relative = false;
    std::int64_t seed = 0;
    std::string normalize_mode = "unit-columns";
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--layers", args.layers, "Subspace dimensions d_1,d_2,...,d_m")
        ->delimiter(',');
    cmd->add_option("--alpha", args.alpha, "Prediction-term weight");
    cmd->add_option("--beta", args.beta, "Manifold weight (fine-tuning)");
    cmd->add_option("--gamma", args.gamma, "Ridge weight on the regression map");
    cmd->add_option("--eta", args.eta, "Manifold weight (pre-training)");
    cmd->add_option("--zeta", args.zeta, "Outer-loop relative objective tolerance");
    cmd->add_option("--outer-max-iter", args.outer_max_iter, "Outer-loop iteration cap");
    cmd->add_option("--graph-k", args.graph_k, "Nearest-neighbor count of the graph");
    cmd->add_option("--graph-bandwidth", args.graph_bandwidth,
                    "Heat-kernel bandwidth (0 = derive from the data)");
    cmd->add_flag("--per-layer-graph", args.per_layer_graph,
                  "Rebuild the graph on each layer's input features");
    cmd->add_flag("--supervised-graph", args.supervised_graph,
                  "Connect only same-label neighbors in the graph");
    cmd->add_option("--admm-eps", args.admm_eps, "ADMM residual tolerance");
    cmd->add_option("--admm-max-iter", args.admm_max_iter, "ADMM iteration cap");
    cmd->add_option("--mu0", args.mu0, "Initial ADMM penalty");
    cmd->add_option("--mu-max", args.mu_max, "ADMM penalty cap");
    cmd->add_option("--rho", args.rho, "ADMM penalty growth factor");
    cmd->add_flag("--admm-relative-residuals", args.admm_relative,
                  "Scale ADMM residuals by their target norms");
    cmd->add_option("--seed", args.seed, "Seed for randomized steps");
    cmd->add_option("--normalize", args.normalize_mode,
                    "Rescaling fitted on the training data")
        ->check(CLI::IsMember({"none", "unit-columns", "zscore", "minmax"}));
}

JPlayConfig make_config(const ConfigArgs& args) {
    JPlayConfig cfg;
    cfg.layer_dims = args.layers;
    cfg.alpha = args.alpha;
    cfg.beta = args.beta;
    cfg.gamma = args.gamma;
    cfg.eta = args.eta;
    cfg.zeta = args.zeta;
    cfg.outer_max_iter = args.outer_max_iter;
    cfg.graph_k = args.graph_k;
    cfg.graph_bandwidth = args.graph_bandwidth;
    cfg.per_layer_graph = args.per_layer_graph;
    cfg.supervised_graph = args.supervised_graph;
    cfg.admm.eps = args.admm_eps;
    cfg.admm.max_iter = args.admm_max_iter;
    cfg.admm.mu0 = args.mu0;
    cfg.admm.mu_max = args.mu_max;
    cfg.admm.rho = args.rho;
    cfg.admm.relative_residuals = args.admm_relative;
    cfg.seed = args.seed;
    return cfg;
}

NormalizeMode parse_normalize_mode(const std::string& name) {
    if (name == "none") return NormalizeMode::None;
    if (name == "unit-columns") return NormalizeMode::UnitColumns;
    if (name == "zscore") return NormalizeMode::ZScoreFeatures;
    return NormalizeMode::MinMaxFeatures;
}

std::vector<int> require_labels(const Dataset& ds, const std::string& path) {
    for (int label : ds.labels)
        if (label <= 0)
            throw InputError(path + ": every sample needs a positive class label");
    if (!ds.has_labels()) throw InputError(path + ": no labels found");
    return ds.labels;
}

void print_trace(const TrainReport& report) {
    std::printf("%5s  %16s  %16s  %16s  %16s  %16s\n", "iter", "objective",
                "reconstruction", "prediction", "manifold", "ridge");
    for (const OuterIteration& rec : report.trace)
        std::printf("%5d  %16.8e  %16.8e  %16.8e  %16.8e  %16.8e\n", rec.iteration,
                    rec.objective, rec.terms.reconstruction, rec.terms.prediction,
                    rec.terms.manifold, rec.terms.ridge);
}

std::string trace_csv(const TrainReport& report) {
    std::string out = "iter,objective,objective_after_p,reconstruction,prediction,manifold,ridge\n";
    for (const OuterIteration& rec : report.trace) {
        out += std::to_string(rec.iteration) + ',' + detail::format_shortest(rec.objective) +
               ',' + detail::format_shortest(rec.objective_after_p) + ',' +
               detail::format_shortest(rec.terms.reconstruction) + ',' +
               detail::format_shortest(rec.terms.prediction) + ',' +
               detail::format_shortest(rec.terms.manifold) + ',' +
               detail::format_shortest(rec.terms.ridge) + '\n';
    }
    return out;
}

int cmd_train(const DataArgs& data_args, const ConfigArgs& cfg_args,
              const std::string& out_path, const std::string& trace_path) {
    JPlayConfig cfg = make_config(cfg_args);
    cfg.validate();
    Dataset ds = load_dataset(data_args);
    const std::vector<int> labels = require_labels(ds, data_args.data_path);

    auto [x, norm_params] = normalize(ds.x, parse_normalize_mode(cfg_args.normalize_mode));
    TrainedModel model = fit(x, one_hot(labels, ds.num_classes), cfg);
    model.normalization = norm_params;

    print_trace(model.report);
    save_model(model, out_path);
    if (!trace_path.empty()) detail::write_file_atomic(trace_path, trace_csv(model.report));
    std::printf("model written to %s (%d outer iterations, %s)\n", out_path.c_str(),
                model.report.outer_iterations,
                model.report.converged ? "converged" : "iteration cap reached");
    return 0;
}

int cmd_eval(const std::string& model_path, const DataArgs& data_args,
             const std::string& pred_path, bool by_regression) {
    const TrainedModel model = load_model(model_path);
    Dataset ds = load_dataset(data_args);
    const std::vector<int> truth = require_labels(ds, data_args.data_path);

    const Eigen::MatrixXd x = apply_normalize(model.normalization, ds.x);
    const DataMatrix latent = transform(model, x);
    std::vector<int> pred;
    if (by_regression) {
        // argmax over the regression scores P * X_m
        const Eigen::MatrixXd scores = model.p * latent;
        pred.resize(static_cast<size_t>(scores.cols()));
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            Eigen::Index best;
            scores.col(c).maxCoeff(&best);
            pred[static_cast<size_t>(c)] = static_cast<int>(best) + 1;
        }
    } else {
        pred = nn_classify(model.train_features_latent, model.train_labels, latent);
    }

    if (!pred_path.empty()) {
        std::string out = "sample,predicted\n";
        for (size_t i = 0; i < pred.size(); ++i)
            out += std::to_string(i) + ',' + std::to_string(pred[i]) + '\n';
        detail::write_file_atomic(pred_path, out);
    }
    std::printf("OA: %.4f\n", overall_accuracy(pred, truth));
    return 0;
}

int cmd_gridsearch(const DataArgs& data_args, const ConfigArgs& cfg_args,
                   const std::vector<std::string>& grid_specs, int folds, int jobs,
                   const std::string& out_path) {
    if (grid_specs.empty())
        throw ParameterError("gridsearch: at least one --grid parameter is required");
    std::map<std::string, std::vector<double>> grid;
    const std::vector<double> default_values{1e-2, 1e-1, 1e0, 1e1, 1e2};
    for (const std::string& spec : grid_specs) {
        const size_t eq = spec.find('=');
        const std::string name = spec.substr(0, eq == std::string::npos ? spec.size() : eq);
        std::vector<double> values;
        if (eq == std::string::npos) {
            values = default_values;
        } else {
            size_t start = eq + 1;
            while (start <= spec.size()) {
                size_t comma = spec.find(',', start);
                if (comma == std::string::npos) comma = spec.size();
                double v;
                if (!detail::parse_double(spec.substr(start, comma - start), v))
                    throw ParameterError("gridsearch: bad value in --grid " + spec);
                values.push_back(v);
                start = comma + 1;
            }
        }
        if (grid.count(name))
            throw ParameterError("gridsearch: duplicate --grid parameter " + name);
        grid[name] = values;
    }

    JPlayConfig cfg = make_config(cfg_args);
    cfg.validate();
    Dataset ds = load_dataset(data_args);
    const std::vector<int> labels = require_labels(ds, data_args.data_path);
    auto [x, norm_params] = normalize(ds.x, parse_normalize_mode(cfg_args.normalize_mode));

    const GridSearchResult result =
        grid_search(x, labels, cfg, grid, folds, static_cast<uint64_t>(cfg_args.seed), jobs);

    detail::write_file_atomic(out_path, accuracy_table_csv(result));
    std::string best = "best:";
    for (size_t i = 0; i < result.param_names.size(); ++i)
        best += " " + result.param_names[i] + "=" +
                detail::format_shortest(result.best().values[i]);
    std::printf("%s  mean_accuracy=%s\n", best.c_str(),
                detail::format_shortest(result.best().mean_accuracy).c_str());
    std::printf("table written to %s (%zu cells)\n", out_path.c_str(), result.cells.size());
    return 0;
}

int cmd_export_features(const std::string& model_path, const std::string& out_dir,
                        int height, int width, bool first_layer) {
    if (height < 1 || width < 1)
        throw ParameterError("export-features: height and width must be positive");
    const TrainedModel model = load_model(model_path);
    const auto files = export_feature_images(model, height, width, out_dir, first_layer);
    std::printf("wrote %zu images to %s\n", files.size(), out_dir.c_str());
    return 0;
}

int cmd_synth(int classes, int per_class, int dim, double spread, double noise,
              std::int64_t seed, const std::string& out_path, int train_per_class,
              const std::string& train_out, const std::string& test_out) {
    const Dataset ds =
        synth_blobs(classes, per_class, dim, spread, noise, static_cast<uint64_t>(seed));
    if (!out_path.empty()) {
        save_jpld(ds, out_path);
        std::printf("wrote %lld samples to %s\n",
                    static_cast<long long>(ds.samples()), out_path.c_str());
    }
    if (train_per_class > 0) {
        if (train_out.empty() || test_out.empty())
            throw ParameterError("synth: --train-out and --test-out are required with "
                                 "--train-per-class");
        auto [tr, te] = train_test_split_per_class(ds.labels, train_per_class,
                                                   static_cast<uint64_t>(seed) + 1);
        save_jpld(subset(ds, tr), train_out);
        save_jpld(subset(ds, te), test_out);
        std::printf("wrote split: %zu train to %s, %zu test to %s\n", tr.size(),
                    train_out.c_str(), te.size(), test_out.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"J-Play: joint and progressive linearized subspace learning"};
    app.require_subcommand(1);

    DataArgs train_data, eval_data, grid_data;
    ConfigArgs train_cfg, grid_cfg;
    std::string train_out, train_trace, train_config;
    auto* train = app.add_subcommand("train", "Fit a model and write it to --out");
    train->add_option("--config", train_config, "Config file with key = value lines");
    add_data_options(train, train_data);
    add_config_options(train, train_cfg);
    train->add_option("--out", train_out, "Output model file");
    train->add_option("--trace-csv", train_trace, "Also write the objective trace as CSV");

    std::string eval_model, eval_pred;
    bool eval_by_regression = false;
    auto* eval = app.add_subcommand("eval", "Classify labeled data and print the accuracy");
    eval->add_option("--model", eval_model, "Trained model file")->required();
    add_data_options(eval, eval_data);
    eval->add_option("--pred-csv", eval_pred, "Write per-sample predictions as CSV");
    eval->add_flag("--predict-by-regression", eval_by_regression,
                   "Use argmax of the regression map instead of nearest neighbor");

    std::vector<std::string> grid_specs;
    int grid_folds = 10, grid_jobs = 1;
    std::string grid_out, grid_config;
    auto* grid = app.add_subcommand("gridsearch",
                                    "Cross-validated search over penalty weights");
    grid->add_option("--config", grid_config, "Config file with key = value lines");
    add_data_options(grid, grid_data);
    add_config_options(grid, grid_cfg);
    grid->add_option("--grid", grid_specs,
                     "Parameter grid, e.g. --grid alpha=0.01,0.1,1 (bare name uses "
                     "0.01,0.1,1,10,100); repeatable");
    grid->add_option("--folds", grid_folds, "Cross-validation folds");
    grid->add_option("--jobs", grid_jobs, "Worker threads across grid cells");
    grid->add_option("--out", grid_out, "Output table (CSV)");

    std::string export_model, export_dir;
    int export_h = 0, export_w = 0;
    bool export_first = false;
    auto* exp = app.add_subcommand("export-features",
                                   "Write learned directions as grayscale PGM images");
    exp->add_option("--model", export_model, "Trained model file")->required();
    exp->add_option("--out", export_dir, "Output directory")->required();
    exp->add_option("--height", export_h, "Image height")->required();
    exp->add_option("--width", export_w, "Image width")->required();
    exp->add_flag("--first-layer", export_first, "Also export the first-layer rows");

    int synth_classes = 2, synth_per = 50, synth_dim = 10, synth_train_per = 0;
    double synth_spread = 2.0, synth_noise = 0.5;
    std::int64_t synth_seed = 0;
    std::string synth_out, synth_train_out, synth_test_out;
    auto* synth = app.add_subcommand("synth", "Generate a seeded Gaussian-blob dataset");
    synth->add_option("--classes", synth_classes, "Number of classes");
    synth->add_option("--per-class", synth_per, "Samples per class");
    synth->add_option("--dim", synth_dim, "Feature dimension");
    synth->add_option("--center-spread", synth_spread, "Edge of the center cube");
    synth->add_option("--noise-sigma", synth_noise, "Isotropic noise level");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--out", synth_out, "Output file (.jpld)");
    synth->add_option("--train-per-class", synth_train_per,
                      "Also write a stratified split with this many training samples "
                      "per class");
    synth->add_option("--train-out", synth_train_out, "Training split output (.jpld)");
    synth->add_option("--test-out", synth_test_out, "Test split output (.jpld)");

    const auto require_arg = [](const std::string& value, const char* flag) {
        if (value.empty())
            throw ParameterError(std::string(flag) + " is required");
    };

    try {
        app.parse(argc, argv);
        if (*train) {
            apply_config_file(train, train_config);
            require_arg(train_data.data_path, "--data");
            require_arg(train_out, "--out");
            if (train_cfg.layers.empty()) throw ParameterError("--layers is required");
            return cmd_train(train_data, train_cfg, train_out, train_trace);
        }
        if (*eval) return cmd_eval(eval_model, eval_data, eval_pred, eval_by_regression);
        if (*grid) {
            apply_config_file(grid, grid_config);
            require_arg(grid_data.data_path, "--data");
            require_arg(grid_out, "--out");
            if (grid_cfg.layers.empty()) throw ParameterError("--layers is required");
            return cmd_gridsearch(grid_data, grid_cfg, grid_specs, grid_folds, grid_jobs,
                                  grid_out);
        }
        if (*exp)
            return cmd_export_features(export_model, export_dir, export_h, export_w,
                                       export_first);
        if (*synth)
            return cmd_synth(synth_classes, synth_per, synth_dim, synth_spread, synth_noise,
                             synth_seed, synth_out, synth_train_per, synth_train_out,
                             synth_test_out);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion")
            return app.exit(e);
        std::cerr << "error[config]: " << e.what() << "\n";
        return 2;
    } catch (const jplay::ParameterError& e) {
        std::cerr << "error[config]: " << e.what() << "\n";
        return 2;
    } catch (const jplay::InputError& e) {
        std::cerr << "error[data]: " << e.what() << "\n";
        return 3;
    } catch (const jplay::NumericError& e) {
        std::cerr << "error[numeric]: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
}
