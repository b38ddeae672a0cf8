#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include <jplay/detail/util.hpp>
#include <jplay/errors.hpp>
#include <jplay/model.hpp>

namespace jplay {

namespace detail {

// The writer emits the document by hand so every float carries 17
// significant digits and repeated saves are byte-identical.

inline std::string json_double(double v) { return format_full(v); }

inline std::string json_vector(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += json_double(v(i));
    }
    return out + "]";
}

inline std::string json_matrix(const Eigen::MatrixXd& m, const std::string& indent) {
    std::string out = "[";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out += r ? ",\n" : "\n";
        out += indent + "  [";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ", ";
            out += json_double(m(r, c));
        }
        out += "]";
    }
    return out + "\n" + indent + "]";
}

template <typename T>
inline std::string json_int_array(const std::vector<T>& v) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(v[i]);
    }
    return out + "]";
}

inline const char* normalize_mode_name(NormalizeMode mode) {
    switch (mode) {
        case NormalizeMode::None: return "none";
        case NormalizeMode::UnitColumns: return "unit-columns";
        case NormalizeMode::ZScoreFeatures: return "zscore";
        case NormalizeMode::MinMaxFeatures: return "minmax";
    }
    return "none";
}

inline NormalizeMode normalize_mode_from_name(const std::string& name) {
    if (name == "none") return NormalizeMode::None;
    if (name == "unit-columns") return NormalizeMode::UnitColumns;
    if (name == "zscore") return NormalizeMode::ZScoreFeatures;
    if (name == "minmax") return NormalizeMode::MinMaxFeatures;
    throw FormatError("model file: unknown normalization mode '" + name + "'");
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw FormatError("model file: expected a matrix");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw FormatError("model file: ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row.at(static_cast<size_t>(c)).get<double>();
    }
    return m;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = j.at(static_cast<size_t>(i)).get<double>();
    return v;
}

}  // namespace detail

inline constexpr int kModelFormatVersion = 1;

inline std::string serialize_model(const TrainedModel& model) {
    using detail::json_double;
    const JPlayConfig& cfg = model.config;
    std::string out;
    out += "{\n";
    out += "  \"format\": \"jplay-model\",\n";
    out += "  \"version\": " + std::to_string(kModelFormatVersion) + ",\n";
    out += "  \"input_dim\": " + std::to_string(model.input_dim) + ",\n";
    out += "  \"num_classes\": " + std::to_string(model.num_classes) + ",\n";
    out += "  \"layer_dims\": " + detail::json_int_array(cfg.layer_dims) + ",\n";

    out += "  \"config\": {\n";
    out += "    \"alpha\": " + json_double(cfg.alpha) + ",\n";
    out += "    \"beta\": " + json_double(cfg.beta) + ",\n";
    out += "    \"gamma\": " + json_double(cfg.gamma) + ",\n";
    out += "    \"eta\": " + json_double(cfg.eta) + ",\n";
    out += "    \"zeta\": " + json_double(cfg.zeta) + ",\n";
    out += "    \"outer_max_iter\": " + std::to_string(cfg.outer_max_iter) + ",\n";
    out += "    \"graph_k\": " + std::to_string(cfg.graph_k) + ",\n";
    out += "    \"graph_bandwidth\": " + json_double(cfg.graph_bandwidth) + ",\n";
    out += "    \"per_layer_graph\": " + std::string(cfg.per_layer_graph ? "true" : "false") +
           ",\n";
    out += "    \"supervised_graph\": " +
           std::string(cfg.supervised_graph ? "true" : "false") + ",\n";
    out += "    \"seed\": " + std::to_string(cfg.seed) + ",\n";
    out += "    \"admm\": {\n";
    out += "      \"eta\": " + json_double(cfg.admm.eta) + ",\n";
    out += "      \"mu0\": " + json_double(cfg.admm.mu0) + ",\n";
    out += "      \"mu_max\": " + json_double(cfg.admm.mu_max) + ",\n";
    out += "      \"rho\": " + json_double(cfg.admm.rho) + ",\n";
    out += "      \"eps\": " + json_double(cfg.admm.eps) + ",\n";
    out += "      \"max_iter\": " + std::to_string(cfg.admm.max_iter) + ",\n";
    out += "      \"relative_residuals\": " +
           std::string(cfg.admm.relative_residuals ? "true" : "false") + "\n";
    out += "    }\n";
    out += "  },\n";

    out += "  \"normalization\": {\n";
    out += "    \"mode\": \"" + std::string(detail::normalize_mode_name(model.normalization.mode)) +
           "\",\n";
    out += "    \"column_scale\": " + json_double(model.normalization.column_scale) + ",\n";
    out += "    \"shift\": " + detail::json_vector(model.normalization.shift) + ",\n";
    out += "    \"scale\": " + detail::json_vector(model.normalization.scale) + ",\n";
    out += "    \"degenerate_features\": " +
           detail::json_int_array(model.normalization.degenerate_features) + "\n";
    out += "  },\n";

    out += "  \"thetas\": [\n";
    for (size_t l = 0; l < model.thetas.size(); ++l) {
        out += "    " + detail::json_matrix(model.thetas[l], "    ");
        out += l + 1 < model.thetas.size() ? ",\n" : "\n";
    }
    out += "  ],\n";
    out += "  \"p\": " + detail::json_matrix(model.p, "  ") + ",\n";
    out += "  \"train_features_latent\": " +
           detail::json_matrix(model.train_features_latent, "  ") + ",\n";
    out += "  \"train_labels\": " + detail::json_int_array(model.train_labels) + ",\n";

    out += "  \"report\": {\n";
    out += "    \"outer_iterations\": " + std::to_string(model.report.outer_iterations) +
           ",\n";
    out += "    \"converged\": " + std::string(model.report.converged ? "true" : "false") +
           ",\n";
    out += "    \"pretrain\": [";
    for (size_t l = 0; l < model.report.pretrain.size(); ++l) {
        const ConvergenceReport& r = model.report.pretrain[l];
        if (l) out += ", ";
        out += "{\"iterations\": " + std::to_string(r.iterations) +
               ", \"converged\": " + (r.converged ? "true" : "false") +
               ", \"residuals\": [" + json_double(r.residuals[0]) + ", " +
               json_double(r.residuals[1]) + ", " + json_double(r.residuals[2]) + ", " +
               json_double(r.residuals[3]) + "]}";
    }
    out += "],\n";
    out += "    \"trace\": [\n";
    for (size_t i = 0; i < model.report.trace.size(); ++i) {
        const OuterIteration& rec = model.report.trace[i];
        out += "      {\"iteration\": " + std::to_string(rec.iteration) +
               ", \"objective\": " + json_double(rec.objective) +
               ", \"objective_after_p\": " + json_double(rec.objective_after_p) +
               ", \"reconstruction\": " + json_double(rec.terms.reconstruction) +
               ", \"prediction\": " + json_double(rec.terms.prediction) +
               ", \"manifold\": " + json_double(rec.terms.manifold) +
               ", \"ridge\": " + json_double(rec.terms.ridge) + "}";
        out += i + 1 < model.report.trace.size() ? ",\n" : "\n";
    }
    out += "    ]\n";
    out += "  }\n";
    out += "}\n";
    return out;
}

inline void save_model(const TrainedModel& model, const std::string& path) {
    detail::write_file_atomic(path, serialize_model(model));
}

inline TrainedModel deserialize_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "jplay-model")
            throw FormatError("model file: not a jplay model");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw FormatError("model file: unsupported version");

        TrainedModel m;
        m.input_dim = j.at("input_dim").get<int>();
        m.num_classes = j.at("num_classes").get<int>();

        const auto& jc = j.at("config");
        JPlayConfig& cfg = m.config;
        cfg.layer_dims = j.at("layer_dims").get<std::vector<int>>();
        cfg.alpha = jc.at("alpha").get<double>();
        cfg.beta = jc.at("beta").get<double>();
        cfg.gamma = jc.at("gamma").get<double>();
        cfg.eta = jc.at("eta").get<double>();
        cfg.zeta = jc.at("zeta").get<double>();
        cfg.outer_max_iter = jc.at("outer_max_iter").get<int>();
        cfg.graph_k = jc.at("graph_k").get<int>();
        cfg.graph_bandwidth = jc.at("graph_bandwidth").get<double>();
        cfg.per_layer_graph = jc.at("per_layer_graph").get<bool>();
        cfg.supervised_graph = jc.at("supervised_graph").get<bool>();
        cfg.seed = jc.at("seed").get<std::int64_t>();
        const auto& ja = jc.at("admm");
        cfg.admm.eta = ja.at("eta").get<double>();
        cfg.admm.mu0 = ja.at("mu0").get<double>();
        cfg.admm.mu_max = ja.at("mu_max").get<double>();
        cfg.admm.rho = ja.at("rho").get<double>();
        cfg.admm.eps = ja.at("eps").get<double>();
        cfg.admm.max_iter = ja.at("max_iter").get<int>();
        cfg.admm.relative_residuals = ja.at("relative_residuals").get<bool>();

        const auto& jn = j.at("normalization");
        m.normalization.mode =
            detail::normalize_mode_from_name(jn.at("mode").get<std::string>());
        m.normalization.column_scale = jn.at("column_scale").get<double>();
        m.normalization.shift = detail::vector_from_json(jn.at("shift"));
        m.normalization.scale = detail::vector_from_json(jn.at("scale"));
        m.normalization.degenerate_features =
            jn.at("degenerate_features").get<std::vector<int>>();

        for (const auto& jt : j.at("thetas")) m.thetas.push_back(detail::matrix_from_json(jt));
        m.p = detail::matrix_from_json(j.at("p"));
        m.train_features_latent = detail::matrix_from_json(j.at("train_features_latent"));
        m.train_labels = j.at("train_labels").get<std::vector<int>>();

        const auto& jr = j.at("report");
        m.report.outer_iterations = jr.at("outer_iterations").get<int>();
        m.report.converged = jr.at("converged").get<bool>();
        for (const auto& jp : jr.at("pretrain")) {
            ConvergenceReport r;
            r.iterations = jp.at("iterations").get<int>();
            r.converged = jp.at("converged").get<bool>();
            const auto& res = jp.at("residuals");
            for (size_t i = 0; i < 4; ++i) r.residuals[i] = res.at(i).get<double>();
            m.report.pretrain.push_back(r);
        }
        for (const auto& jt : jr.at("trace")) {
            OuterIteration rec;
            rec.iteration = jt.at("iteration").get<int>();
            rec.objective = jt.at("objective").get<double>();
            rec.objective_after_p = jt.at("objective_after_p").get<double>();
            rec.terms.reconstruction = jt.at("reconstruction").get<double>();
            rec.terms.prediction = jt.at("prediction").get<double>();
            rec.terms.manifold = jt.at("manifold").get<double>();
            rec.terms.ridge = jt.at("ridge").get<double>();
            m.report.trace.push_back(rec);
        }

        if (m.thetas.empty()) throw FormatError("model file: no projection layers");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file: missing or malformed field: ") + e.what());
    }
}

inline TrainedModel load_model(const std::string& path) {
    return deserialize_model(detail::read_file(path));
}

}  // namespace jplay
