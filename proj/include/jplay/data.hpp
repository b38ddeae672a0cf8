#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <jplay/detail/util.hpp>
#include <jplay/errors.hpp>
#include <jplay/types.hpp>

namespace jplay {

/// A data matrix with optional labels and train/test split. Label indices
/// are 1-based; 0 marks an unlabeled sample.
struct Dataset {
    Eigen::MatrixXd x;  // d x N
    std::vector<int> labels;
    int num_classes = 0;
    std::vector<int> train_indices;
    std::vector<int> test_indices;
    std::vector<std::string> feature_names;

    Eigen::Index dim() const { return x.rows(); }
    Eigen::Index samples() const { return x.cols(); }
    bool has_labels() const {
        return std::any_of(labels.begin(), labels.end(), [](int l) { return l > 0; });
    }
};

enum class Orientation { SamplesAsRows, SamplesAsColumns };

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

inline void append_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void append_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void append_f64(std::string& out, double v) {
    append_u64(out, std::bit_cast<uint64_t>(v));
}

inline uint64_t read_u64(const std::string& buf, size_t offset) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[offset + i])) << (8 * i);
    return v;
}

inline uint32_t read_u32(const std::string& buf, size_t offset) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[offset + i])) << (8 * i);
    return v;
}

}  // namespace detail

/// Parses a numeric CSV. A header row is detected when any cell of the
/// first line is non-numeric. `label_column` (header name, or a 0-based
/// index for headerless files) extracts integer class labels; it requires
/// the samples-as-rows orientation.
inline Dataset load_csv(const std::string& path, Orientation orientation,
                        const std::optional<std::string>& label_column = std::nullopt) {
    const std::string content = detail::read_file(path);
    std::vector<std::string> lines;
    {
        size_t start = 0;
        while (start < content.size()) {
            size_t nl = content.find('\n', start);
            if (nl == std::string::npos) nl = content.size();
            std::string line = content.substr(start, nl - start);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!detail::trim(line).empty()) lines.push_back(std::move(line));
            start = nl + 1;
        }
    }
    if (lines.empty()) throw FormatError(path + ": empty file");

    std::vector<std::string> first = detail::split_csv_line(lines[0]);
    const size_t width = first.size();
    bool has_header = false;
    for (const auto& cell : first) {
        double v;
        if (!detail::parse_double(cell, v)) {
            has_header = true;
            break;
        }
    }

    std::optional<size_t> label_idx;
    if (label_column) {
        if (orientation != Orientation::SamplesAsRows)
            throw ParameterError(path + ": a label column requires samples-as-rows");
        if (has_header) {
            for (size_t c = 0; c < first.size(); ++c)
                if (first[c] == *label_column) label_idx = c;
        }
        if (!label_idx) {
            try {
                size_t pos = 0;
                const long idx = std::stol(*label_column, &pos);
                if (pos == label_column->size() && idx >= 0 &&
                    static_cast<size_t>(idx) < width)
                    label_idx = static_cast<size_t>(idx);
            } catch (const std::exception&) {
            }
        }
        if (!label_idx)
            throw ParameterError(path + ": label column '" + *label_column + "' not found");
    }

    const size_t first_data_line = has_header ? 1 : 0;
    const size_t rows = lines.size() - first_data_line;
    if (rows == 0) throw FormatError(path + ": no data rows");

    Eigen::MatrixXd table(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    std::vector<int> labels;
    for (size_t r = 0; r < rows; ++r) {
        const size_t line_no = first_data_line + r + 1;  // 1-based, for messages
        std::vector<std::string> cells = detail::split_csv_line(lines[first_data_line + r]);
        if (cells.size() != width)
            throw FormatError(path + ": line " + std::to_string(line_no) + ": expected " +
                              std::to_string(width) + " cells, got " +
                              std::to_string(cells.size()));
        for (size_t c = 0; c < width; ++c) {
            double v;
            if (!detail::parse_double(cells[c], v))
                throw FormatError(path + ": line " + std::to_string(line_no) +
                                  ": non-numeric cell '" + cells[c] + "'");
            if (!std::isfinite(v))
                throw FormatError(path + ": line " + std::to_string(line_no) +
                                  ": non-finite value");
            table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
        if (label_idx) {
            const double v = table(static_cast<Eigen::Index>(r),
                                   static_cast<Eigen::Index>(*label_idx));
            if (v != std::floor(v) || v < 0.0)
                throw FormatError(path + ": line " + std::to_string(line_no) +
                                  ": label must be a nonnegative integer");
            labels.push_back(static_cast<int>(v));
        }
    }

    Dataset ds;
    if (label_idx) {
        Eigen::MatrixXd features(table.rows(), table.cols() - 1);
        Eigen::Index out_c = 0;
        for (Eigen::Index c = 0; c < table.cols(); ++c) {
            if (static_cast<size_t>(c) == *label_idx) continue;
            features.col(out_c++) = table.col(c);
        }
        ds.x = features.transpose();
        ds.labels = std::move(labels);
        if (has_header)
            for (size_t c = 0; c < first.size(); ++c)
                if (c != *label_idx) ds.feature_names.push_back(first[c]);
    } else {
        ds.x = orientation == Orientation::SamplesAsRows ? table.transpose() : table;
        ds.labels.assign(static_cast<size_t>(ds.x.cols()), 0);
        if (has_header && orientation == Orientation::SamplesAsRows)
            ds.feature_names = first;
    }
    ds.num_classes = ds.labels.empty()
                         ? 0
                         : *std::max_element(ds.labels.begin(), ds.labels.end());
    return ds;
}

/// Writes samples as rows, one feature per column, shortest exact decimal
/// representation. Labels, when present, go to a trailing "cls" column.
inline void save_csv(const Dataset& ds, const std::string& path) {
    std::string out;
    const Eigen::Index d = ds.dim();
    const Eigen::Index n = ds.samples();
    const bool with_labels = ds.has_labels();
    for (Eigen::Index f = 0; f < d; ++f) {
        if (f) out += ',';
        out += static_cast<size_t>(f) < ds.feature_names.size()
                   ? ds.feature_names[static_cast<size_t>(f)]
                   : "f" + std::to_string(f);
    }
    if (with_labels) out += ",cls";
    out += '\n';
    for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index f = 0; f < d; ++f) {
            if (f) out += ',';
            out += detail::format_shortest(ds.x(f, s));
        }
        if (with_labels) {
            out += ',';
            out += std::to_string(ds.labels[static_cast<size_t>(s)]);
        }
        out += '\n';
    }
    detail::write_file_atomic(path, out);
}

// JPLD binary layout: "JPLD", version byte 1, d and N as little-endian
// uint64, d*N IEEE-754 doubles column-major, N little-endian uint32 labels
// (0 = unlabeled).
inline void save_jpld(const Dataset& ds, const std::string& path) {
    const auto d = static_cast<uint64_t>(ds.dim());
    const auto n = static_cast<uint64_t>(ds.samples());
    if (ds.labels.size() != n) throw ShapeError("save_jpld: label count must equal N");
    std::string out;
    out.reserve(21 + 8 * d * n + 4 * n);
    out += "JPLD";
    out.push_back(static_cast<char>(1));
    detail::append_u64(out, d);
    detail::append_u64(out, n);
    for (Eigen::Index c = 0; c < ds.x.cols(); ++c)
        for (Eigen::Index r = 0; r < ds.x.rows(); ++r)
            detail::append_f64(out, ds.x(r, c));
    for (int label : ds.labels) {
        if (label < 0) throw InputError("save_jpld: negative label");
        detail::append_u32(out, static_cast<uint32_t>(label));
    }
    detail::write_file_atomic(path, out);
}

inline Dataset load_jpld(const std::string& path) {
    const std::string buf = detail::read_file(path);
    if (buf.size() < 4 || buf.compare(0, 4, "JPLD") != 0)
        throw FormatError(path + ": bad magic at offset 0");
    if (buf.size() < 5) throw FormatError(path + ": truncated at offset 4");
    if (buf[4] != 1)
        throw FormatError(path + ": unsupported version at offset 4");
    if (buf.size() < 21) throw FormatError(path + ": truncated at offset 5");
    const uint64_t d = detail::read_u64(buf, 5);
    const uint64_t n = detail::read_u64(buf, 13);
    if (d == 0 || n == 0) throw FormatError(path + ": zero dimension at offset 5");
    if (d > (1u << 30) || n > (1u << 30) || d * n > (1u << 31))
        throw FormatError(path + ": implausible dimensions at offset 5");
    const size_t values_end = 21 + 8 * d * n;
    const size_t expected = values_end + 4 * n;
    if (buf.size() < expected)
        throw FormatError(path + ": truncated at offset " + std::to_string(buf.size()));
    if (buf.size() > expected)
        throw FormatError(path + ": trailing bytes at offset " + std::to_string(expected));

    Dataset ds;
    ds.x.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    size_t off = 21;
    for (Eigen::Index c = 0; c < ds.x.cols(); ++c)
        for (Eigen::Index r = 0; r < ds.x.rows(); ++r, off += 8)
            ds.x(r, c) = std::bit_cast<double>(detail::read_u64(buf, off));
    if (!ds.x.allFinite()) throw InputError(path + ": non-finite values in data matrix");
    ds.labels.resize(n);
    for (size_t i = 0; i < n; ++i, off += 4) {
        const uint32_t label = detail::read_u32(buf, off);
        if (label > static_cast<uint32_t>(std::numeric_limits<int>::max()))
            throw FormatError(path + ": label out of range at offset " + std::to_string(off));
        ds.labels[i] = static_cast<int>(label);
    }
    ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end());
    return ds;
}

enum class NormalizeMode { None, UnitColumns, ZScoreFeatures, MinMaxFeatures };

/// Affine rescaling fitted on training data and replayable on test data.
struct NormalizeParams {
    NormalizeMode mode = NormalizeMode::None;
    double column_scale = 1.0;             // unit-columns: global divisor
    Eigen::VectorXd shift, scale;          // per-feature: x' = (x - shift) / scale
    std::vector<int> degenerate_features;  // zero-variance / zero-range rows
};

inline Eigen::MatrixXd apply_normalize(const NormalizeParams& p, const Eigen::MatrixXd& x) {
    switch (p.mode) {
        case NormalizeMode::None:
            return x;
        case NormalizeMode::UnitColumns:
            return x / p.column_scale;
        default:
            if (p.shift.size() != x.rows())
                throw ShapeError("apply_normalize: feature count mismatch");
            return (x.colwise() - p.shift).array().colwise() / p.scale.array();
    }
}

/// Fits the chosen rescaling on `x` and returns the rescaled matrix with
/// the parameters. unit-columns divides everything by the largest column
/// norm; zscore uses the population denominator N; degenerate features
/// (zero variance or zero range) map to 0 and are flagged.
inline std::pair<Eigen::MatrixXd, NormalizeParams> normalize(const Eigen::MatrixXd& x,
                                                             NormalizeMode mode) {
    NormalizeParams p;
    p.mode = mode;
    switch (mode) {
        case NormalizeMode::None:
            return {x, p};
        case NormalizeMode::UnitColumns: {
            const double max_norm = x.colwise().norm().maxCoeff();
            p.column_scale = max_norm > 0.0 ? max_norm : 1.0;
            break;
        }
        case NormalizeMode::ZScoreFeatures: {
            p.shift = x.rowwise().mean();
            const Eigen::MatrixXd centered = x.colwise() - p.shift;
            p.scale = (centered.array().square().rowwise().sum() /
                       static_cast<double>(x.cols()))
                          .sqrt();
            for (Eigen::Index f = 0; f < p.scale.size(); ++f)
                if (p.scale(f) == 0.0) {
                    p.scale(f) = 1.0;
                    p.degenerate_features.push_back(static_cast<int>(f));
                }
            break;
        }
        case NormalizeMode::MinMaxFeatures: {
            p.shift = x.rowwise().minCoeff();
            p.scale = x.rowwise().maxCoeff() - p.shift;
            for (Eigen::Index f = 0; f < p.scale.size(); ++f)
                if (p.scale(f) == 0.0) {
                    p.scale(f) = 1.0;
                    p.degenerate_features.push_back(static_cast<int>(f));
                }
            break;
        }
    }
    return {apply_normalize(p, x), p};
}

/// Seeded Gaussian blobs: class centers drawn uniformly from the cube
/// [0, center_spread]^d (nonnegative, like the image and spectral data the
/// model targets), samples = center + isotropic noise. Samples are ordered
/// class-major with labels 1..classes.
inline Dataset synth_blobs(int classes, int per_class, int d, double center_spread,
                           double noise_sigma, uint64_t seed) {
    if (classes < 2) throw ParameterError("synth_blobs: need at least 2 classes");
    if (per_class < 1) throw ParameterError("synth_blobs: per_class must be positive");
    if (d < 1) throw ParameterError("synth_blobs: dimension must be positive");
    if (center_spread < 0.0 || noise_sigma < 0.0)
        throw ParameterError("synth_blobs: spread and noise must be nonnegative");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::MatrixXd centers(d, classes);
    for (int c = 0; c < classes; ++c)
        for (int f = 0; f < d; ++f) centers(f, c) = center_spread * unif(rng);

    Dataset ds;
    ds.x.resize(d, static_cast<Eigen::Index>(classes) * per_class);
    ds.labels.resize(static_cast<size_t>(classes) * per_class);
    Eigen::Index col = 0;
    for (int c = 0; c < classes; ++c)
        for (int s = 0; s < per_class; ++s, ++col) {
            for (int f = 0; f < d; ++f)
                ds.x(f, col) = centers(f, c) + noise_sigma * gauss(rng);
            ds.labels[static_cast<size_t>(col)] = c + 1;
        }
    ds.num_classes = classes;
    return ds;
}

/// Seeded stratified split: per class, shuffles the sample indices and
/// keeps the first `train_per_class` for training, the rest for testing.
inline std::pair<std::vector<int>, std::vector<int>> train_test_split_per_class(
    const std::vector<int>& labels, int train_per_class, uint64_t seed) {
    if (train_per_class < 1)
        throw ParameterError("train_test_split: train_per_class must be positive");
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    std::mt19937_64 rng(seed);
    std::vector<int> train, test;
    for (int c : classes) {
        if (c <= 0) throw InputError("train_test_split: all samples must be labeled");
        std::vector<int> idx;
        for (size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) idx.push_back(static_cast<int>(i));
        if (static_cast<int>(idx.size()) <= train_per_class)
            throw InputError("train_test_split: class " + std::to_string(c) +
                             " has too few samples");
        std::shuffle(idx.begin(), idx.end(), rng);
        train.insert(train.end(), idx.begin(), idx.begin() + train_per_class);
        test.insert(test.end(), idx.begin() + train_per_class, idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

/// Column subset of a dataset.
inline Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
    Dataset out;
    out.x.resize(ds.dim(), static_cast<Eigen::Index>(indices.size()));
    out.labels.resize(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        const int idx = indices[i];
        if (idx < 0 || idx >= ds.samples())
            throw ParameterError("subset: index out of range");
        out.x.col(static_cast<Eigen::Index>(i)) = ds.x.col(idx);
        out.labels[i] = ds.labels[static_cast<size_t>(idx)];
    }
    out.num_classes = ds.num_classes;
    out.feature_names = ds.feature_names;
    return out;
}

}  // namespace jplay
