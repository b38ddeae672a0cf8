#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <jplay/detail/util.hpp>
#include <jplay/errors.hpp>
#include <jplay/jplay.hpp>
#include <jplay/model.hpp>

namespace jplay {

/// Min-max scales a learned direction to 8-bit gray levels, row-major
/// h x w. A constant row has no range and maps to all zeros.
inline std::vector<uint8_t> render_feature_row(const Eigen::VectorXd& row, int height,
                                               int width) {
    if (height < 1 || width < 1)
        throw ParameterError("render_feature_row: image size must be positive");
    if (row.size() != static_cast<Eigen::Index>(height) * width)
        throw ParameterError("render_feature_row: row length " + std::to_string(row.size()) +
                             " does not equal " + std::to_string(height) + "x" +
                             std::to_string(width));
    const double lo = row.minCoeff();
    const double hi = row.maxCoeff();
    std::vector<uint8_t> pixels(static_cast<size_t>(row.size()), 0);
    if (hi > lo) {
        for (Eigen::Index i = 0; i < row.size(); ++i)
            pixels[static_cast<size_t>(i)] =
                static_cast<uint8_t>(std::lround((row(i) - lo) / (hi - lo) * 255.0));
    }
    return pixels;
}

/// Binary PGM (P5), 8-bit.
inline std::string encode_pgm(const std::vector<uint8_t>& pixels, int height, int width) {
    if (pixels.size() != static_cast<size_t>(height) * static_cast<size_t>(width))
        throw ParameterError("encode_pgm: pixel count does not match dimensions");
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    return out;
}

/// Writes every row of the composite map Theta_m ... Theta_1 (and, when
/// requested, of Theta_1 alone) as an indexed grayscale PGM under `dir`.
/// Returns the written file paths.
inline std::vector<std::string> export_feature_images(const TrainedModel& model, int height,
                                                      int width, const std::string& dir,
                                                      bool include_first_layer = false) {
    if (static_cast<long long>(height) * width != model.input_dim)
        throw ParameterError("export_feature_images: height*width = " +
                             std::to_string(static_cast<long long>(height) * width) +
                             " does not equal the input dimension " +
                             std::to_string(model.input_dim));
    std::filesystem::create_directories(dir);

    std::vector<std::string> written;
    const auto write_rows = [&](const Eigen::MatrixXd& m, const char* prefix) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%03d.pgm", prefix, static_cast<int>(r));
            const std::string path = (std::filesystem::path(dir) / name).string();
            detail::write_file_atomic(
                path, encode_pgm(render_feature_row(m.row(r).transpose(), height, width),
                                 height, width));
            written.push_back(path);
        }
    };
    write_rows(composite_projection(model), "feature");
    if (include_first_layer && model.depth() > 1) write_rows(model.thetas.front(), "layer1");
    return written;
}

}  // namespace jplay
