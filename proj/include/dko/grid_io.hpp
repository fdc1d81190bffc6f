#pragma once

#include "dko/dmd.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dko::grid {

enum class Format { csv_frames_dir, flat_binary };
enum class NanPolicy { zero, frame_mean, error };

Format parse_format(const std::string& s);
std::string format_name(Format f);
NanPolicy parse_nan_policy(const std::string& s);
std::string nan_policy_name(NanPolicy p);

// T x R x C intensity frames, frame-major then row-major.
struct RasterSequence {
    std::size_t frames = 0, rows = 0, cols = 0;
    std::vector<double> data;
    double cadence_seconds = 3600.0;
    NanPolicy nan_policy = NanPolicy::zero;
    std::size_t nan_replaced = 0;

    double at(std::size_t t, std::size_t r, std::size_t c) const { return data[(t * rows + r) * cols + c]; }
    std::span<const double> frame(std::size_t t) const { return {data.data() + t * rows * cols, rows * cols}; }
};

// Reads `dir/manifest.txt` (key=value: rows, cols, frames, cadence_seconds,
// nan_policy, format) and then either `frame_%06d.csv` files or `frames.bin`.
RasterSequence ingest(const std::filesystem::path& dir, Format format);
// Writes a manifest plus frames in the given layout.
void write_raster(const std::filesystem::path& dir, const RasterSequence& r, Format format);

// Block averages on a pr x pc patch grid; patch p = block_row * pc + block_col.
struct PatchSeries {
    std::size_t pr = 0, pc = 0;
    Eigen::MatrixXd vectors;             // T x P
    std::vector<std::size_t> row_edges;  // pr + 1 pixel boundaries
    std::vector<std::size_t> col_edges;  // pc + 1 pixel boundaries

    std::size_t patches() const noexcept { return pr * pc; }
    std::size_t block_pixels(std::size_t p) const;
};

// Even partition with remainder pixels assigned to the trailing blocks.
std::vector<std::size_t> block_edges(std::size_t pixels, std::size_t blocks);
PatchSeries coarse_grain(const RasterSequence& r, std::size_t pr, std::size_t pc);
PatchSeries series_from_vectors(const Eigen::MatrixXd& vectors);

struct GridForecast {
    KoopmanMatrix koopman;
    // Row l is the forecast l steps past the last training frame; row 0 is
    // that training frame itself.
    Eigen::MatrixXd predicted;
    // Relative L2 error of rows 1..horizon against the held-out frames.
    std::vector<double> errors_per_step;
};

// Requires train_frames >= 2 and train_frames + horizon <= T.
GridForecast forecast_grid(const PatchSeries& series, std::size_t train_frames, std::size_t horizon,
                           double svd_cutoff = 1e-10);

}  // namespace dko::grid
