#include "dko/grid_io.hpp"

#include "dko/errors.hpp"
#include "dko/io.hpp"
#include "dko/kernels.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dko::grid {

namespace fs = std::filesystem;

Format parse_format(const std::string& s) {
    if (s == "csv_frames_dir") return Format::csv_frames_dir;
    if (s == "flat_binary") return Format::flat_binary;
    throw FormatError("unknown raster format '" + s + "'");
}

std::string format_name(Format f) { return f == Format::csv_frames_dir ? "csv_frames_dir" : "flat_binary"; }

NanPolicy parse_nan_policy(const std::string& s) {
    if (s == "zero") return NanPolicy::zero;
    if (s == "frame_mean") return NanPolicy::frame_mean;
    if (s == "error") return NanPolicy::error;
    throw FormatError("unknown nan_policy '" + s + "'");
}

std::string nan_policy_name(NanPolicy p) {
    switch (p) {
        case NanPolicy::zero: return "zero";
        case NanPolicy::frame_mean: return "frame_mean";
        case NanPolicy::error: return "error";
    }
    return {};
}

namespace {

std::string frame_name(std::size_t t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.csv", t);
    return buf;
}

std::map<std::string, std::string> read_manifest(const fs::path& dir) {
    const fs::path path = dir / "manifest.txt";
    if (!fs::exists(path)) throw FormatError(dir.string() + ": missing manifest.txt");
    std::istringstream in(io::read_text(path));
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto t = io::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw FormatError(path.string() + ": expected key=value, got '" + std::string(t) + "'");
        kv[std::string(io::trim(t.substr(0, eq)))] = std::string(io::trim(t.substr(eq + 1)));
    }
    return kv;
}

std::size_t manifest_size(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("manifest does not declare '" + key + "'");
    const double v = io::parse_double(it->second);
    if (!(v >= 1.0) || v != std::floor(v)) throw FormatError("manifest '" + key + "' must be a positive integer");
    return static_cast<std::size_t>(v);
}

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

void apply_nan_policy(RasterSequence& r) {
    const std::size_t px = r.rows * r.cols;
    for (std::size_t t = 0; t < r.frames; ++t) {
        double* f = r.data.data() + t * px;
        double fill = 0.0;
        if (r.nan_policy == NanPolicy::frame_mean) {
            double s = 0.0;
            std::size_t n = 0;
            for (std::size_t i = 0; i < px; ++i)
                if (std::isfinite(f[i])) {
                    s += f[i];
                    ++n;
                }
            fill = n ? s / static_cast<double>(n) : 0.0;
        }
        for (std::size_t i = 0; i < px; ++i) {
            if (std::isfinite(f[i])) continue;
            if (r.nan_policy == NanPolicy::error)
                throw FormatError("non-finite pixel in frame " + std::to_string(t) + " at index " + std::to_string(i));
            f[i] = fill;
            ++r.nan_replaced;
        }
    }
}

}  // namespace

RasterSequence ingest(const fs::path& dir, Format format) {
    const auto kv = read_manifest(dir);
    RasterSequence r;
    r.rows = manifest_size(kv, "rows");
    r.cols = manifest_size(kv, "cols");
    r.frames = manifest_size(kv, "frames");
    if (const auto it = kv.find("cadence_seconds"); it != kv.end()) r.cadence_seconds = io::parse_double(it->second);
    if (const auto it = kv.find("nan_policy"); it != kv.end()) r.nan_policy = parse_nan_policy(it->second);
    if (const auto it = kv.find("format"); it != kv.end() && parse_format(it->second) != format)
        throw FormatError(dir.string() + ": manifest declares format " + it->second);
    const std::size_t px = r.rows * r.cols;
    r.data.assign(r.frames * px, 0.0);

    if (format == Format::csv_frames_dir) {
        for (std::size_t t = 0; t < r.frames; ++t) {
            const fs::path path = dir / frame_name(t);
            if (!fs::exists(path)) throw FormatError(dir.string() + ": missing frame " + path.filename().string());
            std::istringstream in(io::read_text(path));
            std::string line;
            std::size_t row = 0;
            while (std::getline(in, line)) {
                if (io::trim(line).empty()) continue;
                if (row >= r.rows) throw FormatError(path.string() + ": more rows than declared");
                const auto cells = io::split(line, ',');
                if (cells.size() != r.cols)
                    throw FormatError(path.string() + ": ragged row " + std::to_string(row + 1));
                for (std::size_t c = 0; c < r.cols; ++c) {
                    const auto cell = io::trim(cells[c]);
                    r.data[t * px + row * r.cols + c] =
                        (cell == "nan" || cell == "NaN" || cell.empty()) ? std::nan("") : io::parse_double(cell);
                }
                ++row;
            }
            if (row != r.rows) throw FormatError(path.string() + ": fewer rows than declared");
        }
    } else {
        const fs::path path = dir / "frames.bin";
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError(dir.string() + ": missing frames.bin");
        std::uint64_t dims[3];
        in.read(reinterpret_cast<char*>(dims), sizeof dims);
        if (!in) throw FormatError(path.string() + ": truncated header");
        for (auto& d : dims) d = to_little(d);
        if (dims[0] != r.frames || dims[1] != r.rows || dims[2] != r.cols)
            throw FormatError(path.string() + ": header dimensions disagree with manifest");
        in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(r.data.size() * sizeof(double)));
        if (!in) throw FormatError(path.string() + ": missing frames (file truncated)");
        for (auto& v : r.data) v = to_little(v);
    }
    apply_nan_policy(r);
    return r;
}

void write_raster(const fs::path& dir, const RasterSequence& r, Format format) {
    fs::create_directories(dir);
    std::ostringstream man;
    man << "rows=" << r.rows << "\ncols=" << r.cols << "\nframes=" << r.frames
        << "\ncadence_seconds=" << io::format_double(r.cadence_seconds) << "\nnan_policy=" << nan_policy_name(r.nan_policy)
        << "\nformat=" << format_name(format) << '\n';
    io::write_text(dir / "manifest.txt", man.str());
    if (format == Format::csv_frames_dir) {
        for (std::size_t t = 0; t < r.frames; ++t) {
            std::ostringstream out;
            for (std::size_t row = 0; row < r.rows; ++row) {
                for (std::size_t c = 0; c < r.cols; ++c) {
                    if (c) out << ',';
                    out << io::format_double(r.at(t, row, c));
                }
                out << '\n';
            }
            io::write_text(dir / frame_name(t), out.str());
        }
    } else {
        std::ofstream out(dir / "frames.bin", std::ios::binary);
        const std::uint64_t dims[3] = {to_little<std::uint64_t>(r.frames), to_little<std::uint64_t>(r.rows),
                                       to_little<std::uint64_t>(r.cols)};
        out.write(reinterpret_cast<const char*>(dims), sizeof dims);
        for (double v : r.data) {
            const double le = to_little(v);
            out.write(reinterpret_cast<const char*>(&le), sizeof le);
        }
        if (!out) throw FormatError("failed writing " + (dir / "frames.bin").string());
    }
}

std::vector<std::size_t> block_edges(std::size_t pixels, std::size_t blocks) {
    if (blocks == 0) throw std::invalid_argument("patch count must be >= 1");
    if (blocks > pixels) throw std::invalid_argument("more patches than pixels");
    const std::size_t base = pixels / blocks, rem = pixels % blocks;
    std::vector<std::size_t> edges{0};
    for (std::size_t b = 0; b < blocks; ++b) edges.push_back(edges.back() + base + (b >= blocks - rem ? 1 : 0));
    return edges;
}

std::size_t PatchSeries::block_pixels(std::size_t p) const {
    if (row_edges.empty()) return 1;
    const std::size_t br = p / pc, bc = p % pc;
    return (row_edges[br + 1] - row_edges[br]) * (col_edges[bc + 1] - col_edges[bc]);
}

PatchSeries coarse_grain(const RasterSequence& r, std::size_t pr, std::size_t pc) {
    if (pr == 0 || pc == 0) throw std::invalid_argument("patch grid dimensions must be >= 1");
    PatchSeries s;
    s.pr = pr;
    s.pc = pc;
    s.row_edges = block_edges(r.rows, pr);
    s.col_edges = block_edges(r.cols, pc);
    s.vectors.resize(static_cast<Eigen::Index>(r.frames), static_cast<Eigen::Index>(pr * pc));
    for (std::size_t t = 0; t < r.frames; ++t) {
        const auto f = r.frame(t);
        for (std::size_t br = 0; br < pr; ++br)
            for (std::size_t bc = 0; bc < pc; ++bc) {
                const std::size_t c0 = s.col_edges[bc], c1 = s.col_edges[bc + 1];
                double total = 0.0;
                for (std::size_t row = s.row_edges[br]; row < s.row_edges[br + 1]; ++row)
                    total += kernels::sum(f.subspan(row * r.cols + c0, c1 - c0));
                const double count = static_cast<double>((s.row_edges[br + 1] - s.row_edges[br]) * (c1 - c0));
                s.vectors(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(br * pc + bc)) = total / count;
            }
    }
    return s;
}

PatchSeries series_from_vectors(const Eigen::MatrixXd& vectors) {
    PatchSeries s;
    s.pr = 1;
    s.pc = static_cast<std::size_t>(vectors.cols());
    s.vectors = vectors;
    return s;
}

GridForecast forecast_grid(const PatchSeries& series, std::size_t train_frames, std::size_t horizon,
                           double svd_cutoff) {
    const auto frames = static_cast<std::size_t>(series.vectors.rows());
    if (train_frames < 2) throw std::invalid_argument("forecast needs at least two training frames");
    if (train_frames + horizon > frames)
        throw std::invalid_argument("insufficient frames: " + std::to_string(train_frames) + " training plus " +
                                    std::to_string(horizon) + " horizon exceed " + std::to_string(frames));
    const auto m = static_cast<Eigen::Index>(train_frames - 1);
    SnapshotMatrices snap;
    snap.psi = series.vectors.topRows(m).transpose();
    snap.phi = series.vectors.middleRows(1, m).transpose();
    for (std::size_t p = 0; p < series.patches(); ++p) snap.bank_labels.push_back("patch" + std::to_string(p));
    snap.dt = 1.0;

    GridForecast out;
    out.koopman = fit_dko(snap, svd_cutoff);
    const Eigen::VectorXd last = series.vectors.row(m).transpose();
    const auto path = predict(out.koopman, last, horizon);
    out.predicted.resize(static_cast<Eigen::Index>(horizon + 1), series.vectors.cols());
    for (std::size_t l = 0; l <= horizon; ++l) out.predicted.row(static_cast<Eigen::Index>(l)) = path[l].transpose();
    for (std::size_t l = 1; l <= horizon; ++l) {
        const Eigen::VectorXd actual = series.vectors.row(static_cast<Eigen::Index>(train_frames - 1 + l)).transpose();
        const double err = (path[l] - actual).norm();
        const double scale = actual.norm();
        out.errors_per_step.push_back(scale > 0.0 ? err / scale : err);
    }
    return out;
}

}  // namespace dko::grid
