#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dko::io {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

// Plain CSV matrix, one row per line, no header.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

// Writes `text` atomically enough for our purposes: to a temp file, then renamed.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace dko::io
