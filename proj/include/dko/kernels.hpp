#pragma once

// Data-parallel inner loops. Each kernel has a portable scalar reference in
// kernels::scalar and, on x86-64, an AVX2+FMA variant in kernels::avx2. The
// unqualified entry points dispatch at runtime on the detected (or forced)
// instruction set. The two variants agree up to summation-order rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace dko::kernels {

enum class Isa { scalar, avx2 };

// Best ISA supported by the running CPU and compiled into the binary.
Isa detected_isa() noexcept;
// ISA currently used by the dispatching entry points.
Isa active_isa() noexcept;
// Forces the dispatch target; requests for an unsupported ISA fall back to
// scalar. Returns the ISA actually selected.
Isa force_isa(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

namespace scalar {
double sum(std::span<const double> a) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
// sum_i w_i * a_i * b_i
double dot3(std::span<const double> w, std::span<const double> a, std::span<const double> b) noexcept;
// sum_i sum_j |a_i - b_j|
double sum_abs_diff(std::span<const double> a, std::span<const double> b) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define DKO_HAVE_AVX2_KERNELS 1
namespace avx2 {
double sum(std::span<const double> a) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double dot3(std::span<const double> w, std::span<const double> a, std::span<const double> b) noexcept;
double sum_abs_diff(std::span<const double> a, std::span<const double> b) noexcept;
}  // namespace avx2
#endif

double sum(std::span<const double> a) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double dot3(std::span<const double> w, std::span<const double> a, std::span<const double> b) noexcept;
double sum_abs_diff(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace dko::kernels
