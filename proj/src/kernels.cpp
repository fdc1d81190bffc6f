#include "dko/kernels.hpp"

#include <atomic>
#include <cmath>

namespace dko::kernels {

namespace scalar {

double sum(std::span<const double> a) noexcept {
    double s = 0.0;
    for (double v : a) s += v;
    return s;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double dot3(std::span<const double> w, std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b) noexcept {
    double total = 0.0;
    for (double x : a) {
        double row = 0.0;
        for (double y : b) row += std::fabs(x - y);
        total += row;
    }
    return total;
}

}  // namespace scalar

namespace {

Isa probe() noexcept {
#ifdef DKO_HAVE_AVX2_KERNELS
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
    return Isa::scalar;
}

std::atomic<Isa>& active() noexcept {
    static std::atomic<Isa> isa{probe()};
    return isa;
}

}  // namespace

Isa detected_isa() noexcept {
    static const Isa isa = probe();
    return isa;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

Isa force_isa(Isa isa) noexcept {
    const Isa chosen = (isa == Isa::avx2 && detected_isa() != Isa::avx2) ? Isa::scalar : isa;
    active().store(chosen, std::memory_order_relaxed);
    return chosen;
}

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

#ifdef DKO_HAVE_AVX2_KERNELS
#define DKO_DISPATCH(fn, ...) \
    (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define DKO_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double sum(std::span<const double> a) noexcept { return DKO_DISPATCH(sum, a); }
double dot(std::span<const double> a, std::span<const double> b) noexcept { return DKO_DISPATCH(dot, a, b); }
double dot3(std::span<const double> w, std::span<const double> a, std::span<const double> b) noexcept {
    return DKO_DISPATCH(dot3, w, a, b);
}
double sum_abs_diff(std::span<const double> a, std::span<const double> b) noexcept {
    return DKO_DISPATCH(sum_abs_diff, a, b);
}

#undef DKO_DISPATCH

}  // namespace dko::kernels
