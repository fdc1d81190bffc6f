#pragma once

#include <array>
#include <cstdint>

namespace dko {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The whole
// noise model of the library is built on it so that every draw is a pure
// function of (key, counter).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept;
};

// 64-bit finalizer used to fold (seed, tag, index) into a fresh seed.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Derives an independent child seed. Distinct (tag, index) pairs give
// unrelated streams for the same parent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept;

// Sequential view onto one Philox stream. A stream is identified by the
// seed plus two 32-bit-ish identifiers (typically sample index and step
// index); draws within it advance the remaining counter word.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t sample, std::uint32_t step) noexcept;

    std::uint64_t next_u64() noexcept;
    // Uniform on the open interval (0, 1), 53 bits of resolution.
    double uniform() noexcept;
    // Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key key_;
    Philox4x32::Counter ctr_;
    Philox4x32::Counter buf_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dko
