#ifndef PRISM_RNG_HPP
#define PRISM_RNG_HPP

#include <cstdint>
#include <random>

#include "prism/types.hpp"

namespace prism {

/// Deterministic random stream. Raw mt19937_64 output is specified by the
/// standard, and the value transforms below are explicit, so sequences are
/// reproducible across compilers and platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Derive an independent substream; (tag, index) pairs label uses.
    Rng fork(std::uint64_t tag, std::uint64_t index = 0) const;

    /// Uniform on [0, 1).
    double uniform();

    /// Uniform on [-pi, pi).
    double phase();

    /// Standard normal (Box-Muller, explicit so sequences are portable).
    double normal();

    /// Circular complex Gaussian with E|z|^2 = 1.
    cplx cnormal();

    std::uint64_t bits() { return gen_(); }
    std::uint64_t bit() { return gen_() >> 63; }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// 64-bit mix used for seed derivation (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

}  // namespace prism

#endif
