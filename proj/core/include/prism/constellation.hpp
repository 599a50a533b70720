#ifndef PRISM_CONSTELLATION_HPP
#define PRISM_CONSTELLATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "prism/types.hpp"

namespace prism {

enum class Modulation : std::uint8_t { QPSK, QAM16, QAM64 };

Modulation modulation_from_string(const std::string& name);
std::string to_string(Modulation m);

/// Square QAM constellation with per-axis Gray labeling and unit average
/// power. Bit convention: for 2m bits per symbol, the first m bits select
/// the in-phase level and the last m the quadrature level, MSB first. Per
/// axis, Gray code 0...0 maps to the most positive level, so QPSK "00" is
/// (1+j)/sqrt(2).
class Constellation {
  public:
    static Constellation make(Modulation m);

    Modulation modulation() const { return mod_; }
    int bits_per_symbol() const { return bits_per_symbol_; }
    const std::vector<cplx>& points() const { return points_; }

    /// Symbol for one bit group (index = bits interpreted MSB-first).
    cplx point(std::uint32_t bits) const { return points_[bits]; }

    /// Map a bit sequence; length must divide bits_per_symbol.
    std::vector<cplx> map_bits(const std::vector<std::uint8_t>& bits) const;

    /// Nearest-point hard decision back to bits.
    std::vector<std::uint8_t> demap(const std::vector<cplx>& symbols) const;

    /// Hard-decided constellation point (used by decision-directed loops).
    cplx decide(cplx z) const;

    /// E|s|^4 / E|s|^2, the constant-modulus reference radius squared.
    double cma_radius2() const { return cma_r2_; }

  private:
    Modulation mod_;
    int bits_per_symbol_;
    int levels_per_axis_;
    double axis_scale_;
    std::vector<cplx> points_;
    double cma_r2_;
};

}  // namespace prism

#endif
