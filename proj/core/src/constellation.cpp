#include "prism/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prism {

namespace {

std::uint32_t gray_decode(std::uint32_t g) {
    std::uint32_t v = g;
    while (g >>= 1) v ^= g;
    return v;
}

std::uint32_t gray_encode(std::uint32_t v) { return v ^ (v >> 1); }

// Level for an m-bit Gray group: code 0 -> most positive amplitude.
double axis_level(std::uint32_t gray_bits, int levels) {
    const auto v = gray_decode(gray_bits);
    return static_cast<double>(levels - 1) - 2.0 * static_cast<double>(v);
}

}  // namespace

Modulation modulation_from_string(const std::string& name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(c)));
    if (s == "qpsk" || s == "qam4" || s == "4qam") return Modulation::QPSK;
    if (s == "qam16" || s == "16qam" || s == "16-qam") return Modulation::QAM16;
    if (s == "qam64" || s == "64qam" || s == "64-qam") return Modulation::QAM64;
    throw std::invalid_argument("unknown modulation: " + name);
}

std::string to_string(Modulation m) {
    switch (m) {
        case Modulation::QPSK: return "qpsk";
        case Modulation::QAM16: return "qam16";
        case Modulation::QAM64: return "qam64";
    }
    return "?";
}

Constellation Constellation::make(Modulation m) {
    Constellation c;
    c.mod_ = m;
    switch (m) {
        case Modulation::QPSK: c.bits_per_symbol_ = 2; break;
        case Modulation::QAM16: c.bits_per_symbol_ = 4; break;
        case Modulation::QAM64: c.bits_per_symbol_ = 6; break;
    }
    const int half = c.bits_per_symbol_ / 2;
    c.levels_per_axis_ = 1 << half;
    // unit average power: E[I^2 + Q^2] with levels {±1, ±3, ...}
    const int L = c.levels_per_axis_;
    double es_axis = 0.0;
    for (int v = 0; v < L; ++v) {
        const double a = static_cast<double>(L - 1) - 2.0 * v;
        es_axis += a * a;
    }
    es_axis /= L;
    c.axis_scale_ = 1.0 / std::sqrt(2.0 * es_axis);

    const std::uint32_t n = 1u << c.bits_per_symbol_;
    c.points_.resize(n);
    double p2 = 0.0, p4 = 0.0;
    for (std::uint32_t b = 0; b < n; ++b) {
        const std::uint32_t gi = b >> half;
        const std::uint32_t gq = b & ((1u << half) - 1u);
        const cplx pt(axis_level(gi, L) * c.axis_scale_,
                      axis_level(gq, L) * c.axis_scale_);
        c.points_[b] = pt;
        p2 += std::norm(pt);
        p4 += std::norm(pt) * std::norm(pt);
    }
    c.cma_r2_ = p4 / p2;
    return c;
}

std::vector<cplx> Constellation::map_bits(const std::vector<std::uint8_t>& bits) const {
    if (bits.size() % static_cast<std::size_t>(bits_per_symbol_) != 0)
        throw std::invalid_argument("map_bits: length not divisible by bits per symbol");
    std::vector<cplx> out;
    out.reserve(bits.size() / bits_per_symbol_);
    for (std::size_t i = 0; i < bits.size(); i += bits_per_symbol_) {
        std::uint32_t idx = 0;
        for (int k = 0; k < bits_per_symbol_; ++k)
            idx = (idx << 1) | (bits[i + k] & 1u);
        out.push_back(points_[idx]);
    }
    return out;
}

namespace {

// Quantize one axis to the nearest level index, then Gray-encode.
std::uint32_t demap_axis(double x, int levels, double scale) {
    const double a = x / scale;                       // levels domain
    int v = static_cast<int>(std::lround((static_cast<double>(levels - 1) - a) / 2.0));
    v = std::clamp(v, 0, levels - 1);
    return gray_encode(static_cast<std::uint32_t>(v));
}

}  // namespace

std::vector<std::uint8_t> Constellation::demap(const std::vector<cplx>& symbols) const {
    std::vector<std::uint8_t> bits;
    bits.reserve(symbols.size() * bits_per_symbol_);
    const int half = bits_per_symbol_ / 2;
    for (const auto& z : symbols) {
        const std::uint32_t gi = demap_axis(z.real(), levels_per_axis_, axis_scale_);
        const std::uint32_t gq = demap_axis(z.imag(), levels_per_axis_, axis_scale_);
        const std::uint32_t idx = (gi << half) | gq;
        for (int k = bits_per_symbol_ - 1; k >= 0; --k)
            bits.push_back(static_cast<std::uint8_t>((idx >> k) & 1u));
    }
    return bits;
}

cplx Constellation::decide(cplx z) const {
    const int half = bits_per_symbol_ / 2;
    const std::uint32_t gi = demap_axis(z.real(), levels_per_axis_, axis_scale_);
    const std::uint32_t gq = demap_axis(z.imag(), levels_per_axis_, axis_scale_);
    return points_[(gi << half) | gq];
}

}  // namespace prism
