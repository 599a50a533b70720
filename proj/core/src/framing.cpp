#include "prism/framing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "prism/fft.hpp"

namespace prism {

std::vector<std::size_t> FrameSpec::pilot_positions() const {
    std::vector<std::size_t> pos;
    if (pilot_overhead <= 0.0) return pos;
    const auto step = static_cast<std::size_t>(std::lround(1.0 / pilot_overhead));
    for (std::size_t i = 0; i < n_payload_symbols; i += step) pos.push_back(i);
    return pos;
}

void FrameSpec::validate() const {
    if (n_payload_symbols == 0)
        throw std::invalid_argument("frame: payload must be nonempty");
    if (samples_per_symbol < 2)
        throw std::invalid_argument("frame: samples_per_symbol must be >= 2");
    if (pilot_overhead < 0.0 || pilot_overhead >= 1.0)
        throw std::invalid_argument("frame: pilot_overhead out of range [0, 1)");
    if (rolloff < 0.0 || rolloff > 1.0)
        throw std::invalid_argument("frame: rolloff out of range [0, 1]");
    if (baud_rate <= 0.0)
        throw std::invalid_argument("frame: baud_rate must be positive");
}

std::vector<std::size_t> SymbolFrame::pilot_frame_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = n_training; i < symbols.size(); ++i)
        if (pilot_mask[i]) out.push_back(i);
    return out;
}

SymbolFrame build_frame(std::uint64_t seed, const FrameSpec& spec, const Constellation& c) {
    spec.validate();
    SymbolFrame f;
    f.modulation = c.modulation();
    f.n_training = spec.n_training_symbols;
    const std::size_t n = spec.n_total();
    f.symbols.reserve(n);
    f.pilot_mask.assign(n, false);

    Rng rng(mix64(seed ^ 0x505249534d0001ULL));
    auto draw_symbol = [&] {
        std::uint32_t bits = 0;
        for (int k = 0; k < c.bits_per_symbol(); ++k)
            bits = (bits << 1) | static_cast<std::uint32_t>(rng.bit());
        return bits;
    };

    for (std::size_t i = 0; i < spec.n_training_symbols; ++i)
        f.symbols.push_back(c.point(draw_symbol()));

    f.bit_truth.reserve(spec.n_payload_symbols * c.bits_per_symbol());
    for (std::size_t i = 0; i < spec.n_payload_symbols; ++i) {
        const std::uint32_t bits = draw_symbol();
        for (int k = c.bits_per_symbol() - 1; k >= 0; --k)
            f.bit_truth.push_back(static_cast<std::uint8_t>((bits >> k) & 1u));
        f.symbols.push_back(c.point(bits));
    }

    for (std::size_t p : spec.pilot_positions()) {
        const std::size_t idx = spec.n_training_symbols + p;
        f.pilot_mask[idx] = true;
        if (spec.pilot_amplitude == PilotAmplitude::unit) {
            const cplx s = f.symbols[idx];
            const double m = std::abs(s);
            if (m > 0.0) f.symbols[idx] = s / m;
        }
    }
    return f;
}

std::vector<double> raised_cosine_spectrum(std::size_t n, double sample_rate,
                                           double baud, double rolloff) {
    std::vector<double> h(n, 0.0);
    const double f1 = (1.0 - rolloff) * baud / 2.0;
    const double f2 = (1.0 + rolloff) * baud / 2.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = std::abs(fft::bin_frequency(k, n, sample_rate));
        if (f <= f1) {
            h[k] = 1.0;
        } else if (f < f2 && rolloff > 0.0) {
            h[k] = 0.5 * (1.0 + std::cos(std::numbers::pi * (f - f1) / (baud * rolloff)));
        }
    }
    return h;
}

ComplexWaveform shape_pulse(const std::vector<cplx>& symbols, const FrameSpec& spec) {
    if (spec.samples_per_symbol < 2)
        throw std::invalid_argument("shape_pulse: samples_per_symbol must be >= 2");
    const std::size_t sps = static_cast<std::size_t>(spec.samples_per_symbol);
    const std::size_t n = symbols.size() * sps;
    ComplexWaveform w;
    w.sample_rate = spec.sample_rate();
    w.samples.assign(n, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < symbols.size(); ++i) w.samples[i * sps] = symbols[i];

    fft::forward(w.samples);
    const auto h = raised_cosine_spectrum(n, w.sample_rate, spec.baud_rate, spec.rolloff);
    // The zero-stuffed symbol spectrum repeats with period baud; scaling by
    // the RC response keeps symbol-center samples equal to the symbols.
    for (std::size_t k = 0; k < n; ++k) w.samples[k] *= h[k];
    fft::inverse(w.samples);
    return w;
}

}  // namespace prism
