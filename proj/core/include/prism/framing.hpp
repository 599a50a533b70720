#ifndef PRISM_FRAMING_HPP
#define PRISM_FRAMING_HPP

#include <cstdint>
#include <vector>

#include "prism/constellation.hpp"
#include "prism/rng.hpp"
#include "prism/types.hpp"

namespace prism {

enum class PilotAmplitude : std::uint8_t { constellation, unit };

/// Frame layout and pulse-shaping parameters. Pilot positions are indices
/// into the payload (not the whole frame); the training block carries no
/// pilots since the receiver knows it entirely.
struct FrameSpec {
    std::size_t n_training_symbols = 0;
    std::size_t n_payload_symbols = 0;
    double pilot_overhead = 0.2;           // fraction of payload symbols
    double baud_rate = 30e9;               // symbols/s
    int samples_per_symbol = 2;
    double rolloff = 0.1;
    PilotAmplitude pilot_amplitude = PilotAmplitude::constellation;

    std::size_t n_total() const { return n_training_symbols + n_payload_symbols; }
    double sample_rate() const { return baud_rate * samples_per_symbol; }

    /// Payload indices carrying pilots: every round(1/overhead)-th symbol
    /// starting at payload index 0.
    std::vector<std::size_t> pilot_positions() const;

    void validate() const;  // throws std::invalid_argument
};

/// One polarization's symbols with pilot bookkeeping and bit truth.
struct SymbolFrame {
    std::vector<cplx> symbols;              // training then payload
    std::vector<bool> pilot_mask;           // over the whole frame
    std::vector<std::uint8_t> bit_truth;    // payload bits only
    Modulation modulation = Modulation::QPSK;
    std::size_t n_training = 0;

    std::size_t n_payload() const { return symbols.size() - n_training; }

    /// Frame indices (training offset included) of pilot symbols.
    std::vector<std::size_t> pilot_frame_indices() const;
};

/// Deterministic frame generation: same (seed, spec, constellation) gives a
/// bit-identical frame.
SymbolFrame build_frame(std::uint64_t seed, const FrameSpec& spec, const Constellation& c);

/// Raised-cosine pulse shaping via circular frequency-domain filtering.
/// Symbol-center samples of the result equal the input symbols (Nyquist
/// criterion holds bin-exactly on the DFT grid).
ComplexWaveform shape_pulse(const std::vector<cplx>& symbols, const FrameSpec& spec);

/// Raised-cosine spectrum sampled on the N-point DFT grid.
std::vector<double> raised_cosine_spectrum(std::size_t n, double sample_rate,
                                           double baud, double rolloff);

}  // namespace prism

#endif
