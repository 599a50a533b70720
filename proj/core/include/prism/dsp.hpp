#ifndef PRISM_DSP_HPP
#define PRISM_DSP_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "prism/constellation.hpp"
#include "prism/dispersion.hpp"
#include "prism/framing.hpp"
#include "prism/types.hpp"

namespace prism {

/// Inverse of the link dispersion response.
ComplexWaveform compensate_cd(const ComplexWaveform& w, const DispersionOperator& link_cd);

/// Symbol-center samples (one per symbol).
std::vector<cplx> decimate_to_symbols(const ComplexWaveform& w, int samples_per_symbol);

struct EqualizerConfig {
    std::size_t fft_block = 256;      // symbols per frequency-domain block
    double lms_step = 1e-3;
    double cma_step = 1e-4;
    int lms_passes = 3;               // passes over the training block
    double divergence_factor = 10.0;  // output power guard
};

struct EqualizerReport {
    bool diverged = false;
    double final_error = 0.0;
};

/// 2x2 frequency-domain adaptive equalizer at one sample per symbol.
/// Data-aided LMS over the training block forces convergence; the payload is
/// then equalized with constant-modulus updates. Overlap-save internally
/// (50% save) with a half-block tap-length constraint.
std::pair<std::array<std::vector<cplx>, 2>, EqualizerReport> mimo_equalize(
    const std::array<std::vector<cplx>, 2>& rx, const std::array<const SymbolFrame*, 2>& frames,
    const EqualizerConfig& cfg);

struct CarrierRecoveryConfig {
    int window = 64;                 // sliding estimation window, symbols
    bool decision_directed = false;  // default fourth-power for QPSK
};

/// Removes slowly varying common phase. QPSK uses sliding-window
/// fourth-power (Viterbi-Viterbi); QAM uses decision-directed averaging.
/// Pilot positions anchor the absolute rotation, which also resolves
/// quadrant cycle slips segment by segment.
std::vector<cplx> carrier_phase_recovery(const std::vector<cplx>& symbols,
                                         const Constellation& c,
                                         const std::vector<std::size_t>& pilot_positions,
                                         const std::vector<cplx>& pilot_values,
                                         const CarrierRecoveryConfig& cfg = {});

struct BerReport {
    std::uint64_t bit_errors = 0;
    std::uint64_t bits_counted = 0;
    std::array<std::uint64_t, 2> errors_per_pol{0, 0};
    std::array<std::uint64_t, 2> bits_per_pol{0, 0};

    double ber() const {
        return bits_counted ? static_cast<double>(bit_errors) / static_cast<double>(bits_counted)
                            : 0.0;
    }
};

/// Gray demap + compare over payload symbols, excluding pilots.
/// symbols[p] are the payload-aligned equalized symbols of polarization p.
BerReport count_ber(const std::vector<std::vector<cplx>>& symbols,
                    const std::vector<const SymbolFrame*>& frames, const Constellation& c);

/// Block processor for streaming traces: fn maps aligned trace blocks to a
/// recovered block; edge halves are discarded and the kept centers stitched.
/// Trailing partial blocks are zero-padded; the flag reports that.
struct OverlapSaveResult {
    ComplexWaveform output;
    bool had_partial_block = false;
};

using BlockRetriever =
    std::function<std::vector<cplx>(const std::vector<IntensityTrace>& block_traces,
                                    std::size_t abs_offset)>;

OverlapSaveResult overlap_save_run(const std::vector<const IntensityTrace*>& traces,
                                   std::size_t block_len, double save_fraction,
                                   const BlockRetriever& fn);

/// Uncoded Gray-coded AWGN bit error rate for the format at the given OSNR.
/// SNR per symbol = OSNR_lin * 2 * B_ref / (n_pol * baud), B_ref = 12.5 GHz.
double theory_ber(double osnr_db, const Constellation& c, double baud, int n_pol);

/// Inverse of theory_ber in OSNR (bisection).
double theory_osnr_for_ber(double target_ber, const Constellation& c, double baud, int n_pol);

}  // namespace prism

#endif
