#ifndef PRISM_POL_RX_HPP
#define PRISM_POL_RX_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "prism/channel.hpp"
#include "prism/dispersion.hpp"
#include "prism/framing.hpp"
#include "prism/phase_retrieval.hpp"
#include "prism/types.hpp"

namespace prism {

/// Four photodetected branches of the polarization-diversity receiver.
struct QuadIntensityCapture {
    IntensityTrace a_x, b_x, a_y, b_y;
    DispersionOperator retrieval_dispersion_x{650.0, kDefaultWavelength};
    DispersionOperator retrieval_dispersion_y{650.0, kDefaultWavelength};

    void validate() const;
};

/// 2x2 fiber coupling estimate split into the known dispersion response and
/// a symbol-spaced polarization-mixing FIR. The full response h is the
/// composition of the two.
struct ChannelMatrixEstimate {
    std::vector<Jones> h_pm;        // symbol-spaced taps, tap t models delay (t - tap_offset)
    std::size_t tap_offset = 0;
    double baud_rate = 30e9;
    DispersionOperator link_cd{0.0, kDefaultWavelength};
    double pdl_db = 0.0;
    int iteration = 0;

    /// H_pm: DFT of the tap sequence on an nfft-point grid.
    std::vector<Jones> freq_response(std::size_t nfft) const;

    /// Full h response on a waveform-rate grid (CD times polarization mixing).
    std::vector<Jones> full_response(std::size_t n, double sample_rate) const;

    static ChannelMatrixEstimate single_tap(const Jones& j, double baud,
                                            const DispersionOperator& cd);
};

struct EstimateHConfig {
    int taps = 64;                 // symbol-spaced FIR taps (centered)
    double ridge = 1e-6;           // relative Tikhonov weight
    int max_lag = 32;              // alignment search, symbols
    std::size_t pdl_nfft = 256;
};

/// Least-squares FIR estimate of the polarization mixing from CD-compensated
/// received training fields against the known transmitted training symbols.
/// Time alignment by cross-correlation is part of the operation.
ChannelMatrixEstimate estimate_h(const std::array<ComplexWaveform, 2>& rx_cd_free,
                                 const std::array<const SymbolFrame*, 2>& sent,
                                 const DispersionOperator& link_cd,
                                 const EstimateHConfig& cfg = {});

/// 20*log10(sigma_max/sigma_min) band-averaged across the estimate's
/// frequency grid.
double compute_pdl(const ChannelMatrixEstimate& est);

/// Forward-propagate symbol-rate pilot streams (zeros at unknown positions)
/// through the mixing estimate.
std::array<std::vector<cplx>, 2> propagate_pilots(
    const ChannelMatrixEstimate& est, const std::array<std::vector<cplx>, 2>& pilot_streams);

struct JointLoopConfig {
    int n_iterations = 6;
    std::size_t block_len = 1024;    // overlap-save block, samples
    double save_fraction = 0.5;
    EstimateHConfig estimator{};
    std::uint64_t initial_unitary_seed = 0;  // 0 = identity start
    double training_pilot_overhead = 0.0;    // 0 = reuse the frame overhead
};

struct JointLoopReport {
    std::vector<double> pdl_per_iteration_db;
    std::vector<double> estimate_delta;      // max |H_i - H_{i-1}| per iteration
    std::vector<double> mean_a_err;          // final retrieval error per iteration
};

/// Iterative channel estimation: phase retrieval over the training span with
/// pilot values forward-propagated through the current estimate, then a new
/// least-squares fit, repeated n_iterations times starting from a unitary
/// (zero PDL) initial condition.
std::pair<ChannelMatrixEstimate, JointLoopReport> joint_estimation_loop(
    const QuadIntensityCapture& cap, const std::array<const SymbolFrame*, 2>& frames,
    const RetrievalConfig& cfg, const JointLoopConfig& loop = {});

/// Payload retrieval for both polarizations with the converged estimate,
/// block-wise with 50% save.
std::array<ComplexWaveform, 2> retrieve_dual_pol(
    const QuadIntensityCapture& cap, const std::array<const SymbolFrame*, 2>& frames,
    const ChannelMatrixEstimate& est, const RetrievalConfig& cfg,
    const JointLoopConfig& loop = {});

}  // namespace prism

#endif
