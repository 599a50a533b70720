#ifndef PRISM_CHANNEL_HPP
#define PRISM_CHANNEL_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "prism/dispersion.hpp"
#include "prism/rng.hpp"
#include "prism/types.hpp"

namespace prism {

/// 2x2 complex matrix, row-major.
struct Jones {
    std::array<cplx, 4> m{};

    cplx& operator()(int r, int c) { return m[r * 2 + c]; }
    const cplx& operator()(int r, int c) const { return m[r * 2 + c]; }

    static Jones identity();
    Jones mul(const Jones& o) const;
    Jones adjoint() const;

    /// Singular values, largest first.
    std::array<double, 2> singular_values() const;
};

/// Haar-distributed 2x2 unitary.
Jones random_unitary(Rng& rng);

/// Polarization channel built from unitary-mixing + differential-group-delay
/// sections. All-unitary construction, so energy conserving and PDL-free.
struct PolarizationChannel {
    struct Section {
        Jones rotation;
        double dgd_s = 0.0;  // differential group delay
    };
    std::vector<Section> sections;

    static PolarizationChannel make_random(std::uint64_t seed, int n_sections,
                                           double total_dgd_s);
    static PolarizationChannel identity();
    static PolarizationChannel from_jones(const Jones& j);

    /// Per-frequency response, n bins on the DFT grid.
    std::vector<Jones> freq_response(std::size_t n, double sample_rate) const;
};

std::pair<ComplexWaveform, ComplexWaveform> apply_polarization_channel(
    const ComplexWaveform& wx, const ComplexWaveform& wy, const PolarizationChannel& ch);

/// OSNR-calibrated noise loading. target_osnr_db uses reference_bandwidth
/// noise in both polarization states (conventional OSNR); enob, when finite,
/// is applied later at the intensity traces.
struct NoiseModel {
    double target_osnr_db = std::numeric_limits<double>::infinity();
    double reference_bandwidth = kOsnrRefBandwidth;
    double enob = std::numeric_limits<double>::infinity();

    bool has_noise() const { return std::isfinite(target_osnr_db); }
    bool has_enob() const { return std::isfinite(enob); }
};

/// Adds circular complex white Gaussian noise across the simulation band so
/// the in-band OSNR equals the target. Dual-polarization inputs share one
/// OSNR defined on total signal power; each polarization receives an
/// independent realization of the same noise PSD.
void load_noise(std::vector<ComplexWaveform*> pols, const NoiseModel& n, Rng& rng);
ComplexWaveform load_noise(const ComplexWaveform& w, const NoiseModel& n, Rng& rng);

/// PSD-based OSNR meter: estimates the noise floor from out-of-band bins.
/// signal_bandwidth is the occupied band (full width, Hz).
double measure_osnr_db(const ComplexWaveform& w, double signal_bandwidth,
                       double reference_bandwidth = kOsnrRefBandwidth);

/// Brickwall lowpass of full width bandwidth_hz (receiver optical filter).
ComplexWaveform bandpass(const ComplexWaveform& w, double bandwidth_hz);

/// Elementwise |.|^2.
IntensityTrace photodetect(const ComplexWaveform& w);

/// Converter-fidelity model: additive white Gaussian noise with variance set
/// by SINAD = 6.02*enob + 1.76 dB relative to a full-scale sine; full scale
/// is the trace maximum. Output clamped at zero.
IntensityTrace quantize_enob(const IntensityTrace& t, double enob, Rng& rng);

}  // namespace prism

#endif
