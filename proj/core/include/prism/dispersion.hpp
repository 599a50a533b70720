#ifndef PRISM_DISPERSION_HPP
#define PRISM_DISPERSION_HPP

#include <vector>

#include "prism/types.hpp"

namespace prism {

/// Chromatic dispersion as a quadratic spectral phase all-pass filter.
/// Positive total dispersion is normal transmission-fiber sign; the inverse
/// operator is the same filter with negated dispersion.
struct DispersionOperator {
    double total_ps_per_nm = 0.0;
    double center_wavelength = kDefaultWavelength;

    /// Accumulated beta2*L in s^2: -D * lambda^2 / (2*pi*c).
    double beta2_length() const;

    DispersionOperator inverse() const {
        return {-total_ps_per_nm, center_wavelength};
    }

    bool is_zero() const { return total_ps_per_nm == 0.0; }

    /// Per-bin transfer function exp(-j * beta2L * w^2 / 2) on the DFT grid.
    std::vector<cplx> freq_response(std::size_t n, double sample_rate) const;
};

/// Frequency-domain application of the operator (energy preserving).
ComplexWaveform apply_dispersion(const ComplexWaveform& w, const DispersionOperator& d);

/// In-place variant operating on raw samples.
void apply_dispersion_inplace(std::vector<cplx>& samples, double sample_rate,
                              const DispersionOperator& d);

}  // namespace prism

#endif
