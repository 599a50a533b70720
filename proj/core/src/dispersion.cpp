#include "prism/dispersion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "prism/fft.hpp"

namespace prism {

double DispersionOperator::beta2_length() const {
    const double d_si = total_ps_per_nm * 1e-12 / 1e-9;  // s/m
    return -d_si * center_wavelength * center_wavelength /
           (2.0 * std::numbers::pi * kSpeedOfLight);
}

std::vector<cplx> DispersionOperator::freq_response(std::size_t n, double sample_rate) const {
    std::vector<cplx> h(n);
    const double b2l = beta2_length();
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 2.0 * std::numbers::pi * fft::bin_frequency(k, n, sample_rate);
        const double phi = -0.5 * b2l * w * w;
        h[k] = std::polar(1.0, phi);
    }
    return h;
}

void apply_dispersion_inplace(std::vector<cplx>& samples, double sample_rate,
                              const DispersionOperator& d) {
    if (samples.empty()) throw std::invalid_argument("apply_dispersion: empty waveform");
    if (d.is_zero()) return;
    const auto h = d.freq_response(samples.size(), sample_rate);
    fft::forward(samples);
    for (std::size_t k = 0; k < samples.size(); ++k) samples[k] *= h[k];
    fft::inverse(samples);
}

ComplexWaveform apply_dispersion(const ComplexWaveform& w, const DispersionOperator& d) {
    ComplexWaveform out = w;
    apply_dispersion_inplace(out.samples, out.sample_rate, d);
    return out;
}

}  // namespace prism
