#ifndef PRISM_TYPES_HPP
#define PRISM_TYPES_HPP

#include <complex>
#include <cstdint>
#include <vector>

namespace prism {

using cplx = std::complex<double>;

constexpr double kSpeedOfLight = 299792458.0;        // m/s
constexpr double kDefaultWavelength = 1550.0e-9;     // m
constexpr double kOsnrRefBandwidth = 12.5e9;         // Hz, 0.1 nm at 1550 nm

/// Uniformly sampled complex baseband field.
struct ComplexWaveform {
    std::vector<cplx> samples;
    double sample_rate = 0.0;                        // Hz
    double center_wavelength = kDefaultWavelength;   // m

    std::size_t size() const { return samples.size(); }

    double mean_power() const {
        double p = 0.0;
        for (const auto& s : samples) p += std::norm(s);
        return samples.empty() ? 0.0 : p / static_cast<double>(samples.size());
    }

    void scale(double g) {
        for (auto& s : samples) s *= g;
    }
};

/// Real nonnegative photodetected sequence.
struct IntensityTrace {
    std::vector<double> samples;
    double sample_rate = 0.0;                        // Hz

    std::size_t size() const { return samples.size(); }

    double mean() const {
        double m = 0.0;
        for (double v : samples) m += v;
        return samples.empty() ? 0.0 : m / static_cast<double>(samples.size());
    }

    double max() const {
        double m = 0.0;
        for (double v : samples) m = v > m ? v : m;
        return m;
    }
};

}  // namespace prism

#endif
