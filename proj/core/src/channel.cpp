#include "prism/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "prism/fft.hpp"

namespace prism {

Jones Jones::identity() {
    Jones j;
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    return j;
}

Jones Jones::mul(const Jones& o) const {
    Jones r;
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
            r(i, k) = (*this)(i, 0) * o(0, k) + (*this)(i, 1) * o(1, k);
    return r;
}

Jones Jones::adjoint() const {
    Jones r;
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) r(i, k) = std::conj((*this)(k, i));
    return r;
}

std::array<double, 2> Jones::singular_values() const {
    // Eigenvalues of H^H H via trace/determinant of the 2x2 Gram matrix.
    const Jones g = adjoint().mul(*this);
    const double tr = g(0, 0).real() + g(1, 1).real();
    const cplx detc = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    const double det = std::max(0.0, detc.real());
    const double disc = std::max(0.0, tr * tr / 4.0 - det);
    const double r = std::sqrt(disc);
    const double l1 = std::max(0.0, tr / 2.0 + r);
    const double l2 = std::max(0.0, tr / 2.0 - r);
    return {std::sqrt(l1), std::sqrt(l2)};
}

Jones random_unitary(Rng& rng) {
    // Haar measure on U(2): SU(2) angles plus a global phase.
    const double alpha = std::asin(std::sqrt(rng.uniform()));
    const double psi = rng.phase();
    const double chi = rng.phase();
    const double phi = rng.phase();
    Jones j;
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    j(0, 0) = std::polar(ca, psi);
    j(0, 1) = std::polar(sa, chi);
    j(1, 0) = -std::polar(sa, -chi);
    j(1, 1) = std::polar(ca, -psi);
    const cplx g = std::polar(1.0, phi);
    for (auto& v : j.m) v *= g;
    return j;
}

PolarizationChannel PolarizationChannel::identity() {
    PolarizationChannel ch;
    ch.sections.push_back({Jones::identity(), 0.0});
    return ch;
}

PolarizationChannel PolarizationChannel::from_jones(const Jones& j) {
    PolarizationChannel ch;
    ch.sections.push_back({j, 0.0});
    return ch;
}

PolarizationChannel PolarizationChannel::make_random(std::uint64_t seed, int n_sections,
                                                     double total_dgd_s) {
    if (n_sections < 1) throw std::invalid_argument("channel: need at least one section");
    PolarizationChannel ch;
    Rng rng(mix64(seed ^ 0x504d440001ULL));
    const double per = total_dgd_s / n_sections;
    for (int i = 0; i < n_sections; ++i) ch.sections.push_back({random_unitary(rng), per});
    return ch;
}

std::vector<Jones> PolarizationChannel::freq_response(std::size_t n, double sample_rate) const {
    std::vector<Jones> h(n, Jones::identity());
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 2.0 * std::numbers::pi * fft::bin_frequency(k, n, sample_rate);
        Jones acc = Jones::identity();
        for (const auto& sec : sections) {
            Jones d;
            d(0, 0) = std::polar(1.0, +0.5 * w * sec.dgd_s);
            d(1, 1) = std::polar(1.0, -0.5 * w * sec.dgd_s);
            acc = sec.rotation.mul(d).mul(acc);
        }
        h[k] = acc;
    }
    return h;
}

std::pair<ComplexWaveform, ComplexWaveform> apply_polarization_channel(
    const ComplexWaveform& wx, const ComplexWaveform& wy, const PolarizationChannel& ch) {
    if (wx.size() != wy.size() || wx.sample_rate != wy.sample_rate)
        throw std::invalid_argument("polarization channel: waveform length/rate mismatch");
    const std::size_t n = wx.size();
    ComplexWaveform ox = wx, oy = wy;
    fft::forward(ox.samples);
    fft::forward(oy.samples);
    const auto h = ch.freq_response(n, wx.sample_rate);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx x = ox.samples[k], y = oy.samples[k];
        ox.samples[k] = h[k](0, 0) * x + h[k](0, 1) * y;
        oy.samples[k] = h[k](1, 0) * x + h[k](1, 1) * y;
    }
    fft::inverse(ox.samples);
    fft::inverse(oy.samples);
    return {std::move(ox), std::move(oy)};
}

void load_noise(std::vector<ComplexWaveform*> pols, const NoiseModel& n, Rng& rng) {
    if (pols.empty()) return;
    if (!n.has_noise()) return;
    double total_power = 0.0;
    for (const auto* w : pols) total_power += w->mean_power();
    const double osnr = std::pow(10.0, n.target_osnr_db / 10.0);
    // OSNR counts noise in both polarization states within the reference
    // bandwidth: N0 per polarization = P_total / (2 * OSNR * B_ref).
    const double n0 = total_power / (2.0 * osnr * n.reference_bandwidth);
    for (auto* w : pols) {
        const double sigma2 = n0 * w->sample_rate;
        const double amp = std::sqrt(sigma2);
        for (auto& s : w->samples) s += amp * rng.cnormal();
    }
}

ComplexWaveform load_noise(const ComplexWaveform& w, const NoiseModel& n, Rng& rng) {
    ComplexWaveform out = w;
    std::vector<ComplexWaveform*> v{&out};
    load_noise(v, n, rng);
    return out;
}

double measure_osnr_db(const ComplexWaveform& w, double signal_bandwidth,
                       double reference_bandwidth) {
    const std::size_t n = w.size();
    if (n == 0) throw std::invalid_argument("osnr meter: empty waveform");
    std::vector<cplx> spec(w.samples);
    fft::forward(spec);
    const double scale = 1.0 / static_cast<double>(n);
    double in_band = 0.0, out_band = 0.0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = std::abs(fft::bin_frequency(k, n, w.sample_rate));
        const double p = std::norm(spec[k]) * scale * scale;  // power per bin
        if (f <= signal_bandwidth / 2.0) {
            in_band += p;
            ++n_in;
        } else {
            out_band += p;
            ++n_out;
        }
    }
    if (n_out == 0) return std::numeric_limits<double>::infinity();
    const double bin_bw = w.sample_rate / static_cast<double>(n);
    const double noise_psd = out_band / (static_cast<double>(n_out) * bin_bw);  // per Hz
    const double sig = in_band - noise_psd * bin_bw * static_cast<double>(n_in);
    const double noise_ref = 2.0 * noise_psd * reference_bandwidth;
    if (sig <= 0.0 || noise_ref <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(sig / noise_ref);
}

ComplexWaveform bandpass(const ComplexWaveform& w, double bandwidth_hz) {
    ComplexWaveform out = w;
    if (bandwidth_hz <= 0.0 || bandwidth_hz >= w.sample_rate) return out;
    fft::forward(out.samples);
    const std::size_t n = out.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double f = std::abs(fft::bin_frequency(k, n, w.sample_rate));
        if (f > bandwidth_hz / 2.0) out.samples[k] = 0.0;
    }
    fft::inverse(out.samples);
    return out;
}

IntensityTrace photodetect(const ComplexWaveform& w) {
    IntensityTrace t;
    t.sample_rate = w.sample_rate;
    t.samples.reserve(w.size());
    for (const auto& s : w.samples) t.samples.push_back(std::norm(s));
    return t;
}

IntensityTrace quantize_enob(const IntensityTrace& t, double enob, Rng& rng) {
    if (enob <= 0.0) throw std::invalid_argument("quantize_enob: enob must be positive");
    IntensityTrace out = t;
    if (!std::isfinite(enob)) return out;
    const double full_scale = t.max();
    const double sinad = std::pow(10.0, (6.02 * enob + 1.76) / 10.0);
    // full-scale sine power = FS^2 / 8
    const double sigma = std::sqrt(full_scale * full_scale / 8.0 / sinad);
    for (auto& v : out.samples) v = std::max(0.0, v + sigma * rng.normal());
    return out;
}

}  // namespace prism
