#include "prism/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "prism/fft.hpp"

namespace prism {

ComplexWaveform compensate_cd(const ComplexWaveform& w, const DispersionOperator& link_cd) {
    return apply_dispersion(w, link_cd.inverse());
}

std::vector<cplx> decimate_to_symbols(const ComplexWaveform& w, int samples_per_symbol) {
    if (samples_per_symbol < 1) throw std::invalid_argument("decimate: bad oversampling");
    std::vector<cplx> out;
    const auto sps = static_cast<std::size_t>(samples_per_symbol);
    out.reserve(w.size() / sps);
    for (std::size_t i = 0; i * sps < w.size(); ++i) out.push_back(w.samples[i * sps]);
    return out;
}

namespace {

inline cplx unit_phasor(cplx v) {
    const double m = std::abs(v);
    return m > 0.0 ? v / m : cplx{1.0, 0.0};
}

double qfunc(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

}  // namespace

std::pair<std::array<std::vector<cplx>, 2>, EqualizerReport> mimo_equalize(
    const std::array<std::vector<cplx>, 2>& rx, const std::array<const SymbolFrame*, 2>& frames,
    const EqualizerConfig& cfg) {
    const std::size_t n = rx[0].size();
    if (rx[1].size() != n) throw std::invalid_argument("equalizer: input length mismatch");
    const std::size_t n_train = frames[0]->n_training;
    if (frames[1]->n_training != n_train)
        throw std::invalid_argument("equalizer: training length mismatch");
    if (frames[0]->symbols.size() != n || frames[1]->symbols.size() != n)
        throw std::invalid_argument("equalizer: frame/input length mismatch");

    const std::size_t B = cfg.fft_block;
    const std::size_t K = B / 2;        // new symbols per block
    const std::size_t margin = K / 2;   // discarded on each side
    const std::size_t tap_half = K / 4; // constrained two-sided tap span

    // W[p][i]: frequency response from input i to output p.
    std::array<std::array<std::vector<cplx>, 2>, 2> W;
    for (int p = 0; p < 2; ++p)
        for (int i = 0; i < 2; ++i) W[p][i].assign(B, p == i ? cplx{1.0, 0.0} : cplx{0.0, 0.0});

    double in_power = 0.0;
    for (int i = 0; i < 2; ++i)
        for (const auto& v : rx[i]) in_power += std::norm(v);
    in_power /= static_cast<double>(2 * n);

    auto gather = [&](const std::vector<cplx>& src, std::ptrdiff_t start,
                      std::vector<cplx>& dst) {
        dst.assign(B, cplx{0.0, 0.0});
        for (std::size_t j = 0; j < B; ++j) {
            const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(j);
            if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n))
                dst[j] = src[static_cast<std::size_t>(idx)];
        }
    };

    // Short-filter constraint: zero taps outside the centered window.
    auto constrain = [&](std::vector<cplx>& Wf) {
        fft::inverse(Wf);
        for (std::size_t t = tap_half; t + tap_half < B; ++t) Wf[t] = 0.0;
        fft::forward(Wf);
    };

    EqualizerReport rep;
    std::array<std::vector<cplx>, 2> out;
    out[0].assign(n, cplx{0.0, 0.0});
    out[1].assign(n, cplx{0.0, 0.0});

    const std::size_t n_blocks = (n + K - 1) / K;
    std::array<std::vector<cplx>, 2> Y, Xhat, E;
    std::vector<cplx> tmp;
    const double r2x = [&] {
        const auto c = Constellation::make(frames[0]->modulation);
        return c.cma_radius2();
    }();

    auto run_block = [&](std::size_t b, bool train_mode, bool adapt, double mu) {
        const auto start = static_cast<std::ptrdiff_t>(b * K) -
                           static_cast<std::ptrdiff_t>(margin);
        for (int i = 0; i < 2; ++i) {
            gather(rx[i], start, Y[i]);
            fft::forward(Y[i]);
        }
        for (int p = 0; p < 2; ++p) {
            Xhat[p].assign(B, cplx{0.0, 0.0});
            for (int i = 0; i < 2; ++i)
                for (std::size_t k = 0; k < B; ++k) Xhat[p][k] += W[p][i][k] * Y[i][k];
            fft::inverse(Xhat[p]);
        }
        // kept region: [margin, margin + K) within the block
        double out_power = 0.0;
        for (int p = 0; p < 2; ++p) {
            for (std::size_t j = 0; j < K; ++j) {
                const std::size_t pos = b * K + j;
                if (pos < n) {
                    out[p][pos] = Xhat[p][margin + j];
                    out_power += std::norm(out[p][pos]);
                }
            }
        }
        out_power /= static_cast<double>(2 * K);
        if (in_power > 0.0 && out_power > cfg.divergence_factor * in_power) {
            rep.diverged = true;
            return;
        }
        if (!adapt) return;

        double err_acc = 0.0;
        for (int p = 0; p < 2; ++p) {
            E[p].assign(B, cplx{0.0, 0.0});
            for (std::size_t j = 0; j < K; ++j) {
                const std::size_t pos = b * K + j;
                if (pos >= n) continue;
                const cplx xh = Xhat[p][margin + j];
                cplx e;
                if (train_mode) {
                    e = frames[p]->symbols[pos] - xh;
                } else {
                    e = xh * (r2x - std::norm(xh));  // constant-modulus error
                }
                E[p][margin + j] = e;
                err_acc += std::norm(e);
            }
            fft::forward(E[p]);
        }
        rep.final_error = err_acc / static_cast<double>(2 * K);

        for (int p = 0; p < 2; ++p) {
            for (int i = 0; i < 2; ++i) {
                auto& Wf = W[p][i];
                const auto& Yi = Y[i];
                for (std::size_t k = 0; k < B; ++k) {
                    const double pk = std::norm(Yi[k]) + 1e-12;
                    Wf[k] += mu * E[p][k] * std::conj(Yi[k]) / pk;
                }
                constrain(Wf);
            }
        }
    };

    const std::size_t train_blocks = n_train / K;
    for (int pass = 0; pass < cfg.lms_passes && !rep.diverged; ++pass)
        for (std::size_t b = 0; b < train_blocks && !rep.diverged; ++b)
            run_block(b, /*train=*/true, /*adapt=*/true, cfg.lms_step);

    for (std::size_t b = 0; b < n_blocks && !rep.diverged; ++b) {
        const bool in_training = (b + 1) * K <= n_train;
        if (in_training)
            run_block(b, true, true, cfg.lms_step);
        else
            run_block(b, false, true, cfg.cma_step);
    }
    if (rep.diverged)
        throw std::runtime_error("equalizer diverged (output power guard tripped)");
    return {std::move(out), rep};
}

std::vector<cplx> carrier_phase_recovery(const std::vector<cplx>& symbols,
                                         const Constellation& c,
                                         const std::vector<std::size_t>& pilot_positions,
                                         const std::vector<cplx>& pilot_values,
                                         const CarrierRecoveryConfig& cfg) {
    const std::size_t n = symbols.size();
    if (n == 0) return {};
    const bool dd = cfg.decision_directed || c.modulation() != Modulation::QPSK;
    const std::size_t w = static_cast<std::size_t>(std::max(1, cfg.window));
    const std::size_t half = w / 2;

    std::vector<cplx> z = symbols;
    std::vector<double> theta(n, 0.0);

    if (!dd) {
        // fourth-power estimator; phase continuity enforced sample to sample
        std::vector<cplx> q(n);
        for (std::size_t i = 0; i < n; ++i) {
            const cplx u = z[i] * z[i];
            q[i] = u * u;
        }
        std::vector<cplx> csum(n + 1, cplx{0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) csum[i + 1] = csum[i] + q[i];
        double prev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i > half ? i - half : 0;
            const std::size_t hi = std::min(n, i + half + 1);
            double th = std::arg(csum[hi] - csum[lo]) / 4.0;
            // unwrap onto the pi/2 grid relative to the previous estimate
            while (th - prev > std::numbers::pi / 4.0) th -= std::numbers::pi / 2.0;
            while (th - prev < -std::numbers::pi / 4.0) th += std::numbers::pi / 2.0;
            theta[i] = th;
            prev = th;
        }
    } else {
        // decision-directed sliding average, two refinement passes
        std::vector<double> th_est(n, 0.0);
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<cplx> r(n);
            for (std::size_t i = 0; i < n; ++i) {
                const cplx d = c.decide(z[i] * std::polar(1.0, -th_est[i]));
                r[i] = z[i] * std::conj(d);
            }
            std::vector<cplx> csum(n + 1, cplx{0.0, 0.0});
            for (std::size_t i = 0; i < n; ++i) csum[i + 1] = csum[i] + r[i];
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t lo = i > half ? i - half : 0;
                const std::size_t hi = std::min(n, i + half + 1);
                th_est[i] = std::arg(csum[hi] - csum[lo]);
            }
        }
        theta = th_est;
    }

    for (std::size_t i = 0; i < n; ++i) z[i] *= std::polar(1.0, -theta[i]);

    // pilot anchoring: quadrant correction from the nearest pilot, then a
    // fine global rotation
    if (!pilot_positions.empty()) {
        std::vector<int> quad(pilot_positions.size());
        for (std::size_t j = 0; j < pilot_positions.size(); ++j) {
            const std::size_t p = pilot_positions[j];
            const double res = std::arg(z[p] * std::conj(pilot_values[j]));
            quad[j] = static_cast<int>(std::lround(res / (std::numbers::pi / 2.0)));
        }
        auto dist = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            while (j + 1 < pilot_positions.size() &&
                   dist(pilot_positions[j + 1], i) <= dist(pilot_positions[j], i))
                ++j;
            z[i] *= std::polar(1.0, -quad[j] * std::numbers::pi / 2.0);
        }
        cplx acc{0.0, 0.0};
        for (std::size_t k = 0; k < pilot_positions.size(); ++k)
            acc += z[pilot_positions[k]] * std::conj(pilot_values[k]);
        const cplx fine = unit_phasor(acc);
        for (auto& v : z) v *= std::conj(fine);
    }
    return z;
}

BerReport count_ber(const std::vector<std::vector<cplx>>& symbols,
                    const std::vector<const SymbolFrame*>& frames, const Constellation& c) {
    if (symbols.size() != frames.size() || symbols.empty())
        throw std::invalid_argument("count_ber: polarization count mismatch");
    BerReport rep;
    for (std::size_t p = 0; p < symbols.size(); ++p) {
        const auto& f = *frames[p];
        const std::size_t n_pay = f.n_payload();
        if (symbols[p].size() != n_pay)
            throw std::invalid_argument("count_ber: payload length mismatch");
        std::vector<cplx> counted;
        std::vector<std::uint8_t> ref_bits;
        counted.reserve(n_pay);
        const int bps = c.bits_per_symbol();
        for (std::size_t i = 0; i < n_pay; ++i) {
            if (f.pilot_mask[f.n_training + i]) continue;  // pilots are not counted
            counted.push_back(symbols[p][i]);
            for (int k = 0; k < bps; ++k)
                ref_bits.push_back(f.bit_truth[i * bps + static_cast<std::size_t>(k)]);
        }
        const auto hat = c.demap(counted);
        std::uint64_t errs = 0;
        for (std::size_t k = 0; k < hat.size(); ++k)
            if (hat[k] != ref_bits[k]) ++errs;
        const std::uint64_t bits = hat.size();
        rep.bit_errors += errs;
        rep.bits_counted += bits;
        if (p < 2) {
            rep.errors_per_pol[p] = errs;
            rep.bits_per_pol[p] = bits;
        }
    }
    return rep;
}

OverlapSaveResult overlap_save_run(const std::vector<const IntensityTrace*>& traces,
                                   std::size_t block_len, double save_fraction,
                                   const BlockRetriever& fn) {
    if (traces.empty()) throw std::invalid_argument("overlap_save: no traces");
    if (block_len == 0 || (block_len & (block_len - 1)) != 0)
        throw std::invalid_argument("overlap_save: block length must be a power of two");
    if (save_fraction <= 0.0 || save_fraction > 1.0)
        throw std::invalid_argument("overlap_save: save fraction out of (0, 1]");
    const std::size_t n = traces[0]->size();
    for (const auto* t : traces)
        if (t->size() != n) throw std::invalid_argument("overlap_save: trace length mismatch");

    const auto keep = static_cast<std::size_t>(
        std::lround(static_cast<double>(block_len) * save_fraction));
    const std::size_t margin = (block_len - keep) / 2;

    OverlapSaveResult res;
    res.output.sample_rate = traces[0]->sample_rate;
    res.output.samples.assign(n, cplx{0.0, 0.0});
    if (n <= block_len) {
        // single block, no edges to discard beyond the data itself
        std::vector<IntensityTrace> blocks(traces.size());
        for (std::size_t t = 0; t < traces.size(); ++t) {
            blocks[t].sample_rate = traces[t]->sample_rate;
            blocks[t].samples.assign(block_len, 0.0);
            std::copy(traces[t]->samples.begin(), traces[t]->samples.end(),
                      blocks[t].samples.begin());
        }
        res.had_partial_block = n < block_len;
        const auto rec = fn(blocks, 0);
        std::copy(rec.begin(), rec.begin() + static_cast<std::ptrdiff_t>(n),
                  res.output.samples.begin());
        return res;
    }

    const std::size_t n_blocks = (n + keep - 1) / keep;
    res.had_partial_block = (n % keep) != 0;
    std::vector<IntensityTrace> blocks(traces.size());
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const auto kept_start = static_cast<std::ptrdiff_t>(b * keep);
        const std::ptrdiff_t start = kept_start - static_cast<std::ptrdiff_t>(margin);
        for (std::size_t t = 0; t < traces.size(); ++t) {
            blocks[t].sample_rate = traces[t]->sample_rate;
            blocks[t].samples.assign(block_len, 0.0);
            for (std::size_t j = 0; j < block_len; ++j) {
                const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(j);
                if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n))
                    blocks[t].samples[j] = traces[t]->samples[static_cast<std::size_t>(idx)];
            }
        }
        const auto rec = fn(blocks, static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, start)));
        if (rec.size() != block_len)
            throw std::runtime_error("overlap_save: block function returned wrong length");
        for (std::size_t j = 0; j < keep; ++j) {
            const std::size_t pos = b * keep + j;
            if (pos < n) res.output.samples[pos] = rec[margin + j];
        }
    }
    return res;
}

double theory_ber(double osnr_db, const Constellation& c, double baud, int n_pol) {
    const double osnr = std::pow(10.0, osnr_db / 10.0);
    const double snr = osnr * 2.0 * kOsnrRefBandwidth / (static_cast<double>(n_pol) * baud);
    const auto m = static_cast<double>(c.points().size());
    const double root_m = std::sqrt(m);
    const double arg = std::sqrt(3.0 * snr / (m - 1.0));
    return 4.0 * (root_m - 1.0) / (root_m * std::log2(m)) * qfunc(arg);
}

double theory_osnr_for_ber(double target_ber, const Constellation& c, double baud, int n_pol) {
    double lo = -20.0, hi = 60.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (theory_ber(mid, c, baud, n_pol) > target_ber)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace prism
