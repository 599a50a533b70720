#include "prism/pol_rx.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "prism/dsp.hpp"
#include "prism/fft.hpp"

namespace prism {

void QuadIntensityCapture::validate() const {
    const std::size_t n = a_x.size();
    if (n == 0 || b_x.size() != n || a_y.size() != n || b_y.size() != n)
        throw std::invalid_argument("quad capture: traces must be nonempty and equal length");
    for (const auto* t : {&a_x, &b_x, &a_y, &b_y})
        for (double v : t->samples)
            if (v < 0.0) throw std::invalid_argument("quad capture: negative intensity");
}

std::vector<Jones> ChannelMatrixEstimate::freq_response(std::size_t nfft) const {
    // DFT of the tap sequence; tap t carries delay (t - tap_offset)
    std::vector<Jones> H(nfft);
    for (std::size_t k = 0; k < nfft; ++k) {
        Jones acc;
        for (std::size_t t = 0; t < h_pm.size(); ++t) {
            const double delay = static_cast<double>(t) - static_cast<double>(tap_offset);
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) * delay /
                               static_cast<double>(nfft);
            const cplx ph = std::polar(1.0, ang);
            for (int i = 0; i < 4; ++i) acc.m[i] += h_pm[t].m[i] * ph;
        }
        H[k] = acc;
    }
    return H;
}

std::vector<Jones> ChannelMatrixEstimate::full_response(std::size_t n, double sample_rate) const {
    std::vector<Jones> H(n);
    const auto cd = link_cd.freq_response(n, sample_rate);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = fft::bin_frequency(k, n, sample_rate);
        Jones acc;
        for (std::size_t t = 0; t < h_pm.size(); ++t) {
            const double delay =
                (static_cast<double>(t) - static_cast<double>(tap_offset)) / baud_rate;
            const cplx ph = std::polar(1.0, -2.0 * std::numbers::pi * f * delay);
            for (int i = 0; i < 4; ++i) acc.m[i] += h_pm[t].m[i] * ph;
        }
        for (int i = 0; i < 4; ++i) acc.m[i] *= cd[k];
        H[k] = acc;
    }
    return H;
}

ChannelMatrixEstimate ChannelMatrixEstimate::single_tap(const Jones& j, double baud,
                                                        const DispersionOperator& cd) {
    ChannelMatrixEstimate est;
    est.h_pm = {j};
    est.tap_offset = 0;
    est.baud_rate = baud;
    est.link_cd = cd;
    return est;
}

namespace {

std::ptrdiff_t align_by_correlation(const std::vector<cplx>& z,
                                    const std::array<const SymbolFrame*, 2>& sent,
                                    std::size_t n_train, int max_lag) {
    // total cross-power against both transmitted streams per lag
    std::ptrdiff_t best_lag = 0;
    double best = -1.0;
    const std::ptrdiff_t t0 = max_lag;
    const std::ptrdiff_t t1 =
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n_train) - max_lag,
                                 static_cast<std::ptrdiff_t>(z.size()) - max_lag);
    if (t1 <= t0) return 0;
    for (std::ptrdiff_t lag = -max_lag; lag <= max_lag; ++lag) {
        double score = 0.0;
        for (int i = 0; i < 2; ++i) {
            cplx acc{0.0, 0.0};
            for (std::ptrdiff_t t = t0; t < t1; ++t)
                acc += z[static_cast<std::size_t>(t + lag)] *
                       std::conj(sent[i]->symbols[static_cast<std::size_t>(t)]);
            score += std::norm(acc);
        }
        if (score > best) {
            best = score;
            best_lag = lag;
        }
    }
    return best_lag;
}

}  // namespace

ChannelMatrixEstimate estimate_h(const std::array<ComplexWaveform, 2>& rx_cd_free,
                                 const std::array<const SymbolFrame*, 2>& sent,
                                 const DispersionOperator& link_cd,
                                 const EstimateHConfig& cfg) {
    const std::size_t n_train = sent[0]->n_training;
    if (n_train == 0) throw std::invalid_argument("estimate_h: no training symbols");
    if (sent[1]->n_training != n_train)
        throw std::invalid_argument("estimate_h: training length mismatch");
    const double baud = 0.0 < rx_cd_free[0].sample_rate
                            ? rx_cd_free[0].sample_rate /
                                  std::max<std::size_t>(1, rx_cd_free[0].size() /
                                                               sent[0]->symbols.size())
                            : 0.0;
    const int sps = static_cast<int>(rx_cd_free[0].size() / sent[0]->symbols.size());
    if (sps < 1) throw std::invalid_argument("estimate_h: rate mismatch");

    std::array<std::vector<cplx>, 2> z;
    for (int p = 0; p < 2; ++p) z[p] = decimate_to_symbols(rx_cd_free[p], sps);

    const std::ptrdiff_t lag = align_by_correlation(z[0], sent, n_train, cfg.max_lag);

    const int L = cfg.taps;
    const int half = L / 2;
    const int t_lo = half;
    const int t_hi = static_cast<int>(n_train) - half;
    if (t_hi - t_lo < 4 * L)
        throw std::invalid_argument("estimate_h: training too short for the tap count");

    using Mat = Eigen::MatrixXcd;
    using Vec = Eigen::VectorXcd;
    const int cols = 2 * L;
    Mat gram = Mat::Zero(cols, cols);
    Mat rhs = Mat::Zero(cols, 2);

    // regressor row: transmitted symbols of both polarizations, delays
    // tau in [-half, half)
    Vec row(cols);
    for (int t = t_lo; t < t_hi; ++t) {
        for (int tau = -half; tau < half; ++tau) {
            const auto idx = static_cast<std::size_t>(t - tau);
            row(tau + half) = sent[0]->symbols[idx];
            row(L + tau + half) = sent[1]->symbols[idx];
        }
        gram.noalias() += row * row.adjoint();
        for (int p = 0; p < 2; ++p) {
            const auto zi = static_cast<std::ptrdiff_t>(t) + lag;
            if (zi < 0 || zi >= static_cast<std::ptrdiff_t>(z[p].size())) continue;
            rhs.col(p) += row.conjugate() * z[p][static_cast<std::size_t>(zi)];
        }
    }
    // The quadratic form accumulates conj outer products; solve with the
    // conjugate to get the standard normal equations.
    Mat A = gram.conjugate();
    const double ridge = cfg.ridge * A.real().trace() / cols;
    for (int i = 0; i < cols; ++i) A(i, i) += ridge;

    Eigen::LDLT<Mat> solver(A);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("estimate_h: rank-deficient training matrix");
    Mat w = solver.solve(rhs);

    ChannelMatrixEstimate est;
    est.baud_rate = baud;
    est.link_cd = link_cd;
    est.tap_offset = static_cast<std::size_t>(half);
    est.h_pm.assign(static_cast<std::size_t>(L), Jones{});
    for (int tau = -half; tau < half; ++tau) {
        Jones j;
        j(0, 0) = w(tau + half, 0);
        j(0, 1) = w(L + tau + half, 0);
        j(1, 0) = w(tau + half, 1);
        j(1, 1) = w(L + tau + half, 1);
        est.h_pm[static_cast<std::size_t>(tau + half)] = j;
    }
    est.pdl_db = compute_pdl(est);
    return est;
}

double compute_pdl(const ChannelMatrixEstimate& est) {
    const std::size_t nfft = 256;
    const auto H = est.freq_response(nfft);
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& h : H) {
        const auto sv = h.singular_values();
        if (sv[1] <= 0.0) return std::numeric_limits<double>::infinity();
        acc += 20.0 * std::log10(sv[0] / sv[1]);
        ++count;
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

std::array<std::vector<cplx>, 2> propagate_pilots(
    const ChannelMatrixEstimate& est, const std::array<std::vector<cplx>, 2>& pilot_streams) {
    const std::size_t n = pilot_streams[0].size();
    if (pilot_streams[1].size() != n)
        throw std::invalid_argument("propagate_pilots: stream length mismatch");
    std::array<std::vector<cplx>, 2> out;
    out[0].assign(n, cplx{0.0, 0.0});
    out[1].assign(n, cplx{0.0, 0.0});
    const auto L = est.h_pm.size();
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t tau = 0; tau < L; ++tau) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) -
                                       (static_cast<std::ptrdiff_t>(tau) -
                                        static_cast<std::ptrdiff_t>(est.tap_offset));
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
            const auto& j = est.h_pm[tau];
            const cplx px = pilot_streams[0][static_cast<std::size_t>(src)];
            const cplx py = pilot_streams[1][static_cast<std::size_t>(src)];
            out[0][t] += j(0, 0) * px + j(0, 1) * py;
            out[1][t] += j(1, 0) * px + j(1, 1) * py;
        }
    }
    return out;
}

namespace {

// Pilot cadence over the training block: the whole block is known, pilots at
// the configured overhead anchor the retrieval.
std::vector<std::size_t> training_pilot_symbols(std::size_t n_train, double overhead) {
    std::vector<std::size_t> idx;
    if (overhead <= 0.0) overhead = 0.2;
    const auto step = static_cast<std::size_t>(std::lround(1.0 / overhead));
    for (std::size_t i = 0; i < n_train; i += step) idx.push_back(i);
    return idx;
}

struct BranchData {
    const IntensityTrace* a;
    const IntensityTrace* b;
    DispersionOperator disp;
};

// Blocked retrieval over [0, span) with pilot values taken from the
// predicted streams.
ComplexWaveform retrieve_branch(const BranchData& br, std::size_t span_samples,
                                const std::vector<cplx>& pilot_pred_stream,
                                const std::vector<std::size_t>& pilot_sym_idx,
                                const RetrievalConfig& cfg0, const JointLoopConfig& loop,
                                int sps, double* mean_err_out) {
    RetrievalConfig cfg = cfg0;
    cfg.retrieval_dispersion = br.disp;

    IntensityTrace a_span, b_span;
    a_span.sample_rate = br.a->sample_rate;
    b_span.sample_rate = br.b->sample_rate;
    a_span.samples.assign(br.a->samples.begin(),
                          br.a->samples.begin() + static_cast<std::ptrdiff_t>(span_samples));
    b_span.samples.assign(br.b->samples.begin(),
                          br.b->samples.begin() + static_cast<std::ptrdiff_t>(span_samples));

    double err_acc = 0.0;
    std::size_t err_n = 0;
    std::vector<const IntensityTrace*> traces{&a_span, &b_span};
    auto fn = [&](const std::vector<IntensityTrace>& blocks,
                  std::size_t abs_offset) -> std::vector<cplx> {
        // pilots falling inside this block, positions made block-relative
        PilotSet pilots;
        const std::size_t block_len = blocks[0].size();
        for (std::size_t si : pilot_sym_idx) {
            const std::size_t abs_sample = si * static_cast<std::size_t>(sps);
            if (abs_sample < abs_offset) continue;
            const std::size_t rel = abs_sample - abs_offset;
            if (rel >= block_len) continue;
            pilots.sample_indices.push_back(rel);
            pilots.values.push_back(pilot_pred_stream[si]);
        }
        auto [wave, rep] = run_retrieval(blocks[0], blocks[1], cfg, pilots, sps);
        err_acc += rep.final_mean_a_err;
        ++err_n;
        // undo the unit-power rescale so blocks stitch on a common scale
        return wave.samples;
    };
    auto res = overlap_save_run(traces, std::min(loop.block_len, span_samples),
                                loop.save_fraction, fn);
    if (mean_err_out) *mean_err_out = err_n ? err_acc / static_cast<double>(err_n) : 0.0;
    res.output.sample_rate = br.a->sample_rate;
    return std::move(res.output);
}

double estimate_delta(const ChannelMatrixEstimate& a, const ChannelMatrixEstimate& b) {
    const std::size_t nfft = 64;
    const auto Ha = a.freq_response(nfft);
    const auto Hb = b.freq_response(nfft);
    double m = 0.0;
    for (std::size_t k = 0; k < nfft; ++k)
        for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(Ha[k].m[i] - Hb[k].m[i]));
    return m;
}

}  // namespace

std::pair<ChannelMatrixEstimate, JointLoopReport> joint_estimation_loop(
    const QuadIntensityCapture& cap, const std::array<const SymbolFrame*, 2>& frames,
    const RetrievalConfig& cfg, const JointLoopConfig& loop) {
    cap.validate();
    const std::size_t n_train = frames[0]->n_training;
    if (n_train == 0 || frames[1]->n_training != n_train)
        throw std::invalid_argument("joint loop: frames must carry a training block");
    const std::size_t n = cap.a_x.size();
    const int sps = static_cast<int>(n / frames[0]->symbols.size());
    const std::size_t train_span = n_train * static_cast<std::size_t>(sps);

    Jones u0 = Jones::identity();
    if (loop.initial_unitary_seed != 0) {
        Rng r(mix64(loop.initial_unitary_seed));
        u0 = random_unitary(r);
    }
    const double baud = cap.a_x.sample_rate / sps;
    ChannelMatrixEstimate est = ChannelMatrixEstimate::single_tap(u0, baud, cfg.link_cd);

    const double overhead = loop.training_pilot_overhead;
    const auto pilot_syms = training_pilot_symbols(
        n_train, overhead > 0.0 ? overhead : 0.2);

    std::array<std::vector<cplx>, 2> sent_train;
    for (int p = 0; p < 2; ++p)
        sent_train[p].assign(frames[p]->symbols.begin(),
                             frames[p]->symbols.begin() + static_cast<std::ptrdiff_t>(n_train));

    JointLoopReport rep;
    const BranchData bx{&cap.a_x, &cap.b_x, cap.retrieval_dispersion_x};
    const BranchData by{&cap.a_y, &cap.b_y, cap.retrieval_dispersion_y};

    for (int it = 0; it < loop.n_iterations; ++it) {
        const auto pred = propagate_pilots(est, sent_train);
        double ex = 0.0, ey = 0.0;
        std::array<ComplexWaveform, 2> rec;
        rec[0] = retrieve_branch(bx, train_span, pred[0], pilot_syms, cfg, loop, sps, &ex);
        rec[1] = retrieve_branch(by, train_span, pred[1], pilot_syms, cfg, loop, sps, &ey);
        for (int p = 0; p < 2; ++p) rec[p] = compensate_cd(rec[p], cfg.link_cd);

        ChannelMatrixEstimate next = estimate_h({rec[0], rec[1]}, frames, cfg.link_cd,
                                                loop.estimator);
        next.iteration = it + 1;
        rep.estimate_delta.push_back(estimate_delta(est, next));
        rep.mean_a_err.push_back(0.5 * (ex + ey));
        rep.pdl_per_iteration_db.push_back(next.pdl_db);
        est = next;
    }
    return {est, rep};
}

std::array<ComplexWaveform, 2> retrieve_dual_pol(
    const QuadIntensityCapture& cap, const std::array<const SymbolFrame*, 2>& frames,
    const ChannelMatrixEstimate& est, const RetrievalConfig& cfg,
    const JointLoopConfig& loop) {
    cap.validate();
    const std::size_t n = cap.a_x.size();
    const int sps = static_cast<int>(n / frames[0]->symbols.size());
    const std::size_t n_sym = frames[0]->symbols.size();
    const std::size_t n_train = frames[0]->n_training;

    // Known-symbol streams: training entirely, payload only at pilots.
    std::array<std::vector<cplx>, 2> streams;
    for (int p = 0; p < 2; ++p) {
        streams[p].assign(n_sym, cplx{0.0, 0.0});
        for (std::size_t i = 0; i < n_train; ++i) streams[p][i] = frames[p]->symbols[i];
        for (std::size_t i : frames[p]->pilot_frame_indices())
            streams[p][i] = frames[p]->symbols[i];
    }
    const auto pred = propagate_pilots(est, streams);

    const double overhead = loop.training_pilot_overhead > 0.0
                                ? loop.training_pilot_overhead
                                : 0.2;
    std::vector<std::size_t> pilot_syms = training_pilot_symbols(n_train, overhead);
    for (std::size_t i : frames[0]->pilot_frame_indices()) pilot_syms.push_back(i);

    const BranchData bx{&cap.a_x, &cap.b_x, cap.retrieval_dispersion_x};
    const BranchData by{&cap.a_y, &cap.b_y, cap.retrieval_dispersion_y};
    std::array<ComplexWaveform, 2> out;
    out[0] = retrieve_branch(bx, n, pred[0], pilot_syms, cfg, loop, sps, nullptr);
    out[1] = retrieve_branch(by, n, pred[1], pilot_syms, cfg, loop, sps, nullptr);
    return out;
}

}  // namespace prism
