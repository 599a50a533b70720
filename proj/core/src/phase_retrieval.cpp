#include "prism/phase_retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "prism/fft.hpp"

namespace prism {

namespace {

inline cplx unit_phasor(cplx v) {
    const double m = std::abs(v);
    return m > 0.0 ? v / m : cplx{1.0, 0.0};
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> rect_mask(std::size_t n, double sample_rate, double baud, double rolloff) {
    std::vector<double> m(n, 0.0);
    const double edge = (1.0 + rolloff) * baud / 2.0;
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(fft::bin_frequency(k, n, sample_rate)) <= edge) m[k] = 1.0;
    return m;
}

// Modified-GS engine over one capture. Multipliers carry the 1/N inverse-FFT
// normalization so the loop can run raw unnormalized transforms.
class GsEngine {
  public:
    GsEngine(const IntensityTrace& a, std::vector<const IntensityTrace*> bs,
             std::vector<DispersionOperator> elements, const RetrievalConfig& cfg,
             const PilotSet& pilots, int sps, bool normalize)
        : n_(a.size()), sps_(static_cast<std::size_t>(sps)), cfg_(cfg), pilots_(pilots) {
        if (n_ == 0) throw std::invalid_argument("retrieval: empty trace");
        for (const auto* b : bs)
            if (b->size() != n_)
                throw std::invalid_argument("retrieval: trace length mismatch");
        const double fs = a.sample_rate;

        // Common scale anchored to the undispersed trace's maximum keeps the
        // two planes power-consistent (dispersion is energy preserving).
        double amax = 1.0;
        if (normalize) {
            amax = a.max();
            if (amax <= 0.0) throw std::invalid_argument("retrieval: all-zero trace");
        }
        an_.resize(n_);
        sqrt_a_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            an_[i] = a.samples[i] / amax;
            sqrt_a_[i] = std::sqrt(std::max(0.0, an_[i]));
        }
        sqrt_bs_.resize(bs.size());
        for (std::size_t e = 0; e < bs.size(); ++e) {
            sqrt_bs_[e].resize(n_);
            for (std::size_t i = 0; i < n_; ++i)
                sqrt_bs_[e][i] = std::sqrt(std::max(0.0, bs[e]->samples[i] / amax));
        }

        const auto hcd = cfg.link_cd.freq_response(n_, fs);
        const auto mask = rect_mask(n_, fs, cfg.mask_baud, cfg.mask_rolloff);
        const double inv_n = 1.0 / static_cast<double>(n_);
        m_cd_inv_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) m_cd_inv_[k] = std::conj(hcd[k]) * inv_n;
        m_fwd_.resize(elements.size());
        m_back_mask_.resize(elements.size());
        for (std::size_t e = 0; e < elements.size(); ++e) {
            const auto hd = elements[e].freq_response(n_, fs);
            m_fwd_[e].resize(n_);
            m_back_mask_[e].resize(n_);
            for (std::size_t k = 0; k < n_; ++k) {
                m_fwd_[e][k] = hcd[k] * hd[k] * inv_n;
                m_back_mask_[e][k] = std::conj(hd[k]) * mask[k] * inv_n;
            }
        }

        centers_.clear();
        for (std::size_t i = 0; i * sps_ < n_; ++i) centers_.push_back(i * sps_);

        pilot_phasors_.resize(pilots_.values.size());
        for (std::size_t i = 0; i < pilots_.values.size(); ++i)
            pilot_phasors_[i] = unit_phasor(pilots_.values[i]);
    }

    std::size_t size() const { return n_; }
    const std::vector<double>& normalized_a() const { return an_; }

    void init_random(std::vector<cplx>& s, Rng& rng) const {
        s.resize(n_);
        for (auto& v : s) v = std::polar(1.0, rng.phase());
    }

    double pilot_weight(int iteration, int max_iterations) const {
        const auto& st = cfg_.pilot_weight_stages;
        if (st.empty()) return 1.0;
        const double f = static_cast<double>(iteration) / std::max(1, max_iterations);
        const auto idx = std::min(st.size() - 1,
                                  static_cast<std::size_t>(f * static_cast<double>(st.size())));
        return st[idx];
    }

    // One full cycle against element e; fills a_err and returns its
    // all-sample mean.
    double iterate(std::vector<cplx>& s, std::size_t e, double pilot_w,
                   std::vector<double>& a_err) {
        const double g = cfg_.amplitude_relax;
        for (std::size_t i = 0; i < n_; ++i) {
            const double mag = g <= 0.0 ? sqrt_a_[i]
                                        : (1.0 - g) * sqrt_a_[i] + g * std::abs(s[i]);
            s[i] = mag * unit_phasor(s[i]);
        }
        fft::forward(s);
        for (std::size_t k = 0; k < n_; ++k) s[k] *= m_cd_inv_[k];
        fft::backward_raw(s);
        apply_pilots(s, pilot_w);
        fft::forward(s);
        for (std::size_t k = 0; k < n_; ++k) s[k] *= m_fwd_[e][k];
        fft::backward_raw(s);
        const auto& sb = sqrt_bs_[e];
        for (std::size_t i = 0; i < n_; ++i) {
            const double mag = g <= 0.0 ? sb[i] : (1.0 - g) * sb[i] + g * std::abs(s[i]);
            s[i] = mag * unit_phasor(s[i]);
        }
        fft::forward(s);
        for (std::size_t k = 0; k < n_; ++k) s[k] *= m_back_mask_[e][k];
        fft::backward_raw(s);

        a_err.resize(n_);
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double d = an_[i] - std::norm(s[i]);
            a_err[i] = d * d;
            acc += a_err[i];
        }
        return acc / static_cast<double>(n_);
    }

    double symbol_mean(const std::vector<double>& a_err) const {
        double acc = 0.0;
        for (std::size_t c : centers_) acc += a_err[c];
        return centers_.empty() ? 0.0 : acc / static_cast<double>(centers_.size());
    }

    void escape(std::vector<cplx>& s, const std::vector<double>& a_err, double mean_err,
                Rng& rng) const {
        const double thr = cfg_.escape_relative > 0.0
                               ? std::max(cfg_.epsilon, cfg_.escape_relative * mean_err)
                               : cfg_.epsilon;
        std::vector<std::uint8_t> bad(n_, 0);
        bool any = false;
        for (std::size_t i = 0; i < n_; ++i)
            if (a_err[i] > thr) {
                bad[i] = 1;
                any = true;
            }
        if (!any) return;
        if (cfg_.escape_dilation > 0) {
            std::vector<std::uint8_t> dil(bad);
            const auto w = static_cast<std::size_t>(cfg_.escape_dilation);
            for (std::size_t i = 0; i < n_; ++i) {
                if (!bad[i]) continue;
                for (std::size_t off = 1; off <= w; ++off) {
                    dil[(i + off) % n_] = 1;
                    dil[(i + n_ - off) % n_] = 1;
                }
            }
            bad.swap(dil);
        }
        for (std::size_t i = 0; i < n_; ++i)
            if (bad[i]) s[i] = std::abs(s[i]) * std::polar(1.0, rng.phase());
    }

    void apply_pilots(std::vector<cplx>& u, double w) const {
        if (w <= 0.0) return;
        const bool full = cfg_.pilot_constraint == PilotConstraintMode::full_field;
        double gain = 1.0;
        if (full) {
            // Self-calibrating scale: the constraint values live in symbol
            // units, the estimate in normalized-intensity units.
            double pw = 0.0, sw = 0.0;
            for (std::size_t c : centers_) pw += std::norm(u[c]);
            pw /= std::max<std::size_t>(1, centers_.size());
            for (const auto& v : pilots_.values) sw += std::norm(v);
            sw /= std::max<std::size_t>(1, pilots_.values.size());
            gain = sw > 0.0 ? std::sqrt(pw / sw) : 1.0;
        }
        for (std::size_t i = 0; i < pilots_.sample_indices.size(); ++i) {
            const std::size_t idx = pilots_.sample_indices[i];
            if (idx >= n_) continue;
            if (full && w >= 1.0) {
                u[idx] = gain * pilots_.values[i];
                continue;
            }
            const cplx target = pilot_phasors_[i];
            cplx ph;
            if (w >= 1.0) {
                ph = target;
            } else {
                const cplx mix = (1.0 - w) * unit_phasor(u[idx]) + w * target;
                ph = unit_phasor(mix);
            }
            const double mag = full ? gain * std::abs(pilots_.values[i]) : std::abs(u[idx]);
            u[idx] = mag * ph;
        }
    }

  private:
    std::size_t n_;
    std::size_t sps_;
    RetrievalConfig cfg_;
    PilotSet pilots_;
    std::vector<cplx> pilot_phasors_;
    std::vector<double> an_, sqrt_a_;
    std::vector<std::vector<double>> sqrt_bs_;
    std::vector<cplx> m_cd_inv_;
    std::vector<std::vector<cplx>> m_fwd_, m_back_mask_;
    std::vector<std::size_t> centers_;
};

// Per-symbol |delta theta| against the band-limited truth in the CD-free
// domain, with global rotation and a sliding 64-symbol common phase removed.
std::vector<double> delta_theta_vs_truth(const ComplexWaveform& recovered,
                                         const ComplexWaveform& truth,
                                         const RetrievalConfig& cfg, int sps) {
    const std::size_t n = recovered.size();
    std::vector<cplx> um(recovered.samples);
    std::vector<cplx> tm(truth.samples);
    const auto mask = rect_mask(n, recovered.sample_rate, cfg.mask_baud, cfg.mask_rolloff);
    const auto inv_cd = cfg.link_cd.inverse().freq_response(n, recovered.sample_rate);
    fft::forward(um);
    fft::forward(tm);
    for (std::size_t k = 0; k < n; ++k) {
        um[k] *= inv_cd[k] * mask[k];
        tm[k] *= inv_cd[k] * mask[k];
    }
    fft::inverse(um);
    fft::inverse(tm);

    const std::size_t n_sym = n / static_cast<std::size_t>(sps);
    std::vector<cplx> r(n_sym);
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < n_sym; ++i) {
        r[i] = um[i * sps] * std::conj(tm[i * sps]);
        acc += r[i];
    }
    const cplx grot = unit_phasor(acc);
    for (auto& v : r) v *= std::conj(grot);

    constexpr std::size_t kHalfWindow = 32;
    std::vector<cplx> csum(n_sym + 1, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n_sym; ++i) csum[i + 1] = csum[i] + r[i];
    std::vector<double> dth(n_sym);
    for (std::size_t i = 0; i < n_sym; ++i) {
        const std::size_t lo = i > kHalfWindow ? i - kHalfWindow : 0;
        const std::size_t hi = std::min(n_sym, i + kHalfWindow);
        const cplx slow = unit_phasor(csum[hi] - csum[lo]);
        dth[i] = std::abs(std::arg(r[i] * std::conj(slow)));
    }
    return dth;
}

}  // namespace

void RetrievalConfig::validate() const {
    if (epsilon <= 0.0) throw std::invalid_argument("retrieval: epsilon must be positive");
    if (reset_period < 1) throw std::invalid_argument("retrieval: reset_period must be >= 1");
    if (max_escapes < 1) throw std::invalid_argument("retrieval: max_escapes must be >= 1");
    if (retrieval_dispersion.is_zero())
        throw std::invalid_argument("retrieval: retrieval dispersion must be nonzero");
    if (amplitude_relax < 0.0 || amplitude_relax >= 1.0)
        throw std::invalid_argument("retrieval: amplitude_relax out of [0, 1)");
}

PilotSet PilotSet::from_frame(const SymbolFrame& frame, int samples_per_symbol) {
    PilotSet p;
    for (std::size_t idx : frame.pilot_frame_indices()) {
        p.sample_indices.push_back(idx * static_cast<std::size_t>(samples_per_symbol));
        p.values.push_back(frame.symbols[idx]);
    }
    return p;
}

double RetrievalState::mean_a_err() const { return mean_of(a_err); }

RetrievalState gs_iteration(const RetrievalState& state, const IntensityTrace& a,
                            const IntensityTrace& b, const RetrievalConfig& cfg,
                            const SymbolFrame& frame) {
    cfg.validate();
    if (a.size() != b.size() || a.size() != state.s_est.size())
        throw std::invalid_argument("gs_iteration: length mismatch");
    const int sps = static_cast<int>(a.size() / frame.symbols.size());
    GsEngine eng(a, {&b}, {cfg.retrieval_dispersion}, cfg,
                 PilotSet::from_frame(frame, sps), sps, /*normalize=*/false);
    RetrievalState next = state;
    next.iteration = state.iteration + 1;
    const double w = eng.pilot_weight(next.iteration, cfg.max_iterations());
    eng.iterate(next.s_est, 0, w, next.a_err);
    return next;
}

RetrievalState escape_local_minimum(const RetrievalState& state, const RetrievalConfig& cfg,
                                    Rng& rng) {
    RetrievalState next = state;
    if (next.a_err.size() != next.s_est.size())
        throw std::invalid_argument("escape: state missing a_err");
    const double mean_err = next.mean_a_err();
    const double thr = cfg.escape_relative > 0.0
                           ? std::max(cfg.epsilon, cfg.escape_relative * mean_err)
                           : cfg.epsilon;
    const std::size_t n = next.s_est.size();
    std::vector<std::uint8_t> bad(n, 0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
        if (next.a_err[i] > thr) {
            bad[i] = 1;
            any = true;
        }
    if (!any) return next;
    if (cfg.escape_dilation > 0) {
        std::vector<std::uint8_t> dil(bad);
        const auto w = static_cast<std::size_t>(cfg.escape_dilation);
        for (std::size_t i = 0; i < n; ++i) {
            if (!bad[i]) continue;
            for (std::size_t off = 1; off <= w; ++off) {
                dil[(i + off) % n] = 1;
                dil[(i + n - off) % n] = 1;
            }
        }
        bad.swap(dil);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (bad[i]) next.s_est[i] = std::abs(next.s_est[i]) * std::polar(1.0, rng.phase());
    next.escapes_done = state.escapes_done + 1;
    return next;
}

namespace {

std::pair<ComplexWaveform, RetrievalReport> run_engine(
    GsEngine& eng, const IntensityTrace& a, const RetrievalConfig& cfg, int sps,
    const std::vector<std::size_t>& element_of_iteration, const ComplexWaveform* truth,
    const std::vector<cplx>* init_field) {
    Rng rng(mix64(cfg.seed ^ 0x47530001ULL));
    const int maxit = static_cast<int>(element_of_iteration.size());

    std::vector<cplx> s;
    if (cfg.init == PhaseInit::provided) {
        if (!init_field || init_field->size() != eng.size())
            throw std::invalid_argument("retrieval: provided init missing or wrong length");
        s = *init_field;
    } else {
        eng.init_random(s, rng);
    }

    RetrievalReport rep;
    rep.mean_a_err_trace_db.reserve(maxit);
    std::vector<double> a_err;
    std::vector<cplx> best_s;
    double best_m = std::numeric_limits<double>::infinity();
    double m = std::numeric_limits<double>::infinity();
    double sym_m = 0.0;
    int it = 0;

    for (it = 1; it <= maxit; ++it) {
        const double w = eng.pilot_weight(it, maxit);
        m = eng.iterate(s, element_of_iteration[it - 1], w, a_err);
        sym_m = eng.symbol_mean(a_err);
        rep.mean_a_err_trace_db.push_back(10.0 * std::log10(std::max(sym_m, 1e-300)));
        if (cfg.keep_best && m < best_m) {
            best_m = m;
            best_s = s;
        }
        if (m < cfg.epsilon) {
            rep.converged = true;
            break;
        }
        if (it % cfg.reset_period == 0 && it < maxit) {
            eng.escape(s, a_err, m, rng);
            ++rep.escapes_done;
        }
    }
    rep.iterations_used = std::min(it, maxit);
    if (cfg.keep_best && best_m < m) s = std::move(best_s);
    // Recompute a_err of the returned state so the report is self-consistent.
    {
        std::vector<double> final_err(eng.size());
        const auto& an = eng.normalized_a();
        double acc = 0.0;
        for (std::size_t i = 0; i < eng.size(); ++i) {
            const double d = an[i] - std::norm(s[i]);
            final_err[i] = d * d;
            acc += final_err[i];
        }
        m = acc / static_cast<double>(eng.size());
        sym_m = eng.symbol_mean(final_err);
    }
    rep.final_mean_a_err = m;
    rep.final_symbol_a_err = sym_m;

    ComplexWaveform out;
    out.sample_rate = a.sample_rate;
    out.samples = std::move(s);
    const double p = out.mean_power();
    if (p > 0.0) out.scale(1.0 / std::sqrt(p));  // unit average power to the DSP

    if (truth) {
        if (truth->size() != out.size())
            throw std::invalid_argument("retrieval: truth length mismatch");
        rep.delta_theta = delta_theta_vs_truth(out, *truth, cfg, sps);
    }
    return {std::move(out), std::move(rep)};
}

}  // namespace

std::pair<ComplexWaveform, RetrievalReport> run_retrieval(
    const IntensityTrace& a, const IntensityTrace& b, const RetrievalConfig& cfg,
    const PilotSet& pilots, int samples_per_symbol, const ComplexWaveform* truth,
    const std::vector<cplx>* init_field) {
    cfg.validate();
    GsEngine eng(a, {&b}, {cfg.retrieval_dispersion}, cfg, pilots, samples_per_symbol,
                 /*normalize=*/true);
    std::vector<std::size_t> sched(static_cast<std::size_t>(cfg.max_iterations()), 0);
    return run_engine(eng, a, cfg, samples_per_symbol, sched, truth, init_field);
}

std::pair<ComplexWaveform, RetrievalReport> run_retrieval(
    const IntensityTrace& a, const IntensityTrace& b, const RetrievalConfig& cfg,
    const SymbolFrame& frame, const ComplexWaveform* truth) {
    if (frame.symbols.empty()) throw std::invalid_argument("retrieval: empty frame");
    const int sps = static_cast<int>(a.size() / frame.symbols.size());
    if (sps < 1 || frame.symbols.size() * static_cast<std::size_t>(sps) != a.size())
        throw std::invalid_argument("retrieval: frame/trace length mismatch");
    return run_retrieval(a, b, cfg, PilotSet::from_frame(frame, sps), sps, truth, nullptr);
}

void ProjectionSet::validate() const {
    if (elements.size() < 2 || elements.size() != traces.size())
        throw std::invalid_argument("projection set: need N >= 2 elements with traces");
    const double delta = elements.front().total_ps_per_nm;
    if (delta == 0.0) throw std::invalid_argument("projection set: zero dispersion increment");
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const double expect = delta * static_cast<double>(i + 1);
        if (std::abs(elements[i].total_ps_per_nm - expect) > 1e-9 * std::abs(delta))
            throw std::invalid_argument("projection set: element n must carry n * delta");
    }
}

std::pair<ComplexWaveform, RetrievalReport> run_multi_projection(
    const IntensityTrace& a, const ProjectionSet& ps, const RetrievalConfig& cfg,
    const SymbolFrame& frame) {
    cfg.validate();
    ps.validate();
    const std::size_t n_el = ps.elements.size();
    const int total = cfg.max_iterations();
    std::vector<std::size_t> sched(static_cast<std::size_t>(total), 0);
    const int per_element = total / static_cast<int>(n_el);
    switch (ps.schedule) {
        case ProjectionSchedule::scheme1:
            for (int i = 0; i < total; ++i) sched[i] = static_cast<std::size_t>(i) % n_el;
            break;
        case ProjectionSchedule::scheme2:
            for (int i = 0; i < total; ++i)
                sched[i] = std::min(n_el - 1, static_cast<std::size_t>(i / per_element));
            break;
        case ProjectionSchedule::combined: {
            const int half = total / 2;
            for (int i = 0; i < half; ++i) sched[i] = static_cast<std::size_t>(i) % n_el;
            const int per2 = std::max(1, (total - half) / static_cast<int>(n_el));
            for (int i = half; i < total; ++i)
                sched[i] = std::min(n_el - 1, static_cast<std::size_t>((i - half) / per2));
            break;
        }
    }
    const int sps = static_cast<int>(a.size() / frame.symbols.size());
    std::vector<const IntensityTrace*> bs;
    for (const auto& t : ps.traces) bs.push_back(&t);
    GsEngine eng(a, bs, ps.elements, cfg, PilotSet::from_frame(frame, sps), sps,
                 /*normalize=*/true);
    return run_engine(eng, a, cfg, sps, sched, nullptr, nullptr);
}

B2Estimate estimate_b2(const IntensityTrace& a, const ComplexWaveform& x,
                       const B2SearchGrid& grid) {
    if (a.size() != x.size()) throw std::invalid_argument("estimate_b2: length mismatch");
    if (grid.step_ps_per_nm <= 0.0) throw std::invalid_argument("estimate_b2: bad grid step");
    const std::size_t n = a.size();

    const double a_mean = a.mean();
    std::vector<double> ac(n);
    double a_var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ac[i] = a.samples[i] - a_mean;
        a_var += ac[i] * ac[i];
    }

    auto corr_at = [&](double d_ps_nm) {
        ComplexWaveform w = x;
        apply_dispersion_inplace(w.samples, w.sample_rate,
                                 DispersionOperator{d_ps_nm, x.center_wavelength});
        double q_mean = 0.0;
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = std::norm(w.samples[i]);
            q_mean += q[i];
        }
        q_mean /= static_cast<double>(n);
        double num = 0.0, q_var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double qc = q[i] - q_mean;
            num += ac[i] * qc;
            q_var += qc * qc;
        }
        const double den = std::sqrt(a_var * q_var);
        return den > 0.0 ? num / den : 0.0;
    };

    std::vector<double> corr;
    std::vector<double> dval;
    for (double d = grid.start_ps_per_nm; d <= grid.stop_ps_per_nm + 1e-9;
         d += grid.step_ps_per_nm) {
        dval.push_back(d);
        corr.push_back(corr_at(d));
    }
    std::size_t imax = 0;
    for (std::size_t i = 1; i < corr.size(); ++i)
        if (corr[i] > corr[imax]) imax = i;

    // parabolic refinement on the log-free correlation values
    double refined = dval[imax];
    if (imax > 0 && imax + 1 < corr.size()) {
        const double c0 = corr[imax - 1], c1 = corr[imax], c2 = corr[imax + 1];
        const double den = c0 - 2.0 * c1 + c2;
        if (std::abs(den) > 1e-15) {
            const double shift = 0.5 * (c0 - c2) / den;
            if (std::abs(shift) <= 1.0) refined += shift * grid.step_ps_per_nm;
        }
    }

    std::vector<double> sorted(corr);
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];

    B2Estimate est;
    est.op = DispersionOperator{refined, x.center_wavelength};
    est.peak_correlation = corr[imax];
    est.low_confidence = (corr[imax] - median) < 0.02;
    return est;
}

}  // namespace prism
