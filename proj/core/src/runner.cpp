#include "prism/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <queue>
#include <thread>

#include "json.hpp"
#include "prism/channel.hpp"
#include "prism/fft.hpp"

namespace prism {

namespace {

struct Capture {
    // per polarization: received field (post filter) and the two traces
    std::vector<ComplexWaveform> rx;
    std::vector<IntensityTrace> a, b;
    std::vector<SymbolFrame> frames;
};

// Transmit + channel + photodetection for one run.
Capture make_capture(const Scenario& s, std::uint64_t seed) {
    Capture cap;
    const auto spec = s.frame_spec();
    const auto c = Constellation::make(s.modulation);
    const int n_pol = s.dual_pol ? 2 : 1;

    Rng master(mix64(seed ^ 0x7072697374ULL));
    Rng noise_rng = master.fork(1);
    Rng ortho_rng = master.fork(2);
    Rng enob_rng = master.fork(3);

    std::vector<ComplexWaveform> tx;
    for (int p = 0; p < n_pol; ++p) {
        cap.frames.push_back(build_frame(mix64(seed + 0x9e37ULL * p), spec, c));
        auto w = shape_pulse(cap.frames.back().symbols, spec);
        w.center_wavelength = s.center_wavelength;
        tx.push_back(std::move(w));
    }

    const DispersionOperator link_cd{s.link.total_dispersion_ps_nm(), s.center_wavelength};
    for (auto& w : tx) w = apply_dispersion(w, link_cd);

    if (s.dual_pol && (s.link.dgd_total_s > 0.0 || s.link.pmd_sections > 0)) {
        const std::uint64_t ch_seed =
            s.link.channel_seed ? s.link.channel_seed : mix64(seed ^ 0x504d44ULL);
        const auto ch = PolarizationChannel::make_random(
            ch_seed, std::max(1, s.link.pmd_sections), s.link.dgd_total_s);
        auto [ox, oy] = apply_polarization_channel(tx[0], tx[1], ch);
        tx[0] = std::move(ox);
        tx[1] = std::move(oy);
    }

    NoiseModel nm;
    nm.target_osnr_db = s.osnr_db;
    std::vector<ComplexWaveform*> ptrs;
    for (auto& w : tx) ptrs.push_back(&w);
    load_noise(ptrs, nm, noise_rng);

    const double rx_bw = s.effective_rx_bandwidth();
    const DispersionOperator ret_d = s.retrieval.retrieval_dispersion;
    for (auto& w : tx) {
        auto filtered = bandpass(w, rx_bw);
        cap.a.push_back(photodetect(filtered));
        cap.b.push_back(photodetect(apply_dispersion(filtered, ret_d)));
        cap.rx.push_back(std::move(filtered));
    }

    if (!s.dual_pol && s.include_orthogonal_ase && std::isfinite(s.osnr_db)) {
        // a polarizer-less receiver photodetects the orthogonal ASE too
        double p_total = 0.0;
        for (const auto& w : cap.rx) p_total += w.mean_power();
        // same PSD as the co-polarized ASE
        const double n0 =
            p_total / (2.0 * std::pow(10.0, s.osnr_db / 10.0) * kOsnrRefBandwidth);
        ComplexWaveform ny;
        ny.sample_rate = cap.rx[0].sample_rate;
        ny.center_wavelength = s.center_wavelength;
        ny.samples.resize(cap.rx[0].size());
        const double amp = std::sqrt(n0 * ny.sample_rate);
        for (auto& v : ny.samples) v = amp * ortho_rng.cnormal();
        ny = bandpass(ny, rx_bw);
        const auto nyd = apply_dispersion(ny, ret_d);
        for (std::size_t i = 0; i < ny.size(); ++i) {
            cap.a[0].samples[i] += std::norm(ny.samples[i]);
            cap.b[0].samples[i] += std::norm(nyd.samples[i]);
        }
    }

    if (std::isfinite(s.enob)) {
        for (auto& t : cap.a) t = quantize_enob(t, s.enob, enob_rng);
        for (auto& t : cap.b) t = quantize_enob(t, s.enob, enob_rng);
    }
    return cap;
}

PointResult run_single_pol(const Scenario& s, std::uint64_t seed, Capture cap) {
    PointResult res;
    const auto c = Constellation::make(s.modulation);
    const auto& frame = cap.frames[0];
    const DispersionOperator link_cd{s.link.total_dispersion_ps_nm(), s.center_wavelength};

    RetrievalConfig cfg = s.retrieval;
    cfg.link_cd = link_cd;
    cfg.mask_baud = s.baud;
    cfg.mask_rolloff = s.rolloff;
    cfg.seed = mix64(seed ^ 0x524554ULL);

    ComplexWaveform recovered;
    const std::size_t n = cap.a[0].size();
    if (n <= s.dsp.block_len) {
        auto [wave, report] = run_retrieval(cap.a[0], cap.b[0], cfg, frame, &cap.rx[0]);
        recovered = std::move(wave);
        res.report = std::move(report);
    } else {
        // block-wise with 50% save; pilot anchors from the frame
        const auto pilots = PilotSet::from_frame(frame, s.samples_per_symbol);
        std::vector<const IntensityTrace*> traces{&cap.a[0], &cap.b[0]};
        double err_acc = 0.0;
        std::size_t n_blocks = 0;
        int iters = 0;
        bool all_conv = true;
        auto fn = [&](const std::vector<IntensityTrace>& blocks,
                      std::size_t abs_offset) -> std::vector<cplx> {
            PilotSet bp;
            for (std::size_t i = 0; i < pilots.sample_indices.size(); ++i) {
                const std::size_t abs_idx = pilots.sample_indices[i];
                if (abs_idx < abs_offset || abs_idx - abs_offset >= blocks[0].size()) continue;
                bp.sample_indices.push_back(abs_idx - abs_offset);
                bp.values.push_back(pilots.values[i]);
            }
            auto [wave, rep] =
                run_retrieval(blocks[0], blocks[1], cfg, bp, s.samples_per_symbol);
            err_acc += rep.final_mean_a_err;
            iters += rep.iterations_used;
            all_conv = all_conv && rep.converged;
            ++n_blocks;
            return wave.samples;
        };
        auto osr = overlap_save_run(traces, s.dsp.block_len, s.dsp.save_fraction, fn);
        recovered = std::move(osr.output);
        res.report.final_mean_a_err = n_blocks ? err_acc / n_blocks : 0.0;
        res.report.iterations_used = iters;
        res.report.converged = all_conv;
    }

    auto cdfree = compensate_cd(recovered, link_cd);
    auto z = decimate_to_symbols(cdfree, s.samples_per_symbol);
    double pw = 0.0;
    for (const auto& v : z) pw += std::norm(v);
    pw = std::sqrt(pw / std::max<std::size_t>(1, z.size()));
    if (pw > 0.0)
        for (auto& v : z) v /= pw;

    // payload slice with pilot anchors
    std::vector<cplx> payload(z.begin() + static_cast<std::ptrdiff_t>(frame.n_training),
                              z.end());
    std::vector<std::size_t> ppos;
    std::vector<cplx> pval;
    for (std::size_t i = frame.n_training; i < frame.symbols.size(); ++i)
        if (frame.pilot_mask[i]) {
            ppos.push_back(i - frame.n_training);
            pval.push_back(frame.symbols[i]);
        }
    auto zr = carrier_phase_recovery(payload, c, ppos, pval, s.dsp.carrier);
    res.ber_report = count_ber({zr}, {&frame}, c);
    return res;
}

PointResult run_dual_pol(const Scenario& s, std::uint64_t seed, Capture cap) {
    PointResult res;
    const auto c = Constellation::make(s.modulation);
    const DispersionOperator link_cd{s.link.total_dispersion_ps_nm(), s.center_wavelength};

    RetrievalConfig cfg = s.retrieval;
    cfg.link_cd = link_cd;
    cfg.mask_baud = s.baud;
    cfg.mask_rolloff = s.rolloff;
    cfg.seed = mix64(seed ^ 0x524554ULL);

    QuadIntensityCapture quad;
    quad.a_x = std::move(cap.a[0]);
    quad.b_x = std::move(cap.b[0]);
    quad.a_y = std::move(cap.a[1]);
    quad.b_y = std::move(cap.b[1]);
    quad.retrieval_dispersion_x = s.retrieval.retrieval_dispersion;
    quad.retrieval_dispersion_y = s.retrieval.retrieval_dispersion;

    const std::array<const SymbolFrame*, 2> frames{&cap.frames[0], &cap.frames[1]};
    JointLoopConfig loop = s.joint;
    if (loop.training_pilot_overhead <= 0.0) loop.training_pilot_overhead = s.pilot_overhead;

    auto [est, loop_rep] = joint_estimation_loop(quad, frames, cfg, loop);
    res.pdl_per_iteration_db = loop_rep.pdl_per_iteration_db;

    auto fields = retrieve_dual_pol(quad, frames, est, cfg, loop);
    res.report.final_mean_a_err =
        loop_rep.mean_a_err.empty() ? 0.0 : loop_rep.mean_a_err.back();
    res.report.converged = true;

    std::array<std::vector<cplx>, 2> z;
    for (int p = 0; p < 2; ++p) {
        auto cdfree = compensate_cd(fields[p], link_cd);
        z[p] = decimate_to_symbols(cdfree, s.samples_per_symbol);
        double pw = 0.0;
        for (const auto& v : z[p]) pw += std::norm(v);
        pw = std::sqrt(pw / std::max<std::size_t>(1, z[p].size()));
        if (pw > 0.0)
            for (auto& v : z[p]) v /= pw;
    }

    auto [eq, eq_rep] = mimo_equalize({z[0], z[1]}, frames, s.dsp.equalizer);

    std::vector<std::vector<cplx>> recovered_payload(2);
    std::vector<const SymbolFrame*> frame_ptrs{frames[0], frames[1]};
    for (int p = 0; p < 2; ++p) {
        const auto& frame = *frames[p];
        std::vector<cplx> payload(eq[p].begin() + static_cast<std::ptrdiff_t>(frame.n_training),
                                  eq[p].end());
        std::vector<std::size_t> ppos;
        std::vector<cplx> pval;
        for (std::size_t i = frame.n_training; i < frame.symbols.size(); ++i)
            if (frame.pilot_mask[i]) {
                ppos.push_back(i - frame.n_training);
                pval.push_back(frame.symbols[i]);
            }
        recovered_payload[p] = carrier_phase_recovery(payload, c, ppos, pval, s.dsp.carrier);
    }
    res.ber_report = count_ber(recovered_payload, frame_ptrs, c);
    return res;
}

}  // namespace

PointResult run_point(const Scenario& s, std::uint64_t seed, double sweep_value,
                      bool has_sweep) {
    const auto t0 = std::chrono::steady_clock::now();
    Scenario point = has_sweep ? apply_sweep(s, s.sweep.variable, sweep_value) : s;
    point.validate();

    Capture cap = make_capture(point, seed);
    PointResult res = point.dual_pol ? run_dual_pol(point, seed, std::move(cap))
                                     : run_single_pol(point, seed, std::move(cap));

    res.row.scenario_id = point.name;
    res.row.seed = seed;
    res.row.sweep_value = has_sweep ? sweep_value : 0.0;
    res.row.ber = res.ber_report.ber();
    res.row.mean_a_err_db =
        10.0 * std::log10(std::max(res.report.final_mean_a_err, 1e-300));
    res.row.iterations = res.report.iterations_used;
    res.row.converged = res.report.converged;
    res.row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

int thread_pool_size() {
    if (const char* env = std::getenv("PRISM_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

RunArtifacts run_scenario(const Scenario& s) {
    s.validate();
    const bool has_sweep = !s.sweep.variable.empty();
    const std::vector<double> values = has_sweep ? s.sweep.values : std::vector<double>{0.0};

    struct Task {
        std::size_t index;
        double value;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t vi = 0; vi < values.size(); ++vi)
        for (std::size_t si = 0; si < s.seeds.size(); ++si)
            tasks.push_back({vi * s.seeds.size() + si, values[vi], s.seeds[si]});

    std::vector<ResultRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex err_mu;

    const int n_threads = std::max(1, std::min<int>(thread_pool_size(),
                                                    static_cast<int>(tasks.size())));
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed.load()) return;
            const auto& t = tasks[i];
            try {
                rows[t.index] = run_point(s, t.seed, t.value, has_sweep).row;
            } catch (const std::exception& e) {
                // runtime divergence: flag the row and keep going
                std::lock_guard<std::mutex> lock(err_mu);
                rows[t.index].scenario_id = s.name;
                rows[t.index].seed = t.seed;
                rows[t.index].sweep_value = t.value;
                rows[t.index].ber = 1.0;
                rows[t.index].converged = false;
                error_message += std::string(e.what()) + "; ";
            }
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return {std::move(rows)};
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << "scenario_id,seed,sweep_value,ber,mean_a_err_db,iterations,converged,wall_time_s\n";
    for (const auto& r : rows) {
        f << r.scenario_id << ',' << r.seed << ',' << fmt_double(r.sweep_value) << ','
          << fmt_double(r.ber) << ',' << fmt_double(r.mean_a_err_db) << ',' << r.iterations
          << ',' << (r.converged ? 1 : 0) << ',' << fmt_double(r.wall_time_s) << '\n';
    }
}

void write_json_report(const std::filesystem::path& path, const Scenario& s,
                       const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& r : rows) {
        jr.push_back({{"scenario_id", r.scenario_id},
                      {"seed", r.seed},
                      {"sweep_value", r.sweep_value},
                      {"ber", r.ber},
                      {"mean_a_err_db", r.mean_a_err_db},
                      {"iterations", r.iterations},
                      {"converged", r.converged},
                      {"wall_time_s", r.wall_time_s}});
    }
    nlohmann::json j{{"config", nlohmann::json::parse(s.to_json_text())}, {"results", jr}};
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << j.dump(2) << '\n';
}

void emit_report(const std::filesystem::path& out_dir, const Scenario& s,
                 const std::vector<ResultRow>& rows) {
    std::filesystem::create_directories(out_dir);
    write_csv(out_dir / "report.csv", rows);
    write_json_report(out_dir / "report.json", s, rows);
}

}  // namespace prism
