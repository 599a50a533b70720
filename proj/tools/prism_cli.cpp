// prism: dispersion-based phase-retrieval receiver simulator.
//
// Verbs:
//   simulate          end-to-end scenario from a JSON config
//   retrieve          run phase retrieval on stored intensity traces
//   estimate-channel  joint channel estimation from a stored quad capture
//   theory            emit the AWGN reference BER curve
//   report            reformat a JSON results file as CSV
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "prism/dsp.hpp"
#include "prism/io.hpp"
#include "prism/runner.hpp"

namespace fs = std::filesystem;
using namespace prism;

namespace {

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 bool trace_convergence) {
    Scenario s;
    try {
        s = Scenario::from_json_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        const auto art = run_scenario(s);
        emit_report(out_dir, s, art.rows);
        if (trace_convergence) {
            // one per-iteration trace for the first grid point
            const bool has_sweep = !s.sweep.variable.empty();
            const double v0 = has_sweep ? s.sweep.values.front() : 0.0;
            auto pr = run_point(s, s.seeds.front(), v0, has_sweep);
            std::ofstream f(fs::path(out_dir) / "convergence.csv");
            f << "iteration,mean_a_err_db,escapes_done\n";
            const auto& tr = pr.report.mean_a_err_trace_db;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                const int esc = static_cast<int>((i + 1) / std::max(1, s.retrieval.reset_period));
                f << (i + 1) << ',' << tr[i] << ',' << esc << '\n';
            }
        }
        for (const auto& r : art.rows)
            std::cout << r.scenario_id << " seed=" << r.seed << " sweep=" << r.sweep_value
                      << " ber=" << r.ber << " mean_a_err_db=" << r.mean_a_err_db << "\n";
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_retrieve(const std::string& a_path, const std::string& b_path,
                 const std::string& meta_path, const std::string& config_path,
                 const std::string& out_prefix, bool trace_convergence) {
    try {
        Scenario s = Scenario::from_json_file(config_path);
        const auto a = io::read_intensity(a_path, meta_path);
        const auto b = io::read_intensity(b_path, meta_path);
        const auto spec = s.frame_spec();
        const auto c = Constellation::make(s.modulation);
        const auto frame = build_frame(s.seeds.front(), spec, c);
        RetrievalConfig cfg = s.retrieval;
        cfg.link_cd = DispersionOperator{s.link.total_dispersion_ps_nm(), s.center_wavelength};
        cfg.mask_baud = s.baud;
        cfg.mask_rolloff = s.rolloff;
        auto [wave, rep] = run_retrieval(a, b, cfg, frame);
        wave.center_wavelength = s.center_wavelength;
        io::write_waveforms(out_prefix + ".bin", out_prefix + ".json", {wave});
        if (trace_convergence) {
            std::ofstream f(out_prefix + "_convergence.csv");
            f << "iteration,mean_a_err_db,escapes_done\n";
            for (std::size_t i = 0; i < rep.mean_a_err_trace_db.size(); ++i)
                f << (i + 1) << ',' << rep.mean_a_err_trace_db[i] << ','
                  << static_cast<int>((i + 1) / std::max(1, cfg.reset_period)) << '\n';
        }
        std::cout << "converged=" << rep.converged << " iterations=" << rep.iterations_used
                  << " mean_a_err=" << rep.final_mean_a_err << "\n";
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_estimate_channel(const std::vector<std::string>& traces, const std::string& meta_path,
                         const std::string& config_path, const std::string& out_prefix) {
    try {
        Scenario s = Scenario::from_json_file(config_path);
        if (traces.size() != 4) {
            std::cerr << "config error: need four traces (ax bx ay by)\n";
            return 2;
        }
        QuadIntensityCapture quad;
        quad.a_x = io::read_intensity(traces[0], meta_path);
        quad.b_x = io::read_intensity(traces[1], meta_path);
        quad.a_y = io::read_intensity(traces[2], meta_path);
        quad.b_y = io::read_intensity(traces[3], meta_path);
        quad.retrieval_dispersion_x = s.retrieval.retrieval_dispersion;
        quad.retrieval_dispersion_y = s.retrieval.retrieval_dispersion;

        const auto spec = s.frame_spec();
        const auto c = Constellation::make(s.modulation);
        const auto fx = build_frame(s.seeds.front(), spec, c);
        const auto fy = build_frame(mix64(s.seeds.front() + 0x9e37ULL), spec, c);
        RetrievalConfig cfg = s.retrieval;
        cfg.link_cd = DispersionOperator{s.link.total_dispersion_ps_nm(), s.center_wavelength};
        cfg.mask_baud = s.baud;
        cfg.mask_rolloff = s.rolloff;
        JointLoopConfig loop = s.joint;
        if (loop.training_pilot_overhead <= 0.0) loop.training_pilot_overhead = s.pilot_overhead;
        auto [est, rep] = joint_estimation_loop(quad, {&fx, &fy}, cfg, loop);
        io::write_channel_estimate(out_prefix + ".json", out_prefix + ".bin", est);
        std::cout << "pdl_db=" << est.pdl_db << " iterations=" << est.iteration << "\n";
        for (std::size_t i = 0; i < rep.pdl_per_iteration_db.size(); ++i)
            std::cout << "iteration " << (i + 1) << ": pdl_db=" << rep.pdl_per_iteration_db[i]
                      << " delta=" << rep.estimate_delta[i] << "\n";
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_theory(const std::string& modulation, double baud, int n_pol, double osnr_lo,
               double osnr_hi, double osnr_step, const std::string& out_path) {
    try {
        const auto c = Constellation::make(modulation_from_string(modulation));
        std::ostream* out = &std::cout;
        std::ofstream f;
        if (!out_path.empty()) {
            f.open(out_path);
            if (!f) {
                std::cerr << "error: cannot open " << out_path << "\n";
                return 3;
            }
            out = &f;
        }
        *out << "osnr_db,ber\n";
        for (double o = osnr_lo; o <= osnr_hi + 1e-9; o += osnr_step)
            *out << o << ',' << theory_ber(o, c, baud, n_pol) << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_report(const std::string& json_path, const std::string& csv_path) {
    try {
        std::ifstream f(json_path);
        if (!f) {
            std::cerr << "error: cannot open " << json_path << "\n";
            return 3;
        }
        nlohmann::json j;
        f >> j;
        std::vector<ResultRow> rows;
        for (const auto& r : j.at("results")) {
            ResultRow row;
            row.scenario_id = r.at("scenario_id").get<std::string>();
            row.seed = r.at("seed").get<std::uint64_t>();
            row.sweep_value = r.at("sweep_value").get<double>();
            row.ber = r.at("ber").get<double>();
            row.mean_a_err_db = r.at("mean_a_err_db").get<double>();
            row.iterations = r.at("iterations").get<int>();
            row.converged = r.at("converged").get<bool>();
            row.wall_time_s = r.at("wall_time_s").get<double>();
            rows.push_back(row);
        }
        write_csv(csv_path, rows);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dispersion-based phase-retrieval receiver simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    bool trace_convergence = false;
    auto* sim = app.add_subcommand("simulate", "run an end-to-end scenario");
    sim->add_option("--config", config_path, "scenario JSON")->required();
    sim->add_option("--out", out_dir, "output directory");
    sim->add_flag("--trace-convergence", trace_convergence, "write per-iteration CSV");

    std::string a_path, b_path, meta_path, out_prefix = "recovered";
    auto* ret = app.add_subcommand("retrieve", "phase retrieval on stored traces");
    ret->add_option("--a", a_path, "undispersed intensity (float64)")->required();
    ret->add_option("--b", b_path, "dispersed intensity (float64)")->required();
    ret->add_option("--meta", meta_path, "trace sidecar JSON")->required();
    ret->add_option("--config", config_path, "scenario JSON")->required();
    ret->add_option("--out", out_prefix, "output prefix");
    ret->add_flag("--trace-convergence", trace_convergence, "write per-iteration CSV");

    std::vector<std::string> quad_traces;
    auto* est = app.add_subcommand("estimate-channel", "joint channel estimation");
    est->add_option("--traces", quad_traces, "four traces: ax bx ay by")->expected(4)->required();
    est->add_option("--meta", meta_path, "trace sidecar JSON")->required();
    est->add_option("--config", config_path, "scenario JSON")->required();
    est->add_option("--out", out_prefix, "output prefix");

    std::string modulation = "qpsk", theory_out;
    double baud = 30e9, osnr_lo = 5.0, osnr_hi = 20.0, osnr_step = 0.5;
    int n_pol = 1;
    auto* th = app.add_subcommand("theory", "AWGN reference BER curve");
    th->add_option("--modulation", modulation);
    th->add_option("--baud", baud);
    th->add_option("--npol", n_pol);
    th->add_option("--from", osnr_lo);
    th->add_option("--to", osnr_hi);
    th->add_option("--step", osnr_step);
    th->add_option("--out", theory_out, "CSV path (stdout if omitted)");

    std::string report_json, report_csv = "report.csv";
    auto* rep = app.add_subcommand("report", "reformat a JSON results file as CSV");
    rep->add_option("--in", report_json, "report.json")->required();
    rep->add_option("--out", report_csv, "CSV path");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) return cmd_simulate(config_path, out_dir, trace_convergence);
    if (ret->parsed())
        return cmd_retrieve(a_path, b_path, meta_path, config_path, out_prefix,
                            trace_convergence);
    if (est->parsed())
        return cmd_estimate_channel(quad_traces, meta_path, config_path, out_prefix);
    if (th->parsed())
        return cmd_theory(modulation, baud, n_pol, osnr_lo, osnr_hi, osnr_step, theory_out);
    if (rep->parsed()) return cmd_report(report_json, report_csv);
    return 2;
}
