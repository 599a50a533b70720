#include "prism/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace prism {

using nlohmann::json;

FrameSpec Scenario::frame_spec() const {
    FrameSpec f;
    f.n_training_symbols = n_training_symbols;
    f.n_payload_symbols = n_symbols;
    f.pilot_overhead = pilot_overhead;
    f.baud_rate = baud;
    f.samples_per_symbol = samples_per_symbol;
    f.rolloff = rolloff;
    f.pilot_amplitude = pilot_amplitude;
    return f;
}

void Scenario::validate() const {
    frame_spec().validate();
    retrieval.validate();
    if (seeds.empty()) throw std::invalid_argument("scenario: seeds must be nonempty");
    if (!sweep.variable.empty()) {
        const auto& fields = sweepable_fields();
        if (std::find(fields.begin(), fields.end(), sweep.variable) == fields.end())
            throw std::invalid_argument("scenario: unknown sweep variable '" + sweep.variable +
                                        "'");
        if (sweep.values.empty())
            throw std::invalid_argument("scenario: sweep.values must be nonempty");
    }
    if (dual_pol && n_training_symbols == 0)
        throw std::invalid_argument("scenario: dual_pol requires a training block");
    if (link.length_km < 0.0) throw std::invalid_argument("scenario: negative link length");
}

const std::vector<std::string>& sweepable_fields() {
    static const std::vector<std::string> fields{
        "osnr_db", "retrieval_dispersion_ps_nm", "link_length_km", "pilot_overhead", "enob"};
    return fields;
}

Scenario apply_sweep(const Scenario& base, const std::string& variable, double value) {
    Scenario s = base;
    if (variable == "osnr_db")
        s.osnr_db = value;
    else if (variable == "retrieval_dispersion_ps_nm")
        s.retrieval.retrieval_dispersion.total_ps_per_nm = value;
    else if (variable == "link_length_km")
        s.link.length_km = value;
    else if (variable == "pilot_overhead")
        s.pilot_overhead = value;
    else if (variable == "enob")
        s.enob = value;
    else if (!variable.empty())
        throw std::invalid_argument("unknown sweep variable '" + variable + "'");
    return s;
}

namespace {

double get_or(const json& j, const char* key, double def) {
    if (!j.contains(key) || j.at(key).is_null()) return def;
    return j.at(key).get<double>();
}

void parse_retrieval(const json& j, RetrievalConfig& r) {
    r.epsilon = get_or(j, "epsilon", r.epsilon);
    r.reset_period = static_cast<int>(get_or(j, "reset_period", r.reset_period));
    r.max_escapes = static_cast<int>(get_or(j, "max_escapes", r.max_escapes));
    r.retrieval_dispersion.total_ps_per_nm =
        get_or(j, "dispersion_ps_nm", r.retrieval_dispersion.total_ps_per_nm);
    r.escape_relative = get_or(j, "escape_relative", r.escape_relative);
    r.escape_dilation = static_cast<int>(get_or(j, "escape_dilation", r.escape_dilation));
    r.amplitude_relax = get_or(j, "amplitude_relax", r.amplitude_relax);
    if (j.contains("keep_best")) r.keep_best = j.at("keep_best").get<bool>();
    if (j.contains("pilot_weight_stages"))
        r.pilot_weight_stages = j.at("pilot_weight_stages").get<std::vector<double>>();
    if (j.contains("pilot_constraint")) {
        const auto s = j.at("pilot_constraint").get<std::string>();
        if (s == "phase_only")
            r.pilot_constraint = PilotConstraintMode::phase_only;
        else if (s == "full_field")
            r.pilot_constraint = PilotConstraintMode::full_field;
        else
            throw std::invalid_argument("retrieval.pilot_constraint: " + s);
    }
}

}  // namespace

Scenario Scenario::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    Scenario s;
    s.name = j.value("name", s.name);
    if (j.contains("modulation"))
        s.modulation = modulation_from_string(j.at("modulation").get<std::string>());
    s.baud = get_or(j, "baud", s.baud);
    s.n_symbols = static_cast<std::size_t>(get_or(j, "n_symbols", s.n_symbols));
    s.n_training_symbols =
        static_cast<std::size_t>(get_or(j, "n_training_symbols", s.n_training_symbols));
    s.samples_per_symbol =
        static_cast<int>(get_or(j, "samples_per_symbol", s.samples_per_symbol));
    s.rolloff = get_or(j, "rolloff", s.rolloff);
    s.pilot_overhead = get_or(j, "pilot_overhead", s.pilot_overhead);
    if (j.contains("pilot_amplitude")) {
        const auto v = j.at("pilot_amplitude").get<std::string>();
        if (v == "constellation")
            s.pilot_amplitude = PilotAmplitude::constellation;
        else if (v == "unit")
            s.pilot_amplitude = PilotAmplitude::unit;
        else
            throw std::invalid_argument("pilot_amplitude: " + v);
    }
    s.center_wavelength = get_or(j, "center_wavelength", s.center_wavelength);
    if (j.contains("dual_pol")) s.dual_pol = j.at("dual_pol").get<bool>();
    if (j.contains("link")) {
        const auto& l = j.at("link");
        s.link.length_km = get_or(l, "length_km", s.link.length_km);
        s.link.ps_per_nm_per_km = get_or(l, "ps_per_nm_per_km", s.link.ps_per_nm_per_km);
        s.link.pmd_sections = static_cast<int>(get_or(l, "pmd_sections", s.link.pmd_sections));
        s.link.dgd_total_s = get_or(l, "dgd_total_ps", 0.0) * 1e-12;
        s.link.channel_seed = static_cast<std::uint64_t>(get_or(l, "channel_seed", 0.0));
    }
    s.osnr_db = get_or(j, "osnr_db", s.osnr_db);
    s.enob = get_or(j, "enob", s.enob);
    s.rx_optical_bandwidth = get_or(j, "rx_optical_bandwidth", s.rx_optical_bandwidth);
    if (j.contains("include_orthogonal_ase"))
        s.include_orthogonal_ase = j.at("include_orthogonal_ase").get<bool>();
    if (j.contains("retrieval")) parse_retrieval(j.at("retrieval"), s.retrieval);
    if (j.contains("dsp")) {
        const auto& d = j.at("dsp");
        s.dsp.equalizer.fft_block =
            static_cast<std::size_t>(get_or(d, "equalizer_block", s.dsp.equalizer.fft_block));
        s.dsp.equalizer.lms_step = get_or(d, "lms_step", s.dsp.equalizer.lms_step);
        s.dsp.equalizer.cma_step = get_or(d, "cma_step", s.dsp.equalizer.cma_step);
        s.dsp.equalizer.lms_passes =
            static_cast<int>(get_or(d, "lms_passes", s.dsp.equalizer.lms_passes));
        s.dsp.carrier.window = static_cast<int>(get_or(d, "cpr_window", s.dsp.carrier.window));
        s.dsp.block_len = static_cast<std::size_t>(get_or(d, "block_len", s.dsp.block_len));
        s.dsp.save_fraction = get_or(d, "save_fraction", s.dsp.save_fraction);
    }
    if (j.contains("joint")) {
        const auto& q = j.at("joint");
        s.joint.n_iterations = static_cast<int>(get_or(q, "n_iterations", s.joint.n_iterations));
        s.joint.block_len = static_cast<std::size_t>(get_or(q, "block_len", s.joint.block_len));
        s.joint.save_fraction = get_or(q, "save_fraction", s.joint.save_fraction);
        s.joint.estimator.taps = static_cast<int>(get_or(q, "taps", s.joint.estimator.taps));
        s.joint.initial_unitary_seed =
            static_cast<std::uint64_t>(get_or(q, "initial_unitary_seed", 0.0));
        s.joint.training_pilot_overhead =
            get_or(q, "training_pilot_overhead", s.joint.training_pilot_overhead);
    }
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
        const auto& w = j.at("sweep");
        s.sweep.variable = w.value("variable", std::string{});
        if (w.contains("values")) s.sweep.values = w.at("values").get<std::vector<double>>();
    }
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.validate();
    return s;
}

Scenario Scenario::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json_text(ss.str());
}

std::string Scenario::to_json_text() const {
    json r{{"epsilon", retrieval.epsilon},
           {"reset_period", retrieval.reset_period},
           {"max_escapes", retrieval.max_escapes},
           {"dispersion_ps_nm", retrieval.retrieval_dispersion.total_ps_per_nm},
           {"escape_relative", retrieval.escape_relative},
           {"escape_dilation", retrieval.escape_dilation},
           {"amplitude_relax", retrieval.amplitude_relax},
           {"keep_best", retrieval.keep_best},
           {"pilot_weight_stages", retrieval.pilot_weight_stages},
           {"pilot_constraint", retrieval.pilot_constraint == PilotConstraintMode::phase_only
                                    ? "phase_only"
                                    : "full_field"}};
    json j{{"name", name},
           {"modulation", to_string(modulation)},
           {"baud", baud},
           {"n_symbols", n_symbols},
           {"n_training_symbols", n_training_symbols},
           {"samples_per_symbol", samples_per_symbol},
           {"rolloff", rolloff},
           {"pilot_overhead", pilot_overhead},
           {"center_wavelength", center_wavelength},
           {"dual_pol", dual_pol},
           {"link",
            {{"length_km", link.length_km},
             {"ps_per_nm_per_km", link.ps_per_nm_per_km},
             {"pmd_sections", link.pmd_sections},
             {"dgd_total_ps", link.dgd_total_s * 1e12},
             {"channel_seed", link.channel_seed}}},
           {"osnr_db", std::isfinite(osnr_db) ? json(osnr_db) : json(nullptr)},
           {"enob", std::isfinite(enob) ? json(enob) : json(nullptr)},
           {"rx_optical_bandwidth", rx_optical_bandwidth},
           {"include_orthogonal_ase", include_orthogonal_ase},
           {"retrieval", r},
           {"seeds", seeds}};
    if (!sweep.variable.empty())
        j["sweep"] = {{"variable", sweep.variable}, {"values", sweep.values}};
    return j.dump(2);
}

}  // namespace prism
