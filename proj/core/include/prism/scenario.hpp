#ifndef PRISM_SCENARIO_HPP
#define PRISM_SCENARIO_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "prism/constellation.hpp"
#include "prism/dsp.hpp"
#include "prism/framing.hpp"
#include "prism/phase_retrieval.hpp"
#include "prism/pol_rx.hpp"

namespace prism {

struct LinkConfig {
    double length_km = 60.0;
    double ps_per_nm_per_km = 17.1558;  // 8921 ps/nm over 520 km
    int pmd_sections = 8;
    double dgd_total_s = 0.0;
    std::uint64_t channel_seed = 0;  // 0 = derive from run seed

    double total_dispersion_ps_nm() const { return length_km * ps_per_nm_per_km; }
};

struct SweepConfig {
    std::string variable;  // empty = no sweep, single point
    std::vector<double> values;
};

struct DspConfig {
    EqualizerConfig equalizer{};
    CarrierRecoveryConfig carrier{};
    std::size_t block_len = 8192;  // single-polarization overlap-save block
    double save_fraction = 0.5;
};

/// One experiment description: what to transmit, the channel, the retrieval
/// settings, what to sweep, and which seeds to run.
struct Scenario {
    std::string name = "scenario";
    Modulation modulation = Modulation::QPSK;
    double baud = 30e9;
    std::size_t n_symbols = 2048;  // payload
    std::size_t n_training_symbols = 0;
    int samples_per_symbol = 2;
    double rolloff = 0.1;
    double pilot_overhead = 0.2;
    PilotAmplitude pilot_amplitude = PilotAmplitude::constellation;
    double center_wavelength = kDefaultWavelength;
    bool dual_pol = false;

    LinkConfig link{};
    double osnr_db = std::numeric_limits<double>::infinity();
    double enob = std::numeric_limits<double>::infinity();
    /// Receiver optical bandpass before the splitter; <=0 means the signal
    /// band (1+rolloff)*baud.
    double rx_optical_bandwidth = 0.0;
    /// Single-polarization receivers without a polarizer also photodetect the
    /// orthogonal-polarization ASE intensity.
    bool include_orthogonal_ase = false;

    RetrievalConfig retrieval{};
    DspConfig dsp{};
    JointLoopConfig joint{};

    SweepConfig sweep{};
    std::vector<std::uint64_t> seeds{1};

    FrameSpec frame_spec() const;
    double effective_rx_bandwidth() const {
        return rx_optical_bandwidth > 0.0 ? rx_optical_bandwidth : (1.0 + rolloff) * baud;
    }

    void validate() const;  // throws std::invalid_argument

    static Scenario from_json_file(const std::string& path);
    static Scenario from_json_text(const std::string& text);
    std::string to_json_text() const;
};

/// Fields accepted by sweep.variable.
const std::vector<std::string>& sweepable_fields();

/// Applies one sweep value to a copy of the scenario.
Scenario apply_sweep(const Scenario& base, const std::string& variable, double value);

}  // namespace prism

#endif
