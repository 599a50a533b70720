#ifndef PRISM_PHASE_RETRIEVAL_HPP
#define PRISM_PHASE_RETRIEVAL_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "prism/dispersion.hpp"
#include "prism/framing.hpp"
#include "prism/rng.hpp"
#include "prism/types.hpp"

namespace prism {

enum class PilotConstraintMode : std::uint8_t { phase_only, full_field };
enum class PhaseInit : std::uint8_t { random_uniform, provided };
enum class ProjectionSchedule : std::uint8_t { scheme1, scheme2, combined };

/// All knobs of the alternating-projection loop.
///
/// epsilon doubles as the convergence level and the base escape threshold.
/// escape_relative > 0 raises the escape threshold to
/// max(epsilon, escape_relative * current mean error) so resets stay
/// targeted as the error floor drops; escape_dilation re-randomizes a
/// neighborhood around each offending sample, which clears clustered
/// stagnation defects. Setting both to zero reproduces the plain
/// fixed-threshold reset.
///
/// pilot_weight_stages soften the pilot phase replacement over the run
/// (quartiles of the iteration budget). Noisy measurements disagree with the
/// known pilot phases by the per-symbol noise jitter; full replacement all
/// the way to the end leaves that conflict in the converged field, while
/// annealing the weight keeps the anchor early and lets the intensity data
/// dominate late. {1,1,1,1} reproduces plain replacement.
struct RetrievalConfig {
    double epsilon = 2e-3;
    int reset_period = 500;  // iterations between escapes
    int max_escapes = 40;
    DispersionOperator retrieval_dispersion{650.0, kDefaultWavelength};
    DispersionOperator link_cd{0.0, kDefaultWavelength};
    double mask_baud = 30e9;
    double mask_rolloff = 0.1;
    PilotConstraintMode pilot_constraint = PilotConstraintMode::phase_only;
    PhaseInit init = PhaseInit::random_uniform;
    double escape_relative = 10.0;
    int escape_dilation = 10;
    std::vector<double> pilot_weight_stages{1.0, 0.3, 0.1, 0.05};
    double amplitude_relax = 0.0;  // 0 = exact replacement
    bool keep_best = true;
    std::uint64_t seed = 1;

    int max_iterations() const { return reset_period * max_escapes; }
    void validate() const;  // throws std::invalid_argument
};

/// Pilot anchor: symbol-center sample indices and the constraint values
/// there (unit-magnitude phasors for phase_only, full complex values for
/// full_field).
struct PilotSet {
    std::vector<std::size_t> sample_indices;
    std::vector<cplx> values;

    static PilotSet from_frame(const SymbolFrame& frame, int samples_per_symbol);
};

struct RetrievalState {
    std::vector<cplx> s_est;
    int iteration = 0;
    int escapes_done = 0;
    std::vector<double> a_err;

    double mean_a_err() const;
};

struct RetrievalReport {
    std::vector<double> mean_a_err_trace_db;  // symbol-center mean per iteration
    bool converged = false;
    int iterations_used = 0;
    int escapes_done = 0;
    double final_mean_a_err = 0.0;         // over all samples
    double final_symbol_a_err = 0.0;       // over symbol centers
    std::vector<double> delta_theta;       // per symbol, when truth supplied
};

/// One full modified-GS cycle (amplitude replacement, link CD removal,
/// pilot constraint, re-dispersion, dispersed-plane replacement, inverse
/// propagation, spectral mask). Traces must be max-normalized. Exposed for
/// tests; run_retrieval drives the same cycle through a cached-plan engine.
RetrievalState gs_iteration(const RetrievalState& state, const IntensityTrace& a,
                            const IntensityTrace& b, const RetrievalConfig& cfg,
                            const SymbolFrame& frame);

/// Phase reset of samples whose error exceeds the escape threshold.
RetrievalState escape_local_minimum(const RetrievalState& state, const RetrievalConfig& cfg,
                                    Rng& rng);

/// Full retrieval from a pair of intensity traces. Non-convergence is not an
/// error; the report carries converged=false. When truth is supplied the
/// report includes per-symbol |delta theta| measured against the
/// band-limited truth after CD removal, with the global phase and a sliding
/// 64-symbol common phase removed (the same slow phase the carrier recovery
/// strips before decisions).
std::pair<ComplexWaveform, RetrievalReport> run_retrieval(
    const IntensityTrace& a, const IntensityTrace& b, const RetrievalConfig& cfg,
    const SymbolFrame& frame, const ComplexWaveform* truth = nullptr);

/// Variant with explicit pilot values (used by the polarization receiver
/// where pilots are forward-propagated through the channel estimate).
std::pair<ComplexWaveform, RetrievalReport> run_retrieval(
    const IntensityTrace& a, const IntensityTrace& b, const RetrievalConfig& cfg,
    const PilotSet& pilots, int samples_per_symbol,
    const ComplexWaveform* truth = nullptr,
    const std::vector<cplx>* init_field = nullptr);

/// Parallel alternative projections: N dispersive elements D_n = n * delta.
struct ProjectionSet {
    std::vector<DispersionOperator> elements;
    std::vector<IntensityTrace> traces;
    ProjectionSchedule schedule = ProjectionSchedule::scheme1;

    void validate() const;
};

/// Runs the modified GS loop across multiple dispersive projections with the
/// retrieved phase carried over element transitions. The iteration budget is
/// cfg.max_iterations(), split M per element for scheme2; combined runs
/// scheme1 for the first half of the budget and scheme2 for the second.
std::pair<ComplexWaveform, RetrievalReport> run_multi_projection(
    const IntensityTrace& a, const ProjectionSet& ps, const RetrievalConfig& cfg,
    const SymbolFrame& frame);

/// Dispersion estimate by intensity correlation against the known
/// transmitted waveform.
struct B2Estimate {
    DispersionOperator op;
    double peak_correlation = 0.0;
    bool low_confidence = false;
};

struct B2SearchGrid {
    double start_ps_per_nm = 0.0;
    double stop_ps_per_nm = 2000.0;
    double step_ps_per_nm = 10.0;
};

B2Estimate estimate_b2(const IntensityTrace& a, const ComplexWaveform& x,
                       const B2SearchGrid& grid);

}  // namespace prism

#endif
