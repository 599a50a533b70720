#ifndef PRISM_RUNNER_HPP
#define PRISM_RUNNER_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prism/scenario.hpp"

namespace prism {

struct ResultRow {
    std::string scenario_id;
    std::uint64_t seed = 0;
    double sweep_value = 0.0;
    double ber = 0.0;
    double mean_a_err_db = 0.0;
    int iterations = 0;
    bool converged = false;
    double wall_time_s = 0.0;
};

struct RunArtifacts {
    std::vector<ResultRow> rows;
};

/// Full single-point pipeline: generate, channel, capture, retrieve, DSP.
/// Exposed so tests and the acceptance suite can drive exactly what the
/// scenario runner runs.
struct PointResult {
    ResultRow row;
    RetrievalReport report;        // single-pol: retrieval; dual-pol: payload pass
    BerReport ber_report;
    std::vector<double> pdl_per_iteration_db;  // dual-pol only
};

PointResult run_point(const Scenario& s, std::uint64_t seed, double sweep_value,
                      bool has_sweep);

/// Runs the sweep grid (sweep values x seeds) in a worker pool. Results are
/// ordered by (sweep index, seed index) regardless of completion order.
/// PRISM_THREADS caps the pool size.
RunArtifacts run_scenario(const Scenario& s);

/// CSV with fixed documented columns:
/// scenario_id,seed,sweep_value,ber,mean_a_err_db,iterations,converged,wall_time_s
void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

/// JSON mirror with the full scenario config embedded.
void write_json_report(const std::filesystem::path& path, const Scenario& s,
                       const std::vector<ResultRow>& rows);

/// Emits report.csv and report.json under out_dir. Throws on empty rows.
void emit_report(const std::filesystem::path& out_dir, const Scenario& s,
                 const std::vector<ResultRow>& rows);

int thread_pool_size();

}  // namespace prism

#endif
