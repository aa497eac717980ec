#pragma once

// Seeded parameter sweeps over both schedulers, with CSV tables and charts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "apeps/core.hpp"
#include "apeps/metrics.hpp"
#include "apeps/svg.hpp"

namespace apeps {

enum class ExperimentKind : std::uint8_t { Single, VaryMss, VaryErrorRate };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment(std::string_view s);

/// Sweep values: MSS 2..10 step 2, or error rate 0.01..0.05.
std::vector<double> sweep_values(ExperimentKind k);

/// Name written to the sweep_name column: "num_mss" or "error_rate".
std::string sweep_dimension(ExperimentKind k);

/// "1,2,5" or ranges like "1-20", mixed freely. Throws std::invalid_argument.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

struct RunSpec {
    SimConfig config;
    std::string label;  // also the run's subdirectory name
    double sweep_value = 0.0;
};

/// The cartesian product sweep value x {APEPS, PBS} x seed, in that order.
std::vector<RunSpec> expand_runs(ExperimentKind kind, const SimConfig& base,
                                 const std::vector<std::uint64_t>& seeds);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::VaryMss;
    SimConfig base;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output_dir;
    unsigned jobs = 1;
    /// Also write event, grant and energy logs for every run.
    bool run_logs = false;
};

struct RunFailure {
    std::string label;
    std::string message;
};

struct ExperimentResult {
    std::vector<MetricsReport> reports;  // in expand_runs order, failed runs omitted
    std::vector<SweepRow> rows;
    std::vector<RunFailure> failures;
    std::vector<std::filesystem::path> charts;
};

/// Runs every RunSpec on up to `jobs` threads. Results come back in input
/// order; a run that throws is recorded as a failure and the rest continue.
std::vector<MetricsReport> run_all(const std::vector<RunSpec>& runs, unsigned jobs,
                                   std::vector<RunFailure>& failures,
                                   const std::filesystem::path& output_dir = {},
                                   bool run_logs = false);

/// Charts for a sweep: one per metric of interest, one series per scheduler
/// (and per class for the error-rate sweep). Keys are file stems.
std::vector<std::pair<std::string, LineChart>> sweep_charts(ExperimentKind kind,
                                                            const std::vector<SweepRow>& rows);

/// Runs the sweep and writes sweep.csv, runs/<label>/ and one SVG per chart.
/// Throws std::invalid_argument for an empty seed list or a Single kind.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Writes events.csv, grants.csv, energy.csv, report.csv and config.txt.
void write_run_outputs(const std::filesystem::path& dir, const RunResult& run,
                       const MetricsReport& report);

}  // namespace apeps
