#pragma once

// Channel utilisation, throughput, end-to-end delay and energy computed from
// engine logs, plus mean/sd aggregation across seeds.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "apeps/engine.hpp"

namespace apeps {

/// Restricts a metric to one source kind and/or traffic class.
struct FlowFilter {
    std::optional<SourceKind> source;
    std::optional<TrafficClass> traffic_class;

    bool matches(SourceKind s, TrafficClass c) const
    {
        return (!source || *source == s) && (!traffic_class || *traffic_class == c);
    }
    /// "", "_cbr", "_class1", "_cbr_class1", ...
    std::string suffix() const;
};

/// Successfully delivered bytes over capacity_bytes * frames. Throws
/// std::domain_error for zero frames.
double utilization(const std::vector<GrantRecord>& grants, std::uint32_t capacity_bytes,
                   FrameIndex frames, const FlowFilter& filter = {});

struct DelaySummary {
    std::optional<double> mean_ms;  // absent when nothing was delivered
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
};

/// Mean of deliver-minus-arrival over delivered packets; drops are only counted.
DelaySummary mean_delay(const std::vector<EventRecord>& events, const FlowFilter& filter = {});

/// Mean total energy per MSS; the "bs" row only with include_bs.
double mean_energy(const std::vector<EnergyRecord>& energy, bool include_bs = false);

struct MetricsReport {
    SchedulerKind scheduler = SchedulerKind::APEPS;
    std::uint32_t num_mss = 0;
    double error_rate = 0.0;
    std::uint64_t seed = 0;
    std::string sweep_name = "single";
    double sweep_value = 0.0;

    /// Named values in a fixed order; delays without deliveries are omitted.
    std::vector<std::pair<std::string, double>> metrics;

    std::optional<double> get(const std::string& name) const;
};

/// Every metric name compute_report can emit, in report order.
std::vector<std::string> metric_names();

MetricsReport compute_report(const RunResult& run, std::string sweep_name = "single",
                             double sweep_value = 0.0);

void write_report(std::ostream& os, const MetricsReport& report);

struct SweepRow {
    SchedulerKind scheduler = SchedulerKind::APEPS;
    std::string sweep_name;
    double sweep_value = 0.0;
    std::string metric;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n_seeds = 0;
};

/// Mean and sample sd per (scheduler, sweep value, metric), ordered by sweep
/// value, then scheduler, then metric. Throws std::invalid_argument when the
/// reports mix sweep names.
std::vector<SweepRow> aggregate_sweep(std::span<const MetricsReport> reports);

const SweepRow* find_row(const std::vector<SweepRow>& rows, SchedulerKind scheduler,
                         double sweep_value, const std::string& metric);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace apeps
