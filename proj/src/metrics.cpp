#include "apeps/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace apeps {

namespace {

std::string fmt(double v)
{
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

const std::vector<FlowFilter>& standard_filters()
{
    static const std::vector<FlowFilter> filters = [] {
        std::vector<FlowFilter> f;
        const std::optional<SourceKind> sources[] = {std::nullopt, SourceKind::CBR,
                                                     SourceKind::VBR};
        const std::optional<TrafficClass> classes[] = {std::nullopt, TrafficClass::Class1,
                                                       TrafficClass::Class2, TrafficClass::Class3};
        for (const auto& s : sources)
            for (const auto& c : classes)
                f.push_back({s, c});
        return f;
    }();
    return filters;
}

}  // namespace

std::vector<std::string> metric_names()
{
    std::vector<std::string> names;
    for (const auto& f : standard_filters())
        names.push_back("utilization" + f.suffix());
    names.emplace_back("throughput_pkts");
    names.emplace_back("dropped_pkts");
    for (const auto& f : standard_filters())
        names.push_back("delay" + f.suffix() + "_ms");
    names.emplace_back("energy_mj");
    return names;
}

std::string FlowFilter::suffix() const
{
    std::string s;
    if (source) {
        s += '_';
        s += to_string(*source);
    }
    if (traffic_class) {
        s += '_';
        s += to_string(*traffic_class);
    }
    return s;
}

double utilization(const std::vector<GrantRecord>& grants, std::uint32_t capacity_bytes,
                   FrameIndex frames, const FlowFilter& filter)
{
    if (frames <= 0 || capacity_bytes == 0)
        throw std::domain_error("utilization: no frames to measure over");
    std::uint64_t bytes = 0;
    for (const auto& g : grants)
        if (g.outcome == GrantOutcome::Sent && filter.matches(g.source, g.traffic_class))
            bytes += g.bytes;
    return static_cast<double>(bytes) /
           (static_cast<double>(capacity_bytes) * static_cast<double>(frames));
}

DelaySummary mean_delay(const std::vector<EventRecord>& events, const FlowFilter& filter)
{
    DelaySummary s;
    double sum = 0.0;
    for (const auto& e : events) {
        if (!filter.matches(e.source, e.traffic_class))
            continue;
        if (e.kind == EventKind::Deliver) {
            ++s.delivered;
            sum += e.delay_ms.value_or(0.0);
        } else if (e.kind == EventKind::Drop) {
            ++s.dropped;
        }
    }
    if (s.delivered > 0)
        s.mean_ms = sum / static_cast<double>(s.delivered);
    return s;
}

double mean_energy(const std::vector<EnergyRecord>& energy, bool include_bs)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : energy) {
        if (e.node == "bs" && !include_bs)
            continue;
        sum += e.energy.total_mj();
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::optional<double> MetricsReport::get(const std::string& name) const
{
    for (const auto& [k, v] : metrics)
        if (k == name)
            return v;
    return std::nullopt;
}

MetricsReport compute_report(const RunResult& run, std::string sweep_name, double sweep_value)
{
    MetricsReport r;
    r.scheduler = run.config.scheduler;
    r.num_mss = run.config.num_mss;
    r.error_rate = run.config.error_rate;
    r.seed = run.config.seed;
    r.sweep_name = std::move(sweep_name);
    r.sweep_value = sweep_value;

    for (const auto& f : standard_filters())
        r.metrics.emplace_back("utilization" + f.suffix(),
                               utilization(run.grants, run.config.frame_capacity_bytes,
                                           run.frames_executed, f));
    const auto all = mean_delay(run.events);
    r.metrics.emplace_back("throughput_pkts", static_cast<double>(all.delivered));
    r.metrics.emplace_back("dropped_pkts", static_cast<double>(all.dropped));
    for (const auto& f : standard_filters())
        if (const auto d = mean_delay(run.events, f); d.mean_ms)
            r.metrics.emplace_back("delay" + f.suffix() + "_ms", *d.mean_ms);
    r.metrics.emplace_back("energy_mj", mean_energy(run.energy, run.config.bs_energy_in_mean));
    return r;
}

void write_report(std::ostream& os, const MetricsReport& report)
{
    os << "metric,value\n";
    os << "scheduler," << to_string(report.scheduler) << '\n';
    os << "num_mss," << report.num_mss << '\n';
    os << "error_rate," << fmt(report.error_rate) << '\n';
    os << "seed," << report.seed << '\n';
    for (const auto& [k, v] : report.metrics)
        os << k << ',' << fmt(v) << '\n';
}

std::vector<SweepRow> aggregate_sweep(std::span<const MetricsReport> reports)
{
    std::vector<SweepRow> rows;
    if (reports.empty())
        return rows;
    const auto& name = reports.front().sweep_name;
    for (const auto& r : reports)
        if (r.sweep_name != name)
            throw std::invalid_argument("aggregate_sweep: reports mix sweep dimensions '" + name +
                                        "' and '" + r.sweep_name + "'");

    // Canonical report layout first, anything else alphabetically after it.
    std::vector<std::string> order = metric_names();
    std::vector<std::string> extra;
    for (const auto& r : reports)
        for (const auto& [k, v] : r.metrics)
            if (std::find(order.begin(), order.end(), k) == order.end() &&
                std::find(extra.begin(), extra.end(), k) == extra.end())
                extra.push_back(k);
    std::sort(extra.begin(), extra.end());
    order.insert(order.end(), extra.begin(), extra.end());
    auto rank = [&](const std::string& m) {
        return std::find(order.begin(), order.end(), m) - order.begin();
    };

    using Key = std::tuple<double, int, std::ptrdiff_t>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : reports)
        for (const auto& [k, v] : r.metrics)
            groups[{r.sweep_value, static_cast<int>(r.scheduler), rank(k)}].push_back(v);

    for (auto& [key, values] : groups) {
        // Sorting first makes the sums independent of report order.
        std::sort(values.begin(), values.end());
        const auto n = values.size();
        double sum = 0.0;
        for (double v : values)
            sum += v;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (double v : values)
            ss += (v - mean) * (v - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        const auto& [value, sched, metric] = key;
        rows.push_back({static_cast<SchedulerKind>(sched), name, value,
                        order[static_cast<std::size_t>(metric)], mean, sd, n});
    }
    return rows;
}

const SweepRow* find_row(const std::vector<SweepRow>& rows, SchedulerKind scheduler,
                         double sweep_value, const std::string& metric)
{
    for (const auto& r : rows)
        if (r.scheduler == scheduler && r.sweep_value == sweep_value && r.metric == metric)
            return &r;
    return nullptr;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << "scheduler,sweep_name,sweep_value,metric,mean,sd,n_seeds\n";
    for (const auto& r : rows)
        os << to_string(r.scheduler) << ',' << r.sweep_name << ',' << fmt(r.sweep_value) << ','
           << r.metric << ',' << fmt(r.mean) << ',' << fmt(r.sd) << ',' << r.n_seeds << '\n';
}

}  // namespace apeps
