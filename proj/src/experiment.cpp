#include "apeps/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <thread>

#include "apeps/config_io.hpp"
#include "apeps/engine.hpp"

namespace apeps {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v)
{
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

template <class F>
void write_with(const fs::path& path, F&& f)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    f(out);
}

std::uint64_t parse_u64(std::string_view s)
{
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
        throw std::invalid_argument("not a seed: '" + std::string(s) + "'");
    return v;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

std::string upper(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::string_view to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::Single: return "single";
    case ExperimentKind::VaryMss: return "vary_mss";
    case ExperimentKind::VaryErrorRate: return "vary_error_rate";
    }
    return "?";
}

ExperimentKind parse_experiment(std::string_view s)
{
    for (auto k : {ExperimentKind::Single, ExperimentKind::VaryMss, ExperimentKind::VaryErrorRate})
        if (s == to_string(k))
            return k;
    throw std::invalid_argument("unknown experiment '" + std::string(s) +
                                "' (expected single, vary_mss or vary_error_rate)");
}

std::vector<double> sweep_values(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::VaryMss: return {2, 4, 6, 8, 10};
    case ExperimentKind::VaryErrorRate: return {0.01, 0.02, 0.03, 0.04, 0.05};
    case ExperimentKind::Single: break;
    }
    return {};
}

std::string sweep_dimension(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::VaryMss: return "num_mss";
    case ExperimentKind::VaryErrorRate: return "error_rate";
    case ExperimentKind::Single: break;
    }
    return "single";
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text)
{
    std::vector<std::uint64_t> seeds;
    auto add_item = [&](std::string_view item) {
        if (const auto dash = item.find('-'); dash != std::string_view::npos && dash > 0) {
            const auto lo = parse_u64(trim(item.substr(0, dash)));
            const auto hi = parse_u64(trim(item.substr(dash + 1)));
            if (hi < lo)
                throw std::invalid_argument("descending seed range '" + std::string(item) + "'");
            if (hi - lo > 1'000'000)
                throw std::invalid_argument("seed range too large '" + std::string(item) + "'");
            for (auto s = lo; s <= hi; ++s)
                seeds.push_back(s);
        } else {
            seeds.push_back(parse_u64(item));
        }
    };
    // Comma-separated groups; blanks inside a group also separate items.
    while (true) {
        const auto comma = text.find(',');
        auto group = trim(text.substr(0, comma));
        if (group.empty())
            throw std::invalid_argument("empty entry in seed list");
        while (!group.empty()) {
            const auto blank = group.find(' ');
            add_item(group.substr(0, blank));
            group = blank == std::string_view::npos ? std::string_view{}
                                                    : trim(group.substr(blank + 1));
        }
        if (comma == std::string_view::npos)
            break;
        text = text.substr(comma + 1);
    }
    return seeds;
}

std::vector<RunSpec> expand_runs(ExperimentKind kind, const SimConfig& base,
                                 const std::vector<std::uint64_t>& seeds)
{
    std::vector<RunSpec> runs;
    for (double v : sweep_values(kind)) {
        for (auto sched : {SchedulerKind::APEPS, SchedulerKind::PBS}) {
            for (auto seed : seeds) {
                RunSpec r;
                r.config = base;
                r.config.scheduler = sched;
                r.config.seed = seed;
                r.sweep_value = v;
                std::string point;
                if (kind == ExperimentKind::VaryMss) {
                    r.config.num_mss = static_cast<std::uint32_t>(v);
                    point = "mss" + fmt(v);
                } else {
                    r.config.error_rate = v;
                    point = "err" + fmt(v);
                }
                r.label = std::string(to_string(sched)) + "_" + point + "_seed" + std::to_string(seed);
                runs.push_back(std::move(r));
            }
        }
    }
    return runs;
}

void write_run_outputs(const fs::path& dir, const RunResult& run, const MetricsReport& report)
{
    fs::create_directories(dir);
    write_with(dir / "events.csv", [&](std::ostream& o) { write_event_log(o, run.events); });
    write_with(dir / "grants.csv", [&](std::ostream& o) { write_grant_log(o, run.grants); });
    write_with(dir / "energy.csv", [&](std::ostream& o) { write_energy_log(o, run.energy); });
    write_with(dir / "report.csv", [&](std::ostream& o) { write_report(o, report); });
    write_text(dir / "config.txt", format_config(run.config));
}

std::vector<MetricsReport> run_all(const std::vector<RunSpec>& runs, unsigned jobs,
                                   std::vector<RunFailure>& failures, const fs::path& output_dir,
                                   bool run_logs)
{
    std::vector<std::optional<MetricsReport>> slots(runs.size());
    std::vector<std::optional<std::string>> errors(runs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            const auto& spec = runs[i];
            try {
                RunOptions opts;
                opts.record_deferred = run_logs;
                const auto result = run_simulation(spec.config, opts);
                auto report = compute_report(result, "", spec.sweep_value);
                if (!output_dir.empty()) {
                    const auto dir = output_dir / "runs" / spec.label;
                    if (run_logs) {
                        write_run_outputs(dir, result, report);
                    } else {
                        fs::create_directories(dir);
                        write_with(dir / "report.csv",
                                   [&](std::ostream& o) { write_report(o, report); });
                    }
                }
                slots[i] = std::move(report);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    std::vector<MetricsReport> reports;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (slots[i])
            reports.push_back(std::move(*slots[i]));
        else
            failures.push_back({runs[i].label, errors[i].value_or("unknown failure")});
    }
    return reports;
}

std::vector<std::pair<std::string, LineChart>> sweep_charts(ExperimentKind kind,
                                                            const std::vector<SweepRow>& rows)
{
    auto series = [&](const std::string& name, SchedulerKind sched, const std::string& metric) {
        ChartSeries s;
        s.name = name;
        for (const auto& r : rows)
            if (r.scheduler == sched && r.metric == metric)
                s.points.push_back({r.sweep_value, r.mean, r.sd});
        return s;
    };
    auto per_scheduler = [&](const std::string& metric) {
        std::vector<ChartSeries> out;
        for (auto sched : {SchedulerKind::APEPS, SchedulerKind::PBS})
            out.push_back(series(upper(to_string(sched)), sched, metric));
        return out;
    };
    auto per_class = [&](const std::string& prefix, const std::string& suffix) {
        std::vector<ChartSeries> out;
        for (auto sched : {SchedulerKind::APEPS, SchedulerKind::PBS})
            for (const char* cls : {"class1", "class2"})
                out.push_back(series(upper(to_string(sched)) + " " + cls, sched,
                                     prefix + cls + suffix));
        return out;
    };

    std::vector<std::pair<std::string, LineChart>> charts;
    if (kind == ExperimentKind::VaryMss) {
        const std::string x = "Number of MSS";
        charts.push_back({"utilization", {"MSS vs Utilization", x, "Channel utilization",
                                          per_scheduler("utilization")}});
        charts.push_back({"delay_cbr", {"MSS vs Delay (CBR)", x, "End-to-end delay (ms)",
                                        per_scheduler("delay_cbr_ms")}});
        charts.push_back({"delay_vbr", {"MSS vs Delay (VBR)", x, "End-to-end delay (ms)",
                                        per_scheduler("delay_vbr_ms")}});
        charts.push_back({"throughput", {"MSS vs Throughput", x, "Packets received",
                                         per_scheduler("throughput_pkts")}});
        charts.push_back({"energy", {"MSS vs Energy", x, "Average energy per MSS (mJ)",
                                     per_scheduler("energy_mj")}});
    } else if (kind == ExperimentKind::VaryErrorRate) {
        const std::string x = "Channel error rate";
        charts.push_back({"utilization_cbr", {"Error Rate vs Utilization (CBR)", x,
                                              "Channel utilization",
                                              per_class("utilization_cbr_", "")}});
        charts.push_back({"utilization_vbr", {"Error Rate vs Utilization (VBR)", x,
                                              "Channel utilization",
                                              per_class("utilization_vbr_", "")}});
        charts.push_back({"delay_cbr", {"Error Rate vs Delay (CBR)", x, "End-to-end delay (ms)",
                                        per_class("delay_cbr_", "_ms")}});
        charts.push_back({"delay_vbr", {"Error Rate vs Delay (VBR)", x, "End-to-end delay (ms)",
                                        per_class("delay_vbr_", "_ms")}});
        charts.push_back({"utilization", {"Error Rate vs Utilization", x, "Channel utilization",
                                          per_class("utilization_", "")}});
    }
    return charts;
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    if (spec.kind == ExperimentKind::Single)
        throw std::invalid_argument("run_experiment: 'single' is not a sweep");
    if (spec.seeds.empty())
        throw std::invalid_argument("run_experiment: seed list is empty");

    ExperimentResult result;
    const auto runs = expand_runs(spec.kind, spec.base, spec.seeds);
    if (!spec.output_dir.empty())
        fs::create_directories(spec.output_dir);
    result.reports = run_all(runs, spec.jobs, result.failures, spec.output_dir, spec.run_logs);
    const auto dim = sweep_dimension(spec.kind);
    for (auto& r : result.reports)
        r.sweep_name = dim;
    result.rows = aggregate_sweep(result.reports);

    if (!spec.output_dir.empty()) {
        write_with(spec.output_dir / "sweep.csv",
                   [&](std::ostream& o) { write_sweep_csv(o, result.rows); });
        for (const auto& [stem, chart] : sweep_charts(spec.kind, result.rows)) {
            const auto path = spec.output_dir / (stem + ".svg");
            write_text(path, render_svg(chart));
            result.charts.push_back(path);
        }
        if (!result.failures.empty())
            write_with(spec.output_dir / "failures.csv", [&](std::ostream& o) {
                o << "run,message\n";
                for (const auto& f : result.failures) {
                    std::string msg = f.message;
                    std::replace(msg.begin(), msg.end(), '\n', ' ');
                    std::replace(msg.begin(), msg.end(), ',', ';');
                    o << f.label << ',' << msg << '\n';
                }
            });
    }
    return result;
}

}  // namespace apeps
