// apeps-sim: single runs and parameter sweeps of the APEPS / PBS cell simulator.

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "apeps/config_io.hpp"
#include "apeps/engine.hpp"
#include "apeps/experiment.hpp"
#include "apeps/metrics.hpp"

namespace fs = std::filesystem;
using namespace apeps;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kInvariant = 3 };

std::string exact(double v)
{
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

void print_config_error(const ConfigError& e)
{
    std::cerr << "configuration error:\n";
    for (const auto& v : e.violations())
        std::cerr << "  " << v.message() << '\n';
}

fs::path output_dir(const std::optional<std::string>& flag)
{
    if (flag)
        return *flag;
    if (const char* env = std::getenv("APEPS_SIM_OUT"); env && *env)
        return env;
    return "apeps-out";
}

int run_single(const SimConfig& cfg, const fs::path& out)
{
    const auto result = run_simulation(cfg);
    const auto report = compute_report(result);
    write_run_outputs(out, result, report);
    std::cout << "scheduler " << to_string(cfg.scheduler) << ", " << cfg.num_mss << " MSS, seed "
              << cfg.seed << ", " << result.frames_executed << " frames\n";
    for (const char* m : {"utilization", "throughput_pkts", "dropped_pkts", "delay_ms",
                          "delay_cbr_ms", "delay_vbr_ms", "energy_mj"}) {
        const auto v = report.get(m);
        std::cout << "  " << m << " = " << (v ? std::to_string(*v) : std::string("n/a")) << '\n';
    }
    std::cout << "outputs in " << out.string() << '\n';
    return kOk;
}

int run_sweep(ExperimentKind kind, const SimConfig& base, const std::string& seed_text,
              unsigned jobs, bool run_logs, const fs::path& out)
{
    ExperimentSpec spec;
    spec.kind = kind;
    spec.base = base;
    try {
        spec.seeds = parse_seed_list(seed_text);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error:\n  seeds: " << e.what() << '\n';
        return kConfig;
    }
    if (spec.seeds.empty()) {
        std::cerr << "configuration error:\n  seeds: the seed list is empty\n";
        return kConfig;
    }
    spec.output_dir = out;
    spec.jobs = jobs;
    spec.run_logs = run_logs;

    const auto result = run_experiment(spec);
    std::cout << to_string(kind) << ": " << result.reports.size() << " runs completed, "
              << result.failures.size() << " failed\n";
    for (const auto& f : result.failures)
        std::cerr << "  run " << f.label << " failed: " << f.message << '\n';
    std::cout << "sweep table " << (out / "sweep.csv").string() << '\n';
    for (const auto& c : result.charts)
        std::cout << "chart " << c.string() << '\n';
    return result.failures.empty() ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Frame-level 802.16e cell simulator comparing the APEPS scheduler with a "
                 "periodic power-saving baseline"};
    app.set_version_flag("--version", "apeps-sim 1.0");

    std::string config_path;
    std::optional<std::string> scheduler, out;
    std::optional<std::uint32_t> mss;
    std::optional<double> error_rate, duration;
    std::optional<std::uint64_t> seed;
    std::string experiment = "single";
    std::string seeds = "1-20";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::string> sets;
    bool run_logs = false;
    bool dump_config = false;

    app.add_option("--config", config_path, "Configuration file (key = value lines)")
        ->check(CLI::ExistingFile);
    app.add_option("--scheduler", scheduler, "apeps or pbs");
    app.add_option("--mss", mss, "Number of mobile subscriber stations");
    app.add_option("--error-rate", error_rate, "Channel error rate in [0, 1]");
    app.add_option("--seed", seed, "Random seed for a single run");
    app.add_option("--duration", duration, "Simulated time in seconds");
    app.add_option("--out", out, "Output directory (default $APEPS_SIM_OUT, else ./apeps-out)");
    app.add_option("--experiment", experiment, "single, vary_mss or vary_error_rate")
        ->check(CLI::IsMember({"single", "vary_mss", "vary_error_rate"}));
    app.add_option("--seeds", seeds, "Seeds for a sweep, e.g. 1-20 or 1,2,5")
        ->capture_default_str();
    app.add_option("--jobs", jobs, "Concurrent runs during a sweep")->check(CLI::PositiveNumber);
    app.add_option("--set", sets, "Extra setting KEY=VALUE (repeatable)");
    app.add_flag("--run-logs", run_logs, "Write full event/grant/energy logs for every sweep run");
    app.add_flag("--print-config", dump_config, "Print the resolved configuration and exit");

    CLI11_PARSE(app, argc, argv);

    std::vector<Setting> overrides;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "configuration error:\n  --set expects KEY=VALUE, got '" << s << "'\n";
            return kConfig;
        }
        overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    // Dedicated flags are applied last so they win over --set and the file.
    if (scheduler)
        overrides.emplace_back("scheduler", *scheduler);
    if (mss)
        overrides.emplace_back("num_mss", std::to_string(*mss));
    if (error_rate)
        overrides.emplace_back("error_rate", exact(*error_rate));
    if (seed)
        overrides.emplace_back("seed", std::to_string(*seed));
    if (duration)
        overrides.emplace_back("sim_duration_s", exact(*duration));

    try {
        const SimConfig cfg = resolve_config(config_path, overrides);
        if (dump_config) {
            std::cout << format_config(cfg);
            return kOk;
        }
        const auto dir = output_dir(out);
        const auto kind = parse_experiment(experiment);
        if (kind == ExperimentKind::Single)
            return run_single(cfg, dir);
        return run_sweep(kind, cfg, seeds, jobs, run_logs, dir);
    } catch (const ConfigError& e) {
        print_config_error(e);
        return kConfig;
    } catch (const InvariantViolation& e) {
        std::cerr << "invariant violated at frame " << e.frame() << ": " << e.what() << '\n';
        return kInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
