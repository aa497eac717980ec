#include "apeps/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace apeps {

namespace {

std::string_view trim(std::string_view s)
{
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* what)
{
    throw ConfigError({{std::string(key), std::string(value), what}});
}

double to_double(std::string_view key, std::string_view v)
{
    double out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        bad_value(key, v, "expected a real number");
    return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v)
{
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        bad_value(key, v, "expected a non-negative integer");
    return out;
}

std::uint32_t to_u32(std::string_view key, std::string_view v)
{
    const auto x = to_u64(key, v);
    if (x > 0xffffffffULL)
        bad_value(key, v, "integer out of range");
    return static_cast<std::uint32_t>(x);
}

bool to_bool(std::string_view key, std::string_view v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    bad_value(key, v, "expected a boolean");
}

std::string fmt(double v)
{
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string fmt(std::uint64_t v)
{
    return std::to_string(v);
}

std::string fmt(bool v)
{
    return v ? "true" : "false";
}

struct Key {
    std::string_view name;
    std::function<void(SimConfig&, std::string_view)> set;
    std::function<std::string(const SimConfig&)> get;
};

template <class T>
Key real(std::string_view name, T SimConfig::*field)
{
    return {name, [=](SimConfig& c, std::string_view v) { c.*field = to_double(name, v); },
            [=](const SimConfig& c) { return fmt(static_cast<double>(c.*field)); }};
}

Key u32(std::string_view name, std::uint32_t SimConfig::*field)
{
    return {name, [=](SimConfig& c, std::string_view v) { c.*field = to_u32(name, v); },
            [=](const SimConfig& c) { return fmt(static_cast<std::uint64_t>(c.*field)); }};
}

Key boolean(std::string_view name, bool SimConfig::*field)
{
    return {name, [=](SimConfig& c, std::string_view v) { c.*field = to_bool(name, v); },
            [=](const SimConfig& c) { return fmt(c.*field); }};
}

Key text(std::string_view name, std::string SimConfig::*field)
{
    return {name, [=](SimConfig& c, std::string_view v) { c.*field = std::string(v); },
            [=](const SimConfig& c) { return c.*field; }};
}

Key power(std::string_view name, double PowerProfile::*field)
{
    return {name,
            [=](SimConfig& c, std::string_view v) { c.power_profile.*field = to_double(name, v); },
            [=](const SimConfig& c) { return fmt(c.power_profile.*field); }};
}

template <class Enum>
Key enumerated(std::string_view name, Enum SimConfig::*field, Enum (*parse)(std::string_view))
{
    return {name,
            [=](SimConfig& c, std::string_view v) {
                try {
                    c.*field = parse(v);
                } catch (const std::invalid_argument& e) {
                    bad_value(name, v, e.what());
                }
            },
            [=](const SimConfig& c) { return std::string(to_string(c.*field)); }};
}

const std::vector<Key>& keys()
{
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back(real("frame_duration_s", &SimConfig::frame_duration_s));
        k.push_back(u32("frame_capacity_bytes", &SimConfig::frame_capacity_bytes));
        k.push_back(u32("num_mss", &SimConfig::num_mss));
        k.push_back(real("sim_duration_s", &SimConfig::sim_duration_s));
        k.push_back({"seed",
                     [](SimConfig& c, std::string_view v) { c.seed = to_u64("seed", v); },
                     [](const SimConfig& c) { return fmt(c.seed); }});
        k.push_back(enumerated("scheduler", &SimConfig::scheduler, &parse_scheduler));
        k.push_back(real("sinr_threshold_db", &SimConfig::sinr_threshold_db));
        k.push_back(real("error_rate", &SimConfig::error_rate));
        k.push_back(enumerated("prr_mode", &SimConfig::prr_mode, &parse_prr_mode));
        k.push_back(real("decode_threshold_db", &SimConfig::decode_threshold_db));
        k.push_back(real("logistic_midpoint_db", &SimConfig::logistic_midpoint_db));
        k.push_back(real("logistic_slope", &SimConfig::logistic_slope));
        k.push_back(real("tx_power_mw", &SimConfig::tx_power_mw));
        k.push_back(real("noise_mw", &SimConfig::noise_mw));
        k.push_back(real("path_loss_exponent", &SimConfig::path_loss_exponent));
        k.push_back(real("reference_distance_m", &SimConfig::reference_distance_m));
        k.push_back(real("radio_range_m", &SimConfig::radio_range_m));
        k.push_back(real("area_side_m", &SimConfig::area_side_m));
        k.push_back(text("channel_trace", &SimConfig::channel_trace));
        k.push_back(u32("queue_threshold_pkts", &SimConfig::queue_threshold_pkts));
        k.push_back(boolean("strict_capacity", &SimConfig::strict_capacity));
        k.push_back(u32("pbs_listen_frames", &SimConfig::pbs_listen_frames));
        k.push_back(u32("pbs_sleep_frames", &SimConfig::pbs_sleep_frames));
        k.push_back(boolean("pbs_stagger", &SimConfig::pbs_stagger));
        k.push_back({"flows",
                     [](SimConfig& c, std::string_view v) {
                         try {
                             c.flows = parse_flow_list(v);
                         } catch (const std::invalid_argument& e) {
                             bad_value("flows", v, e.what());
                         }
                     },
                     [](const SimConfig& c) { return format_flow_list(c.flows); }});
        k.push_back(u32("cbr_packet_bytes", &SimConfig::cbr_packet_bytes));
        k.push_back(real("cbr_interval_ms", &SimConfig::cbr_interval_ms));
        k.push_back(boolean("cbr_random_phase", &SimConfig::cbr_random_phase));
        k.push_back(real("vbr_mean_bytes", &SimConfig::vbr_mean_bytes));
        k.push_back(real("vbr_sigma", &SimConfig::vbr_sigma));
        k.push_back(real("vbr_interval_ms", &SimConfig::vbr_interval_ms));
        k.push_back(text("vbr_trace", &SimConfig::vbr_trace));
        k.push_back(real("dc_ugs_ms", &SimConfig::dc_ugs_ms));
        k.push_back(real("dc_rtps_ms", &SimConfig::dc_rtps_ms));
        k.push_back(real("dc_ertps_ms", &SimConfig::dc_ertps_ms));
        k.push_back(real("dc_nrtps_ms", &SimConfig::dc_nrtps_ms));
        k.push_back(real("dc_be_ms", &SimConfig::dc_be_ms));
        k.push_back(power("tx_mw", &PowerProfile::tx_mw));
        k.push_back(power("rx_mw", &PowerProfile::rx_mw));
        k.push_back(power("listen_mw", &PowerProfile::listen_mw));
        k.push_back(power("sleep_mw", &PowerProfile::sleep_mw));
        k.push_back(boolean("bs_energy_in_mean", &SimConfig::bs_energy_in_mean));
        return k;
    }();
    return table;
}

}  // namespace

void apply_setting(SimConfig& cfg, std::string_view key, std::string_view value)
{
    key = trim(key);
    value = trim(value);
    for (const auto& k : keys()) {
        if (k.name == key) {
            k.set(cfg, value);
            return;
        }
    }
    throw ConfigError({{std::string(key), std::string(value), "unknown configuration key"}});
}

SimConfig parse_config_text(std::string_view text, SimConfig base)
{
    std::vector<ConfigViolation> errors;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back({"line " + std::to_string(line_no), std::string(line),
                              "expected key = value"});
            continue;
        }
        try {
            apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            for (auto v : e.violations()) {
                v.constraint += " (line " + std::to_string(line_no) + ")";
                errors.push_back(std::move(v));
            }
        }
    }
    if (!errors.empty())
        throw ConfigError(std::move(errors));
    return base;
}

SimConfig load_config_file(const std::string& path, SimConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({{"config", path, "cannot open file"}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::move(base));
}

std::string format_config(const SimConfig& cfg)
{
    std::string out;
    for (const auto& k : keys()) {
        out += k.name;
        out += " = ";
        out += k.get(cfg);
        out += '\n';
    }
    return out;
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> out;
    for (const auto& k : keys())
        out.emplace_back(k.name);
    return out;
}

SimConfig resolve_config(const std::string& path, const std::vector<Setting>& overrides)
{
    SimConfig cfg = path.empty() ? SimConfig{} : load_config_file(path);
    std::vector<ConfigViolation> errors;
    for (const auto& [key, value] : overrides) {
        try {
            apply_setting(cfg, key, value);
        } catch (const ConfigError& e) {
            errors.insert(errors.end(), e.violations().begin(), e.violations().end());
        }
    }
    if (!errors.empty())
        throw ConfigError(std::move(errors));
    return checked(cfg);
}

}  // namespace apeps
