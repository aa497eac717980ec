#include "apeps/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace apeps {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string num(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

TrafficClass classify_traffic(ServiceType service)
{
    switch (service) {
    case ServiceType::UGS:
    case ServiceType::rtPS:
    case ServiceType::ertPS:
        return TrafficClass::Class1;
    case ServiceType::nrtPS:
        return TrafficClass::Class2;
    case ServiceType::BE:
        return TrafficClass::Class3;
    }
    return TrafficClass::Class3;
}

std::string_view to_string(TrafficClass c)
{
    switch (c) {
    case TrafficClass::Class1: return "class1";
    case TrafficClass::Class2: return "class2";
    case TrafficClass::Class3: return "class3";
    }
    return "?";
}

std::string_view to_string(ServiceType s)
{
    switch (s) {
    case ServiceType::UGS: return "UGS";
    case ServiceType::rtPS: return "rtPS";
    case ServiceType::ertPS: return "ertPS";
    case ServiceType::nrtPS: return "nrtPS";
    case ServiceType::BE: return "BE";
    }
    return "?";
}

std::string_view to_string(Direction d)
{
    return d == Direction::Uplink ? "ul" : "dl";
}

std::string_view to_string(SourceKind s)
{
    return s == SourceKind::CBR ? "cbr" : "vbr";
}

std::string_view to_string(SchedulerKind s)
{
    return s == SchedulerKind::APEPS ? "apeps" : "pbs";
}

std::string_view to_string(PrrMode m)
{
    switch (m) {
    case PrrMode::FixedErrorRate: return "fixed";
    case PrrMode::SinrStep: return "step";
    case PrrMode::SinrLogistic: return "logistic";
    }
    return "?";
}

ServiceType parse_service_type(std::string_view s)
{
    const auto l = lower(s);
    if (l == "ugs") return ServiceType::UGS;
    if (l == "rtps") return ServiceType::rtPS;
    if (l == "ertps") return ServiceType::ertPS;
    if (l == "nrtps") return ServiceType::nrtPS;
    if (l == "be") return ServiceType::BE;
    throw std::invalid_argument("unknown service type '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s)
{
    const auto l = lower(s);
    if (l == "ul" || l == "uplink") return Direction::Uplink;
    if (l == "dl" || l == "downlink") return Direction::Downlink;
    throw std::invalid_argument("unknown direction '" + std::string(s) + "'");
}

SourceKind parse_source_kind(std::string_view s)
{
    const auto l = lower(s);
    if (l == "cbr") return SourceKind::CBR;
    if (l == "vbr") return SourceKind::VBR;
    throw std::invalid_argument("unknown traffic source '" + std::string(s) + "'");
}

SchedulerKind parse_scheduler(std::string_view s)
{
    const auto l = lower(s);
    if (l == "apeps") return SchedulerKind::APEPS;
    if (l == "pbs") return SchedulerKind::PBS;
    throw std::invalid_argument("unknown scheduler '" + std::string(s) + "'");
}

PrrMode parse_prr_mode(std::string_view s)
{
    const auto l = lower(s);
    if (l == "fixed" || l == "fixederrorrate") return PrrMode::FixedErrorRate;
    if (l == "step" || l == "sinrstep") return PrrMode::SinrStep;
    if (l == "logistic" || l == "sinrlogistic") return PrrMode::SinrLogistic;
    throw std::invalid_argument("unknown prr mode '" + std::string(s) + "'");
}

Connection make_connection(ConnectionId id, NodeId node, Direction dir, QoSProfile qos,
                           SourceKind source)
{
    Connection c;
    c.id = id;
    c.node = node;
    c.direction = dir;
    c.qos = qos;
    c.traffic_class = classify_traffic(qos.service_type);
    c.source = source;
    return c;
}

std::vector<FlowTemplate> parse_flow_list(std::string_view text)
{
    std::vector<FlowTemplate> flows;
    std::string token;
    auto flush = [&] {
        if (token.empty())
            return;
        std::vector<std::string> parts;
        std::string part;
        std::istringstream is(token);
        while (std::getline(is, part, ':'))
            parts.push_back(part);
        if (parts.size() != 3)
            throw std::invalid_argument("flow '" + token + "' is not source:service:direction");
        flows.push_back({parse_source_kind(parts[0]), parse_service_type(parts[1]),
                         parse_direction(parts[2])});
        token.clear();
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',')
            flush();
        else
            token.push_back(c);
    }
    flush();
    return flows;
}

std::string format_flow_list(const std::vector<FlowTemplate>& flows)
{
    std::string out;
    for (const auto& f : flows) {
        if (!out.empty())
            out += ' ';
        out += to_string(f.source);
        out += ':';
        out += to_string(f.service);
        out += ':';
        out += to_string(f.direction);
    }
    return out;
}

FrameIndex SimConfig::total_frames() const
{
    return static_cast<FrameIndex>(std::floor(sim_duration_s / frame_duration_s + 1e-9));
}

double SimConfig::delay_constraint_ms(ServiceType s) const
{
    switch (s) {
    case ServiceType::UGS: return dc_ugs_ms;
    case ServiceType::rtPS: return dc_rtps_ms;
    case ServiceType::ertPS: return dc_ertps_ms;
    case ServiceType::nrtPS: return dc_nrtps_ms;
    case ServiceType::BE: return dc_be_ms;
    }
    return dc_be_ms;
}

std::string ConfigViolation::message() const
{
    return field + " = " + value + ": " + constraint;
}

std::vector<ConfigViolation> validate_config(const SimConfig& cfg)
{
    std::vector<ConfigViolation> out;
    auto require = [&](bool ok, const char* field, std::string value, const char* constraint) {
        if (!ok)
            out.push_back({field, std::move(value), constraint});
    };
    auto positive = [&](double v, const char* field) {
        require(std::isfinite(v) && v > 0.0, field, num(v), "must be positive");
    };

    positive(cfg.frame_duration_s, "frame_duration_s");
    require(cfg.frame_capacity_bytes > 0, "frame_capacity_bytes",
            num(cfg.frame_capacity_bytes), "must be positive");
    require(cfg.num_mss > 0, "num_mss", num(cfg.num_mss), "must be positive");
    require(std::isfinite(cfg.sim_duration_s) && cfg.sim_duration_s >= cfg.frame_duration_s,
            "sim_duration_s", num(cfg.sim_duration_s), "must be >= frame_duration_s");
    require(std::isfinite(cfg.sinr_threshold_db), "sinr_threshold_db",
            num(cfg.sinr_threshold_db), "must be finite");
    require(cfg.queue_threshold_pkts > 0, "queue_threshold_pkts",
            num(cfg.queue_threshold_pkts), "must be positive");
    require(cfg.error_rate >= 0.0 && cfg.error_rate <= 1.0, "error_rate", num(cfg.error_rate),
            "must be in [0, 1]");

    require(std::isfinite(cfg.decode_threshold_db), "decode_threshold_db",
            num(cfg.decode_threshold_db), "must be finite");
    require(std::isfinite(cfg.logistic_midpoint_db), "logistic_midpoint_db",
            num(cfg.logistic_midpoint_db), "must be finite");
    positive(cfg.logistic_slope, "logistic_slope");
    require(std::isfinite(cfg.tx_power_mw) && cfg.tx_power_mw >= 0.0, "tx_power_mw",
            num(cfg.tx_power_mw), "must be non-negative");
    positive(cfg.noise_mw, "noise_mw");
    positive(cfg.path_loss_exponent, "path_loss_exponent");
    positive(cfg.reference_distance_m, "reference_distance_m");
    positive(cfg.radio_range_m, "radio_range_m");
    require(std::isfinite(cfg.area_side_m) && cfg.area_side_m >= 2.0 * cfg.radio_range_m,
            "area_side_m", num(cfg.area_side_m), "must hold the radio range around the BS");

    require(cfg.pbs_listen_frames > 0, "pbs_listen_frames", num(cfg.pbs_listen_frames),
            "must be positive");

    require(cfg.cbr_packet_bytes > 0, "cbr_packet_bytes", num(cfg.cbr_packet_bytes),
            "must be positive");
    positive(cfg.cbr_interval_ms, "cbr_interval_ms");
    positive(cfg.vbr_mean_bytes, "vbr_mean_bytes");
    require(std::isfinite(cfg.vbr_sigma) && cfg.vbr_sigma >= 0.0, "vbr_sigma",
            num(cfg.vbr_sigma), "must be non-negative");
    positive(cfg.vbr_interval_ms, "vbr_interval_ms");

    const double frame_ms = cfg.frame_ms();
    auto delay = [&](double v, const char* field) {
        require(std::isfinite(v) && v >= frame_ms, field, num(v),
                "must be at least one frame duration");
    };
    delay(cfg.dc_ugs_ms, "dc_ugs_ms");
    delay(cfg.dc_rtps_ms, "dc_rtps_ms");
    delay(cfg.dc_ertps_ms, "dc_ertps_ms");
    delay(cfg.dc_nrtps_ms, "dc_nrtps_ms");
    delay(cfg.dc_be_ms, "dc_be_ms");

    const auto& p = cfg.power_profile;
    require(p.tx_mw >= 0 && p.rx_mw >= 0 && p.listen_mw >= 0 && p.sleep_mw >= 0,
            "power_profile", num(p.sleep_mw), "powers must be non-negative");
    require(p.sleep_mw <= p.listen_mw && p.listen_mw <= p.rx_mw && p.sleep_mw <= p.tx_mw,
            "power_profile", num(p.listen_mw),
            "requires sleep_mw <= listen_mw <= rx_mw and sleep_mw <= tx_mw");
    return out;
}

namespace {

std::string join_violations(const std::vector<ConfigViolation>& v)
{
    std::string msg = "invalid configuration:";
    for (const auto& e : v)
        msg += "\n  " + e.message();
    return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigViolation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations))
{
}

SimConfig checked(const SimConfig& cfg)
{
    auto violations = validate_config(cfg);
    if (!violations.empty())
        throw ConfigError(std::move(violations));
    return cfg;
}

InvariantViolation::InvariantViolation(FrameIndex frame, const std::string& what)
    : std::logic_error("frame " + std::to_string(frame) + ": " + what), frame_(frame)
{
}

}  // namespace apeps
