#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace apeps {

using FrameIndex = std::int64_t;

/// Opaque integer identifier, distinct per tag.
template <class Tag>
class Id {
public:
    constexpr Id() = default;
    constexpr explicit Id(std::uint32_t v) : value_(v) {}
    constexpr std::uint32_t value() const { return value_; }
    friend constexpr auto operator<=>(Id, Id) = default;

private:
    std::uint32_t value_ = 0;
};

using NodeId = Id<struct NodeTag>;
using ConnectionId = Id<struct ConnectionTag>;

enum class TrafficClass : std::uint8_t { Class1 = 1, Class2 = 2, Class3 = 3 };

/// 0 for Class1, 2 for Class3.
constexpr int class_index(TrafficClass c) { return static_cast<int>(c) - 1; }

/// Class1 outranks Class2 outranks Class3.
constexpr bool outranks(TrafficClass a, TrafficClass b) { return class_index(a) < class_index(b); }

enum class ServiceType : std::uint8_t { UGS, rtPS, ertPS, nrtPS, BE };
enum class Direction : std::uint8_t { Uplink, Downlink };
enum class SourceKind : std::uint8_t { CBR, VBR };
enum class SchedulerKind : std::uint8_t { APEPS, PBS };
enum class PrrMode : std::uint8_t { FixedErrorRate, SinrStep, SinrLogistic };

TrafficClass classify_traffic(ServiceType service);

std::string_view to_string(TrafficClass c);
std::string_view to_string(ServiceType s);
std::string_view to_string(Direction d);
std::string_view to_string(SourceKind s);
std::string_view to_string(SchedulerKind s);
std::string_view to_string(PrrMode m);

// Parsers are case-insensitive and throw std::invalid_argument on unknown names.
ServiceType parse_service_type(std::string_view s);
Direction parse_direction(std::string_view s);
SourceKind parse_source_kind(std::string_view s);
SchedulerKind parse_scheduler(std::string_view s);
PrrMode parse_prr_mode(std::string_view s);

struct QoSProfile {
    std::uint32_t packet_size_bytes = 1500;
    double inter_arrival_ms = 12.0;
    double delay_constraint_ms = 40.0;
    ServiceType service_type = ServiceType::UGS;
};

struct Connection {
    ConnectionId id;
    NodeId node;
    Direction direction = Direction::Uplink;
    QoSProfile qos;
    TrafficClass traffic_class = TrafficClass::Class1;
    SourceKind source = SourceKind::CBR;
};

/// Builds a connection whose class is derived from the QoS service type.
Connection make_connection(ConnectionId id, NodeId node, Direction dir, QoSProfile qos,
                           SourceKind source);

struct PowerProfile {
    double tx_mw = 420.0;
    double rx_mw = 280.0;
    double listen_mw = 120.0;
    double sleep_mw = 10.0;
};

/// One traffic source attached to every MSS.
struct FlowTemplate {
    SourceKind source = SourceKind::CBR;
    ServiceType service = ServiceType::UGS;
    Direction direction = Direction::Uplink;

    friend bool operator==(const FlowTemplate&, const FlowTemplate&) = default;
};

/// Parses "cbr:UGS:ul vbr:rtPS:dl" (whitespace or comma separated).
std::vector<FlowTemplate> parse_flow_list(std::string_view text);
std::string format_flow_list(const std::vector<FlowTemplate>& flows);

struct SimConfig {
    // Frame structure and run length.
    double frame_duration_s = 0.005;
    std::uint32_t frame_capacity_bytes = 625;
    std::uint32_t num_mss = 4;
    double sim_duration_s = 50.0;
    std::uint64_t seed = 1;
    SchedulerKind scheduler = SchedulerKind::APEPS;

    // Channel.
    double sinr_threshold_db = 5.0;
    double error_rate = 0.01;
    PrrMode prr_mode = PrrMode::FixedErrorRate;
    double decode_threshold_db = 5.0;
    double logistic_midpoint_db = 5.0;
    double logistic_slope = 1.0;
    double tx_power_mw = 100.0;
    double noise_mw = 5e-4;
    double path_loss_exponent = 2.0;
    double reference_distance_m = 1.0;
    double radio_range_m = 250.0;
    double area_side_m = 1000.0;
    std::string channel_trace;

    // Scheduler.
    std::uint32_t queue_threshold_pkts = 10;
    bool strict_capacity = false;
    std::uint32_t pbs_listen_frames = 2;
    std::uint32_t pbs_sleep_frames = 4;
    /// Offset each node's PBS cycle by its index so windows tile the frame.
    bool pbs_stagger = true;

    // Traffic: a Class1 and a Class2 flow per source, about 48 kb/s each.
    std::vector<FlowTemplate> flows = {
        {SourceKind::CBR, ServiceType::UGS, Direction::Uplink},
        {SourceKind::CBR, ServiceType::nrtPS, Direction::Uplink},
        {SourceKind::VBR, ServiceType::rtPS, Direction::Downlink},
        {SourceKind::VBR, ServiceType::nrtPS, Direction::Downlink},
    };
    std::uint32_t cbr_packet_bytes = 1500;
    double cbr_interval_ms = 250.0;
    bool cbr_random_phase = true;
    double vbr_mean_bytes = 200.0;
    double vbr_sigma = 0.6;
    double vbr_interval_ms = 33.0;
    std::string vbr_trace;
    double dc_ugs_ms = 40.0;
    double dc_rtps_ms = 100.0;
    double dc_ertps_ms = 60.0;
    double dc_nrtps_ms = 250.0;
    double dc_be_ms = 500.0;

    // Energy.
    PowerProfile power_profile;
    bool bs_energy_in_mean = false;

    double frame_ms() const { return frame_duration_s * 1000.0; }
    /// Number of frames a run executes.
    FrameIndex total_frames() const;
    double delay_constraint_ms(ServiceType s) const;
};

struct ConfigViolation {
    std::string field;
    std::string value;
    std::string constraint;

    std::string message() const;
};

/// Every violated SimConfig invariant; empty when the config is valid.
std::vector<ConfigViolation> validate_config(const SimConfig& cfg);

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigViolation> violations);
    const std::vector<ConfigViolation>& violations() const { return violations_; }

private:
    std::vector<ConfigViolation> violations_;
};

/// Returns cfg unchanged when valid, throws ConfigError listing every violation otherwise.
SimConfig checked(const SimConfig& cfg);

/// Raised when a run breaks an internal invariant; carries the frame it happened in.
class InvariantViolation : public std::logic_error {
public:
    InvariantViolation(FrameIndex frame, const std::string& what);
    FrameIndex frame() const { return frame_; }

private:
    FrameIndex frame_;
};

}  // namespace apeps
