#pragma once

// Frame-synchronous simulation of one cell: arrivals, channel estimation,
// scheduling, grant realisation, deadline drops and energy accounting.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "apeps/channel.hpp"
#include "apeps/core.hpp"
#include "apeps/scheduler.hpp"
#include "apeps/traffic.hpp"

namespace apeps {

enum class PowerState : std::uint8_t { Tx, Rx, Listen, Sleep };

std::string_view to_string(PowerState s);

/// Frames spent in each power state; energy is derived as power x time so
/// that long runs do not accumulate rounding error.
struct EnergyAccount {
    PowerProfile power;
    double frame_s = 0.0;
    std::array<std::uint64_t, 4> frames{};  // indexed by PowerState

    void charge(PowerState state) { ++frames[static_cast<std::size_t>(state)]; }
    std::uint64_t frames_in(PowerState state) const
    {
        return frames[static_cast<std::size_t>(state)];
    }
    double mj(PowerState state) const;
    double tx_mj() const { return mj(PowerState::Tx); }
    double rx_mj() const { return mj(PowerState::Rx); }
    double listen_mj() const { return mj(PowerState::Listen); }
    double sleep_mj() const { return mj(PowerState::Sleep); }
    double total_mj() const { return tx_mj() + rx_mj() + listen_mj() + sleep_mj(); }
};

struct Position {
    double x = 0.0;
    double y = 0.0;
};

struct NodeState {
    NodeId id;
    Position position;
    double distance_m = 0.0;
    NodeQueues queues;
    GroupTag group = GroupTag::Group1;
    double sinr_db = 0.0;
    /// Under a fixed error rate: this frame's channel is in error, which
    /// marks the node bad-channel and loses whatever it sends.
    bool channel_error = false;
    EnergyAccount energy;
    std::vector<PowerState> power_timeline;
};

enum class EventKind : std::uint8_t { Arrive, Deliver, Drop };

std::string_view to_string(EventKind k);

struct EventRecord {
    double time_s = 0.0;
    FrameIndex frame = 0;
    NodeId node;
    ConnectionId connection;
    TrafficClass traffic_class = TrafficClass::Class1;
    SourceKind source = SourceKind::CBR;
    EventKind kind = EventKind::Arrive;
    std::uint32_t size_bytes = 0;
    /// Time in system; absent for arrivals.
    std::optional<double> delay_ms;
};

/// Placed / Deferred / Stolen come from scheduling decisions, Revoked from
/// slot stealing and bad-channel suppression, Sent / Lost from realisation.
enum class GrantOutcome : std::uint8_t { Placed, Deferred, Stolen, Revoked, Sent, Lost };

std::string_view to_string(GrantOutcome o);

struct GrantRecord {
    FrameIndex frame = -1;
    NodeId node;
    ConnectionId connection;
    TrafficClass traffic_class = TrafficClass::Class1;
    SourceKind source = SourceKind::CBR;
    std::uint32_t bytes = 0;
    FrameIndex request_frame = 0;
    GrantOutcome outcome = GrantOutcome::Placed;
    std::optional<ConnectionId> donor;
};

struct EnergyRecord {
    std::string node;  // MSS id, or "bs"
    EnergyAccount energy;
};

struct FlowCounters {
    Connection connection;
    std::uint64_t arrivals = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t queued_at_end = 0;
    std::uint64_t sent_bytes = 0;
};

struct RunOptions {
    bool record_events = true;
    bool record_grants = true;
    bool record_deferred = true;
    bool record_power_timeline = false;
    /// Keep a FrameTrace of the last frame for inspection.
    bool trace_frames = false;
};

struct Transmission {
    Grant grant;
    std::uint32_t sent_bytes = 0;
    bool delivered = false;
    RadioMode scheduled_mode = RadioMode::Sleep;
    GroupTag group = GroupTag::Group1;
};

/// Everything one frame did, kept only with RunOptions::trace_frames.
struct FrameTrace {
    FrameIndex frame = 0;
    std::vector<GroupTag> groups;
    std::vector<GrantDecision> decisions;
    std::optional<FrameLedger> ledger_after_pass;
    std::optional<FrameLedger> ledger_after_overflow;
    std::vector<OverflowDemand> overflow_demands;
    OverflowResult overflow;
    std::vector<SleepSchedule> schedules;
    std::vector<Transmission> transmissions;
    std::vector<PowerState> power;
};

struct RunResult {
    SimConfig config;
    FrameIndex frames_executed = 0;
    std::vector<Connection> connections;
    std::vector<EventRecord> events;
    std::vector<GrantRecord> grants;
    std::vector<EnergyRecord> energy;
    std::vector<FlowCounters> flows;
};

class Simulation {
public:
    /// Places the BS at the region centre and the MSS uniformly within radio
    /// range. Throws ConfigError for invalid configurations.
    explicit Simulation(const SimConfig& cfg, RunOptions options = {});

    /// Executes frame clock() and advances the clock by one. Throws
    /// InvariantViolation if the ledger or a realised grant breaks an invariant.
    void advance_frame();

    bool finished() const { return clock_ >= total_frames_; }
    FrameIndex clock() const { return clock_; }
    FrameIndex total_frames() const { return total_frames_; }

    const SimConfig& config() const { return cfg_; }
    const std::vector<NodeState>& nodes() const { return nodes_; }
    const EnergyAccount& base_station_energy() const { return bs_energy_; }
    const FrameLedger& ledger() const { return ledger_; }
    const std::vector<Connection>& connections() const { return connections_; }
    const FrameTrace& last_trace() const { return trace_; }

    /// Counters and logs so far; conservation is checked for every flow.
    RunResult result() const;

private:
    struct FlowRef {
        std::size_t node;
        int cls;
        std::size_t index;
    };
    struct Source {
        std::vector<Packet> packets;
        std::size_t next = 0;
    };

    FlowQueue& flow(ConnectionId id);
    const Connection& connection(ConnectionId id) const { return connections_[id.value()]; }
    double node_prr(const NodeState& n) const;
    void update_channel(FrameIndex k);
    void suppress_bad_channel_grants(FrameIndex k);
    void log_decision(const GrantDecision& d);
    void log_grant(const Grant& g, GrantOutcome outcome, std::uint32_t bytes,
                   std::optional<ConnectionId> donor = std::nullopt);

    SimConfig cfg_;
    RunOptions opts_;
    FrameIndex clock_ = 0;
    FrameIndex total_frames_ = 0;
    double frame_s_ = 0.0;
    PrrModel prr_model_;
    PbsConfig pbs_;
    std::optional<ChannelTrace> channel_trace_;
    Rng delivery_rng_;
    Rng channel_rng_;

    std::vector<NodeState> nodes_;
    std::vector<GroupTag> groups_;
    EnergyAccount bs_energy_;
    std::vector<Connection> connections_;
    std::vector<FlowRef> flow_refs_;
    std::vector<Source> sources_;
    std::vector<FlowCounters> counters_;
    FrameLedger ledger_;

    std::vector<EventRecord> events_;
    std::vector<GrantRecord> grants_;
    FrameTrace trace_;
};

RunResult run_simulation(const SimConfig& cfg, RunOptions options = {});

void write_event_log(std::ostream& os, const std::vector<EventRecord>& events);
void write_grant_log(std::ostream& os, const std::vector<GrantRecord>& grants);
void write_energy_log(std::ostream& os, const std::vector<EnergyRecord>& energy);

}  // namespace apeps
