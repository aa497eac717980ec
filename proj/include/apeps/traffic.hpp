#pragma once

// Packet sources (CBR and trace-driven VBR), per-node class queues and the
// per-frame bandwidth requests derived from queue backlog.

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "apeps/channel.hpp"
#include "apeps/core.hpp"

namespace apeps {

struct Packet {
    std::uint64_t id = 0;
    ConnectionId connection;
    std::uint32_t size_bytes = 0;
    double arrival_time_s = 0.0;
};

struct VbrEntry {
    double offset_ms = 0.0;
    std::uint32_t size_bytes = 0;
};

/// Video frame sizes at increasing offsets. Replays cyclically with period cycle_ms.
struct VbrTrace {
    std::vector<VbrEntry> entries;
    double cycle_ms = 0.0;

    double mean_bytes() const;
};

class TraceParseError : public std::runtime_error {
public:
    TraceParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Parses `offset_ms size_bytes` lines. The replay period is the last offset
/// plus the mean spacing between entries (the offset itself for one entry).
VbrTrace load_vbr_trace(std::string_view text);
VbrTrace load_vbr_trace_file(const std::string& path);

/// H.263-like trace: lognormal sizes with the given mean, one entry per interval.
VbrTrace synthetic_vbr_trace(double mean_bytes, double sigma, double interval_ms,
                             std::size_t frames, Rng& rng);

/// Constant-rate arrivals at phase_ms + i * inter_arrival_ms, up to and including horizon_s.
std::vector<Packet> cbr_arrivals(const QoSProfile& qos, double horizon_s,
                                 ConnectionId connection = {}, double phase_ms = 0.0);

/// Cyclic replay of a trace shifted by phase_ms, up to and including horizon_s.
std::vector<Packet> vbr_arrivals(const VbrTrace& trace, double horizon_s,
                                 ConnectionId connection = {}, double phase_ms = 0.0);

/// 1500 B at 1 Mb/s is 12 ms.
constexpr double cbr_interval_ms(std::uint32_t packet_bytes, double rate_bps)
{
    return static_cast<double>(packet_bytes) * 8.0 / rate_bps * 1000.0;
}

struct QueuedPacket {
    Packet packet;
    std::uint32_t remaining_bytes = 0;
    double deadline_s = 0.0;
};

/// Backlog of one connection inside a node's class queue.
struct FlowQueue {
    Connection connection;
    std::deque<QueuedPacket> packets;
    std::uint64_t backlog_bytes = 0;
    /// Bytes already covered by grants placed in current or future frames.
    std::uint64_t granted_bytes = 0;

    void push(const Packet& p);
    /// Deadline of the packet holding the first ungranted byte, if any.
    std::optional<double> ungranted_deadline_s() const;
    std::uint64_t ungranted_bytes() const
    {
        return backlog_bytes > granted_bytes ? backlog_bytes - granted_bytes : 0;
    }
};

/// The three per-node queues q_i1, q_i2, q_i3, each split per connection.
struct NodeQueues {
    NodeId node;
    std::array<std::vector<FlowQueue>, 3> by_class;

    std::size_t packet_count(TrafficClass c) const;
    std::uint64_t backlog_bytes(TrafficClass c) const;
    bool empty() const;
    FlowQueue& add_connection(const Connection& c);
};

struct BandwidthRequest {
    ConnectionId connection;
    NodeId node;
    TrafficClass traffic_class = TrafficClass::Class1;
    FrameIndex observed_frame = 0;
    std::uint32_t bytes = 0;
    double delay_constraint_ms = 0.0;

    /// Absolute deadline in ms used for ordering.
    double deadline_ms(double frame_ms) const
    {
        return static_cast<double>(observed_frame) * frame_ms + delay_constraint_ms;
    }
};

/// One request per connection with ungranted backlog, capped at capacity_bytes,
/// ordered Class1..Class3 then by connection id. With frame_ms > 0 the delay
/// constraint is shortened to what the oldest ungranted packet has left.
std::vector<BandwidthRequest> emit_requests(const NodeQueues& queues, FrameIndex frame,
                                            std::uint32_t capacity_bytes,
                                            bool class1_only = false, double frame_ms = 0.0);

}  // namespace apeps
