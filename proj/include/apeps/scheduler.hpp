#pragma once

// Frame-level grant scheduling: the adaptive power-efficient scheduler
// (feasible-frame search, frame selection, non-periodic sleep schedules,
// overflow slot stealing) and the periodic power-save baseline.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apeps/channel.hpp"
#include "apeps/core.hpp"
#include "apeps/traffic.hpp"

namespace apeps {

struct Grant {
    FrameIndex frame = 0;
    NodeId node;
    ConnectionId connection;
    TrafficClass traffic_class = TrafficClass::Class1;
    std::uint32_t bytes = 0;
    FrameIndex request_frame = 0;
    double delay_constraint_ms = 0.0;
    bool stolen = false;
};

/// (m - k + 1) * T_f <= DC, the per-request delay bound.
bool meets_delay(FrameIndex request_frame, FrameIndex frame, double delay_constraint_ms,
                 double frame_ms);

/// Latest frame a request observed at request_frame may use.
FrameIndex last_frame_within_delay(FrameIndex request_frame, double delay_constraint_ms,
                                   double frame_ms);

/// Frames needed to cover the largest delay constraint.
std::size_t horizon_frames(double max_delay_constraint_ms, double frame_ms);

/// Capacity and allocation of the frames [first, first + horizon).
class FrameLedger {
public:
    FrameLedger(FrameIndex first, std::size_t horizon, std::uint32_t capacity_bytes);

    FrameIndex first_frame() const { return first_; }
    FrameIndex end_frame() const { return first_ + static_cast<FrameIndex>(slots_.size()); }
    std::size_t horizon() const { return slots_.size(); }
    bool contains(FrameIndex m) const { return m >= first_ && m < end_frame(); }

    std::uint32_t capacity(FrameIndex m) const { return slot(m).capacity; }
    std::uint32_t allocated(FrameIndex m) const { return slot(m).allocated; }
    std::uint32_t residual(FrameIndex m) const;
    bool in_use(FrameIndex m) const { return slot(m).allocated > 0; }
    /// Bytes of frame m already granted to node n.
    std::uint32_t allocated_to(FrameIndex m, NodeId n) const;
    bool in_use_by(FrameIndex m, NodeId n) const { return allocated_to(m, n) > 0; }
    const std::vector<Grant>& grants(FrameIndex m) const { return slot(m).grants; }
    std::uint64_t total_allocated() const;

    /// Throws std::logic_error if the grant leaves the horizon or overfills its frame.
    void place(const Grant& g);
    Grant revoke(FrameIndex m, std::size_t index);

    /// Drops the first frame (returning its grants) and opens a new empty one.
    std::vector<Grant> advance();

    /// Human-readable description of every broken ledger invariant.
    std::vector<std::string> violations(double frame_ms) const;

private:
    struct Slot {
        std::uint32_t capacity = 0;
        std::uint32_t allocated = 0;
        std::vector<Grant> grants;
    };
    const Slot& slot(FrameIndex m) const;
    Slot& slot(FrameIndex m);

    FrameIndex first_;
    std::uint32_t capacity_;
    std::deque<Slot> slots_;
};

/// Class first (Class1 leading), then absolute deadline, then connection id.
void sort_requests(std::vector<BandwidthRequest>& requests, double frame_ms);

bool fits(std::uint32_t bytes, std::uint32_t residual, bool strict_capacity);

/// Every frame m >= k in the horizon satisfying both the capacity and the delay bound.
std::vector<FrameIndex> feasible_frames(const BandwidthRequest& req, const FrameLedger& ledger,
                                        double frame_ms, bool strict_capacity = false);

/// Earliest in-use frame if any feasible frame is in use, otherwise the last
/// one. `in_use` runs parallel to `feasible`, which must be ascending and
/// non-empty (std::invalid_argument otherwise).
FrameIndex select_frame(std::span<const FrameIndex> feasible, std::span<const bool> in_use);

enum class DecisionKind : std::uint8_t { Placed, Deferred, Stolen };

struct GrantDecision {
    BandwidthRequest request;
    DecisionKind kind = DecisionKind::Deferred;
    FrameIndex frame = -1;
    std::uint32_t bytes = 0;
    std::optional<ConnectionId> donor;
};

/// Places the whole request in the selected feasible frame, or defers it. A
/// frame counts as in use when the requesting node already holds a grant there.
GrantDecision schedule_request(const BandwidthRequest& req, FrameLedger& ledger, double frame_ms,
                               bool strict_capacity = false);

/// Sorts then schedules every request in priority order.
std::vector<GrantDecision> apeps_schedule(std::vector<BandwidthRequest> requests,
                                          FrameLedger& ledger, double frame_ms,
                                          bool strict_capacity = false);

enum class RadioMode : std::uint8_t { Sleep, Listen };

struct SleepSchedule {
    NodeId node;
    FrameIndex first = 0;
    std::vector<RadioMode> states;

    RadioMode at(FrameIndex m) const { return states.at(static_cast<std::size_t>(m - first)); }
    std::size_t listen_count() const;
};

/// Listen exactly on frames holding a grant for the node.
SleepSchedule build_sleep_schedule(NodeId node, const FrameLedger& ledger);

/// The same for nodes 0..node_count-1 in one pass over the ledger.
std::vector<SleepSchedule> build_sleep_schedules(std::size_t node_count, const FrameLedger& ledger);

/// A Group2 node's Class1 backlog that has not been granted yet.
struct OverflowDemand {
    NodeId node;
    std::size_t class1_queue_pkts = 0;
    std::vector<BandwidthRequest> class1_backlog;
};

struct OverflowResult {
    std::vector<GrantDecision> decisions;
    std::vector<Grant> revoked;
};

/// For every demand above q_thr, revokes one Class3 (else Class2) grant of a
/// Group1 node in the nearest usable frame and hands the freed bytes to the
/// demand's Class1 connections. `groups` is indexed by node id.
OverflowResult handle_overflow(std::span<const OverflowDemand> demands, FrameLedger& ledger,
                               std::span<const GroupTag> groups, std::uint32_t q_thr,
                               double frame_ms);

struct PbsConfig {
    std::uint32_t listen_frames = 2;
    std::uint32_t sleep_frames = 4;
    bool stagger = false;

    static PbsConfig from_config(const SimConfig& cfg);
};

/// Fixed pattern: sleep_frames asleep then listen_frames awake, repeating from frame 0
/// (shifted per node when staggered).
bool pbs_listening(const PbsConfig& cfg, NodeId node, FrameIndex frame);

SleepSchedule pbs_sleep_schedule(const PbsConfig& cfg, NodeId node, FrameIndex first,
                                 std::size_t horizon);

/// Strict priority, first fit restricted to the node's listen frames within its delay bound.
std::vector<GrantDecision> pbs_schedule(std::vector<BandwidthRequest> requests,
                                        FrameLedger& ledger, const PbsConfig& cfg,
                                        double frame_ms, bool strict_capacity = false);

}  // namespace apeps
