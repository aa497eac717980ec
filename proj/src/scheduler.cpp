#include "apeps/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apeps {

namespace {

constexpr double kTolerance = 1e-9;

Grant grant_for(const BandwidthRequest& req, FrameIndex frame, std::uint32_t bytes, bool stolen)
{
    Grant g;
    g.frame = frame;
    g.node = req.node;
    g.connection = req.connection;
    g.traffic_class = req.traffic_class;
    g.bytes = bytes;
    g.request_frame = req.observed_frame;
    g.delay_constraint_ms = req.delay_constraint_ms;
    g.stolen = stolen;
    return g;
}

}  // namespace

bool meets_delay(FrameIndex request_frame, FrameIndex frame, double delay_constraint_ms,
                 double frame_ms)
{
    return static_cast<double>(frame - request_frame + 1) * frame_ms <=
           delay_constraint_ms * (1.0 + kTolerance);
}

FrameIndex last_frame_within_delay(FrameIndex request_frame, double delay_constraint_ms,
                                   double frame_ms)
{
    const auto frames =
        static_cast<FrameIndex>(std::floor(delay_constraint_ms / frame_ms * (1.0 + kTolerance)));
    return request_frame + frames - 1;
}

std::size_t horizon_frames(double max_delay_constraint_ms, double frame_ms)
{
    const double h = std::ceil(max_delay_constraint_ms / frame_ms * (1.0 - kTolerance));
    return static_cast<std::size_t>(std::max(1.0, h));
}

FrameLedger::FrameLedger(FrameIndex first, std::size_t horizon, std::uint32_t capacity_bytes)
    : first_(first), capacity_(capacity_bytes)
{
    if (horizon == 0)
        throw std::invalid_argument("FrameLedger: horizon must be positive");
    slots_.resize(horizon);
    for (auto& s : slots_)
        s.capacity = capacity_bytes;
}

const FrameLedger::Slot& FrameLedger::slot(FrameIndex m) const
{
    if (!contains(m))
        throw std::out_of_range("FrameLedger: frame " + std::to_string(m) + " outside horizon");
    return slots_[static_cast<std::size_t>(m - first_)];
}

FrameLedger::Slot& FrameLedger::slot(FrameIndex m)
{
    return const_cast<Slot&>(std::as_const(*this).slot(m));
}

std::uint32_t FrameLedger::residual(FrameIndex m) const
{
    const auto& s = slot(m);
    return s.allocated >= s.capacity ? 0 : s.capacity - s.allocated;
}

std::uint32_t FrameLedger::allocated_to(FrameIndex m, NodeId n) const
{
    std::uint32_t sum = 0;
    for (const auto& g : slot(m).grants)
        if (g.node == n)
            sum += g.bytes;
    return sum;
}

std::uint64_t FrameLedger::total_allocated() const
{
    std::uint64_t n = 0;
    for (const auto& s : slots_)
        n += s.allocated;
    return n;
}

void FrameLedger::place(const Grant& g)
{
    auto& s = slot(g.frame);
    if (g.bytes == 0)
        throw std::logic_error("FrameLedger: zero-byte grant");
    if (static_cast<std::uint64_t>(s.allocated) + g.bytes > s.capacity)
        throw std::logic_error("FrameLedger: grant of " + std::to_string(g.bytes) +
                               " B overfills frame " + std::to_string(g.frame));
    s.allocated += g.bytes;
    s.grants.push_back(g);
}

Grant FrameLedger::revoke(FrameIndex m, std::size_t index)
{
    auto& s = slot(m);
    if (index >= s.grants.size())
        throw std::out_of_range("FrameLedger: no such grant");
    Grant g = s.grants[index];
    s.grants.erase(s.grants.begin() + static_cast<std::ptrdiff_t>(index));
    s.allocated -= g.bytes;
    return g;
}

std::vector<Grant> FrameLedger::advance()
{
    auto grants = std::move(slots_.front().grants);
    slots_.pop_front();
    slots_.push_back(Slot{capacity_, 0, {}});
    ++first_;
    return grants;
}

std::vector<std::string> FrameLedger::violations(double frame_ms) const
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const auto m = first_ + static_cast<FrameIndex>(i);
        const auto& s = slots_[i];
        std::uint64_t sum = 0;
        for (const auto& g : s.grants) {
            sum += g.bytes;
            if (g.frame != m)
                out.push_back("grant filed under frame " + std::to_string(m) + " targets " +
                              std::to_string(g.frame));
            if (!meets_delay(g.request_frame, g.frame, g.delay_constraint_ms, frame_ms))
                out.push_back("grant for connection " + std::to_string(g.connection.value()) +
                              " in frame " + std::to_string(m) + " misses its delay bound");
        }
        if (sum != s.allocated)
            out.push_back("frame " + std::to_string(m) + " allocation does not match its grants");
        if (s.allocated > s.capacity)
            out.push_back("frame " + std::to_string(m) + " over capacity");
    }
    return out;
}

void sort_requests(std::vector<BandwidthRequest>& requests, double frame_ms)
{
    std::stable_sort(requests.begin(), requests.end(),
                     [frame_ms](const BandwidthRequest& a, const BandwidthRequest& b) {
                         if (a.traffic_class != b.traffic_class)
                             return outranks(a.traffic_class, b.traffic_class);
                         const double da = a.deadline_ms(frame_ms);
                         const double db = b.deadline_ms(frame_ms);
                         if (da != db)
                             return da < db;
                         return a.connection < b.connection;
                     });
}

bool fits(std::uint32_t bytes, std::uint32_t residual, bool strict_capacity)
{
    return strict_capacity ? bytes < residual : bytes <= residual;
}

std::vector<FrameIndex> feasible_frames(const BandwidthRequest& req, const FrameLedger& ledger,
                                        double frame_ms, bool strict_capacity)
{
    std::vector<FrameIndex> out;
    const auto begin = std::max(req.observed_frame, ledger.first_frame());
    const auto last = std::min(ledger.end_frame() - 1,
                               last_frame_within_delay(req.observed_frame,
                                                       req.delay_constraint_ms, frame_ms));
    for (auto m = begin; m <= last; ++m)
        if (fits(req.bytes, ledger.residual(m), strict_capacity))
            out.push_back(m);
    return out;
}

FrameIndex select_frame(std::span<const FrameIndex> feasible, std::span<const bool> in_use)
{
    if (feasible.empty())
        throw std::invalid_argument("select_frame: empty feasible set");
    if (in_use.size() != feasible.size())
        throw std::invalid_argument("select_frame: usage flags do not match feasible set");
    for (std::size_t i = 0; i < feasible.size(); ++i)
        if (in_use[i])
            return feasible[i];
    return feasible.back();
}

GrantDecision schedule_request(const BandwidthRequest& req, FrameLedger& ledger, double frame_ms,
                               bool strict_capacity)
{
    // Single scan equivalent to select_frame(feasible_frames(...)).
    const auto begin = std::max(req.observed_frame, ledger.first_frame());
    const auto last = std::min(ledger.end_frame() - 1,
                               last_frame_within_delay(req.observed_frame,
                                                       req.delay_constraint_ms, frame_ms));
    std::optional<FrameIndex> chosen;
    std::optional<FrameIndex> last_feasible;
    for (auto m = begin; m <= last; ++m) {
        if (!fits(req.bytes, ledger.residual(m), strict_capacity))
            continue;
        if (ledger.in_use_by(m, req.node)) {
            chosen = m;
            break;
        }
        last_feasible = m;
    }
    if (!chosen)
        chosen = last_feasible;

    GrantDecision d;
    d.request = req;
    if (!chosen)
        return d;
    ledger.place(grant_for(req, *chosen, req.bytes, false));
    d.kind = DecisionKind::Placed;
    d.frame = *chosen;
    d.bytes = req.bytes;
    return d;
}

std::vector<GrantDecision> apeps_schedule(std::vector<BandwidthRequest> requests,
                                          FrameLedger& ledger, double frame_ms,
                                          bool strict_capacity)
{
    sort_requests(requests, frame_ms);
    std::vector<GrantDecision> out;
    out.reserve(requests.size());
    for (const auto& r : requests)
        out.push_back(schedule_request(r, ledger, frame_ms, strict_capacity));
    return out;
}

std::size_t SleepSchedule::listen_count() const
{
    return static_cast<std::size_t>(std::count(states.begin(), states.end(), RadioMode::Listen));
}

SleepSchedule build_sleep_schedule(NodeId node, const FrameLedger& ledger)
{
    SleepSchedule s{node, ledger.first_frame(),
                    std::vector<RadioMode>(ledger.horizon(), RadioMode::Sleep)};
    for (auto m = ledger.first_frame(); m < ledger.end_frame(); ++m) {
        for (const auto& g : ledger.grants(m)) {
            if (g.node == node) {
                s.states[static_cast<std::size_t>(m - s.first)] = RadioMode::Listen;
                break;
            }
        }
    }
    return s;
}

std::vector<SleepSchedule> build_sleep_schedules(std::size_t node_count, const FrameLedger& ledger)
{
    std::vector<SleepSchedule> out;
    out.reserve(node_count);
    for (std::size_t n = 0; n < node_count; ++n)
        out.push_back({NodeId(static_cast<std::uint32_t>(n)), ledger.first_frame(),
                       std::vector<RadioMode>(ledger.horizon(), RadioMode::Sleep)});
    for (auto m = ledger.first_frame(); m < ledger.end_frame(); ++m)
        for (const auto& g : ledger.grants(m))
            if (g.node.value() < node_count)
                out[g.node.value()].states[static_cast<std::size_t>(m - ledger.first_frame())] =
                    RadioMode::Listen;
    return out;
}

OverflowResult handle_overflow(std::span<const OverflowDemand> demands, FrameLedger& ledger,
                               std::span<const GroupTag> groups, std::uint32_t q_thr,
                               double frame_ms)
{
    OverflowResult result;
    for (const auto& demand : demands) {
        if (demand.class1_queue_pkts <= q_thr || demand.class1_backlog.empty())
            continue;

        FrameIndex window_end = ledger.first_frame() - 1;
        for (const auto& r : demand.class1_backlog)
            window_end = std::max(window_end, last_frame_within_delay(r.observed_frame,
                                                                      r.delay_constraint_ms,
                                                                      frame_ms));
        window_end = std::min(window_end, ledger.end_frame() - 1);

        // Donor: Class3 before Class2, then earliest frame, then lowest connection id.
        std::optional<std::pair<FrameIndex, std::size_t>> donor;
        for (auto cls : {TrafficClass::Class3, TrafficClass::Class2}) {
            for (auto m = ledger.first_frame(); m <= window_end && !donor; ++m) {
                const auto& gs = ledger.grants(m);
                std::optional<std::size_t> best;
                for (std::size_t i = 0; i < gs.size(); ++i) {
                    const auto& g = gs[i];
                    if (g.traffic_class != cls || g.stolen)
                        continue;
                    const auto n = g.node.value();
                    if (n >= groups.size() || groups[n] != GroupTag::Group1)
                        continue;
                    if (!best || g.connection < gs[*best].connection)
                        best = i;
                }
                if (best)
                    donor = std::make_pair(m, *best);
            }
            if (donor)
                break;
        }
        if (!donor)
            continue;

        const auto [frame, index] = *donor;
        const Grant revoked = ledger.revoke(frame, index);
        result.revoked.push_back(revoked);

        std::uint32_t remaining = revoked.bytes;
        for (const auto& r : demand.class1_backlog) {
            if (remaining == 0)
                break;
            if (!meets_delay(r.observed_frame, frame, r.delay_constraint_ms, frame_ms))
                continue;
            const auto bytes = std::min({r.bytes, remaining, ledger.residual(frame)});
            if (bytes == 0)
                continue;
            ledger.place(grant_for(r, frame, bytes, true));
            remaining -= bytes;
            GrantDecision d;
            d.request = r;
            d.kind = DecisionKind::Stolen;
            d.frame = frame;
            d.bytes = bytes;
            d.donor = revoked.connection;
            result.decisions.push_back(d);
        }
    }
    return result;
}

PbsConfig PbsConfig::from_config(const SimConfig& cfg)
{
    return {cfg.pbs_listen_frames, cfg.pbs_sleep_frames, cfg.pbs_stagger};
}

bool pbs_listening(const PbsConfig& cfg, NodeId node, FrameIndex frame)
{
    const auto period = static_cast<FrameIndex>(cfg.listen_frames + cfg.sleep_frames);
    const FrameIndex offset =
        cfg.stagger ? (static_cast<FrameIndex>(node.value()) * cfg.listen_frames) % period : 0;
    auto phase = (frame - offset) % period;
    if (phase < 0)
        phase += period;
    return phase >= static_cast<FrameIndex>(cfg.sleep_frames);
}

SleepSchedule pbs_sleep_schedule(const PbsConfig& cfg, NodeId node, FrameIndex first,
                                 std::size_t horizon)
{
    SleepSchedule s{node, first, std::vector<RadioMode>(horizon, RadioMode::Sleep)};
    for (std::size_t i = 0; i < horizon; ++i)
        if (pbs_listening(cfg, node, first + static_cast<FrameIndex>(i)))
            s.states[i] = RadioMode::Listen;
    return s;
}

std::vector<GrantDecision> pbs_schedule(std::vector<BandwidthRequest> requests,
                                        FrameLedger& ledger, const PbsConfig& cfg,
                                        double frame_ms, bool strict_capacity)
{
    sort_requests(requests, frame_ms);
    std::vector<GrantDecision> out;
    out.reserve(requests.size());
    for (const auto& req : requests) {
        GrantDecision d;
        d.request = req;
        const auto begin = std::max(req.observed_frame, ledger.first_frame());
        const auto last = std::min(ledger.end_frame() - 1,
                                   last_frame_within_delay(req.observed_frame,
                                                           req.delay_constraint_ms, frame_ms));
        for (auto m = begin; m <= last; ++m) {
            if (!pbs_listening(cfg, req.node, m) ||
                !fits(req.bytes, ledger.residual(m), strict_capacity))
                continue;
            ledger.place(grant_for(req, m, req.bytes, false));
            d.kind = DecisionKind::Placed;
            d.frame = m;
            d.bytes = req.bytes;
            break;
        }
        out.push_back(d);
    }
    return out;
}

}  // namespace apeps
