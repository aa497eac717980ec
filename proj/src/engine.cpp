#include "apeps/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace apeps {

namespace {

enum Stream : std::uint64_t { kPlacement = 1, kTraffic = 2, kDelivery = 3, kChannel = 4 };

std::size_t horizon_for(const SimConfig& cfg)
{
    const double max_dc = std::max({cfg.dc_ugs_ms, cfg.dc_rtps_ms, cfg.dc_ertps_ms,
                                    cfg.dc_nrtps_ms, cfg.dc_be_ms});
    return horizon_frames(max_dc, cfg.frame_ms());
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({{"path", path, "cannot open file"}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v)
{
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace

std::string_view to_string(PowerState s)
{
    switch (s) {
    case PowerState::Tx: return "tx";
    case PowerState::Rx: return "rx";
    case PowerState::Listen: return "listen";
    case PowerState::Sleep: return "sleep";
    }
    return "?";
}

std::string_view to_string(EventKind k)
{
    switch (k) {
    case EventKind::Arrive: return "arrive";
    case EventKind::Deliver: return "deliver";
    case EventKind::Drop: return "drop";
    }
    return "?";
}

std::string_view to_string(GrantOutcome o)
{
    switch (o) {
    case GrantOutcome::Placed: return "placed";
    case GrantOutcome::Deferred: return "deferred";
    case GrantOutcome::Stolen: return "stolen";
    case GrantOutcome::Revoked: return "revoked";
    case GrantOutcome::Sent: return "sent";
    case GrantOutcome::Lost: return "lost";
    }
    return "?";
}

double EnergyAccount::mj(PowerState state) const
{
    double mw = 0.0;
    switch (state) {
    case PowerState::Tx: mw = power.tx_mw; break;
    case PowerState::Rx: mw = power.rx_mw; break;
    case PowerState::Listen: mw = power.listen_mw; break;
    case PowerState::Sleep: mw = power.sleep_mw; break;
    }
    return mw * (static_cast<double>(frames_in(state)) * frame_s);
}

Simulation::Simulation(const SimConfig& cfg, RunOptions options)
    : cfg_(checked(cfg)),
      opts_(options),
      total_frames_(cfg_.total_frames()),
      frame_s_(cfg_.frame_duration_s),
      prr_model_(PrrModel::from_config(cfg_)),
      pbs_(PbsConfig::from_config(cfg_)),
      delivery_rng_(make_rng(cfg_.seed, kDelivery)),
      channel_rng_(make_rng(cfg_.seed, kChannel)),
      ledger_(0, horizon_for(cfg_), cfg_.frame_capacity_bytes)
{
    if (!cfg_.channel_trace.empty())
        channel_trace_ = ChannelTrace::parse(read_file(cfg_.channel_trace));
    std::optional<VbrTrace> file_trace;
    if (!cfg_.vbr_trace.empty())
        file_trace = load_vbr_trace_file(cfg_.vbr_trace);

    auto placement = make_rng(cfg_.seed, kPlacement);
    auto traffic = make_rng(cfg_.seed, kTraffic);
    const double centre = cfg_.area_side_m / 2.0;
    const double horizon_s = static_cast<double>(total_frames_) * frame_s_;

    nodes_.reserve(cfg_.num_mss);
    for (std::uint32_t j = 0; j < cfg_.num_mss; ++j) {
        NodeState n;
        n.id = NodeId(j);
        n.energy = {cfg_.power_profile, frame_s_, {}};
        const double r = cfg_.radio_range_m * std::sqrt(uniform01(placement));
        const double theta = 2.0 * std::numbers::pi * uniform01(placement);
        n.position = {centre + r * std::cos(theta), centre + r * std::sin(theta)};
        n.distance_m = std::hypot(n.position.x - centre, n.position.y - centre);
        n.queues.node = n.id;
        nodes_.push_back(std::move(n));
    }
    groups_.assign(nodes_.size(), GroupTag::Group1);
    bs_energy_ = {cfg_.power_profile, frame_s_, {}};

    const auto vbr_frames = static_cast<std::size_t>(
        std::ceil(horizon_s * 1000.0 / cfg_.vbr_interval_ms)) + 1;
    for (auto& n : nodes_) {
        for (const auto& tmpl : cfg_.flows) {
            const ConnectionId id(static_cast<std::uint32_t>(connections_.size()));
            QoSProfile qos;
            qos.service_type = tmpl.service;
            qos.delay_constraint_ms = cfg_.delay_constraint_ms(tmpl.service);
            Source src;
            if (tmpl.source == SourceKind::CBR) {
                qos.packet_size_bytes = cfg_.cbr_packet_bytes;
                qos.inter_arrival_ms = cfg_.cbr_interval_ms;
                const double phase =
                    cfg_.cbr_random_phase ? uniform01(traffic) * qos.inter_arrival_ms : 0.0;
                src.packets = cbr_arrivals(qos, horizon_s, id, phase);
            } else {
                const VbrTrace trace =
                    file_trace ? *file_trace
                               : synthetic_vbr_trace(cfg_.vbr_mean_bytes, cfg_.vbr_sigma,
                                                     cfg_.vbr_interval_ms, vbr_frames, traffic);
                qos.packet_size_bytes =
                    static_cast<std::uint32_t>(std::max(1.0, std::round(trace.mean_bytes())));
                qos.inter_arrival_ms = trace.cycle_ms / static_cast<double>(trace.entries.size());
                const double phase = uniform01(traffic) * qos.inter_arrival_ms;
                src.packets = vbr_arrivals(trace, horizon_s, id, phase);
            }
            const auto conn = make_connection(id, n.id, tmpl.direction, qos, tmpl.source);
            connections_.push_back(conn);
            auto& q = n.queues.add_connection(conn);
            (void)q;
            sources_.push_back(std::move(src));
            counters_.push_back({conn, 0, 0, 0, 0, 0});
        }
    }
    flow_refs_.resize(connections_.size());
    for (std::size_t j = 0; j < nodes_.size(); ++j)
        for (int c = 0; c < 3; ++c) {
            const auto& flows = nodes_[j].queues.by_class[c];
            for (std::size_t i = 0; i < flows.size(); ++i)
                flow_refs_[flows[i].connection.id.value()] = {j, c, i};
        }
}

FlowQueue& Simulation::flow(ConnectionId id)
{
    const auto& ref = flow_refs_[id.value()];
    return nodes_[ref.node].queues.by_class[ref.cls][ref.index];
}

double Simulation::node_prr(const NodeState& n) const
{
    if (n.distance_m > cfg_.radio_range_m)
        return 0.0;
    if (prr_model_.mode == PrrMode::FixedErrorRate)
        return n.channel_error ? 0.0 : 1.0;
    return prr(prr_model_, n.sinr_db);
}

void Simulation::update_channel(FrameIndex k)
{
    for (auto& n : nodes_) {
        std::optional<double> sample;
        if (channel_trace_)
            sample = channel_trace_->sinr_db(n.id, k);
        if (sample) {
            n.sinr_db = *sample;
        } else {
            const double p = received_power_mw(cfg_.tx_power_mw, n.distance_m,
                                               cfg_.reference_distance_m, cfg_.path_loss_exponent);
            n.sinr_db = to_db(compute_sinr(p, cfg_.noise_mw));
        }
        n.group = classify_group(n.sinr_db, cfg_.sinr_threshold_db);
        n.channel_error = false;
        if (prr_model_.mode == PrrMode::FixedErrorRate) {
            n.channel_error = !sample_delivery(prr(prr_model_, n.sinr_db), channel_rng_);
            if (n.channel_error)
                n.group = GroupTag::Group2;
        }
        groups_[n.id.value()] = n.group;
    }
}

void Simulation::log_grant(const Grant& g, GrantOutcome outcome, std::uint32_t bytes,
                           std::optional<ConnectionId> donor)
{
    if (!opts_.record_grants)
        return;
    grants_.push_back({g.frame, g.node, g.connection, g.traffic_class,
                       connection(g.connection).source, bytes, g.request_frame, outcome, donor});
}

void Simulation::log_decision(const GrantDecision& d)
{
    if (!opts_.record_grants)
        return;
    if (d.kind == DecisionKind::Deferred && !opts_.record_deferred)
        return;
    const auto& r = d.request;
    GrantRecord rec{d.frame,
                    r.node,
                    r.connection,
                    r.traffic_class,
                    connection(r.connection).source,
                    d.kind == DecisionKind::Deferred ? r.bytes : d.bytes,
                    r.observed_frame,
                    GrantOutcome::Placed,
                    d.donor};
    if (d.kind == DecisionKind::Deferred)
        rec.outcome = GrantOutcome::Deferred;
    else if (d.kind == DecisionKind::Stolen)
        rec.outcome = GrantOutcome::Stolen;
    grants_.push_back(rec);
}

void Simulation::suppress_bad_channel_grants(FrameIndex k)
{
    // Bad-channel nodes keep only their Class1 slots in this frame; later
    // frames are judged when they come due.
    const auto& gs = ledger_.grants(k);
    for (std::size_t i = gs.size(); i-- > 0;) {
        const auto& g = gs[i];
        if (g.traffic_class == TrafficClass::Class1 || groups_[g.node.value()] != GroupTag::Group2)
            continue;
        const Grant revoked = ledger_.revoke(k, i);
        flow(revoked.connection).granted_bytes -= revoked.bytes;
        log_grant(revoked, GrantOutcome::Revoked, revoked.bytes);
    }
}

void Simulation::advance_frame()
{
    if (finished())
        throw std::logic_error("advance_frame: simulation already finished");
    const FrameIndex k = clock_;
    const double frame_start = static_cast<double>(k) * frame_s_;
    const double frame_ms = cfg_.frame_ms();
    const bool apeps = cfg_.scheduler == SchedulerKind::APEPS;
    if (ledger_.first_frame() != k)
        throw InvariantViolation(k, "ledger horizon out of step with the clock");

    if (opts_.trace_frames)
        trace_ = FrameTrace{};
    trace_.frame = k;

    // (1) arrivals up to the frame start
    for (std::size_t c = 0; c < sources_.size(); ++c) {
        auto& src = sources_[c];
        auto& q = flow(ConnectionId(static_cast<std::uint32_t>(c)));
        while (src.next < src.packets.size() &&
               src.packets[src.next].arrival_time_s <= frame_start + 1e-12) {
            const auto& p = src.packets[src.next++];
            q.push(p);
            ++counters_[c].arrivals;
            if (opts_.record_events) {
                const auto& conn = connections_[c];
                events_.push_back({p.arrival_time_s,
                                   static_cast<FrameIndex>(std::floor(p.arrival_time_s / frame_s_ + 1e-9)),
                                   conn.node, conn.id, conn.traffic_class, conn.source,
                                   EventKind::Arrive, p.size_bytes, std::nullopt});
            }
        }
    }

    // (2) channel estimation and grouping
    update_channel(k);
    if (opts_.trace_frames)
        trace_.groups = groups_;
    if (apeps)
        suppress_bad_channel_grants(k);

    // (3) requests; bad-channel nodes only forward Class1 under APEPS
    std::vector<BandwidthRequest> requests;
    for (const auto& n : nodes_) {
        const bool class1_only = apeps && n.group == GroupTag::Group2;
        auto r = emit_requests(n.queues, k, cfg_.frame_capacity_bytes, class1_only, frame_ms);
        requests.insert(requests.end(), r.begin(), r.end());
    }

    // (4) priority pass
    auto decisions = apeps ? apeps_schedule(std::move(requests), ledger_, frame_ms,
                                            cfg_.strict_capacity)
                           : pbs_schedule(std::move(requests), ledger_, pbs_, frame_ms,
                                          cfg_.strict_capacity);
    for (const auto& d : decisions) {
        if (d.kind == DecisionKind::Placed)
            flow(d.request.connection).granted_bytes += d.bytes;
        log_decision(d);
    }
    if (opts_.trace_frames) {
        trace_.decisions = decisions;
        trace_.ledger_after_pass = ledger_;
    }

    // (5) overflow slot stealing for bad-channel Class1 backlog
    if (apeps) {
        std::vector<OverflowDemand> demands;
        for (const auto& n : nodes_) {
            if (n.group != GroupTag::Group2)
                continue;
            const auto pkts = n.queues.packet_count(TrafficClass::Class1);
            if (pkts <= cfg_.queue_threshold_pkts)
                continue;
            demands.push_back(
                {n.id, pkts, emit_requests(n.queues, k, cfg_.frame_capacity_bytes, true, frame_ms)});
        }
        auto overflow =
            handle_overflow(demands, ledger_, groups_, cfg_.queue_threshold_pkts, frame_ms);
        for (const auto& g : overflow.revoked) {
            flow(g.connection).granted_bytes -= g.bytes;
            log_grant(g, GrantOutcome::Revoked, g.bytes);
        }
        for (const auto& d : overflow.decisions) {
            flow(d.request.connection).granted_bytes += d.bytes;
            log_decision(d);
        }
        if (opts_.trace_frames) {
            trace_.overflow_demands = std::move(demands);
            trace_.overflow = std::move(overflow);
        }
    }
    if (opts_.trace_frames)
        trace_.ledger_after_overflow = ledger_;

    // (6) sleep schedules
    std::vector<SleepSchedule> schedules;
    if (apeps) {
        schedules = build_sleep_schedules(nodes_.size(), ledger_);
    } else {
        schedules.reserve(nodes_.size());
        for (const auto& n : nodes_)
            schedules.push_back(pbs_sleep_schedule(pbs_, n.id, k, ledger_.horizon()));
    }

    // (7) realise this frame's grants
    std::vector<bool> sent(nodes_.size(), false);
    std::vector<bool> received(nodes_.size(), false);
    bool bs_sent = false;
    bool bs_received = false;
    std::uint64_t air_bytes = 0;
    const double capacity = static_cast<double>(cfg_.frame_capacity_bytes);
    for (const auto& g : ledger_.grants(k)) {
        auto& q = flow(g.connection);
        const auto& conn = q.connection;
        auto& node = nodes_[g.node.value()];
        const RadioMode mode = schedules[g.node.value()].at(k);
        if (q.granted_bytes < g.bytes)
            throw InvariantViolation(k, "grant accounting underflow");
        q.granted_bytes -= g.bytes;
        if (mode == RadioMode::Sleep)
            throw InvariantViolation(k, "grant realised while node " +
                                            std::to_string(g.node.value()) + " sleeps");
        if (apeps && node.group == GroupTag::Group2 && g.traffic_class != TrafficClass::Class1)
            throw InvariantViolation(k, "low-priority grant realised on a bad channel");

        const auto bytes = static_cast<std::uint32_t>(std::min<std::uint64_t>(g.bytes, q.backlog_bytes));
        Transmission tx{g, bytes, false, mode, node.group};
        if (bytes == 0) {
            if (opts_.trace_frames)
                trace_.transmissions.push_back(tx);
            continue;
        }
        if (conn.direction == Direction::Uplink) {
            sent[g.node.value()] = true;
            bs_received = true;
        } else {
            received[g.node.value()] = true;
            bs_sent = true;
        }
        tx.delivered = sample_delivery(node_prr(node), delivery_rng_);
        log_grant(g, tx.delivered ? GrantOutcome::Sent : GrantOutcome::Lost, bytes);
        if (tx.delivered) {
            counters_[conn.id.value()].sent_bytes += bytes;
            std::uint32_t left = bytes;
            while (left > 0 && !q.packets.empty()) {
                auto& head = q.packets.front();
                const auto take = std::min(left, head.remaining_bytes);
                head.remaining_bytes -= take;
                q.backlog_bytes -= take;
                left -= take;
                air_bytes += take;
                if (head.remaining_bytes == 0) {
                    const double t = frame_start +
                                     frame_s_ * std::min(1.0, static_cast<double>(air_bytes) / capacity);
                    ++counters_[conn.id.value()].delivered;
                    if (opts_.record_events)
                        events_.push_back({t, k, conn.node, conn.id, conn.traffic_class,
                                           conn.source, EventKind::Deliver,
                                           head.packet.size_bytes,
                                           (t - head.packet.arrival_time_s) * 1000.0});
                    q.packets.pop_front();
                }
            }
        } else {
            air_bytes += bytes;
        }
        if (opts_.trace_frames)
            trace_.transmissions.push_back(tx);
    }

    // (8) drop packets that cannot meet their deadline any more
    const double frame_end = frame_start + frame_s_;
    for (auto& n : nodes_) {
        for (auto& cls : n.queues.by_class) {
            for (auto& q : cls) {
                while (!q.packets.empty() && q.packets.front().deadline_s <= frame_end + 1e-12) {
                    const auto& head = q.packets.front();
                    q.backlog_bytes -= head.remaining_bytes;
                    ++counters_[q.connection.id.value()].dropped;
                    if (opts_.record_events)
                        events_.push_back({frame_end, k, n.id, q.connection.id,
                                           q.connection.traffic_class, q.connection.source,
                                           EventKind::Drop, head.packet.size_bytes,
                                           (frame_end - head.packet.arrival_time_s) * 1000.0});
                    q.packets.pop_front();
                }
            }
        }
    }

    // (9) energy
    if (opts_.trace_frames)
        trace_.power.clear();
    for (auto& n : nodes_) {
        const auto j = n.id.value();
        PowerState state = PowerState::Sleep;
        if (sent[j])
            state = PowerState::Tx;
        else if (received[j])
            state = PowerState::Rx;
        else if (schedules[j].at(k) == RadioMode::Listen)
            state = PowerState::Listen;
        n.energy.charge(state);
        if (opts_.record_power_timeline)
            n.power_timeline.push_back(state);
        if (opts_.trace_frames)
            trace_.power.push_back(state);
    }
    bs_energy_.charge(bs_sent ? PowerState::Tx : bs_received ? PowerState::Rx : PowerState::Listen);

    if (opts_.trace_frames)
        trace_.schedules = std::move(schedules);

    if (const auto v = ledger_.violations(frame_ms); !v.empty())
        throw InvariantViolation(k, v.front());
    ledger_.advance();
    ++clock_;
}

RunResult Simulation::result() const
{
    RunResult r;
    r.config = cfg_;
    r.frames_executed = clock_;
    r.connections = connections_;
    r.events = events_;
    r.grants = grants_;
    for (const auto& n : nodes_)
        r.energy.push_back({std::to_string(n.id.value()), n.energy});
    r.energy.push_back({"bs", bs_energy_});
    r.flows = counters_;
    for (auto& f : r.flows) {
        const auto& ref = flow_refs_[f.connection.id.value()];
        f.queued_at_end = nodes_[ref.node].queues.by_class[ref.cls][ref.index].packets.size();
        if (f.arrivals != f.delivered + f.dropped + f.queued_at_end)
            throw InvariantViolation(clock_, "packet conservation broken for connection " +
                                                 std::to_string(f.connection.id.value()));
    }
    return r;
}

RunResult run_simulation(const SimConfig& cfg, RunOptions options)
{
    Simulation sim(cfg, options);
    while (!sim.finished())
        sim.advance_frame();
    return sim.result();
}

void write_event_log(std::ostream& os, const std::vector<EventRecord>& events)
{
    os << "time_s,frame,node,connection,class,event,size_bytes,delay_ms\n";
    for (const auto& e : events) {
        os << fmt(e.time_s) << ',' << e.frame << ',' << e.node.value() << ','
           << e.connection.value() << ',' << to_string(e.traffic_class) << ','
           << to_string(e.kind) << ',' << e.size_bytes << ',';
        if (e.delay_ms)
            os << fmt(*e.delay_ms);
        os << '\n';
    }
}

void write_grant_log(std::ostream& os, const std::vector<GrantRecord>& grants)
{
    os << "frame,node,connection,class,bytes,request_frame,outcome\n";
    for (const auto& g : grants) {
        os << g.frame << ',' << g.node.value() << ',' << g.connection.value() << ','
           << to_string(g.traffic_class) << ',' << g.bytes << ',' << g.request_frame << ','
           << to_string(g.outcome);
        if (g.donor)
            os << ':' << g.donor->value();
        os << '\n';
    }
}

void write_energy_log(std::ostream& os, const std::vector<EnergyRecord>& energy)
{
    os << "node,tx_mj,rx_mj,listen_mj,sleep_mj,total_mj\n";
    for (const auto& e : energy)
        os << e.node << ',' << fmt(e.energy.tx_mj()) << ',' << fmt(e.energy.rx_mj()) << ','
           << fmt(e.energy.listen_mj()) << ',' << fmt(e.energy.sleep_mj()) << ','
           << fmt(e.energy.total_mj()) << '\n';
}

}  // namespace apeps
