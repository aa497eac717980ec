#include "apeps/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace apeps {

double VbrTrace::mean_bytes() const
{
    if (entries.empty())
        return 0.0;
    double sum = 0.0;
    for (const auto& e : entries)
        sum += e.size_bytes;
    return sum / static_cast<double>(entries.size());
}

TraceParseError::TraceParseError(std::size_t line, const std::string& what)
    : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line)
{
}

VbrTrace load_vbr_trace(std::string_view text)
{
    VbrTrace trace;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::istringstream ls(line);
        double offset = 0;
        long long size = 0;
        std::string rest;
        if (!(ls >> offset >> size) || (ls >> rest))
            throw TraceParseError(line_no, "expected 'offset_ms size_bytes'");
        if (!std::isfinite(offset) || offset < 0)
            throw TraceParseError(line_no, "offset must be non-negative");
        if (size <= 0 || size > 0xffffffffLL)
            throw TraceParseError(line_no, "size must be positive");
        if (!trace.entries.empty() && offset <= trace.entries.back().offset_ms)
            throw TraceParseError(line_no, "offsets must be strictly increasing");
        trace.entries.push_back({offset, static_cast<std::uint32_t>(size)});
    }
    if (trace.entries.empty())
        throw TraceParseError(line_no, "trace is empty");

    const auto n = trace.entries.size();
    const double last = trace.entries.back().offset_ms;
    if (n == 1) {
        if (last <= 0)
            throw TraceParseError(line_no, "single-entry trace needs a positive offset");
        trace.cycle_ms = last;
    } else {
        trace.cycle_ms = last + (last - trace.entries.front().offset_ms) / static_cast<double>(n - 1);
    }
    return trace;
}

VbrTrace load_vbr_trace_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw TraceParseError(0, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_vbr_trace(ss.str());
}

VbrTrace synthetic_vbr_trace(double mean_bytes, double sigma, double interval_ms,
                             std::size_t frames, Rng& rng)
{
    VbrTrace trace;
    trace.entries.reserve(frames);
    const double mu = std::log(mean_bytes) - 0.5 * sigma * sigma;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < frames; ++i) {
        const double size = std::exp(mu + sigma * normal(rng));
        trace.entries.push_back(
            {static_cast<double>(i) * interval_ms,
             static_cast<std::uint32_t>(std::max(1.0, std::round(size)))});
    }
    trace.cycle_ms = static_cast<double>(frames) * interval_ms;
    return trace;
}

std::vector<Packet> cbr_arrivals(const QoSProfile& qos, double horizon_s, ConnectionId connection,
                                 double phase_ms)
{
    std::vector<Packet> out;
    const double horizon_ms = horizon_s * 1000.0;
    if (horizon_ms < phase_ms)
        return out;
    const auto count = static_cast<std::uint64_t>(
                           std::floor((horizon_ms - phase_ms) / qos.inter_arrival_ms + 1e-9)) +
                       1;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double t_ms = phase_ms + static_cast<double>(i) * qos.inter_arrival_ms;
        out.push_back({i, connection, qos.packet_size_bytes, t_ms / 1000.0});
    }
    return out;
}

std::vector<Packet> vbr_arrivals(const VbrTrace& trace, double horizon_s, ConnectionId connection,
                                 double phase_ms)
{
    std::vector<Packet> out;
    if (trace.entries.empty() || !(trace.cycle_ms > 0))
        return out;
    const double horizon_ms = horizon_s * 1000.0 + 1e-9;
    std::uint64_t id = 0;
    for (std::uint64_t cycle = 0;; ++cycle) {
        const double base = phase_ms + static_cast<double>(cycle) * trace.cycle_ms;
        if (base + trace.entries.front().offset_ms > horizon_ms)
            break;
        for (const auto& e : trace.entries) {
            const double t_ms = base + e.offset_ms;
            if (t_ms > horizon_ms)
                break;
            out.push_back({id++, connection, e.size_bytes, t_ms / 1000.0});
        }
    }
    return out;
}

void FlowQueue::push(const Packet& p)
{
    packets.push_back(
        {p, p.size_bytes, p.arrival_time_s + connection.qos.delay_constraint_ms / 1000.0});
    backlog_bytes += p.size_bytes;
}

std::size_t NodeQueues::packet_count(TrafficClass c) const
{
    std::size_t n = 0;
    for (const auto& f : by_class[class_index(c)])
        n += f.packets.size();
    return n;
}

std::uint64_t NodeQueues::backlog_bytes(TrafficClass c) const
{
    std::uint64_t n = 0;
    for (const auto& f : by_class[class_index(c)])
        n += f.backlog_bytes;
    return n;
}

bool NodeQueues::empty() const
{
    for (const auto& cls : by_class)
        for (const auto& f : cls)
            if (!f.packets.empty())
                return false;
    return true;
}

FlowQueue& NodeQueues::add_connection(const Connection& c)
{
    auto& flows = by_class[class_index(c.traffic_class)];
    FlowQueue q;
    q.connection = c;
    auto pos = std::lower_bound(flows.begin(), flows.end(), c.id,
                                [](const FlowQueue& f, ConnectionId id) { return f.connection.id < id; });
    return *flows.insert(pos, std::move(q));
}

std::optional<double> FlowQueue::ungranted_deadline_s() const
{
    std::uint64_t covered = 0;
    for (const auto& p : packets) {
        covered += p.remaining_bytes;
        if (covered > granted_bytes)
            return p.deadline_s;
    }
    return std::nullopt;
}

std::vector<BandwidthRequest> emit_requests(const NodeQueues& queues, FrameIndex frame,
                                            std::uint32_t capacity_bytes, bool class1_only,
                                            double frame_ms)
{
    std::vector<BandwidthRequest> out;
    for (int c = 0; c < 3; ++c) {
        if (class1_only && c > 0)
            break;
        for (const auto& flow : queues.by_class[c]) {
            const auto pending = flow.ungranted_bytes();
            if (pending == 0)
                continue;
            BandwidthRequest r;
            r.connection = flow.connection.id;
            r.node = queues.node;
            r.traffic_class = flow.connection.traffic_class;
            r.observed_frame = frame;
            r.bytes = static_cast<std::uint32_t>(std::min<std::uint64_t>(pending, capacity_bytes));
            r.delay_constraint_ms = flow.connection.qos.delay_constraint_ms;
            if (frame_ms > 0.0) {
                if (const auto d = flow.ungranted_deadline_s()) {
                    const double left = *d * 1000.0 - static_cast<double>(frame) * frame_ms;
                    r.delay_constraint_ms = std::min(r.delay_constraint_ms, left);
                }
            }
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace apeps
