#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "apeps/traffic.hpp"

using namespace apeps;

namespace {

QoSProfile cbr(std::uint32_t bytes, double interval_ms, double dc_ms = 40.0,
               ServiceType s = ServiceType::UGS)
{
    return {bytes, interval_ms, dc_ms, s};
}

Connection conn(std::uint32_t id, ServiceType s, double dc_ms = 100.0)
{
    return make_connection(ConnectionId(id), NodeId(0), Direction::Uplink, cbr(1500, 12, dc_ms, s),
                           SourceKind::CBR);
}

Packet packet(std::uint32_t conn_id, std::uint32_t bytes, double t = 0.0)
{
    return {0, ConnectionId(conn_id), bytes, t};
}

}  // namespace

TEST_SUITE("traffic") {

TEST_CASE("cbr inter-arrival from packet size and rate")
{
    CHECK(cbr_interval_ms(1500, 1e6) == doctest::Approx(12.0).epsilon(1e-12));
    static_assert(cbr_interval_ms(125, 1e6) == 1.0);
}

TEST_CASE("cbr arrival times")
{
    auto p = cbr_arrivals(cbr(1500, 12), 0.05);
    REQUIRE(p.size() == 5);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i].arrival_time_s == doctest::Approx(0.012 * static_cast<double>(i)));
        CHECK(p[i].size_bytes == 1500);
        CHECK(p[i].id == i);
    }

    p = cbr_arrivals(cbr(100, 5), 0.005);
    REQUIRE(p.size() == 2);
    CHECK(p[1].arrival_time_s == doctest::Approx(0.005));

    p = cbr_arrivals(cbr(100, 10), 0.05, ConnectionId(3), 4.0);
    REQUIRE(p.size() == 5);
    CHECK(p.front().arrival_time_s == doctest::Approx(0.004));
    CHECK(p.front().connection.value() == 3);
    CHECK(cbr_arrivals(cbr(100, 10), 0.001, {}, 5.0).empty());
}

TEST_CASE("cbr does not drift")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const double interval = std::uniform_real_distribution<>(0.5, 50.0)(rng);
        const auto bytes = static_cast<std::uint32_t>(1 + rng() % 1500);
        const auto p = cbr_arrivals(cbr(bytes, interval), 60.0);
        const double window_ms = interval * static_cast<double>(10 + rng() % 200);
        const double start_ms = std::uniform_real_distribution<>(0.0, 30000.0)(rng);
        double sum = 0;
        for (const auto& x : p) {
            const double t = x.arrival_time_s * 1000.0;
            if (t >= start_ms && t < start_ms + window_ms)
                sum += x.size_bytes;
        }
        CHECK(std::abs(sum - bytes * window_ms / interval) <= bytes);
    }
}

TEST_CASE("vbr trace parsing")
{
    auto t = load_vbr_trace("0 512\n33 1024\n66 256");
    REQUIRE(t.entries.size() == 3);
    CHECK(t.entries[1].size_bytes == 1024);
    CHECK(t.cycle_ms == doctest::Approx(99.0));
    CHECK(t.mean_bytes() == doctest::Approx((512 + 1024 + 256) / 3.0));

    t = load_vbr_trace("# header\n\n10 100  # first\n");
    CHECK(t.entries.size() == 1);
    CHECK(t.cycle_ms == 10.0);
}

TEST_CASE("vbr trace errors carry the line")
{
    auto line_of = [](const char* text) -> std::size_t {
        try {
            load_vbr_trace(text);
        } catch (const TraceParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("0 512\n0 512") == 2);
    CHECK_THROWS_AS(load_vbr_trace(""), TraceParseError);
    CHECK_THROWS_AS(load_vbr_trace("# only comments\n"), TraceParseError);
    CHECK(line_of("0 100\n5 0\n") == 2);
    CHECK(line_of("0 100\n5 -4\n") == 2);
    CHECK(line_of("0 100\n5 x\n") == 2);
    CHECK(line_of("0 100 7\n") == 1);
    CHECK(line_of("-1 100\n") == 1);
    CHECK(line_of("0 100\n") == 1);  // one entry at offset 0 has no period
    CHECK_THROWS_AS(load_vbr_trace_file("/nonexistent/trace.txt"), std::exception);
}

TEST_CASE("vbr replay is cyclic and deterministic")
{
    const auto t = load_vbr_trace("0 512\n33 1024\n66 256");
    const auto a = vbr_arrivals(t, 0.5, ConnectionId(1), 2.0);
    const auto b = vbr_arrivals(t, 0.5, ConnectionId(1), 2.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].arrival_time_s == b[i].arrival_time_s);
        CHECK(a[i].size_bytes == b[i].size_bytes);
        CHECK(a[i].size_bytes == t.entries[i % 3].size_bytes);
        CHECK(a[i].arrival_time_s ==
              doctest::Approx((2.0 + 33.0 * static_cast<double>(i)) / 1000.0));
    }
    CHECK(a.size() == 16);  // 2 + 33 i <= 500
}

TEST_CASE("synthetic vbr source")
{
    auto r1 = make_rng(5, 2);
    auto r2 = make_rng(5, 2);
    const auto a = synthetic_vbr_trace(400, 0.6, 33, 20000, r1);
    const auto b = synthetic_vbr_trace(400, 0.6, 33, 20000, r2);
    REQUIRE(a.entries.size() == 20000);
    CHECK(a.cycle_ms == doctest::Approx(20000 * 33.0));
    for (std::size_t i = 0; i < 50; ++i)
        CHECK(a.entries[i].size_bytes == b.entries[i].size_bytes);
    CHECK(a.mean_bytes() == doctest::Approx(400).epsilon(0.03));
    for (const auto& e : a.entries)
        CHECK(e.size_bytes >= 1);

    auto r3 = make_rng(5, 2);
    const auto flat = synthetic_vbr_trace(200, 0.0, 33, 10, r3);
    for (const auto& e : flat.entries)
        CHECK(e.size_bytes == 200);
}

TEST_CASE("queues track backlog and deadlines")
{
    NodeQueues q;
    q.add_connection(conn(5, ServiceType::BE, 500));
    q.add_connection(conn(2, ServiceType::UGS, 40));
    q.add_connection(conn(1, ServiceType::rtPS, 100));
    REQUIRE(q.by_class[0].size() == 2);
    CHECK(q.by_class[0][0].connection.id.value() == 1);
    CHECK(q.by_class[0][1].connection.id.value() == 2);
    CHECK(q.empty());

    q.by_class[0][1].push(packet(2, 1500, 0.010));
    q.by_class[0][1].push(packet(2, 1500, 0.022));
    q.by_class[2][0].push(packet(5, 300, 0.0));
    CHECK(q.packet_count(TrafficClass::Class1) == 2);
    CHECK(q.backlog_bytes(TrafficClass::Class1) == 3000);
    CHECK(q.backlog_bytes(TrafficClass::Class3) == 300);
    CHECK(q.packet_count(TrafficClass::Class2) == 0);
    CHECK_FALSE(q.empty());
    CHECK(q.by_class[0][1].packets.front().deadline_s == doctest::Approx(0.050));

    auto& f = q.by_class[0][1];
    CHECK(*f.ungranted_deadline_s() == doctest::Approx(0.050));
    f.granted_bytes = 1500;
    CHECK(*f.ungranted_deadline_s() == doctest::Approx(0.062));
    f.granted_bytes = 3000;
    CHECK_FALSE(f.ungranted_deadline_s().has_value());
    CHECK(f.ungranted_bytes() == 0);
}

TEST_CASE("requests from backlog")
{
    NodeQueues q;
    q.node = NodeId(4);
    CHECK(emit_requests(q, 0, 625).empty());

    q.add_connection(conn(9, ServiceType::BE, 500));
    q.add_connection(conn(3, ServiceType::UGS, 40));
    q.add_connection(conn(6, ServiceType::nrtPS, 250));
    CHECK(emit_requests(q, 0, 625).empty());

    q.by_class[0][0].push(packet(3, 1500));
    q.by_class[0][0].push(packet(3, 1500));
    auto r = emit_requests(q, 7, 10000);
    REQUIRE(r.size() == 1);
    CHECK(r[0].bytes == 3000);
    CHECK(r[0].observed_frame == 7);
    CHECK(r[0].node.value() == 4);
    CHECK(r[0].delay_constraint_ms == 40.0);
    CHECK(r[0].traffic_class == TrafficClass::Class1);

    for (int i = 0; i < 8; ++i)
        q.by_class[0][0].push(packet(3, 1500));
    r = emit_requests(q, 7, 625);
    REQUIRE(r.size() == 1);
    CHECK(r[0].bytes == 625);

    q.by_class[2][0].push(packet(9, 80));
    q.by_class[1][0].push(packet(6, 90));
    r = emit_requests(q, 7, 625);
    REQUIRE(r.size() == 3);
    CHECK(r[0].traffic_class == TrafficClass::Class1);
    CHECK(r[1].traffic_class == TrafficClass::Class2);
    CHECK(r[2].traffic_class == TrafficClass::Class3);
    CHECK(r[2].bytes == 80);

    r = emit_requests(q, 7, 625, true);
    REQUIRE(r.size() == 1);
    CHECK(r[0].connection.value() == 3);

    // Already granted bytes are not requested again.
    q.by_class[1][0].granted_bytes = 90;
    r = emit_requests(q, 7, 625);
    CHECK(r.size() == 2);
}

TEST_CASE("requests shrink their delay budget to the oldest packet")
{
    NodeQueues q;
    q.add_connection(conn(1, ServiceType::UGS, 40));
    auto& f = q.by_class[0][0];
    f.push(packet(1, 1500, 0.0));  // deadline 40 ms
    auto r = emit_requests(q, 0, 625, false, 5.0);
    CHECK(r[0].delay_constraint_ms == doctest::Approx(40.0));
    r = emit_requests(q, 3, 625, false, 5.0);
    CHECK(r[0].delay_constraint_ms == doctest::Approx(25.0));
    r = emit_requests(q, 3, 625);
    CHECK(r[0].delay_constraint_ms == 40.0);
    r = emit_requests(q, 9, 625, false, 5.0);
    CHECK(r[0].delay_constraint_ms < 0.0);
}

TEST_CASE("request invariants over random backlogs")
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        NodeQueues q;
        const auto flows = 1 + rng() % 6;
        for (std::uint32_t c = 0; c < flows; ++c) {
            const ServiceType s = static_cast<ServiceType>(rng() % 5);
            q.add_connection(conn(static_cast<std::uint32_t>(rng() % 1000) * 8 + c, s));
        }
        for (auto& cls : q.by_class)
            for (auto& f : cls) {
                const auto n = rng() % 4;
                for (std::uint64_t i = 0; i < n; ++i)
                    f.push(packet(f.connection.id.value(), 1 + rng() % 2000));
                f.granted_bytes = f.backlog_bytes ? rng() % (f.backlog_bytes + 1) : 0;
            }
        const auto cap = static_cast<std::uint32_t>(1 + rng() % 1500);
        const auto reqs = emit_requests(q, 0, cap);
        for (std::size_t i = 0; i < reqs.size(); ++i) {
            CHECK(reqs[i].bytes > 0);
            CHECK(reqs[i].bytes <= cap);
            if (i > 0) {
                const auto& a = reqs[i - 1];
                const auto& b = reqs[i];
                CHECK((outranks(a.traffic_class, b.traffic_class) ||
                       (a.traffic_class == b.traffic_class && a.connection < b.connection)));
            }
        }
        std::size_t pending = 0;
        for (const auto& cls : q.by_class)
            for (const auto& f : cls)
                pending += f.ungranted_bytes() > 0;
        CHECK(reqs.size() == pending);
    }
}

}  // TEST_SUITE
