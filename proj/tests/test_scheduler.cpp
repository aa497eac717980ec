#include <doctest.h>

#include <algorithm>
#include <memory>
#include <random>

#include "apeps/scheduler.hpp"
#include "oracles.hpp"

using namespace apeps;

namespace {

constexpr double kFrameMs = 5.0;

BandwidthRequest request(std::uint32_t conn, std::uint32_t node, TrafficClass c, FrameIndex k,
                         std::uint32_t bytes, double dc_ms)
{
    BandwidthRequest r;
    r.connection = ConnectionId(conn);
    r.node = NodeId(node);
    r.traffic_class = c;
    r.observed_frame = k;
    r.bytes = bytes;
    r.delay_constraint_ms = dc_ms;
    return r;
}

Grant grant(FrameIndex m, std::uint32_t node, std::uint32_t conn, TrafficClass c,
            std::uint32_t bytes, FrameIndex k = -1, double dc_ms = 1000.0)
{
    Grant g;
    g.frame = m;
    g.node = NodeId(node);
    g.connection = ConnectionId(conn);
    g.traffic_class = c;
    g.bytes = bytes;
    g.request_frame = k < 0 ? m : k;
    g.delay_constraint_ms = dc_ms;
    return g;
}

FrameIndex select(const std::vector<FrameIndex>& f, const std::vector<bool>& used)
{
    auto flags = std::make_unique<bool[]>(used.size());
    std::copy(used.begin(), used.end(), flags.get());
    return select_frame(f, std::span<const bool>(flags.get(), used.size()));
}

}  // namespace

TEST_SUITE("scheduler") {

TEST_CASE("delay bound")
{
    CHECK(meets_delay(10, 13, 20.0, kFrameMs));
    CHECK_FALSE(meets_delay(10, 14, 20.0, kFrameMs));
    CHECK(meets_delay(10, 10, 5.0, kFrameMs));
    CHECK_FALSE(meets_delay(10, 10, 4.9, kFrameMs));
    CHECK(last_frame_within_delay(10, 20.0, kFrameMs) == 13);
    CHECK(last_frame_within_delay(10, 4.0, kFrameMs) == 9);
    // Rounding in the product must not lose the boundary frame.
    CHECK(meets_delay(0, 59, 300.0, 300.0 / 60.0));
    CHECK(horizon_frames(500.0, kFrameMs) == 100);
    CHECK(horizon_frames(501.0, kFrameMs) == 101);
    CHECK(horizon_frames(1.0, kFrameMs) == 1);
}

TEST_CASE("request ordering")
{
    std::vector<BandwidthRequest> r = {
        request(7, 0, TrafficClass::Class3, 0, 100, 50),
        request(3, 1, TrafficClass::Class1, 2, 100, 40),
        request(2, 2, TrafficClass::Class1, 0, 100, 40),
        request(1, 3, TrafficClass::Class2, 0, 100, 10),
        request(9, 4, TrafficClass::Class1, 0, 100, 50),
        request(4, 5, TrafficClass::Class1, 0, 100, 40),
    };
    sort_requests(r, kFrameMs);
    std::vector<std::uint32_t> ids;
    for (const auto& x : r)
        ids.push_back(x.connection.value());
    // Class1 by deadline (40, 40, 50, 50) with ties on connection id.
    CHECK(ids == std::vector<std::uint32_t>{2, 4, 3, 9, 1, 7});
}

TEST_CASE("feasible frames")
{
    FrameLedger ledger(10, 100, 625);
    auto r = request(1, 0, TrafficClass::Class1, 10, 600, 20.0);
    CHECK(feasible_frames(r, ledger, kFrameMs) == std::vector<FrameIndex>{10, 11, 12, 13});

    ledger.place(grant(11, 1, 5, TrafficClass::Class2, 100));
    CHECK(feasible_frames(r, ledger, kFrameMs) == std::vector<FrameIndex>{10, 12, 13});

    r.bytes = 625;
    CHECK(feasible_frames(r, ledger, kFrameMs) == std::vector<FrameIndex>{10, 12, 13});
    CHECK(feasible_frames(r, ledger, kFrameMs, true).empty());

    FrameLedger full(10, 100, 625);
    for (FrameIndex m = 10; m < 14; ++m)
        full.place(grant(m, 1, 5, TrafficClass::Class2, m == 12 ? 25 : 625));
    r.bytes = 600;
    CHECK(feasible_frames(r, full, kFrameMs) == std::vector<FrameIndex>{12});
    r.delay_constraint_ms = 2.0;
    CHECK(feasible_frames(r, full, kFrameMs).empty());
}

TEST_CASE("feasible frames match the brute-force oracle")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        const auto first = static_cast<FrameIndex>(rng() % 50);
        const auto cap = static_cast<std::uint32_t>(100 + rng() % 1000);
        FrameLedger ledger(first, 1 + rng() % 40, cap);
        for (auto m = ledger.first_frame(); m < ledger.end_frame(); ++m) {
            const auto fill = static_cast<std::uint32_t>(rng() % (cap + 1));
            if (fill)
                ledger.place(grant(m, 0, 1, TrafficClass::Class3, fill));
        }
        const auto r = request(2, 1, TrafficClass::Class1, first + static_cast<FrameIndex>(rng() % 5),
                               1 + static_cast<std::uint32_t>(rng() % cap),
                               std::uniform_real_distribution<>(0.0, 200.0)(rng));
        const bool strict = rng() % 2;
        CHECK(feasible_frames(r, ledger, kFrameMs, strict) ==
              oracle::feasible_frames(r, ledger, kFrameMs, strict));
    }
}

TEST_CASE("frame selection")
{
    CHECK(select({10, 11, 12, 13}, {false, true, false, true}) == 11);
    CHECK(select({10, 11, 12, 13}, {false, false, false, false}) == 13);
    CHECK(select({12}, {false}) == 12);
    CHECK(select({4, 9}, {false, true}) == 9);
    CHECK_THROWS_AS(select({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(select({1, 2}, {true}), std::invalid_argument);
}

TEST_CASE("frame selection agrees with the oracle on every usage pattern")
{
    const std::vector<FrameIndex> f = {3, 4, 5, 7, 8, 11, 12, 13, 17, 20};
    for (unsigned mask = 0; mask < (1u << f.size()); ++mask) {
        std::vector<bool> used(f.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            used[i] = (mask >> i) & 1u;
        const auto got = select(f, used);
        CHECK(got == oracle::select_frame(f, used));
        CHECK(std::find(f.begin(), f.end(), got) != f.end());
    }
}

TEST_CASE("scheduling joins the node's own busy frame")
{
    FrameLedger ledger(10, 100, 625);
    ledger.place(grant(12, 3, 30, TrafficClass::Class2, 100));
    ledger.place(grant(11, 4, 40, TrafficClass::Class2, 100));

    auto d = schedule_request(request(31, 3, TrafficClass::Class1, 10, 200, 20.0), ledger, kFrameMs);
    CHECK(d.kind == DecisionKind::Placed);
    CHECK(d.frame == 12);

    // Another node's grants do not count: the latest feasible frame is used.
    d = schedule_request(request(51, 5, TrafficClass::Class1, 10, 200, 20.0), ledger, kFrameMs);
    CHECK(d.frame == 13);

    d = schedule_request(request(52, 5, TrafficClass::Class1, 10, 625, 20.0), ledger, kFrameMs);
    CHECK(d.frame == 10);

    d = schedule_request(request(53, 5, TrafficClass::Class1, 10, 626, 20.0), ledger, kFrameMs);
    CHECK(d.kind == DecisionKind::Deferred);
    CHECK(d.frame == -1);
    CHECK(ledger.violations(kFrameMs).empty());
}

TEST_CASE("scheduling equals feasible search followed by selection")
{
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 400; ++trial) {
        const auto cap = static_cast<std::uint32_t>(200 + rng() % 800);
        FrameLedger a(0, 30, cap);
        for (int g = 0; g < 25; ++g) {
            const auto m = static_cast<FrameIndex>(rng() % 30);
            const auto b = static_cast<std::uint32_t>(1 + rng() % 300);
            if (b <= a.residual(m))
                a.place(grant(m, static_cast<std::uint32_t>(rng() % 4), 1, TrafficClass::Class3, b));
        }
        FrameLedger b = a;
        const auto r = request(9, static_cast<std::uint32_t>(rng() % 4), TrafficClass::Class1,
                               static_cast<FrameIndex>(rng() % 5),
                               static_cast<std::uint32_t>(1 + rng() % cap),
                               std::uniform_real_distribution<>(5.0, 150.0)(rng));
        const auto d = schedule_request(r, a, kFrameMs);
        const auto f = oracle::feasible_frames(r, b, kFrameMs);
        if (f.empty()) {
            CHECK(d.kind == DecisionKind::Deferred);
            continue;
        }
        std::vector<bool> used;
        for (auto m : f)
            used.push_back(b.in_use_by(m, r.node));
        CHECK(d.kind == DecisionKind::Placed);
        CHECK(d.frame == oracle::select_frame(f, used));
        CHECK(a.total_allocated() == b.total_allocated() + r.bytes);
    }
}

TEST_CASE("priority order decides contention")
{
    FrameLedger ledger(0, 20, 625);
    std::vector<BandwidthRequest> r = {
        request(3, 2, TrafficClass::Class3, 0, 625, 10.0),
        request(1, 0, TrafficClass::Class1, 0, 625, 10.0),
        request(2, 1, TrafficClass::Class2, 0, 625, 10.0),
    };
    const auto d = apeps_schedule(r, ledger, kFrameMs);
    REQUIRE(d.size() == 3);
    CHECK(d[0].request.traffic_class == TrafficClass::Class1);
    CHECK(d[0].frame == 1);
    CHECK(d[1].frame == 0);
    CHECK(d[2].kind == DecisionKind::Deferred);
}

TEST_CASE("sleep schedules follow grants")
{
    FrameLedger ledger(5, 6, 625);
    ledger.place(grant(6, 1, 10, TrafficClass::Class1, 100));
    ledger.place(grant(9, 1, 11, TrafficClass::Class2, 100));
    ledger.place(grant(9, 2, 20, TrafficClass::Class3, 100));

    const auto s = build_sleep_schedule(NodeId(1), ledger);
    CHECK(s.first == 5);
    CHECK(s.listen_count() == 2);
    CHECK(s.at(6) == RadioMode::Listen);
    CHECK(s.at(9) == RadioMode::Listen);
    CHECK(s.at(5) == RadioMode::Sleep);
    CHECK(build_sleep_schedule(NodeId(0), ledger).listen_count() == 0);

    const auto all = build_sleep_schedules(3, ledger);
    REQUIRE(all.size() == 3);
    for (std::uint32_t n = 0; n < 3; ++n)
        CHECK(all[n].states == build_sleep_schedule(NodeId(n), ledger).states);
}

TEST_CASE("overflow steals from Group1 lower classes")
{
    FrameLedger ledger(0, 20, 625);
    ledger.place(grant(2, 1, 12, TrafficClass::Class2, 300));
    ledger.place(grant(3, 1, 13, TrafficClass::Class3, 400));
    ledger.place(grant(1, 2, 23, TrafficClass::Class3, 500));  // Group2 node
    const std::vector<GroupTag> groups = {GroupTag::Group2, GroupTag::Group1, GroupTag::Group2};

    OverflowDemand demand{NodeId(0), 5,
                          {request(1, 0, TrafficClass::Class1, 0, 250, 40.0),
                           request(2, 0, TrafficClass::Class1, 0, 250, 40.0)}};
    const auto before = ledger.total_allocated();
    auto res = handle_overflow(std::span(&demand, 1), ledger, groups, 4, kFrameMs);
    REQUIRE(res.revoked.size() == 1);
    CHECK(res.revoked[0].connection.value() == 13);
    REQUIRE(res.decisions.size() == 2);
    for (const auto& d : res.decisions) {
        CHECK(d.kind == DecisionKind::Stolen);
        CHECK(d.frame == 3);
        CHECK(d.donor->value() == 13);
    }
    std::uint32_t given = 0;
    for (const auto& d : res.decisions)
        given += d.bytes;
    CHECK(given <= res.revoked[0].bytes);
    CHECK(ledger.total_allocated() == before - res.revoked[0].bytes + given);
    CHECK(ledger.violations(kFrameMs).empty());

    // Next donor is the Class2 grant.
    res = handle_overflow(std::span(&demand, 1), ledger, groups, 4, kFrameMs);
    REQUIRE(res.revoked.size() == 1);
    CHECK(res.revoked[0].connection.value() == 12);

    // At or below the threshold nothing happens.
    demand.class1_queue_pkts = 4;
    CHECK(handle_overflow(std::span(&demand, 1), ledger, groups, 4, kFrameMs).revoked.empty());
}

TEST_CASE("overflow conserves bytes on random ledgers")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        FrameLedger ledger(0, 30, 625);
        std::vector<GroupTag> groups(6);
        for (auto& g : groups)
            g = rng() % 2 ? GroupTag::Group1 : GroupTag::Group2;
        for (int i = 0; i < 30; ++i) {
            const auto m = static_cast<FrameIndex>(rng() % 30);
            const auto b = static_cast<std::uint32_t>(1 + rng() % 400);
            if (b <= ledger.residual(m))
                ledger.place(grant(m, static_cast<std::uint32_t>(rng() % 6),
                                   static_cast<std::uint32_t>(100 + i),
                                   rng() % 2 ? TrafficClass::Class2 : TrafficClass::Class3, b));
        }
        std::vector<OverflowDemand> demands;
        for (std::uint32_t n = 0; n < 6; ++n) {
            if (groups[n] != GroupTag::Group2)
                continue;
            OverflowDemand d{NodeId(n), rng() % 10, {}};
            for (std::uint32_t c = 0; c < 1 + rng() % 3; ++c)
                d.class1_backlog.push_back(request(n * 10 + c, n, TrafficClass::Class1,
                                                   static_cast<FrameIndex>(rng() % 3),
                                                   static_cast<std::uint32_t>(1 + rng() % 625),
                                                   std::uniform_real_distribution<>(5, 150)(rng)));
            demands.push_back(d);
        }
        const auto before = ledger.total_allocated();
        const auto res = handle_overflow(demands, ledger, groups, 3, kFrameMs);
        std::uint64_t revoked = 0, given = 0;
        for (const auto& g : res.revoked) {
            revoked += g.bytes;
            CHECK(g.traffic_class != TrafficClass::Class1);
            CHECK(groups[g.node.value()] == GroupTag::Group1);
        }
        for (const auto& d : res.decisions)
            given += d.bytes;
        CHECK(given <= revoked);
        CHECK(ledger.total_allocated() == before - revoked + given);
        CHECK(ledger.violations(kFrameMs).empty());
    }
}

TEST_CASE("periodic baseline windows")
{
    const PbsConfig cfg{2, 4, false};
    std::vector<FrameIndex> listen;
    for (FrameIndex f = 0; f < 12; ++f)
        if (pbs_listening(cfg, NodeId(0), f))
            listen.push_back(f);
    CHECK(listen == std::vector<FrameIndex>{4, 5, 10, 11});
    CHECK(pbs_listening(cfg, NodeId(7), 4));

    const PbsConfig staggered{2, 4, true};
    CHECK(pbs_listening(staggered, NodeId(1), 0));
    CHECK(pbs_listening(staggered, NodeId(1), 1));
    CHECK_FALSE(pbs_listening(staggered, NodeId(1), 2));
    CHECK(pbs_listening(staggered, NodeId(3), 4));
    for (std::uint32_t n = 0; n < 12; ++n) {
        int count = 0;
        for (FrameIndex f = 100; f < 106; ++f)
            count += pbs_listening(staggered, NodeId(n), f);
        CHECK(count == 2);
    }

    const auto s = pbs_sleep_schedule(cfg, NodeId(0), 3, 6);
    CHECK(s.listen_count() == 2);
    CHECK(s.at(4) == RadioMode::Listen);
    CHECK(s.at(3) == RadioMode::Sleep);
}

TEST_CASE("periodic baseline placement")
{
    const PbsConfig cfg{2, 4, false};
    FrameLedger ledger(10, 100, 625);
    auto d = pbs_schedule({request(1, 0, TrafficClass::Class1, 10, 100, 20.0)}, ledger, cfg,
                          kFrameMs);
    CHECK(d[0].kind == DecisionKind::Placed);
    CHECK(d[0].frame == 10);

    d = pbs_schedule({request(2, 0, TrafficClass::Class1, 12, 100, 10.0)}, ledger, cfg, kFrameMs);
    CHECK(d[0].kind == DecisionKind::Deferred);

    d = pbs_schedule({request(3, 0, TrafficClass::Class1, 12, 100, 30.0)}, ledger, cfg, kFrameMs);
    CHECK(d[0].frame == 16);

    ledger.place(grant(11, 4, 40, TrafficClass::Class3, 600));
    d = pbs_schedule({request(4, 0, TrafficClass::Class1, 11, 100, 50.0)}, ledger, cfg, kFrameMs);
    CHECK(d[0].frame == 16);
}

TEST_CASE("ledger guards")
{
    FrameLedger ledger(0, 4, 625);
    CHECK_THROWS_AS(FrameLedger(0, 0, 625), std::invalid_argument);
    CHECK_THROWS_AS(ledger.place(grant(4, 0, 1, TrafficClass::Class1, 10)), std::out_of_range);
    CHECK_THROWS_AS(ledger.place(grant(0, 0, 1, TrafficClass::Class1, 0)), std::logic_error);
    ledger.place(grant(0, 0, 1, TrafficClass::Class1, 600));
    CHECK_THROWS_AS(ledger.place(grant(0, 0, 1, TrafficClass::Class1, 26)), std::logic_error);
    CHECK(ledger.residual(0) == 25);
    CHECK_THROWS_AS(ledger.revoke(0, 1), std::out_of_range);

    ledger.place(grant(2, 1, 2, TrafficClass::Class2, 50));
    CHECK(ledger.allocated_to(2, NodeId(1)) == 50);
    CHECK(ledger.in_use_by(2, NodeId(1)));
    CHECK_FALSE(ledger.in_use_by(2, NodeId(0)));

    const auto out = ledger.advance();
    REQUIRE(out.size() == 1);
    CHECK(out[0].bytes == 600);
    CHECK(ledger.first_frame() == 1);
    CHECK(ledger.end_frame() == 5);
    CHECK(ledger.residual(4) == 625);
    CHECK(ledger.total_allocated() == 50);

    ledger.place(grant(4, 0, 3, TrafficClass::Class1, 10, 1, 5.0));
    CHECK(ledger.violations(kFrameMs).size() == 1);
}

}  // TEST_SUITE
