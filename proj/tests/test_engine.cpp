#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "apeps/engine.hpp"
#include "oracles.hpp"

using namespace apeps;

namespace {

SimConfig short_config(double seconds = 2.0)
{
    SimConfig cfg;
    cfg.sim_duration_s = seconds;
    return cfg;
}

std::string logs(const RunResult& r)
{
    std::ostringstream os;
    write_event_log(os, r.events);
    write_grant_log(os, r.grants);
    write_energy_log(os, r.energy);
    return os.str();
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("nodes are placed inside radio range")
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto cfg = short_config(0.01);
        cfg.num_mss = 10;
        cfg.seed = seed;
        Simulation sim(cfg);
        std::set<std::uint32_t> ids;
        for (const auto& n : sim.nodes()) {
            ids.insert(n.id.value());
            CHECK(n.distance_m <= cfg.radio_range_m + 1e-9);
            CHECK(n.position.x >= 0.0);
            CHECK(n.position.x <= cfg.area_side_m);
        }
        CHECK(ids.size() == 10);

        Simulation again(cfg);
        for (std::size_t i = 0; i < sim.nodes().size(); ++i) {
            CHECK(sim.nodes()[i].position.x == again.nodes()[i].position.x);
            CHECK(sim.nodes()[i].position.y == again.nodes()[i].position.y);
        }
    }
}

TEST_CASE("frame clock")
{
    auto cfg = short_config(50.0);
    CHECK(cfg.total_frames() == 10000);
    cfg.sim_duration_s = 0.005;
    Simulation sim(cfg);
    CHECK(sim.total_frames() == 1);
    sim.advance_frame();
    CHECK(sim.finished());
    CHECK_THROWS_AS(sim.advance_frame(), std::logic_error);

    cfg.num_mss = 0;
    CHECK_THROWS_AS(Simulation{cfg}, ConfigError);
}

TEST_CASE("idle nodes sleep through the run")
{
    auto cfg = short_config(50.0);
    cfg.flows.clear();
    const auto r = run_simulation(cfg, {.record_events = false, .record_grants = false});
    for (const auto& e : r.energy) {
        if (e.node == "bs")
            continue;
        CHECK(e.energy.frames_in(PowerState::Sleep) == 10000);
        CHECK(e.energy.total_mj() == doctest::Approx(500.0).epsilon(1e-12));
    }

    cfg.scheduler = SchedulerKind::PBS;
    const auto p = run_simulation(cfg, {.record_events = false, .record_grants = false});
    for (const auto& e : p.energy)
        if (e.node != "bs")
            CHECK(e.energy.total_mj() > 500.0);
}

TEST_CASE("a lone packet arrives within its delay constraint")
{
    auto cfg = short_config(1.0);
    cfg.num_mss = 1;
    cfg.error_rate = 0.0;
    cfg.flows = parse_flow_list("cbr:UGS:ul");
    cfg.cbr_random_phase = false;
    cfg.cbr_interval_ms = 5000.0;
    // Two frames' worth, so the periodic baseline's two listen frames suffice.
    cfg.cbr_packet_bytes = 1200;
    for (auto kind : {SchedulerKind::APEPS, SchedulerKind::PBS}) {
        cfg.scheduler = kind;
        const auto r = run_simulation(cfg);
        REQUIRE(r.flows.size() == 1);
        CHECK(r.flows[0].arrivals == 1);
        CHECK(r.flows[0].delivered == 1);
        for (const auto& e : r.events)
            if (e.kind == EventKind::Deliver)
                CHECK(*e.delay_ms <= cfg.dc_ugs_ms + 1e-9);
    }
}

TEST_CASE("a channel that always errs delivers nothing")
{
    auto cfg = short_config(2.0);
    cfg.error_rate = 1.0;
    for (auto kind : {SchedulerKind::APEPS, SchedulerKind::PBS}) {
        cfg.scheduler = kind;
        const auto r = run_simulation(cfg);
        std::uint64_t arrivals = 0;
        for (const auto& f : r.flows) {
            CHECK(f.delivered == 0);
            arrivals += f.arrivals;
        }
        CHECK(arrivals > 0);
    }
}

TEST_CASE("runs replay byte for byte")
{
    auto cfg = short_config(3.0);
    cfg.num_mss = 6;
    cfg.seed = 42;
    for (auto kind : {SchedulerKind::APEPS, SchedulerKind::PBS}) {
        cfg.scheduler = kind;
        CHECK(logs(run_simulation(cfg)) == logs(run_simulation(cfg)));
    }
    auto other = cfg;
    other.seed = 43;
    CHECK(logs(run_simulation(cfg)) != logs(run_simulation(other)));
}

TEST_CASE("engine invariants on random configurations")
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const auto cfg = oracle::random_config(rng, 400);
        CAPTURE(cfg.seed);
        Simulation sim(cfg, {.trace_frames = true});
        const double frame_s = cfg.frame_duration_s;
        while (!sim.finished()) {
            sim.advance_frame();
            const auto& t = sim.last_trace();
            for (const auto& tx : t.transmissions) {
                CHECK(tx.scheduled_mode == RadioMode::Listen);
                if (cfg.scheduler == SchedulerKind::APEPS && tx.group == GroupTag::Group2)
                    CHECK(tx.grant.traffic_class == TrafficClass::Class1);
            }
        }
        const auto r = sim.result();
        for (const auto& f : r.flows)
            CHECK(f.arrivals == f.delivered + f.dropped + f.queued_at_end);
        for (const auto& e : r.events) {
            if (e.kind != EventKind::Deliver)
                continue;
            const double start = static_cast<double>(e.frame) * frame_s;
            CHECK(e.time_s >= start - 1e-12);
            CHECK(e.time_s <= start + frame_s + 1e-12);
            CHECK(*e.delay_ms >= 0.0);
        }
        for (const auto& e : r.energy) {
            std::uint64_t frames = 0;
            for (auto s : {PowerState::Tx, PowerState::Rx, PowerState::Listen, PowerState::Sleep})
                frames += e.energy.frames_in(s);
            CHECK(frames == 400);
            CHECK(e.energy.total_mj() ==
                  doctest::Approx(e.energy.tx_mj() + e.energy.rx_mj() + e.energy.listen_mj() +
                                  e.energy.sleep_mj()));
        }
    }
}

TEST_CASE("log formats")
{
    auto cfg = short_config(0.5);
    const auto r = run_simulation(cfg);
    std::ostringstream ev, gr, en;
    write_event_log(ev, r.events);
    write_grant_log(gr, r.grants);
    write_energy_log(en, r.energy);
    CHECK(ev.str().rfind("time_s,frame,node,connection,class,event,size_bytes,delay_ms\n", 0) == 0);
    CHECK(gr.str().rfind("frame,node,connection,class,bytes,request_frame,outcome\n", 0) == 0);
    CHECK(en.str().find("\nbs,") != std::string::npos);
    CHECK(to_string(PowerState::Sleep) == "sleep");
    CHECK(to_string(EventKind::Deliver) == "deliver");
}

}  // TEST_SUITE
