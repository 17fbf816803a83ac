#include "ricsim/ran/network.hpp"

#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

using namespace ricsim::ran;
using ricsim::cmf::ControlRecord;
using ricsim::cmf::ControlTarget;
using ricsim::cmf::ValidationError;

namespace {

ScenarioConfig flat_config()
{
    ScenarioConfig cfg;
    cfg.radio.shadowing_sigma_db = 0.0;
    return cfg;
}

BaseStation cell(std::string id, Vec2 pos, double hys = 0.0, Millis ttt = 0, double cio = 0.0)
{
    BaseStation b;
    b.cell_id = std::move(id);
    b.position = pos;
    b.hysteresis_db = hys;
    b.ttt = ttt;
    b.cio_db = cio;
    return b;
}

UserEquipment ue(std::string id, Vec2 pos, Vec2 vel = {}, std::size_t serving = 0)
{
    UserEquipment u;
    u.ue_id = std::move(id);
    u.position = pos;
    u.velocity = vel;
    u.serving = serving;
    return u;
}

// Two cells 1000 m apart on the x axis, one UE, no shadowing.
Network line(BaseStation a, BaseStation b, UserEquipment u, ScenarioConfig cfg = flat_config())
{
    return Network(cfg, {std::move(a), std::move(b)}, {std::move(u)}, Hexagon(5000.0));
}

// Distance from cell A at which cell B is `margin_db` stronger.
double point_with_margin(double margin_db, double d = 1000.0, double slope = 37.6)
{
    const double r = std::pow(10.0, margin_db / slope);
    return d * r / (1.0 + r);
}

std::vector<std::string> lines_of_type(const std::string& log, const std::string& type)
{
    std::vector<std::string> out;
    std::istringstream in(log);
    for (std::string l; std::getline(in, l);)
        if (nlohmann::json::parse(l).at("type") == type) out.push_back(l);
    return out;
}

ScenarioConfig small_scenario(std::uint64_t seed = 1)
{
    ScenarioConfig cfg;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("path loss and RSRP")
{
    const auto net = line(cell("a", {0, 0}), cell("b", {1000, 0}), ue("u", {1000, 0}));
    CHECK(net.rsrp(0, 0) == doctest::Approx(43.0 - 128.1).epsilon(1e-12));
    CHECK(net.pathloss_db(5.0) == net.pathloss_db(10.0));
    CHECK(net.pathloss_db(0.0) == net.pathloss_db(10.0));
    for (double d = 10.0; d < 5000.0; d *= 1.3) CHECK(net.pathloss_db(d * 1.01) > net.pathloss_db(d));
}

TEST_CASE("shadowing is frozen per 10 m square and has the configured spread")
{
    auto net = Network::build_scenario(small_scenario());
    CHECK(net.shadowing_db(3, 7, {101, 202}) == net.shadowing_db(3, 7, {109.9, 209.9}));
    CHECK(net.shadowing_db(3, 7, {101, 202}) != net.shadowing_db(3, 7, {111, 202}));
    CHECK(net.shadowing_db(3, 7, {101, 202}) != net.shadowing_db(4, 7, {101, 202}));
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double s = net.shadowing_db(static_cast<std::size_t>(i % 19), static_cast<std::size_t>(i % 380),
                                          {10.0 * i, -7.0 * i});
        sum += s;
        sq += s * s;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.15);
    CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(6.0).epsilon(0.03));
}

TEST_CASE("SINR near a cell centre is positive")
{
    auto cfg = flat_config();
    auto net = Network::build_scenario(cfg);
    for (std::size_t b = 0; b < net.cells().size(); ++b) {
        auto& u = net.mutable_ues()[0];
        u.position = net.cells()[b].position + Vec2{30, 40};
        u.serving = b;
        net.refresh_radio();
        CHECK(net.sinr_db(0) > 0.0);
        CHECK(net.strongest_cell(0) == b);
    }
}

TEST_CASE("build_scenario")
{
    const auto cfg = small_scenario(11);
    const auto a = Network::build_scenario(cfg);
    const auto b = Network::build_scenario(cfg);
    CHECK(a.digest() == b.digest());
    CHECK(a.cells().size() == 19);
    CHECK(a.ues().size() == 380);
    for (std::size_t i = 0; i < a.ues().size(); ++i) {
        CHECK(a.area().contains(a.ues()[i].position));
        CHECK(a.ues()[i].serving == a.strongest_cell(i));
        CHECK(a.ues()[i].position == b.ues()[i].position);
    }
    CHECK(Network::build_scenario(small_scenario(12)).digest() != a.digest());
}

namespace {

// Smallest and largest k with P(X <= k) >= 0.005 and P(X >= k) >= 0.005 for X ~ Bin(n, p).
std::pair<int, int> binomial_99(int n, double p)
{
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k)
        pmf[static_cast<std::size_t>(k)] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                                    std::lgamma(n - k + 1.0) + k * std::log(p) +
                                                    (n - k) * std::log1p(-p));
    int lo = 0, hi = n;
    for (double c = 0; (c += pmf[static_cast<std::size_t>(lo)]) < 0.005;) ++lo;
    for (double c = 0; (c += pmf[static_cast<std::size_t>(hi)]) < 0.005;) --hi;
    return {lo, hi};
}

}  // namespace

TEST_CASE("profile mix stays within exact binomial 99% bounds")
{
    const std::array<double, 3> p{0.6, 0.3, 0.1};
    std::array<std::pair<int, int>, 3> bounds;
    for (std::size_t i = 0; i < 3; ++i) bounds[i] = binomial_99(380, p[i]);
    CHECK(bounds[0].first < 228);
    CHECK(bounds[0].second > 228);

    int outside = 0;
    const int seeds = 40;
    for (int s = 1; s <= seeds; ++s) {
        const auto net = Network::build_scenario(small_scenario(static_cast<std::uint64_t>(s)));
        std::array<int, 3> hist{};
        for (const auto& u : net.ues()) ++hist[static_cast<std::size_t>(u.profile)];
        bool in = true;
        for (std::size_t i = 0; i < 3; ++i) in &= hist[i] >= bounds[i].first && hist[i] <= bounds[i].second;
        outside += in ? 0 : 1;
    }
    // three 1%-tailed marginals: about 3% of seeds may fall outside
    CHECK(outside <= 4);
}

TEST_CASE("equal cells: handover exactly at the RSRP crossover")
{
    // 1 m per tick from x = 400.5; RSRP(b) > RSRP(a) first at x = 500.5, tick 100
    auto net = line(cell("a", {0, 0}), cell("b", {1000, 0}), ue("u", {400.5, 0}, {10, 0}));
    Millis ho_at = -1;
    for (int i = 0; i < 200 && ho_at < 0; ++i) {
        net.step();
        if (net.counters().handovers == 1) ho_at = net.now();
        if (ho_at < 0) CHECK(net.cached_rsrp(1, 0) <= net.cached_rsrp(0, 0));
    }
    CHECK(ho_at == 10'000);
    CHECK(net.ues()[0].position.x == doctest::Approx(500.5));
    CHECK(net.ues()[0].serving == 1);
}

TEST_CASE("serving CIO shifts the handover boundary")
{
    // with cio(a) = +3 the crossover moves to where b is 3 dB stronger
    const double boundary = point_with_margin(3.0);
    auto net = line(cell("a", {0, 0}, 0, 0, 3.0), cell("b", {1000, 0}), ue("u", {400.5, 0}, {10, 0}));
    double ho_x = 0;
    for (int i = 0; i < 300 && ho_x == 0; ++i) {
        net.step();
        if (net.counters().handovers == 1) ho_x = net.ues()[0].position.x;
    }
    CHECK(ho_x > boundary);
    CHECK(ho_x - 1.0 <= boundary);
    CHECK(ho_x > 500.5);
}

TEST_CASE("hysteresis is a strict margin")
{
    for (double margin : {2.9, 3.1}) {
        auto net = line(cell("a", {0, 0}, 3.0, 480), cell("b", {1000, 0}), ue("u", {point_with_margin(margin), 0}));
        for (int i = 0; i < 20; ++i) net.step();
        CHECK(net.counters().handovers == (margin > 3.0 ? 1 : 0));
    }
}

TEST_CASE("time to trigger must be sustained")
{
    auto net = line(cell("a", {0, 0}, 3.0, 480), cell("b", {1000, 0}), ue("u", {point_with_margin(3.1), 0}));
    Millis ho_at = -1;
    for (int i = 0; i < 20 && ho_at < 0; ++i) {
        net.step();
        if (net.counters().handovers) ho_at = net.now();
    }
    // the condition first holds at t = 100 and has lasted 480 ms at t = 600
    CHECK(ho_at == 600);
}

TEST_CASE("ping-pong detection")
{
    for (Millis dwell : {2000, 4000}) {
        auto net = line(cell("a", {0, 0}, 3.0, 0), cell("b", {1000, 0}, 3.0, 0),
                        ue("u", {point_with_margin(3.1), 0}));
        net.step();
        REQUIRE(net.counters().handovers == 1);
        for (Millis t = 0; t < dwell; t += net.config().tick) net.step();
        net.mutable_ues()[0].position = {1000 - point_with_margin(3.1), 0};
        net.step();
        CHECK(net.counters().handovers == 2);
        CHECK(net.ues()[0].serving == 0);
        CHECK(net.counters().pingpongs == (dwell + 100 <= 3000 ? 1 : 0));
    }
}

TEST_CASE("RLF after one second below Q_out, with re-establishment")
{
    // 20 dB weaker than the neighbour; a huge TTT keeps the UE from leaving
    auto net = line(cell("a", {0, 0}, 10.0, 5120), cell("b", {1000, 0}), ue("u", {point_with_margin(20.0), 0}));
    auto& u = net.mutable_ues()[0];
    u.session = Session{1.0, 0, 1'000'000, 0.0};
    net.step();
    REQUIRE(net.sinr_db(0) == doctest::Approx(-20.0).epsilon(0.01));
    Millis rlf_at = -1;
    for (int i = 0; i < 20 && rlf_at < 0; ++i) {
        if (net.counters().rlfs) rlf_at = net.now();
        else net.step();
    }
    CHECK(rlf_at == 1000);
    CHECK(net.counters().sessions_dropped == 1);
    CHECK_FALSE(net.ues()[0].session);
    CHECK_FALSE(net.ues()[0].attached());
    CHECK_FALSE(net.serving_cell_of("u"));
    net.step();
    CHECK_FALSE(net.ues()[0].attached());
    net.step();  // t = 1200
    CHECK(net.ues()[0].attached());
    CHECK(net.ues()[0].serving == 1);
}

TEST_CASE("a half-second dip below Q_out is no RLF")
{
    auto net = line(cell("a", {0, 0}, 10.0, 5120), cell("b", {1000, 0}), ue("u", {100, 0}));
    for (int cycle = 0; cycle < 5; ++cycle) {
        net.mutable_ues()[0].position = {point_with_margin(20.0), 0};
        for (int i = 0; i < 5; ++i) net.step();
        net.mutable_ues()[0].position = {100, 0};
        net.step();
    }
    CHECK(net.counters().rlfs == 0);
}

TEST_CASE("admission")
{
    // single cell without interference: spectral efficiency is capped at 6
    auto cfg = flat_config();
    std::vector<UserEquipment> ues{ue("a", {100, 0}), ue("b", {100, 10})};
    ues[0].session = Session{20.0, 0, 1'000'000, 0.0};
    ues[1].profile = Profile::High;
    auto make = [&](double capacity) {
        auto c = cell("c", {0, 0});
        c.capacity_units = capacity;
        return Network(cfg, {c}, ues, Hexagon(5000.0));
    };
    const double units20 = 20.0 / (6.0 * 0.18);

    auto light = make(100.0);
    CHECK(light.units_for(0, 20.0) == doctest::Approx(units20));
    CHECK(light.cell_load(0) == doctest::Approx(units20 / 100.0));
    light.mutable_ues()[1].profile = Profile::Low;
    CHECK(light.admit_session(1) == Admission::Admitted);

    auto full = make(units20 / 0.99);
    CHECK(full.cell_load(0) == doctest::Approx(0.99));
    CHECK(full.admit_session(1) == Admission::Blocked);
    CHECK(full.counters().call_blockages == 1);
    CHECK_FALSE(full.ues()[1].session);
}

TEST_CASE("call blockages equal a replay of the admission log")
{
    auto net = Network::build_scenario(small_scenario(3));
    std::ostringstream log;
    net.set_event_log(&log);
    for (int i = 0; i < 1200; ++i) net.step();
    std::int64_t blocked = 0, admitted = 0;
    for (const auto& l : lines_of_type(log.str(), "admission")) {
        const auto j = nlohmann::json::parse(l);
        const bool fits = j["load_before"].get<double>() + j["units"].get<double>() / j["capacity"].get<double>() <= 1.0;
        CHECK(fits == (j["decision"] == "admitted"));
        (fits ? admitted : blocked) += 1;
    }
    CHECK(blocked > 0);
    CHECK(blocked == net.counters().call_blockages);
    CHECK(admitted == net.counters().sessions_started);
}

TEST_CASE("session conservation")
{
    auto net = Network::build_scenario(small_scenario(4));
    for (int i = 0; i < 3000; ++i) net.step();
    const auto& c = net.counters();
    const auto active = std::count_if(net.ues().begin(), net.ues().end(), [](const auto& u) { return u.session.has_value(); });
    CHECK(c.sessions_started == c.sessions_completed + c.sessions_dropped + active);
    CHECK(c.sessions_dropped <= c.rlfs);
    CHECK(c.pingpongs <= c.handovers);
}

TEST_CASE("UEs never leave the simulation area")
{
    auto cfg = small_scenario(5);
    cfg.mobility.vehicle_fraction = 1.0;
    auto net = Network::build_scenario(cfg);
    for (int i = 0; i < 2000; ++i) {
        net.step();
        for (const auto& u : net.ues()) REQUIRE(net.area().contains(u.position, 1e-6));
    }
}

TEST_CASE("KPI windows")
{
    SUBCASE("idle network")
    {
        auto net = line(cell("a", {0, 0}), cell("b", {1000, 0}), ue("u", {100, 0}));
        for (int i = 0; i < 50; ++i) net.step();
        const auto k = net.collect_kpis();
        CHECK(k.network.end_ts == 5000);
        CHECK(k.network.handovers == 0);
        CHECK(k.network.rlfs == 0);
        CHECK(k.network.call_blockages == 0);
        CHECK(k.network.pingpong_handovers == 0);
        CHECK(k.network.mean_bs_load == 0.0);
        CHECK(k.network.mean_user_satisfaction == 1.0);
        REQUIRE(k.cells.size() == 2);
        CHECK(k.cells[1].kpi.mean_user_satisfaction == 1.0);
    }
    SUBCASE("satisfaction recomputed from the throughput trace")
    {
        auto net = Network::build_scenario(small_scenario(6));
        for (int i = 0; i < 600; ++i) net.step();
        net.collect_kpis();
        std::ostringstream log;
        net.set_event_log(&log);
        net.set_throughput_trace(true);
        for (int i = 0; i < 50; ++i) net.step();
        const auto k = net.collect_kpis();

        std::map<std::int64_t, std::pair<double, int>> per_tick;
        for (int i = 1; i <= 50; ++i) per_tick[600 * 100 + i * 100] = {0.0, 0};
        for (const auto& l : lines_of_type(log.str(), "throughput")) {
            const auto j = nlohmann::json::parse(l);
            auto& [sum, n] = per_tick.at(j["ts"].get<std::int64_t>());
            sum += std::min(1.0, j["achieved_mbps"].get<double>() / j["target_mbps"].get<double>());
            ++n;
        }
        double mean = 0.0;
        for (const auto& [_, v] : per_tick) mean += (v.second ? v.first / v.second : 1.0) / 50.0;
        CHECK(k.network.mean_user_satisfaction == doctest::Approx(mean).epsilon(1e-9));
        CHECK(k.network.mean_user_satisfaction <= 1.0);
        CHECK(k.network.mean_bs_load >= 0.0);
        CHECK(k.network.mean_bs_load <= 1.0);
        std::int64_t ho = 0;
        for (const auto& c : k.cells) ho += c.kpi.handovers;
        CHECK(ho == k.network.handovers);
    }
}

TEST_CASE("apply_control clamps and validates")
{
    auto net = line(cell("a", {0, 0}), cell("b", {1000, 0}), ue("u", {100, 0}));
    net.apply_control({1, 0, "mlb", ControlTarget::cell("a"), {{"cio", 9.0}}, 5000});
    CHECK(net.cells()[0].cio_db == 6.0);
    net.apply_control({2, 0, "mlb", ControlTarget::cell("a"), {{"cio", -9.0}}, 5000});
    CHECK(net.cells()[0].cio_db == -6.0);
    net.apply_control({3, 0, "mro", ControlTarget::cell("b"), {{"hysteresis", 12.0}, {"ttt", 500}}, 5000});
    CHECK(net.cells()[1].hysteresis_db == 10.0);
    CHECK(net.cells()[1].ttt == 512);
    net.apply_control({4, 0, "mro", ControlTarget::cell("b"), {{"hysteresis", -1.0}, {"ttt", 9000}}, 5000});
    CHECK(net.cells()[1].hysteresis_db == 0.0);
    CHECK(net.cells()[1].ttt == 5120);
    CHECK_THROWS_AS(net.apply_control({5, 0, "x", ControlTarget::cell("a"), {{"tilt", 1.0}}, 5000}), ValidationError);
    CHECK_THROWS_AS(net.apply_control({6, 0, "x", ControlTarget::cell("zz"), {{"cio", 1.0}}, 5000}), ValidationError);
    CHECK_THROWS_AS(net.apply_control({7, 0, "x", ControlTarget::ue("u"), {{"cio", 1.0}}, 5000}), ValidationError);
    // a rejected record changes nothing, even when some keys are valid
    CHECK_THROWS_AS(net.apply_control({8, 0, "x", ControlTarget::cell("a"), {{"cio", 1.0}, {"tilt", 1.0}}, 5000}),
                    ValidationError);
    CHECK(net.cells()[0].cio_db == -6.0);
}

TEST_CASE("a frozen world only advances its clock")
{
    auto net = line(cell("a", {0, 0}), cell("b", {1000, 0}), ue("u", {100, 0}));
    const auto before = net.ues()[0];
    for (int i = 0; i < 30; ++i) net.step();
    CHECK(net.now() == 3000);
    CHECK(net.ues()[0].position == before.position);
    CHECK(net.ues()[0].serving == before.serving);
    CHECK(net.counters().handovers == 0);
}

TEST_CASE("raising hysteresis never adds handovers on a scripted path")
{
    // A3 with zero TTT between two cells is a Schmitt trigger on the RSRP
    // difference: every switch at margin H forces a switch at any h < H.
    std::mt19937_64 rng(17);
    std::normal_distribution<double> jitter(0.0, 1.5);
    std::vector<double> path{500.0};
    while (path.size() < 6000) {
        double x = path.back() + jitter(rng);
        if (x < 420.0) x = 840.0 - x;
        if (x > 580.0) x = 1160.0 - x;
        path.push_back(x);
    }
    std::int64_t previous = std::numeric_limits<std::int64_t>::max();
    for (double hys = 0.0; hys <= 5.0; hys += 0.5) {
        auto net = line(cell("a", {0, 0}, hys, 0), cell("b", {1000, 0}, hys, 0), ue("u", {path[0], 0}));
        for (double x : path) {
            net.mutable_ues()[0].position = {x, 0};
            net.step();
        }
        REQUIRE(net.counters().rlfs == 0);
        CHECK(net.counters().handovers <= previous);
        CHECK(net.counters().pingpongs <= net.counters().handovers);
        previous = net.counters().handovers;
    }
    CHECK(previous > 0);
}

TEST_CASE("handover count is invariant under cell relabeling")
{
    auto cfg = small_scenario(8);
    cfg.radio.shadowing_sigma_db = 0.0;
    const auto base = Network::build_scenario(cfg);

    std::vector<std::size_t> perm(base.cells().size());
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());  // new index i holds old cell perm[i]
    std::vector<std::size_t> inverse(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = i;

    std::vector<BaseStation> relabeled;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        auto c = base.cells()[perm[i]];
        c.cell_id = "cell_" + std::to_string(100 + i);
        relabeled.push_back(c);
    }
    auto ues = base.ues();
    auto ues2 = ues;
    for (auto& u : ues2) u.serving = inverse[u.serving];

    Network a(cfg, base.cells(), ues);
    Network b(cfg, relabeled, ues2);
    for (int i = 0; i < 1500; ++i) {
        a.step();
        b.step();
    }
    CHECK(a.counters().handovers > 0);
    CHECK(a.counters().handovers == b.counters().handovers);
    CHECK(a.counters().pingpongs == b.counters().pingpongs);
    CHECK(a.counters().rlfs == b.counters().rlfs);
    CHECK(a.counters().call_blockages == b.counters().call_blockages);
}
