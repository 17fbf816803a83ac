#include "ricsim/ran/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace ricsim::ran {

using cmf::ValidationError;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string_view to_string(Profile p)
{
    switch (p) {
    case Profile::Low: return "low";
    case Profile::Medium: return "medium";
    case Profile::High: return "high";
    }
    return "low";
}

namespace {

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit_interval(std::uint64_t h)
{
    // (0, 1]
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

double mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

struct Hasher {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    template <typename T>
    void add(const T& v)
    {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    }
};

}  // namespace

Network::Network(ScenarioConfig cfg, std::vector<BaseStation> cells, std::vector<UserEquipment> ues,
                 std::optional<Hexagon> area)
    : cfg_(std::move(cfg)),
      cells_(std::move(cells)),
      ues_(std::move(ues)),
      area_(area.value_or(coverage_outline(rings_for_sites(cfg_.n_bs), cfg_.isd_m)))
{
    if (cells_.empty()) throw ValidationError("network needs at least one cell");
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        if (cells_[i].cell_id.empty()) throw ValidationError("cell without id");
        for (std::size_t j = 0; j < i; ++j)
            if (cells_[j].cell_id == cells_[i].cell_id)
                throw ValidationError("duplicate cell id " + cells_[i].cell_id);
        cell_hash_.push_back(fnv1a(cells_[i].cell_id));
    }
    const std::size_t nb = cells_.size();
    for (std::size_t u = 0; u < ues_.size(); ++u) {
        auto& ue = ues_[u];
        if (ue.serving >= nb) throw ValidationError("UE " + ue.ue_id + " served by unknown cell");
        ue.a3_timer.assign(nb, std::nullopt);
        ue_hash_.push_back(fnv1a(ue.ue_id));
        std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                          static_cast<std::uint32_t>(u), 0x5eedu};
        rng_.emplace_back(seq);
    }
    rsrp_.assign(ues_.size() * nb, 0.0);
    shadow_.assign(ues_.size() * nb, 0.0);
    shadow_square_.assign(ues_.size(), {std::numeric_limits<std::int64_t>::min(), 0});
    interference_mw_.assign(ues_.size(), 0.0);
    load_.assign(nb, 0.0);
    window_.assign(nb, {});
    refresh_radio();
    update_loads();
}

Network Network::build_scenario(const ScenarioConfig& cfg)
{
    validate(cfg);
    std::vector<BaseStation> cells;
    const auto sites = hex_grid_sites(cfg.n_bs, cfg.isd_m);
    for (std::size_t i = 0; i < sites.size(); ++i) {
        BaseStation bs;
        bs.cell_id = "bs" + std::to_string(i);
        bs.position = sites[i];
        bs.tx_power_dbm = cfg.radio.tx_power_dbm;
        bs.capacity_units = cfg.radio.capacity_units;
        bs.hysteresis_db = clamp_hysteresis(cfg.handover, cfg.handover.initial_hysteresis_db);
        bs.ttt = quantize_ttt(cfg.handover, static_cast<double>(cfg.handover.initial_ttt));
        bs.cio_db = clamp_cio(cfg.handover, cfg.handover.initial_cio_db);
        cells.push_back(std::move(bs));
    }
    std::vector<UserEquipment> ues(static_cast<std::size_t>(cfg.n_ue));
    for (std::size_t i = 0; i < ues.size(); ++i) ues[i].ue_id = "ue" + std::to_string(i);

    Network net(cfg, std::move(cells), std::move(ues));
    const auto& p = cfg.profile_probabilities;
    for (std::size_t i = 0; i < net.ues_.size(); ++i) {
        auto& ue = net.ues_[i];
        auto& rng = net.rng_[i];
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        ue.position = net.random_point_for(i);
        ue.mobility = uni(rng) < cfg.mobility.vehicle_fraction ? MobilityClass::Vehicle : MobilityClass::Pedestrian;
        const double r = uni(rng);
        ue.profile = r < p[0] ? Profile::Low : (r < p[0] + p[1] ? Profile::Medium : Profile::High);
        ue.speed_mps = ue.mobility == MobilityClass::Vehicle ? cfg.mobility.vehicle_speed_mps
                                                             : cfg.mobility.pedestrian_speed_mps;
        net.pick_waypoint(i);
        ue.next_arrival = net.draw_exponential(i, cfg.traffic.mean_interarrival);
    }
    net.refresh_radio();
    for (std::size_t i = 0; i < net.ues_.size(); ++i) net.ues_[i].serving = net.strongest_cell(i);
    net.update_loads();
    return net;
}

// ---------------------------------------------------------------------------
// Propagation

double Network::pathloss_db(double distance_m) const
{
    const auto& r = cfg_.radio;
    const double d = std::max(distance_m, r.min_distance_m);
    return r.pathloss_intercept_db + r.pathloss_slope_db * std::log10(d / 1000.0);
}

double Network::shadowing_db(std::size_t bs, std::size_t ue, Vec2 at) const
{
    const double sigma = cfg_.radio.shadowing_sigma_db;
    if (sigma == 0.0) return 0.0;
    const auto gx = static_cast<std::int64_t>(std::floor(at.x / cfg_.radio.shadowing_grid_m));
    const auto gy = static_cast<std::int64_t>(std::floor(at.y / cfg_.radio.shadowing_grid_m));
    std::uint64_t h = splitmix(cfg_.seed);
    h = splitmix(h ^ cell_hash_[bs]);
    h = splitmix(h ^ ue_hash_[ue]);
    h = splitmix(h ^ static_cast<std::uint64_t>(gx));
    h = splitmix(h ^ static_cast<std::uint64_t>(gy));
    const double u1 = unit_interval(h);
    const double u2 = unit_interval(splitmix(h));
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Network::rsrp(std::size_t bs, std::size_t ue) const
{
    const auto& c = cells_[bs];
    const auto& u = ues_[ue];
    return c.tx_power_dbm - pathloss_db(distance(c.position, u.position)) - shadowing_db(bs, ue, u.position);
}

void Network::refresh_ue(std::size_t ue)
{
    const std::size_t nb = cells_.size();
    const auto& u = ues_[ue];
    const std::pair<std::int64_t, std::int64_t> square{
        static_cast<std::int64_t>(std::floor(u.position.x / cfg_.radio.shadowing_grid_m)),
        static_cast<std::int64_t>(std::floor(u.position.y / cfg_.radio.shadowing_grid_m))};
    double* shadow = &shadow_[ue * nb];
    if (square != shadow_square_[ue]) {
        for (std::size_t b = 0; b < nb; ++b) shadow[b] = shadowing_db(b, ue, u.position);
        shadow_square_[ue] = square;
    }
    double total = 0.0;
    double* out = &rsrp_[ue * nb];
    for (std::size_t b = 0; b < nb; ++b) {
        const auto& c = cells_[b];
        out[b] = c.tx_power_dbm - pathloss_db(distance(c.position, u.position)) - shadow[b];
        total += mw(out[b]);
    }
    interference_mw_[ue] = total;
}

void Network::refresh_radio()
{
    for (std::size_t u = 0; u < ues_.size(); ++u) refresh_ue(u);
}

double Network::sinr_db(std::size_t ue) const
{
    const auto& u = ues_[ue];
    const double s = cached_rsrp(u.serving, ue);
    const double others = std::max(interference_mw_[ue] - mw(s), 0.0);
    return s - 10.0 * std::log10(others + mw(cfg_.radio.noise_dbm));
}

std::size_t Network::strongest_cell(std::size_t ue) const
{
    const std::size_t nb = cells_.size();
    const double* row = &rsrp_[ue * nb];
    return static_cast<std::size_t>(std::max_element(row, row + nb) - row);
}

double Network::units_for(std::size_t ue, double demand_mbps) const
{
    const auto& r = cfg_.radio;
    const double sinr = std::pow(10.0, sinr_db(ue) / 10.0);
    const double se = std::min(r.max_spectral_efficiency, std::log2(1.0 + sinr));
    return demand_mbps / (se * r.unit_throughput_mbps);
}

// ---------------------------------------------------------------------------
// Mobility

Vec2 Network::random_point_for(std::size_t ue)
{
    std::uniform_real_distribution<double> coord(-area_.circumradius(), area_.circumradius());
    for (;;) {
        Vec2 p{coord(rng_[ue]), coord(rng_[ue])};
        if (area_.contains(p)) return p;
    }
}

void Network::pick_waypoint(std::size_t ue) { ues_[ue].waypoint = random_point_for(ue); }

Millis Network::draw_exponential(std::size_t ue, Millis mean)
{
    std::exponential_distribution<double> exp(1.0 / static_cast<double>(mean));
    return now_ + std::max<Millis>(1, static_cast<Millis>(std::llround(exp(rng_[ue]))));
}

void Network::move(std::size_t ue, Millis dt)
{
    auto& u = ues_[ue];
    if (u.pause_until > now_) return;
    const double seconds = static_cast<double>(dt) / 1000.0;
    if (u.waypoint) {
        const Vec2 d = *u.waypoint - u.position;
        const double dist = d.norm();
        const double step_m = u.speed_mps * seconds;
        if (dist <= step_m) {
            u.position = *u.waypoint;
            u.velocity = {};
            std::uniform_int_distribution<Millis> pause(0, cfg_.mobility.max_pause);
            u.pause_until = now_ + pause(rng_[ue]);
            pick_waypoint(ue);
        } else if (dist > 0.0) {
            u.velocity = d * (u.speed_mps / dist);
            u.position = u.position + d * (step_m / dist);
        }
    } else {
        u.position = u.position + u.velocity * seconds;
    }
    if (!area_.contains(u.position)) area_.reflect(u.position, u.velocity);
}

// ---------------------------------------------------------------------------
// Link procedures

std::optional<RlfEvent> Network::detect_rlf(std::size_t ue, Millis dt)
{
    auto& u = ues_[ue];
    if (!u.attached()) return std::nullopt;
    if (sinr_db(ue) >= cfg_.handover.q_out_db) {
        u.below_qout = 0;
        return std::nullopt;
    }
    u.below_qout += dt;
    if (u.below_qout < cfg_.handover.rlf_duration) return std::nullopt;

    RlfEvent ev{now_, ue, u.serving, u.session.has_value()};
    ++counters_.rlfs;
    ++window_[u.serving].rlfs;
    ++network_window_.rlfs;
    if (u.session) {
        load_[u.serving] = std::max(0.0, load_[u.serving] - u.session->units / cells_[u.serving].capacity_units);
        u.session.reset();
        ++counters_.sessions_dropped;
        u.next_arrival = draw_exponential(ue, cfg_.traffic.mean_interarrival);
        log({{"type", "session_end"}, {"ts", now_}, {"ue", u.ue_id}, {"reason", "dropped"}});
    }
    u.below_qout = 0;
    u.reestablish_at = now_ + cfg_.handover.reestablish_delay;
    std::fill(u.a3_timer.begin(), u.a3_timer.end(), std::nullopt);
    log({{"type", "rlf"}, {"ts", now_}, {"ue", u.ue_id}, {"cell", cells_[ev.cell].cell_id},
         {"dropped_session", ev.dropped_session}});
    return ev;
}

std::optional<HandoverEvent> Network::evaluate_handover(std::size_t ue, Millis dt)
{
    auto& u = ues_[ue];
    if (!u.attached()) return std::nullopt;
    const std::size_t nb = cells_.size();
    const std::size_t s = u.serving;
    const auto& serving = cells_[s];
    const double threshold = cached_rsrp(s, ue) + serving.cio_db + serving.hysteresis_db;

    std::optional<std::size_t> target;
    double target_metric = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < nb; ++n) {
        if (n == s) continue;
        const double metric = cached_rsrp(n, ue) + cells_[n].cio_db;
        auto& timer = u.a3_timer[n];
        if (metric > threshold) {
            timer = timer ? *timer + dt : 0;
            if (*timer >= serving.ttt && metric > target_metric) {
                target = n;
                target_metric = metric;
            }
        } else {
            timer.reset();
        }
    }
    if (!target) return std::nullopt;

    HandoverEvent ev{now_, ue, s, *target, false};
    ev.pingpong = u.last_ho && u.last_ho->from_cell == *target &&
                  now_ - u.last_ho->ts <= cfg_.handover.pingpong_window;
    ++counters_.handovers;
    ++window_[s].handovers;
    ++network_window_.handovers;
    if (ev.pingpong) {
        ++counters_.pingpongs;
        ++window_[s].pingpongs;
        ++network_window_.pingpongs;
    }
    if (u.session) {
        load_[s] = std::max(0.0, load_[s] - u.session->units / cells_[s].capacity_units);
        load_[*target] += u.session->units / cells_[*target].capacity_units;
    }
    u.last_ho = LastHandover{now_, s};
    u.serving = *target;
    u.below_qout = 0;
    std::fill(u.a3_timer.begin(), u.a3_timer.end(), std::nullopt);
    log({{"type", "handover"}, {"ts", now_}, {"ue", u.ue_id}, {"from", serving.cell_id},
         {"to", cells_[*target].cell_id}, {"pingpong", ev.pingpong}});
    return ev;
}

Admission Network::admit_session(std::size_t ue)
{
    auto& u = ues_[ue];
    const std::size_t bs = u.serving;
    const double demand = cfg_.traffic.bitrate_mbps[static_cast<std::size_t>(u.profile)];
    const double units = units_for(ue, demand);
    const double before = load_[bs];
    const double after = before + units / cells_[bs].capacity_units;
    const bool admitted = after <= 1.0;
    log({{"type", "admission"}, {"ts", now_}, {"ue", u.ue_id}, {"cell", cells_[bs].cell_id},
         {"decision", admitted ? "admitted" : "blocked"}, {"load_before", before}, {"units", units},
         {"capacity", cells_[bs].capacity_units}});
    if (!admitted) {
        ++counters_.call_blockages;
        ++window_[bs].blockages;
        ++network_window_.blockages;
        u.next_arrival = draw_exponential(ue, cfg_.traffic.mean_interarrival);
        return Admission::Blocked;
    }
    Session s;
    s.demand_mbps = demand;
    s.start_ts = now_;
    s.end_ts = draw_exponential(ue, cfg_.traffic.mean_holding);
    s.units = units;
    u.session = s;
    u.next_arrival = kNever;
    load_[bs] = after;
    ++counters_.sessions_started;
    return Admission::Admitted;
}

void Network::sessions(std::size_t ue)
{
    auto& u = ues_[ue];
    if (u.session && u.session->end_ts <= now_) {
        load_[u.serving] = std::max(0.0, load_[u.serving] - u.session->units / cells_[u.serving].capacity_units);
        u.session.reset();
        ++counters_.sessions_completed;
        u.next_arrival = draw_exponential(ue, cfg_.traffic.mean_interarrival);
        log({{"type", "session_end"}, {"ts", now_}, {"ue", u.ue_id}, {"reason", "completed"}});
    }
    if (!u.session && u.attached() && u.next_arrival <= now_) admit_session(ue);
}

void Network::update_loads()
{
    std::fill(load_.begin(), load_.end(), 0.0);
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        auto& u = ues_[i];
        if (!u.session || !u.attached()) continue;
        u.session->units = units_for(i, u.session->demand_mbps);
        load_[u.serving] += u.session->units / cells_[u.serving].capacity_units;
    }
}

void Network::accumulate()
{
    const std::size_t nb = cells_.size();
    std::vector<double> sat_sum(nb, 0.0);
    std::vector<int> active(nb, 0);
    double net_sat = 0.0;
    int net_active = 0;
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        const auto& u = ues_[i];
        if (!u.session) continue;
        const double load = load_[u.serving];
        const double sat = load > 1.0 ? 1.0 / load : 1.0;
        sat_sum[u.serving] += sat;
        ++active[u.serving];
        net_sat += sat;
        ++net_active;
        if (trace_throughput_)
            log({{"type", "throughput"}, {"ts", now_}, {"ue", u.ue_id}, {"cell", cells_[u.serving].cell_id},
                 {"target_mbps", u.session->demand_mbps}, {"achieved_mbps", u.session->demand_mbps * sat}});
    }
    double load_sum = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        const double capped = std::min(1.0, load_[b]);
        load_sum += capped;
        window_[b].load_sum += capped;
        window_[b].satisfaction_sum += active[b] ? sat_sum[b] / active[b] : 1.0;
        ++window_[b].ticks;
    }
    network_window_.load_sum += load_sum / static_cast<double>(nb);
    network_window_.satisfaction_sum += net_active ? net_sat / net_active : 1.0;
    ++network_window_.ticks;
}

void Network::step()
{
    const Millis dt = cfg_.tick;
    now_ += dt;
    for (std::size_t i = 0; i < ues_.size(); ++i) move(i, dt);
    refresh_radio();
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        auto& u = ues_[i];
        if (u.reestablish_at) {
            if (now_ < *u.reestablish_at) continue;
            u.reestablish_at.reset();
            u.serving = strongest_cell(i);
            u.below_qout = 0;
            std::fill(u.a3_timer.begin(), u.a3_timer.end(), std::nullopt);
            continue;
        }
        if (detect_rlf(i, dt)) continue;
        evaluate_handover(i, dt);
    }
    update_loads();
    for (std::size_t i = 0; i < ues_.size(); ++i) sessions(i);
    accumulate();
}

// ---------------------------------------------------------------------------

NetworkKpis Network::collect_kpis()
{
    auto finish = [this](const WindowAccumulator& w, double current_load) {
        KpiSample k;
        k.end_ts = now_;
        k.mean_bs_load = w.ticks ? w.load_sum / static_cast<double>(w.ticks) : std::min(1.0, current_load);
        k.mean_user_satisfaction = w.ticks ? w.satisfaction_sum / static_cast<double>(w.ticks) : 1.0;
        k.call_blockages = w.blockages;
        k.rlfs = w.rlfs;
        k.handovers = w.handovers;
        k.pingpong_handovers = w.pingpongs;
        return k;
    };
    NetworkKpis out;
    double mean_load = 0.0;
    for (std::size_t b = 0; b < cells_.size(); ++b) {
        out.cells.push_back({cells_[b].cell_id, finish(window_[b], load_[b])});
        mean_load += std::min(1.0, load_[b]);
        window_[b] = {};
    }
    out.network = finish(network_window_, mean_load / static_cast<double>(cells_.size()));
    network_window_ = {};
    const auto& k = out.network;
    log({{"type", "kpi"}, {"ts", now_}, {"mean_bs_load", k.mean_bs_load},
         {"mean_user_satisfaction", k.mean_user_satisfaction}, {"call_blockages", k.call_blockages},
         {"rlfs", k.rlfs}, {"handovers", k.handovers}, {"pingpong_handovers", k.pingpong_handovers}});
    return out;
}

void Network::apply_control(const cmf::ControlRecord& rec)
{
    if (rec.target.scope != cmf::TargetScope::Cell)
        throw ValidationError("only cell-scope control is supported, got " + cmf::to_string(rec.target));
    auto idx = cell_index(rec.target.id);
    if (!idx) throw ValidationError("unknown cell '" + rec.target.id + "'");
    for (const auto& [name, _] : rec.changes)
        if (name != "hysteresis" && name != "ttt" && name != "cio")
            throw ValidationError("unknown RAN parameter '" + name + "'");

    auto& c = cells_[*idx];
    const auto& h = cfg_.handover;
    for (const auto& [name, value] : rec.changes) {
        if (name == "hysteresis") c.hysteresis_db = clamp_hysteresis(h, value);
        else if (name == "ttt") c.ttt = quantize_ttt(h, value);
        else c.cio_db = clamp_cio(h, value);
    }
    log({{"type", "control"}, {"ts", now_}, {"msg_id", rec.msg_id}, {"xapp_id", rec.xapp_id},
         {"cell", c.cell_id}, {"hysteresis", c.hysteresis_db}, {"ttt", c.ttt}, {"cio", c.cio_db}});
}

std::optional<std::size_t> Network::cell_index(std::string_view cell_id) const
{
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (cells_[i].cell_id == cell_id) return i;
    return std::nullopt;
}

std::optional<std::string> Network::serving_cell_of(std::string_view ue_id) const
{
    for (const auto& u : ues_)
        if (u.ue_id == ue_id) return u.attached() ? std::optional(cells_[u.serving].cell_id) : std::nullopt;
    return std::nullopt;
}

std::uint64_t Network::digest() const
{
    Hasher h;
    h.add(now_);
    for (const auto& c : cells_) {
        h.add(c.hysteresis_db);
        h.add(c.ttt);
        h.add(c.cio_db);
    }
    for (const auto& u : ues_) {
        h.add(u.position.x);
        h.add(u.position.y);
        h.add(u.serving);
        h.add(u.attached());
        h.add(u.session.has_value());
        h.add(u.below_qout);
        h.add(u.next_arrival);
    }
    for (double l : load_) h.add(l);
    return h.h;
}

void Network::log(const json& line)
{
    if (log_) *log_ << line.dump() << '\n';
}

}  // namespace ricsim::ran
