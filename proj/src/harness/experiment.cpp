#include "ricsim/harness/experiment.hpp"

#include "ricsim/cmf/json_codec.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace ricsim::harness {

using cmf::ValidationError;
using nlohmann::json;

std::string_view to_string(CmfMode mode)
{
    switch (mode) {
    case CmfMode::Disabled: return "disabled";
    case CmfMode::PrioritizeMro: return "prioritize-mro";
    case CmfMode::PrioritizeMlb: return "prioritize-mlb";
    }
    return "disabled";
}

CmfMode parse_mode(std::string_view text)
{
    for (CmfMode m : kAllModes)
        if (to_string(m) == text) return m;
    throw ValidationError("unknown CMF mode '" + std::string(text) + "'");
}

cmf::ResolutionPolicy policy_for(CmfMode mode)
{
    switch (mode) {
    case CmfMode::Disabled: return cmf::ResolutionPolicy::disabled();
    case CmfMode::PrioritizeMro: return cmf::ResolutionPolicy::prioritize(xapps::kMroId);
    case CmfMode::PrioritizeMlb: return cmf::ResolutionPolicy::prioritize(xapps::kMlbId);
    }
    return cmf::ResolutionPolicy::disabled();
}

std::vector<cmf::ParameterGroupDef> ExperimentConfig::default_parameter_groups()
{
    return {{"ho_boundary", {"hysteresis", "ttt", "cio"}, cmf::TargetScope::Cell}};
}

// ---------------------------------------------------------------------------
// Configuration

void merge_from_json(ExperimentConfig& cfg, const json& j, const std::filesystem::path& base_dir)
{
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [k, _] : j.items())
        if (k != "scenario" && k != "xapps" && k != "cmf" && k != "parameter_groups" &&
            k != "parameter_groups_file")
            throw ValidationError("unknown config key '" + k + "'");

    if (auto it = j.find("scenario"); it != j.end()) ran::merge_from_json(cfg.scenario, *it);
    if (auto it = j.find("xapps"); it != j.end()) xapps::merge_from_json(cfg.xapps, *it);
    if (auto it = j.find("cmf"); it != j.end()) {
        const json& c = *it;
        const std::set<std::string> known{"implicit_enabled", "implicit_lookback_ms", "implicit_threshold",
                                          "quarantine_ms", "processing_delay_ms", "degradation_horizon_ms",
                                          "pmon_window", "pmon_k", "pmon_stdev_floor"};
        for (const auto& [k, _] : c.items())
            if (!known.contains(k)) throw ValidationError("unknown config key 'cmf." + k + "'");
        try {
            cfg.cmf.implicit_enabled = c.value("implicit_enabled", cfg.cmf.implicit_enabled);
            cfg.cmf.implicit.lookback = c.value("implicit_lookback_ms", cfg.cmf.implicit.lookback);
            cfg.cmf.implicit.threshold = c.value("implicit_threshold", cfg.cmf.implicit.threshold);
            cfg.cmf.quarantine = c.value("quarantine_ms", cfg.cmf.quarantine);
            cfg.processing_delay = c.value("processing_delay_ms", cfg.processing_delay);
            cfg.cmf.degradation_horizon = c.value("degradation_horizon_ms", cfg.cmf.degradation_horizon);
            cfg.cmf.pmon.window = c.value("pmon_window", cfg.cmf.pmon.window);
            cfg.cmf.pmon.k = c.value("pmon_k", cfg.cmf.pmon.k);
            cfg.cmf.pmon.stdev_floor = c.value("pmon_stdev_floor", cfg.cmf.pmon.stdev_floor);
        } catch (const json::exception& e) {
            throw ValidationError(std::string("cmf config: ") + e.what());
        }
        if (cfg.processing_delay < 0) throw ValidationError("processing_delay_ms must be >= 0");
        if (cfg.cmf.implicit.threshold < 1) throw ValidationError("implicit_threshold must be >= 1");
    }
    if (j.contains("parameter_groups") && j.contains("parameter_groups_file"))
        throw ValidationError("give either parameter_groups or parameter_groups_file, not both");
    if (auto it = j.find("parameter_groups"); it != j.end())
        cfg.groups = cmf::parameter_groups_from_json(*it);
    if (auto it = j.find("parameter_groups_file"); it != j.end()) {
        std::filesystem::path p = it->get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        cfg.groups = cmf::load_parameter_groups(p);
    }
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    ExperimentConfig cfg;
    merge_from_json(cfg, j, path.parent_path());
    return cfg;
}

json to_json(const ExperimentConfig& cfg)
{
    json groups = json::array();
    for (const auto& g : cfg.groups) groups.push_back(cmf::to_json(g));
    return {
        {"scenario", ran::to_json(cfg.scenario)},
        {"xapps", xapps::to_json(cfg.xapps)},
        {"cmf",
         {{"implicit_enabled", cfg.cmf.implicit_enabled},
          {"implicit_lookback_ms", cfg.cmf.implicit.lookback},
          {"implicit_threshold", cfg.cmf.implicit.threshold},
          {"quarantine_ms", cfg.cmf.quarantine},
          {"processing_delay_ms", cfg.processing_delay},
          {"degradation_horizon_ms", cfg.cmf.degradation_horizon},
          {"pmon_window", cfg.cmf.pmon.window},
          {"pmon_k", cfg.cmf.pmon.k},
          {"pmon_stdev_floor", cfg.cmf.pmon.stdev_floor}}},
        {"parameter_groups", std::move(groups)},
    };
}

// ---------------------------------------------------------------------------

double KpiTotals::value(std::string_view kpi) const
{
    if (kpi == "mean_bs_load") return mean_bs_load;
    if (kpi == "mean_user_satisfaction") return mean_user_satisfaction;
    if (kpi == "call_blockages") return static_cast<double>(call_blockages);
    if (kpi == "rlfs") return static_cast<double>(rlfs);
    if (kpi == "handovers") return static_cast<double>(handovers);
    if (kpi == "pingpong_handovers") return static_cast<double>(pingpong_handovers);
    throw ValidationError("unknown KPI '" + std::string(kpi) + "'");
}

std::int64_t RunResult::total_allowed() const
{
    std::int64_t n = 0;
    for (const auto& [_, c] : allowed) n += c;
    return n;
}

std::int64_t RunResult::total_blocked() const
{
    std::int64_t n = 0;
    for (const auto& [_, c] : blocked) n += c;
    return n;
}

namespace {

std::vector<xapps::CellView> cell_views(const ran::Network& net)
{
    std::vector<xapps::CellView> out;
    out.reserve(net.cells().size());
    for (const auto& c : net.cells()) out.push_back({c.cell_id, c.hysteresis_db, c.ttt, c.cio_db});
    return out;
}

void feed_pmon(cmf::ConflictMitigator& cm, const ran::NetworkKpis& kpis, const cmf::CellResolver& resolver)
{
    for (const auto& cell : kpis.cells) {
        const auto& k = cell.kpi;
        const std::array<double, 6> values{k.mean_bs_load,
                                           k.mean_user_satisfaction,
                                           static_cast<double>(k.call_blockages),
                                           static_cast<double>(k.rlfs),
                                           static_cast<double>(k.handovers),
                                           static_cast<double>(k.pingpong_handovers)};
        for (std::size_t i = 0; i < values.size(); ++i)
            cm.observe_kpi({k.end_ts, kKpiNames[i], cell.cell_id, values[i]}, resolver);
    }
}

}  // namespace

RunResult run(const ExperimentConfig& cfg_in, CmfMode mode, std::uint64_t seed, const RunOptions& opts)
{
    ExperimentConfig cfg = cfg_in;
    cfg.scenario.seed = seed;
    xapps::validate(cfg.xapps);
    auto net = ran::Network::build_scenario(cfg.scenario);
    net.set_event_log(opts.event_log);

    std::optional<cmf::ConflictMitigator> cm;
    if (opts.path == ControlPath::Pipeline) {
        cm.emplace(cfg.cmf, cfg.groups, policy_for(mode));
        cm->set_verdict_log(opts.verdict_log);
    }
    const cmf::CellResolver resolver = [&net](const cmf::ControlTarget& t) -> std::optional<std::string> {
        switch (t.scope) {
        case cmf::TargetScope::Cell: return t.id;
        case cmf::TargetScope::Ue: return net.serving_cell_of(t.id);
        case cmf::TargetScope::Bearer: return net.serving_cell_of(t.id.substr(0, t.id.find(':')));
        }
        return std::nullopt;
    };

    const Millis period = cfg.xapps.decision_period;
    xapps::MroXapp mro(cfg.xapps.mro, cfg.scenario.handover, period);
    xapps::MlbXapp mlb(cfg.xapps.mlb, cfg.scenario.handover, period);

    RunResult result;
    result.mode = mode;
    result.seed = seed;

    std::deque<AppliedChange> pending;  // ordered by apply time
    cmf::MsgId next_id = 1;
    std::size_t replay_pos = 0;
    std::vector<double> last_loads;
    Millis kpi_windows = 0;
    double load_sum = 0.0, satisfaction_sum = 0.0;

    auto submit = [&](cmf::ControlRecord rec) {
        if (opts.replay == nullptr) rec.msg_id = next_id++;
        if (cm && cm->process_control_message(rec).decision == cmf::Decision::Block) return;
        pending.push_back({rec.ts + cfg.processing_delay, std::move(rec)});
    };

    const Millis steps = cfg.scenario.duration / cfg.scenario.tick;
    for (Millis i = 0; i < steps; ++i) {
        while (!pending.empty() && pending.front().ts <= net.now()) {
            net.apply_control(pending.front().record);
            if (opts.record_trajectory) result.applied.push_back({net.now(), pending.front().record});
            pending.pop_front();
        }
        net.step();
        const Millis t = net.now();

        if (t % cfg.scenario.kpi_window == 0) {
            const auto kpis = net.collect_kpis();
            if (t > cfg.scenario.warmup) {
                const auto& k = kpis.network;
                ++kpi_windows;
                load_sum += k.mean_bs_load;
                satisfaction_sum += k.mean_user_satisfaction;
                result.kpis.call_blockages += k.call_blockages;
                result.kpis.rlfs += k.rlfs;
                result.kpis.handovers += k.handovers;
                result.kpis.pingpong_handovers += k.pingpong_handovers;
            }
            if (cm) feed_pmon(*cm, kpis, resolver);
            std::vector<xapps::CellHandoverStats> stats;
            last_loads.clear();
            for (const auto& c : kpis.cells) {
                stats.push_back({c.cell_id, c.kpi.handovers, c.kpi.pingpong_handovers, c.kpi.rlfs});
                last_loads.push_back(c.kpi.mean_bs_load);
            }
            mro.observe(stats);
        }

        if (opts.replay) {
            const auto& msgs = *opts.replay;
            while (replay_pos < msgs.size() && msgs[replay_pos].ts <= t) submit(msgs[replay_pos++]);
        } else {
            if (t % period == 0)
                for (auto& rec : mro.decide(cell_views(net), t)) submit(std::move(rec));
            if (t % period == cfg.xapps.mlb_phase && !last_loads.empty())
                for (auto& rec : mlb.decide(cell_views(net), last_loads, t)) submit(std::move(rec));
        }
        if (opts.record_trajectory) result.trajectory.push_back(net.digest());
    }

    if (kpi_windows > 0) {
        result.kpis.mean_bs_load = load_sum / static_cast<double>(kpi_windows);
        result.kpis.mean_user_satisfaction = satisfaction_sum / static_cast<double>(kpi_windows);
    }
    result.simulated = net.now();
    result.counters = net.counters();
    if (cm) {
        const auto& s = cm->stats();
        result.allowed = s.allowed;
        result.blocked = s.blocked;
        result.direct_conflicts = s.direct;
        result.indirect_conflicts = s.indirect;
        result.implicit_conflicts = s.implicit;
        result.degradations = s.degradations;
    }
    return result;
}

std::vector<RunResult> sweep(const ExperimentConfig& cfg, const std::vector<CmfMode>& modes,
                             const std::vector<std::uint64_t>& seeds, unsigned jobs,
                             const std::filesystem::path& log_dir)
{
    if (seeds.empty()) throw ValidationError("sweep needs at least one seed");
    std::vector<std::pair<CmfMode, std::uint64_t>> work;
    for (CmfMode m : modes)
        for (auto s : seeds) work.emplace_back(m, s);

    std::vector<RunResult> results(work.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        for (std::size_t i = next++; i < work.size(); i = next++) {
            try {
                const auto [mode, seed] = work[i];
                RunOptions opts;
                std::ofstream events, verdicts;
                if (!log_dir.empty()) {
                    const std::string stem = std::string(to_string(mode)) + "_" + std::to_string(seed);
                    events.open(log_dir / ("events_" + stem + ".jsonl"));
                    verdicts.open(log_dir / ("verdicts_" + stem + ".jsonl"));
                    opts.event_log = &events;
                    opts.verdict_log = &verdicts;
                }
                results[i] = run(cfg, mode, seed, opts);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    return results;
}

// ---------------------------------------------------------------------------
// Aggregation

double sample_sd(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

const KpiComparison& ComparisonTable::at(CmfMode mode, std::string_view kpi) const
{
    return rows.at(mode).at(std::string(kpi));
}

ComparisonTable compare(const std::vector<RunResult>& results)
{
    std::map<std::uint64_t, const RunResult*> baseline;
    for (const auto& r : results)
        if (r.mode == CmfMode::Disabled) baseline[r.seed] = &r;

    ComparisonTable table;
    for (CmfMode mode : kAllModes) {
        std::vector<const RunResult*> runs;
        for (const auto& r : results)
            if (r.mode == mode) runs.push_back(&r);
        if (runs.empty()) continue;
        for (const char* kpi : kKpiNames) {
            std::vector<double> values, deltas;
            for (const auto* r : runs) {
                const double v = r->kpis.value(kpi);
                values.push_back(v);
                auto b = baseline.find(r->seed);
                if (b == baseline.end()) continue;
                const double base = b->second->kpis.value(kpi);
                if (base != 0.0) deltas.push_back(100.0 * (v - base) / base);
                else if (v == 0.0) deltas.push_back(0.0);
            }
            KpiComparison c;
            c.n = values.size();
            c.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
            c.sd = sample_sd(values);
            if (deltas.empty()) {
                c.mean_delta_pct = c.sd_delta_pct = std::numeric_limits<double>::quiet_NaN();
            } else {
                c.mean_delta_pct =
                    std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(deltas.size());
                c.sd_delta_pct = sample_sd(deltas);
            }
            table.rows[mode][kpi] = c;
        }
    }
    return table;
}

void write_runs_csv(std::ostream& out, const std::vector<RunResult>& results)
{
    out << "mode,seed,mean_bs_load,mean_user_satisfaction,call_blockages,rlfs,handovers,"
           "pingpong_handovers,allowed,blocked,direct_conflicts,indirect_conflicts,implicit_conflicts\n";
    const auto old_precision = out.precision(10);
    for (const auto& r : results) {
        const auto& k = r.kpis;
        out << to_string(r.mode) << ',' << r.seed << ',' << k.mean_bs_load << ',' << k.mean_user_satisfaction
            << ',' << k.call_blockages << ',' << k.rlfs << ',' << k.handovers << ',' << k.pingpong_handovers
            << ',' << r.total_allowed() << ',' << r.total_blocked() << ',' << r.direct_conflicts << ','
            << r.indirect_conflicts << ',' << r.implicit_conflicts << '\n';
    }
    out.precision(old_precision);
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table)
{
    out << "mode,kpi,n,mean,sd,mean_delta_pct,sd_delta_pct\n";
    const auto old_precision = out.precision(10);
    for (const auto& [mode, kpis] : table.rows)
        for (const char* kpi : kKpiNames) {
            const auto& c = kpis.at(kpi);
            out << to_string(mode) << ',' << kpi << ',' << c.n << ',' << c.mean << ',' << c.sd << ','
                << c.mean_delta_pct << ',' << c.sd_delta_pct << '\n';
        }
    out.precision(old_precision);
}

void print_table(std::ostream& out, const ComparisonTable& table)
{
    std::ostringstream s;
    s << std::left << std::setw(24) << "kpi";
    for (const auto& [mode, _] : table.rows) s << std::setw(30) << to_string(mode);
    s << '\n';
    for (const char* kpi : kKpiNames) {
        s << std::setw(24) << kpi;
        for (const auto& [mode, kpis] : table.rows) {
            const auto& c = kpis.at(kpi);
            std::ostringstream cell;
            cell << std::setprecision(6) << c.mean;
            if (mode != CmfMode::Disabled && !std::isnan(c.mean_delta_pct))
                cell << " (" << std::showpos << std::fixed << std::setprecision(2) << c.mean_delta_pct << "%)";
            s << std::setw(30) << cell.str();
        }
        s << '\n';
    }
    out << s.str();
}

}  // namespace ricsim::harness
