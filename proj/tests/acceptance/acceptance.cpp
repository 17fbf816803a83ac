// Acceptance run: one PASS/FAIL line per criterion.
//
// Criteria 1 to 6 are exact properties. Criteria 7 to 9 are directional
// checks over a full multi-seed sweep. By default the exit status reflects
// only 1 to 6; with --strict any FAIL makes it non-zero.

#include "ricsim/harness/experiment.hpp"
#include "support/oracle.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

using namespace ricsim;
using cmf::ConflictKind;
using cmf::ConflictReport;
using cmf::ControlRecord;
using cmf::ControlTarget;
using cmf::CorrelatedKind;
using cmf::CounterKey;
using cmf::Millis;
using harness::CmfMode;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    int id;
    bool pass;
    std::string detail;
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome oracle_equivalence(std::size_t n_logs)
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    std::size_t mismatches = 0, messages = 0, direct = 0, indirect = 0;
    for (std::size_t trial = 0; trial < n_logs; ++trial) {
        const auto log = testing::random_log(rng);
        for (const auto& policy : {cmf::ResolutionPolicy::disabled(), cmf::ResolutionPolicy::prioritize("x0")}) {
            const auto expect = testing::oracle_replay(log.messages, log.groups, policy);
            cmf::ConflictMitigator cm({}, log.groups, policy);
            for (std::size_t i = 0; i < log.messages.size(); ++i) {
                const auto v = cm.process_control_message(log.messages[i]);
                ++messages;
                for (const auto& r : v.reports) (r.kind == ConflictKind::Direct ? direct : indirect) += 1;
                if (v.reports != expect[i].reports || (v.decision == cmf::Decision::Allow) != expect[i].allowed)
                    ++mismatches;
            }
        }
    }
    const double elapsed = seconds_since(t0);
    return {1, mismatches == 0 && elapsed < 60.0 && direct > 0 && indirect > 0,
            fmt("%zu logs x 2 policies, %zu messages, %zu direct and %zu indirect reports, %zu mismatches, %.1f s",
                n_logs, messages, direct, indirect, mismatches, elapsed)};
}

// 2 ---------------------------------------------------------------------------

Outcome pass_through(const harness::ExperimentConfig& cfg)
{
    std::size_t identical = 0, changes = 0;
    const int seeds = 5;
    for (int s = 1; s <= seeds; ++s) {
        harness::RunOptions pipe, bypass;
        pipe.record_trajectory = bypass.record_trajectory = true;
        bypass.path = harness::ControlPath::Bypass;
        const auto a = harness::run(cfg, CmfMode::Disabled, static_cast<std::uint64_t>(s), pipe);
        const auto b = harness::run(cfg, CmfMode::Disabled, static_cast<std::uint64_t>(s), bypass);
        bool same = a.trajectory == b.trajectory && a.applied.size() == b.applied.size() && !a.trajectory.empty();
        for (std::size_t i = 0; same && i < a.applied.size(); ++i)
            same = a.applied[i].ts == b.applied[i].ts && a.applied[i].record.msg_id == b.applied[i].record.msg_id &&
                   a.applied[i].record.changes == b.applied[i].record.changes;
        identical += same ? 1 : 0;
        changes += a.applied.size();
    }
    return {2, identical == seeds,
            fmt("%zu/%d seeds bit-identical per tick, %zu applied changes compared", identical, seeds, changes)};
}

// 3 ---------------------------------------------------------------------------

Outcome immunity(const std::vector<harness::RunResult>& runs)
{
    std::int64_t prioritized_blocked = 0, other_blocked = 0, disabled_blocked = 0;
    for (const auto& r : runs) {
        if (r.mode == CmfMode::Disabled) {
            disabled_blocked += r.total_blocked();
            continue;
        }
        const std::string winner = harness::policy_for(r.mode).prioritized;
        for (const auto& [xapp, n] : r.blocked) (xapp == winner ? prioritized_blocked : other_blocked) += n;
    }
    return {3, prioritized_blocked == 0 && disabled_blocked == 0,
            fmt("%zu runs: prioritized xApp blocked %lld times, other xApp %lld, disabled mode %lld", runs.size(),
                static_cast<long long>(prioritized_blocked), static_cast<long long>(other_blocked),
                static_cast<long long>(disabled_blocked))};
}

// 4 ---------------------------------------------------------------------------

const std::vector<cmf::ParameterGroupDef> kGroups{{"ho_boundary", {"hysteresis", "ttt", "cio"}, cmf::TargetScope::Cell}};

struct Script {
    cmf::ConflictMitigator cm;
    std::map<cmf::MsgId, Millis> sent;  // msg_id -> ts
    std::vector<std::string> failures;
    std::size_t checks = 0;
    std::size_t reports = 0;

    explicit Script(std::int64_t threshold)
        : cm(config(threshold), kGroups, cmf::ResolutionPolicy::disabled())
    {
    }

    static cmf::MitigatorConfig config(std::int64_t threshold)
    {
        cmf::MitigatorConfig c;
        c.implicit.threshold = threshold;
        return c;
    }

    void send(cmf::MsgId id, Millis ts, std::string xapp, std::map<std::string, double> changes, Millis span = 5000)
    {
        cm.process_control_message({id, ts, std::move(xapp), ControlTarget::cell("bs1"), std::move(changes), span});
        sent[id] = ts;
    }

    std::vector<ConflictReport> degrade(Millis ts)
    {
        cmf::DegradationEvent ev{0, ts, "rlfs", "bs1", 5.0, 1.0, 0.5};
        ev.event_id = cm.store().record_degradation({0, ts, "rlfs", "bs1", 5.0});
        std::vector<ConflictReport> out;
        for (auto& [r, _] : cm.on_degradation(ev, cmf::cell_scope_only)) {
            for (auto id : r.conflicting_msg_ids) expect(sent.at(id) <= ts, "report cites a later message");
            out.push_back(r);
        }
        reports += out.size();
        return out;
    }

    void expect(bool ok, const std::string& what)
    {
        ++checks;
        if (!ok) failures.push_back(what);
    }

    void expect_count(const CounterKey& key, std::optional<std::int64_t> count, const std::string& what)
    {
        const auto c = cm.store().counter(key);
        expect(count ? (c && c->count == *count) : !c.has_value(), what);
    }
};

CounterKey key(std::vector<std::string> xapps, CorrelatedKind kind, std::string name)
{
    return {std::move(xapps), kind, std::move(name), ControlTarget::cell("bs1")};
}

Outcome implicit_scripts()
{
    std::vector<std::string> failures;
    std::size_t checks = 0, reports = 0;
    auto collect = [&](Script& s) {
        for (auto& f : s.failures) failures.push_back(std::move(f));
        checks += s.checks;
        reports += s.reports;
    };
    const auto k12 = key({"x1", "x2"}, CorrelatedKind::Group, "ho_boundary");

    {  // counting to threshold through a supersession, then reset
        Script s(3);
        s.send(1, 0, "x1", {{"hysteresis", 4}});
        s.send(2, 1000, "x2", {{"cio", -1}});
        s.expect(s.degrade(2000).empty(), "A: no report at count 1");
        s.expect_count(k12, 1, "A: count 1");
        s.expect_count(key({"x1", "x2"}, CorrelatedKind::Parameter, "cio"), std::nullopt, "A: no parameter counter");
        s.degrade(4000);
        s.expect_count(k12, 2, "A: count 2");
        s.send(4, 5500, "x2", {{"cio", -2}});  // replaces message 2
        const auto r = s.degrade(6500);
        s.expect(r.size() == 1, "A: one report at threshold");
        if (r.size() == 1) {
            s.expect(r[0].kind == ConflictKind::Implicit, "A: kind");
            s.expect(r[0].conflicting_msg_ids == std::vector<cmf::MsgId>{1, 4}, "A: cites messages 1 and 4");
            s.expect(r[0].evidence && r[0].evidence->count == 3, "A: evidence count 3");
            s.expect(r[0].shared_groups == std::set<std::string>{"ho_boundary"}, "A: group");
        }
        s.expect_count(k12, 0, "A: reset after report");
        std::size_t older = 0;
        for (const auto& d : s.cm.store().degradations()) older += d.ts < 6500 ? 1 : 0;
        s.expect(older == 0, "A: older degradations purged");
        s.degrade(7000);
        s.expect_count(k12, 1, "A: counting restarts");
        collect(s);
    }
    {  // a degradation handled after a later message must ignore it
        Script s(3);
        s.send(1, 0, "x1", {{"hysteresis", 4}});
        s.degrade(1000);
        s.expect_count(k12, std::nullopt, "B: one xApp alone is no conflict");
        s.send(2, 3000, "x2", {{"cio", -1}});
        s.degrade(2500);
        s.expect_count(k12, std::nullopt, "B: message after the event ignored");
        s.degrade(3500);
        s.expect_count(k12, 1, "B: counted once both precede the event");
        collect(s);
    }
    {  // lookback boundary: expiry 5000 plus 10 s
        Script s(3);
        s.send(1, 0, "x1", {{"hysteresis", 4}});
        s.send(2, 0, "x2", {{"cio", -1}});
        s.degrade(14999);
        s.expect_count(k12, 1, "C: inside lookback");
        s.degrade(15000);
        s.expect_count(k12, 1, "C: lookback is half-open");
        collect(s);
    }
    {  // three xApps, threshold 2: three counters fire in key order
        Script s(2);
        s.send(1, 0, "x1", {{"hysteresis", 4}, {"cio", 1}}, 8000);
        s.send(2, 0, "x2", {{"hysteresis", 5}}, 8000);
        s.send(3, 0, "x3", {{"cio", -1}}, 8000);
        s.expect(s.degrade(1000).empty(), "D: below threshold");
        const auto r = s.degrade(2000);
        s.expect(r.size() == 3, "D: three reports");
        if (r.size() == 3) {
            s.expect(r[0].shared_parameters == std::set<std::string>{"hysteresis"} &&
                         r[0].conflicting_msg_ids == std::vector<cmf::MsgId>{1, 2},
                     "D: hysteresis pair first");
            s.expect(r[1].shared_groups == std::set<std::string>{"ho_boundary"} &&
                         r[1].xapp_ids == std::set<std::string>{"x1", "x2", "x3"} &&
                         r[1].conflicting_msg_ids == std::vector<cmf::MsgId>{1, 2, 3},
                     "D: group set second");
            s.expect(r[2].shared_parameters == std::set<std::string>{"cio"} &&
                         r[2].conflicting_msg_ids == std::vector<cmf::MsgId>{1, 3},
                     "D: cio pair last");
        }
        collect(s);
    }
    std::string detail = fmt("4 scripts, %zu checks, %zu implicit reports", checks, reports);
    for (const auto& f : failures) detail += "; failed: " + f;
    return {4, failures.empty(), detail};
}

// 5 ---------------------------------------------------------------------------

Outcome pmon()
{
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise(0.0, 1.0);

    const int trials = 1000;
    int worst_delay = 0, missed = 0;
    for (int t = 0; t < trials; ++t) {
        cmf::SdlStore store;
        cmf::PerformanceMonitor pm;
        const std::size_t w = pm.config().window;
        int flagged_at = -1;
        for (std::size_t i = 0; i < w + 10 && flagged_at < 0; ++i) {
            const double step = i >= w ? 10.0 : 0.0;
            if (pm.observe({static_cast<Millis>(i) * 5000, "rlfs", "bs1", 50.0 + step + noise(rng)}, store))
                flagged_at = static_cast<int>(i);
        }
        if (flagged_at < static_cast<int>(w)) {
            ++missed;  // never flagged, or flagged before the step
            continue;
        }
        worst_delay = std::max(worst_delay, flagged_at - static_cast<int>(w));
    }

    cmf::SdlStore store;
    cmf::PerformanceMonitor pm;
    const int n = 10'000;
    int alarms = 0;
    for (int i = 0; i < n; ++i)
        if (pm.observe({static_cast<Millis>(i) * 5000, "rlfs", "bs1", noise(rng)}, store)) ++alarms;
    const double fp = static_cast<double>(alarms) / (n - static_cast<double>(pm.config().window));

    return {5, missed == 0 && worst_delay <= 1 && fp < 0.01,
            fmt("10-sigma step: %d/%d flagged, worst delay %d samples after window-full; "
                "false-positive rate %.3f%% on %d Gaussian samples",
                trials - missed, trials, worst_delay, 100.0 * fp, n)};
}

// 6 ---------------------------------------------------------------------------

std::string csv_of(const std::vector<harness::RunResult>& runs)
{
    std::ostringstream out;
    harness::write_runs_csv(out, runs);
    return out.str();
}

Outcome determinism(const harness::ExperimentConfig& cfg, const std::vector<harness::RunResult>& sweep_runs)
{
    std::size_t same = 0, compared = 0;
    for (const auto& first : sweep_runs) {
        if (first.seed != 1 && first.seed != 2) continue;
        const auto again = harness::run(cfg, first.mode, first.seed);
        ++compared;
        same += csv_of({first}) == csv_of({again}) ? 1 : 0;
    }
    return {6, compared > 0 && same == compared,
            fmt("%zu/%zu (mode, seed) pairs reproduce identical CSV rows", same, compared)};
}

// 7 to 9 ----------------------------------------------------------------------

std::string delta(const harness::ComparisonTable& t, CmfMode m, const char* kpi)
{
    const auto& c = t.at(m, kpi);
    return fmt("%s %+.2f%% (sd %.2f)", kpi, c.mean_delta_pct, c.sd_delta_pct);
}

Outcome mro_priority(const harness::ComparisonTable& t, double sweep_s)
{
    const double ho = t.at(CmfMode::PrioritizeMro, "handovers").mean_delta_pct;
    const double cb = t.at(CmfMode::PrioritizeMro, "call_blockages").mean_delta_pct;
    return {7, ho <= -3.0 && cb > 0.0 && sweep_s < 600.0,
            delta(t, CmfMode::PrioritizeMro, "handovers") + " [need <= -3%], " +
                delta(t, CmfMode::PrioritizeMro, "call_blockages") + " [need > 0%]"};
}

Outcome mlb_priority(const harness::ComparisonTable& t, double sweep_s)
{
    const auto d = [&](const char* kpi) { return t.at(CmfMode::PrioritizeMlb, kpi).mean_delta_pct; };
    const bool pass = d("call_blockages") <= -3.0 && d("mean_user_satisfaction") > 0.0 &&
                      std::abs(d("mean_bs_load")) <= 2.0 && d("rlfs") >= 0.0 && d("handovers") >= 0.0 &&
                      sweep_s < 600.0;
    return {8, pass,
            delta(t, CmfMode::PrioritizeMlb, "call_blockages") + " [need <= -3%], " +
                delta(t, CmfMode::PrioritizeMlb, "mean_user_satisfaction") + " [need > 0%], " +
                delta(t, CmfMode::PrioritizeMlb, "mean_bs_load") + " [need |d| <= 2%], " +
                delta(t, CmfMode::PrioritizeMlb, "rlfs") + " [need >= 0%], " +
                delta(t, CmfMode::PrioritizeMlb, "handovers") + " [need >= 0%]"};
}

Outcome indirect_rate(const std::vector<harness::RunResult>& runs)
{
    double rate_sum = 0.0;
    std::int64_t direct = 0;
    int n = 0;
    for (const auto& r : runs) {
        if (r.mode != CmfMode::Disabled) continue;
        rate_sum += static_cast<double>(r.indirect_conflicts) / (static_cast<double>(r.simulated) / 100'000.0);
        direct += r.direct_conflicts;
        ++n;
    }
    const double rate = n ? rate_sum / n : 0.0;
    return {9, n > 0 && rate >= 1.0,
            fmt("%.1f indirect MRO/MLB conflicts per simulated 100 s over %d disabled runs [need >= 1], %lld direct",
                rate, n, static_cast<long long>(direct))};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    std::string config_path;
    unsigned seeds = 10;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::size_t logs = 1000;
    bool strict = false;
    std::string report_path;
    app.add_option("--config", config_path, "Experiment config")->check(CLI::ExistingFile);
    app.add_option("--seeds", seeds, "Seeds in the sweep")->check(CLI::Range(10u, 1000u));
    app.add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
    app.add_option("--logs", logs, "Random message logs for criterion 1")->check(CLI::Range(1000u, 1000000u));
    app.add_option("--report", report_path, "Also write the PASS/FAIL lines to this file");
    app.add_flag("--strict", strict, "Non-zero exit when any criterion fails");
    CLI11_PARSE(app, argc, argv);

    const auto cfg = config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(config_path);

    std::vector<Outcome> results;
    auto emit = [&](Outcome o) {
        std::cout << "criterion " << o.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
        results.push_back(std::move(o));
    };

    emit(oracle_equivalence(logs));
    emit(pass_through(cfg));

    std::vector<std::uint64_t> seed_list;
    for (unsigned s = 1; s <= seeds; ++s) seed_list.push_back(s);
    const auto t0 = Clock::now();
    const auto runs = harness::sweep(cfg, {harness::kAllModes.begin(), harness::kAllModes.end()}, seed_list, jobs);
    const double sweep_s = seconds_since(t0);
    std::cout << "sweep: " << runs.size() << " runs in " << fmt("%.1f", sweep_s) << " s" << std::endl;
    const auto table = harness::compare(runs);

    emit(immunity(runs));
    emit(implicit_scripts());
    emit(pmon());
    emit(determinism(cfg, runs));
    emit(mro_priority(table, sweep_s));
    emit(mlb_priority(table, sweep_s));
    emit(indirect_rate(runs));

    if (!report_path.empty()) {
        std::ofstream out(report_path);
        for (const auto& o : results)
            out << "criterion " << o.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << '\n';
    }

    bool properties_ok = true, all_ok = true;
    for (const auto& o : results) {
        all_ok &= o.pass;
        if (o.id <= 6) properties_ok &= o.pass;
    }
    return (strict ? all_ok : properties_ok) ? 0 : 1;
}
