#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace ricsim::cmf {

/// Simulation time in milliseconds.
using Millis = std::int64_t;
using MsgId = std::uint64_t;

/// Raised when a record or configuration violates its invariants.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a key that must be unique is inserted twice.
class DuplicateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TargetScope { Cell, Ue, Bearer };

std::string_view to_string(TargetScope scope);
TargetScope parse_scope(std::string_view text);

struct ControlTarget {
    TargetScope scope = TargetScope::Cell;
    std::string id;

    static ControlTarget cell(std::string id) { return {TargetScope::Cell, std::move(id)}; }
    static ControlTarget ue(std::string id) { return {TargetScope::Ue, std::move(id)}; }

    auto operator<=>(const ControlTarget&) const = default;
};

std::string to_string(const ControlTarget& target);

/// One xApp control message as tracked by the CD Agent.
struct ControlRecord {
    MsgId msg_id = 0;
    Millis ts = 0;
    std::string xapp_id;
    ControlTarget target;
    std::map<std::string, double> changes;
    Millis span = 0;

    /// Half-open activity window [ts, ts + span).
    bool active_at(Millis now) const { return ts <= now && now < ts + span; }
    Millis expiry() const { return ts + span; }
};

void validate(const ControlRecord& rec);

struct ParameterGroupDef {
    std::string group_id;
    std::set<std::string> members;
    TargetScope scope = TargetScope::Cell;
};

void validate(const ParameterGroupDef& def);

struct GroupChangeRecord {
    MsgId msg_id = 0;
    std::string group_id;
    Millis ts = 0;
    std::string xapp_id;
    ControlTarget target;
    Millis span = 0;

    bool active_at(Millis now) const { return ts <= now && now < ts + span; }
    Millis expiry() const { return ts + span; }
};

struct DegradationRecord {
    std::uint64_t event_id = 0;
    Millis ts = 0;
    std::string kpi_name;
    std::string cell_id;
    double magnitude = 0.0;
};

/// Counters are keyed by a name that is either a raw parameter or a
/// parameter group. The kind keeps the two namespaces apart.
enum class CorrelatedKind { Parameter, Group };

struct CounterKey {
    std::vector<std::string> xapp_ids;  // sorted, unique
    CorrelatedKind kind = CorrelatedKind::Parameter;
    std::string name;
    ControlTarget target;

    auto operator<=>(const CounterKey&) const = default;
};

std::string to_string(const CounterKey& key);

struct ImplicitCounter {
    CounterKey key;
    std::int64_t count = 0;
    Millis last_update_ts = 0;
    /// Messages that backed the most recent correlation.
    std::vector<MsgId> msg_ids;
};

/// In-memory stand-in for the Near-RT RIC database behind the SDL.
///
/// Every query iterates in insertion order. Single writer only.
class SdlStore {
public:
    explicit SdlStore(Millis degradation_horizon = 60'000)
        : degradation_horizon_(degradation_horizon) {}

    // Recently changed parameters.
    void record_control(const ControlRecord& rec);
    std::vector<ControlRecord> active_controls(const ControlTarget& target, Millis now) const;
    const std::vector<ControlRecord>& controls() const { return controls_; }

    /// Drops parameters of active records from the same xApp on the same
    /// target that `incoming` overwrites. Records left without changes go away.
    void supersede(const ControlRecord& incoming);

    // Recently changed parameter groups.
    void record_group_change(const GroupChangeRecord& gc);
    std::vector<GroupChangeRecord> active_group_changes(const ControlTarget& target,
                                                        std::string_view group_id,
                                                        Millis now) const;
    const std::vector<GroupChangeRecord>& group_changes() const { return group_changes_; }
    void supersede_groups(const ControlRecord& incoming, const std::vector<std::string>& groups);

    // Parameter group definitions.
    void define_group(const ParameterGroupDef& def);
    const std::vector<ParameterGroupDef>& groups() const { return groups_; }

    // Degradation occurrences.
    std::uint64_t record_degradation(DegradationRecord rec);
    const std::vector<DegradationRecord>& degradations() const { return degradations_; }
    std::size_t purge_degradations(std::string_view cell_id, Millis before);

    /// Purges control and group-change records with ts + span <= now, and
    /// degradation records older than the retention horizon.
    std::size_t expire(Millis now);

    // ImCD counters.
    std::int64_t bump_counter(const CounterKey& key, Millis now, std::vector<MsgId> msg_ids = {});
    void reset_counter(const CounterKey& key);
    std::vector<ImplicitCounter> counters_over(std::int64_t threshold) const;
    std::optional<ImplicitCounter> counter(const CounterKey& key) const;

private:
    Millis degradation_horizon_;
    std::vector<ControlRecord> controls_;
    std::unordered_set<MsgId> seen_msg_ids_;
    std::vector<GroupChangeRecord> group_changes_;
    std::set<std::pair<MsgId, std::string>> seen_group_changes_;
    std::vector<ParameterGroupDef> groups_;
    std::vector<DegradationRecord> degradations_;
    std::uint64_t next_event_id_ = 1;
    std::map<CounterKey, ImplicitCounter> counters_;
};

}  // namespace ricsim::cmf
