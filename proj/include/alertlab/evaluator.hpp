#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alertlab/rulelang.hpp"
#include "alertlab/timeseries.hpp"

namespace alertlab {

/// One firing episode. pending_since <= fired_at, and fired_at - pending_since
/// >= the owning rule's for_duration; resolved_at is empty while the episode
/// is still open at the end of evaluation.
struct AlertEvent {
    std::string rule_name;
    Seconds pending_since = 0;
    Seconds fired_at = 0;
    std::optional<Seconds> resolved_at;

    friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

/// Steps the pending/firing state machine every scrape interval from 0 to
/// t_end. The condition is window_average(series, t, rule.window) compared
/// against rule.threshold; an empty window counts as false. A false step
/// resets pending and resolves any firing episode at that step.
std::vector<AlertEvent> evaluate_rule(const AlertRule& rule, const TimeSeries& series,
                                      Seconds t_end);

struct RuleEvaluation {
    std::string rule_name;
    std::vector<AlertEvent> episodes;
    std::optional<std::string> error;  // set when the rule's metric did not resolve

    bool ok() const { return !error.has_value(); }
};

/// Evaluates each rule against the series whose name matches its metric.
/// Resolution failures are collected per rule, not thrown; results keep the
/// rule input order.
std::vector<RuleEvaluation> evaluate_all(const std::vector<AlertRule>& rules,
                                         const std::vector<TimeSeries>& series_set,
                                         Seconds t_end);

// Episode CSV: header `rule,pending_since,fired_at,resolved_at`; an empty
// resolved_at marks an open episode.
std::string episodes_to_csv(const std::vector<AlertEvent>& episodes);
std::vector<AlertEvent> episodes_from_csv(std::string_view text);
void write_episodes_csv(const std::vector<AlertEvent>& episodes,
                        const std::filesystem::path& path);
std::vector<AlertEvent> load_episodes_csv(const std::filesystem::path& path);

}  // namespace alertlab
