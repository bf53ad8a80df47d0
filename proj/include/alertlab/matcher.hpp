#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alertlab/evaluator.hpp"
#include "alertlab/suesim.hpp"

namespace alertlab {

// Scoring granularity: each fault phase on its own, or phases merged into
// whole fault patterns.
enum class Granularity { Phase, Pattern };

/// What counts as a valid detection. A firing inside
/// [unit.start - grace_before_start, unit.end + grace_after_end] matches the
/// unit; under Pattern granularity, consecutive windows closer than
/// pattern_merge_gap form one unit.
struct MatchPolicy {
    Seconds grace_after_end = 30;
    Seconds grace_before_start = 0;
    Granularity granularity = Granularity::Pattern;
    Seconds pattern_merge_gap = 120;

    friend bool operator==(const MatchPolicy&, const MatchPolicy&) = default;
};

struct FaultUnit {
    Seconds start = 0;
    Seconds end = 0;
    std::size_t first_window = 0;  // index range into the source schedule
    std::size_t window_count = 0;

    friend bool operator==(const FaultUnit&, const FaultUnit&) = default;
};

std::vector<FaultUnit> merge_fault_units(const std::vector<FaultWindow>& schedule,
                                         const MatchPolicy& policy);

struct DetectionRecord {
    Seconds unit_start = 0;
    Seconds unit_end = 0;
    bool detected = false;
    std::optional<Seconds> first_fired_at;
    std::optional<Seconds> time_to_detect;  // first_fired_at - unit_start
    std::size_t episode_count = 0;          // episodes assigned to this unit

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Aggregated detection quality for one rule. precision and recall are empty
/// ("undefined") when their denominators are zero, never coerced to 0 or 1.
struct DetectionReport {
    std::string rule_name;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t duplicate_tp = 0;
    std::optional<double> precision;  // (tp + duplicate_tp) / (tp + duplicate_tp + fp)
    std::optional<double> recall;     // tp / (tp + fn)
    std::vector<Seconds> ttd_values;
    std::vector<DetectionRecord> records;

    friend bool operator==(const DetectionReport&, const DetectionReport&) = default;
};

/// Scores firing episodes against the fault schedule. Episodes must be sorted
/// by fired_at (UnsortedInputError otherwise). An episode matching several
/// units is assigned to the one with the smallest non-negative
/// fired_at - unit.start (if none, the closest upcoming unit); the first
/// episode assigned to a unit detects it, later ones count as duplicate_tp.
/// Episodes matching no unit are false positives; undetected units are false
/// negatives.
DetectionReport classify(const std::vector<AlertEvent>& episodes,
                         const std::vector<FaultWindow>& schedule, const MatchPolicy& policy);

/// Same contract as classify, written as plain exhaustive interval checks with
/// no index shortcuts. Test oracle; keep independent of classify.
DetectionReport classify_bruteforce(const std::vector<AlertEvent>& episodes,
                                    const std::vector<FaultWindow>& schedule,
                                    const MatchPolicy& policy);

// Report JSON: undefined precision/recall serialize as the string "undefined".
nlohmann::json report_to_json(const DetectionReport& report);
DetectionReport report_from_json(const nlohmann::json& doc);
void write_report_json(const DetectionReport& report, const std::filesystem::path& path);
DetectionReport load_report_json(const std::filesystem::path& path);

}  // namespace alertlab
