#include "alertlab/matcher.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

namespace alertlab {

namespace {

void validate_policy(const MatchPolicy& policy) {
    if (policy.grace_after_end < 0 || policy.grace_before_start < 0) {
        throw ValueError("grace periods must be non-negative");
    }
    if (policy.pattern_merge_gap <= 0) {
        throw ValueError("pattern_merge_gap must be positive");
    }
}

void require_sorted_episodes(const std::vector<AlertEvent>& episodes) {
    for (std::size_t i = 1; i < episodes.size(); ++i) {
        if (episodes[i].fired_at < episodes[i - 1].fired_at) {
            throw UnsortedInputError("episodes must be sorted by fired_at");
        }
    }
}

struct UnitTally {
    DetectionRecord record;
};

DetectionReport assemble(const std::vector<AlertEvent>& episodes, std::vector<UnitTally> units,
                         std::size_t fp) {
    DetectionReport report;
    if (!episodes.empty()) report.rule_name = episodes.front().rule_name;
    report.fp = fp;
    for (UnitTally& unit : units) {
        if (unit.record.detected) {
            ++report.tp;
            report.duplicate_tp += unit.record.episode_count - 1;
            report.ttd_values.push_back(*unit.record.time_to_detect);
        } else {
            ++report.fn;
        }
        report.records.push_back(std::move(unit.record));
    }
    const std::size_t tp_events = report.tp + report.duplicate_tp;
    if (tp_events + report.fp > 0) {
        report.precision =
            static_cast<double>(tp_events) / static_cast<double>(tp_events + report.fp);
    }
    if (report.tp + report.fn > 0) {
        report.recall =
            static_cast<double>(report.tp) / static_cast<double>(report.tp + report.fn);
    }
    return report;
}

void assign_episode(UnitTally& unit, const AlertEvent& episode) {
    ++unit.record.episode_count;
    if (!unit.record.detected) {
        unit.record.detected = true;
        unit.record.first_fired_at = episode.fired_at;
        unit.record.time_to_detect = episode.fired_at - unit.record.unit_start;
    }
}

}  // namespace

std::vector<FaultUnit> merge_fault_units(const std::vector<FaultWindow>& schedule,
                                         const MatchPolicy& policy) {
    validate_policy(policy);
    validate_schedule(schedule);

    std::vector<FaultUnit> units;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const FaultWindow& w = schedule[i];
        const bool merge = policy.granularity == Granularity::Pattern && !units.empty() &&
                           w.start - units.back().end < policy.pattern_merge_gap;
        if (merge) {
            units.back().end = w.end;
            ++units.back().window_count;
        } else {
            units.push_back({w.start, w.end, i, 1});
        }
    }
    return units;
}

DetectionReport classify(const std::vector<AlertEvent>& episodes,
                         const std::vector<FaultWindow>& schedule, const MatchPolicy& policy) {
    require_sorted_episodes(episodes);
    const std::vector<FaultUnit> units = merge_fault_units(schedule, policy);

    std::vector<UnitTally> tallies(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
        tallies[i].record.unit_start = units[i].start;
        tallies[i].record.unit_end = units[i].end;
    }

    std::vector<Seconds> starts;
    starts.reserve(units.size());
    for (const FaultUnit& u : units) starts.push_back(u.start);

    std::size_t fp = 0;
    for (const AlertEvent& episode : episodes) {
        const Seconds fired = episode.fired_at;
        // Units are disjoint and ordered, so the only candidate with a
        // non-negative fired - start is the last unit starting at or before
        // fired, and the only negative-offset candidate is the next one.
        auto next = std::upper_bound(starts.begin(), starts.end(), fired);
        std::optional<std::size_t> chosen;
        if (next != starts.begin()) {
            const std::size_t i = static_cast<std::size_t>(next - starts.begin()) - 1;
            if (fired <= units[i].end + policy.grace_after_end) chosen = i;
        }
        if (!chosen && next != starts.end()) {
            const std::size_t i = static_cast<std::size_t>(next - starts.begin());
            if (fired >= units[i].start - policy.grace_before_start) chosen = i;
        }
        if (chosen) {
            assign_episode(tallies[*chosen], episode);
        } else {
            ++fp;
        }
    }
    return assemble(episodes, std::move(tallies), fp);
}

DetectionReport classify_bruteforce(const std::vector<AlertEvent>& episodes,
                                    const std::vector<FaultWindow>& schedule,
                                    const MatchPolicy& policy) {
    require_sorted_episodes(episodes);
    const std::vector<FaultUnit> units = merge_fault_units(schedule, policy);

    std::vector<UnitTally> tallies(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
        tallies[i].record.unit_start = units[i].start;
        tallies[i].record.unit_end = units[i].end;
    }

    std::size_t fp = 0;
    for (const AlertEvent& episode : episodes) {
        const Seconds fired = episode.fired_at;

        std::optional<std::size_t> best;
        bool best_nonneg = false;
        Seconds best_offset = std::numeric_limits<Seconds>::max();
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (fired < units[i].start - policy.grace_before_start) continue;
            if (fired > units[i].end + policy.grace_after_end) continue;
            const Seconds offset = fired - units[i].start;
            const bool nonneg = offset >= 0;
            bool better = false;
            if (nonneg != best_nonneg) {
                better = nonneg;  // any non-negative offset beats every negative one
            } else if (nonneg) {
                better = offset < best_offset;
            } else {
                better = offset > best_offset;  // closest upcoming start
            }
            if (!best || better) {
                best = i;
                best_nonneg = nonneg;
                best_offset = offset;
            }
        }
        if (best) {
            assign_episode(tallies[*best], episode);
        } else {
            ++fp;
        }
    }
    return assemble(episodes, std::move(tallies), fp);
}

namespace {

nlohmann::json metric_to_json(const std::optional<double>& v) {
    if (!v) return "undefined";
    return *v;
}

std::optional<double> metric_from_json(const nlohmann::json& v, const char* name) {
    if (v.is_string()) {
        if (v.get<std::string>() == "undefined") return std::nullopt;
        throw ValueError(std::string("report field ") + name + " must be a number or \"undefined\"");
    }
    if (!v.is_number()) {
        throw ValueError(std::string("report field ") + name + " must be a number or \"undefined\"");
    }
    return v.get<double>();
}

}  // namespace

nlohmann::json report_to_json(const DetectionReport& report) {
    nlohmann::json records = nlohmann::json::array();
    for (const DetectionRecord& r : report.records) {
        nlohmann::json rec{
            {"unit_start", r.unit_start},
            {"unit_end", r.unit_end},
            {"detected", r.detected},
            {"episode_count", r.episode_count},
        };
        rec["first_fired_at"] = r.first_fired_at ? nlohmann::json(*r.first_fired_at)
                                                 : nlohmann::json(nullptr);
        rec["time_to_detect"] = r.time_to_detect ? nlohmann::json(*r.time_to_detect)
                                                 : nlohmann::json(nullptr);
        records.push_back(std::move(rec));
    }
    return nlohmann::json{
        {"rule", report.rule_name},
        {"tp", report.tp},
        {"fp", report.fp},
        {"fn", report.fn},
        {"duplicate_tp", report.duplicate_tp},
        {"precision", metric_to_json(report.precision)},
        {"recall", metric_to_json(report.recall)},
        {"ttd_values", report.ttd_values},
        {"records", std::move(records)},
    };
}

DetectionReport report_from_json(const nlohmann::json& doc) {
    DetectionReport report;
    report.rule_name = doc.at("rule").get<std::string>();
    report.tp = doc.at("tp").get<std::size_t>();
    report.fp = doc.at("fp").get<std::size_t>();
    report.fn = doc.at("fn").get<std::size_t>();
    report.duplicate_tp = doc.at("duplicate_tp").get<std::size_t>();
    report.precision = metric_from_json(doc.at("precision"), "precision");
    report.recall = metric_from_json(doc.at("recall"), "recall");
    report.ttd_values = doc.at("ttd_values").get<std::vector<Seconds>>();
    for (const nlohmann::json& rec : doc.at("records")) {
        DetectionRecord r;
        r.unit_start = rec.at("unit_start").get<Seconds>();
        r.unit_end = rec.at("unit_end").get<Seconds>();
        r.detected = rec.at("detected").get<bool>();
        r.episode_count = rec.at("episode_count").get<std::size_t>();
        if (!rec.at("first_fired_at").is_null()) {
            r.first_fired_at = rec.at("first_fired_at").get<Seconds>();
        }
        if (!rec.at("time_to_detect").is_null()) {
            r.time_to_detect = rec.at("time_to_detect").get<Seconds>();
        }
        report.records.push_back(std::move(r));
    }
    return report;
}

void write_report_json(const DetectionReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report file: " + path.string());
    out << report_to_json(report).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

DetectionReport load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open report file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw CsvParseError(std::string("invalid report JSON: ") + e.what(), 0);
    }
    return report_from_json(doc);
}

}  // namespace alertlab
