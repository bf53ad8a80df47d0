#include "alertlab/evaluator.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "alertlab/text.hpp"

namespace alertlab {

std::vector<AlertEvent> evaluate_rule(const AlertRule& rule, const TimeSeries& series,
                                      Seconds t_end) {
    if (series.name() != rule.metric) {
        throw MetricMismatchError("rule '" + rule.name + "' expects metric '" + rule.metric +
                                  "', series is '" + series.name() + "'");
    }

    enum class Phase { Inactive, Pending, Firing };
    Phase phase = Phase::Inactive;
    Seconds pending_since = 0;
    AlertEvent open;

    std::vector<AlertEvent> episodes;
    const Seconds step = series.scrape_interval();
    for (Seconds t = 0; t <= t_end; t += step) {
        const auto avg = series.window_average(t, rule.window);
        const bool cond = avg.has_value() && compare(rule.comparator, *avg, rule.threshold);

        if (cond) {
            if (phase == Phase::Inactive) {
                phase = Phase::Pending;
                pending_since = t;
            }
            if (phase == Phase::Pending && t - pending_since >= rule.for_duration) {
                phase = Phase::Firing;
                open = AlertEvent{rule.name, pending_since, t, std::nullopt};
            }
        } else {
            if (phase == Phase::Firing) {
                open.resolved_at = t;
                episodes.push_back(open);
            }
            phase = Phase::Inactive;
        }
    }
    if (phase == Phase::Firing) {
        episodes.push_back(open);  // still firing at t_end
    }
    return episodes;
}

std::vector<RuleEvaluation> evaluate_all(const std::vector<AlertRule>& rules,
                                         const std::vector<TimeSeries>& series_set,
                                         Seconds t_end) {
    std::vector<RuleEvaluation> results;
    results.reserve(rules.size());
    for (const AlertRule& rule : rules) {
        RuleEvaluation entry{rule.name, {}, std::nullopt};
        const TimeSeries* match = nullptr;
        std::size_t hits = 0;
        for (const TimeSeries& series : series_set) {
            if (series.name() == rule.metric) {
                match = &series;
                ++hits;
            }
        }
        if (hits == 0) {
            entry.error = "no series named '" + rule.metric + "'";
        } else if (hits > 1) {
            entry.error = "metric '" + rule.metric + "' resolves to " + std::to_string(hits) +
                          " series";
        } else {
            entry.episodes = evaluate_rule(rule, *match, t_end);
        }
        results.push_back(std::move(entry));
    }
    return results;
}

std::string episodes_to_csv(const std::vector<AlertEvent>& episodes) {
    std::ostringstream out;
    out << "rule,pending_since,fired_at,resolved_at\n";
    for (const AlertEvent& e : episodes) {
        out << e.rule_name << ',' << e.pending_since << ',' << e.fired_at << ',';
        if (e.resolved_at) out << *e.resolved_at;
        out << '\n';
    }
    return out.str();
}

namespace {

Seconds parse_seconds_field(std::string_view field, std::size_t line_no) {
    Seconds v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size()) {
        throw CsvParseError("invalid timestamp '" + std::string(field) + "'", line_no);
    }
    return v;
}

}  // namespace

std::vector<AlertEvent> episodes_from_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "rule,pending_since,fired_at,resolved_at") {
        throw CsvParseError("expected 'rule,pending_since,fired_at,resolved_at' header", 1);
    }
    std::vector<AlertEvent> episodes;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string_view line = trim(lines[i]);
        if (line.empty()) continue;

        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (fields.size() < 3) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string_view::npos) {
                throw CsvParseError("expected 4 fields", i + 1);
            }
            fields.push_back(trim(line.substr(pos, comma - pos)));
            pos = comma + 1;
        }
        fields.push_back(trim(line.substr(pos)));

        AlertEvent e;
        e.rule_name = std::string(fields[0]);
        if (!is_identifier(e.rule_name)) {
            throw CsvParseError("rule name must be an identifier", i + 1);
        }
        e.pending_since = parse_seconds_field(fields[1], i + 1);
        e.fired_at = parse_seconds_field(fields[2], i + 1);
        if (!fields[3].empty()) {
            e.resolved_at = parse_seconds_field(fields[3], i + 1);
        }
        episodes.push_back(std::move(e));
    }
    return episodes;
}

void write_episodes_csv(const std::vector<AlertEvent>& episodes,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write episodes file: " + path.string());
    out << episodes_to_csv(episodes);
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<AlertEvent> load_episodes_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open episodes file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return episodes_from_csv(buf.str());
}

}  // namespace alertlab
