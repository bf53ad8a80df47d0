#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "alertlab/errors.hpp"
#include "alertlab/timeseries.hpp"

namespace alertlab {

enum class Comparator { Gt, Ge, Lt, Le };

std::string_view comparator_symbol(Comparator cmp);
bool compare(Comparator cmp, double lhs, double rhs);

/// One alert rule: fire when `metric` averaged over the trailing `window`
/// seconds compares true against `threshold`, sustained for `for_duration`
/// seconds (0 = immediately). See docs/rule-language.md for the grammar.
struct AlertRule {
    std::string name;
    std::string metric;
    Seconds window = 0;
    Comparator comparator = Comparator::Gt;
    double threshold = 0.0;
    Seconds for_duration = 0;
    std::map<std::string, std::string> labels;

    friend bool operator==(const AlertRule&, const AlertRule&) = default;
};

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string message;
    std::size_t line = 0;      // 1-based; 0 = whole document
    std::size_t column = 0;    // 1-based; 0 = whole line
    std::size_t document = 0;  // index within a rule file

    std::string to_string() const;
};

struct ParseOutcome {
    std::optional<AlertRule> rule;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return rule.has_value(); }
};

/// Total: any input yields either a rule or error diagnostics with positions.
ParseOutcome try_parse_rule(std::string_view text);

struct RuleParseError : Error {
    explicit RuleParseError(Diagnostic diag);
    Diagnostic diagnostic;
};

/// Throwing form of try_parse_rule.
AlertRule parse_rule(std::string_view text);

/// Canonical document: parse_rule(format_rule(r)) == r. Durations rendered in
/// seconds; the for: line is omitted when for_duration is 0, the labels: line
/// when labels are empty.
std::string format_rule(const AlertRule& rule);

struct LintOptions {
    // Metric names whose thresholds are expected to stay within [0,1].
    std::set<std::string> ratio_metrics = {"errorRate"};
};

/// Per-document parse errors, duplicate rule names across the set, and
/// out-of-range threshold warnings for ratio metrics.
std::vector<Diagnostic> lint_rules(const std::vector<std::string>& documents,
                                   const LintOptions& options = {});

/// Splits a rule file into documents on lines containing only `---`.
std::vector<std::string> split_rule_documents(std::string_view file_contents);

}  // namespace alertlab
