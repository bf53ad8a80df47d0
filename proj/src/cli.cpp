#include "alertlab/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "alertlab/experiment.hpp"
#include "alertlab/text.hpp"

namespace alertlab {

namespace {

// ---- per-rule summary metrics -------------------------------------------

struct RuleMetrics {
    std::size_t patterns_detected = 0;
    std::size_t fault_units = 0;
    std::size_t episodes = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> median_ttd;
};

RuleMetrics metrics_from_report(const DetectionReport& report) {
    RuleMetrics m;
    m.patterns_detected = report.tp;
    m.fault_units = report.tp + report.fn;
    // Partition invariant: every episode is first-match TP, duplicate TP, or FP.
    m.episodes = report.tp + report.duplicate_tp + report.fp;
    m.precision = report.precision;
    m.recall = report.recall;
    if (!report.ttd_values.empty()) {
        std::vector<Seconds> ttd = report.ttd_values;
        std::sort(ttd.begin(), ttd.end());
        const std::size_t n = ttd.size();
        m.median_ttd = n % 2 == 1 ? static_cast<double>(ttd[n / 2])
                                  : (static_cast<double>(ttd[n / 2 - 1]) +
                                     static_cast<double>(ttd[n / 2])) /
                                        2.0;
    }
    return m;
}

using MetricsByRule = std::vector<std::pair<std::string, RuleMetrics>>;

std::string format_metric(const std::optional<double>& v, int decimals = 9) {
    if (!v) return "undefined";
    if (decimals >= 9) return format_value(quantize_value(*v));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, *v);
    return buf;
}

void print_summary(std::ostream& out, const MetricsByRule& metrics) {
    out << std::left << std::setw(16) << "rule" << std::right << std::setw(10) << "patterns"
        << std::setw(10) << "episodes" << std::setw(12) << "median_ttd" << std::setw(11)
        << "precision" << std::setw(11) << "recall" << '\n';
    for (const auto& [name, m] : metrics) {
        out << std::left << std::setw(16) << name << std::right << std::setw(10)
            << (std::to_string(m.patterns_detected) + "/" + std::to_string(m.fault_units))
            << std::setw(10) << m.episodes << std::setw(12) << format_metric(m.median_ttd, 1)
            << std::setw(11) << format_metric(m.precision, 3) << std::setw(11)
            << format_metric(m.recall, 3) << '\n';
    }
}

MetricsByRule metrics_from_result(const RunResult& result) {
    MetricsByRule metrics;
    for (const RuleRun& run : result.rules) {
        metrics.emplace_back(run.rule.name, metrics_from_report(run.report));
    }
    return metrics;
}

// ---- assertion mini-language ---------------------------------------------
//
//   term  := metric '(' rule ')' | number
//   expr  := term cmp term
//   cmp   := < | <= | > | >= | == | !=
//   metric ∈ {recall, precision, episodes, median_ttd, patterns_detected}

struct AssertTerm {
    bool is_number = false;
    double number = 0.0;
    std::string metric;
    std::string rule;
};

struct Assertion {
    std::string text;
    AssertTerm lhs;
    std::string cmp;
    AssertTerm rhs;
};

const std::set<std::string> kMetricNames = {"recall", "precision", "episodes", "median_ttd",
                                            "patterns_detected"};

AssertTerm parse_assert_term(std::string_view text, const Assertion& owner) {
    AssertTerm term;
    text = trim(text);
    std::size_t paren = text.find('(');
    if (paren != std::string_view::npos) {
        if (text.back() != ')') {
            throw ValueError("bad assertion term '" + std::string(text) + "' in '" + owner.text +
                             "'");
        }
        term.metric = std::string(trim(text.substr(0, paren)));
        term.rule = std::string(trim(text.substr(paren + 1, text.size() - paren - 2)));
        if (kMetricNames.count(term.metric) == 0) {
            throw ValueError("unknown metric '" + term.metric + "' in assertion '" + owner.text +
                             "'");
        }
        if (!is_identifier(term.rule)) {
            throw ValueError("bad rule name '" + term.rule + "' in assertion '" + owner.text +
                             "'");
        }
        return term;
    }
    std::string token(text);
    char* end = nullptr;
    term.number = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size()) {
        throw ValueError("bad assertion term '" + token + "' in '" + owner.text + "'");
    }
    term.is_number = true;
    return term;
}

Assertion parse_assertion(const std::string& text) {
    Assertion assertion;
    assertion.text = text;
    static const char* kOps[] = {"<=", ">=", "==", "!=", "<", ">"};
    std::size_t op_pos = std::string::npos;
    for (const char* op : kOps) {
        std::size_t pos = text.find(op);
        if (pos != std::string::npos) {
            op_pos = pos;
            assertion.cmp = op;
            break;
        }
    }
    if (op_pos == std::string::npos) {
        throw ValueError("assertion '" + text + "' has no comparator");
    }
    assertion.lhs = parse_assert_term(std::string_view(text).substr(0, op_pos), assertion);
    assertion.rhs =
        parse_assert_term(std::string_view(text).substr(op_pos + assertion.cmp.size()), assertion);
    return assertion;
}

std::optional<double> eval_term(const AssertTerm& term, const MetricsByRule& metrics) {
    if (term.is_number) return term.number;
    auto it = std::find_if(metrics.begin(), metrics.end(),
                           [&](const auto& entry) { return entry.first == term.rule; });
    if (it == metrics.end()) {
        throw ValueError("assertion references unknown rule '" + term.rule + "'");
    }
    const RuleMetrics& m = it->second;
    if (term.metric == "recall") return m.recall;
    if (term.metric == "precision") return m.precision;
    if (term.metric == "episodes") return static_cast<double>(m.episodes);
    if (term.metric == "median_ttd") return m.median_ttd;
    return static_cast<double>(m.patterns_detected);
}

bool apply_cmp(const std::string& cmp, double lhs, double rhs) {
    if (cmp == "<") return lhs < rhs;
    if (cmp == "<=") return lhs <= rhs;
    if (cmp == ">") return lhs > rhs;
    if (cmp == ">=") return lhs >= rhs;
    if (cmp == "==") return lhs == rhs;
    return lhs != rhs;
}

// Returns kExitOk when every assertion holds, kExitAssertFailed otherwise.
int check_assertions(const std::vector<std::string>& expressions, const MetricsByRule& metrics,
                     std::ostream& out) {
    bool all_ok = true;
    for (const std::string& text : expressions) {
        const Assertion assertion = parse_assertion(text);
        const auto lhs = eval_term(assertion.lhs, metrics);
        const auto rhs = eval_term(assertion.rhs, metrics);
        const bool holds = lhs && rhs && apply_cmp(assertion.cmp, *lhs, *rhs);
        out << (holds ? "PASS" : "FAIL") << " assert: " << assertion.text << " (actual "
            << format_metric(lhs) << " vs " << format_metric(rhs) << ")\n";
        all_ok = all_ok && holds;
    }
    return all_ok ? kExitOk : kExitAssertFailed;
}

// ---- subcommand payloads ---------------------------------------------------

struct RunOptions {
    std::string spec_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> assertions;
};

struct BatchOptions {
    std::string spec_path;
    std::string variations_path;
    std::string out_dir;
    unsigned parallelism = 1;
};

struct ReplayOptions {
    std::vector<std::string> series;
    std::string schedule;
    std::string rules_path;
    std::string out_dir;
    MatchPolicy policy;
    std::string granularity = "pattern";
    std::vector<std::string> assertions;
};

int finish_run(const RunResult& result, const std::string& out_dir,
               const std::vector<std::string>& assertions, std::ostream& out) {
    if (!out_dir.empty()) {
        emit_outputs(result, out_dir);
        out << "outputs written to " << out_dir << '\n';
    }
    out << "experiment " << result.spec.name << " (seed " << result.spec.seed << ", digest "
        << result.digest << ", " << std::fixed << std::setprecision(3) << result.wall_seconds
        << "s)\n";
    out.unsetf(std::ios::fixed);
    const MetricsByRule metrics = metrics_from_result(result);
    print_summary(out, metrics);
    return check_assertions(assertions, metrics, out);
}

int cmd_run(const RunOptions& options, std::ostream& out) {
    ExperimentSpec spec = load_spec(options.spec_path);
    if (options.seed) spec.seed = *options.seed;  // recorded in emitted spec.json
    const RunResult result = run_experiment(spec);
    return finish_run(result, options.out_dir, options.assertions, out);
}

int cmd_replay(const ReplayOptions& options, std::ostream& out) {
    ExperimentSpec spec;
    spec.name = "replay";
    spec.policy = options.policy;
    spec.policy.granularity =
        options.granularity == "phase" ? Granularity::Phase : Granularity::Pattern;

    std::ifstream rules_in(options.rules_path, std::ios::binary);
    if (!rules_in) throw IoError("cannot open rules file: " + options.rules_path);
    std::ostringstream buf;
    buf << rules_in.rdbuf();
    spec.rules = split_rule_documents(buf.str());

    ReplaySource replay;
    for (const std::string& path : options.series) replay.series.emplace_back(path);
    replay.schedule = options.schedule;
    spec.replay = std::move(replay);

    const RunResult result = run_experiment(spec);
    return finish_run(result, options.out_dir, options.assertions, out);
}

int cmd_batch(const BatchOptions& options, std::ostream& out) {
    const ExperimentSpec base = load_spec(options.spec_path);

    std::ifstream in(options.variations_path, std::ios::binary);
    if (!in) throw IoError("cannot open variations file: " + options.variations_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SpecParseError(std::string("invalid variations JSON: ") + e.what());
    }
    if (!doc.is_array()) throw SpecParseError("variations file must be a JSON array of objects");
    std::vector<Variation> variations;
    for (const nlohmann::json& entry : doc) {
        if (!entry.is_object()) {
            throw SpecParseError("each variation must be an object of path -> value");
        }
        Variation var;
        for (const auto& [key, value] : entry.items()) var[key] = value;
        variations.push_back(std::move(var));
    }

    const std::vector<BatchEntry> entries = run_batch(base, variations, options.parallelism);

    bool any_failed = false;
    for (const BatchEntry& entry : entries) {
        out << "--- variation " << entry.index;
        if (!entry.ok()) {
            any_failed = true;
            out << " failed: " << entry.error << '\n';
            continue;
        }
        out << " (seed " << entry.result->spec.seed << ")\n";
        if (!options.out_dir.empty()) {
            std::ostringstream dir;
            dir << options.out_dir << '/' << std::setw(3) << std::setfill('0') << entry.index;
            emit_outputs(*entry.result, dir.str());
        }
        print_summary(out, metrics_from_result(*entry.result));
    }
    return any_failed ? kExitRuntimeError : kExitOk;
}

int cmd_lint(const std::string& path, std::ostream& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open rules file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();

    const std::vector<std::string> documents = split_rule_documents(buf.str());
    const std::vector<Diagnostic> diagnostics = lint_rules(documents);
    bool any_error = false;
    for (const Diagnostic& diag : diagnostics) {
        any_error = any_error || diag.severity == Severity::Error;
        out << path << ": document " << diag.document + 1 << ": " << diag.to_string() << '\n';
    }
    if (diagnostics.empty()) {
        out << path << ": " << documents.size() << " rule(s), no diagnostics\n";
    }
    return any_error ? kExitInputError : kExitOk;
}

int cmd_report(const std::string& dir, const std::vector<std::string>& assertions,
               std::ostream& out) {
    const std::filesystem::path base(dir);
    std::ifstream in(base / "manifest.json", std::ios::binary);
    if (!in) throw IoError("cannot open " + (base / "manifest.json").string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw SpecParseError(std::string("invalid manifest JSON: ") + e.what());
    }

    MetricsByRule metrics;
    for (const nlohmann::json& file : manifest.at("files")) {
        const std::string name = file.get<std::string>();
        if (name.rfind("report_", 0) == 0) {
            const DetectionReport report = load_report_json(base / name);
            metrics.emplace_back(report.rule_name, metrics_from_report(report));
        }
    }
    out << "run " << manifest.at("digest").get<std::string>() << " (seed "
        << manifest.at("seed").get<std::uint64_t>() << ")\n";
    print_summary(out, metrics);
    return check_assertions(assertions, metrics, out);
}

bool is_input_error(const StageError& e) {
    // Errors escaping the input-loading stages are the caller's data, not
    // runtime faults.
    return e.stage == "rules" || e.stage == "replay";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"alert experimentation engine: simulate faults, evaluate alert rules, "
                 "score detections"};
    app.name("alertlab");
    app.require_subcommand(1);

    RunOptions run_options;
    CLI::App* run = app.add_subcommand("run", "run an experiment spec and emit outputs");
    run->add_option("spec", run_options.spec_path, "experiment spec file (JSON)")->required();
    run->add_option("-o,--out", run_options.out_dir, "output directory")->required();
    run->add_option("--seed", run_options.seed, "override the spec seed");
    run->add_option("--assert", run_options.assertions,
                    "assertion like 'recall(Base90) >= 0.8' (repeatable; exit 3 on failure)");

    BatchOptions batch_options;
    CLI::App* batch = app.add_subcommand("batch", "run a spec with a list of variations");
    batch->add_option("spec", batch_options.spec_path, "base experiment spec file")->required();
    batch->add_option("--variations", batch_options.variations_path,
                      "JSON array of {\"spec.path\": value} overrides")
        ->required();
    batch->add_option("-o,--out", batch_options.out_dir,
                      "output directory (per-variation subdirectories)");
    batch->add_option("--parallelism", batch_options.parallelism, "concurrent runs")
        ->check(CLI::Range(1u, 256u));

    std::string lint_path;
    CLI::App* lint = app.add_subcommand("lint", "check a rule file; exit 1 on errors");
    lint->add_option("file", lint_path, "rule file (documents separated by ---)")->required();

    ReplayOptions replay_options;
    CLI::App* replay = app.add_subcommand("replay", "evaluate rules against recorded data");
    replay->add_option("--series", replay_options.series, "series CSV file (repeatable)")
        ->required();
    replay->add_option("--schedule", replay_options.schedule, "fault schedule CSV")->required();
    replay->add_option("--rules", replay_options.rules_path, "rule file")->required();
    replay->add_option("-o,--out", replay_options.out_dir, "output directory");
    replay->add_option("--grace-after-end", replay_options.policy.grace_after_end,
                       "seconds after a fault unit ends in which a firing still matches");
    replay->add_option("--grace-before-start", replay_options.policy.grace_before_start,
                       "seconds before a fault unit starts in which a firing already matches");
    replay->add_option("--granularity", replay_options.granularity, "phase or pattern")
        ->check(CLI::IsMember({"phase", "pattern"}));
    replay->add_option("--merge-gap", replay_options.policy.pattern_merge_gap,
                       "gaps smaller than this merge phases into one pattern");
    replay->add_option("--assert", replay_options.assertions, "assertion (repeatable)");

    std::string report_dir;
    std::vector<std::string> report_assertions;
    CLI::App* report = app.add_subcommand("report", "summarize an emitted output directory");
    report->add_option("dir", report_dir, "output directory of a previous run")->required();
    report->add_option("--assert", report_assertions, "assertion (repeatable)");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("alertlab");
    for (const std::string& arg : args) argv.push_back(arg.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }

    try {
        if (run->parsed()) return cmd_run(run_options, out);
        if (batch->parsed()) return cmd_batch(batch_options, out);
        if (lint->parsed()) return cmd_lint(lint_path, out);
        if (replay->parsed()) return cmd_replay(replay_options, out);
        return cmd_report(report_dir, report_assertions, out);
    } catch (const StageError& e) {
        err << "error: " << e.what() << '\n';
        return is_input_error(e) ? kExitInputError : kExitRuntimeError;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const SpecParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const RuleParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const CsvParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const GridError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const ValueError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
}

}  // namespace alertlab
