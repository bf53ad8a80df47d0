#include "alertlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "alertlab/text.hpp"

namespace alertlab {

namespace {

std::string join_issues(const std::vector<ValidationIssue>& issues) {
    std::ostringstream out;
    out << "invalid experiment spec:";
    for (const ValidationIssue& issue : issues) {
        out << "\n  " << (issue.path.empty() ? "<spec>" : issue.path) << ": " << issue.message;
    }
    return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> issues_in)
    : Error(join_issues(issues_in)), issues(std::move(issues_in)) {}

namespace {

using nlohmann::json;

// Collects every problem before failing, so a bad spec reports all of its
// mistakes at once.
class SpecParser {
public:
    explicit SpecParser(const json& doc) : doc_(doc) {}

    ExperimentSpec parse() {
        if (!doc_.is_object()) {
            fail("", "spec must be a JSON object");
        }
        check_keys(doc_, "",
                   {"name", "scrape_interval", "seed", "workload", "pattern", "error_model",
                    "rules", "policy", "replay"});

        ExperimentSpec spec;
        read_string(doc_, "name", spec.name, /*required=*/true);
        if (spec.name.empty()) issue("name", "must not be empty");
        read_seconds(doc_, "scrape_interval", spec.scrape_interval, 1);
        read_seed(spec.seed);
        parse_rules(spec);
        parse_policy(spec.policy);

        const bool replay_mode = doc_.contains("replay");
        if (replay_mode) {
            parse_replay(spec);
            for (const char* key : {"workload", "pattern", "error_model"}) {
                if (doc_.contains(key)) {
                    issue(key, "not allowed in replay mode");
                }
            }
        } else {
            parse_workload(spec.workload);
            parse_pattern(spec.pattern);
            parse_error_model(spec.error_model);
        }

        if (!issues_.empty()) throw ValidationError(std::move(issues_));
        return spec;
    }

private:
    void issue(std::string path, std::string message) {
        issues_.push_back({std::move(path), std::move(message)});
    }

    [[noreturn]] void fail(std::string path, std::string message) {
        issue(std::move(path), std::move(message));
        throw ValidationError(std::move(issues_));
    }

    static std::string joined(const std::string& prefix, const std::string& key) {
        return prefix.empty() ? key : prefix + "." + key;
    }

    // Unknown keys are errors: silent typos in alert experiments are the
    // failure mode this tool exists to catch.
    void check_keys(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : obj.items()) {
            if (std::find_if(allowed.begin(), allowed.end(),
                             [&](const char* a) { return key == a; }) == allowed.end()) {
                issue(joined(prefix, key), "unknown key");
            }
        }
    }

    bool require(const json& obj, const std::string& prefix, const char* key, bool required) {
        if (obj.contains(key)) return true;
        if (required) issue(joined(prefix, key), "required field is missing");
        return false;
    }

    void read_string(const json& obj, const char* key, std::string& out, bool required,
                     const std::string& prefix = "") {
        if (!require(obj, prefix, key, required)) return;
        const json& v = obj.at(key);
        if (!v.is_string()) {
            issue(joined(prefix, key), "must be a string");
            return;
        }
        out = v.get<std::string>();
    }

    void read_seconds(const json& obj, const char* key, Seconds& out, Seconds min_value,
                      const std::string& prefix = "", bool required = false) {
        if (!require(obj, prefix, key, required)) return;
        const json& v = obj.at(key);
        if (!v.is_number_integer()) {
            issue(joined(prefix, key), "must be an integer number of seconds");
            return;
        }
        const Seconds value = v.get<Seconds>();
        if (value < min_value) {
            issue(joined(prefix, key), "must be >= " + std::to_string(min_value));
            return;
        }
        out = value;
    }

    void read_fraction(const json& obj, const char* key, double& out, const std::string& prefix,
                       double lo, double hi) {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_number()) {
            issue(joined(prefix, key), "must be a number");
            return;
        }
        const double value = v.get<double>();
        if (!(value >= lo && value <= hi)) {
            issue(joined(prefix, key),
                  "must be in [" + format_value(lo) + ", " + format_value(hi) + "]");
            return;
        }
        out = value;
    }

    void read_seed(std::uint64_t& out) {
        if (!doc_.contains("seed")) return;
        const json& v = doc_.at("seed");
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                       v.get<std::int64_t>() < 0)) {
            issue("seed", "must be a non-negative integer");
            return;
        }
        out = v.get<std::uint64_t>();
    }

    void parse_rules(ExperimentSpec& spec) {
        if (!require(doc_, "", "rules", true)) return;
        const json& rules = doc_.at("rules");
        if (!rules.is_array() || rules.empty()) {
            issue("rules", "must be a non-empty array of rule documents");
            return;
        }
        for (std::size_t i = 0; i < rules.size(); ++i) {
            const json& entry = rules[i];
            const std::string path = "rules." + std::to_string(i);
            if (entry.is_string()) {
                // normalize to one trailing newline so string and line-array
                // forms of the same document compare and digest identically
                const std::string text = entry.get<std::string>();
                std::string doc;
                for (std::string_view line : split_lines(text)) {
                    doc += line;
                    doc += '\n';
                }
                spec.rules.push_back(std::move(doc));
            } else if (entry.is_array()) {
                std::string doc;
                bool ok = true;
                for (const json& line : entry) {
                    if (!line.is_string()) {
                        issue(path, "rule lines must be strings");
                        ok = false;
                        break;
                    }
                    doc += line.get<std::string>();
                    doc += '\n';
                }
                if (ok) spec.rules.push_back(std::move(doc));
            } else {
                issue(path, "must be a rule document string or an array of lines");
            }
        }
        for (const Diagnostic& diag : lint_rules(spec.rules)) {
            if (diag.severity == Severity::Error) {
                issue("rules." + std::to_string(diag.document), diag.to_string());
            }
        }
    }

    void parse_policy(MatchPolicy& policy) {
        if (!doc_.contains("policy")) return;
        const json& obj = doc_.at("policy");
        if (!obj.is_object()) {
            issue("policy", "must be an object");
            return;
        }
        check_keys(obj, "policy",
                   {"grace_after_end", "grace_before_start", "granularity", "pattern_merge_gap"});
        read_seconds(obj, "grace_after_end", policy.grace_after_end, 0, "policy");
        read_seconds(obj, "grace_before_start", policy.grace_before_start, 0, "policy");
        read_seconds(obj, "pattern_merge_gap", policy.pattern_merge_gap, 1, "policy");
        if (obj.contains("granularity")) {
            std::string g;
            read_string(obj, "granularity", g, false, "policy");
            if (g == "phase") {
                policy.granularity = Granularity::Phase;
            } else if (g == "pattern") {
                policy.granularity = Granularity::Pattern;
            } else if (!g.empty()) {
                issue("policy.granularity", "must be \"phase\" or \"pattern\"");
            }
        }
    }

    void parse_workload(WorkloadSpec& workload) {
        if (!require(doc_, "", "workload", true)) return;
        const json& obj = doc_.at("workload");
        if (!obj.is_object()) {
            issue("workload", "must be an object");
            return;
        }
        check_keys(obj, "workload", {"users", "per_user_rps", "duration", "warmup"});
        if (require(obj, "workload", "users", true)) {
            const json& v = obj.at("users");
            if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
                issue("workload.users", "must be a positive integer");
            } else {
                workload.users = v.get<int>();
            }
        }
        read_fraction(obj, "per_user_rps", workload.per_user_rps, "workload", 1e-9, 1e9);
        read_seconds(obj, "duration", workload.duration, 1, "workload", /*required=*/true);
        read_seconds(obj, "warmup", workload.warmup, 0, "workload");
        if (workload.duration > 0 && workload.warmup >= workload.duration) {
            issue("workload.warmup", "must be smaller than duration");
        }
    }

    void parse_pattern(FaultPatternSpec& pattern) {
        if (!require(doc_, "", "pattern", true)) return;
        const json& obj = doc_.at("pattern");
        if (!obj.is_object()) {
            issue("pattern", "must be an object");
            return;
        }
        check_keys(obj, "pattern",
                   {"phases", "inter_phase_gap", "repetitions", "cooldown", "first_start",
                    "treatment"});
        if (require(obj, "pattern", "phases", true)) {
            const json& phases = obj.at("phases");
            if (!phases.is_array() || phases.empty()) {
                issue("pattern.phases", "must be a non-empty array");
            } else {
                for (std::size_t i = 0; i < phases.size(); ++i) {
                    const std::string path = "pattern.phases." + std::to_string(i);
                    const json& p = phases[i];
                    if (!p.is_object()) {
                        issue(path, "must be an object");
                        continue;
                    }
                    FaultPhase phase;
                    check_keys(p, path, {"duration", "magnitude"});
                    read_seconds(p, "duration", phase.duration, 1, path, /*required=*/true);
                    if (require(p, path, "magnitude", true)) {
                        double magnitude = 0.0;
                        read_fraction(p, "magnitude", magnitude, path, 0.0, 1.0);
                        phase.magnitude = magnitude;
                    }
                    pattern.phases.push_back(phase);
                }
            }
        }
        read_seconds(obj, "inter_phase_gap", pattern.inter_phase_gap, 0, "pattern");
        read_seconds(obj, "cooldown", pattern.cooldown, 0, "pattern");
        read_seconds(obj, "first_start", pattern.first_start, 0, "pattern");
        read_string(obj, "treatment", pattern.treatment, false, "pattern");
        if (obj.contains("repetitions")) {
            const json& v = obj.at("repetitions");
            if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
                issue("pattern.repetitions", "must be an integer >= 1");
            } else {
                pattern.repetitions = v.get<int>();
            }
        }
    }

    void parse_error_model(ErrorModel& model) {
        if (!doc_.contains("error_model")) return;
        const json& obj = doc_.at("error_model");
        if (!obj.is_object()) {
            issue("error_model", "must be an object");
            return;
        }
        check_keys(obj, "error_model",
                   {"base_error_rate", "loss_to_error_gain", "noise_std", "ramp"});
        read_fraction(obj, "base_error_rate", model.base_error_rate, "error_model", 0.0, 1.0);
        read_fraction(obj, "loss_to_error_gain", model.loss_to_error_gain, "error_model", 0.0,
                      1e6);
        read_fraction(obj, "noise_std", model.noise_std, "error_model", 0.0, 1.0);
        read_seconds(obj, "ramp", model.ramp, 0, "error_model");
    }

    void parse_replay(ExperimentSpec& spec) {
        const json& obj = doc_.at("replay");
        if (!obj.is_object()) {
            issue("replay", "must be an object");
            return;
        }
        check_keys(obj, "replay", {"series", "schedule"});
        ReplaySource replay;
        if (require(obj, "replay", "series", true)) {
            const json& series = obj.at("series");
            if (!series.is_array() || series.empty()) {
                issue("replay.series", "must be a non-empty array of file paths");
            } else {
                for (const json& p : series) {
                    if (!p.is_string()) {
                        issue("replay.series", "paths must be strings");
                        break;
                    }
                    replay.series.emplace_back(p.get<std::string>());
                }
            }
        }
        std::string schedule;
        read_string(obj, "schedule", schedule, true, "replay");
        replay.schedule = schedule;
        spec.replay = std::move(replay);
    }

    const json& doc_;
    std::vector<ValidationIssue> issues_;
};

}  // namespace

ExperimentSpec spec_from_json(const json& doc) { return SpecParser(doc).parse(); }

json spec_to_json(const ExperimentSpec& spec) {
    json doc;
    doc["name"] = spec.name;
    doc["scrape_interval"] = spec.scrape_interval;
    doc["seed"] = spec.seed;

    json rules = json::array();
    for (const std::string& rule : spec.rules) {
        json lines = json::array();
        for (std::string_view line : split_lines(rule)) lines.push_back(std::string(line));
        rules.push_back(std::move(lines));
    }
    doc["rules"] = std::move(rules);

    doc["policy"] = json{
        {"grace_after_end", spec.policy.grace_after_end},
        {"grace_before_start", spec.policy.grace_before_start},
        {"granularity", spec.policy.granularity == Granularity::Phase ? "phase" : "pattern"},
        {"pattern_merge_gap", spec.policy.pattern_merge_gap},
    };

    if (spec.replay) {
        json series = json::array();
        for (const auto& path : spec.replay->series) series.push_back(path.string());
        doc["replay"] = json{{"series", std::move(series)},
                             {"schedule", spec.replay->schedule.string()}};
        return doc;
    }

    doc["workload"] = json{
        {"users", spec.workload.users},
        {"per_user_rps", spec.workload.per_user_rps},
        {"duration", spec.workload.duration},
        {"warmup", spec.workload.warmup},
    };
    json phases = json::array();
    for (const FaultPhase& p : spec.pattern.phases) {
        phases.push_back(json{{"duration", p.duration}, {"magnitude", p.magnitude}});
    }
    doc["pattern"] = json{
        {"phases", std::move(phases)},
        {"inter_phase_gap", spec.pattern.inter_phase_gap},
        {"repetitions", spec.pattern.repetitions},
        {"cooldown", spec.pattern.cooldown},
        {"first_start", spec.pattern.first_start},
        {"treatment", spec.pattern.treatment},
    };
    doc["error_model"] = json{
        {"base_error_rate", spec.error_model.base_error_rate},
        {"loss_to_error_gain", spec.error_model.loss_to_error_gain},
        {"noise_std", spec.error_model.noise_std},
        {"ramp", spec.error_model.ramp},
    };
    return doc;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open spec file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SpecParseError("invalid spec JSON in " + path.string() + ": " + e.what());
    }
    return spec_from_json(doc);
}

void save_spec(const ExperimentSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write spec file: " + path.string());
    out << spec_to_json(spec).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

std::string spec_digest(const ExperimentSpec& spec) {
    const std::string canonical = spec_to_json(spec).dump();
    std::uint64_t hash = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

RunResult run_experiment(const ExperimentSpec& spec) {
    const auto started = std::chrono::steady_clock::now();

    RunResult result;
    result.spec = spec;
    result.digest = spec_digest(spec);

    std::vector<AlertRule> rules = stage("rules", [&] {
        std::vector<AlertRule> parsed;
        for (const std::string& doc : spec.rules) parsed.push_back(parse_rule(doc));
        return parsed;
    });

    if (spec.replay) {
        stage("replay", [&] {
            for (const auto& path : spec.replay->series) {
                result.series.push_back(load_series_csv(path));
            }
            result.schedule = load_fault_schedule_csv(spec.replay->schedule);
            return 0;
        });
    } else {
        stage("simulate", [&] {
            SimulationResult sim =
                simulate(spec.workload, build_fault_schedule(spec.pattern), spec.error_model,
                         spec.scrape_interval, spec.seed);
            result.series = std::move(sim.series);
            result.schedule = std::move(sim.schedule);
            return 0;
        });
    }

    Seconds t_end = 0;
    for (const TimeSeries& series : result.series) {
        if (!series.empty()) t_end = std::max(t_end, series.samples().back().timestamp);
    }

    const std::vector<RuleEvaluation> evaluations = stage("evaluate", [&] {
        auto evals = evaluate_all(rules, result.series, t_end);
        std::string failures;
        for (const RuleEvaluation& eval : evals) {
            if (!eval.ok()) {
                if (!failures.empty()) failures += "; ";
                failures += eval.rule_name + ": " + *eval.error;
            }
        }
        if (!failures.empty()) throw MetricMismatchError(failures);
        return evals;
    });

    stage("classify", [&] {
        for (std::size_t i = 0; i < rules.size(); ++i) {
            RuleRun run;
            run.rule = rules[i];
            run.episodes = evaluations[i].episodes;
            run.report = classify(run.episodes, result.schedule, spec.policy);
            run.report.rule_name = rules[i].name;
            result.rules.push_back(std::move(run));
        }
        return 0;
    });

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

namespace {

void apply_override(json& root, const std::string& path, const json& value) {
    std::vector<std::string> segments;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        std::size_t dot = path.find('.', pos);
        if (dot == std::string::npos) dot = path.size();
        segments.push_back(path.substr(pos, dot - pos));
        pos = dot + 1;
    }

    json* cur = &root;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string& seg = segments[i];
        json* next = nullptr;
        if (cur->is_object()) {
            if (!cur->contains(seg)) {
                throw ValueError("override path '" + path + "' does not address an existing field");
            }
            next = &(*cur)[seg];
        } else if (cur->is_array()) {
            std::size_t index = 0;
            try {
                index = static_cast<std::size_t>(std::stoul(seg));
            } catch (...) {
                throw ValueError("override path '" + path + "' uses a non-numeric array index");
            }
            if (index >= cur->size()) {
                throw ValueError("override path '" + path + "' indexes past the end");
            }
            next = &(*cur)[index];
        } else {
            throw ValueError("override path '" + path + "' descends into a scalar");
        }
        if (i + 1 == segments.size()) {
            *next = value;
        } else {
            cur = next;
        }
    }
}

}  // namespace

std::vector<BatchEntry> run_batch(const ExperimentSpec& base,
                                  const std::vector<Variation>& variations,
                                  unsigned parallelism) {
    const json base_json = spec_to_json(base);
    std::vector<BatchEntry> entries(variations.size());

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= variations.size()) return;
            BatchEntry& entry = entries[i];
            entry.index = i;
            entry.variation = variations[i];
            try {
                json doc = base_json;
                doc["seed"] = base.seed + i;  // reproducible without enumerating seeds
                for (const auto& [path, value] : variations[i]) {
                    apply_override(doc, path, value);
                }
                entry.result = run_experiment(spec_from_json(doc));
            } catch (const std::exception& e) {
                entry.error = e.what();
            }
        }
    };

    const unsigned workers = std::max<unsigned>(
        1, std::min<unsigned>(parallelism, static_cast<unsigned>(variations.size())));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return entries;
}

namespace {

double scheduled_magnitude(const std::vector<FaultWindow>& schedule, Seconds t) {
    for (const FaultWindow& w : schedule) {
        if (t < w.start) break;
        if (t < w.end) return w.magnitude;
    }
    return 0.0;
}

std::string plotdata_csv(const RunResult& result) {
    const TimeSeries* base = nullptr;
    for (const TimeSeries& series : result.series) {
        if (series.name() == "errorRate") base = &series;
    }
    if (!base && !result.series.empty()) base = &result.series.front();

    std::ostringstream out;
    out << "timestamp," << (base ? base->name() : "value") << ",fault_magnitude";
    for (const RuleRun& run : result.rules) out << ",firing_" << run.rule.name;
    out << '\n';
    if (!base) return out.str();

    std::vector<std::size_t> next_episode(result.rules.size(), 0);
    for (const MetricSample& sample : base->samples()) {
        const Seconds t = sample.timestamp;
        out << t << ',' << format_value(sample.value) << ','
            << format_value(scheduled_magnitude(result.schedule, t));
        for (std::size_t r = 0; r < result.rules.size(); ++r) {
            const auto& episodes = result.rules[r].episodes;
            std::size_t& i = next_episode[r];
            while (i < episodes.size() && episodes[i].resolved_at &&
                   *episodes[i].resolved_at <= t) {
                ++i;
            }
            const bool firing =
                i < episodes.size() && episodes[i].fired_at <= t &&
                (!episodes[i].resolved_at || t < *episodes[i].resolved_at);
            out << ',' << (firing ? 1 : 0);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace

Manifest emit_outputs(const RunResult& result, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " +
                          ec.message());

    Manifest manifest;
    manifest.digest = result.digest;
    manifest.seed = result.spec.seed;

    for (const TimeSeries& series : result.series) {
        const std::string file = series.name() + ".csv";
        write_series_csv(series, out_dir / file);
        manifest.files.push_back(file);
    }

    write_fault_schedule_csv(result.schedule, out_dir / "fault_schedule.csv");
    manifest.files.push_back("fault_schedule.csv");

    for (const RuleRun& run : result.rules) {
        const std::string episodes_file = "episodes_" + run.rule.name + ".csv";
        write_episodes_csv(run.episodes, out_dir / episodes_file);
        manifest.files.push_back(episodes_file);

        const std::string report_file = "report_" + run.rule.name + ".json";
        write_report_json(run.report, out_dir / report_file);
        manifest.files.push_back(report_file);
    }

    {
        std::ofstream out(out_dir / "plotdata.csv", std::ios::binary);
        if (!out) throw IoError("cannot write plotdata.csv");
        out << plotdata_csv(result);
        manifest.files.push_back("plotdata.csv");
    }

    // Run metadata; not part of the data manifest.
    save_spec(result.spec, out_dir / "spec.json");
    {
        json doc{{"digest", manifest.digest}, {"seed", manifest.seed},
                 {"files", manifest.files}};
        std::ofstream out(out_dir / "manifest.json", std::ios::binary);
        if (!out) throw IoError("cannot write manifest.json");
        out << doc.dump(2) << '\n';
    }
    return manifest;
}

}  // namespace alertlab
