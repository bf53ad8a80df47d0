#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alertlab/evaluator.hpp"
#include "alertlab/matcher.hpp"
#include "alertlab/rulelang.hpp"
#include "alertlab/suesim.hpp"
#include "alertlab/timeseries.hpp"

namespace alertlab {

struct ReplaySource {
    std::vector<std::filesystem::path> series;
    std::filesystem::path schedule;

    friend bool operator==(const ReplaySource&, const ReplaySource&) = default;
};

/// Declarative experiment: one fault treatment (the pattern), one
/// observability treatment (the rule set), a scoring policy, and a seed.
/// Field-by-field schema in docs/experiment-spec.md.
struct ExperimentSpec {
    std::string name;
    Seconds scrape_interval = 5;
    WorkloadSpec workload;
    FaultPatternSpec pattern;
    ErrorModel error_model;
    std::vector<std::string> rules;  // rule documents
    MatchPolicy policy;
    std::uint64_t seed = 1;
    std::optional<ReplaySource> replay;  // empty = simulate

    friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

struct ValidationIssue {
    std::string path;  // e.g. "workload.users"
    std::string message;
};

struct ValidationError : Error {
    explicit ValidationError(std::vector<ValidationIssue> issues);
    std::vector<ValidationIssue> issues;
};

// Spec file parse error (malformed JSON).
struct SpecParseError : Error {
    using Error::Error;
};

// A module error annotated with the pipeline stage it escaped from.
struct StageError : Error {
    StageError(std::string stage_name, const std::string& message)
        : Error(stage_name + ": " + message), stage(std::move(stage_name)) {}
    std::string stage;
};

ExperimentSpec spec_from_json(const nlohmann::json& doc);
/// Canonical form with every default filled; stable key order.
nlohmann::json spec_to_json(const ExperimentSpec& spec);

ExperimentSpec load_spec(const std::filesystem::path& path);
void save_spec(const ExperimentSpec& spec, const std::filesystem::path& path);

/// FNV-1a over the canonical spec serialization; stable across
/// load/save/load round trips.
std::string spec_digest(const ExperimentSpec& spec);

struct RuleRun {
    AlertRule rule;
    std::vector<AlertEvent> episodes;
    DetectionReport report;
};

struct RunResult {
    std::string digest;
    ExperimentSpec spec;  // resolved spec, including the effective seed
    std::vector<TimeSeries> series;
    std::vector<FaultWindow> schedule;
    std::vector<RuleRun> rules;
    double wall_seconds = 0.0;
};

/// simulate (or replay) -> evaluate every rule -> classify under the policy.
/// Deterministic given the spec; module errors are rethrown as StageError.
RunResult run_experiment(const ExperimentSpec& spec);

/// One batch variation: dotted spec paths (e.g. "error_model.noise_std",
/// "pattern.phases.2.magnitude") mapped to replacement values. Paths must
/// address existing fields.
using Variation = std::map<std::string, nlohmann::json>;

struct BatchEntry {
    std::size_t index = 0;
    Variation variation;
    std::optional<RunResult> result;
    std::string error;  // set when this variation failed; the batch continues

    bool ok() const { return result.has_value(); }
};

/// Runs one experiment per variation, up to `parallelism` at a time. Output
/// order always matches input order. Unless a variation overrides "seed",
/// variation i runs with base.seed + i.
std::vector<BatchEntry> run_batch(const ExperimentSpec& base,
                                  const std::vector<Variation>& variations,
                                  unsigned parallelism = 1);

struct Manifest {
    std::string digest;
    std::uint64_t seed = 0;
    std::vector<std::string> files;  // relative to the output directory
};

/// Writes series CSVs, the fault schedule CSV, per-rule episode CSVs and
/// report JSONs, plotdata.csv, plus spec.json/manifest.json run metadata.
/// Byte-identical for identical results.
Manifest emit_outputs(const RunResult& result, const std::filesystem::path& out_dir);

}  // namespace alertlab
