// Acceptance suite: one pass/fail line per criterion, exit 1 if any fail.
//
// Criterion 9 pins exact golden counts for the shipped reference spec at its
// seed (42). The seed was chosen from a ten-seed calibration sweep (the same
// run_batch sweep re-executed below); across all ten seeds the qualitative
// ordering holds, and seed 42 shows the wide-window rule firing exactly once.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "alertlab/cli.hpp"
#include "alertlab/experiment.hpp"
#include "testutil.hpp"

using namespace alertlab;
namespace fs = std::filesystem;

namespace {

struct Check {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }

    template <typename A, typename B>
    void equal(const A& actual, const B& expected, const std::string& what) {
        if (!(actual == static_cast<A>(expected))) {
            std::ostringstream msg;
            msg << what << ": got " << actual << ", want " << expected;
            failures.push_back(msg.str());
        }
    }

    void close(double actual, double expected, double tolerance, const std::string& what) {
        if (!(std::fabs(actual - expected) <= tolerance)) {
            std::ostringstream msg;
            msg << what << ": got " << actual << ", want " << expected << " +/- " << tolerance;
            failures.push_back(msg.str());
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

AlertRule rule(std::string name, Seconds window, double threshold, Seconds for_duration) {
    return {std::move(name), "errorRate", window, Comparator::Gt, threshold, for_duration, {}};
}

// ---------------------------------------------------------------------------
// 1. The three published rule documents parse exactly; parse(format(r)) == r
//    on 1000 generated rules. Runtime < 1 s.
void criterion_rule_parsing(Check& c) {
    const auto start = std::chrono::steady_clock::now();

    const AlertRule base = parse_rule("alert: HighErrorRate\nexpr: errorRate[90s] > 0.03");
    c.require(base == rule("HighErrorRate", 90, 0.03, 0), "baseline rule mismatch");

    const AlertRule wide = parse_rule("alert: HighErrorRate\nexpr: errorRate[120s] > 0.03");
    c.require(wide == rule("HighErrorRate", 120, 0.03, 0), "120 s rule mismatch");

    const AlertRule duration =
        parse_rule("alert: HighErrorRate\nexpr: errorRate[90s] > 0.03\nfor: 60s");
    c.require(duration == rule("HighErrorRate", 90, 0.03, 60), "for: 60s rule mismatch");

    std::mt19937_64 rng(20250810);
    std::uniform_int_distribution<Seconds> window(1, 7200);
    std::uniform_int_distribution<Seconds> for_dur(0, 900);
    std::uniform_int_distribution<int> cmp(0, 3);
    std::uniform_real_distribution<double> mantissa(-5.0, 5.0);
    std::uniform_int_distribution<int> exponent(-9, 6);
    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        AlertRule r = rule("gen_" + std::to_string(i), window(rng),
                           mantissa(rng) * std::pow(10.0, exponent(rng)), for_dur(rng));
        r.comparator = static_cast<Comparator>(cmp(rng));
        if (i % 3 == 0) r.labels = {{"severity", "page"}, {"note", "two words"}};
        if (parse_rule(format_rule(r)) != r) ++mismatches;
    }
    c.equal(mismatches, std::size_t{0}, "parse(format(rule)) identity violations");
    c.require(seconds_since(start) < 1.0, "runtime exceeded 1 s");
}

// ---------------------------------------------------------------------------
// 2. Rectangular pulse: peak moving average equals h*min(1, w/W) within
//    h*step/W against brute-force grid evaluation, 200 grid-aligned cases.
void criterion_pulse_oracle(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    const Seconds step = 5;
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<Seconds> window_steps(1, 40);
    std::uniform_int_distribution<Seconds> width_steps(1, 48);
    std::uniform_int_distribution<Seconds> offset_steps(0, 10);
    std::uniform_real_distribution<double> height(0.01, 1.0);

    for (int i = 0; i < 200; ++i) {
        const Seconds window = step * window_steps(rng);
        const Seconds width = step * width_steps(rng);
        const double h = height(rng);
        const Seconds pulse_start = window + step * offset_steps(rng);
        const Seconds series_end = pulse_start + width + window;

        std::vector<double> values;
        for (Seconds t = 0; t <= series_end; t += step) {
            values.push_back(t >= pulse_start && t < pulse_start + width ? h : 0.0);
        }
        const TimeSeries series = testutil::make_series(values, step);

        double impl_peak = 0.0, brute_peak = 0.0;
        for (Seconds t = 0; t <= series_end; t += step) {
            impl_peak = std::max(impl_peak, series.window_average(t, window).value_or(0.0));
            brute_peak = std::max(
                brute_peak,
                testutil::bruteforce_window_average(series, t, window).value_or(0.0));
        }

        const double closed_form =
            h * std::min(1.0, static_cast<double>(width) / static_cast<double>(window));
        const double tolerance =
            h * static_cast<double>(step) / static_cast<double>(window) + 1e-12;
        std::ostringstream tag;
        tag << "case " << i << " (h=" << h << " w=" << width << " W=" << window << ")";
        c.close(brute_peak, closed_form, tolerance, tag.str() + " brute vs closed form");
        c.close(impl_peak, brute_peak, 1e-12, tag.str() + " impl vs brute");
    }
    c.require(seconds_since(start) < 1.0, "runtime exceeded 1 s");
}

// ---------------------------------------------------------------------------
// 3. Step 0 -> 0.06 at t0 with window 90 s and threshold 0.03 fires at exactly
//    t0 + 45; ten random grid-aligned step cases hit t0 + ceil_grid(W*tau/v).
void criterion_step_ttd(Check& c) {
    const Seconds step = 5;

    auto run_case = [&](Seconds t0, Seconds window, double v, double tau, Seconds expected,
                        const std::string& tag) {
        std::vector<double> values;
        const Seconds series_end = t0 + window + expected + 200;
        for (Seconds t = 0; t <= series_end; t += step) values.push_back(t >= t0 ? v : 0.0);
        const TimeSeries series = testutil::make_series(values, step);
        const AlertRule r = rule("step", window, tau, 0);

        const auto episodes = evaluate_rule(r, series, series_end);
        const auto oracle = testutil::bruteforce_evaluate(r, series, series_end);
        c.require(!episodes.empty(), tag + ": rule never fired");
        if (!episodes.empty()) {
            c.equal(episodes.front().fired_at, t0 + expected, tag + ": fired_at");
        }
        c.require(episodes == oracle, tag + ": evaluator disagrees with brute force");
    };

    run_case(120, 90, 0.06, 0.03, 45, "published step case");

    std::mt19937_64 rng(31415);
    std::uniform_int_distribution<Seconds> window_steps(6, 36);
    std::uniform_int_distribution<int> dyadic(1, 32);
    std::uniform_int_distribution<Seconds> offset_steps(0, 10);
    for (int i = 0; i < 10; ++i) {
        const Seconds window_in_steps = window_steps(rng);
        const Seconds window = step * window_in_steps;
        // crossing strictly inside the window: tau == v would put the boundary
        // mean exactly at the threshold, which a strict comparator never passes
        std::uniform_int_distribution<Seconds> cross_steps(1, window_in_steps - 1);
        const Seconds x = step * cross_steps(rng);
        // dyadic step height makes the boundary-step mean bit-exact
        const double v = dyadic(rng) / 32.0;
        const double tau = (v * static_cast<double>(x / step)) /
                           static_cast<double>(window_in_steps);
        const Seconds t0 = window + step * offset_steps(rng);

        const double crossing = static_cast<double>(window) * tau / v;
        const Seconds ceil_grid =
            step * static_cast<Seconds>(std::ceil((crossing - 1e-9) / static_cast<double>(step)));
        std::ostringstream tag;
        tag << "random step case " << i << " (W=" << window << " v=" << v << " tau=" << tau
            << ")";
        c.equal(ceil_grid, x, tag.str() + ": derivation");
        run_case(t0, window, v, tau, ceil_grid, tag.str());
    }
}

// ---------------------------------------------------------------------------
// 4. Duration reset: 55 s above / one step below / 55 s above never fires a
//    for: 60s rule; the immediate twin fires twice. Exact.
void criterion_duration_reset(Check& c) {
    std::vector<double> values;
    for (int i = 0; i < 12; ++i) values.push_back(0.10);  // t = 0..55
    values.push_back(0.0);                                // t = 60
    for (int i = 0; i < 12; ++i) values.push_back(0.10);  // t = 65..120
    values.push_back(0.0);                                // t = 125
    const TimeSeries series = testutil::make_series(values, 5);
    const Seconds t_end = 125;

    const auto held = evaluate_rule(rule("held", 5, 0.03, 60), series, t_end);
    c.equal(held.size(), std::size_t{0}, "for: 60s episode count");

    const auto immediate = evaluate_rule(rule("now", 5, 0.03, 0), series, t_end);
    c.equal(immediate.size(), std::size_t{2}, "for: 0 episode count");
    if (immediate.size() == 2) {
        c.require(immediate[0] == AlertEvent{"now", 0, 0, 60}, "first episode mismatch");
        c.require(immediate[1] == AlertEvent{"now", 65, 65, 125}, "second episode mismatch");
    }
}

// ---------------------------------------------------------------------------
// 5. Duration-subset property over 500 seeded random series: a for:d rule only
//    fires while the for:0 twin's condition holds, and episode counts never
//    grow with d. Zero violations.
void criterion_duration_subset(Check& c) {
    std::mt19937_64 rng(987654321);
    std::uniform_int_distribution<Seconds> window_steps(1, 8);
    std::uniform_real_distribution<double> threshold(0.3, 0.7);
    const Seconds durations[] = {7, 15, 30, 45, 60};

    std::size_t subset_violations = 0, count_violations = 0, order_violations = 0;
    for (int i = 0; i < 500; ++i) {
        const TimeSeries series = testutil::random_walk_series(rng);
        const Seconds w = 5 * window_steps(rng);
        const double tau = threshold(rng);
        const Seconds t_end = series.samples().back().timestamp;

        const auto immediate = evaluate_rule(rule("d0", w, tau, 0), series, t_end);
        auto condition_true = [&](Seconds t) {
            for (const AlertEvent& e : immediate) {
                if (t >= e.fired_at && (!e.resolved_at || t < *e.resolved_at)) return true;
            }
            return false;
        };

        std::size_t previous = immediate.size();
        for (Seconds d : durations) {
            const auto episodes = evaluate_rule(rule("dn", w, tau, d), series, t_end);
            if (episodes.size() > previous) ++count_violations;
            previous = episodes.size();
            for (const AlertEvent& e : episodes) {
                const Seconds resolved = e.resolved_at.value_or(t_end + 5);
                for (Seconds t = e.fired_at; t < resolved; t += 5) {
                    if (!condition_true(t)) ++subset_violations;
                }
                bool fired_inside = false;
                for (const AlertEvent& base : immediate) {
                    if (base.fired_at <= e.fired_at &&
                        (!base.resolved_at || e.fired_at < *base.resolved_at)) {
                        fired_inside = true;
                    }
                }
                if (!fired_inside) ++order_violations;
            }
        }
    }
    c.equal(subset_violations, std::size_t{0}, "firing steps outside the for:0 condition");
    c.equal(count_violations, std::size_t{0}, "episode count grew with d");
    c.equal(order_violations, std::size_t{0}, "for:d fired before the enclosing for:0 episode");
}

// ---------------------------------------------------------------------------
// 6. classify == classify_bruteforce on 1000 random instances. Runtime < 10 s.
void criterion_matcher_oracle(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(6021023);
    std::uniform_int_distribution<std::size_t> unit_count(0, 16);
    std::uniform_int_distribution<std::size_t> episode_count(0, 32);
    std::uniform_int_distribution<Seconds> duration(10, 120);
    std::uniform_int_distribution<Seconds> gap(0, 200);
    std::uniform_int_distribution<Seconds> graces(0, 80);
    std::uniform_int_distribution<Seconds> merge_gap(1, 260);

    std::size_t disagreements = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<FaultWindow> schedule;
        Seconds t = gap(rng);
        const std::size_t n_units = unit_count(rng);
        for (std::size_t u = 0; u < n_units; ++u) {
            const Seconds d = duration(rng);
            schedule.push_back({"packet_loss", t, t + d, 0.2});
            t += d + gap(rng);
        }
        std::uniform_int_distribution<Seconds> fire(0, t + 200);
        std::vector<Seconds> times;
        const std::size_t n_episodes = episode_count(rng);
        for (std::size_t e = 0; e < n_episodes; ++e) times.push_back(fire(rng));
        std::sort(times.begin(), times.end());
        std::vector<AlertEvent> episodes;
        for (Seconds ft : times) episodes.push_back({"r", ft, ft, std::nullopt});

        MatchPolicy policy;
        policy.grace_after_end = graces(rng);
        policy.grace_before_start = graces(rng) / 2;
        policy.pattern_merge_gap = merge_gap(rng);
        policy.granularity = rng() % 2 == 0 ? Granularity::Pattern : Granularity::Phase;

        if (!(classify(episodes, schedule, policy) ==
              classify_bruteforce(episodes, schedule, policy))) {
            ++disagreements;
        }
    }
    c.equal(disagreements, std::size_t{0}, "classify vs classify_bruteforce disagreements");
    c.require(seconds_since(start) < 10.0, "runtime exceeded 10 s");
}

// ---------------------------------------------------------------------------
// 7. Precision/recall arithmetic: tp=5, duplicate_tp=1, fp=0, fn=1 gives
//    precision 1.0 and recall 5/6.
void criterion_precision_recall(Check& c) {
    std::vector<FaultWindow> schedule;
    for (Seconds i = 0; i < 6; ++i) {
        schedule.push_back({"packet_loss", i * 1000, i * 1000 + 300, 0.2});
    }
    std::vector<AlertEvent> episodes;
    for (Seconds i = 0; i < 5; ++i) {
        episodes.push_back({"r", i * 1000 + 50, i * 1000 + 50, std::nullopt});
    }
    episodes.push_back({"r", 120, 120, std::nullopt});  // second hit on unit 0
    std::sort(episodes.begin(), episodes.end(),
              [](const AlertEvent& a, const AlertEvent& b) { return a.fired_at < b.fired_at; });

    const DetectionReport report = classify(episodes, schedule, MatchPolicy{});
    c.equal(report.tp, std::size_t{5}, "tp");
    c.equal(report.duplicate_tp, std::size_t{1}, "duplicate_tp");
    c.equal(report.fp, std::size_t{0}, "fp");
    c.equal(report.fn, std::size_t{1}, "fn");
    c.require(report.precision.has_value() && *report.precision == 1.0, "precision must be 1.0");
    c.require(report.recall.has_value(), "recall must be defined");
    if (report.recall) c.close(*report.recall, 5.0 / 6.0, 1e-9, "recall");
}

// ---------------------------------------------------------------------------
// 8. Grace flip: an episode firing exactly 30 s after the fault unit ends is a
//    TP with grace_after_end >= 30 and an FP with grace 0.
void criterion_grace_flip(Check& c) {
    const std::vector<FaultWindow> schedule{{"packet_loss", 120, 420, 0.25}};
    const std::vector<AlertEvent> episodes{{"r", 450, 450, std::nullopt}};

    MatchPolicy lenient;
    lenient.grace_after_end = 30;
    const DetectionReport tp = classify(episodes, schedule, lenient);
    c.equal(tp.tp, std::size_t{1}, "tp with grace 30");
    c.equal(tp.fp, std::size_t{0}, "fp with grace 30");
    c.equal(tp.fn, std::size_t{0}, "fn with grace 30");

    MatchPolicy strict;
    strict.grace_after_end = 0;
    const DetectionReport fp = classify(episodes, schedule, strict);
    c.equal(fp.tp, std::size_t{0}, "tp with grace 0");
    c.equal(fp.fp, std::size_t{1}, "fp with grace 0");
    c.equal(fp.fn, std::size_t{1}, "fn with grace 0");
}

// ---------------------------------------------------------------------------
// 9. Reference scenario at the golden seed, plus the ten-seed sweep that
//    pinned it.
void criterion_reference_scenario(Check& c) {
    const ExperimentSpec spec = load_spec(ALERTLAB_REFERENCE_SPEC);
    c.equal(spec.seed, std::uint64_t{42}, "golden seed");
    c.require(spec.workload.duration >= 3000, "reference simulates at least 3000 s");

    const auto start = std::chrono::steady_clock::now();
    const RunResult result = run_experiment(spec);
    const double wall = seconds_since(start);
    c.require(wall < 10.0, "reference run exceeded 10 s wall time");

    auto find = [&](const std::string& name) -> const RuleRun* {
        for (const RuleRun& run : result.rules) {
            if (run.rule.name == name) return &run;
        }
        return nullptr;
    };
    const RuleRun* base = find("Base90");
    const RuleRun* wide = find("Wide120");
    const RuleRun* held = find("For60");
    c.require(base && wide && held, "reference spec must define Base90, Wide120, For60");
    if (!(base && wide && held)) return;

    // qualitative claims, independent of the golden counts
    c.require(base->report.tp >= 5, "baseline detects at least 5 of 6 patterns");
    c.require(base->report.duplicate_tp >= 1, "baseline multiply-detects a pattern");
    c.require(wide->report.tp < base->report.tp,
              "wide window detects strictly fewer patterns than baseline");
    c.require(held->episodes.size() < base->episodes.size(),
              "duration rule produces strictly fewer episodes than baseline");

    // golden counts, frozen from the seed-42 calibration run
    c.equal(base->report.tp, std::size_t{6}, "Base90 tp");
    c.equal(base->report.fp, std::size_t{0}, "Base90 fp");
    c.equal(base->report.fn, std::size_t{0}, "Base90 fn");
    c.equal(base->report.duplicate_tp, std::size_t{6}, "Base90 duplicate_tp");
    c.equal(base->episodes.size(), std::size_t{12}, "Base90 episodes");
    c.equal(wide->report.tp, std::size_t{1}, "Wide120 tp");
    c.equal(wide->report.fp, std::size_t{0}, "Wide120 fp");
    c.equal(wide->report.duplicate_tp, std::size_t{1}, "Wide120 duplicate_tp");
    c.equal(wide->episodes.size(), std::size_t{2}, "Wide120 episodes");
    c.equal(held->report.tp, std::size_t{1}, "For60 tp");
    c.equal(held->report.fp, std::size_t{0}, "For60 fp");
    c.equal(held->episodes.size(), std::size_t{1}, "For60 episodes");
    c.require(base->report.ttd_values == std::vector<Seconds>(6, 170), "Base90 ttd values");
    c.require(wide->report.ttd_values == std::vector<Seconds>{300}, "Wide120 ttd values");
    c.require(held->report.ttd_values == std::vector<Seconds>{345}, "For60 ttd values");

    // the pinning sweep: seeds 42..51 via run_batch, all qualitative claims hold
    const std::vector<Variation> sweep(10);
    const auto entries = run_batch(spec, sweep, 4);
    c.equal(entries.size(), std::size_t{10}, "sweep size");
    for (const BatchEntry& entry : entries) {
        std::ostringstream tag;
        tag << "sweep seed " << spec.seed + entry.index;
        if (!entry.ok()) {
            c.require(false, tag.str() + " failed: " + entry.error);
            continue;
        }
        const RunResult& r = *entry.result;
        const DetectionReport& b = r.rules[0].report;
        const DetectionReport& w = r.rules[1].report;
        c.require(b.tp == 6 && b.fn == 0, tag.str() + ": baseline detects 6 of 6");
        c.require(b.duplicate_tp >= 1, tag.str() + ": baseline multiply-detects");
        c.require(r.rules[0].episodes.size() == 12, tag.str() + ": baseline episode count");
        c.require(w.tp < b.tp, tag.str() + ": wide window strict reduction");
        c.require(r.rules[2].episodes.size() < r.rules[0].episodes.size(),
                  tag.str() + ": duration rule strict episode reduction");
    }
}

// ---------------------------------------------------------------------------
// 10. Two end-to-end runs of the reference spec emit byte-identical outputs.
void criterion_determinism(Check& c) {
    const ExperimentSpec spec = load_spec(ALERTLAB_REFERENCE_SPEC);
    const fs::path root = fs::temp_directory_path() / "alertlab_acceptance_det";
    fs::remove_all(root);
    const fs::path dir_a = root / "a", dir_b = root / "b";

    emit_outputs(run_experiment(spec), dir_a);
    emit_outputs(run_experiment(spec), dir_b);

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const fs::path name = entry.path().filename();
        std::ifstream fa(dir_a / name, std::ios::binary);
        std::ifstream fb(dir_b / name, std::ios::binary);
        std::ostringstream ba, bb;
        ba << fa.rdbuf();
        bb << fb.rdbuf();
        if (ba.str() != bb.str()) {
            c.require(false, "file differs between runs: " + name.string());
        }
        ++compared;
    }
    c.equal(compared, std::size_t{12}, "emitted file count");
    std::size_t count_b = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir_b)) ++count_b;
    c.equal(count_b, compared, "both runs emit the same files");
    fs::remove_all(root);
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        std::function<void(Check&)> fn;
    };
    const std::vector<Criterion> criteria{
        {1, "rule parsing: published documents exact, parse/format identity on 1000 rules",
         criterion_rule_parsing},
        {2, "moving average: rectangular pulse closed form vs brute force, 200 cases",
         criterion_pulse_oracle},
        {3, "time-to-detect: step-series crossing matches the analytic grid time",
         criterion_step_ttd},
        {4, "duration reset: momentary dip prevents a for: 60s rule from firing",
         criterion_duration_reset},
        {5, "duration subset: for:d firings stay within the for:0 condition, 500 series",
         criterion_duration_subset},
        {6, "matcher oracle: classify equals exhaustive classification on 1000 instances",
         criterion_matcher_oracle},
        {7, "precision/recall arithmetic: tp=5 dup=1 fp=0 fn=1 -> 1.0 and 0.8333",
         criterion_precision_recall},
        {8, "grace flip: firing 30 s after fault end is TP at grace 30, FP at grace 0",
         criterion_grace_flip},
        {9, "reference scenario: golden seed counts and ten-seed sweep ordering",
         criterion_reference_scenario},
        {10, "determinism: two reference runs emit byte-identical directories",
         criterion_determinism},
    };

    int failed = 0;
    for (const Criterion& criterion : criteria) {
        Check check;
        try {
            criterion.fn(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        const bool ok = check.failures.empty();
        std::printf("%s %2d  %s\n", ok ? "PASS" : "FAIL", criterion.id, criterion.title);
        std::size_t shown = 0;
        for (const std::string& failure : check.failures) {
            if (++shown > 8) {
                std::printf("        ... %zu more\n", check.failures.size() - 8);
                break;
            }
            std::printf("        %s\n", failure.c_str());
        }
        if (!ok) ++failed;
    }
    if (failed > 0) {
        std::printf("%d of %zu acceptance criteria failed\n", failed, criteria.size());
        return 1;
    }
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
    return 0;
}
