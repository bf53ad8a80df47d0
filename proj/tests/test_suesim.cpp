#include <doctest.h>

#include <filesystem>
#include <random>

#include "alertlab/suesim.hpp"

using namespace alertlab;

namespace {

FaultPatternSpec reference_pattern() {
    FaultPatternSpec pattern;
    pattern.phases = {{60, 0.10}, {60, 0.18}, {60, 0.25}};
    pattern.inter_phase_gap = 60;
    pattern.repetitions = 6;
    pattern.cooldown = 240;
    pattern.first_start = 120;
    return pattern;
}

WorkloadSpec small_workload(Seconds duration = 600) {
    return {800, 1.0, duration, 0};
}

const TimeSeries& error_series(const SimulationResult& sim) {
    for (const TimeSeries& s : sim.series) {
        if (s.name() == "errorRate") return s;
    }
    REQUIRE(false);
    return sim.series.front();
}

}  // namespace

TEST_SUITE_BEGIN("suesim");

TEST_CASE("reference pattern unrolls to 18 windows with 300 s repetitions") {
    const auto schedule = build_fault_schedule(reference_pattern());
    REQUIRE(schedule.size() == 18);
    validate_schedule(schedule);

    // repetition starts: 120, then +300 pattern span +240 cooldown
    for (int rep = 0; rep < 6; ++rep) {
        const Seconds start = 120 + rep * (300 + 240);
        CHECK(schedule[rep * 3].start == start);
        CHECK(schedule[rep * 3].end == start + 60);
        CHECK(schedule[rep * 3 + 1].start == start + 120);
        CHECK(schedule[rep * 3 + 2].start == start + 240);
        CHECK(schedule[rep * 3 + 2].end == start + 300);
        CHECK(schedule[rep * 3].magnitude == 0.10);
        CHECK(schedule[rep * 3 + 2].magnitude == 0.25);
    }
    CHECK(schedule.back().end == 2820 + 300);
}

TEST_CASE("single repetition, single phase") {
    FaultPatternSpec pattern;
    pattern.phases = {{45, 0.5}};
    pattern.first_start = 30;
    const auto schedule = build_fault_schedule(pattern);
    REQUIRE(schedule.size() == 1);
    CHECK(schedule[0] == FaultWindow{"packet_loss", 30, 75, 0.5});
}

TEST_CASE("zero gap phases abut without overlapping") {
    FaultPatternSpec pattern;
    pattern.phases = {{30, 0.1}, {30, 0.2}};
    pattern.inter_phase_gap = 0;
    const auto schedule = build_fault_schedule(pattern);
    REQUIRE(schedule.size() == 2);
    CHECK(schedule[0].end == schedule[1].start);
    CHECK_NOTHROW(validate_schedule(schedule));
}

TEST_CASE("pattern validation") {
    FaultPatternSpec bad = reference_pattern();
    bad.repetitions = 0;
    CHECK_THROWS_AS((void)build_fault_schedule(bad), ValueError);
    bad = reference_pattern();
    bad.phases[0].duration = 0;
    CHECK_THROWS_AS((void)build_fault_schedule(bad), NonPositiveIntervalError);
    bad = reference_pattern();
    bad.phases[0].magnitude = 1.5;
    CHECK_THROWS_AS((void)build_fault_schedule(bad), ValueError);
}

TEST_CASE("no faults and no noise yields the flat base error rate") {
    ErrorModel model;
    model.noise_std = 0.0;
    const auto sim = simulate(small_workload(), {}, model, 5, 1);
    for (const MetricSample& s : error_series(sim).samples()) {
        CHECK(s.value == 0.005);
    }
}

TEST_CASE("transfer function: base + gain * magnitude inside the window") {
    ErrorModel model;
    model.noise_std = 0.0;
    model.ramp = 0;
    const std::vector<FaultWindow> schedule{{"packet_loss", 100, 200, 0.25}};
    const auto sim = simulate(small_workload(300), schedule, model, 5, 1);
    for (const MetricSample& s : error_series(sim).samples()) {
        const bool inside = s.timestamp >= 100 && s.timestamp < 200;
        CHECK(s.value == (inside ? 0.205 : 0.005));
    }
}

TEST_CASE("ramp scales the fault effect linearly at both edges") {
    const std::vector<FaultWindow> schedule{{"packet_loss", 100, 160, 0.2}};
    CHECK(effective_loss(schedule, 100, 10) == 0.0);
    CHECK(effective_loss(schedule, 105, 10) == doctest::Approx(0.1));
    CHECK(effective_loss(schedule, 110, 10) == doctest::Approx(0.2));
    CHECK(effective_loss(schedule, 130, 10) == doctest::Approx(0.2));
    CHECK(effective_loss(schedule, 150, 10) == doctest::Approx(0.2));
    CHECK(effective_loss(schedule, 155, 10) == doctest::Approx(0.1));
    CHECK(effective_loss(schedule, 160, 10) == 0.0);
    CHECK(effective_loss(schedule, 95, 10) == 0.0);
    // ramp 0 is a step
    CHECK(effective_loss(schedule, 100, 0) == doctest::Approx(0.2));
}

TEST_CASE("same seed reproduces the simulation exactly") {
    const auto schedule = build_fault_schedule(reference_pattern());
    const auto a = simulate(small_workload(3300), schedule, {}, 5, 42);
    const auto b = simulate(small_workload(3300), schedule, {}, 5, 42);
    CHECK(a.series == b.series);
    CHECK(a.schedule == b.schedule);
}

TEST_CASE("different seeds differ only through the noise term") {
    const std::vector<FaultWindow> schedule{{"packet_loss", 50, 150, 0.3}};
    const auto a = simulate(small_workload(), schedule, {}, 5, 1);
    const auto b = simulate(small_workload(), schedule, {}, 5, 2);
    CHECK(error_series(a).samples() != error_series(b).samples());

    ErrorModel quiet;
    quiet.noise_std = 0.0;
    const auto qa = simulate(small_workload(), schedule, quiet, 5, 1);
    const auto qb = simulate(small_workload(), schedule, quiet, 5, 2);
    CHECK(qa.series == qb.series);
}

TEST_CASE("error rate stays in [0,1] for fuzzed parameters") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> gain(0.0, 5.0);
    std::uniform_real_distribution<double> noise(0.0, 0.5);
    for (int i = 0; i < 50; ++i) {
        ErrorModel model;
        model.base_error_rate = unit(rng);
        model.loss_to_error_gain = gain(rng);
        model.noise_std = noise(rng);
        model.ramp = static_cast<Seconds>(rng() % 30);
        const std::vector<FaultWindow> schedule{{"packet_loss", 20, 120, unit(rng)}};
        const auto sim = simulate(small_workload(200), schedule, model, 5, rng());
        for (const MetricSample& s : error_series(sim).samples()) {
            CHECK(s.value >= 0.0);
            CHECK(s.value <= 1.0);
        }
    }
}

TEST_CASE("zero-noise error rate is monotone in magnitude and gain") {
    ErrorModel quiet;
    quiet.noise_std = 0.0;
    auto run = [&](double magnitude, double gain) {
        ErrorModel model = quiet;
        model.loss_to_error_gain = gain;
        return simulate(small_workload(300),
                        {{"packet_loss", 50, 200, magnitude}}, model, 5, 1);
    };
    const auto low = run(0.10, 0.8);
    const auto high = run(0.25, 0.8);
    const auto hot = run(0.25, 1.5);
    for (std::size_t i = 0; i < error_series(low).size(); ++i) {
        const double a = error_series(low).samples()[i].value;
        const double b = error_series(high).samples()[i].value;
        const double c = error_series(hot).samples()[i].value;
        CHECK(a <= b + 1e-15);
        CHECK(b <= c + 1e-15);
    }
}

TEST_CASE("default model pushes a 10% loss phase well past the 3% threshold") {
    ErrorModel quiet;
    quiet.noise_std = 0.0;
    const auto sim =
        simulate(small_workload(300), {{"packet_loss", 50, 200, 0.10}}, quiet, 5, 1);
    double peak = 0.0;
    for (const MetricSample& s : error_series(sim).samples()) peak = std::max(peak, s.value);
    CHECK(peak >= 0.085 - 1e-12);
}

TEST_CASE("warmup ramps the request rate, not the error rate") {
    ErrorModel quiet;
    quiet.noise_std = 0.0;
    WorkloadSpec workload{800, 1.0, 300, 100};
    const auto sim = simulate(workload, {}, quiet, 5, 1);
    const TimeSeries* request = nullptr;
    for (const TimeSeries& s : sim.series) {
        if (s.name() == "requestRate") request = &s;
    }
    REQUIRE(request != nullptr);
    CHECK(request->samples()[0].value == 0.0);          // t = 0
    CHECK(request->samples()[10].value == 400.0);       // t = 50, half the ramp
    CHECK(request->samples()[20].value == 800.0);       // t = 100, fully warm
    CHECK(request->samples().back().value == 800.0);
    for (const MetricSample& s : error_series(sim).samples()) CHECK(s.value == 0.005);
}

TEST_CASE("simulate validates its inputs") {
    CHECK_THROWS_AS((void)simulate(small_workload(), {}, {}, 0, 1), NonPositiveIntervalError);
    CHECK_THROWS_AS((void)simulate({0, 1.0, 100, 0}, {}, {}, 5, 1), ValueError);
    CHECK_THROWS_AS((void)simulate({800, 1.0, 100, 100}, {}, {}, 5, 1), ValueError);
    CHECK_THROWS_AS(
        (void)simulate(small_workload(),
                       {{"packet_loss", 50, 150, 0.2}, {"packet_loss", 100, 200, 0.2}}, {}, 5, 1),
        ScheduleOverlapError);
    CHECK_THROWS_AS((void)simulate(small_workload(), {{"packet_loss", 50, 50, 0.2}}, {}, 5, 1),
                    NonPositiveIntervalError);
    CHECK_THROWS_AS((void)simulate(small_workload(), {{"packet_loss", 50, 60, 1.2}}, {}, 5, 1),
                    ValueError);
}

TEST_CASE("fault schedule CSV round-trips and validates") {
    const auto schedule = build_fault_schedule(reference_pattern());
    const std::string text = schedule_to_csv(schedule);
    CHECK(schedule_from_csv(text) == schedule);

    const auto path = std::filesystem::temp_directory_path() / "alertlab_schedule_test.csv";
    write_fault_schedule_csv(schedule, path);
    CHECK(load_fault_schedule_csv(path) == schedule);
    std::filesystem::remove(path);

    CHECK_THROWS_AS((void)schedule_from_csv("bogus\n"), CsvParseError);
    CHECK_THROWS_AS((void)schedule_from_csv("treatment,start,end,magnitude\np,10,x,0.5\n"),
                    CsvParseError);
    CHECK_THROWS_AS(
        (void)schedule_from_csv("treatment,start,end,magnitude\np,10,60,0.5\np,50,80,0.5\n"),
        ScheduleOverlapError);
}

TEST_CASE("gaussian sampler is a pinned deterministic stream") {
    GaussianSampler a(7), b(7), c(8);
    for (int i = 0; i < 100; ++i) {
        const double va = a.next();
        CHECK(va == b.next());
        CHECK(std::isfinite(va));
    }
    bool any_diff = false;
    GaussianSampler a2(7);
    for (int i = 0; i < 100; ++i) any_diff = any_diff || a2.next() != c.next();
    CHECK(any_diff);
}

TEST_SUITE_END();
