#include "alertlab/suesim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "alertlab/text.hpp"

namespace alertlab {

double GaussianSampler::uniform01() {
    // 53 random bits mapped to (0, 1]; never 0, so log() below is safe.
    return static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53;
}

double GaussianSampler::next() {
    if (spare_) {
        double v = *spare_;
        spare_.reset();
        return v;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

std::vector<FaultWindow> build_fault_schedule(const FaultPatternSpec& pattern) {
    if (pattern.repetitions < 1) throw ValueError("repetitions must be >= 1");
    if (pattern.phases.empty()) throw ValueError("pattern needs at least one phase");
    if (pattern.inter_phase_gap < 0 || pattern.cooldown < 0 || pattern.first_start < 0) {
        throw ValueError("pattern gaps and first_start must be non-negative");
    }
    for (const FaultPhase& phase : pattern.phases) {
        if (phase.duration <= 0) throw NonPositiveIntervalError("phase duration must be positive");
        if (phase.magnitude < 0.0 || phase.magnitude > 1.0) {
            throw ValueError("phase magnitude must be in [0,1]");
        }
    }

    std::vector<FaultWindow> schedule;
    schedule.reserve(static_cast<std::size_t>(pattern.repetitions) * pattern.phases.size());
    Seconds t = pattern.first_start;
    for (int rep = 0; rep < pattern.repetitions; ++rep) {
        if (rep > 0) t += pattern.cooldown;
        for (std::size_t k = 0; k < pattern.phases.size(); ++k) {
            if (k > 0) t += pattern.inter_phase_gap;
            const FaultPhase& phase = pattern.phases[k];
            schedule.push_back({pattern.treatment, t, t + phase.duration, phase.magnitude});
            t += phase.duration;
        }
    }
    return schedule;
}

void validate_schedule(const std::vector<FaultWindow>& schedule) {
    const FaultWindow* prev = nullptr;
    for (const FaultWindow& w : schedule) {
        if (w.start < 0 || w.start >= w.end) {
            throw NonPositiveIntervalError("fault window [" + std::to_string(w.start) + ", " +
                                           std::to_string(w.end) + ") is not a positive interval");
        }
        if (w.magnitude < 0.0 || w.magnitude > 1.0) {
            throw ValueError("fault magnitude must be in [0,1]");
        }
        if (prev && w.start < prev->end) {
            throw ScheduleOverlapError("fault windows overlap or are unsorted at t=" +
                                       std::to_string(w.start));
        }
        prev = &w;
    }
}

double effective_loss(const std::vector<FaultWindow>& schedule, Seconds t, Seconds ramp) {
    // Schedules are sorted and non-overlapping, so at most one window covers t.
    for (const FaultWindow& w : schedule) {
        if (t < w.start) break;
        if (t >= w.end) continue;
        if (ramp <= 0) return w.magnitude;
        const double up = static_cast<double>(t - w.start) / static_cast<double>(ramp);
        const double down = static_cast<double>(w.end - t) / static_cast<double>(ramp);
        return w.magnitude * std::clamp(std::min(up, down), 0.0, 1.0);
    }
    return 0.0;
}

SimulationResult simulate(const WorkloadSpec& workload, std::vector<FaultWindow> schedule,
                          const ErrorModel& model, Seconds scrape_interval, std::uint64_t seed) {
    if (scrape_interval <= 0) throw NonPositiveIntervalError("scrape interval must be positive");
    if (workload.users <= 0) throw ValueError("users must be positive");
    if (workload.per_user_rps <= 0.0) throw ValueError("per_user_rps must be positive");
    if (workload.warmup < 0 || workload.duration <= workload.warmup) {
        throw ValueError("workload requires duration > warmup >= 0");
    }
    if (model.base_error_rate < 0.0 || model.loss_to_error_gain < 0.0 ||
        model.noise_std < 0.0 || model.ramp < 0) {
        throw ValueError("error model parameters must be non-negative");
    }
    validate_schedule(schedule);

    GaussianSampler noise(seed);
    const double nominal_rate = workload.users * workload.per_user_rps;

    std::vector<MetricSample> error_samples;
    std::vector<MetricSample> request_samples;
    for (Seconds t = 0; t <= workload.duration; t += scrape_interval) {
        // Draw order is part of the output contract: error noise, then request
        // noise, one pair per grid point.
        const double loss = effective_loss(schedule, t, model.ramp);
        double err = model.base_error_rate + model.loss_to_error_gain * loss +
                     noise.next() * model.noise_std;
        err = quantize_value(std::clamp(err, 0.0, 1.0));
        error_samples.push_back({t, err});

        const double warm = workload.warmup == 0
                                ? 1.0
                                : std::min(1.0, static_cast<double>(t) /
                                                    static_cast<double>(workload.warmup));
        double req = nominal_rate * warm * (1.0 + noise.next() * model.noise_std);
        req = quantize_value(std::max(0.0, req));
        request_samples.push_back({t, req});
    }

    TimeSeries::Labels labels{{"service", "frontend"}};
    SimulationResult result;
    result.series.emplace_back("errorRate", labels, scrape_interval, std::move(error_samples),
                               SeriesKind::Ratio);
    result.series.emplace_back("requestRate", labels, scrape_interval,
                               std::move(request_samples), SeriesKind::Gauge);
    result.schedule = std::move(schedule);
    return result;
}

std::string schedule_to_csv(const std::vector<FaultWindow>& schedule) {
    std::ostringstream out;
    out << "treatment,start,end,magnitude\n";
    for (const FaultWindow& w : schedule) {
        out << w.treatment << ',' << w.start << ',' << w.end << ',' << format_value(w.magnitude)
            << '\n';
    }
    return out.str();
}

std::vector<FaultWindow> schedule_from_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "treatment,start,end,magnitude") {
        throw CsvParseError("expected 'treatment,start,end,magnitude' header", 1);
    }
    std::vector<FaultWindow> schedule;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string_view line = trim(lines[i]);
        if (line.empty()) continue;

        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (fields.size() < 3) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string_view::npos) throw CsvParseError("expected 4 fields", i + 1);
            fields.push_back(trim(line.substr(pos, comma - pos)));
            pos = comma + 1;
        }
        fields.push_back(trim(line.substr(pos)));

        FaultWindow w;
        w.treatment = std::string(fields[0]);
        auto parse_time = [&](std::string_view f) {
            Seconds v = 0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size()) {
                throw CsvParseError("invalid timestamp '" + std::string(f) + "'", i + 1);
            }
            return v;
        };
        w.start = parse_time(fields[1]);
        w.end = parse_time(fields[2]);
        std::string mag{fields[3]};
        char* end = nullptr;
        w.magnitude = std::strtod(mag.c_str(), &end);
        if (mag.empty() || end != mag.c_str() + mag.size()) {
            throw CsvParseError("invalid magnitude '" + mag + "'", i + 1);
        }
        schedule.push_back(std::move(w));
    }
    validate_schedule(schedule);
    return schedule;
}

void write_fault_schedule_csv(const std::vector<FaultWindow>& schedule,
                              const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write schedule file: " + path.string());
    out << schedule_to_csv(schedule);
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<FaultWindow> load_fault_schedule_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open schedule file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return schedule_from_csv(buf.str());
}

}  // namespace alertlab
