#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "alertlab/timeseries.hpp"

namespace alertlab {

struct WorkloadSpec {
    int users = 0;
    double per_user_rps = 1.0;
    Seconds duration = 0;
    Seconds warmup = 0;  // requestRate ramps linearly to full load over this span

    friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

/// One injected degradation interval [start, end); magnitude is the packet
/// loss probability.
struct FaultWindow {
    std::string treatment;
    Seconds start = 0;
    Seconds end = 0;
    double magnitude = 0.0;

    friend bool operator==(const FaultWindow&, const FaultWindow&) = default;
};

struct FaultPhase {
    Seconds duration = 0;
    double magnitude = 0.0;

    friend bool operator==(const FaultPhase&, const FaultPhase&) = default;
};

/// A repeated multi-phase fault pattern: within a repetition, phase k starts
/// inter_phase_gap after phase k-1 ends; repetition r+1 starts cooldown after
/// repetition r ends.
struct FaultPatternSpec {
    std::vector<FaultPhase> phases;
    Seconds inter_phase_gap = 0;
    int repetitions = 1;
    Seconds cooldown = 0;
    Seconds first_start = 0;
    std::string treatment = "packet_loss";

    friend bool operator==(const FaultPatternSpec&, const FaultPatternSpec&) = default;
};

/// Packet-loss -> error-rate transfer: errorRate = clamp(base + gain * loss, 0, 1)
/// plus seeded gaussian noise; the fault effect ramps linearly over `ramp`
/// seconds at each window edge.
struct ErrorModel {
    double base_error_rate = 0.005;
    double loss_to_error_gain = 0.8;
    double noise_std = 0.004;
    Seconds ramp = 10;

    friend bool operator==(const ErrorModel&, const ErrorModel&) = default;
};

std::vector<FaultWindow> build_fault_schedule(const FaultPatternSpec& pattern);

/// Throws ScheduleOverlapError / NonPositiveIntervalError / ValueError.
void validate_schedule(const std::vector<FaultWindow>& schedule);

/// Ramp-scaled loss probability at time t; 0 outside all windows.
double effective_loss(const std::vector<FaultWindow>& schedule, Seconds t, Seconds ramp);

struct SimulationResult {
    std::vector<TimeSeries> series;  // errorRate (ratio), requestRate (gauge)
    std::vector<FaultWindow> schedule;
};

/// Fully deterministic given its inputs and seed: same seed, same bytes.
SimulationResult simulate(const WorkloadSpec& workload, std::vector<FaultWindow> schedule,
                          const ErrorModel& model, Seconds scrape_interval, std::uint64_t seed);

// Fault schedule CSV: header `treatment,start,end,magnitude`.
std::string schedule_to_csv(const std::vector<FaultWindow>& schedule);
std::vector<FaultWindow> schedule_from_csv(std::string_view text);
void write_fault_schedule_csv(const std::vector<FaultWindow>& schedule,
                              const std::filesystem::path& path);
std::vector<FaultWindow> load_fault_schedule_csv(const std::filesystem::path& path);

/// Seeded standard-normal stream with a pinned algorithm (Box-Muller over
/// mt19937_64 bits), so simulations reproduce bit-for-bit everywhere;
/// std::normal_distribution is implementation-defined and is avoided.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}
    double next();

private:
    double uniform01();  // (0, 1]
    std::mt19937_64 rng_;
    std::optional<double> spare_;
};

}  // namespace alertlab
