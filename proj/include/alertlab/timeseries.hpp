#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alertlab/errors.hpp"

namespace alertlab {

// Timestamps and durations are integer seconds so grid arithmetic stays exact.
using Seconds = std::int64_t;

struct MetricSample {
    Seconds timestamp = 0;
    double value = 0.0;

    friend bool operator==(const MetricSample&, const MetricSample&) = default;
};

// Ratio series carry values in [0,1] (error rates); gauges are unconstrained.
enum class SeriesKind { Gauge, Ratio };

/// Regularly sampled metric stream. Consecutive sample timestamps differ by
/// exactly the scrape interval. Immutable after construction; safe to share
/// across threads.
class TimeSeries {
public:
    using Labels = std::map<std::string, std::string>;

    /// Validates the grid and value invariants; throws GridError/ValueError.
    TimeSeries(std::string name, Labels labels, Seconds scrape_interval,
               std::vector<MetricSample> samples, SeriesKind kind = SeriesKind::Gauge);

    const std::string& name() const { return name_; }
    const Labels& labels() const { return labels_; }
    Seconds scrape_interval() const { return scrape_interval_; }
    SeriesKind kind() const { return kind_; }
    const std::vector<MetricSample>& samples() const { return samples_; }
    bool empty() const { return samples_.empty(); }
    std::size_t size() const { return samples_.size(); }

    /// Mean of the samples with timestamp in the half-open window (t-window, t];
    /// nullopt when the window holds no sample. Partial windows use whatever
    /// samples are present.
    std::optional<double> window_average(Seconds t, Seconds window) const;

    /// Sub-series with timestamps in [t_start, t_end]; keeps name, labels,
    /// kind, and scrape interval.
    TimeSeries slice(Seconds t_start, Seconds t_end) const;

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::string name_;
    Labels labels_;
    Seconds scrape_interval_;
    SeriesKind kind_;
    std::vector<MetricSample> samples_;
};

// CSV format (see docs/file-formats.md): a `# series:` sidecar line carrying
// name, scrape interval, kind, and labels, then a `timestamp,value` header
// and one row per sample.
TimeSeries load_series_csv(const std::filesystem::path& path);
void write_series_csv(const TimeSeries& series, const std::filesystem::path& path);

std::string series_to_csv(const TimeSeries& series);
TimeSeries series_from_csv(std::string_view text);

}  // namespace alertlab
