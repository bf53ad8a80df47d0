#include "alertlab/timeseries.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "alertlab/text.hpp"

namespace alertlab {

namespace {

Seconds floor_div(Seconds a, Seconds b) {
    Seconds q = a / b;
    Seconds r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

TimeSeries::TimeSeries(std::string name, Labels labels, Seconds scrape_interval,
                       std::vector<MetricSample> samples, SeriesKind kind)
    : name_(std::move(name)),
      labels_(std::move(labels)),
      scrape_interval_(scrape_interval),
      kind_(kind),
      samples_(std::move(samples)) {
    if (!is_identifier(name_)) {
        throw ValueError("series name must be an identifier: '" + name_ + "'");
    }
    if (scrape_interval_ <= 0) {
        throw GridError("scrape interval must be positive");
    }
    Seconds prev = -1;
    for (const MetricSample& s : samples_) {
        if (s.timestamp < 0 || s.timestamp % scrape_interval_ != 0) {
            throw GridError("sample timestamp " + std::to_string(s.timestamp) +
                            " is not on the scrape grid");
        }
        if (prev >= 0 && s.timestamp != prev + scrape_interval_) {
            throw GridError("sample timestamps must advance by exactly the scrape interval (" +
                            std::to_string(prev) + " -> " + std::to_string(s.timestamp) + ")");
        }
        if (!std::isfinite(s.value)) {
            throw ValueError("sample value at t=" + std::to_string(s.timestamp) +
                             " is not finite");
        }
        if (kind_ == SeriesKind::Ratio && (s.value < 0.0 || s.value > 1.0)) {
            throw ValueError("ratio sample at t=" + std::to_string(s.timestamp) +
                             " outside [0,1]");
        }
        prev = s.timestamp;
    }
}

std::optional<double> TimeSeries::window_average(Seconds t, Seconds window) const {
    if (window <= 0) throw ValueError("window must be positive");
    if (samples_.empty()) return std::nullopt;

    const Seconds t0 = samples_.front().timestamp;
    const Seconds step = scrape_interval_;
    // Sample i sits at t0 + i*step; keep indices with t-window < ts <= t.
    Seconds lo = floor_div(t - window - t0, step) + 1;
    Seconds hi = floor_div(t - t0, step);
    lo = std::max<Seconds>(lo, 0);
    hi = std::min<Seconds>(hi, static_cast<Seconds>(samples_.size()) - 1);
    if (lo > hi) return std::nullopt;

    // Extended precision keeps boundary comparisons exact: a mean whose true
    // value is representable (e.g. nine 0.06 samples over eighteen) comes out
    // bit-exact instead of one ulp above it.
    long double sum = 0.0L;
    for (Seconds i = lo; i <= hi; ++i) {
        sum += samples_[static_cast<std::size_t>(i)].value;
    }
    return static_cast<double>(sum / static_cast<long double>(hi - lo + 1));
}

TimeSeries TimeSeries::slice(Seconds t_start, Seconds t_end) const {
    if (t_start < 0 || t_start > t_end) {
        throw ValueError("slice requires 0 <= t_start <= t_end");
    }
    std::vector<MetricSample> out;
    if (!samples_.empty()) {
        const Seconds t0 = samples_.front().timestamp;
        const Seconds step = scrape_interval_;
        Seconds lo = floor_div(t_start - t0 + step - 1, step);
        Seconds hi = floor_div(t_end - t0, step);
        lo = std::max<Seconds>(lo, 0);
        hi = std::min<Seconds>(hi, static_cast<Seconds>(samples_.size()) - 1);
        for (Seconds i = lo; i <= hi; ++i) {
            out.push_back(samples_[static_cast<std::size_t>(i)]);
        }
    }
    return TimeSeries(name_, labels_, scrape_interval_, std::move(out), kind_);
}

std::string series_to_csv(const TimeSeries& series) {
    std::ostringstream out;
    out << "# series: " << series.name() << " interval=" << series.scrape_interval();
    if (series.kind() == SeriesKind::Ratio) out << " kind=ratio";
    for (const auto& [key, value] : series.labels()) {
        out << ' ' << key << '=' << value;
    }
    out << "\ntimestamp,value\n";
    for (const MetricSample& s : series.samples()) {
        out << s.timestamp << ',' << format_value(s.value) << '\n';
    }
    return out.str();
}

TimeSeries series_from_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw CsvParseError("empty series file", 1);

    static constexpr std::string_view kSidecar = "# series:";
    std::string_view header = trim(lines[0]);
    if (header.substr(0, kSidecar.size()) != kSidecar) {
        throw CsvParseError("expected '# series:' sidecar line", 1);
    }

    std::istringstream tokens{std::string(header.substr(kSidecar.size()))};
    std::string name;
    if (!(tokens >> name) || !is_identifier(name)) {
        throw CsvParseError("series name missing or not an identifier", 1);
    }
    std::optional<Seconds> interval;
    SeriesKind kind = SeriesKind::Gauge;
    TimeSeries::Labels labels;
    std::string token;
    while (tokens >> token) {
        std::size_t eq = token.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw CsvParseError("expected key=value token, got '" + token + "'", 1);
        }
        std::string key = token.substr(0, eq);
        std::string value = token.substr(eq + 1);
        if (key == "interval") {
            Seconds v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size() || v <= 0) {
                throw CsvParseError("invalid interval '" + value + "'", 1);
            }
            interval = v;
        } else if (key == "kind") {
            if (value == "ratio") {
                kind = SeriesKind::Ratio;
            } else if (value == "gauge") {
                kind = SeriesKind::Gauge;
            } else {
                throw CsvParseError("unknown series kind '" + value + "'", 1);
            }
        } else {
            if (!is_identifier(key)) {
                throw CsvParseError("label key must be an identifier: '" + key + "'", 1);
            }
            labels[key] = value;
        }
    }
    if (!interval) throw CsvParseError("sidecar line is missing interval=<seconds>", 1);

    if (lines.size() < 2 || trim(lines[1]) != "timestamp,value") {
        throw CsvParseError("expected 'timestamp,value' header", 2);
    }

    std::vector<MetricSample> samples;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        std::string_view line = trim(lines[i]);
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string_view::npos) {
            throw CsvParseError("expected 'timestamp,value' row", i + 1);
        }
        std::string_view ts_text = trim(line.substr(0, comma));
        std::string value_text{trim(line.substr(comma + 1))};

        Seconds ts = 0;
        auto [p, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
        if (ec != std::errc() || p != ts_text.data() + ts_text.size()) {
            throw CsvParseError("invalid timestamp '" + std::string(ts_text) + "'", i + 1);
        }
        char* end = nullptr;
        double value = std::strtod(value_text.c_str(), &end);
        if (value_text.empty() || end != value_text.c_str() + value_text.size()) {
            throw CsvParseError("invalid value '" + value_text + "'", i + 1);
        }
        samples.push_back({ts, value});
    }
    return TimeSeries(name, std::move(labels), *interval, std::move(samples), kind);
}

TimeSeries load_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open series file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return series_from_csv(buf.str());
}

void write_series_csv(const TimeSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write series file: " + path.string());
    out << series_to_csv(series);
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace alertlab
