#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alertlab {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Domain value out of range (non-finite sample, bad magnitude, ...).
struct ValueError : Error {
    using Error::Error;
};

// Sample timestamps off the scrape grid or not strictly increasing.
struct GridError : Error {
    using Error::Error;
};

// Malformed CSV input; carries the 1-based line number.
struct CsvParseError : Error {
    CsvParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
    std::size_t line;
};

struct ScheduleOverlapError : Error {
    using Error::Error;
};

struct NonPositiveIntervalError : Error {
    using Error::Error;
};

struct MetricMismatchError : Error {
    using Error::Error;
};

struct UnsortedInputError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace alertlab
