#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace alertlab {

// Identifiers: [A-Za-z_][A-Za-z0-9_]*
bool is_identifier(std::string_view s);

std::string_view trim(std::string_view s);

// Splits on '\n'; a trailing newline does not produce an extra element.
std::vector<std::string_view> split_lines(std::string_view text);

// Fixed decimal notation with at most nine fractional digits, trailing
// zeros trimmed ("0.205", "800", "0.000000001").
std::string format_value(double v);

// Nearest value representable by format_value; format/parse round-trips
// exactly on quantized values.
double quantize_value(double v);

}  // namespace alertlab
