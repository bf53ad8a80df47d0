#include "alertlab/text.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>

namespace alertlab {

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto head = [](unsigned char c) { return std::isalpha(c) || c == '_'; };
    auto tail = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
    if (!head(static_cast<unsigned char>(s.front()))) return false;
    for (char c : s.substr(1)) {
        if (!tail(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    std::string s(buf);
    std::size_t dot = s.find('.');
    std::size_t last = s.find_last_not_of('0');
    s.erase(last == dot ? dot : last + 1);
    if (s == "-0") s = "0";
    return s;
}

double quantize_value(double v) {
    return std::strtod(format_value(v).c_str(), nullptr);
}

}  // namespace alertlab
