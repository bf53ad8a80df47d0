#include "alertlab/rulelang.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <unordered_map>

#include "alertlab/text.hpp"

namespace alertlab {

std::string_view comparator_symbol(Comparator cmp) {
    switch (cmp) {
        case Comparator::Gt: return ">";
        case Comparator::Ge: return ">=";
        case Comparator::Lt: return "<";
        case Comparator::Le: return "<=";
    }
    return ">";
}

bool compare(Comparator cmp, double lhs, double rhs) {
    switch (cmp) {
        case Comparator::Gt: return lhs > rhs;
        case Comparator::Ge: return lhs >= rhs;
        case Comparator::Lt: return lhs < rhs;
        case Comparator::Le: return lhs <= rhs;
    }
    return false;
}

std::string Diagnostic::to_string() const {
    std::ostringstream out;
    out << (severity == Severity::Error ? "error" : "warning");
    if (line > 0) {
        out << " at line " << line;
        if (column > 0) out << ", column " << column;
    }
    out << ": " << message;
    return out.str();
}

RuleParseError::RuleParseError(Diagnostic diag)
    : Error(diag.to_string()), diagnostic(std::move(diag)) {}

namespace {

// Cursor over one line; columns are 1-based within the original line.
class LineScanner {
public:
    LineScanner(std::string_view line, std::size_t line_no, std::size_t start_col)
        : line_(line), line_no_(line_no), pos_(start_col - 1) {}

    void skip_ws() {
        while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) {
            ++pos_;
        }
    }

    bool at_end() {
        skip_ws();
        return pos_ >= line_.size();
    }

    std::size_t column() const { return pos_ + 1; }
    std::size_t line() const { return line_no_; }
    char peek() const { return pos_ < line_.size() ? line_[pos_] : '\0'; }
    void advance() { ++pos_; }

    bool consume(char c) {
        skip_ws();
        if (pos_ < line_.size() && line_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::optional<std::string_view> identifier() {
        skip_ws();
        std::size_t start = pos_;
        auto head = [](unsigned char c) { return std::isalpha(c) || c == '_'; };
        auto tail = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
        if (pos_ >= line_.size() || !head(static_cast<unsigned char>(line_[pos_]))) {
            return std::nullopt;
        }
        ++pos_;
        while (pos_ < line_.size() && tail(static_cast<unsigned char>(line_[pos_]))) ++pos_;
        return line_.substr(start, pos_ - start);
    }

    // Unsigned decimal integer.
    std::optional<Seconds> integer() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) {
            ++pos_;
        }
        if (pos_ == start) return std::nullopt;
        Seconds v = 0;
        auto [p, ec] = std::from_chars(line_.data() + start, line_.data() + pos_, v);
        if (ec != std::errc() || p != line_.data() + pos_) return std::nullopt;
        return v;
    }

    // [+-]? digits [. digits] [eE [+-]? digits] — validated by strtod.
    std::optional<double> number() {
        skip_ws();
        std::size_t start = pos_;
        std::size_t p = pos_;
        auto digit = [&](std::size_t i) {
            return i < line_.size() && std::isdigit(static_cast<unsigned char>(line_[i]));
        };
        if (p < line_.size() && (line_[p] == '+' || line_[p] == '-')) ++p;
        std::size_t int_start = p;
        while (digit(p)) ++p;
        if (p < line_.size() && line_[p] == '.') {
            ++p;
            while (digit(p)) ++p;
        }
        if (p == int_start || (p == int_start + 1 && line_[int_start] == '.')) {
            return std::nullopt;  // no digits at all
        }
        if (p < line_.size() && (line_[p] == 'e' || line_[p] == 'E')) {
            std::size_t exp = p + 1;
            if (exp < line_.size() && (line_[exp] == '+' || line_[exp] == '-')) ++exp;
            if (digit(exp)) {
                p = exp;
                while (digit(p)) ++p;
            }
        }
        std::string token(line_.substr(start, p - start));
        char* end = nullptr;
        double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size()) return std::nullopt;
        pos_ = p;
        return v;
    }

private:
    std::string_view line_;
    std::size_t line_no_;
    std::size_t pos_;
};

struct ParseFailure {
    Diagnostic diag;
};

[[noreturn]] void fail(const LineScanner& sc, std::string msg) {
    throw ParseFailure{Diagnostic{Severity::Error, std::move(msg), sc.line(), sc.column()}};
}

Seconds parse_duration(LineScanner& sc, std::string_view what) {
    auto value = sc.integer();
    if (!value) fail(sc, std::string(what) + " expects an integer duration");
    sc.skip_ws();
    char unit = sc.peek();
    if (unit != 's' && unit != 'm') {
        fail(sc, Severity::Error,
             std::string(what) + " duration requires an explicit unit (s or m)");
    }
    sc.advance();
    return unit == 'm' ? *value * 60 : *value;
}

Comparator parse_comparator(LineScanner& sc) {
    sc.skip_ws();
    char c = sc.peek();
    if (c != '>' && c != '<') fail(sc, "expected comparator (>, >=, <, <=)");
    sc.advance();
    bool eq = sc.peek() == '=';
    if (eq) sc.advance();
    if (c == '>') return eq ? Comparator::Ge : Comparator::Gt;
    return eq ? Comparator::Le : Comparator::Lt;
}

void parse_expr_line(LineScanner& sc, AlertRule& rule) {
    auto metric = sc.identifier();
    if (!metric) fail(sc, "expected metric identifier");
    rule.metric = std::string(*metric);
    if (!sc.consume('[')) fail(sc, "expected '[' after metric");
    Seconds window = parse_duration(sc, "window");
    if (!sc.consume(']')) fail(sc, "expected ']' after window");
    if (window <= 0) fail(sc, "window must be positive");
    rule.window = window;
    rule.comparator = parse_comparator(sc);
    auto threshold = sc.number();
    if (!threshold) fail(sc, "expected threshold number");
    if (!std::isfinite(*threshold)) fail(sc, "threshold must be finite");
    rule.threshold = *threshold;
}

std::string parse_label_value(LineScanner& sc) {
    sc.skip_ws();
    if (sc.peek() == '"') {
        sc.advance();
        std::string value;
        while (true) {
            char c = sc.peek();
            if (c == '\0') fail(sc, "unterminated quoted label value");
            sc.advance();
            if (c == '"') return value;
            if (c == '\\') {
                char esc = sc.peek();
                if (esc != '"' && esc != '\\') {
                    fail(sc, "unknown escape in label value");
                }
                sc.advance();
                value.push_back(esc);
            } else {
                value.push_back(c);
            }
        }
    }
    std::string value;
    while (true) {
        char c = sc.peek();
        if (c == '\0' || c == ',' || std::isspace(static_cast<unsigned char>(c))) break;
        value.push_back(c);
        sc.advance();
    }
    if (value.empty()) fail(sc, "expected label value");
    return value;
}

void parse_labels_line(LineScanner& sc, AlertRule& rule) {
    while (true) {
        auto key = sc.identifier();
        if (!key) fail(sc, "expected label key identifier");
        if (!sc.consume('=')) fail(sc, "expected '=' after label key");
        std::string value = parse_label_value(sc);
        if (rule.labels.count(std::string(*key)) > 0) {
            fail(sc, "duplicate label key '" + std::string(*key) + "'");
        }
        rule.labels[std::string(*key)] = std::move(value);
        if (sc.at_end()) break;
        if (!sc.consume(',')) fail(sc, "expected ',' between labels");
    }
}

bool label_value_needs_quoting(std::string_view value) {
    if (value.empty()) return true;
    for (char c : value) {
        if (c == ',' || c == '"' || c == '\\' ||
            std::isspace(static_cast<unsigned char>(c))) {
            return true;
        }
    }
    return false;
}

}  // namespace

ParseOutcome try_parse_rule(std::string_view text) {
    ParseOutcome outcome;
    AlertRule rule;
    bool seen_alert = false, seen_expr = false, seen_for = false, seen_labels = false;

    const auto lines = split_lines(text);
    try {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::string_view line = lines[i];
            const std::size_t line_no = i + 1;
            if (trim(line).empty()) continue;

            std::size_t colon = line.find(':');
            LineScanner key_sc(line, line_no, 1);
            if (colon == std::string_view::npos) {
                fail(key_sc, "expected '<directive>: <value>'");
            }
            std::string_view key = trim(line.substr(0, colon));
            LineScanner sc(line, line_no, colon + 2);

            if (key == "alert") {
                if (seen_alert) fail(key_sc, "duplicate alert line");
                seen_alert = true;
                auto name = sc.identifier();
                if (!name) fail(sc, "expected rule name identifier");
                rule.name = std::string(*name);
            } else if (key == "expr") {
                if (seen_expr) fail(key_sc, "duplicate expr line");
                seen_expr = true;
                parse_expr_line(sc, rule);
            } else if (key == "for") {
                if (seen_for) fail(key_sc, "duplicate for line");
                seen_for = true;
                rule.for_duration = parse_duration(sc, "for");
            } else if (key == "labels") {
                if (seen_labels) fail(key_sc, "duplicate labels line");
                seen_labels = true;
                parse_labels_line(sc, rule);
            } else {
                fail(key_sc, "unknown directive '" + std::string(key) + "'");
            }

            if (!sc.at_end()) {
                fail(sc, "unexpected trailing input");
            }
        }
        if (!seen_alert) {
            throw ParseFailure{Diagnostic{Severity::Error, "missing alert line", 0, 0}};
        }
        if (!seen_expr) {
            throw ParseFailure{Diagnostic{Severity::Error, "missing expr line", 0, 0}};
        }
        outcome.rule = std::move(rule);
    } catch (const ParseFailure& f) {
        outcome.diagnostics.push_back(f.diag);
    }
    return outcome;
}

AlertRule parse_rule(std::string_view text) {
    ParseOutcome outcome = try_parse_rule(text);
    if (!outcome.ok()) throw RuleParseError(outcome.diagnostics.front());
    return *outcome.rule;
}

std::string format_rule(const AlertRule& rule) {
    std::ostringstream out;
    out << "alert: " << rule.name << '\n';

    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), rule.threshold);
    out << "expr: " << rule.metric << '[' << rule.window << "s] "
        << comparator_symbol(rule.comparator) << ' ' << std::string_view(buf, p - buf) << '\n';

    if (rule.for_duration > 0) {
        out << "for: " << rule.for_duration << "s\n";
    }
    if (!rule.labels.empty()) {
        out << "labels: ";
        bool first = true;
        for (const auto& [key, value] : rule.labels) {
            if (!first) out << ", ";
            first = false;
            out << key << '=';
            if (label_value_needs_quoting(value)) {
                out << '"';
                for (char c : value) {
                    if (c == '"' || c == '\\') out << '\\';
                    out << c;
                }
                out << '"';
            } else {
                out << value;
            }
        }
        out << '\n';
    }
    return out.str();
}

std::vector<Diagnostic> lint_rules(const std::vector<std::string>& documents,
                                   const LintOptions& options) {
    std::vector<Diagnostic> diagnostics;
    std::unordered_map<std::string, std::size_t> first_seen;

    for (std::size_t doc = 0; doc < documents.size(); ++doc) {
        ParseOutcome outcome = try_parse_rule(documents[doc]);
        if (!outcome.ok()) {
            for (Diagnostic d : outcome.diagnostics) {
                d.document = doc;
                diagnostics.push_back(std::move(d));
            }
            continue;
        }
        const AlertRule& rule = *outcome.rule;

        auto [it, inserted] = first_seen.emplace(rule.name, doc);
        if (!inserted) {
            diagnostics.push_back(Diagnostic{
                Severity::Error,
                "duplicate rule name '" + rule.name + "' (first defined in document " +
                    std::to_string(it->second + 1) + ")",
                0, 0, doc});
        }

        if (options.ratio_metrics.count(rule.metric) > 0 &&
            (rule.threshold < 0.0 || rule.threshold > 1.0)) {
            std::ostringstream msg;
            msg << "threshold " << rule.threshold << " outside [0,1] for ratio metric '"
                << rule.metric << "'";
            diagnostics.push_back(Diagnostic{Severity::Warning, msg.str(), 0, 0, doc});
        }
    }
    return diagnostics;
}

std::vector<std::string> split_rule_documents(std::string_view file_contents) {
    std::vector<std::string> documents;
    std::string current;
    for (std::string_view line : split_lines(file_contents)) {
        if (trim(line) == "---") {
            documents.push_back(current);
            current.clear();
        } else {
            current.append(line);
            current.push_back('\n');
        }
    }
    if (!trim(current).empty() || documents.empty()) {
        documents.push_back(current);
    }
    return documents;
}

}  // namespace alertlab
