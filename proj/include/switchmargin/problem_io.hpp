#pragma once

// Problem-file parsing (a small TOML subset: comments, [sections],
// key = value with numbers, strings, and nested arrays) plus the JSON signal
// files used by the replay command. Parse errors carry file and line context.

#include <Eigen/Dense>

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "switchmargin/common.hpp"
#include "switchmargin/hierarchy.hpp"
#include "switchmargin/switching.hpp"

namespace switchmargin {

struct ProblemDefaults {
    double epsilon = -1.0;  // <= 0 selects the scale-aware default
    int i_max = 3;
    double increment = 0.01;
    double t_f = 20.0;
    std::vector<double> x0;  // empty: ones(n)
    double tol_unit = 1e-3;
};

struct ProblemFile {
    std::string path;
    int n = 0;
    Mat a;
    Mat a0;
    std::optional<Vec> b;
    std::optional<Eigen::RowVectorXd> c;
    ProblemDefaults defaults;

    SwitchedLinearSystem system() const { return SwitchedLinearSystem(a, a0); }

    Vec default_x0() const {
        if (!defaults.x0.empty()) {
            Vec x(static_cast<Eigen::Index>(defaults.x0.size()));
            for (size_t i = 0; i < defaults.x0.size(); ++i)
                x(static_cast<Eigen::Index>(i)) = defaults.x0[i];
            return x;
        }
        return Vec::Ones(n);
    }
};

namespace detail {

// Recursive value: number or (nested) list of values.
struct TomlValue {
    double number = 0.0;
    bool is_array = false;
    std::vector<TomlValue> items;
};

class TomlParser {
  public:
    TomlParser(const std::string& text, std::string origin)
        : text_(text), origin_(std::move(origin)) {}

    struct Entry {
        std::string section;
        std::string key;
        TomlValue value;
        int line;
    };

    std::vector<Entry> parse() {
        std::vector<Entry> entries;
        std::istringstream stream(text_);
        std::string line;
        std::string pending;
        int pending_line = 0;
        int depth = 0;
        int line_no = 0;
        std::string section;

        while (std::getline(stream, line)) {
            ++line_no;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (pending.empty()) {
                const std::string trimmed = trim(line);
                if (trimmed.empty()) continue;
                if (trimmed.front() == '[' && trimmed.back() == ']' &&
                    trimmed.find('=') == std::string::npos) {
                    section = trim(trimmed.substr(1, trimmed.size() - 2));
                    continue;
                }
                pending = line;
                pending_line = line_no;
            } else {
                pending += " " + line;
            }
            depth = bracket_depth(pending);
            if (depth > 0) continue;  // array continues on the next line
            if (depth < 0) fail(pending_line, "unbalanced ']'");

            const std::string logical = trim(pending);
            pending.clear();
            if (logical.empty()) continue;

            const size_t eq = logical.find('=');
            if (eq == std::string::npos) fail(pending_line, "expected key = value");
            const std::string key = trim(logical.substr(0, eq));
            if (key.empty()) fail(pending_line, "empty key");
            const std::string value_text = trim(logical.substr(eq + 1));
            if (value_text.empty()) fail(pending_line, "missing value for key '" + key + "'");

            size_t pos = 0;
            TomlValue value = parse_value(value_text, pos, pending_line);
            skip_ws(value_text, pos);
            if (pos != value_text.size())
                fail(pending_line, "trailing characters after value for key '" + key + "'");
            entries.push_back({section, key, std::move(value), pending_line});
        }
        if (!pending.empty()) fail(pending_line, "unterminated array");
        return entries;
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ParseError(origin_ + ":" + std::to_string(line) + ": " + msg);
    }

  private:
    static std::string trim(const std::string& s) {
        size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static int bracket_depth(const std::string& s) {
        int depth = 0;
        for (char ch : s) {
            if (ch == '[') ++depth;
            if (ch == ']') --depth;
        }
        return depth;
    }

    static void skip_ws(const std::string& s, size_t& pos) {
        while (pos < s.size() &&
               (std::isspace(static_cast<unsigned char>(s[pos])) || s[pos] == ',')) {
            ++pos;
        }
    }

    TomlValue parse_value(const std::string& s, size_t& pos, int line) const {
        skip_ws(s, pos);
        if (pos >= s.size()) fail(line, "expected a value");
        TomlValue out;
        if (s[pos] == '[') {
            ++pos;
            out.is_array = true;
            skip_ws(s, pos);
            while (pos < s.size() && s[pos] != ']') {
                out.items.push_back(parse_value(s, pos, line));
                skip_ws(s, pos);
            }
            if (pos >= s.size()) fail(line, "unterminated array");
            ++pos;  // consume ']'
            return out;
        }
        const size_t start = pos;
        while (pos < s.size() && s[pos] != ',' && s[pos] != ']' &&
               !std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        }
        const std::string token = s.substr(start, pos - start);
        try {
            size_t used = 0;
            out.number = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            fail(line, "expected a number, got '" + token + "'");
        }
        return out;
    }

    const std::string& text_;
    std::string origin_;
};

inline Mat matrix_from_value(const TomlValue& v, const std::string& key, int line,
                             const TomlParser& parser) {
    if (!v.is_array || v.items.empty() || !v.items.front().is_array)
        parser.fail(line, key + " must be a nested array of rows");
    const size_t rows = v.items.size();
    const size_t cols = v.items.front().items.size();
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t r = 0; r < rows; ++r) {
        const TomlValue& row = v.items[r];
        if (!row.is_array || row.items.size() != cols)
            parser.fail(line, key + ": row " + std::to_string(r) + " has inconsistent length");
        for (size_t c = 0; c < cols; ++c) {
            if (row.items[c].is_array) parser.fail(line, key + ": entries must be numbers");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.items[c].number;
        }
    }
    return m;
}

inline std::vector<double> vector_from_value(const TomlValue& v, const std::string& key, int line,
                                             const TomlParser& parser) {
    if (!v.is_array) parser.fail(line, key + " must be an array");
    std::vector<double> out;
    out.reserve(v.items.size());
    for (const TomlValue& item : v.items) {
        if (item.is_array) parser.fail(line, key + " must be a flat array");
        out.push_back(item.number);
    }
    return out;
}

}  // namespace detail

inline ProblemFile parse_problem(const std::string& text, const std::string& origin) {
    detail::TomlParser parser(text, origin);
    const auto entries = parser.parse();

    ProblemFile problem;
    problem.path = origin;
    bool saw_n = false, saw_a = false, saw_a0 = false;

    for (const auto& entry : entries) {
        if (entry.section.empty()) {
            if (entry.key == "n") {
                problem.n = static_cast<int>(entry.value.number);
                saw_n = true;
            } else if (entry.key == "A") {
                problem.a = detail::matrix_from_value(entry.value, "A", entry.line, parser);
                saw_a = true;
            } else if (entry.key == "A0") {
                problem.a0 = detail::matrix_from_value(entry.value, "A0", entry.line, parser);
                saw_a0 = true;
            } else if (entry.key == "B") {
                const auto vals = detail::vector_from_value(entry.value, "B", entry.line, parser);
                Vec b(static_cast<Eigen::Index>(vals.size()));
                for (size_t i = 0; i < vals.size(); ++i) b(static_cast<Eigen::Index>(i)) = vals[i];
                problem.b = b;
            } else if (entry.key == "C") {
                const auto vals = detail::vector_from_value(entry.value, "C", entry.line, parser);
                Eigen::RowVectorXd c(static_cast<Eigen::Index>(vals.size()));
                for (size_t i = 0; i < vals.size(); ++i) c(static_cast<Eigen::Index>(i)) = vals[i];
                problem.c = c;
            } else {
                parser.fail(entry.line, "unknown key '" + entry.key + "'");
            }
        } else if (entry.section == "defaults") {
            auto& d = problem.defaults;
            if (entry.key == "epsilon") {
                d.epsilon = entry.value.number;
            } else if (entry.key == "i_max") {
                d.i_max = static_cast<int>(entry.value.number);
            } else if (entry.key == "increment") {
                d.increment = entry.value.number;
            } else if (entry.key == "t_f") {
                d.t_f = entry.value.number;
            } else if (entry.key == "x0") {
                d.x0 = detail::vector_from_value(entry.value, "x0", entry.line, parser);
            } else if (entry.key == "tol_unit") {
                d.tol_unit = entry.value.number;
            } else {
                parser.fail(entry.line, "unknown key 'defaults." + entry.key + "'");
            }
        } else {
            parser.fail(entry.line, "unknown section '" + entry.section + "'");
        }
    }

    if (!saw_n) throw ParseError(origin + ": missing required key 'n'");
    if (!saw_a) throw ParseError(origin + ": missing required key 'A'");
    if (!saw_a0) throw ParseError(origin + ": missing required key 'A0'");
    if (problem.a.rows() != problem.n || problem.a.cols() != problem.n)
        throw ParseError(origin + ": A must be " + std::to_string(problem.n) + "x" +
                         std::to_string(problem.n));
    if (problem.a0.rows() != problem.n || problem.a0.cols() != problem.n)
        throw ParseError(origin + ": A0 must be " + std::to_string(problem.n) + "x" +
                         std::to_string(problem.n));
    if (problem.b && problem.b->size() != problem.n)
        throw ParseError(origin + ": B must have length " + std::to_string(problem.n));
    if (problem.c && problem.c->cols() != problem.n)
        throw ParseError(origin + ": C must have length " + std::to_string(problem.n));
    if (!problem.defaults.x0.empty() &&
        static_cast<int>(problem.defaults.x0.size()) != problem.n)
        throw ParseError(origin + ": defaults.x0 must have length " + std::to_string(problem.n));
    return problem;
}

inline ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_problem(buffer.str(), path);
}

// Signal files are JSON with "times" and "values" arrays (optionally "delta");
// a report produced by the worst-switch command also qualifies, the signal is
// found under result.signal.
inline SwitchingSignal load_signal(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON (" + e.what() + ")");
    }
    const nlohmann::json* node = &j;
    if (!node->contains("times") && node->contains("result") &&
        (*node)["result"].contains("signal")) {
        node = &(*node)["result"]["signal"];
    }
    if (!node->contains("times") || !node->contains("values"))
        throw ParseError(path + ": expected 'times' and 'values' arrays");
    SwitchingSignal signal;
    try {
        signal.times = node->at("times").get<std::vector<double>>();
        signal.values = node->at("values").get<std::vector<double>>();
        signal.delta = node->value("delta", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": malformed signal (" + e.what() + ")");
    }
    if (signal.delta == 0.0)
        for (double v : signal.values) signal.delta = std::max(signal.delta, v);
    try {
        signal.validate();
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return signal;
}

inline void save_signal(const std::string& path, const SwitchingSignal& signal) {
    nlohmann::ordered_json j;
    j["delta"] = signal.delta;
    j["times"] = signal.times;
    j["values"] = signal.values;
    std::ofstream out(path);
    if (!out) throw Error("cannot write signal file " + path);
    out << j.dump(2) << "\n";
}

}  // namespace switchmargin
