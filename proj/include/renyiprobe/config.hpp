#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace renyiprobe {

/// Flat key = value run configuration with [section] headers. Keys are
/// addressed as "section.key". Every lookup records the effective value, so
/// the manifest can echo the fully resolved configuration; keys that were
/// provided but never consumed are reported as errors before a run starts.
class RunConfig {
public:
    RunConfig() = default;

    static RunConfig from_string(const std::string& text) {
        RunConfig c;
        std::istringstream is(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const std::string t = trim(strip_comment(line));
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw std::invalid_argument("config line " + std::to_string(lineno) +
                                                ": malformed section header");
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": expected key = value");
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
            c.values_[section.empty() ? key : section + "." + key] = val;
        }
        return c;
    }

    static RunConfig from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::invalid_argument("cannot open config file: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return from_string(ss.str());
    }

    /// CLI-level override; counts as provided and consumed.
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        const std::string v = it == values_.end() ? fallback : it->second;
        consumed_.insert(key);
        resolved_[key] = v;
        return v;
    }

    long long get_int(const std::string& key, long long fallback) const {
        const std::string v = get_str(key, std::to_string(fallback));
        try {
            return std::stoll(v);
        } catch (...) {
            throw std::invalid_argument("config key " + key + ": not an integer: " + v);
        }
    }

    double get_double(const std::string& key, double fallback) const {
        const std::string v = get_str(key, format_double(fallback));
        try {
            return std::stod(v);
        } catch (...) {
            throw std::invalid_argument("config key " + key + ": not a number: " + v);
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const std::string v = get_str(key, fallback ? "true" : "false");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::invalid_argument("config key " + key + ": not a boolean: " + v);
    }

    std::vector<std::string> get_str_list(const std::string& key, const std::string& fallback) const {
        const std::string v = get_str(key, fallback);
        std::vector<std::string> out;
        std::istringstream is(v);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            const std::string t = trim(tok);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }

    std::vector<int> get_int_list(const std::string& key, const std::string& fallback) const {
        std::vector<int> out;
        for (const auto& s : get_str_list(key, fallback)) out.push_back(std::stoi(s));
        return out;
    }

    std::vector<double> get_double_list(const std::string& key, const std::string& fallback) const {
        std::vector<double> out;
        for (const auto& s : get_str_list(key, fallback)) out.push_back(std::stod(s));
        return out;
    }

    /// N_M field: a positive integer or the distinguished word "exact".
    int get_measurements(const std::string& key, const std::string& fallback) const {
        const std::string v = get_str(key, fallback);
        if (v == "exact" || v == "inf") return -1;
        const int n = std::stoi(v);
        if (n < 2) throw std::invalid_argument("config key " + key + ": N_M must be >= 2 or 'exact'");
        return n;
    }

    /// Throws if any provided key was never consumed by the driver.
    void reject_unknown_keys() const {
        std::vector<std::string> unknown;
        for (const auto& [k, v] : values_)
            if (!consumed_.count(k)) unknown.push_back(k);
        if (!unknown.empty()) {
            std::string msg = "unknown config keys:";
            for (const auto& k : unknown) msg += " " + k;
            throw std::invalid_argument(msg);
        }
    }

    /// Fully resolved key = value listing (defaults included), sorted.
    std::string resolved_echo() const {
        std::string out;
        for (const auto& [k, v] : resolved_) out += k + " = " + v + "\n";
        return out;
    }

private:
    static std::string strip_comment(const std::string& s) {
        const auto h = s.find('#');
        return h == std::string::npos ? s : s.substr(0, h);
    }
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }
    static std::string format_double(double x) {
        std::ostringstream os;
        os.precision(17);
        os << x;
        return os.str();
    }

    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
    mutable std::set<std::string> consumed_;
};

} // namespace renyiprobe
