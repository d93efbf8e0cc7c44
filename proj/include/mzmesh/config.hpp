#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mzmesh {

// Sectioned key-value run configuration. Parsing is strict: malformed lines,
// duplicate keys, and (at validation time) unknown sections or keys are all
// rejected so a typo cannot silently fall back to a default.
class RunConfig {
  public:
    using Section = std::map<std::string, std::string>;

    static RunConfig parse(std::istream& in) {
        RunConfig cfg;
        std::string line, section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']' || t.size() < 3)
                    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                                ": malformed section header '" + t + "'");
                section = trim(t.substr(1, t.size() - 2));
                cfg.sections_[section];
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": expected key = value, got '" + t + "'");
            if (section.empty())
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": key outside of any [section]");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
            if (!cfg.sections_[section].emplace(key, value).second)
                throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" +
                                            section + "." + key + "'");
        }
        return cfg;
    }

    static RunConfig parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    // Command-line override "section.key=value"; overrides win over the file.
    void apply_override(const std::string& spec) {
        const auto eq = spec.find('=');
        const auto dot = spec.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw std::invalid_argument("override must look like section.key=value, got '" + spec + "'");
        const std::string section = trim(spec.substr(0, dot));
        const std::string key = trim(spec.substr(dot + 1, eq - dot - 1));
        const std::string value = trim(spec.substr(eq + 1));
        if (section.empty() || key.empty())
            throw std::invalid_argument("override must look like section.key=value, got '" + spec + "'");
        sections_[section][key] = value;
    }

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    std::string get(const std::string& section, const std::string& key, const std::string& fallback) const {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return fallback;
        const auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }

    std::string require(const std::string& section, const std::string& key) const {
        if (!has(section, key))
            throw std::invalid_argument("missing required config value " + section + "." + key);
        return sections_.at(section).at(key);
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        return to_double(section, key, sections_.at(section).at(key));
    }

    long get_int(const std::string& section, const std::string& key, long fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = sections_.at(section).at(key);
        try {
            std::size_t used = 0;
            const long parsed = std::stol(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return parsed;
        } catch (...) {
            throw std::invalid_argument("config value " + section + "." + key + " = '" + v +
                                        "' is not an integer");
        }
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        std::string v = sections_.at(section).at(key);
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw std::invalid_argument("config value " + section + "." + key + " is not a boolean");
    }

    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
        if (!has(section, key)) return fallback;
        std::vector<double> out;
        std::stringstream ss(sections_.at(section).at(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_double(section, key, trim(item)));
        return out;
    }

    // Reject any section or key outside the allowed schema.
    void validate(const std::map<std::string, std::vector<std::string>>& schema) const {
        std::vector<std::string> bad;
        for (const auto& [section, kv] : sections_) {
            const auto it = schema.find(section);
            if (it == schema.end()) {
                bad.push_back("[" + section + "]");
                continue;
            }
            for (const auto& [key, value] : kv)
                if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                    bad.push_back(section + "." + key);
        }
        if (!bad.empty()) {
            std::string msg = "unknown config entries:";
            for (const auto& b : bad) msg += " " + b;
            throw std::invalid_argument(msg);
        }
    }

    // Record a resolved value so the emitted copy shows every effective
    // setting, including defaults the file did not mention.
    void set(const std::string& section, const std::string& key, const std::string& value) {
        sections_[section][key] = value;
    }

    void write(std::ostream& out) const {
        for (const auto& [section, kv] : sections_) {
            out << "[" << section << "]\n";
            for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
            out << "\n";
        }
    }

    const std::map<std::string, Section>& sections() const { return sections_; }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& section, const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double parsed = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("");
            return parsed;
        } catch (...) {
            throw std::invalid_argument("config value " + section + "." + key + " = '" + v +
                                        "' is not a number");
        }
    }

    std::map<std::string, Section> sections_;
};

}  // namespace mzmesh
