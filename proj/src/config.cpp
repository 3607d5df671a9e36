#include "ff/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ff/errors.hpp"

namespace ff::io {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError("config line " + std::to_string(lineno) + ": unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty())
                throw ValidationError("config line " + std::to_string(lineno) + ": empty section name");
            if (!cfg.find(current)) cfg.sections_.push_back({current, {}});
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
        if (current.empty())
            throw ValidationError("config line " + std::to_string(lineno) + ": key outside any [section]");
        Section* s = cfg.find(current);
        for (const auto& [k, v] : s->entries)
            if (k == key)
                throw ValidationError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        s->entries.emplace_back(key, value);
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_string(ss.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

Config::Section* Config::find(const std::string& name) {
    for (auto& s : sections_)
        if (s.name == name) return &s;
    return nullptr;
}

const Config::Section* Config::find(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name == name) return &s;
    return nullptr;
}

bool Config::has(const std::string& section, const std::string& key) const {
    const Section* s = find(section);
    if (!s) return false;
    for (const auto& [k, v] : s->entries)
        if (k == key) return true;
    return false;
}

bool Config::has_section(const std::string& section) const { return find(section) != nullptr; }

std::string Config::get(const std::string& section, const std::string& key) const {
    const Section* s = find(section);
    if (s)
        for (const auto& [k, v] : s->entries)
            if (k == key) return v;
    throw ValidationError("config: missing [" + section + "] " + key);
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ValidationError("config: [" + section + "] " + key + " = '" + v + "' is not a number");
    return x;
}

double Config::get_double_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

int64_t Config::get_int(const std::string& section, const std::string& key) const {
    const std::string v = get(section, key);
    int64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw ValidationError("config: [" + section + "] " + key + " = '" + v + "' is not an integer");
    return x;
}

int64_t Config::get_int_or(const std::string& section, const std::string& key, int64_t fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: [" + section + "] " + key + " = '" + v + "' is not a boolean");
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    Section* s = find(section);
    if (!s) {
        sections_.push_back({section, {}});
        s = &sections_.back();
    }
    for (auto& [k, v] : s->entries)
        if (k == key) {
            v = value;
            return;
        }
    s->entries.emplace_back(key, value);
}

void Config::set_double(const std::string& section, const std::string& key, double value) {
    char buf[64];
    int len = std::snprintf(buf, sizeof buf, "%.17g", value);
    set(section, key, std::string(buf, static_cast<size_t>(len)));
}

void Config::set_int(const std::string& section, const std::string& key, int64_t value) {
    set(section, key, std::to_string(value));
}

std::vector<std::pair<std::string, std::string>> Config::items(const std::string& section) const {
    const Section* s = find(section);
    if (!s) throw ValidationError("config: missing section [" + section + "]");
    return s->entries;
}

std::string Config::serialize() const {
    std::ostringstream out;
    for (size_t i = 0; i < sections_.size(); ++i) {
        if (i) out << "\n";
        out << "[" << sections_[i].name << "]\n";
        for (const auto& [k, v] : sections_[i].entries) out << k << " = " << v << "\n";
    }
    return out.str();
}

void Config::write_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write config '" + path + "'");
    out << serialize();
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

}  // namespace ff::io
