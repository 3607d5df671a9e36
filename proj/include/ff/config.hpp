#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ff::io {

// Flat sectioned key = value text. '#' starts a comment, keys are unique per
// section, insertion order is preserved for writing.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key, double fallback) const;
    int64_t get_int(const std::string& section, const std::string& key) const;
    int64_t get_int_or(const std::string& section, const std::string& key, int64_t fallback) const;
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_double(const std::string& section, const std::string& key, double value);
    void set_int(const std::string& section, const std::string& key, int64_t value);

    bool has_section(const std::string& section) const;
    // keys of a section in insertion order
    std::vector<std::pair<std::string, std::string>> items(const std::string& section) const;

    std::string serialize() const;
    void write_file(const std::string& path) const;

private:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };
    std::vector<Section> sections_;
    Section* find(const std::string& name);
    const Section* find(const std::string& name) const;
};

}  // namespace ff::io
