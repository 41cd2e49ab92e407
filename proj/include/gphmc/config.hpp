#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gphmc {

// Flat key-value configuration: `section.key = value` lines, `[section]`
// headers optional, `#` comments. CLI --set overrides win over file values;
// unknown keys are rejected so typos fail fast. The full key table lives in
// the README.
class ExperimentConfig {
public:
    ExperimentConfig();

    static ExperimentConfig from_file(const std::filesystem::path& path);
    void load_file(const std::filesystem::path& path);
    void apply_override(const std::string& key_equals_value);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Lossless text form: sorted `key = value` lines.
    std::string serialize() const;
    static ExperimentConfig parse(const std::string& text);

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    void check_known(const std::string& key) const;
    std::map<std::string, std::string> entries_;
};

}  // namespace gphmc
