#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa {

// Flat `key = value` file with optional [section] headers; keys are stored
// as "section.key". Values may be bare, or quoted with double quotes.
// '#' starts a comment outside quotes.
class Config {
public:
    static Config parse(std::string_view text);
    static Config load(const std::string& path);

    bool has(std::string_view key) const;
    std::optional<std::string> raw(std::string_view key) const;
    std::string get_string(std::string_view key, std::string fallback) const;
    long long get_int(std::string_view key, long long fallback) const;  // ConfigError on bad values
    double get_double(std::string_view key, double fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;

    void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
    const std::map<std::string, std::string>& values() const noexcept { return values_; }
    // Keys not listed in `known`, for warnings or strict checks.
    std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace kgqa
