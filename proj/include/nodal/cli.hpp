#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nodal::cli {

/// Evaluates a numeric config value: decimal literals, `pi`, + - * / and
/// parentheses ("pi/64", "2*pi", "-0.5"). Throws ConfigError.
double parse_number(const std::string& text);

enum class Scenario { Eig, Positive, Nodal, Morse, Mp, Bifurcate, SquareValidate, DiskSymmetry, DumbbellGap };

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

/// Flat dotted-key configuration. Accepts `key = value` lines (`#` comments,
/// `[section]` headers prefix later keys) or a JSON object whose nesting
/// becomes dotted keys. Arrays become comma-separated lists.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_number(const std::string& key, double fallback) const;
    std::optional<double> get_optional_number(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    /// Throws ConfigError naming the first key that is not recognized.
    void reject_unknown_keys() const;

private:
    std::map<std::string, std::string> values_;
};

/// Runs a scenario, writes artifacts into `out`, prints one verdict line per
/// check to `log`. Returns 0 when every check passes, 1 on a compute error,
/// 2 when a check fails, 3 on a configuration error.
int run(Scenario scenario, const Config& config, const std::filesystem::path& out, std::ostream& log);

}  // namespace nodal::cli
