#pragma once

// Sectioned key = value run configuration (a TOML subset: numbers, booleans,
// double-quoted strings and flat numeric arrays). Every accepted key is
// declared in a schema with its default; unknown keys are rejected.

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace planesel::cli {

using Value = std::variant<double, bool, std::string, std::vector<double>>;

class RunConfig {
public:
    /// All keys at their defaults.
    RunConfig();

    /// Parses `is` over the defaults; `source` names the input in errors.
    static RunConfig parse(std::istream& is, const std::string& source = "config");

    double number(const std::string& key) const;
    int integer(const std::string& key) const;
    bool boolean(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    const std::vector<double>& list(const std::string& key) const;

    /// Type-checked override of a declared key.
    void set(const std::string& key, Value v);

    /// Canonical form; parsing it back yields an identical configuration.
    void write(std::ostream& os) const;

private:
    const Value& get(const std::string& key) const;
    std::map<std::string, Value> values_;  // "section.key"
};

}  // namespace planesel::cli
