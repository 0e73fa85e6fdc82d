#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "risnoma/channel.hpp"
#include "risnoma/evaluation.hpp"
#include "risnoma/risnet.hpp"
#include "risnoma/training.hpp"

namespace risnoma {

// Every tunable of a run, flattened to `key = value` pairs.
// Precedence, lowest first: defaults, config file, RISNOMA_<KEY> environment
// variables, command-line flags.
struct RunConfig {
    GeometryConfig geometry;
    RisnetConfig network;
    TrainingConfig training;
    std::size_t train_samples = 10240;
    std::size_t test_samples = 1024;
    std::size_t baseline_trials = 1000;

    struct KeyInfo {
        std::string name;
        std::string description;
    };
    static const std::vector<KeyInfo>& keys();

    // Throws UsageError for unknown keys and ConfigurationError for values
    // that do not parse.
    void set(std::string_view key, std::string_view value);
    std::string get(std::string_view key) const;

    // Parses `key = value` lines; `#` starts a comment. Errors name the line.
    void apply_text(std::string_view text, const std::string& source = "config");
    void apply_file(const std::string& path);

    using EnvLookup = std::function<const char*(const char*)>;
    // Applies RISNOMA_<KEY> for every known key that is set.
    void apply_environment(const EnvLookup& lookup);
    void apply_environment();

    // All keys with their current values, one per line.
    std::string dump() const;

    void validate() const;

    static std::string env_name(std::string_view key);
};

} // namespace risnoma
