#pragma once

#include "dko/experiments.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dko::config {

// Flat dotted keys, e.g. "model.nu".
using Settings = std::map<std::string, std::string>;

struct KeySpec {
    std::string key;
    std::string desk_default;
    std::string paper_default;
    std::string description;
};

// Every recognized key. An empty default means the key must be supplied.
const std::vector<KeySpec>& schema();

const std::vector<std::string>& experiment_names();

// Schema defaults for the chosen scale.
Settings defaults(bool paper_scale);
// Keys an experiment changes relative to the schema defaults.
Settings experiment_preset(const std::string& experiment, bool paper_scale);

// INI text ([section] / key = value) flattened to dotted keys. Throws
// ConfigError on syntax errors or unknown keys.
Settings parse_ini(std::string_view text);
// "section.key=value" items. Throws ConfigError on malformed or unknown keys.
Settings parse_overrides(const std::vector<std::string>& items);

// Layers, lowest precedence first: schema, experiment preset, file, overrides.
Settings resolve(const std::optional<std::string>& experiment, bool paper_scale, const Settings& file,
                 const Settings& overrides);

// Typed accessors; all throw ConfigError naming the key.
std::string get_string(const Settings& s, const std::string& key);
double get_double(const Settings& s, const std::string& key);
std::size_t get_size(const Settings& s, const std::string& key);
std::uint64_t get_u64(const Settings& s, const std::string& key);
bool get_bool(const Settings& s, const std::string& key);
std::vector<std::size_t> get_size_list(const Settings& s, const std::string& key);
std::vector<double> get_double_list(const Settings& s, const std::string& key);

// Validated configuration. experiment_checks adds the cross-key checks of the
// experiment named by experiment.name (model kind, n_eigs against bank.n).
experiments::ExperimentConfig to_experiment_config(const Settings& s, bool experiment_checks = true);

// INI rendering, sections in schema order. parse_ini(echo(s)) == s.
std::string echo(const Settings& s);

}  // namespace dko::config
