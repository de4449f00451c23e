// Configuration loading (TOML subset or JSON) and the reproducibility
// manifest written beside every output file. Frequencies in config files are
// cyclic (MHz/GHz/Hz per key name); lengths are um unless suffixed otherwise.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cavitykit/cavity_model.hpp"

namespace cavitykit {

// Flat two-level key-value store: table -> key -> scalar/array.
struct ConfigTree {
    std::map<std::string, std::map<std::string, std::string>> strings;
    std::map<std::string, std::map<std::string, double>> numbers;
    std::map<std::string, std::map<std::string, bool>> bools;
    std::map<std::string, std::map<std::string, std::vector<double>>> arrays;

    bool has(const std::string& table, const std::string& key) const;
    double number(const std::string& table, const std::string& key) const;
    double number_or(const std::string& table, const std::string& key, double dflt) const;
    bool bool_or(const std::string& table, const std::string& key, bool dflt) const;
    std::string string_or(const std::string& table, const std::string& key,
                          const std::string& dflt) const;
    std::vector<double> array_or(const std::string& table, const std::string& key,
                                 const std::vector<double>& dflt) const;
};

// Parses .toml (subset: [tables], scalars, arrays of numbers, # comments) or
// .json (top-level object of tables). Throws ConfigError.
ConfigTree load_config_tree(const std::string& path);

struct Config {
    CavityParams cavity;
    CloudParams cloud;
    PumpParams pump;
    ConfigTree raw;
};

// Builds the physics parameters from a config tree, applying the unit
// conversions named in the keys and the Thomas-Fermi-to-Gaussian width
// mapping (tf_to_gauss_ratio, default 0.5).
Config parse_config(const ConfigTree& tree);
Config load_config(const std::string& path);

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string timestamp;
};

std::string fnv1a_hex(const std::string& bytes);
RunManifest make_manifest(const std::string& command, const std::string& config_text,
                          std::uint64_t seed);
void write_manifest(const RunManifest& manifest, const std::string& out_path);

}  // namespace cavitykit
