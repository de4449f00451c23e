#include "cavitykit/config.hpp"

#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cavitykit {

bool ConfigTree::has(const std::string& t, const std::string& k) const {
    auto in = [&](const auto& m) {
        auto it = m.find(t);
        return it != m.end() && it->second.count(k) > 0;
    };
    return in(numbers) || in(strings) || in(bools) || in(arrays);
}

double ConfigTree::number(const std::string& t, const std::string& k) const {
    auto it = numbers.find(t);
    if (it == numbers.end() || !it->second.count(k))
        throw ConfigError("config: missing key [" + t + "] " + k);
    return it->second.at(k);
}

double ConfigTree::number_or(const std::string& t, const std::string& k,
                             double dflt) const {
    auto it = numbers.find(t);
    if (it == numbers.end() || !it->second.count(k)) return dflt;
    return it->second.at(k);
}

bool ConfigTree::bool_or(const std::string& t, const std::string& k, bool dflt) const {
    auto it = bools.find(t);
    if (it == bools.end() || !it->second.count(k)) return dflt;
    return it->second.at(k);
}

std::string ConfigTree::string_or(const std::string& t, const std::string& k,
                                  const std::string& dflt) const {
    auto it = strings.find(t);
    if (it == strings.end() || !it->second.count(k)) return dflt;
    return it->second.at(k);
}

std::vector<double> ConfigTree::array_or(const std::string& t, const std::string& k,
                                         const std::vector<double>& dflt) const {
    auto it = arrays.find(t);
    if (it == arrays.end() || !it->second.count(k)) return dflt;
    return it->second.at(k);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Minimal TOML subset: [table] headers, key = value with numbers, booleans,
// quoted strings and arrays of numbers, # comments.
ConfigTree parse_toml(std::istream& in) {
    ConfigTree tree;
    std::string table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments outside strings
        bool in_str = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '#' && !in_str) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("toml: malformed table header at line " +
                                  std::to_string(lineno));
            table = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("toml: expected key = value at line " +
                              std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("toml: empty key or value at line " + std::to_string(lineno));
        if (val.front() == '"') {
            if (val.size() < 2 || val.back() != '"')
                throw ConfigError("toml: unterminated string at line " +
                                  std::to_string(lineno));
            tree.strings[table][key] = val.substr(1, val.size() - 2);
        } else if (val == "true" || val == "false") {
            tree.bools[table][key] = (val == "true");
        } else if (val.front() == '[') {
            if (val.back() != ']')
                throw ConfigError("toml: unterminated array at line " +
                                  std::to_string(lineno));
            std::vector<double> arr;
            std::stringstream ss(val.substr(1, val.size() - 2));
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                arr.push_back(std::stod(item));
            }
            tree.arrays[table][key] = arr;
        } else {
            try {
                tree.numbers[table][key] = std::stod(val);
            } catch (const std::exception&) {
                throw ConfigError("toml: bad number '" + val + "' at line " +
                                  std::to_string(lineno));
            }
        }
    }
    return tree;
}

ConfigTree parse_json_tree(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("json: ") + e.what());
    }
    ConfigTree tree;
    for (auto& [table, obj] : j.items()) {
        if (!obj.is_object()) throw ConfigError("json: top level must hold tables");
        for (auto& [key, val] : obj.items()) {
            if (val.is_number())
                tree.numbers[table][key] = val.get<double>();
            else if (val.is_boolean())
                tree.bools[table][key] = val.get<bool>();
            else if (val.is_string())
                tree.strings[table][key] = val.get<std::string>();
            else if (val.is_array())
                tree.arrays[table][key] = val.get<std::vector<double>>();
            else
                throw ConfigError("json: unsupported value type for " + table + "." + key);
        }
    }
    return tree;
}

}  // namespace

ConfigTree load_config_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
        return parse_json_tree(in);
    return parse_toml(in);
}

Config parse_config(const ConfigTree& t) {
    using units::mhz_to_angular;
    Config c;
    c.raw = t;

    c.cavity.w0 = t.number_or("cavity", "w0_um", 35.0);
    c.cavity.kappa = mhz_to_angular(t.number_or("cavity", "kappa_over_2pi_MHz", 0.137));
    c.cavity.epsilon = mhz_to_angular(t.number_or("cavity", "epsilon_over_2pi_MHz", 2.6));
    c.cavity.alpha = t.number_or("cavity", "alpha", 1e-3);
    c.cavity.delta_c = mhz_to_angular(t.number_or("cavity", "delta_c_over_2pi_MHz", -100.0));
    c.cavity.delta_0 = mhz_to_angular(t.number_or("cavity", "delta_0_over_2pi_MHz", 0.0));
    c.cavity.g0 = mhz_to_angular(t.number_or("cavity", "g0_over_2pi_MHz", 1.47));
    c.cavity.wavelength = t.number_or("cavity", "wavelength_nm", 780.0) * 1e-3;
    c.cavity.n_max = (int)t.number_or("cavity", "n_max", 600);
    c.cavity.single_mode = t.bool_or("cavity", "single_mode", false);

    c.cloud.center = {t.number_or("cloud", "center_x_um", 0.0),
                      t.number_or("cloud", "center_y_um", 0.0)};
    c.cloud.n_atoms = t.number_or("cloud", "n_atoms", 3e5);
    c.cloud.scattering_length =
        t.number_or("cloud", "scattering_length_a0", 100.0) * units::bohr_radius /
        units::um_to_m;
    c.cloud.atom_mass = units::rb87_mass;

    const double tf_ratio = t.number_or("cloud", "tf_to_gauss_ratio", 0.5);
    const bool have_radii = t.has("cloud", "tf_radius_x_um");
    if (have_radii) {
        const double rx = t.number("cloud", "tf_radius_x_um");
        const double ry = t.number("cloud", "tf_radius_y_um");
        const double rz = t.number("cloud", "tf_radius_z_um");
        c.cloud.sigma_x = t.number_or("cloud", "sigma_x_um", tf_ratio * rx);
        c.cloud.sigma_y = t.number_or("cloud", "sigma_y_um", tf_ratio * ry);
        c.cloud.trap_freqs = trap_freqs_from_tf_radii(
            c.cloud.n_atoms, rx, ry, rz, c.cloud.scattering_length, c.cloud.atom_mass);
    } else {
        c.cloud.sigma_x = t.number_or("cloud", "sigma_x_um", 2.0);
        c.cloud.sigma_y = t.number_or("cloud", "sigma_y_um", 2.0);
        c.cloud.trap_freqs = {
            units::hz_to_angular(t.number_or("cloud", "omega_x_over_2pi_Hz", 60.0)),
            units::hz_to_angular(t.number_or("cloud", "omega_y_over_2pi_Hz", 60.0)),
            units::hz_to_angular(t.number_or("cloud", "omega_z_over_2pi_Hz", 90.0))};
    }

    c.pump.rabi = mhz_to_angular(t.number_or("pump", "rabi_over_2pi_MHz", 0.0));
    c.pump.delta_a =
        mhz_to_angular(t.number_or("pump", "delta_a_over_2pi_GHz", -98.0) * 1e3);
    return c;
}

Config load_config(const std::string& path) { return parse_config(load_config_tree(path)); }

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

RunManifest make_manifest(const std::string& command, const std::string& config_text,
                          std::uint64_t seed) {
    RunManifest m;
    m.command = command;
    m.config_hash = fnv1a_hex(config_text);
    m.seed = seed;
    m.tool_version = CAVITY_KIT_VERSION;
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    m.timestamp = buf;
    return m;
}

void write_manifest(const RunManifest& m, const std::string& out_path) {
    nlohmann::json j;
    j["command"] = m.command;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["tool_version"] = m.tool_version;
    j["timestamp"] = m.timestamp;
    std::ofstream out(out_path);
    if (!out) throw ConfigError("manifest: cannot write " + out_path);
    out << j.dump(2) << "\n";
}

}  // namespace cavitykit
