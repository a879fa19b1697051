#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bsdelay/apps.hpp"

namespace bsdelay {

/// Flat key=value run configuration with strict unknown-key rejection: every
/// key a command understands is read through a getter (recording the resolved
/// value, default or not), and reject_unknown() fails on leftovers.
class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path);
    static Config from_map(std::map<std::string, std::string> entries);

    void override_key(const std::string& key, const std::string& value);

    double get_double(const std::string& key, double def);
    int get_int(const std::string& key, int def);
    std::uint64_t get_u64(const std::string& key, std::uint64_t def);
    bool get_bool(const std::string& key, bool def);
    std::string get_string(const std::string& key, const std::string& def);

    bool has(const std::string& key) const { return raw_.count(key) > 0; }

    /// Throws ConfigError naming every key that no getter consumed.
    void reject_unknown() const;

    /// Every key touched by a getter with the value actually used.
    const std::map<std::string, std::string>& resolved() const { return resolved_; }

private:
    std::map<std::string, std::string> raw_;
    std::set<std::string> consumed_;
    std::map<std::string, std::string> resolved_;
};

/// Shared numeric settings (n_steps, n_paths, seed, basis_degree, tol,
/// max_iter, exec, integro grid, perturbation sweep) with documented defaults.
Numerics numerics_from_config(Config& cfg);

/// Well-posedness diagnostics from declared coefficients: the delayed and
/// advanced contraction constants at beta = 1/delta and the two parameter
/// range bounds 6 L^2 d (1 + 2 d^2 e) and 4 L^2 d (1 + d^2 e) + d. Failing
/// bounds produce warnings, never errors.
struct ValidationReport {
    double K = 0.0;
    double K_prime = 0.0;  // NaN when delta >= 1 (weight beta = 1/delta <= 1)
    double bound1 = 0.0;
    double bound2 = 0.0;
    std::vector<std::string> warnings;
};
ValidationReport validate_well_posedness(double L, double delta);

}  // namespace bsdelay
