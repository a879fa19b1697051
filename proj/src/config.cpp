#include "bsdelay/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "bsdelay/asde.hpp"
#include "bsdelay/errors.hpp"

namespace bsdelay {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Config Config::from_file(const std::string& path) {
    Config cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        }
        if (!cfg.raw_.emplace(key, val).second) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key " + key);
        }
    }
    return cfg;
}

Config Config::from_map(std::map<std::string, std::string> entries) {
    Config cfg;
    cfg.raw_ = std::move(entries);
    return cfg;
}

void Config::override_key(const std::string& key, const std::string& value) {
    raw_[key] = value;
}

double Config::get_double(const std::string& key, double def) {
    consumed_.insert(key);
    auto it = raw_.find(key);
    if (it == raw_.end()) {
        resolved_[key] = format_value(def);
        return def;
    }
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        resolved_[key] = format_value(v);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": not a number: " + it->second);
    }
}

int Config::get_int(const std::string& key, int def) {
    consumed_.insert(key);
    auto it = raw_.find(key);
    if (it == raw_.end()) {
        resolved_[key] = std::to_string(def);
        return def;
    }
    try {
        std::size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        resolved_[key] = std::to_string(v);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": not an integer: " + it->second);
    }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) {
    consumed_.insert(key);
    auto it = raw_.find(key);
    if (it == raw_.end()) {
        resolved_[key] = std::to_string(def);
        return def;
    }
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        resolved_[key] = std::to_string(v);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": not an unsigned integer: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool def) {
    consumed_.insert(key);
    auto it = raw_.find(key);
    if (it == raw_.end()) {
        resolved_[key] = def ? "true" : "false";
        return def;
    }
    if (it->second == "true" || it->second == "1") {
        resolved_[key] = "true";
        return true;
    }
    if (it->second == "false" || it->second == "0") {
        resolved_[key] = "false";
        return false;
    }
    throw ConfigError("key " + key + ": expected true/false: " + it->second);
}

std::string Config::get_string(const std::string& key, const std::string& def) {
    consumed_.insert(key);
    auto it = raw_.find(key);
    const std::string v = (it == raw_.end()) ? def : it->second;
    resolved_[key] = v;
    return v;
}

void Config::reject_unknown() const {
    std::string unknown;
    for (const auto& [key, value] : raw_) {
        if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
}

Numerics numerics_from_config(Config& cfg) {
    Numerics num;
    num.n_steps = cfg.get_int("n_steps", num.n_steps);
    num.n_paths = cfg.get_int("n_paths", num.n_paths);
    num.seed = cfg.get_u64("seed", num.seed);
    num.basis_degree = cfg.get_int("basis_degree", num.basis_degree);
    num.tol = cfg.get_double("tol", num.tol);
    num.max_iter = cfg.get_int("max_iter", num.max_iter);
    const std::string exec = cfg.get_string("exec", "parallel");
    if (exec == "serial") {
        num.exec = Execution::Serial;
    } else if (exec == "parallel") {
        num.exec = Execution::Parallel;
    } else {
        throw ConfigError("key exec: expected serial or parallel: " + exec);
    }
    num.integro_eps = cfg.get_double("integro_eps", num.integro_eps);
    num.integro_cells = cfg.get_int("integro_cells", num.integro_cells);
    num.verify = cfg.get_bool("verify", num.verify);
    num.n_perturbations = cfg.get_int("n_perturbations", num.n_perturbations);
    num.perturb_seed = cfg.get_u64("perturb_seed", num.perturb_seed);
    std::string mags = cfg.get_string("magnitudes", "0.02,0.1,0.5");
    num.magnitudes.clear();
    std::stringstream ss(mags);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            num.magnitudes.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("key magnitudes: not a number: " + tok);
        }
    }
    if (num.magnitudes.empty()) throw ConfigError("key magnitudes: empty list");
    return num;
}

ValidationReport validate_well_posedness(double L, double delta) {
    ValidationReport rep;
    const DelayMeasure dirac = DelayMeasure::dirac(delta);
    rep.K = contraction_constant(L, 1.0, delta, dirac).K;
    if (delta > 0.0 && delta < 1.0) {
        rep.K_prime = asde_contraction_constant(L, 1.0, delta, dirac, 1.0 / delta).K_prime;
    } else if (delta == 0.0) {
        rep.K_prime = 0.0;
    } else {
        rep.K_prime = std::numeric_limits<double>::quiet_NaN();
    }
    const RangeCheck rc = app2_range_check(0.0, -L, 0.0, L, delta);  // any combo with max = L
    rep.bound1 = rc.bound1;
    rep.bound2 = rc.bound2;

    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    if (rep.K >= 1.0) {
        rep.warnings.push_back("delayed contraction constant K = " + num(rep.K) + " >= 1");
    }
    if (!(rep.K_prime < 1.0)) {
        rep.warnings.push_back("advanced contraction constant K' = " + num(rep.K_prime) +
                               " not < 1");
    }
    if (!(rep.bound1 < 1.0)) {
        rep.warnings.push_back("range bound 6 L^2 d (1 + 2 d^2 e) = " + num(rep.bound1) +
                               " not < 1");
    }
    if (!(rep.bound2 < 1.0)) {
        rep.warnings.push_back("range bound 4 L^2 d (1 + d^2 e) + d = " + num(rep.bound2) +
                               " not < 1");
    }
    return rep;
}

}  // namespace bsdelay
