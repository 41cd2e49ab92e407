#include "gphmc/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "gphmc/errors.hpp"
#include "gphmc/numeric_format.hpp"

namespace gphmc {

namespace {

constexpr std::array kKnownKeys = {
    "sampler.kind", "sampler.dt", "sampler.n_int",
    "target.kind", "target.dense_limit",
    "chains.batch", "chains.steps", "chains.seed", "chains.threads",
    "burnin.steps", "burnin.dt",
    "kernel.n_cheb", "kernel.freeze_sigma", "kernel.freeze_ell",
    "kernel.sigma2", "kernel.two_ell2", "kernel.tile",
    "precond.kind", "precond.rank", "precond.refresh",
    "pole.n_p",
    "solver.tol", "solver.max_iter", "solver.shifted", "solver.power_iters",
    "solver.bound_inflation",
    "anderson.history", "anderson.max_iter", "anderson.tol", "anderson.regularization",
    "data.kind", "data.path", "data.n", "data.d", "data.eta", "data.seed",
    "data.subsample", "data.subsample_seed", "data.strict",
    "init.theta",
    "verify.rwm_dt", "verify.leapfrog_dt", "verify.implicit_dt", "verify.stride",
    "quad.lo", "quad.hi", "quad.points",
    "scale.n_list", "scale.det_n_list", "scale.steps", "scale.warmup",
    "predict.grid", "predict.thin",
    "iat.c", "iat.min_multiple",
    "output.dir",
};

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

ExperimentConfig::ExperimentConfig() = default;

void ExperimentConfig::check_known(const std::string& key) const {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
        throw ConfigError("unknown configuration key '" + key + "'");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    check_known(key);
    entries_[key] = value;
}

void ExperimentConfig::apply_override(const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value, got '" + key_equals_value + "'");
    set(trim(key_equals_value.substr(0, eq)), trim(key_equals_value.substr(eq + 1)));
}

void ExperimentConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::string line, section;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
        set(key, trim(line.substr(eq + 1)));
    }
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    ExperimentConfig config;
    config.load_file(path);
    return config;
}

bool ExperimentConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& fallback) const {
    check_known(key);
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
    check_known(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        return parse_double(it->second);
    } catch (const std::invalid_argument&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + it->second + "'");
    }
}

long ExperimentConfig::get_int(const std::string& key, long fallback) const {
    check_known(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t used = 0;
        const long v = std::stol(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + it->second + "'");
    }
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
    check_known(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream out;
    for (const auto& [key, value] : entries_) out << key << " = " << value << '\n';
    return out.str();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value: '" + line + "'");
        config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

}  // namespace gphmc
