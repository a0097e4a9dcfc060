#include "bitsmooth/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bitsmooth/steady.hpp"

namespace bitsmooth::cli {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
        throw ConfigError("bad number for '" + std::string(key) + "': '" + t + "'");
    return v;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
    const std::string t = trim(text);
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("bad integer for '" + std::string(key) + "': '" + t + "'");
    return v;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
    std::string t(text);
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream in(t);
    std::vector<double> out;
    for (std::string item; in >> item;) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError("'" + std::string(key) + "' needs at least one value");
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

QuadratureRule parse_rule(std::string_view text) {
    const std::string t = trim(text);
    if (t == "gauss-hermite" || t == "gh") return QuadratureRule::GaussHermite;
    if (t == "trapezoid") return QuadratureRule::Trapezoid;
    throw ConfigError("quad_rule must be gauss-hermite or trapezoid, got '" + t + "'");
}

const char* rule_name(QuadratureRule r) {
    return r == QuadratureRule::GaussHermite ? "gauss-hermite" : "trapezoid";
}

void apply_tree(ExperimentConfig& c, const boost::property_tree::ptree& section,
                const std::string& name) {
    for (const auto& [key, node] : section) {
        if (!node.empty())
            throw ConfigError("nested entries are not supported in [" + name + "]");
        apply_setting(c, key, node.data());
    }
}

}  // namespace

std::vector<double> SnrGrid::points() const {
    std::vector<double> p;
    const double slack = step_db * 1e-6;
    for (long i = 0;; ++i) {
        const double x = min_db + static_cast<double>(i) * step_db;
        if (x > max_db + slack) break;
        p.push_back(x);
    }
    return p;
}

bool is_experiment(std::string_view name) noexcept {
    return std::find(std::begin(kExperiments), std::end(kExperiments), name) !=
           std::end(kExperiments);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "alpha",      "sigma_eta",  "sigma0",     "mu0",         "snr_min",
        "snr_max",    "snr_step",   "snr",        "quad_rule",   "quad_nodes",
        "quad_half_width", "seed",  "trials",     "horizon",     "delta",
        "grid_points", "grid_half_width", "threads", "out"};
    return keys;
}

void ExperimentConfig::validate() const {
    if (!is_experiment(experiment)) throw ConfigError("unknown experiment '" + experiment + "'");
    if (alpha.empty()) throw ConfigError("alpha: need at least one value");
    for (double a : alpha)
        if (!(std::abs(a) < 1.0)) throw ConfigError("alpha must satisfy |alpha| < 1, got " + num(a));
    if (!(sigma_eta > 0.0)) throw ConfigError("sigma_eta must be positive");
    if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
    if (!(snr.step_db > 0.0)) throw ConfigError("snr_step must be positive");
    if (!(snr.min_db < snr.max_db)) throw ConfigError("snr_min must be below snr_max");
    try {
        quadrature.validate();
        grid().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (mc.trials < 1) throw ConfigError("trials must be >= 1");
    if (mc.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (mc.delta < 0) throw ConfigError("delta must be >= 0");
}

GridSpec ExperimentConfig::grid() const {
    GridSpec g;
    g.num_points = grid_points;
    g.half_width = grid_half_width;
    return g;
}

GaussMarkovModel ExperimentConfig::model(double a, double snr_point) const {
    GaussMarkovModel m;
    m.alpha = a;
    m.sigma_eta = sigma_eta;
    m.sigma0 = sigma0;
    m.mu0 = mu0;
    return model_at_snr(m, snr_point);
}

ExperimentConfig default_config(std::string_view experiment) {
    if (!is_experiment(experiment))
        throw ConfigError("unknown experiment '" + std::string(experiment) + "'");
    ExperimentConfig c;
    c.experiment = std::string(experiment);
    if (experiment == "fig1") {
        c.alpha = {0.99999};
        c.out = "fig1.txt";
    } else if (experiment == "fig2") {
        c.alpha = {0.9, 0.999, 0.99999};
        c.out = "fig2";
    } else if (experiment == "ratios") {
        c.alpha = {0.99999};
        c.out = "ratios.txt";
    } else if (experiment == "mse-validate") {
        c.alpha = {0.999};
        c.out = "mse_validate.txt";
    } else {
        c.alpha = {0.99999};
    }
    return c;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
    if (key == "alpha") c.alpha = parse_list(key, value);
    else if (key == "sigma_eta") c.sigma_eta = parse_double(key, value);
    else if (key == "sigma0") c.sigma0 = parse_double(key, value);
    else if (key == "mu0") c.mu0 = parse_double(key, value);
    else if (key == "snr_min") c.snr.min_db = parse_double(key, value);
    else if (key == "snr_max") c.snr.max_db = parse_double(key, value);
    else if (key == "snr_step") c.snr.step_db = parse_double(key, value);
    else if (key == "snr") c.snr_db = parse_double(key, value);
    else if (key == "quad_rule") c.quadrature.rule = parse_rule(value);
    else if (key == "quad_nodes") c.quadrature.nodes = parse_int<int>(key, value);
    else if (key == "quad_half_width") c.quadrature.half_width_sigmas = parse_double(key, value);
    else if (key == "seed") c.mc.seed = parse_int<std::uint64_t>(key, value);
    else if (key == "trials") c.mc.trials = parse_int<std::int64_t>(key, value);
    else if (key == "horizon") c.mc.horizon = parse_int<std::int64_t>(key, value);
    else if (key == "delta") c.mc.delta = parse_int<std::int64_t>(key, value);
    else if (key == "grid_points") c.grid_points = parse_int<std::int64_t>(key, value);
    else if (key == "grid_half_width") c.grid_half_width = parse_double(key, value);
    else if (key == "threads") c.threads = parse_int<unsigned>(key, value);
    else if (key == "out") c.out = trim(value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::istream& in, std::string_view experiment) {
    ExperimentConfig c = default_config(experiment);
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [name, section] : tree) {
        if (section.empty() && !section.data().empty())
            throw ConfigError("config: key '" + name + "' outside a section");
        if (name != "common" && !is_experiment(name))
            throw ConfigError("config: unknown section [" + name + "]");
    }
    if (auto common = tree.get_child_optional("common")) apply_tree(c, *common, "common");
    if (auto own = tree.get_child_optional(boost::property_tree::ptree::path_type(
            std::string(experiment), '\0')))
        apply_tree(c, *own, std::string(experiment));
    return c;
}

ExperimentConfig load_config(const std::string& path, std::string_view experiment) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, experiment);
}

std::string serialize(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "[" << c.experiment << "]\n";
    out << "alpha = ";
    for (std::size_t i = 0; i < c.alpha.size(); ++i) out << (i ? ", " : "") << num(c.alpha[i]);
    out << "\n";
    out << "sigma_eta = " << num(c.sigma_eta) << "\n";
    out << "sigma0 = " << num(c.sigma0) << "\n";
    out << "mu0 = " << num(c.mu0) << "\n";
    out << "snr_min = " << num(c.snr.min_db) << "\n";
    out << "snr_max = " << num(c.snr.max_db) << "\n";
    out << "snr_step = " << num(c.snr.step_db) << "\n";
    out << "snr = " << num(c.snr_db) << "\n";
    out << "quad_rule = " << rule_name(c.quadrature.rule) << "\n";
    out << "quad_nodes = " << c.quadrature.nodes << "\n";
    out << "quad_half_width = " << num(c.quadrature.half_width_sigmas) << "\n";
    out << "seed = " << c.mc.seed << "\n";
    out << "trials = " << c.mc.trials << "\n";
    out << "horizon = " << c.mc.horizon << "\n";
    out << "delta = " << c.mc.delta << "\n";
    out << "grid_points = " << c.grid_points << "\n";
    out << "grid_half_width = " << num(c.grid_half_width) << "\n";
    out << "threads = " << c.threads << "\n";
    out << "out = " << c.out << "\n";
    return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
    ExperimentConfig c = config;
    c.out.clear();
    c.threads = 0;
    const std::string text = serialize(c);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace bitsmooth::cli
