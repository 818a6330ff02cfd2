#include "spmlab/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace spmlab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
T parse_value(const std::string& key, const std::string& raw);

template <>
double parse_value<double>(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid number for " + key + ": '" + raw + "'");
    }
}

template <>
int parse_value<int>(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid integer for " + key + ": '" + raw + "'");
    }
}

template <>
std::uint64_t parse_value<std::uint64_t>(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid integer for " + key + ": '" + raw + "'");
    }
}

template <>
std::string parse_value<std::string>(const std::string&, const std::string& raw) {
    return raw;
}

std::string format_value(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(const std::string& v) { return v; }

const std::map<std::string, Field>& schema() {
    static const std::map<std::string, Field> fields = [] {
        std::map<std::string, Field> f;
        auto add = [&f](const std::string& key, auto member) {
            using T = std::decay_t<decltype(std::declval<ExperimentConfig>().*member)>;
            f[key] = Field{
                [key, member](ExperimentConfig& c, const std::string& raw) {
                    c.*member = parse_value<T>(key, raw);
                },
                [member](const ExperimentConfig& c) { return format_value(c.*member); }};
        };
        add("seed", &ExperimentConfig::seed);
        add("ensemble", &ExperimentConfig::ensemble);
        add("out", &ExperimentConfig::out_dir);
        add("threads", &ExperimentConfig::threads);
        f["grid.d"] = Field{[](ExperimentConfig& c, const std::string& r) { c.grid.d = parse_value<int>("grid.d", r); },
                            [](const ExperimentConfig& c) { return format_value(c.grid.d); }};
        f["grid.n"] = Field{[](ExperimentConfig& c, const std::string& r) { c.grid.n = parse_value<int>("grid.n", r); },
                            [](const ExperimentConfig& c) { return format_value(c.grid.n); }};
        f["grid.dt"] = Field{[](ExperimentConfig& c, const std::string& r) { c.grid.dt = parse_value<double>("grid.dt", r); },
                             [](const ExperimentConfig& c) { return format_value(c.grid.dt); }};
        f["grid.n_t"] = Field{[](ExperimentConfig& c, const std::string& r) { c.grid.n_t = parse_value<int>("grid.n_t", r); },
                              [](const ExperimentConfig& c) { return format_value(c.grid.n_t); }};
        add("nonlinearity.diffusion", &ExperimentConfig::diffusion);
        add("nonlinearity.M", &ExperimentConfig::M);
        add("nonlinearity.eps_reg", &ExperimentConfig::eps_reg);
        add("nonlinearity.a_const", &ExperimentConfig::a_const);
        add("nonlinearity.sigma", &ExperimentConfig::sigma);
        add("nonlinearity.N", &ExperimentConfig::N);
        add("nonlinearity.C_supp", &ExperimentConfig::C_supp);
        add("nonlinearity.sigma_const", &ExperimentConfig::sigma_const);
        add("noise.kind", &ExperimentConfig::noise_kind);
        add("noise.K_max", &ExperimentConfig::K_max);
        add("noise.alpha_prime", &ExperimentConfig::alpha_prime);
        add("noise.mollifier_eps", &ExperimentConfig::mollifier_eps);
        add("model.alpha", &ExperimentConfig::alpha);
        add("model.epsilon", &ExperimentConfig::epsilon_hom);
        add("analysis.beta", &ExperimentConfig::beta);
        add("analysis.R", &ExperimentConfig::R);
        add("analysis.p", &ExperimentConfig::p_energy);
        add("solver.scheme", &ExperimentConfig::scheme);
        add("initial.offset", &ExperimentConfig::u0_offset);
        add("initial.amplitude", &ExperimentConfig::u0_amplitude);
        return f;
    }();
    return fields;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig config;
    bool seed_seen = false;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = schema().find(key);
        if (it == schema().end()) throw ConfigError("config: unknown key '" + key + "'");
        it->second.set(config, value);
        if (key == "seed") seed_seen = true;
    }
    if (!seed_seen) throw ConfigError("config: mandatory key 'seed' is missing");
    try {
        config.grid.validate();
        config.make_nonlinearity();
        config.make_scheme();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (config.noise_kind != "space_white" && config.noise_kind != "coloured" &&
        config.noise_kind != "none") {
        throw ConfigError("config: noise.kind must be space_white, coloured or none");
    }
    return config;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str());
}

Nonlinearity ExperimentConfig::make_nonlinearity() const {
    Nonlinearity nl = [&] {
        if (diffusion == "porous") return Nonlinearity::make_porous(M);
        if (diffusion == "regularized") return Nonlinearity::regularize(M, eps_reg);
        if (diffusion == "constant") return Nonlinearity::make_constant_diffusion(a_const);
        throw ConfigError("config: nonlinearity.diffusion must be porous, regularized or constant");
    }();
    if (sigma == "power") {
        nl.with_sigma(N, C_supp);
    } else if (sigma == "constant") {
        nl.with_constant_sigma(sigma_const);
    } else if (sigma == "zero") {
        nl.with_zero_sigma();
    } else {
        throw ConfigError("config: nonlinearity.sigma must be power, constant or zero");
    }
    return nl;
}

Scheme ExperimentConfig::make_scheme() const {
    if (scheme == "rk2") return Scheme::ExplicitRK2;
    if (scheme == "imex") return Scheme::IMEX;
    throw ConfigError("config: solver.scheme must be rk2 or imex");
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream os;
    for (const auto& [key, field] : schema()) {
        os << key << " = " << field.get(*this) << "\n";
    }
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
    // FNV-1a over the canonical text
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace spmlab
