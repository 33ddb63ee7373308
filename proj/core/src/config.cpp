#include "atomtrans/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "atomtrans/wigner.hpp"

namespace atomtrans {

using nlohmann::json;

void ExperimentConfig::validate() const {
    std::vector<std::string> bad;
    auto require = [&](bool ok, const char* what) {
        if (!ok) bad.emplace_back(what);
    };
    require(!species.name.empty(), "species.name");
    require(species.mass_amu > 0.0, "species.mass_amu");
    require(traps.depth_mK > 0.0, "traps.depth_mK");
    require(traps.sigma_um > 0.0, "traps.sigma_um");
    require(tweezer.v_min_mK < tweezer.v_max_mK, "tweezer.v_min_mK/v_max_mK");
    require(noise.gamma_per_us >= 0.0, "noise.gamma_per_us");
    require(noise.T_th_mK > 0.0, "noise.T_th_mK");
    require(grid.n_x >= 8 && grid.n_p >= 8, "grid.n_x/n_p");
    require(grid.x_max_um > grid.x_min_um, "grid.x_min_um/x_max_um");
    require(grid.p_window_ptd > 0.0, "grid.p_window_ptd");
    require(grid.n_steps >= 1, "grid.n_steps");
    require(grid.store_stride >= 1 && grid.n_steps % grid.store_stride == 0,
            "grid.store_stride");
    require(grid.n_nodes >= 2, "grid.n_nodes");
    require(grid.mass_drift_limit > 0.0, "grid.mass_drift_limit");
    require(solver.tolerance > 0.0, "solver.tolerance");
    require(solver.max_iterations >= 1, "solver.max_iterations");
    require(target.w_x_um > 0.0, "target.w_x_um");
    require(target.w_p_ptd > 0.0, "target.w_p_ptd");
    require(target.box_x_half_um > 0.0, "target.box_x_half_um");
    require(tier == "deterministic" || tier == "classical" || tier == "quantum", "tier");
    require(epsilon >= 0.0, "epsilon");
    require(t_f_us >= 0.0, "t_f_us");
    require(T_init_mK > 0.0, "T_init_mK");
    for (double w : {weights.gamma_u, weights.gamma_v, weights.nu_u, weights.nu_v, weights.nu_x,
                     weights.nu_p, weights.nu_tf})
        require(w >= 0.0, "weights");
    if (!bad.empty()) {
        std::string msg = "invalid config values:";
        for (const auto& b : bad) msg += " " + b;
        throw ConfigError(msg);
    }
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    return json{
        {"species", {{"name", c.species.name}, {"mass_amu", c.species.mass_amu}}},
        {"traps",
         {{"x_A_um", c.traps.x_A_um},
          {"x_B_um", c.traps.x_B_um},
          {"depth_mK", c.traps.depth_mK},
          {"sigma_um", c.traps.sigma_um}}},
        {"tweezer",
         {{"v_fixed_mK", c.tweezer.v_fixed_mK},
          {"v_min_mK", c.tweezer.v_min_mK},
          {"v_max_mK", c.tweezer.v_max_mK}}},
        {"weights",
         {{"gamma_u", c.weights.gamma_u},
          {"gamma_v", c.weights.gamma_v},
          {"nu_u", c.weights.nu_u},
          {"nu_v", c.weights.nu_v},
          {"nu_x", c.weights.nu_x},
          {"nu_p", c.weights.nu_p},
          {"nu_tf", c.weights.nu_tf}}},
        {"noise", {{"gamma_per_us", c.noise.gamma_per_us}, {"T_th_mK", c.noise.T_th_mK}}},
        {"grid",
         {{"n_x", c.grid.n_x},
          {"n_p", c.grid.n_p},
          {"x_min_um", c.grid.x_min_um},
          {"x_max_um", c.grid.x_max_um},
          {"p_window_ptd", c.grid.p_window_ptd},
          {"n_steps", c.grid.n_steps},
          {"store_stride", c.grid.store_stride},
          {"n_nodes", c.grid.n_nodes},
          {"mass_drift_limit", c.grid.mass_drift_limit}}},
        {"target",
         {{"w_x_um", c.target.w_x_um},
          {"w_p_ptd", c.target.w_p_ptd},
          {"box_x_half_um", c.target.box_x_half_um}}},
        {"solver",
         {{"tolerance", c.solver.tolerance}, {"max_iterations", c.solver.max_iterations}}},
        {"tier", c.tier},
        {"epsilon", c.epsilon},
        {"t_f_us", c.t_f_us},
        {"T_init_mK", c.T_init_mK},
        {"output_dir", c.output_dir},
    };
}

namespace {

void collect_unknown(const json& input, const json& schema, const std::string& prefix,
                     std::vector<std::string>& unknown) {
    for (auto it = input.begin(); it != input.end(); ++it) {
        std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!schema.contains(it.key())) {
            unknown.push_back(path);
        } else if (it.value().is_object()) {
            if (!schema.at(it.key()).is_object())
                unknown.push_back(path);
            else
                collect_unknown(it.value(), schema.at(it.key()), path, unknown);
        }
    }
}

template <typename T>
void read(const json& j, const char* section, const char* key, T& out) {
    if (!j.contains(section)) return;
    const json& s = j.at(section);
    if (s.contains(key)) s.at(key).get_to(out);
}

template <typename T>
void read_top(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a table/object");
    ExperimentConfig c;
    std::vector<std::string> unknown;
    collect_unknown(j, config_to_json(c), "", unknown);
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }

    try {
        read(j, "species", "name", c.species.name);
        read(j, "species", "mass_amu", c.species.mass_amu);
        read(j, "traps", "x_A_um", c.traps.x_A_um);
        read(j, "traps", "x_B_um", c.traps.x_B_um);
        read(j, "traps", "depth_mK", c.traps.depth_mK);
        read(j, "traps", "sigma_um", c.traps.sigma_um);
        read(j, "tweezer", "v_fixed_mK", c.tweezer.v_fixed_mK);
        read(j, "tweezer", "v_min_mK", c.tweezer.v_min_mK);
        read(j, "tweezer", "v_max_mK", c.tweezer.v_max_mK);
        read(j, "weights", "gamma_u", c.weights.gamma_u);
        read(j, "weights", "gamma_v", c.weights.gamma_v);
        read(j, "weights", "nu_u", c.weights.nu_u);
        read(j, "weights", "nu_v", c.weights.nu_v);
        read(j, "weights", "nu_x", c.weights.nu_x);
        read(j, "weights", "nu_p", c.weights.nu_p);
        read(j, "weights", "nu_tf", c.weights.nu_tf);
        read(j, "noise", "gamma_per_us", c.noise.gamma_per_us);
        read(j, "noise", "T_th_mK", c.noise.T_th_mK);
        read(j, "grid", "n_x", c.grid.n_x);
        read(j, "grid", "n_p", c.grid.n_p);
        read(j, "grid", "x_min_um", c.grid.x_min_um);
        read(j, "grid", "x_max_um", c.grid.x_max_um);
        read(j, "grid", "p_window_ptd", c.grid.p_window_ptd);
        read(j, "grid", "n_steps", c.grid.n_steps);
        read(j, "grid", "store_stride", c.grid.store_stride);
        read(j, "grid", "n_nodes", c.grid.n_nodes);
        read(j, "grid", "mass_drift_limit", c.grid.mass_drift_limit);
        read(j, "target", "w_x_um", c.target.w_x_um);
        read(j, "target", "w_p_ptd", c.target.w_p_ptd);
        read(j, "target", "box_x_half_um", c.target.box_x_half_um);
        read(j, "solver", "tolerance", c.solver.tolerance);
        read(j, "solver", "max_iterations", c.solver.max_iterations);
        read_top(j, "tier", c.tier);
        read_top(j, "epsilon", c.epsilon);
        read_top(j, "t_f_us", c.t_f_us);
        read_top(j, "T_init_mK", c.T_init_mK);
        read_top(j, "output_dir", c.output_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

json parse_toml_value(const std::string& raw, int line_no) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
        return raw.substr(1, raw.size() - 2);
    if (raw == "true") return true;
    if (raw == "false") return false;
    try {
        std::size_t pos = 0;
        if (raw.find_first_of(".eE") == std::string::npos && raw.find("inf") == std::string::npos) {
            long long v = std::stoll(raw, &pos);
            if (pos == raw.size()) return v;
        }
        pos = 0;
        double v = std::stod(raw, &pos);
        if (pos == raw.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("config line " + std::to_string(line_no) + ": cannot parse value '" + raw +
                      "'");
}

/// Flat TOML subset: [section] / [a.b] headers and scalar key = value pairs.
json parse_toml_subset(std::istream& in) {
    json root = json::object();
    json* section = &root;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": bad section");
            std::string name = trim(s.substr(1, s.size() - 2));
            section = &root;
            std::stringstream parts(name);
            std::string part;
            while (std::getline(parts, part, '.')) {
                part = trim(part);
                if (part.empty())
                    throw ConfigError("config line " + std::to_string(line_no) + ": bad section");
                section = &(*section)[part];
                if (!section->is_object()) *section = json::object();
            }
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        (*section)[key] = parse_toml_value(value, line_no);
    }
    return root;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::string lead = trim(text);
    json j;
    if (!lead.empty() && lead.front() == '{') {
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("JSON parse error in ") + path + ": " + e.what());
        }
    } else {
        std::istringstream ss(text);
        j = parse_toml_subset(ss);
    }
    return config_from_json(j);
}

Scenario build_scenario(const ExperimentConfig& cfg) {
    cfg.validate();
    Scenario s;
    s.species = Species{cfg.species.name, cfg.species.mass_amu};
    UnitSystem units = make_unit_system(s.species);

    double depth = units.energy_from_mK(cfg.traps.depth_mK);
    s.traps.a = TrapSpec{cfg.traps.x_A_um, -depth, cfg.traps.sigma_um};
    s.traps.b = TrapSpec{cfg.traps.x_B_um, -depth, cfg.traps.sigma_um};
    s.x_A = cfg.traps.x_A_um;
    s.x_B = cfg.traps.x_B_um;

    s.weights.gamma_u = cfg.weights.gamma_u;
    s.weights.gamma_v = cfg.weights.gamma_v;
    s.weights.nu_u = cfg.weights.nu_u;
    s.weights.nu_v = cfg.weights.nu_v;
    s.weights.nu_x = cfg.weights.nu_x;
    s.weights.nu_p = cfg.weights.nu_p;
    s.weights.nu_tf = cfg.weights.nu_tf;

    s.v_fixed = units.energy_from_mK(cfg.tweezer.v_fixed_mK);
    s.v_min = units.energy_from_mK(cfg.tweezer.v_min_mK);
    s.v_max = units.energy_from_mK(cfg.tweezer.v_max_mK);

    s.kT_init = units.temperature_from_mK(cfg.T_init_mK);
    s.noise = noise_coefficients(cfg.noise.gamma_per_us,
                                 units.temperature_from_mK(cfg.noise.T_th_mK), units.epsilon());

    s.p_td = std::sqrt(2.0 * depth);  // m = 1 internally
    s.grid.x_min = cfg.grid.x_min_um;
    s.grid.x_max = cfg.grid.x_max_um;
    s.grid.p_min = -cfg.grid.p_window_ptd * s.p_td;
    s.grid.p_max = cfg.grid.p_window_ptd * s.p_td;
    s.grid.n_x = cfg.grid.n_x;
    s.grid.n_p = cfg.grid.n_p;

    s.evolution.n_steps = cfg.grid.n_steps;
    s.evolution.store_stride = cfg.grid.store_stride;
    s.evolution.mass_drift_limit = cfg.grid.mass_drift_limit;

    s.box.x_half_width = cfg.target.box_x_half_um;
    s.box.p_edge = s.p_td;
    s.target_w_x = cfg.target.w_x_um;
    s.target_w_p = cfg.target.w_p_ptd * s.p_td;

    s.tier = cfg.tier;
    s.t_f = cfg.t_f_us;
    s.n_nodes = cfg.grid.n_nodes;
    s.solver_tolerance = cfg.solver.tolerance;
    s.solver_max_iterations = cfg.solver.max_iterations;

    s.epsilon = cfg.epsilon;
    if (s.tier == "quantum" && s.epsilon == 0.0)
        s.epsilon = estimate_epsilon(units, s.traps.b).epsilon;
    s.evolution.epsilon = (s.tier == "quantum") ? s.epsilon : 0.0;
    return s;
}

}  // namespace atomtrans
