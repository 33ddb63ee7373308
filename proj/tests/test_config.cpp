#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "atomtrans/config.hpp"
#include "atomtrans/report.hpp"

using namespace atomtrans;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << text;
    return p;
}

}  // namespace

TEST_CASE("default config validates and survives a JSON round trip") {
    ExperimentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    nlohmann::json j = config_to_json(cfg);
    ExperimentConfig back = config_from_json(j);
    CHECK(back.species.name == cfg.species.name);
    CHECK(back.traps.x_B_um == cfg.traps.x_B_um);
    CHECK(back.grid.n_x == cfg.grid.n_x);
    CHECK(back.weights.nu_x == cfg.weights.nu_x);
    CHECK(back.tier == cfg.tier);
    CHECK(config_to_json(back) == j);
}

TEST_CASE("TOML subset parsing") {
    auto p = write_temp("atomtrans_cfg.toml",
                        "# comment\n"
                        "tier = \"classical\"  # trailing comment\n"
                        "t_f_us = 7.4\n"
                        "\n"
                        "[traps]\n"
                        "x_B_um = 12.5\n"
                        "depth_mK = 2.0\n"
                        "\n"
                        "[grid]\n"
                        "n_x = 128\n"
                        "n_steps = 500\n");
    ExperimentConfig cfg = load_config(p.string());
    fs::remove(p);
    CHECK(cfg.tier == "classical");
    CHECK(cfg.t_f_us == doctest::Approx(7.4));
    CHECK(cfg.traps.x_B_um == doctest::Approx(12.5));
    CHECK(cfg.traps.depth_mK == doctest::Approx(2.0));
    CHECK(cfg.grid.n_x == 128);
    CHECK(cfg.grid.n_steps == 500);
    // Untouched keys keep their defaults.
    CHECK(cfg.traps.sigma_um == doctest::Approx(1.5));
    CHECK(cfg.species.name == "Sr88");
}

TEST_CASE("unknown keys are rejected with the offending name") {
    auto p = write_temp("atomtrans_bad.toml",
                        "[traps]\nlaser_power_mW = 3.0\n");
    CHECK_THROWS_WITH_AS(load_config(p.string()),
                         doctest::Contains("laser_power_mW"), ConfigError);
    fs::remove(p);

    nlohmann::json j = config_to_json(ExperimentConfig{});
    j["grid"]["n_y"] = 64;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("JSON files are detected by their leading brace") {
    nlohmann::json j = config_to_json(ExperimentConfig{});
    j["tier"] = "quantum";
    j["epsilon"] = 0.22;
    auto p = write_temp("atomtrans_cfg.json", j.dump(2));
    ExperimentConfig cfg = load_config(p.string());
    fs::remove(p);
    CHECK(cfg.tier == "quantum");
    CHECK(cfg.epsilon == doctest::Approx(0.22));
}

TEST_CASE("validation lists bad values") {
    ExperimentConfig cfg;
    cfg.grid.n_x = 0;
    cfg.traps.sigma_um = -1.0;
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("n_x") != std::string::npos);
        CHECK(msg.find("sigma_um") != std::string::npos);
    }
    ExperimentConfig tier;
    tier.tier = "magic";
    CHECK_THROWS_AS(tier.validate(), ConfigError);
}

TEST_CASE("scenario construction converts to internal units") {
    ExperimentConfig cfg;
    cfg.tier = "classical";
    Scenario sc = build_scenario(cfg);
    UnitSystem u = sc.units();

    CHECK(sc.traps.a.center == doctest::Approx(0.0));
    CHECK(sc.traps.b.center == doctest::Approx(10.0));
    CHECK(sc.traps.a.depth == doctest::Approx(-u.energy_from_mK(1.0)));
    CHECK(sc.v_fixed == doctest::Approx(-u.energy_from_mK(1.5)));
    CHECK(sc.v_min == doctest::Approx(-u.energy_from_mK(20.0)));
    CHECK(sc.kT_init == doctest::Approx(u.energy_from_mK(0.1)));
    CHECK(sc.p_td == doctest::Approx(std::sqrt(2.0 * u.energy_from_mK(1.0))));
    CHECK(sc.grid.p_max == doctest::Approx(4.0 * sc.p_td));
    CHECK(sc.grid.p_min == doctest::Approx(-4.0 * sc.p_td));
    CHECK(sc.noise.gamma == doctest::Approx(1e-2));
    CHECK(sc.noise.d_p == doctest::Approx(1e-2 * u.energy_from_mK(0.1)));
    CHECK(sc.box.x_half_width == doctest::Approx(1.0));
    CHECK(sc.target_w_p == doctest::Approx(0.5 * sc.p_td));
    CHECK(sc.evolution.epsilon == 0.0);
    CHECK(sc.t_f == 0.0);
}

TEST_CASE("quantum scenario picks up an epsilon estimate when unset") {
    ExperimentConfig cfg;
    cfg.tier = "quantum";
    cfg.epsilon = 0.0;
    Scenario sc = build_scenario(cfg);
    CHECK(sc.epsilon > 0.0);
    CHECK(sc.evolution.epsilon == doctest::Approx(sc.epsilon));

    cfg.epsilon = 0.22;
    Scenario sc2 = build_scenario(cfg);
    CHECK(sc2.epsilon == doctest::Approx(0.22));
}

TEST_CASE("number formatting is shortest and round trips exactly") {
    for (double v : {0.1, 1.0, -3.25, 7.4, 1e-17, 6.02214076e23, 0.0,
                     0.30000000000000004, 15.700848}) {
        std::string s = format_number(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(-2.5) == "-2.5");
}

TEST_CASE("fnv1a matches the published 64-bit test vectors") {
    CHECK(fnv1a(nullptr, 0) == 0xcbf29ce484222325ull);
    CHECK(fnv1a("a", 1) == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a("foobar", 6) == 0x85944171f73967e8ull);
}

TEST_CASE("CSV writer emits the exact header and formatted rows") {
    auto p = fs::temp_directory_path() / "atomtrans_test.csv";
    write_csv(p.string(), "t_us,u_um,v_mK",
              {{"0", "0.5", "-1.5"}, {"1", "1.25", "-1.5"}});
    std::ifstream in(p);
    std::string l1, l2, l3, l4;
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    bool more = bool(std::getline(in, l4));
    fs::remove(p);
    CHECK(l1 == "t_us,u_um,v_mK");
    CHECK(l2 == "0,0.5,-1.5");
    CHECK(l3 == "1,1.25,-1.5");
    CHECK_FALSE(more);
}

TEST_CASE("run manifest hashes the artifacts it lists") {
    fs::path dir = fs::temp_directory_path() / "atomtrans_manifest_test";
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "data.csv");
        f << "foobar";
    }
    RunManifest man(dir.string());
    man.add_file("data.csv");
    man.set_config_echo(nlohmann::json{{"tier", "classical"}});
    man.set_extra("t_f_us", 7.4);
    man.write();

    std::ifstream in(dir / "manifest.json");
    nlohmann::json j = nlohmann::json::parse(in);
    REQUIRE(j.contains("artifacts"));
    REQUIRE(j["artifacts"].size() == 1);
    CHECK(j["artifacts"][0]["name"] == "data.csv");
    CHECK(j["artifacts"][0]["size"] == 6);
    std::uint64_t h = std::stoull(j["artifacts"][0]["fnv1a"].get<std::string>(), nullptr, 16);
    CHECK(h == fnv1a("foobar", 6));
    CHECK(j["config"]["tier"] == "classical");
    CHECK(j["t_f_us"] == doctest::Approx(7.4));
    fs::remove_all(dir);
}

TEST_CASE("optimization report serializes its fields") {
    OptimizationReport rep;
    rep.config_echo = {{"tier", "classical"}};
    rep.cost_history = {2.0, 1.0};
    rep.fidelity = 0.99;
    rep.final_control = make_control(1.0, 3, 0.0, -0.1);
    rep.temperature_trace = {{0.0, 0.1}, {1.0, 0.08}};
    rep.converged = true;
    nlohmann::json j = rep.to_json();
    CHECK(j["converged"] == true);
    CHECK(j["fidelity"] == doctest::Approx(0.99));
    CHECK(j["cost_history"].size() == 2);
    CHECK(j["final_control"]["times"].size() == 3);
    CHECK(j["temperature_trace"].size() == 2);

    OptimizationReport det;
    det.final_control = make_control(1.0, 3, 0.0, -0.1);
    CHECK_FALSE(det.to_json().contains("fidelity"));
}
