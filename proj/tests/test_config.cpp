#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "b92sim/config.hpp"
#include "b92sim/errors.hpp"

using namespace b92;

TEST_CASE("empty file gives the documented defaults") {
    const auto c = parse_config("");
    const SimConfig d;
    CHECK(to_toml(c) == to_toml(d));
    CHECK(c.source.clock_hz == 2e9);
    CHECK(c.source.mean_photon_number == 0.1);
    CHECK(c.channel.length_km == 6.55);
    CHECK(c.profile == "enhanced");
    CHECK(c.gate.gate_fraction == 1.0);
    CHECK(c.security.qber_secure_threshold == 0.10);
    CHECK(c.n_slots == 2000000);
    const auto text = to_toml(c);
    for (const char* key : {"clock_hz", "mean_photon_number", "excess_loss_db", "dark_cps", "jitter_fwhm_ps",
                            "gate_fraction", "sync_fwhm_ps", "ec_inefficiency_f", "n_slots", "single_photon"})
        CHECK(text.find(key) != std::string::npos);
}

TEST_CASE("bare keys resolve to their section") {
    const auto c = parse_config("clock_hz = 1.5e9\nprofile = \"standard\"\n");
    CHECK(c.source.clock_hz == 1.5e9);
    CHECK(c.profile == "standard");
    const auto d = c.detector(c.profile);
    CHECK(d.jitter_table.front().fwhm_ps == 570.0);
}

TEST_CASE("enhanced profile carries the built-in jitter table") {
    const auto c = parse_config("clock_hz = 2e9\nprofile = \"enhanced\"\n");
    const auto d = c.link().detector;
    REQUIRE(d.jitter_table.size() == 2);
    CHECK(d.jitter_table[0].fwhm_ps == 370.0);
    CHECK(d.jitter_table[1].fwhm_ps == 450.0);
}

TEST_CASE("sections, comments and all value kinds") {
    const auto c = parse_config(R"(
# comment
[source]
clock_hz = 1_000_000_000   # trailing comment
single_photon = true
[channel]
mode = "attenuator"
[profile.fast]
jitter_rate_cps = [1e3, 1e5, 2e6]
jitter_fwhm_ps = [40, 45, 60]
[detector]
profile = "fast"
[run]
seed = 18446744073709551615
n_slots = 3e6
)");
    CHECK(c.source.clock_hz == 1e9);
    CHECK(c.source.single_photon);
    CHECK(c.channel.mode == ChannelMode::AttenuatorOnly);
    CHECK(c.link().detector.jitter_table.size() == 3);
    CHECK(c.link("standard").detector.jitter_table.front().fwhm_ps == 570.0);
    CHECK(c.seed == 18446744073709551615ULL);
    CHECK(c.n_slots == 3000000);
}

TEST_CASE("round trip through the echoed form") {
    SimConfig c;
    c.name = "trip";
    c.source.clock_hz = 1.23456789e9;
    c.gate.gate_fraction = 0.6106994628906249;
    c.sync_fwhm_ps = 0.1 + 0.2;
    c.seed = 0xfedcba9876543210ULL;
    c.profiles["standard"].centroid_alpha = 0.3;
    const auto back = parse_config(to_toml(c));
    CHECK(to_toml(back) == to_toml(c));
    CHECK(back.gate.gate_fraction == c.gate.gate_fraction);
    CHECK(back.sync_fwhm_ps == c.sync_fwhm_ps);
    CHECK(back.seed == c.seed);
}

TEST_CASE("diagnostics name the offending key") {
    auto message = [](const char* text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("<no error>");
    };
    CHECK(message("gate_fraction = 1.5").find("gate_fraction must be in (0,1]") != std::string::npos);
    CHECK(message("gate_fraction = 0").find("gate_fraction must be in (0,1]") != std::string::npos);
    CHECK(message("[source]\nclock_ghz = 2\n").find("source.clock_ghz") != std::string::npos);
    CHECK(message("[source]\nclock_hz = \"fast\"\n").find("source.clock_hz") != std::string::npos);
    CHECK(message("[run]\nn_slots = 2.5\n").find("run.n_slots") != std::string::npos);
    CHECK(message("profile = \"nonesuch\"").find("nonesuch") != std::string::npos);
    CHECK(message("mode = \"vacuum\"").find("vacuum") != std::string::npos);
    CHECK(message("[source]\nclock_hz = 1\nclock_hz = 2\n").find("duplicate") != std::string::npos);
    CHECK(message("[profile.x]\njitter_rate_cps = [1e3]\njitter_fwhm_ps = [1, 2]\n") != "<no error>");
    CHECK(message("this is not toml") != "<no error>");
}

TEST_CASE("load_config reads files") {
    const auto dir = std::filesystem::temp_directory_path() / "b92sim_config_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "c.toml";
    std::ofstream(path) << "length_km = 15\n";
    CHECK(load_config(path).channel.length_km == 15.0);
    CHECK_THROWS(load_config(dir / "missing.toml"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("shortest round-trip number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(2e9) == "2e+09");
    CHECK(format_number(6.55) == "6.55");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}
