#include <filesystem>
#include <gtest/gtest.h>
#include <gridtopo/io/manifest.hpp>
#include <gridtopo/io/measurement_io.hpp>
#include <gridtopo/io/network_io.hpp>
#include <gridtopo/io/scenario_io.hpp>
#include <gridtopo/simulator/networks.hpp>
#include <gridtopo/simulator/scenario.hpp>

using namespace gridtopo;
using namespace gridtopo::io;

namespace {

errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return errc::invalid_argument;
}

std::string message_of(auto&& fn)
{
    try {
        fn();
    } catch (const error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(NetworkIo, TwoBusExample)
{
    const auto net = parse_network("from,to,r,x\n0,1,0.01,0.02\n");
    EXPECT_EQ(net.bus_count(), 2u);
    ASSERT_EQ(net.branches().size(), 1u);
    EXPECT_NEAR(std::abs(net.branches()[0].admittance - 1.0 / complex_t(0.01, 0.02)), 0.0, 1e-12);
    EXPECT_EQ(net.slack(), 0u);
}

TEST(NetworkIo, ShuntColumns)
{
    const auto net = parse_network("from,to,r,x,b_from,b_to\n0,1,0.01,0.02,0.001,0.002\n1,2,0.01,0.02,0,0.003\n");
    EXPECT_EQ(net.shunts()[1], complex_t(0.0, 0.002));
    EXPECT_EQ(net.shunts()[2], complex_t(0.0, 0.003));
    const auto again = parse_network(format_network(net));
    for (bus_t b = 0; b < 3; ++b) EXPECT_EQ(again.shunts()[b], net.shunts()[b]);
}

TEST(NetworkIo, Errors)
{
    EXPECT_EQ(code_of([] { parse_network("from,to,r,x\n0,1,0.01,0.02\n1,0,0.03,0.04\n"); }), errc::duplicate_branch);
    EXPECT_NE(message_of([] { parse_network("from,to,r,x\n0,1,0.01,0.02\n1,0,0.03,0.04\n"); }).find("(1,0)"),
              std::string::npos);
    EXPECT_EQ(code_of([] { parse_network("from,to,r\n0,1,0.01\n"); }), errc::parse_error);
    EXPECT_EQ(code_of([] { parse_network("from,to,r,x\n0,1,0.01\n"); }), errc::parse_error);
    EXPECT_EQ(code_of([] { parse_network("from,to,r,x\n0,1,0,0\n"); }), errc::parse_error);
    EXPECT_EQ(code_of([] { parse_network("from,to,r,x\n0,1,nan,0.1\n"); }), errc::parse_error);
    EXPECT_EQ(code_of([] { parse_network("from,to,r,x\n0,1,0.1,0.1\n2,3,0.1,0.1\n"); }), errc::disconnected_network);
    EXPECT_EQ(code_of([] { parse_network(""); }), errc::parse_error);
    const auto msg = message_of([] { parse_network("from,to,r,x\n0,1,0.1,0.1\n0,x,0.1,0.1\n"); });
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(NetworkIo, RoundTripBuiltins)
{
    for (std::string name : {"eightbus_mesh3", "feeder_50_5", "lv_suburban_style"}) {
        const auto net = sim::builtin_network(name);
        const auto again = parse_network(format_network(net));
        ASSERT_EQ(again.branches().size(), net.branches().size());
        EXPECT_TRUE(again.edges().same_edges(net.edges()));
        for (std::size_t i = 0; i < net.branches().size(); ++i) {
            const auto y = net.branches()[i].admittance;
            EXPECT_LE(std::abs(again.branches()[i].admittance - y), 1e-12 * std::abs(y));
        }
    }
}

TEST(EdgesIo, RoundTrip)
{
    const auto e = sim::builtin_network("eightbus_radial").edges();
    EXPECT_TRUE(parse_edges(format_edges(e)).same_edges(e));
    EXPECT_EQ(format_edges(e).substr(0, 8), "a,b\n0,1\n");
    EXPECT_THROW(parse_edges("a,b\n1,1\n"), error);
    EXPECT_THROW(parse_edges("x,y\n1,2\n"), error);
}

TEST(MeasurementIo, ThreeRowExample)
{
    const auto p = parse_measurements("v_1,v_2\n1.00,0.99\n1.02,0.98\n1.01,0.97\n", PanelMode::magnitude);
    EXPECT_EQ(p.rows(), 3);
    EXPECT_EQ(p.buses(), (std::vector<bus_t>{1, 2}));
    EXPECT_EQ(p.magnitudes()(1, 0), 1.02);
    EXPECT_EQ(p.magnitudes()(2, 1), 0.97);
    EXPECT_TRUE(p.timestamps().empty());

    const auto ph = parse_measurements("timestamp,v_3,theta_3\n0,1.0,0\n1,1.0,90\n", PanelMode::phasor);
    EXPECT_EQ(ph.timestamps(), (std::vector<double>{0, 1}));
    EXPECT_NEAR(std::abs(ph.phasors()(1, 0) - complex_t(0, 1)), 0.0, 1e-15);
}

TEST(MeasurementIo, Errors)
{
    EXPECT_EQ(code_of([] { parse_measurements("v_1,v_2\n1,1\n1\n", PanelMode::magnitude); }), errc::parse_error);
    EXPECT_EQ(code_of([] { parse_measurements("v_1,w_2\n1,1\n1,1\n", PanelMode::magnitude); }), errc::parse_error);
    EXPECT_EQ(code_of([] { parse_measurements("v_1\n1\ninf\n", PanelMode::magnitude); }), errc::parse_error);
    EXPECT_EQ(code_of([] { parse_measurements("v_1\n1\n", PanelMode::magnitude); }), errc::insufficient_data);
    EXPECT_EQ(code_of([] { parse_measurements("v_1\n1\n1\n", PanelMode::phasor); }), errc::mode_mismatch);
    EXPECT_EQ(code_of([] { parse_measurements("v_1,v_1\n1,1\n1,1\n", PanelMode::magnitude); }), errc::parse_error);
    const auto msg = message_of([] { parse_measurements("v_1,v_2\n1,1\n1,1\n1\n", PanelMode::magnitude); });
    EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(MeasurementIo, SimulatorRoundTripIsBitIdentical)
{
    sim::ScenarioConfig cfg;
    cfg.T = 200;
    cfg.mode = PanelMode::phasor;
    cfg.noise_level = 0.002;
    const auto panel = sim::simulate(cfg).panel;
    const auto again = parse_measurements(format_measurements(panel), PanelMode::phasor);
    EXPECT_EQ(again.magnitudes(), panel.magnitudes());
    EXPECT_EQ(again.angles_deg(), panel.angles_deg());
    EXPECT_EQ(again.buses(), panel.buses());
    const auto mag = parse_measurements(format_measurements(panel), PanelMode::magnitude);
    EXPECT_EQ(mag.mode(), PanelMode::magnitude);
    EXPECT_EQ(mag.magnitudes(), panel.magnitudes());
}

TEST(ScenarioIo, RoundTrip)
{
    sim::ScenarioConfig c;
    c.network = "chainloop_30_3";
    c.T = 1234;
    c.injection_sigma = 0.0125;
    c.base_loads = {-0.01, -0.02, 0.1 + 0.2};
    c.noise_level = 0.005;
    c.seed = 18446744073709551615ull;
    c.mode = PanelMode::phasor;
    c.slack_voltage = {1.02, -0.01};
    const auto text = format_scenario(c);
    const auto d = parse_scenario(text);
    EXPECT_EQ(d.network, c.network);
    EXPECT_EQ(d.T, c.T);
    EXPECT_EQ(d.injection_sigma, c.injection_sigma);
    EXPECT_EQ(d.base_loads, c.base_loads);
    EXPECT_EQ(d.noise_level, c.noise_level);
    EXPECT_EQ(d.seed, c.seed);
    EXPECT_EQ(d.mode, c.mode);
    EXPECT_EQ(d.slack_voltage, c.slack_voltage);
    EXPECT_EQ(format_scenario(d), text);
}

TEST(ScenarioIo, Errors)
{
    EXPECT_THROW(parse_scenario("colour = red\n"), error);
    EXPECT_THROW(parse_scenario("T = 5\nT = 6\n"), error);
    EXPECT_THROW(parse_scenario("T = 1\n"), error);
    EXPECT_THROW(parse_scenario("mode = vector\n"), error);
    EXPECT_EQ(parse_scenario("# only a comment\n\nseed = 9 # trailing\n").seed, 9u);
}

TEST(Manifest, DigestAndJson)
{
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    const auto dir = std::filesystem::temp_directory_path() / "gridtopo_io_manifest";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    RunManifest m;
    m.subcommand = "simulate";
    m.args = {"--T", "10"};
    m.seed = 3;
    m.emit(dir, "x.txt", "abc");
    EXPECT_EQ(m.outputs.at("x.txt"), sha256_hex("abc"));
    EXPECT_EQ(file_sha256(dir / "x.txt"), sha256_hex("abc"));
    const auto back = RunManifest::from_json(m.to_json());
    EXPECT_EQ(back.subcommand, "simulate");
    EXPECT_EQ(back.args, m.args);
    EXPECT_EQ(back.seed, m.seed);
    EXPECT_EQ(back.outputs, m.outputs);
    EXPECT_THROW(RunManifest::from_json(json{{"tool", "other"}}), error);
    std::filesystem::remove_all(dir);
}
