#include <filesystem>
#include <sstream>
#include <gtest/gtest.h>
#include <gridtopo/cli/cli.hpp>

using namespace gridtopo;
namespace fs = std::filesystem;
using io::json;

namespace {

struct Run
{
    int rc;
    std::string out, err;
};

Run invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int rc = cli::run_cli(std::move(args), out, err);
    return {rc, out.str(), err.str()};
}

class Cli : public ::testing::Test
{
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("gridtopo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string p(const std::string& name) const { return (dir / name).string(); }
    json load(const std::string& name) const { return json::parse(io::read_file(dir / name)); }

    fs::path dir;
};

} // namespace

TEST_F(Cli, SimulateEstimateEvaluate)
{
    auto r = invoke({"simulate", "--network", "eightbus_radial", "--T", "2000", "--seed", "7", "--out", p("")});
    ASSERT_EQ(r.rc, 0) << r.err;
    for (auto f : {"panel.csv", "network.csv", "truth_edges.csv", "scenario.txt", "simulate_manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    r = invoke({"estimate", "--panel", p("panel.csv"), "--network", p("network.csv"), "--out", p("")});
    ASSERT_EQ(r.rc, 0) << r.err;
    r = invoke({"evaluate", "--estimate", p("estimate.json"), "--truth", p("truth_edges.csv"), "--out", p("")});
    ASSERT_EQ(r.rc, 0) << r.err;
    const auto ev = load("evaluation.json");
    EXPECT_EQ(ev.at("error_rate").get<double>(), 0.0);
    EXPECT_EQ(json::parse(r.out).at("error_rate").get<double>(), 0.0);
    // Timings stay in the manifest.
    EXPECT_FALSE(load("estimate.json").dump().find("timings") != std::string::npos);
    EXPECT_TRUE(load("estimate_manifest.json").contains("timings_s"));
}

TEST_F(Cli, FileRoundTripMatchesInMemoryPipeline)
{
    ASSERT_EQ(invoke({"simulate", "--network", "eightbus_mesh3", "--T", "500", "--seed", "3", "--out", p("")}).rc, 0);
    ASSERT_EQ(invoke({"estimate", "--panel", p("panel.csv"), "--out", p("")}).rc, 0);
    sim::ScenarioConfig cfg;
    cfg.network = "eightbus_mesh3";
    cfg.T = 500;
    cfg.seed = 3;
    const auto panel = sim::simulate(cfg).panel;
    topo::TopologyConfig tc;
    const auto direct = topo::estimate_topology(panel, tc);
    const auto from_file = io::edges_from_json(load("estimate.json").at("edges"));
    EXPECT_TRUE(from_file.same_edges(direct.edges));
}

TEST_F(Cli, InsufficientData)
{
    io::write_file(dir / "one.csv", "v_0,v_1\n1.0,0.99\n");
    const auto r = invoke({"estimate", "--panel", p("one.csv"), "--out", p("")});
    EXPECT_EQ(r.rc, 5);
    EXPECT_EQ(json::parse(r.err).at("error").at("code"), "insufficient_data");
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(invoke({}).rc, 2);
    EXPECT_EQ(invoke({"estimate"}).rc, 2);
    EXPECT_EQ(invoke({"estimate", "--panel", p("missing.csv"), "--out", p("")}).rc, 4);
    io::write_file(dir / "bad.csv", "v_0,v_1\n1.0,x\n1,1\n");
    EXPECT_EQ(invoke({"estimate", "--panel", p("bad.csv"), "--out", p("")}).rc, 3);
    EXPECT_EQ(invoke({"simulate", "--network", "nonesuch", "--out", p("")}).rc, 2);
    EXPECT_EQ(invoke({"simulate", "--network", p("missing.csv"), "--out", p("")}).rc, 4);
}

TEST_F(Cli, MissingBusWarning)
{
    ASSERT_EQ(invoke({"simulate", "--network", "eightbus_radial", "--T", "500", "--out", p("")}).rc, 0);
    const auto full = sim::simulate([] {
        sim::ScenarioConfig c;
        c.T = 500;
        return c;
    }()).panel;
    std::vector<bus_t> keep{0, 1, 2, 3, 4, 5, 7};
    io::write_file(dir / "partial.csv", io::format_measurements(full.select(keep)));
    const auto r = invoke({"estimate", "--panel", p("partial.csv"), "--network", "eightbus_radial", "--out", p("")});
    ASSERT_EQ(r.rc, 0) << r.err;
    const auto warnings = load("estimate.json").at("warnings").dump();
    EXPECT_NE(warnings.find("bus 6: no measurements"), std::string::npos) << warnings;
}

TEST_F(Cli, SweepRowsAndRerun)
{
    auto r = invoke({"sweep", "--network", "eightbus_radial", "--T", "50,200,1000,5000", "--seeds", "1", "--rules", "and-or",
                  "--out", p("a")});
    ASSERT_EQ(r.rc, 0) << r.err;
    const auto sweep = load("a/sweep.json");
    ASSERT_EQ(sweep.at("rows").size(), 4u);
    std::vector<long long> Ts;
    for (const auto& row : sweep.at("rows")) Ts.push_back(row.at("T").get<long long>());
    EXPECT_EQ(Ts, (std::vector<long long>{50, 200, 1000, 5000}));
    EXPECT_EQ(sweep.at("rows")[3].at("error_rate").get<double>(), 0.0);

    r = invoke({"rerun", "--manifest", p("a/sweep_manifest.json"), "--out", p("b")});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_EQ(io::read_file(dir / "a/sweep.json"), io::read_file(dir / "b/sweep.json"));
    EXPECT_EQ(io::read_file(dir / "a/sweep.csv"), io::read_file(dir / "b/sweep.csv"));
}

TEST_F(Cli, PathAndDiagnose)
{
    ASSERT_EQ(invoke({"simulate", "--network", "chain_5", "--T", "300", "--out", p("")}).rc, 0);
    auto r = invoke({"path", "--panel", p("panel.csv"), "--bus", "2", "--out", p("")});
    ASSERT_EQ(r.rc, 0) << r.err;
    const auto path = load("path.json");
    EXPECT_EQ(path.at("neighbors").get<std::vector<bus_t>>(), (std::vector<bus_t>{1, 3}));
    EXPECT_FALSE(path.at("trace").empty());

    r = invoke({"diagnose", "--panel", p("panel.csv"), "--network", "chain_5", "--out", p("")});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "diagnose.json"));
}
