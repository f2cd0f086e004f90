#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

#include "dduq/io/config.hpp"
#include "dduq/io/container.hpp"
#include "dduq/io/pipeline.hpp"
#include "dduq/io/surrogate_io.hpp"
#include "dduq/io/vtk.hpp"

using namespace dduq;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("dduq_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
               std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, DefaultsForEmptyObject) {
    const auto c = io::parse_config_text("{}");
    EXPECT_EQ(c.dim, 2);
    EXPECT_EQ(c.hi[0], 600.0);
    EXPECT_EQ(c.hi[1], 150.0);
    EXPECT_EQ(c.method, io::Method::Deterministic);
    EXPECT_EQ(c.physics.rho1, 1200.0);
    EXPECT_NEAR(c.dt_seconds(), 0.005 * 3.1536e7, 1e-6);
}

TEST(Config, ThreeDimensionalDefaults) {
    const auto c = io::parse_config_text(R"({"domain": {"dim": 3}})");
    EXPECT_EQ(c.hi[2], 150.0);
    EXPECT_EQ(c.coarse_n[2], 3);
}

TEST(Config, RoundTripThroughJson) {
    const auto c = io::parse_config_text(R"({
        "domain": {"dim": 2, "hi": [600, 150], "patch": {"type": "rectangle", "lo": [100], "hi": [400]}},
        "grid": {"coarse_n": [5, 3], "levels": 3},
        "time": {"dt": 0.01, "n_steps": 20, "snapshot_steps": [0, 10, 20]},
        "stochastic": {"field": "paral_3rv"},
        "method": {"kind": "gpc", "rule": "smolyak_cc", "rule_level": 3, "gpc_order": 3, "truncation": "max_degree"},
        "solver": {"krylov_tol_rel": 1e-9, "mg_coarse": "smooth", "threads": 2},
        "output": {"thresholds": [0.05, 0.2], "probes": [[300, 75]]},
        "run": {"workers": 3, "failure_policy": "skip_reweight", "seed": 11}
    })");
    EXPECT_EQ(c.dim_theta, 2);
    EXPECT_EQ(c.linear.mg_coarse, CoarseSolve::ManySmooths);
    EXPECT_EQ(c.failure_policy, io::PolicyKind::SkipReweight);
    const auto again = io::parse_config(io::to_json(c));
    EXPECT_EQ(io::to_json(again), io::to_json(c));
    EXPECT_EQ(again.patch.type, "rectangle");
    EXPECT_EQ(again.patch.hi[0], 400.0);
    EXPECT_EQ(again.seed, 11u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(io::parse_config_text(R"({"grids": {}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text(R"({"grid": {"level": 3}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text(R"({"grid": {"levels": "three"}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text(R"({"domain": {"dim": 1}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text(R"({"time": {"dt": -1}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text(R"({"time": {"n_steps": 5, "snapshot_steps": [3, 2]}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text(R"({"stochastic": {"field": "cyl_3layer"}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text(R"({"method": {"kind": "gpc"}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text(R"({"physics": {"mu": 0}})"), ConfigError);
    EXPECT_THROW(io::parse_config_text("{not json"), ConfigError);
    EXPECT_THROW(io::load_config("/nonexistent/file.json"), ConfigError);
}

TEST(Config, ErrorMessageNamesTheKey) {
    try {
        io::parse_config_text(R"({"output": {"samples": 0}})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("output.samples"), std::string::npos);
    }
}

TEST(Pipeline, RulesAndProblem) {
    auto c = io::parse_config_text(R"({"stochastic": {"field": "paral_3rv"},
        "method": {"kind": "gpc", "rule": "gauss_legendre_tensor", "rule_size": 3}})");
    EXPECT_EQ(io::make_rule(c).size(), 9u);
    EXPECT_EQ(io::make_index_set(c).size(), 15u);
    c.method = io::Method::Qmc;
    c.rule_size = 17;
    EXPECT_EQ(io::make_rule(c).size(), 17u);
    c.method = io::Method::Deterministic;
    EXPECT_EQ(io::make_rule(c).size(), 1u);
    const auto grids = io::make_grids(c);
    EXPECT_EQ(grids.size(), 3u);
    EXPECT_EQ(grids.front().descriptor(), "dim=2 n=17x9");
    const auto p = io::make_problem(c, grids);
    EXPECT_EQ(p.dt, c.dt_seconds());
    EXPECT_EQ(io::nearest_vertex(grids.front(), {300.0, 75.0}), grids.front().index(8, 4, 0));
    EXPECT_EQ(io::nearest_vertex(grids.front(), {-50.0, 1e4}), grids.front().index(0, 8, 0));
}

TEST_F(TempDir, VtkRoundTripIsBitExact) {
    BoxDomain d;
    d.dim = 2;
    d.hi = {600.0, 150.0, 0.0};
    const auto g = build_grid(d, {5, 3, 1}, 2, std::nullopt).front();
    auto data = io::vtk_data(g);
    std::vector<double> c(g.num_vertices()), p(g.num_vertices());
    for (std::size_t v = 0; v < c.size(); ++v) {
        c[v] = std::sin(0.1 * v) / 3.0;
        p[v] = 1e6 * std::exp(-1e-3 * v) + 1e-300;
    }
    c[0] = std::numeric_limits<double>::denorm_min();
    data.fields = {{"c", c}, {"p", p}};
    io::write_vtk(dir / "f.vtk", data, "roundtrip");
    const auto back = io::read_vtk(dir / "f.vtk");
    EXPECT_EQ(back.axes, data.axes);
    EXPECT_EQ(back.field("c"), c);
    EXPECT_EQ(back.field("p"), p);
    EXPECT_THROW(back.field("q"), ConfigError);
    EXPECT_FALSE(fs::exists(dir / "f.vtk.tmp"));

    data.fields = {{"bad", std::vector<double>(3, 0.0)}};
    EXPECT_THROW(io::write_vtk(dir / "g.vtk", data, "x"), UsageError);
    std::ofstream(dir / "junk.vtk") << "hello\n";
    EXPECT_THROW(io::read_vtk(dir / "junk.vtk"), ConfigError);
}

TEST_F(TempDir, CsvUsesSeventeenDigits) {
    {
        io::CsvWriter csv(dir / "sub" / "t.csv");
        csv.header({"a", "b"});
        csv.row(0.1, 2);
        csv.row_values({1.0 / 3.0, 1e300});
    }
    const auto text = slurp(dir / "sub" / "t.csv");
    EXPECT_EQ(text, "a,b\n0.10000000000000001,2\n0.33333333333333331,1.0000000000000001e+300\n");
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(io::format_double(1.0 / 7.0)), 1.0 / 7.0);
}

TEST_F(TempDir, ContainerRoundTripAndErrors) {
    std::vector<double> payload{0.0, -0.0, 1.5, std::numeric_limits<double>::infinity(), 1e-310};
    io::write_container(dir / "x.bin", "MAGIC 1", {{"k", 3}}, payload);
    const auto c = io::read_container(dir / "x.bin", "MAGIC 1");
    EXPECT_EQ(c.header.at("k"), 3);
    ASSERT_EQ(c.payload.size(), payload.size());
    for (std::size_t i = 0; i < payload.size(); ++i)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(c.payload[i]), std::bit_cast<std::uint64_t>(payload[i]));
    EXPECT_THROW(io::read_container(dir / "x.bin", "OTHER 1"), ConfigError);
    const auto bytes = slurp(dir / "x.bin");
    std::ofstream(dir / "cut.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    EXPECT_THROW(io::read_container(dir / "cut.bin", "MAGIC 1"), ConfigError);
}

TEST(Container, FnvKnownDigests) {
    EXPECT_EQ(io::fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(io::fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(io::fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST_F(TempDir, SurrogateRoundTrip) {
    BoxDomain d;
    d.dim = 2;
    d.hi = {600.0, 150.0, 0.0};
    const auto g = build_grid(d, {5, 3, 1}, 1, std::nullopt).front();
    GpcSurrogate s;
    s.index_set = build_multiindex_set(2, 2, TruncationRule::MaxDegree);
    for (const auto& b : s.index_set.indices) s.norms.push_back(basis_norm(b));
    s.snapshot_times = {0.0, 1.5e6};
    s.field_size = g.num_vertices();
    s.coeffs.assign(2, std::vector<std::vector<double>>(s.index_set.size(), std::vector<double>(s.field_size)));
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t k = 0; k < s.index_set.size(); ++k)
            for (std::size_t v = 0; v < s.field_size; ++v) s.coeffs[t][k][v] = std::cos(1.0 + t + 0.1 * k + 0.01 * v);
    io::save_surrogate(dir / "s.bin", s, g);
    const auto back = io::load_surrogate(dir / "s.bin");
    EXPECT_EQ(back.surrogate.index_set.indices, s.index_set.indices);
    EXPECT_EQ(back.surrogate.index_set.rule, TruncationRule::MaxDegree);
    EXPECT_EQ(back.surrogate.snapshot_times, s.snapshot_times);
    EXPECT_EQ(back.surrogate.coeffs, s.coeffs);
    EXPECT_EQ(back.surrogate.norms, s.norms);
    EXPECT_EQ(back.n, g.n());
    const std::vector<double> th{0.3, -0.9};
    EXPECT_EQ(surrogate_eval(back.surrogate, th, 1), surrogate_eval(s, th, 1));
}
