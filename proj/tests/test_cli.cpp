#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "jdlab/cli.hpp"

namespace fs = std::filesystem;
using jdlab::io::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("jdlab_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_spec(const std::string& name, const json& j) const {
    jdlab::io::write_file(path(name), j.dump());
    return path(name);
  }

  int run(std::vector<std::string> args, const std::string& out = "out") {
    args.insert(args.begin(), {"--out-dir", path(out)});
    err_.str("");
    return jdlab::cli::run(args, err_);
  }

  json read_json(const std::string& rel) const { return json::parse(jdlab::io::read_file(path(rel))); }

  std::string err() const { return err_.str(); }

  fs::path dir_;
  std::ostringstream err_;
};

json z_nn_spec(double R, int dim = 1) {
  return {{"type", "lattice"},
          {"truncation_radius", R},
          {"params", {{"dim", dim}}},
          {"kernel", {{"family", "nearest_neighbor"}}}};
}

}  // namespace

TEST_F(CliTest, CapacityLineValues) {
  const auto spec = write_spec("z.json", z_nn_spec(100));
  ASSERT_EQ(run({"capacity", "--space", spec, "--K", "point:100", "--radii", "10,20,40,80"}), 0) << err();
  const auto j = read_json("out/capacity.json");
  const std::vector<double> want{0.4, 0.2, 0.1, 0.05};
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(j["capacities"][i].get<double>(), want[i], 1e-10);
  EXPECT_TRUE(j["certificate"].get<bool>());
  EXPECT_EQ(j["manifest"], "capacity.manifest.json");
  EXPECT_TRUE(fs::exists(path("out/capacity.csv")));
  const auto m = read_json("out/capacity.manifest.json");
  EXPECT_EQ(m["command"], "capacity");
  EXPECT_TRUE(m.contains("wall_time_seconds"));
  EXPECT_EQ(m["inputs"][0]["fnv1a64"].get<std::string>().size(), 16u);
}

TEST_F(CliTest, BuildRoundTripGivesSameResults) {
  const auto spec = write_spec("z.json", z_nn_spec(60));
  ASSERT_EQ(run({"build", "--spec", spec}, "b"), 0) << err();
  const auto b = read_json("b/build.json");
  EXPECT_EQ(b["space"]["points"], 121);
  ASSERT_EQ(run({"capacity", "--space", path("b/space.bin"), "--K", "ball:60:1", "--radii", "5,10,20", "--green"},
                "c1"),
            0)
      << err();
  ASSERT_EQ(run({"capacity", "--space", spec, "--K", "ball:60:1", "--radii", "5,10,20", "--green"}, "c2"), 0)
      << err();
  EXPECT_EQ(jdlab::io::read_file(path("c1/capacity.json")), jdlab::io::read_file(path("c2/capacity.json")));
  EXPECT_EQ(read_json("c1/capacity.json")["K_points"], 3);
}

TEST_F(CliTest, SerializationPreservesModel) {
  jdlab::kernels::MixedGraphSpec g;
  g.graph = jdlab::kernels::grid_graph(3);
  g.subdivisions = 1;
  const auto m = jdlab::kernels::mixed_graph(g);
  const auto bytes = jdlab::io::serialize(m);
  ASSERT_TRUE(jdlab::io::is_binary_model(bytes));
  const auto back = jdlab::io::deserialize(bytes);
  ASSERT_EQ(back.space.size(), m.space.size());
  EXPECT_EQ(back.kernel.entries().size(), m.kernel.entries().size());
  ASSERT_TRUE(back.local.has_value());
  for (jdlab::PointId x = 0; x < m.space.size(); ++x) {
    EXPECT_EQ(back.space.measure(x), m.space.measure(x));
    EXPECT_EQ(back.space.distance(0, x), m.space.distance(0, x));
    EXPECT_EQ(back.space.graph_distance(0, x), m.space.graph_distance(0, x));
    EXPECT_EQ(back.local->carries(x), m.local->carries(x));
  }
  EXPECT_EQ(jdlab::io::serialize(back), bytes);
  EXPECT_THROW(jdlab::io::deserialize(bytes.substr(0, bytes.size() / 2)), jdlab::UserError);
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossThreads) {
  const json spec = {{"type", "stable_like"},
                     {"truncation_radius", 40},
                     {"kernel", {{"family", "layered"}, {"alpha", 1.0}, {"beta", 1.0}}}};
  const auto s = write_spec("s.json", spec);
  const std::vector<std::string> common{"simulate", "--space", s, "--trials", "200", "--horizon", "2", "--outer", "20"};
  auto a1 = common, a2 = common;
  a1.insert(a1.begin(), {"--seed", "9", "--threads", "1"});
  a2.insert(a2.begin(), {"--seed", "9", "--threads", "2"});
  a1.push_back("--paths-csv");
  a2.push_back("--paths-csv");
  ASSERT_EQ(run(a1, "r1"), 0) << err();
  ASSERT_EQ(run(a2, "r2"), 0) << err();
  EXPECT_EQ(jdlab::io::read_file(path("r1/simulate.json")), jdlab::io::read_file(path("r2/simulate.json")));
  EXPECT_EQ(jdlab::io::read_file(path("r1/trajectories.csv")), jdlab::io::read_file(path("r2/trajectories.csv")));
  const auto j = read_json("r1/simulate.json");
  EXPECT_EQ(j["survival"]["trials"], 200);
  EXPECT_FALSE(j.contains("wall_time_seconds"));
}

TEST_F(CliTest, SimulateReturnProbability) {
  const auto spec = write_spec("z.json", z_nn_spec(30));
  ASSERT_EQ(run({"--seed", "3", "simulate", "--space", spec, "--x0", "31", "--trials", "2000", "--return-K",
                 "point:30", "--return-R", "10"}),
            0)
      << err();
  const auto j = read_json("out/simulate.json");
  EXPECT_NEAR(j["return"]["probability"]["estimate"].get<double>(), 0.9, 0.03);
}

TEST_F(CliTest, StableLikeBothCriteriaSatisfied) {
  const json spec = {{"type", "stable_like"},
                     {"truncation_radius", 300},
                     {"params", {{"space", "lattice"}, {"dim", 1}}},
                     {"kernel", {{"family", "layered"}, {"alpha", 1.5}, {"beta", 1.5}}}};
  const auto s = write_spec("s.json", spec);
  ASSERT_EQ(run({"criteria", "--space", s, "--radii", "10,20,40,80,160,250"}), 0) << err();
  const auto j = read_json("out/criteria.json");
  EXPECT_EQ(j["conservativeness"]["verdict"], "criterion satisfied (sufficient condition)");
  EXPECT_EQ(j["recurrence"]["verdict"], "criterion satisfied (sufficient condition)");
  EXPECT_TRUE(j["conservativeness"]["davies_constant"].is_number());
  EXPECT_TRUE(fs::exists(path("out/criteria.csv")));
}

TEST_F(CliTest, ThreeDimensionalRecurrenceInconclusive) {
  const auto s = write_spec("z3.json", z_nn_spec(8, 3));
  ASSERT_EQ(run({"criteria", "--space", s, "--radii", "2:7:1"}), 0) << err();
  const auto j = read_json("out/criteria.json");
  EXPECT_EQ(j["recurrence"]["verdict"], "inconclusive");
}

TEST_F(CliTest, GraphCriteriaIncludeShellsAndLogDistance) {
  const json spec = {{"type", "graph"}, {"truncation_radius", 10}, {"params", {{"generator", "grid"}}}};
  const auto s = write_spec("g.json", spec);
  ASSERT_EQ(run({"criteria", "--space", s, "--radii", "1.5,2,3"}), 0) << err();
  const auto j = read_json("out/criteria.json");
  ASSERT_TRUE(j.contains("quadratic_shells"));
  EXPECT_NEAR(j["quadratic_shells"]["fitted_constant"].get<double>(), 2.0, 1e-12);
  EXPECT_TRUE(j["log_distance"]["positive"].get<bool>());
}

TEST_F(CliTest, MissingFieldIsUserError) {
  const auto s = write_spec("bad.json", json{{"type", "lattice"}, {"kernel", {{"family", "nearest_neighbor"}}}});
  EXPECT_EQ(run({"build", "--spec", s}), 2);
  EXPECT_NE(err().find("missing field 'truncation_radius'"), std::string::npos) << err();
}

TEST_F(CliTest, MalformedJsonIsUserError) {
  jdlab::io::write_file(path("bad.json"), "{\"type\": ");
  EXPECT_EQ(run({"build", "--spec", path("bad.json")}), 2);
  EXPECT_NE(err().find("malformed JSON"), std::string::npos) << err();
}

TEST_F(CliTest, UnknownTypeAndMissingFileAreUserErrors) {
  const auto s = write_spec("u.json", json{{"type", "torus"}});
  EXPECT_EQ(run({"build", "--spec", s}), 2);
  EXPECT_EQ(run({"build", "--spec", path("nope.json")}), 2);
}

TEST_F(CliTest, KOutsideSmallestBallIsUserError) {
  const auto spec = write_spec("z.json", z_nn_spec(50));
  EXPECT_EQ(run({"capacity", "--space", spec, "--K", "point:60", "--center", "50", "--radii", "5,10"}), 2);
  EXPECT_NE(err().find("not inside"), std::string::npos) << err();
  EXPECT_EQ(run({"capacity", "--space", spec, "--K", "point:50", "--radii", "5,60"}), 2);
  EXPECT_NE(err().find("max usable radius"), std::string::npos) << err();
}

TEST_F(CliTest, SolverFailureExitsThree) {
  const auto spec = write_spec("z.json", z_nn_spec(50));
  EXPECT_EQ(run({"capacity", "--space", spec, "--K", "point:50", "--radii", "40", "--direct-threshold", "0",
                 "--max-iterations", "1"}),
            3);
  EXPECT_NE(err().find("did not converge"), std::string::npos) << err();
}

TEST_F(CliTest, ArgumentErrorsExitTwo) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"capacity", "--space", "x"}), 2);
  EXPECT_EQ(run({"--format", "xml", "report"}), 2);
  EXPECT_EQ(run({"--version"}), 0);
}

TEST_F(CliTest, ReportSummarizesDirectory) {
  const auto spec = write_spec("z.json", z_nn_spec(40));
  ASSERT_EQ(run({"build", "--spec", spec}), 0);
  ASSERT_EQ(run({"criteria", "--space", spec}), 0) << err();
  ASSERT_EQ(run({"capacity", "--space", spec, "--K", "point:40", "--radii", "4,8"}), 0);
  testing::internal::CaptureStdout();
  ASSERT_EQ(run({"report"}), 0);
  const auto text = testing::internal::GetCapturedStdout();
  EXPECT_NE(text.find("build: 81 points"), std::string::npos) << text;
  EXPECT_NE(text.find("capacity:"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("out/report.txt")));
  EXPECT_EQ(run({"report"}, "empty"), 2);
}

TEST_F(CliTest, CsvOnlyFormat) {
  const auto spec = write_spec("z.json", z_nn_spec(20));
  ASSERT_EQ(run({"--format", "csv", "capacity", "--space", spec, "--K", "point:20", "--radii", "4,8"}), 0);
  EXPECT_FALSE(fs::exists(path("out/capacity.json")));
  EXPECT_TRUE(fs::exists(path("out/capacity.csv")));
}
