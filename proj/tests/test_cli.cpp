#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli_app.hpp"
#include "designforge/designs.hpp"
#include "designforge/io.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "designforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dfgcli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dfg-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string out_dir() const { return dir_.string(); }
  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream os(path(name), std::ios::binary);
    os << text;
  }

  std::string octahedron() const {
    const double h = std::acos(0.0);
    nlohmann::json pts = nlohmann::json::array();
    for (auto [t, p] : std::vector<std::pair<double, double>>{
             {0, 0}, {2 * h, 0}, {h, 0}, {h, 2 * h}, {h, h}, {h, 3 * h}})
      pts.push_back({t, p});
    write("octahedron.json", nlohmann::json{{"manifold", "sphere2"}, {"points", pts}}.dump());
    return path("octahedron.json").string();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, DesignFromCentersIsExact) {
  const auto r = cli({"design", "--manifold", "torus1", "--L", "8", "--N", "9", "--init", "centers", "--out_dir", out_dir()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  const auto j = nlohmann::json::parse(slurp(path("design-0.json")));
  EXPECT_LE(j["defect"].get<double>(), 1e-14);
  EXPECT_EQ(j["N"], 9);
  EXPECT_EQ(slurp(path("design-0.csv")).rfind("iter,defect,step\n", 0), 0u);
  EXPECT_TRUE(fs::exists(path("design-0.nodes.csv")));
  EXPECT_TRUE(fs::exists(path("design-0.cfg")));
}

TEST_F(Cli, CertifyOctahedron) {
  const auto r = cli({"certify", "--nodes", octahedron(), "--L", "3.5", "--out_dir", out_dir()});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(path("certify-0.json")));
  EXPECT_TRUE(j["certified"].get<bool>());
  EXPECT_EQ(cli({"certify", "--nodes", octahedron(), "--L", "4.8", "--out_dir", out_dir()}).code, 2);
}

TEST_F(Cli, InfeasibleDesignExitsTwo) {
  // Fejer kernel: for N points and L >= N, defect^2 >= 1/N.
  for (const char* seed : {"1", "2", "3"}) {
    const auto r = cli({"design", "--manifold", "torus1", "--L", "8", "--N", "4", "--init", "random", "--seed", seed,
                        "--out_dir", out_dir()});
    EXPECT_EQ(r.code, 2) << r.err;
    const auto j = nlohmann::json::parse(slurp(path(std::string("design-") + seed + ".json")));
    EXPECT_GE(j["defect"].get<double>(), 0.5 - 1e-12);
    EXPECT_FALSE(j["success"].get<bool>());
  }
  EXPECT_EQ(cli({"design", "--manifold", "torus1", "--L", "8", "--N", "4", "--out_dir", out_dir()}).code, 2);
}

TEST_F(Cli, UsageErrors) {
  auto r = cli({"mz-survey", "--manifold", "torus1", "--L", "2", "--N", "16", "--out_dir", out_dir()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("seed"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  r = cli({"design", "--manifold", "klein", "--L", "8", "--N", "4"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("klein"), std::string::npos);
  EXPECT_EQ(cli({"design", "--bogus", "1"}).code, 1);
  EXPECT_EQ(cli({"nosuch"}).code, 1);
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"design", "--manifold", "torus1", "--L", "eight", "--N", "4"}).code, 1);
  EXPECT_EQ(cli({"design", "--manifold", "torus1", "--L", "8", "--N", "9", "--init", "random"}).code, 1);
  EXPECT_EQ(cli({"design", "--manifold", "torus1", "--L", "8", "--N", "9", "--formats", "xml"}).code, 1);
  // No files were written by the failing runs.
  EXPECT_TRUE(fs::is_empty(dir_));
}

TEST_F(Cli, HelpDocumentsCsvColumns) {
  const auto r = cli({"scaling", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("L,N_star,attempts,defect"), std::string::npos);
  EXPECT_NE(cli({"flow-check", "--help"}).out.find("trial,functional_plus,functional_minus,ascent_ok"), std::string::npos);
}

TEST_F(Cli, MalformedConfigNamesTheKey) {
  write("bad.cfg", "subcommand = design\nmanifold = torus1\nL = 8\nN = nine\n");
  auto r = cli({"design", "--config", path("bad.cfg").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("'N'"), std::string::npos);
  write("bad2.cfg", "manifold = torus1\nwhat = 3\nL = 8\nN = 9\n");
  r = cli({"design", "--config", path("bad2.cfg").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("'what'"), std::string::npos);
  write("bad3.cfg", "manifold torus1\n");
  r = cli({"design", "--config", path("bad3.cfg").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 1"), std::string::npos);
  write("other.cfg", "subcommand = wce\n");
  EXPECT_EQ(cli({"design", "--config", path("other.cfg").string()}).code, 1);
}

TEST_F(Cli, FlagsWinOverConfig) {
  write("run.cfg", "# torus run\nsubcommand = design\nmanifold = torus1\nL = 8\nN = 4\ninit = centers\n");
  const auto r = cli({"design", "--config", path("run.cfg").string(), "--N", "9", "--out_dir", out_dir()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("N=9"), std::string::npos);
  // The emitted config carries the merged values.
  const auto cfg = dfgcli::Config::load(path("design-0.cfg").string());
  EXPECT_EQ(cfg.get("N").value(), "9");
  EXPECT_EQ(cfg.get("init").value(), "centers");
}

TEST_F(Cli, ConfigRoundTrip) {
  auto cfg = dfgcli::Config::create("partition");
  cfg.set("manifold", "sphere2");
  cfg.set("N", "40");
  cfg.set("seed", "18446744073709551615");
  cfg.set("samples", "16");
  cfg.set("out_dir", out_dir());
  const auto r = dfgcli::run(cfg);
  EXPECT_EQ(r.exit_code(), 0);
  r.emit(cfg);
  const auto back = dfgcli::Config::load(path("partition-18446744073709551615.cfg").string());
  EXPECT_EQ(back.serialize(), cfg.serialize());
  EXPECT_EQ(back.subcommand(), "partition");
  EXPECT_EQ(dfgcli::Config::parse(cfg.serialize()).serialize(), cfg.serialize());
  EXPECT_FALSE(back.get("tol").has_value());
}

TEST_F(Cli, IdenticalRunsAreByteIdentical) {
  const std::vector<std::vector<std::string>> runs = {
      {"design", "--manifold", "sphere2", "--L", "3.5", "--N", "12", "--init", "random", "--seed", "5", "--budget", "300"},
      {"partition", "--manifold", "torus2", "--N", "30", "--seed", "9", "--rule", "random"},
      {"flow-check", "--manifold", "torus1", "--L", "3", "--N", "40", "--trials", "3", "--seed", "11"},
  };
  for (auto args : runs) {
    std::map<std::string, std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      fs::remove_all(dir_);
      auto a = args;
      a.push_back("--out_dir");
      a.push_back(out_dir());
      const auto r = cli(a);
      ASSERT_LE(r.code, 2) << r.err;
      for (const auto& e : fs::directory_iterator(dir_)) {
        const auto name = e.path().filename().string();
        EXPECT_EQ(name.find(".tmp"), std::string::npos);
        if (rep == 0)
          first[name] = slurp(e.path());
        else
          EXPECT_EQ(first.at(name), slurp(e.path())) << name;
      }
    }
    EXPECT_GE(first.size(), 3u);
  }
}

TEST_F(Cli, InputFilesAreNotTouched) {
  const auto nodes = octahedron();
  const auto before = slurp(nodes);
  const auto t0 = fs::last_write_time(nodes);
  EXPECT_EQ(cli({"wce", "--nodes", nodes, "--alpha", "2", "--lambda_max", "20", "--out_dir", out_dir()}).code, 0);
  EXPECT_EQ(cli({"certify", "--nodes", nodes, "--L", "3.5", "--out_dir", out_dir()}).code, 0);
  EXPECT_EQ(slurp(nodes), before);
  EXPECT_EQ(fs::last_write_time(nodes), t0);
}

TEST_F(Cli, SubcommandsAreThinWrappers) {
  const auto nodes = octahedron();
  ASSERT_EQ(cli({"wce", "--nodes", nodes, "--alpha", "2", "--lambda_max", "20", "--out_dir", out_dir()}).code, 0);
  const auto j = nlohmann::json::parse(slurp(path("wce-0.json")));
  const auto set = designforge::nodes_from_json(nlohmann::json::parse(slurp(nodes)));
  const auto direct = designforge::worst_case_error(set, 2.0, 20.0);
  EXPECT_EQ(j["wce"].get<double>(), direct.wce);
  EXPECT_EQ(j["tail_bound"].get<double>(), direct.tail_bound);

  ASSERT_EQ(cli({"scaling", "--manifold", "torus1", "--L", "4,8", "--seed", "3", "--out_dir", out_dir()}).code, 0);
  EXPECT_EQ(slurp(path("scaling-3.csv")),
            designforge::scaling_csv(designforge::scaling_experiment(designforge::Manifold::torus(1), {4, 8}, 1e-6, 3)));
}

TEST_F(Cli, EveryExperimentRuns) {
  const std::vector<std::vector<std::string>> runs = {
      {"kernel-decay", "--manifold", "torus1", "--L", "16", "--min_exponent", "5.5"},
      {"kernel-decay", "--manifold", "torus1", "--L", "8,16", "--mode", "gradient"},
      {"propagation", "--manifold", "torus1"},
      {"heat-fit", "--manifold", "torus1"},
      {"heat-fit", "--manifold", "torus1", "--mode", "power_law", "--left", "1", "--t_min", "1e-3", "--t_max", "1e-1"},
      {"mz-survey", "--manifold", "torus1", "--L", "2", "--N", "16,32", "--trials", "5", "--ascent_steps", "5", "--seed",
       "1", "--max_spread", "10"},
  };
  for (auto args : runs) {
    args.push_back("--out_dir");
    args.push_back(out_dir());
    const auto r = cli(args);
    EXPECT_EQ(r.code, 0) << args[0] << ' ' << r.out << r.err;
  }
}
