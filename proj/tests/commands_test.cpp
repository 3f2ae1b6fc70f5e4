#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "lexifair/commands.hpp"
#include "lexifair/parallel.hpp"

namespace lf = lexifair;
namespace fs = std::filesystem;

namespace {

const std::string kStump3 = std::string(LEXIFAIR_DATA_DIR) + "/stump3.csv";

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lexifair_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  struct Result {
    int code;
    std::string out, err;
    lf::Json json() const { return lf::Json::parse(out); }
  };

  static Result run(lf::CommandSpec s) {
    std::ostringstream out, err;
    const int code = lf::run(s, out, err);
    return {code, out.str(), err.str()};
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void write(const std::string& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

  static lf::CommandSpec clf_spec(const std::string& input) {
    lf::CommandSpec s;
    s.command = "train-clf";
    s.input = input;
    s.ell = 2;
    s.alpha = 0.2;
    s.seed = 7;
    s.budget = 20000;
    s.sample_budget = 50;
    return s;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Commands, DemoInstability) {
  lf::CommandSpec s;
  s.command = "demo-instability";
  const auto r = run(s);
  ASSERT_EQ(r.code, lf::kExitOk) << r.err;
  const auto j = r.json();
  EXPECT_NEAR(j["results"]["relaxed_third"].get<double>(), 0.25, 1e-12);
  EXPECT_NEAR(j["results"]["uniform_top1_excess"].get<double>(), 0.05, 1e-12);
  s.alpha = 0.5;
  EXPECT_EQ(run(s).code, lf::kExitError);
}

TEST_F(Commands, GenSynthWritesCsvAndSidecar) {
  lf::CommandSpec s;
  s.command = "gen-synth";
  s.output = path("d.csv");
  s.groups = 3;
  s.n = 10;
  s.skew = 0.3;
  s.seed = 3;
  ASSERT_EQ(run(s).code, lf::kExitOk);
  // data/stump3.csv was produced by exactly these parameters.
  EXPECT_EQ(slurp(s.output), slurp(kStump3));
  const auto side = lf::Json::parse(slurp(s.output + ".json"));
  EXPECT_EQ(side["dataset"]["n"], 30);
  EXPECT_EQ(side["params"]["seed"], 3);
}

TEST_F(Commands, OracleFromDatasetAndFromMatrix) {
  lf::CommandSpec s;
  s.command = "oracle";
  s.input = kStump3;
  s.matrix_out = path("m.csv");
  const auto r = run(s);
  ASSERT_EQ(r.code, lf::kExitOk) << r.err;
  const auto opt = r.json()["opt"].get<std::vector<double>>();
  ASSERT_EQ(opt.size(), 3u);
  EXPECT_NEAR(opt[0], 0.3, 1e-9);
  EXPECT_NEAR(opt[1], 0.6, 1e-9);

  lf::CommandSpec m;
  m.command = "oracle";
  m.oracle = s.matrix_out;
  m.ell = 2;
  const auto r2 = run(m);
  ASSERT_EQ(r2.code, lf::kExitOk) << r2.err;
  EXPECT_EQ(r2.json()["opt"], lf::Json(std::vector<double>(opt.begin(), opt.begin() + 2)));
}

TEST_F(Commands, TrainClassifierThenCertifyPasses) {
  auto s = clf_spec(kStump3);
  s.output = path("model.json");
  const auto r = run(s);
  ASSERT_EQ(r.code, lf::kExitOk) << r.err;
  const auto model = lf::Json::parse(slurp(s.output));
  EXPECT_EQ(model["certificate"]["verdict"], "unverified");
  EXPECT_TRUE(model["schedule"][0]["T_clamped"].get<bool>());

  lf::CommandSpec o;
  o.command = "oracle";
  o.input = kStump3;
  o.matrix_out = path("m.csv");
  ASSERT_EQ(run(o).code, lf::kExitOk);

  lf::CommandSpec c;
  c.command = "certify";
  c.model = s.output;
  c.input = kStump3;
  c.oracle = o.matrix_out;
  const auto cr = run(c);
  EXPECT_EQ(cr.code, lf::kExitOk) << cr.out << cr.err;
  EXPECT_EQ(cr.json()["certificate"]["verdict"], "pass") << cr.out;
  EXPECT_EQ(cr.json()["opt_given_eta_history"].size(), 2u);
}

TEST_F(Commands, FailedCertificateExitsWithTwo) {
  // Constant 0 with eta_1 = 0: the slack check holds but its top error exceeds alpha.
  write(path("m0.json"), R"({"config": {"alpha": 0.1}, "eta": [0.0],
    "model": {"type": "randomized_stumps", "support": [{"kind": "constant", "value": 0, "weight": 1.0}]}})");
  lf::CommandSpec o;
  o.command = "oracle";
  o.input = kStump3;
  o.matrix_out = path("m.csv");
  ASSERT_EQ(run(o).code, lf::kExitOk);
  lf::CommandSpec c;
  c.command = "certify";
  c.model = path("m0.json");
  c.input = kStump3;
  c.oracle = o.matrix_out;
  const auto r = run(c);
  EXPECT_EQ(r.code, lf::kExitCertificationFailed) << r.err;
  EXPECT_EQ(r.json()["certificate"]["verdict"], "fail");

  c.oracle.clear();
  const auto u = run(c);
  EXPECT_EQ(u.code, lf::kExitOk);
  EXPECT_EQ(u.json()["certificate"]["verdict"], "unverified");
}

TEST_F(Commands, RegressionTrainCertifyAndGap) {
  lf::CommandSpec g;
  g.command = "gen-synth";
  g.task = "reg";
  g.n = 30;
  g.skew = 0.5;
  g.seed = 1;
  g.output = path("train.csv");
  ASSERT_EQ(run(g).code, lf::kExitOk);
  g.seed = 2;
  g.output = path("test.csv");
  ASSERT_EQ(run(g).code, lf::kExitOk);

  lf::CommandSpec t;
  t.command = "train-reg";
  t.input = path("train.csv");
  t.budget = 2000;
  auto aborted = run(t);
  EXPECT_EQ(aborted.code, lf::kExitError);
  EXPECT_NE(aborted.err.find("exceeds budget"), std::string::npos) << aborted.err;
  t.on_budget = "clamp";
  t.output = path("reg.json");
  const auto tr = run(t);
  ASSERT_EQ(tr.code, lf::kExitOk) << tr.err;
  const auto model = lf::Json::parse(slurp(t.output));
  EXPECT_EQ(model["model"]["type"], "linear");
  EXPECT_EQ(model["schedule"][0]["T"], 2000);

  lf::CommandSpec o;
  o.command = "oracle";
  o.task = "reg";
  o.input = t.input;
  o.grid = 0.1;
  o.ell = 1;
  o.matrix_out = path("rm.csv");
  ASSERT_EQ(run(o).code, lf::kExitOk);
  lf::CommandSpec c;
  c.command = "certify";
  c.model = t.output;
  c.input = t.input;
  c.oracle = o.matrix_out;
  const auto cr = run(c);
  ASSERT_NE(cr.code, lf::kExitError) << cr.err;
  EXPECT_TRUE(cr.json()["certificate"]["opt"].is_array());

  lf::CommandSpec gap;
  gap.command = "gap";
  gap.model = t.output;
  gap.input = t.input;
  gap.test = path("test.csv");
  const auto gr = run(gap);
  ASSERT_EQ(gr.code, lf::kExitOk) << gr.err;
  const auto rep = gr.json()["generalization"];
  EXPECT_GE(rep["beta_hat"].get<double>(), 0.0);
  EXPECT_NEAR(rep["alpha_prime"].get<double>(), 0.1 + 2 * rep["beta_hat"].get<double>(), 1e-15);
}

TEST_F(Commands, ConfigFileRulesAndPrecedence) {
  write(path("bad.json"), R"({"alpha": 0.2, "loss_bound": 3})");
  auto s = clf_spec(kStump3);
  s.config = path("bad.json");
  auto r = run(s);
  EXPECT_EQ(r.code, lf::kExitError);
  EXPECT_NE(r.err.find("loss_bound"), std::string::npos) << r.err;

  write(path("unknown.json"), R"({"alpah": 0.2})");
  s.config = path("unknown.json");
  r = run(s);
  EXPECT_EQ(r.code, lf::kExitError);
  EXPECT_NE(r.err.find("unknown key"), std::string::npos) << r.err;

  write(path("ok.json"), R"({"alpha": 0.3, "ell": 1, "budget": 100, "budget_policy": "clamp"})");
  s = lf::CommandSpec{};
  s.command = "train-clf";
  s.input = kStump3;
  s.config = path("ok.json");
  s.alpha = 0.25;  // flags override the file
  r = run(s);
  ASSERT_EQ(r.code, lf::kExitOk) << r.err;
  EXPECT_EQ(r.json()["config"]["alpha"], 0.25);
  EXPECT_EQ(r.json()["config"]["ell"], 1);
  EXPECT_EQ(r.json()["config"]["budget"], 100);

  write(path("notjson.json"), "{");
  s.config = path("notjson.json");
  EXPECT_EQ(run(s).code, lf::kExitError);
}

TEST_F(Commands, InputErrorsExitWithOne) {
  lf::CommandSpec s;
  s.command = "train-clf";
  s.input = path("missing.csv");
  auto r = run(s);
  EXPECT_EQ(r.code, lf::kExitError);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);

  write(path("bad.csv"), "f0,label,groups\n1,0,1\n2,x,1\n");
  s.input = path("bad.csv");
  r = run(s);
  EXPECT_EQ(r.code, lf::kExitError);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;

  s.input = kStump3;
  s.ell = 4;
  EXPECT_EQ(run(s).code, lf::kExitError);

  lf::CommandSpec u;
  u.command = "frobnicate";
  EXPECT_EQ(run(u).code, lf::kExitError);
}

TEST_F(Commands, OutputIsByteIdenticalAcrossRunsAndThreadCounts) {
  auto s = clf_spec(kStump3);
  s.sample_budget = 200;  // enough draws to take the parallel path
  s.budget = 500;
  ::setenv("LEXIFAIR_THREADS", "1", 1);
  const auto a = run(s);
  const auto b = run(s);
  ::setenv("LEXIFAIR_THREADS", "2", 1);
  const auto c = run(s);
  ::unsetenv("LEXIFAIR_THREADS");
  ASSERT_EQ(a.code, lf::kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(a.json()["schedule"][0]["m"], 200);
}

TEST(ParallelFor, CoversEverySlotAndRethrows) {
  std::vector<int> hits(1000, 0);
  lf::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(lf::parallel_for(
                   500, [](std::size_t i) { if (i == 321) throw std::runtime_error("boom"); }, 3),
               std::runtime_error);
}
