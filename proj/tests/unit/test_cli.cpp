#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "fixtures.hpp"
#include "weakoie/tagger.hpp"

// Included after Eigen: resolv.h defines a _res macro.
#include <httplib.h>
#include <nlohmann/json.hpp>

namespace weakoie {
namespace {

using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "weakoie");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    ASSERT_EQ(run({"synth", "--n", "1500", "--seed", "3", "--out-of-pattern", "0", "--conllu-out",
                   path("train.conllu"), "--gold-out", path("train.tsv")})
                  .code,
              0);
    ASSERT_EQ(run({"synth", "--n", "200", "--seed", "4", "--out-of-pattern", "0", "--conllu-out",
                   path("test.conllu"), "--gold-out", path("test.tsv")})
                  .code,
              0);
    const Result label =
        run({"label", "--conllu", path("train.conllu"), "--out", path("inst.jsonl"), "--threads", "2"});
    ASSERT_EQ(label.code, 0) << label.err;
    {
      std::ofstream cfg(path("pretrain.cfg"));
      cfg << "# desk-scale model\nembedding-dim = 16\nindicator-dim = 4\nhidden-dim = 32\n"
             "epochs = 5\nseed = 7\n";
    }
    const Result pre = run({"pretrain", "--instances", path("inst.jsonl"), "--config",
                            path("pretrain.cfg"), "--out", path("base.ckpt")});
    ASSERT_EQ(pre.code, 0) << pre.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }

  static TempDir* dir_;
};

TempDir* CliPipeline::dir_ = nullptr;

TEST_F(CliPipeline, LabelPrintsCoverage) {
  const Result r = run({"label", "--conllu", path("test.conllu"), "--out", path("test-inst.jsonl")});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("instances: 2"), std::string::npos);
  EXPECT_NE(r.out.find("ARG1: "), std::string::npos);
  EXPECT_NE(r.out.find("ARG2: "), std::string::npos);
}

TEST_F(CliPipeline, EndToEndReachesHighF1) {
  ASSERT_EQ(run({"extract", "--model", path("base.ckpt"), "--conllu", path("test.conllu"), "--out",
                 path("ex.jsonl")})
                .code,
            0);
  const Result ev = run({"eval", "--extractions", path("ex.jsonl"), "--gold", path("test.tsv"),
                         "--conllu", path("test.conllu"), "--report", path("report.json"),
                         "--pr-out", path("pr.txt")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  std::ifstream in(path("report.json"));
  const auto report = nlohmann::json::parse(in);
  EXPECT_GE(report.at("best_f1").get<double>(), 0.9);
  EXPECT_EQ(slurp(path("pr.txt")).rfind("# recall precision\n", 0), 0u);
}

TEST_F(CliPipeline, PretrainMetricsAreDeterministic) {
  ASSERT_EQ(run({"pretrain", "--instances", path("inst.jsonl"), "--config", path("pretrain.cfg"),
                 "--out", path("again.ckpt")})
                .code,
            0);
  EXPECT_EQ(slurp(path("again.ckpt.metrics.jsonl")), slurp(path("base.ckpt.metrics.jsonl")));
  EXPECT_EQ(slurp(path("again.ckpt")), slurp(path("base.ckpt")));
}

TEST_F(CliPipeline, FlagsOverrideConfig) {
  ASSERT_EQ(run({"pretrain", "--instances", path("inst.jsonl"), "--config", path("pretrain.cfg"),
                 "--epochs", "1", "--out", path("one.ckpt")})
                .code,
            0);
  std::istringstream lines(slurp(path("one.ckpt.metrics.jsonl")));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 1);
  EXPECT_EQ(TaggerModel::load(path("one.ckpt")).config().hidden_dim, 32);
}

TEST_F(CliPipeline, BeamWidthChangesRlMetrics) {
  auto rl = [&](const std::string& beam) {
    const Result r = run({"rl-train", "--model", path("base.ckpt"), "--conllu", path("test.conllu"),
                          "--beam", beam, "--baseline", "mean", "--epochs", "1", "--seed", "5",
                          "--out", path("rl" + beam + ".ckpt")});
    EXPECT_EQ(r.code, 0) << r.err;
    return slurp(path("rl" + beam + ".ckpt.metrics.jsonl"));
  };
  const std::string one = rl("1");
  const std::string three = rl("3");
  EXPECT_FALSE(three.empty());
  EXPECT_NE(one, three);
  EXPECT_EQ(rl("3"), three);
}

TEST_F(CliPipeline, EmptyExtractionFileScoresZero) {
  { std::ofstream(path("empty.jsonl")); }
  const Result r = run({"eval", "--extractions", path("empty.jsonl"), "--gold", path("test.tsv"),
                        "--report", path("empty-report.json"), "--pr-out", path("empty-pr.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("empty-report.json"));
  EXPECT_EQ(nlohmann::json::parse(in).at("auc").get<double>(), 0.0);
}

TEST_F(CliPipeline, RefusesToOverwriteInputs) {
  const std::string before = slurp(path("test.tsv"));
  const Result r = run({"eval", "--extractions", path("empty.jsonl"), "--gold", path("test.tsv"),
                        "--report", path("test.tsv"), "--pr-out", path("x.txt")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_EQ(slurp(path("test.tsv")), before);
}

TEST_F(CliPipeline, RerankThroughAdapterFromEnvironment) {
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Post("/nli", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(R"({"probability": 0.5})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/nli";
  ::setenv(cli::kScorerUrlEnv, url.c_str(), 1);
  const Result r = run({"extract", "--model", path("base.ckpt"), "--conllu", path("test.conllu"),
                        "--rerank", "combined", "--scorer", "adapter", "--cache",
                        path("cache.jsonl"), "--out", path("reranked.jsonl")});
  ::unsetenv(cli::kScorerUrlEnv);
  server.stop();
  t.join();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GT(hits.load(), 0);
  EXPECT_FALSE(slurp(path("cache.jsonl")).empty());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"label", "--out", "x"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"rl-train", "--model", "m", "--conllu", "c", "--out", "o", "--baseline", "median"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run({"extract", "--help"}).code, cli::kExitOk);
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
  TempDir dir;
  { std::ofstream(dir / "bad.cfg") << "colour = blue\n"; }
  const Result r = run({"synth", "--config", (dir / "bad.cfg").string(), "--conllu-out",
                        (dir / "a").string(), "--gold-out", (dir / "b").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(Cli, DataErrors) {
  TempDir dir;
  EXPECT_EQ(run({"label", "--conllu", (dir / "missing.conllu").string(), "--out",
                 (dir / "o.jsonl").string()})
                .code,
            cli::kExitData);
  { std::ofstream(dir / "bad.conllu") << "1\tonly\tthree\n\n"; }
  EXPECT_EQ(run({"label", "--conllu", (dir / "bad.conllu").string(), "--out",
                 (dir / "o.jsonl").string()})
                .code,
            cli::kExitData);
}

TEST(Cli, NumericFailure) {
  TempDir dir;
  TaggerModel model = testing::tiny_model();
  model.mutable_params().entries().back().value.setConstant(std::numeric_limits<double>::quiet_NaN());
  model.save(dir / "nan.ckpt");
  { std::ofstream(dir / "p.conllu") << testing::parragon_conllu(); }
  const Result r = run({"rl-train", "--model", (dir / "nan.ckpt").string(), "--conllu",
                        (dir / "p.conllu").string(), "--out", (dir / "o.ckpt").string()});
  EXPECT_EQ(r.code, cli::kExitNumeric) << r.err;
}

}  // namespace
}  // namespace weakoie
