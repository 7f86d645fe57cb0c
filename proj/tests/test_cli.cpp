#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::string kData = RCA_TEST_DATA_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = rca::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rca_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Cli, SymmetricPairCostsLog2PerTerm) {
  const Result r = run({"loss", "--instances", kData + "/symmetric.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["images"][0]["cross"].get<double>(), std::log(2.0), 1e-12);
  EXPECT_NEAR(j["images"][0]["total"].get<double>(), 2.0 * std::log(2.0), 1e-12);
  const Result cross_only =
      run({"loss", "--instances", kData + "/symmetric.jsonl", "--lambda_inner", "0"});
  EXPECT_NEAR(json::parse(cross_only.out)["images"][0]["total"].get<double>(), std::log(2.0), 1e-12);
}

TEST(Cli, LossMatchesGoldenFile) {
  const Result r = run({"loss", "--instances", kData + "/loss_fixture.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json got = json::parse(r.out);
  const json want = json::parse(slurp(kData + "/loss_golden.json"));
  ASSERT_EQ(got["images"].size(), want["images"].size());
  for (std::size_t i = 0; i < want["images"].size(); ++i) {
    const auto& g = got["images"][i];
    const auto& w = want["images"][i];
    EXPECT_EQ(g["image_id"], w["image_id"]);
    for (const char* key : {"cross", "inner", "total"})
      EXPECT_NEAR(g[key].get<double>(), w[key].get<double>(), 1e-12) << w["image_id"] << " " << key;
  }
  EXPECT_EQ(run({"loss", "--instances", kData + "/loss_fixture.jsonl"}).out, r.out);
}

TEST(Cli, RankSplitsHundredTagVocabulary) {
  const Result r = run({"rank", "--instances", kData + "/images_100.jsonl", "--vocab", kData + "/vocab_100.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& img : json::parse(r.out)["images"]) {
    std::size_t p = 0, n = 0;
    double last = INFINITY;
    for (const auto& t : img["tags"]) {
      (t["side"] == "P" ? p : n)++;
      EXPECT_LE(t["score"].get<double>(), last);
      last = t["score"].get<double>();
    }
    EXPECT_EQ(p, 25u);
    EXPECT_EQ(n, 25u);
  }
}

TEST(Cli, UasrReportsSetsAndWeights) {
  const Result r = run({"uasr", "--instances", kData + "/images_100.jsonl", "--vocab", kData + "/vocab_100.jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& img : json::parse(r.out)["images"]) {
    EXPECT_EQ(img["weights"].size(), 25u);
    double mean = 0.0;
    for (const auto& q : img["weights"]) mean += q.get<double>();
    EXPECT_NEAR(mean / 25.0, 1.0, 1e-12);
  }
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"loss", "--instances", kData + "/malformed.jsonl"}).code, 2);
  EXPECT_EQ(run({"loss", "--instances", kData + "/dim_mismatch.jsonl"}).code, 3);
  EXPECT_EQ(run({"loss", "--bogus"}).code, 2);
  EXPECT_EQ(run({"train", "--steps", "abc"}).code, 2);
  EXPECT_EQ(run({"loss", "--instances", kData + "/does_not_exist.jsonl"}).code, 2);
  const Result bad = run({"gradcheck", "--count", "2", "--fd-step", "0.5"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_FALSE(bad.err.empty());
  EXPECT_EQ(run({"gradcheck", "--count", "3"}).code, 0);
}

TEST(Cli, TrainAtZeroRateStreamsFlatMetrics) {
  const fs::path metrics = scratch("flat.jsonl");
  const Result r = run({"train", "--config", kData + "/train_small.cfg", "--learning_rate", "0", "--metrics",
                        metrics.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(metrics);
  std::string line;
  std::vector<json> recs;
  while (std::getline(in, line)) recs.push_back(json::parse(line));
  ASSERT_EQ(recs.size(), 4u);
  for (const auto& rec : recs) EXPECT_EQ(rec["loss"], recs.front()["loss"]);
  EXPECT_EQ(recs.back()["step"], 12);
}

TEST(Cli, TrainIsDeterministicAndEvalReadsState) {
  const fs::path s1 = scratch("s1.json"), s2 = scratch("s2.json"), m1 = scratch("m1.jsonl"), m2 = scratch("m2.jsonl");
  const std::vector<std::string> base{"train", "--config", kData + "/train_small.cfg", "--seed", "4"};
  auto with = [&](const fs::path& s, const fs::path& m) {
    auto a = base;
    a.insert(a.end(), {"--state", s.string(), "--metrics", m.string()});
    return a;
  };
  const Result a = run(with(s1, m1));
  const Result b = run(with(s2, m2));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(s1), slurp(s2));
  EXPECT_EQ(slurp(m1), slurp(m2));
  const Result e = run({"eval", "--state", s1.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  const json ej = json::parse(e.out);
  EXPECT_EQ(ej["step"], 12);
  EXPECT_EQ(ej["retrieval_accuracy"], json::parse(a.out)["final"]["retrieval_accuracy"]);
}

TEST(Cli, AlignedInitEvaluatesPerfectly) {
  const fs::path s = scratch("aligned.json");
  const Result r = run({"train", "--config", kData + "/train_small.cfg", "--init", "aligned", "--learning_rate", "0",
                        "--state", s.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(run({"eval", "--state", s.string()}).out)["retrieval_accuracy"], 1.0);
}

TEST(Cli, SeedFromEnvironmentYieldsToFlags) {
  const std::vector<std::string> args{"train", "--config", kData + "/train_small.cfg", "--steps", "2"};
  const std::string default_out = run(args).out;
  ::setenv("RCA_SEED", "99", 1);
  const std::string env_out = run(args).out;
  auto flagged = args;
  flagged.insert(flagged.end(), {"--seed", "99"});
  ::unsetenv("RCA_SEED");
  EXPECT_NE(env_out, default_out);
  EXPECT_EQ(env_out, run(flagged).out);
  EXPECT_EQ(json::parse(env_out)["config"]["seed"], "99");
}

TEST(CliBinary, RunsAsProcess) {
  const std::string cmd = std::string(RCA_CLI_PATH) + " loss --instances " + kData + "/malformed.jsonl 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  const std::string ok = std::string(RCA_CLI_PATH) + " loss --instances " + kData + "/symmetric.jsonl >/dev/null";
  EXPECT_EQ(std::system(ok.c_str()), 0);
}

}  // namespace
