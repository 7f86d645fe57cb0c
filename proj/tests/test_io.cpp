#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "rca/errors.hpp"
#include "rca/io.hpp"
#include "rca/run_config.hpp"

namespace rca {
namespace {

Embedding random_embedding(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Embedding e(d);
  for (double& x : e) x = n(rng) * std::pow(10.0, double(rng() % 9) - 4.0);
  return e;
}

ImageRecord random_record(std::mt19937_64& rng, std::size_t d, std::size_t i) {
  ImageRecord rec;
  rec.image_id = "img-" + std::to_string(i);
  rec.image_embedding = random_embedding(rng, d);
  for (std::size_t r = 0; r < 1 + rng() % 4; ++r) rec.regions.push_back(random_embedding(rng, d));
  for (std::size_t t = 0; t < rng() % 4; ++t)
    rec.caption_tokens.push_back({"w" + std::to_string(t), bool(rng() % 2), random_embedding(rng, d)});
  if (rng() % 2) {
    std::vector<TagReference> tags;
    for (std::size_t t = 0; t < 4; ++t) {
      TagReference ref{"t" + std::to_string(t), 1.0 / double(t + 3), std::nullopt};
      if (t % 2) ref.embedding = random_embedding(rng, d);
      tags.push_back(ref);
    }
    rec.tags = tags;
  }
  return rec;
}

TEST(Instances, RoundTripIsExact) {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 50; ++t) {
    std::vector<ImageRecord> records;
    const std::size_t d = 1 + rng() % 12;
    for (std::size_t i = 0; i < 1 + rng() % 5; ++i) records.push_back(random_record(rng, d, i));
    std::stringstream buf;
    write_instances(buf, records);
    EXPECT_EQ(read_instances(buf), records);
  }
}

TEST(Instances, MalformedLineReportsItsNumber) {
  std::mt19937_64 rng(52);
  std::stringstream buf;
  std::vector<ImageRecord> records;
  for (std::size_t i = 0; i < 4; ++i) records.push_back(random_record(rng, 3, i));
  write_instances(buf, records);
  buf << "{\"image_id\": \"broken\", \"image_embedding\": [1, 2\n";
  try {
    read_instances(buf);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
    EXPECT_EQ(e.exit_code(), ExitCode::kParse);
  }
}

TEST(Instances, MissingFieldIsParseError) {
  std::stringstream buf("{\"image_id\": \"x\", \"image_embedding\": [1, 2]}\n");
  EXPECT_THROW(read_instances(buf), ParseError);
}

TEST(Instances, InconsistentDimensionIsDimensionError) {
  std::stringstream buf(
      "{\"image_id\":\"a\",\"image_embedding\":[1,0],\"regions\":[[1,0]],\"caption_tokens\":[]}\n"
      "{\"image_id\":\"b\",\"image_embedding\":[1,0],\"regions\":[[1,0,0]],\"caption_tokens\":[]}\n");
  try {
    read_instances(buf);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_EQ(e.exit_code(), ExitCode::kDimension);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Vocabulary, RoundTripAndDuplicates) {
  Vocabulary v{2, {{"cat", {1.0, 0.0}}, {"dog", {0.0, 1.0}}}};
  std::stringstream buf;
  write_vocabulary(buf, v);
  EXPECT_EQ(read_vocabulary(buf), v);
  std::stringstream dup(
      "{\"format\":\"rca-vocab\",\"version\":1,\"dim\":1}\n"
      "{\"tag_id\":\"a\",\"embedding\":[1]}\n"
      "{\"tag_id\":\"a\",\"embedding\":[2]}\n");
  EXPECT_THROW(read_vocabulary(dup), ParseError);
  std::stringstream empty("");
  EXPECT_THROW(read_vocabulary(empty), ParseError);
}

TEST(Resolve, RanksVocabularyAndKeepsNouns) {
  Vocabulary v{2, {}};
  for (int i = 0; i < 8; ++i) {
    const double a = 0.3 * i;
    v.entries.push_back({"t" + std::to_string(i), {std::cos(a), std::sin(a)}});
  }
  ImageRecord rec;
  rec.image_id = "x";
  rec.image_embedding = {1.0, 0.0};
  rec.regions = {{1.0, 0.1}};
  rec.caption_tokens = {{"a", true, {0.0, 1.0}}, {"the", false, {1.0, 1.0}}};
  const ResolvedInstance r = resolve_instance(rec, &v, 4);
  EXPECT_EQ(r.positive_ids, (std::vector<std::string>{"t0", "t1"}));
  EXPECT_EQ(r.negative_ids, (std::vector<std::string>{"t2", "t3"}));
  EXPECT_EQ(r.instance.caption_nouns.rows(), 1u);
  EXPECT_NEAR(r.instance.global_scores[1], std::cos(0.3), 1e-15);
}

TEST(Resolve, OwnTagsNeedEvenCountAndEmbeddings) {
  ImageRecord rec;
  rec.image_id = "x";
  rec.image_embedding = {1.0, 0.0};
  rec.regions = {{1.0, 0.0}};
  rec.tags = std::vector<TagReference>{{"a", 0.9, Embedding{1, 0}}, {"b", 0.1, Embedding{0, 1}}};
  const ResolvedInstance r = resolve_instance(rec, nullptr, 50);
  EXPECT_EQ(r.instance.K(), 1u);
  EXPECT_EQ(r.instance.global_scores, Vector{0.9});
  rec.tags->pop_back();
  EXPECT_THROW(resolve_instance(rec, nullptr, 50), ParseError);
  rec.tags = std::vector<TagReference>{{"a", 0.9, std::nullopt}, {"b", 0.1, std::nullopt}};
  EXPECT_THROW(resolve_instance(rec, nullptr, 50), ParseError);
  Vocabulary wrong{3, {{"a", {1, 0, 0}}}};
  EXPECT_THROW(resolve_instance(rec, &wrong, 50), DimensionError);
}

TEST(State, RoundTripIsExact) {
  SyntheticConfig scfg;
  scfg.n_images = 20;
  scfg.noise_sigma = 0.1;
  const SyntheticDataset ds = generate_synthetic(scfg);
  TrainerConfig cfg;
  cfg.steps = 3;
  cfg.learning_rate = 0.3;
  cfg.log_every = 1;
  const StateFile file{scfg, train_alignment(ds, cfg)};
  std::stringstream buf;
  write_state(buf, file);
  EXPECT_EQ(read_state(buf), file);
  std::stringstream junk("{\"format\":\"other\"}");
  EXPECT_THROW(read_state(junk), ParseError);
}

TEST(RunConfig, KeysRoundTripThroughText) {
  RunConfig cfg;
  std::stringstream text(
      "# comment\n"
      "seed = 12\n"
      "learning_rate = 0.25\n"
      "enable_uasr = false\n"
      "init = aligned\n"
      "\n"
      "M = 20\n");
  const RunConfig parsed = parse_run_config(text, cfg);
  EXPECT_EQ(parsed.synthetic.seed, 12u);
  EXPECT_EQ(parsed.trainer.seed, 12u);
  EXPECT_EQ(parsed.trainer.learning_rate, 0.25);
  EXPECT_FALSE(parsed.trainer.enable_uasr);
  EXPECT_EQ(parsed.trainer.init, InitMode::kAligned);
  EXPECT_EQ(parsed.M, 20u);
  for (const auto& key : RunConfig::keys()) {
    RunConfig copy;
    copy.set(key, parsed.get(key));
    EXPECT_EQ(copy.get(key), parsed.get(key)) << key;
  }
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  RunConfig cfg;
  EXPECT_THROW(cfg.set("learning_rat", "1"), ConfigError);
  EXPECT_THROW(cfg.set("steps", "-3"), ConfigError);
  EXPECT_THROW(cfg.set("enable_uasr", "maybe"), ConfigError);
  EXPECT_THROW(cfg.get("nope"), ConfigError);
  std::stringstream text("steps 10\n");
  EXPECT_THROW(parse_run_config(text), ConfigError);
}

TEST(Metrics, RecordIsOneLineOfJson) {
  const std::string line = history_record_json({10, 0.5, 0.75, 2.0, -1.0});
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NE(line.find("\"retrieval_accuracy\":0.75"), std::string::npos);
  EXPECT_NE(line.find("\"step\":10"), std::string::npos);
}

}  // namespace
}  // namespace rca
