#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rca/autodiff.hpp"
#include "rca/errors.hpp"
#include "rca/io.hpp"
#include "rca/losses.hpp"
#include "rca/run_config.hpp"
#include "rca/synthetic.hpp"
#include "rca/trainer.hpp"
#include "rca/uasr.hpp"

namespace rca::cli {
namespace {

using json = nlohmann::json;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  return out;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RCA_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("RCA_SEED is not an integer: '") + env + "'");
    }
  }
  return 0;
}

struct CorpusOptions {
  std::string instances;
  std::string vocab;
  std::size_t M = kDefaultTagCount;
};

struct Corpus {
  std::vector<ImageRecord> records;
  std::optional<Vocabulary> vocab;
};

Corpus load_corpus(const CorpusOptions& opt) {
  Corpus c;
  if (!opt.vocab.empty()) {
    auto in = open_input(opt.vocab);
    c.vocab = read_vocabulary(in);
  }
  auto in = open_input(opt.instances);
  c.records = read_instances(in);
  return c;
}

int cmd_rank(const CorpusOptions& opt, std::ostream& out) {
  const Corpus corpus = load_corpus(opt);
  json images = json::array();
  for (const auto& rec : corpus.records) {
    if (corpus.vocab->dim != rec.dim()) {
      throw DimensionError("image '" + rec.image_id + "' has dim " + std::to_string(rec.dim()) +
                           " but the vocabulary has dim " + std::to_string(corpus.vocab->dim));
    }
    const RankedTagList list = rank_tags(rec.image_embedding, corpus.vocab->entries, opt.M);
    json tags = json::array();
    for (std::size_t i = 0; i < list.candidates.size(); ++i) {
      const auto& c = list.candidates[i];
      tags.push_back({{"tag_id", c.tag_id}, {"score", c.global_score}, {"side", i < list.K ? "P" : "N"}});
    }
    images.push_back({{"image_id", rec.image_id}, {"K", list.K}, {"tags", tags}});
  }
  out << json{{"M", opt.M}, {"images", images}}.dump(2) << '\n';
  return 0;
}

int cmd_uasr(const CorpusOptions& opt, bool normalize, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus(opt);
  const Vocabulary* vocab = corpus.vocab ? &*corpus.vocab : nullptr;
  json images = json::array();
  for (const auto& rec : corpus.records) {
    const ResolvedInstance r = resolve_instance(rec, vocab, opt.M);
    const UasrResult u = apply_uasr(r.instance, UasrOptions{normalize});
    const std::size_t K = r.instance.K();
    auto id_of = [&](std::size_t pooled) {
      return pooled < K ? r.positive_ids[pooled] : r.negative_ids[pooled - K];
    };
    json retrieved = json::array();
    for (std::size_t i : u.retrieved_set) retrieved.push_back(id_of(i));
    json pos = json::array(), neg = json::array();
    for (std::size_t i : u.positive_sources) pos.push_back(r.positive_ids[i]);
    for (std::size_t i : u.negative_sources) neg.push_back(r.negative_ids[i]);
    if (u.clamped_weights > 0) {
      err << "warning: image '" << rec.image_id << "': " << u.clamped_weights
          << " non-positive global score(s) clamped to " << kMinGlobalScore << '\n';
    }
    images.push_back({{"image_id", rec.image_id},
                      {"K", K},
                      {"retrieved", retrieved},
                      {"positives", pos},
                      {"negatives", neg},
                      {"positive_sources", u.positive_sources},
                      {"negative_sources", u.negative_sources},
                      {"weights", u.weights},
                      {"positive_fallback", u.positive_fallback},
                      {"negative_fallback", u.negative_fallback},
                      {"clamped_weights", u.clamped_weights}});
  }
  out << json{{"images", images}}.dump(2) << '\n';
  return 0;
}

int cmd_loss(const CorpusOptions& opt, bool use_uasr, const LossWeights& weights, std::ostream& out) {
  const Corpus corpus = load_corpus(opt);
  const Vocabulary* vocab = corpus.vocab ? &*corpus.vocab : nullptr;
  json images = json::array();
  Vector cross, inner, total;
  for (const auto& rec : corpus.records) {
    const ResolvedInstance r = resolve_instance(rec, vocab, opt.M);
    const UasrResult u = use_uasr ? apply_uasr(r.instance) : identity_selection(r.instance);
    const LossBreakdown b = total_loss(r.instance, u, weights);
    cross.push_back(b.cross);
    inner.push_back(b.inner);
    total.push_back(b.total);
    images.push_back({{"image_id", rec.image_id},
                      {"K", r.instance.K()},
                      {"P", r.instance.caption_nouns.rows()},
                      {"cross", b.cross},
                      {"inner", b.inner},
                      {"total", b.total},
                      {"lambda_cross", b.lambda_cross},
                      {"lambda_inner", b.lambda_inner}});
  }
  const double n = std::max<std::size_t>(1, total.size());
  json mean{{"cross", pairwise_sum(cross) / n}, {"inner", pairwise_sum(inner) / n}, {"total", pairwise_sum(total) / n}};
  out << json{{"uasr", use_uasr}, {"images", images}, {"mean", mean}}.dump(2) << '\n';
  return 0;
}

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t d = 8;
  std::size_t R = 4;
  std::size_t K = 3;
  std::size_t P = 2;
  std::size_t count = 10;
  double h = kDefaultFiniteDifferenceStep;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out, std::ostream& err) {
  struct Variant {
    const char* name;
    bool weighted;
    LossWeights lambdas;
  };
  const Variant variants[] = {{"cross", false, {1.0, 0.0}},
                              {"inner", false, {0.0, 1.0}},
                              {"weighted_cross", true, {1.0, 0.0}},
                              {"weighted_inner", true, {0.0, 1.0}}};

  json per_variant = json::object();
  double overall = 0.0;
  json worst;
  for (const auto& v : variants) {
    json tensors{{"regions", 0.0}, {"positives", 0.0}, {"negatives", 0.0}, {"caption", 0.0}};
    double variant_max = 0.0;
    for (std::size_t i = 0; i < opt.count; ++i) {
      const ContrastiveInstance inst = random_instance(mix_seed(opt.seed, i), opt.d, opt.R, opt.K, opt.P);
      const UasrResult u = v.weighted ? apply_uasr(inst) : identity_selection(inst);
      const GradientComparison c =
          compare_gradients(loss_and_grad(inst, u, v.lambdas), finite_diff_grad(inst, u, v.lambdas, opt.h));
      for (const TensorDiscrepancy* t : {&c.regions, &c.positives, &c.negatives, &c.caption}) {
        tensors[t->tensor] = std::max(tensors[t->tensor].get<double>(), t->max_relative_error);
        if (t->max_relative_error > overall || worst.is_null()) {
          overall = std::max(overall, t->max_relative_error);
          worst = {{"variant", v.name}, {"instance", i},       {"tensor", t->tensor},
                   {"row", t->row},     {"col", t->col},       {"analytic", t->analytic},
                   {"numeric", t->numeric}, {"relative_error", t->max_relative_error}};
        }
      }
      variant_max = std::max(variant_max, c.max_relative_error());
    }
    per_variant[v.name] = {{"max_relative_error", variant_max}, {"tensors", tensors}};
  }
  const bool passed = overall < opt.tolerance;
  out << json{{"seed", opt.seed},
              {"sizes", {{"d", opt.d}, {"R", opt.R}, {"K", opt.K}, {"P", opt.P}, {"count", opt.count}}},
              {"h", opt.h},
              {"tolerance", opt.tolerance},
              {"max_relative_error", overall},
              {"variants", per_variant},
              {"worst", worst},
              {"passed", passed}}
             .dump(2)
      << '\n';
  if (!passed) {
    err << "gradcheck failed: worst coordinate " << worst.dump() << '\n';
    return static_cast<int>(ExitCode::kCheckFailure);
  }
  return 0;
}

json record_json(const HistoryRecord& r) { return json::parse(history_record_json(r)); }

int cmd_train(const RunConfig& cfg, const std::string& metrics_path, const std::string& state_path,
              std::ostream& out) {
  const SyntheticDataset dataset = generate_synthetic(cfg.synthetic);
  std::optional<std::ofstream> metrics;
  if (!metrics_path.empty()) metrics = open_output(metrics_path);
  const TrainState state = train_alignment(dataset, cfg.trainer, [&](const HistoryRecord& r) {
    if (metrics) *metrics << history_record_json(r) << '\n' << std::flush;
  });
  if (!state_path.empty()) {
    auto file = open_output(state_path);
    write_state(file, StateFile{cfg.synthetic, state});
  }
  json config = json::object();
  for (const auto& key : RunConfig::keys()) config[key] = cfg.get(key);
  out << json{{"config", config}, {"records", state.history.size()}, {"final", record_json(state.history.back())}}
             .dump(2)
      << '\n';
  return 0;
}

int cmd_eval(const std::string& state_path, std::ostream& out) {
  auto in = open_input(state_path);
  const StateFile file = read_state(in);
  const SyntheticDataset dataset = generate_synthetic(file.synthetic);
  out << json{{"step", file.state.step}, {"retrieval_accuracy", evaluate_retrieval(file.state, dataset)}}.dump(2)
      << '\n';
  return 0;
}

void add_corpus_options(CLI::App* cmd, CorpusOptions& opt, bool vocab_required) {
  cmd->add_option("--instances", opt.instances, "Instance file (JSON lines)")->required();
  auto* v = cmd->add_option("--vocab", opt.vocab, "Vocabulary file (JSON lines with header)");
  if (vocab_required) v->required();
  cmd->add_option("--M", opt.M, "Number of ranked tags (2K)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relative contrastive alignment toolkit"};
  app.require_subcommand(1);

  CorpusOptions rank_opt, uasr_opt, loss_opt;
  auto* rank = app.add_subcommand("rank", "Rank vocabulary tags per image and split into P/N");
  add_corpus_options(rank, rank_opt, true);

  auto* uasr = app.add_subcommand("uasr", "Report selection sets and weights per image");
  add_corpus_options(uasr, uasr_opt, false);
  bool no_normalize = false;
  uasr->add_flag("--raw-weights", no_normalize, "Skip mean-normalization of q");

  auto* loss = app.add_subcommand("loss", "Per-image contrastive losses and corpus means");
  add_corpus_options(loss, loss_opt, false);
  bool use_uasr = false;
  LossWeights lambdas;
  loss->add_flag("--uasr", use_uasr, "Apply selection and reweighting");
  loss->add_option("--lambda_cross", lambdas.cross, "Cross-modality weight");
  loss->add_option("--lambda_inner", lambdas.inner, "Inner-modality weight");

  GradcheckOptions grad_opt;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gradcheck->add_option("--seed", grad_opt.seed);
  gradcheck->add_option("--d", grad_opt.d)->check(CLI::PositiveNumber);
  gradcheck->add_option("--R", grad_opt.R)->check(CLI::PositiveNumber);
  gradcheck->add_option("--K", grad_opt.K)->check(CLI::PositiveNumber);
  gradcheck->add_option("--P", grad_opt.P);
  gradcheck->add_option("--count", grad_opt.count)->check(CLI::PositiveNumber);
  gradcheck->add_option("--fd-step", grad_opt.h, "Central-difference step h");
  gradcheck->add_option("--tolerance", grad_opt.tolerance);

  auto* train = app.add_subcommand("train", "Train embedding tables on synthetic data");
  std::string config_path, metrics_path, state_out;
  train->add_option("--config", config_path, "key = value run configuration");
  train->add_option("--metrics", metrics_path, "Write the metrics stream (JSON lines) here");
  train->add_option("--state", state_out, "Write the final state here");
  std::map<std::string, std::string> overrides;
  for (const auto& key : RunConfig::keys()) train->add_option("--" + key, overrides[key]);

  auto* eval = app.add_subcommand("eval", "Retrieval accuracy of a saved state");
  std::string state_in;
  eval->add_option("--state", state_in, "State file written by train")->required();

  try {
    grad_opt.seed = default_seed();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << '\n';
      return static_cast<int>(ExitCode::kParse);
    }

    if (*rank) return cmd_rank(rank_opt, out);
    if (*uasr) return cmd_uasr(uasr_opt, !no_normalize, out, err);
    if (*loss) return cmd_loss(loss_opt, use_uasr, lambdas, out);
    if (*gradcheck) return cmd_gradcheck(grad_opt, out, err);
    if (*train) {
      RunConfig cfg;
      cfg.set("seed", std::to_string(default_seed()));
      if (!config_path.empty()) {
        auto in = open_input(config_path);
        cfg = parse_run_config(in, cfg);
      }
      for (const auto& key : RunConfig::keys()) {
        if (train->count("--" + key) > 0) cfg.set(key, overrides[key]);
      }
      return cmd_train(cfg, metrics_path, state_out, out);
    }
    if (*eval) return cmd_eval(state_in, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  }
  return static_cast<int>(ExitCode::kParse);
}

}  // namespace rca::cli
