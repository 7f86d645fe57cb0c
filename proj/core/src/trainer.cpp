#include "rca/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "rca/autodiff.hpp"
#include "rca/errors.hpp"
#include "rca/tag_augmentation.hpp"

namespace rca {
namespace {

// Adds table[concepts[r]] - prototype[concepts[r]] to every row of `rows`.
void shift_rows(Matrix& rows, const std::vector<std::size_t>& concepts, const Matrix& table,
                const Matrix& prototypes) {
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto dst = rows.row(r);
    auto t = table.row(concepts[r]);
    auto p = prototypes.row(concepts[r]);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += t[c] - p[c];
  }
}

void scatter_to_table(const Matrix& grads, const std::vector<std::size_t>& concepts, Matrix& table) {
  for (std::size_t r = 0; r < grads.rows(); ++r) {
    auto dst = table.row(concepts[r]);
    auto src = grads.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
  }
}

LossWeights loss_weights(const TrainerConfig& config) {
  return {config.lambda_cross, config.enable_inner ? config.lambda_inner : 0.0};
}

UasrResult selection_for(const ContrastiveInstance& inst, const TrainerConfig& config) {
  if (!config.enable_uasr) return identity_selection(inst);
  return apply_uasr(inst, UasrOptions{config.normalize_weights});
}

struct StepContribution {
  double loss = 0.0;
  Matrix d_tags;
  Matrix d_regions;
  Matrix d_captions;
};

std::vector<std::size_t> pick(const std::vector<std::size_t>& values, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(values[i]);
  return out;
}

Vector pick(const Vector& values, const std::vector<std::size_t>& idx) {
  Vector out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(values[i]);
  return out;
}

StepContribution instance_step(const TrainState& state, const SyntheticDataset& dataset,
                               const SyntheticImage& image, const TrainerConfig& config,
                               std::uint64_t sample_seed) {
  ContrastiveInstance inst = materialize(state, dataset, image);
  std::vector<std::size_t> pos_concepts = image.positive_concepts;
  std::vector<std::size_t> neg_concepts = image.negative_concepts;

  if (config.enable_subsample) {
    const auto idx = subsample_indices(inst.K(), inst.K(), config.subsample_fraction, sample_seed);
    inst.positives = gather_rows(inst.positives, idx.positives);
    inst.negatives = gather_rows(inst.negatives, idx.negatives);
    inst.global_scores = pick(inst.global_scores, idx.positives);
    inst.negative_scores = pick(inst.negative_scores, idx.negatives);
    pos_concepts = pick(pos_concepts, idx.positives);
    neg_concepts = pick(neg_concepts, idx.negatives);
  }

  const UasrResult uasr = selection_for(inst, config);
  const GradientBundle g = loss_and_grad(inst, uasr, loss_weights(config));

  const std::size_t n = dataset.config.n_concepts;
  const std::size_t d = dataset.config.d;
  StepContribution out{g.loss, Matrix(n, d), Matrix(n, d), Matrix(n, d)};
  scatter_to_table(g.d_positives, pos_concepts, out.d_tags);
  scatter_to_table(g.d_negatives, neg_concepts, out.d_tags);
  scatter_to_table(g.d_regions, image.region_concepts, out.d_regions);
  scatter_to_table(g.d_caption, image.caption_concepts, out.d_captions);
  return out;
}

void add_into(Matrix& total, const Matrix& part) {
  auto t = total.values();
  auto g = part.values();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += g[i];
}

void descend(Matrix& table, const Matrix& grad, double step) {
  auto t = table.values();
  auto g = grad.values();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] -= step * g[i];
}

}  // namespace

void TrainerConfig::validate() const {
  if (steps == 0) throw ConfigError("steps must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a finite non-negative number");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lambda_cross >= 0.0) || !(lambda_inner >= 0.0)) throw ConfigError("lambdas must be non-negative");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw ConfigError("subsample_fraction must lie in (0, 1]");
  }
  if (log_every == 0) throw ConfigError("log_every must be positive");
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

TrainState initial_state(const SyntheticDataset& dataset, InitMode mode, std::uint64_t seed) {
  if (mode == InitMode::kAligned) return aligned_state(dataset);
  const std::size_t n = dataset.config.n_concepts;
  const std::size_t d = dataset.config.d;
  std::mt19937_64 rng(mix_seed(seed, 0x7AB1E));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_table = [&] {
    Matrix m(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      auto row = m.row(r);
      for (double& v : row) v = gauss(rng);
      const double len = norm(row);
      for (double& v : row) v /= len;
    }
    return m;
  };
  TrainState state;
  state.tag_table = random_table();
  state.region_table = random_table();
  state.caption_table = random_table();
  return state;
}

TrainState aligned_state(const SyntheticDataset& dataset) {
  TrainState state;
  state.tag_table = dataset.prototypes;
  state.region_table = dataset.prototypes;
  state.caption_table = dataset.prototypes;
  return state;
}

ContrastiveInstance materialize(const TrainState& state, const SyntheticDataset& dataset,
                                const SyntheticImage& image) {
  ContrastiveInstance inst = image.data;
  shift_rows(inst.regions, image.region_concepts, state.region_table, dataset.prototypes);
  shift_rows(inst.positives, image.positive_concepts, state.tag_table, dataset.prototypes);
  shift_rows(inst.negatives, image.negative_concepts, state.tag_table, dataset.prototypes);
  shift_rows(inst.caption_nouns, image.caption_concepts, state.caption_table, dataset.prototypes);
  return inst;
}

double evaluate_retrieval(const TrainState& state, const SyntheticDataset& dataset) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& image : dataset.images) {
    const ContrastiveInstance inst = materialize(state, dataset, image);
    auto score_tag = [&](std::span<const double> tag, std::size_t concept_id) {
      if (std::find(image.region_concepts.begin(), image.region_concepts.end(), concept_id) ==
          image.region_concepts.end()) {
        return;  // not depicted: a false positive label, not a retrieval target
      }
      std::size_t best = 0;
      double best_u = -INFINITY;
      for (std::size_t r = 0; r < inst.regions.rows(); ++r) {
        const double u = local_uncertainty(inst.regions.row(r), tag);
        if (u > best_u) {
          best_u = u;
          best = r;
        }
      }
      hits += image.region_concepts[best] == concept_id ? 1 : 0;
      ++total;
    };
    for (std::size_t n = 0; n < inst.positives.rows(); ++n) score_tag(inst.positives.row(n), image.positive_concepts[n]);
    for (std::size_t n = 0; n < inst.negatives.rows(); ++n) score_tag(inst.negatives.row(n), image.negative_concepts[n]);
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

double dataset_objective(const TrainState& state, const SyntheticDataset& dataset,
                         const TrainerConfig& config) {
  Vector losses(dataset.images.size());
  parallel_for(dataset.images.size(), config.threads, [&](std::size_t i) {
    const ContrastiveInstance inst = materialize(state, dataset, dataset.images[i]);
    losses[i] = total_loss(inst, selection_for(inst, config), loss_weights(config)).total;
  });
  return pairwise_sum(losses) / static_cast<double>(losses.size());
}

HistoryRecord measure(const TrainState& state, const SyntheticDataset& dataset,
                      const TrainerConfig& config) {
  HistoryRecord rec;
  rec.step = state.step;
  rec.loss = dataset_objective(state, dataset, config);
  rec.retrieval_accuracy = evaluate_retrieval(state, dataset);
  Vector pos_phi, neg_phi;
  for (const auto& image : dataset.images) {
    const ContrastiveInstance inst = materialize(state, dataset, image);
    for (double v : compatibility(inst.positives, inst.regions)) pos_phi.push_back(v);
    for (double v : compatibility(inst.negatives, inst.regions)) neg_phi.push_back(v);
  }
  rec.mean_pos_phi = pos_phi.empty() ? 0.0 : pairwise_sum(pos_phi) / static_cast<double>(pos_phi.size());
  rec.mean_neg_phi = neg_phi.empty() ? 0.0 : pairwise_sum(neg_phi) / static_cast<double>(neg_phi.size());
  return rec;
}

TrainState train_alignment(const SyntheticDataset& dataset, const TrainerConfig& config,
                           const HistoryObserver& observer) {
  return train_alignment(dataset, config, initial_state(dataset, config.init, config.seed), observer);
}

TrainState train_alignment(const SyntheticDataset& dataset, const TrainerConfig& config,
                           TrainState state, const HistoryObserver& observer) {
  config.validate();
  if (dataset.images.empty()) throw EmptyInputError("train_alignment: empty dataset");

  auto record = [&] {
    HistoryRecord rec;
    try {
      rec = measure(state, dataset, config);
    } catch (const InvalidInputError& e) {
      throw DivergenceError(state.step, e.what());
    }
    if (!std::isfinite(rec.loss)) throw DivergenceError(state.step, "loss is not finite");
    state.history.push_back(rec);
    if (observer) observer(rec);
  };
  if (state.history.empty() || state.history.back().step != state.step) record();

  const std::size_t n_images = dataset.images.size();
  const std::size_t batch = std::min(config.batch_size, n_images);
  std::vector<std::size_t> order(n_images);
  const std::size_t first = state.step;

  for (std::size_t s = 0; s < config.steps; ++s) {
    const std::size_t step = first + s;
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (batch < n_images) {
      std::mt19937_64 rng(mix_seed(config.seed, step, 0xBA7C));
      std::shuffle(order.begin(), order.end(), rng);
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(batch));
    }

    std::vector<StepContribution> parts(batch);
    parallel_for(batch, config.threads, [&](std::size_t b) {
      const std::size_t i = order[b];
      try {
        parts[b] = instance_step(state, dataset, dataset.images[i], config, mix_seed(config.seed, step, i + 1));
      } catch (const InvalidInputError& e) {
        throw DivergenceError(step, e.what());  // overflow inside the forward pass
      }
    });

    Vector losses;
    losses.reserve(batch);
    const std::size_t nc = dataset.config.n_concepts;
    const std::size_t d = dataset.config.d;
    Matrix g_tags(nc, d), g_regions(nc, d), g_captions(nc, d);
    for (const auto& p : parts) {
      losses.push_back(p.loss);
      add_into(g_tags, p.d_tags);
      add_into(g_regions, p.d_regions);
      add_into(g_captions, p.d_captions);
    }
    const double batch_loss = pairwise_sum(losses) / static_cast<double>(batch);
    if (!std::isfinite(batch_loss)) throw DivergenceError(step, "batch loss is not finite");

    const double rate = config.learning_rate / static_cast<double>(batch);
    if (!config.freeze_tags) descend(state.tag_table, g_tags, rate);
    if (!config.freeze_regions) descend(state.region_table, g_regions, rate);
    if (!config.freeze_captions) descend(state.caption_table, g_captions, rate);
    if (!all_finite(state.tag_table.values()) || !all_finite(state.region_table.values()) ||
        !all_finite(state.caption_table.values())) {
      throw DivergenceError(step, "embedding table became non-finite");
    }
    state.step = step + 1;
    if (state.step % config.log_every == 0 || s + 1 == config.steps) record();
  }
  return state;
}

}  // namespace rca
