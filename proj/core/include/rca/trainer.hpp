#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rca/core_model.hpp"
#include "rca/losses.hpp"
#include "rca/matrix.hpp"
#include "rca/synthetic.hpp"
#include "rca/uasr.hpp"

namespace rca {

enum class InitMode { kRandom, kAligned };

struct TrainerConfig {
  std::size_t steps = 500;
  double learning_rate = 1e-4;
  std::size_t batch_size = 512;  // clipped to the dataset size
  double lambda_cross = 1.0;
  double lambda_inner = 1.0;
  bool enable_uasr = true;
  bool enable_inner = true;
  bool enable_subsample = true;
  double subsample_fraction = 0.5;
  bool normalize_weights = true;
  bool freeze_tags = false;
  bool freeze_regions = false;
  bool freeze_captions = false;
  InitMode init = InitMode::kRandom;
  std::size_t log_every = 10;
  std::size_t threads = 1;  // 0 = hardware concurrency
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

struct HistoryRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double retrieval_accuracy = 0.0;
  double mean_pos_phi = 0.0;
  double mean_neg_phi = 0.0;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

/// Learnable per-concept tables. An image's embedding for a row of concept c
/// is table[c] plus that row's fixed offset from the concept prototype.
struct TrainState {
  Matrix tag_table;
  Matrix region_table;
  Matrix caption_table;
  std::size_t step = 0;
  std::vector<HistoryRecord> history;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

TrainState initial_state(const SyntheticDataset& dataset, InitMode mode, std::uint64_t seed);

/// Tables equal to the generating prototypes.
TrainState aligned_state(const SyntheticDataset& dataset);

ContrastiveInstance materialize(const TrainState& state, const SyntheticDataset& dataset,
                                const SyntheticImage& image);

/// Fraction of ground-truth (depicted) concept tags whose highest-cosine
/// region depicts that concept.
double evaluate_retrieval(const TrainState& state, const SyntheticDataset& dataset);

/// Full-dataset objective (no subsampling) under the config's loss switches.
double dataset_objective(const TrainState& state, const SyntheticDataset& dataset,
                         const TrainerConfig& config);

HistoryRecord measure(const TrainState& state, const SyntheticDataset& dataset,
                      const TrainerConfig& config);

using HistoryObserver = std::function<void(const HistoryRecord&)>;

/// Plain gradient descent on the three tables. Records history at step 0,
/// every `log_every` steps and at the last step. Throws DivergenceError when
/// the loss or a table becomes non-finite.
TrainState train_alignment(const SyntheticDataset& dataset, const TrainerConfig& config,
                           const HistoryObserver& observer = {});

/// Same, continuing from a given state.
TrainState train_alignment(const SyntheticDataset& dataset, const TrainerConfig& config,
                           TrainState state, const HistoryObserver& observer);

/// Runs fn(i) for i in [0, n) over `threads` workers. Callers write results
/// into per-index slots so reduction order stays fixed.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace rca
