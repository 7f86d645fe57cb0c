#pragma once

#include <cstdint>
#include <vector>

#include "rca/core_model.hpp"
#include "rca/matrix.hpp"

namespace rca {

struct SyntheticConfig {
  std::size_t n_concepts = 10;
  std::size_t d = 16;
  std::size_t n_images = 200;
  std::size_t regions_per_image = 4;  // also K: one positive tag per depicted concept
  double noise_sigma = 0.0;
  double flip_rate = 0.0;          // probability an image gets one positive/negative swap
  double caption_noun_rate = 0.75;  // probability a depicted concept is named in the caption
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;

  friend bool operator==(const SyntheticConfig&, const SyntheticConfig&) = default;
};

/// One generated image: the embeddings as a contrastive instance plus the
/// ground-truth concept of every row.
struct SyntheticImage {
  ContrastiveInstance data;
  Embedding image_embedding;
  std::vector<std::size_t> region_concepts;
  std::vector<std::size_t> positive_concepts;
  std::vector<std::size_t> negative_concepts;
  std::vector<std::size_t> caption_concepts;
  bool flipped = false;

  friend bool operator==(const SyntheticImage&, const SyntheticImage&) = default;
};

struct SyntheticDataset {
  SyntheticConfig config;
  Matrix prototypes;  // n_concepts x d, unit rows
  std::vector<SyntheticImage> images;

  friend bool operator==(const SyntheticDataset&, const SyntheticDataset&) = default;
};

/// Deterministic in config.seed.
SyntheticDataset generate_synthetic(const SyntheticConfig& config);

/// Gaussian instance for gradient/oracle checks: N(0,1) entries, global
/// scores uniform in [0.05, 1), negative scores uniform in [-1, 0.05).
ContrastiveInstance random_instance(std::uint64_t seed, std::size_t d, std::size_t regions,
                                    std::size_t K, std::size_t caption_nouns);

/// splitmix64 finalizer over a combined key; used to derive independent
/// per-step / per-instance seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

}  // namespace rca
