#include "rca/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "rca/errors.hpp"
#include "rca/tag_augmentation.hpp"

namespace rca {
namespace {

Embedding noisy_copy(std::span<const double> prototype, double sigma, std::mt19937_64& rng) {
  Embedding out(prototype.begin(), prototype.end());
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : out) v += noise(rng);
  }
  return out;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_concepts < 2) throw ConfigError("n_concepts must be at least 2");
  if (d < 2) throw ConfigError("d must be at least 2");
  if (n_images == 0) throw ConfigError("n_images must be positive");
  if (regions_per_image == 0) throw ConfigError("regions_per_image must be positive");
  if (n_concepts < regions_per_image + 1) {
    throw ConfigError("n_concepts (" + std::to_string(n_concepts) +
                      ") must exceed regions_per_image (" + std::to_string(regions_per_image) +
                      ") so that negatives exist");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  if (!(flip_rate >= 0.0 && flip_rate < 1.0)) throw ConfigError("flip_rate must lie in [0, 1)");
  if (!(caption_noun_rate >= 0.0 && caption_noun_rate <= 1.0)) {
    throw ConfigError("caption_noun_rate must lie in [0, 1]");
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (a + 1) + 0xBF58476D1CE4E5B9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ContrastiveInstance random_instance(std::uint64_t seed, std::size_t d, std::size_t regions,
                                    std::size_t K, std::size_t caption_nouns) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto fill = [&](std::size_t rows) {
    Matrix m(rows, d);
    for (double& v : m.values()) v = gauss(rng);
    return m;
  };
  ContrastiveInstance inst;
  inst.regions = fill(regions);
  inst.positives = fill(K);
  inst.negatives = fill(K);
  inst.caption_nouns = fill(caption_nouns);
  std::uniform_real_distribution<double> pos(0.05, 1.0);
  std::uniform_real_distribution<double> neg(-1.0, 0.05);
  for (std::size_t n = 0; n < K; ++n) inst.global_scores.push_back(pos(rng));
  for (std::size_t n = 0; n < K; ++n) inst.negative_scores.push_back(neg(rng));
  return inst;
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticDataset ds;
  ds.config = config;
  ds.prototypes = Matrix(config.n_concepts, config.d);
  for (std::size_t c = 0; c < config.n_concepts; ++c) {
    auto row = ds.prototypes.row(c);
    for (double& v : row) v = gauss(rng);
    const double n = norm(row);
    for (double& v : row) v /= n;
  }

  const std::size_t R = config.regions_per_image;
  const std::size_t K = R;
  std::vector<std::size_t> concepts(config.n_concepts);
  std::iota(concepts.begin(), concepts.end(), std::size_t{0});

  ds.images.reserve(config.n_images);
  for (std::size_t i = 0; i < config.n_images; ++i) {
    SyntheticImage img;
    std::shuffle(concepts.begin(), concepts.end(), rng);
    img.region_concepts.assign(concepts.begin(), concepts.begin() + static_cast<std::ptrdiff_t>(R));
    img.positive_concepts = img.region_concepts;

    const std::vector<std::size_t> absent(concepts.begin() + static_cast<std::ptrdiff_t>(R), concepts.end());
    for (std::size_t l = 0; l < K; ++l) {
      // Cycles through the absent concepts when there are fewer than K.
      img.negative_concepts.push_back(absent[l % absent.size()]);
    }
    for (std::size_t c : img.region_concepts) {
      if (unit(rng) < config.caption_noun_rate) img.caption_concepts.push_back(c);
    }

    auto& inst = img.data;
    inst.regions = Matrix(0, config.d);
    inst.positives = Matrix(0, config.d);
    inst.negatives = Matrix(0, config.d);
    inst.caption_nouns = Matrix(0, config.d);
    for (std::size_t c : img.region_concepts) {
      inst.regions.append_row(noisy_copy(ds.prototypes.row(c), config.noise_sigma, rng));
    }
    for (std::size_t c : img.positive_concepts) {
      inst.positives.append_row(noisy_copy(ds.prototypes.row(c), config.noise_sigma, rng));
    }
    for (std::size_t c : img.negative_concepts) {
      inst.negatives.append_row(noisy_copy(ds.prototypes.row(c), config.noise_sigma, rng));
    }
    for (std::size_t c : img.caption_concepts) {
      inst.caption_nouns.append_row(noisy_copy(ds.prototypes.row(c), config.noise_sigma, rng));
    }

    img.image_embedding.assign(config.d, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
      auto v = inst.regions.row(r);
      for (std::size_t c = 0; c < config.d; ++c) img.image_embedding[c] += v[c];
    }
    for (std::size_t n = 0; n < K; ++n) {
      inst.global_scores.push_back(cosine_similarity(img.image_embedding, inst.positives.row(n)));
      inst.negative_scores.push_back(cosine_similarity(img.image_embedding, inst.negatives.row(n)));
    }

    if (unit(rng) < config.flip_rate) {
      std::uniform_int_distribution<std::size_t> pick(0, K - 1);
      const std::size_t a = pick(rng);
      const std::size_t b = pick(rng);
      auto pa = inst.positives.row(a);
      auto nb = inst.negatives.row(b);
      std::swap_ranges(pa.begin(), pa.end(), nb.begin());
      std::swap(inst.global_scores[a], inst.negative_scores[b]);
      std::swap(img.positive_concepts[a], img.negative_concepts[b]);
      img.flipped = true;
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

}  // namespace rca
