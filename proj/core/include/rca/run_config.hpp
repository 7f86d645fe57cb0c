#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rca/synthetic.hpp"
#include "rca/tag_augmentation.hpp"
#include "rca/trainer.hpp"

namespace rca {

/// Flat key = value configuration covering the generator, the trainer and
/// the tag count M. `seed` drives both the generator and the trainer.
struct RunConfig {
  SyntheticConfig synthetic;
  TrainerConfig trainer;
  std::size_t M = kDefaultTagCount;

  /// Throws ConfigError for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  static const std::vector<std::string>& keys();
};

/// Lines of `key = value`; blank lines and '#' comments ignored.
RunConfig parse_run_config(std::istream& in, RunConfig base = {});

}  // namespace rca
