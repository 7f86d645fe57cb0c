#include "rca/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <istream>
#include <sstream>
#include <string>

#include "rca/errors.hpp"

namespace rca {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  // strtod over a NUL-terminated copy; from_chars for double is not in libstdc++ 11.
  const std::string copy(value);
  char* end = nullptr;
  const double out = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + copy + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true/false, got '" + std::string(value) + "'");
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = {
      "n_concepts",       "d",
      "n_images",         "regions_per_image",
      "noise_sigma",      "flip_rate",
      "caption_noun_rate", "seed",
      "steps",            "learning_rate",
      "batch_size",       "lambda_cross",
      "lambda_inner",     "enable_uasr",
      "enable_inner",     "enable_subsample",
      "subsample_fraction", "normalize_weights",
      "freeze_tags",      "freeze_regions",
      "freeze_captions",  "init",
      "log_every",        "threads",
      "M",
  };
  return names;
}

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  auto& s = synthetic;
  auto& t = trainer;
  if (key == "n_concepts") s.n_concepts = parse_integer<std::size_t>(key, value);
  else if (key == "d") s.d = parse_integer<std::size_t>(key, value);
  else if (key == "n_images") s.n_images = parse_integer<std::size_t>(key, value);
  else if (key == "regions_per_image") s.regions_per_image = parse_integer<std::size_t>(key, value);
  else if (key == "noise_sigma") s.noise_sigma = parse_real(key, value);
  else if (key == "flip_rate") s.flip_rate = parse_real(key, value);
  else if (key == "caption_noun_rate") s.caption_noun_rate = parse_real(key, value);
  else if (key == "seed") s.seed = t.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "steps") t.steps = parse_integer<std::size_t>(key, value);
  else if (key == "learning_rate") t.learning_rate = parse_real(key, value);
  else if (key == "batch_size") t.batch_size = parse_integer<std::size_t>(key, value);
  else if (key == "lambda_cross") t.lambda_cross = parse_real(key, value);
  else if (key == "lambda_inner") t.lambda_inner = parse_real(key, value);
  else if (key == "enable_uasr") t.enable_uasr = parse_bool(key, value);
  else if (key == "enable_inner") t.enable_inner = parse_bool(key, value);
  else if (key == "enable_subsample") t.enable_subsample = parse_bool(key, value);
  else if (key == "subsample_fraction") t.subsample_fraction = parse_real(key, value);
  else if (key == "normalize_weights") t.normalize_weights = parse_bool(key, value);
  else if (key == "freeze_tags") t.freeze_tags = parse_bool(key, value);
  else if (key == "freeze_regions") t.freeze_regions = parse_bool(key, value);
  else if (key == "freeze_captions") t.freeze_captions = parse_bool(key, value);
  else if (key == "init") {
    if (value == "random") t.init = InitMode::kRandom;
    else if (value == "aligned") t.init = InitMode::kAligned;
    else throw ConfigError("key 'init': expected random or aligned, got '" + std::string(value) + "'");
  } else if (key == "log_every") t.log_every = parse_integer<std::size_t>(key, value);
  else if (key == "threads") t.threads = parse_integer<std::size_t>(key, value);
  else if (key == "M") M = parse_integer<std::size_t>(key, value);
  else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

std::string RunConfig::get(std::string_view key) const {
  const auto& s = synthetic;
  const auto& t = trainer;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  if (key == "n_concepts") return std::to_string(s.n_concepts);
  if (key == "d") return std::to_string(s.d);
  if (key == "n_images") return std::to_string(s.n_images);
  if (key == "regions_per_image") return std::to_string(s.regions_per_image);
  if (key == "noise_sigma") return format_real(s.noise_sigma);
  if (key == "flip_rate") return format_real(s.flip_rate);
  if (key == "caption_noun_rate") return format_real(s.caption_noun_rate);
  if (key == "seed") return std::to_string(s.seed);
  if (key == "steps") return std::to_string(t.steps);
  if (key == "learning_rate") return format_real(t.learning_rate);
  if (key == "batch_size") return std::to_string(t.batch_size);
  if (key == "lambda_cross") return format_real(t.lambda_cross);
  if (key == "lambda_inner") return format_real(t.lambda_inner);
  if (key == "enable_uasr") return b(t.enable_uasr);
  if (key == "enable_inner") return b(t.enable_inner);
  if (key == "enable_subsample") return b(t.enable_subsample);
  if (key == "subsample_fraction") return format_real(t.subsample_fraction);
  if (key == "normalize_weights") return b(t.normalize_weights);
  if (key == "freeze_tags") return b(t.freeze_tags);
  if (key == "freeze_regions") return b(t.freeze_regions);
  if (key == "freeze_captions") return b(t.freeze_captions);
  if (key == "init") return t.init == InitMode::kAligned ? "aligned" : "random";
  if (key == "log_every") return std::to_string(t.log_every);
  if (key == "threads") return std::to_string(t.threads);
  if (key == "M") return std::to_string(M);
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

RunConfig parse_run_config(std::istream& in, RunConfig base) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    try {
      base.set(trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

}  // namespace rca
