#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rca/core_model.hpp"
#include "rca/synthetic.hpp"
#include "rca/tag_augmentation.hpp"
#include "rca/trainer.hpp"

namespace rca {

inline constexpr const char* kVocabFormat = "rca-vocab";
inline constexpr const char* kStateFormat = "rca-state";
inline constexpr int kFormatVersion = 1;

/// Line-delimited JSON: a header {"format":"rca-vocab","version":1,"dim":d}
/// followed by one {"tag_id":..., "embedding":[...]} record per line.
struct Vocabulary {
  std::size_t dim = 0;
  std::vector<VocabularyEntry> entries;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

Vocabulary read_vocabulary(std::istream& in);
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);

struct CaptionToken {
  std::string text;
  bool is_noun = false;
  Embedding embedding;

  friend bool operator==(const CaptionToken&, const CaptionToken&) = default;
};

/// A pre-ranked tag. The embedding is optional; without it the tag is looked
/// up in a vocabulary.
struct TagReference {
  std::string tag_id;
  double score = 0.0;
  std::optional<Embedding> embedding;

  friend bool operator==(const TagReference&, const TagReference&) = default;
};

struct ImageRecord {
  std::string image_id;
  Embedding image_embedding;
  std::vector<Embedding> regions;
  std::vector<CaptionToken> caption_tokens;
  std::optional<std::vector<TagReference>> tags;

  std::size_t dim() const noexcept { return image_embedding.size(); }

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// One record per line, no header. Throws ParseError (with line number) on
/// malformed JSON or missing fields and DimensionError on inconsistent
/// embedding lengths.
std::vector<ImageRecord> read_instances(std::istream& in);
void write_instances(std::ostream& out, std::span<const ImageRecord> records);

/// An image's ranked tags turned into a contrastive instance.
struct ResolvedInstance {
  ContrastiveInstance instance;
  std::vector<std::string> positive_ids;
  std::vector<std::string> negative_ids;
};

/// Uses the record's own tags when present (first half positive), otherwise
/// ranks `vocab` against the image embedding and keeps the top M. Caption
/// tokens not flagged as nouns are dropped.
ResolvedInstance resolve_instance(const ImageRecord& record, const Vocabulary* vocab, std::size_t M);

struct StateFile {
  SyntheticConfig synthetic;
  TrainState state;

  friend bool operator==(const StateFile&, const StateFile&) = default;
};

void write_state(std::ostream& out, const StateFile& file);
StateFile read_state(std::istream& in);

/// Single-line JSON metrics record (no trailing newline).
std::string history_record_json(const HistoryRecord& record);

}  // namespace rca
