#include "rca/io.hpp"

#include <istream>
#include <ostream>
#include <algorithm>
#include <iterator>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rca/errors.hpp"

namespace rca {
namespace {

using json = nlohmann::json;

// Calls fn(line_number, parsed) for every non-blank line.
template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), number);
    }
    try {
      fn(number, value);
    } catch (const json::exception& e) {
      throw ParseError(std::string("unexpected record shape: ") + e.what(), number);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), number);
    }
  }
}

Embedding to_embedding(const json& value, const char* field) {
  if (!value.is_array()) throw std::invalid_argument(std::string(field) + " must be an array");
  Embedding out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number()) throw std::invalid_argument(std::string(field) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void require_dim(std::size_t got, std::size_t want, std::size_t line, const std::string& what) {
  if (got != want) {
    throw DimensionError("line " + std::to_string(line) + ": " + what + " has length " +
                         std::to_string(got) + ", expected " + std::to_string(want));
  }
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, std::size_t cols) {
  Matrix m(0, cols);
  for (const auto& r : rows) {
    const Embedding e = to_embedding(r, "table row");
    if (e.size() != cols) throw DimensionError("state table row has the wrong length");
    m.append_row(e);
  }
  return m;
}

json synthetic_json(const SyntheticConfig& c) {
  return {{"n_concepts", c.n_concepts}, {"d", c.d},
          {"n_images", c.n_images},     {"regions_per_image", c.regions_per_image},
          {"noise_sigma", c.noise_sigma}, {"flip_rate", c.flip_rate},
          {"caption_noun_rate", c.caption_noun_rate}, {"seed", c.seed}};
}

SyntheticConfig synthetic_from_json(const json& j) {
  SyntheticConfig c;
  c.n_concepts = j.at("n_concepts").get<std::size_t>();
  c.d = j.at("d").get<std::size_t>();
  c.n_images = j.at("n_images").get<std::size_t>();
  c.regions_per_image = j.at("regions_per_image").get<std::size_t>();
  c.noise_sigma = j.at("noise_sigma").get<double>();
  c.flip_rate = j.at("flip_rate").get<double>();
  c.caption_noun_rate = j.at("caption_noun_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json history_json(const HistoryRecord& r) {
  return {{"step", r.step},
          {"loss", r.loss},
          {"retrieval_accuracy", r.retrieval_accuracy},
          {"mean_pos_phi", r.mean_pos_phi},
          {"mean_neg_phi", r.mean_neg_phi}};
}

}  // namespace

Vocabulary read_vocabulary(std::istream& in) {
  Vocabulary vocab;
  bool have_header = false;
  std::set<std::string> seen;
  for_each_json_line(in, [&](std::size_t line, const json& value) {
    if (!have_header) {
      if (value.value("format", std::string{}) != kVocabFormat) {
        throw ParseError("first line must be a rca-vocab header", line);
      }
      if (value.at("version").get<int>() != kFormatVersion) {
        throw ParseError("unsupported vocabulary version", line);
      }
      vocab.dim = value.at("dim").get<std::size_t>();
      if (vocab.dim == 0) throw ParseError("vocabulary dim must be positive", line);
      have_header = true;
      return;
    }
    VocabularyEntry entry{value.at("tag_id").get<std::string>(), to_embedding(value.at("embedding"), "embedding")};
    require_dim(entry.embedding.size(), vocab.dim, line, "embedding of '" + entry.tag_id + "'");
    if (!seen.insert(entry.tag_id).second) throw ParseError("duplicate tag_id '" + entry.tag_id + "'", line);
    vocab.entries.push_back(std::move(entry));
  });
  if (!have_header) throw ParseError("vocabulary file is empty", 1);
  return vocab;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  out << json{{"format", kVocabFormat}, {"version", kFormatVersion}, {"dim", vocab.dim}}.dump() << '\n';
  for (const auto& e : vocab.entries) {
    out << json{{"tag_id", e.tag_id}, {"embedding", e.embedding}}.dump() << '\n';
  }
}

std::vector<ImageRecord> read_instances(std::istream& in) {
  std::vector<ImageRecord> records;
  std::size_t corpus_dim = 0;
  for_each_json_line(in, [&](std::size_t line, const json& value) {
    ImageRecord rec;
    rec.image_id = value.at("image_id").get<std::string>();
    rec.image_embedding = to_embedding(value.at("image_embedding"), "image_embedding");
    const std::size_t d = rec.image_embedding.size();
    if (d == 0) throw DimensionError("line " + std::to_string(line) + ": empty image_embedding");
    if (corpus_dim == 0) corpus_dim = d;
    require_dim(d, corpus_dim, line, "image_embedding");

    for (const auto& r : value.at("regions")) {
      rec.regions.push_back(to_embedding(r, "regions"));
      require_dim(rec.regions.back().size(), d, line, "region");
    }
    for (const auto& t : value.at("caption_tokens")) {
      CaptionToken tok{t.at("text").get<std::string>(), t.at("is_noun").get<bool>(),
                       to_embedding(t.at("embedding"), "caption embedding")};
      require_dim(tok.embedding.size(), d, line, "caption token '" + tok.text + "'");
      rec.caption_tokens.push_back(std::move(tok));
    }
    if (value.contains("tags")) {
      std::vector<TagReference> tags;
      for (const auto& t : value.at("tags")) {
        TagReference ref{t.at("tag_id").get<std::string>(), t.at("score").get<double>(), std::nullopt};
        if (t.contains("embedding")) {
          ref.embedding = to_embedding(t.at("embedding"), "tag embedding");
          require_dim(ref.embedding->size(), d, line, "tag '" + ref.tag_id + "'");
        }
        tags.push_back(std::move(ref));
      }
      rec.tags = std::move(tags);
    }
    records.push_back(std::move(rec));
  });
  return records;
}

void write_instances(std::ostream& out, std::span<const ImageRecord> records) {
  for (const auto& rec : records) {
    json tokens = json::array();
    for (const auto& t : rec.caption_tokens) {
      tokens.push_back({{"text", t.text}, {"is_noun", t.is_noun}, {"embedding", t.embedding}});
    }
    json j{{"image_id", rec.image_id},
           {"image_embedding", rec.image_embedding},
           {"regions", rec.regions},
           {"caption_tokens", tokens}};
    if (rec.tags) {
      json tags = json::array();
      for (const auto& t : *rec.tags) {
        json tag{{"tag_id", t.tag_id}, {"score", t.score}};
        if (t.embedding) tag["embedding"] = *t.embedding;
        tags.push_back(std::move(tag));
      }
      j["tags"] = std::move(tags);
    }
    out << j.dump() << '\n';
  }
}

ResolvedInstance resolve_instance(const ImageRecord& record, const Vocabulary* vocab, std::size_t M) {
  const std::size_t d = record.dim();
  if (vocab && vocab->dim != d) {
    throw DimensionError("image '" + record.image_id + "' has dim " + std::to_string(d) +
                         " but the vocabulary has dim " + std::to_string(vocab->dim));
  }

  std::vector<TagCandidate> ranked;
  if (record.tags) {
    for (const auto& ref : *record.tags) {
      if (ref.embedding) {
        ranked.push_back({ref.tag_id, *ref.embedding, ref.score});
        continue;
      }
      if (!vocab) {
        throw ParseError("image '" + record.image_id + "': tag '" + ref.tag_id +
                         "' has no embedding and no vocabulary was given");
      }
      const auto it = std::find_if(vocab->entries.begin(), vocab->entries.end(),
                                   [&](const VocabularyEntry& e) { return e.tag_id == ref.tag_id; });
      if (it == vocab->entries.end()) {
        throw ParseError("image '" + record.image_id + "': tag '" + ref.tag_id + "' not in vocabulary");
      }
      ranked.push_back({ref.tag_id, it->embedding, ref.score});
    }
    if (ranked.empty() || ranked.size() % 2 != 0) {
      throw ParseError("image '" + record.image_id + "': tag list must hold an even, non-zero count");
    }
  } else {
    if (!vocab) throw ParseError("image '" + record.image_id + "' has no tags and no vocabulary was given");
    ranked = rank_tags(record.image_embedding, vocab->entries, M).candidates;
  }

  const std::size_t K = ranked.size() / 2;
  ResolvedInstance out;
  auto& inst = out.instance;
  inst.regions = Matrix::from_rows(record.regions, d);
  inst.positives = Matrix(0, d);
  inst.negatives = Matrix(0, d);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i < K) {
      inst.positives.append_row(ranked[i].embedding);
      inst.global_scores.push_back(ranked[i].global_score);
      out.positive_ids.push_back(ranked[i].tag_id);
    } else {
      inst.negatives.append_row(ranked[i].embedding);
      inst.negative_scores.push_back(ranked[i].global_score);
      out.negative_ids.push_back(ranked[i].tag_id);
    }
  }
  inst.caption_nouns = Matrix(0, d);
  for (const auto& tok : record.caption_tokens) {
    if (tok.is_noun) inst.caption_nouns.append_row(tok.embedding);
  }
  inst.validate();
  return out;
}

void write_state(std::ostream& out, const StateFile& file) {
  json history = json::array();
  for (const auto& r : file.state.history) history.push_back(history_json(r));
  json j{{"format", kStateFormat},
         {"version", kFormatVersion},
         {"synthetic", synthetic_json(file.synthetic)},
         {"step", file.state.step},
         {"tag_table", matrix_json(file.state.tag_table)},
         {"region_table", matrix_json(file.state.region_table)},
         {"caption_table", matrix_json(file.state.caption_table)},
         {"history", history}};
  out << j.dump() << '\n';
}

StateFile read_state(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed state file: ") + e.what());
  }
  try {
    if (j.value("format", std::string{}) != kStateFormat) throw ParseError("not a rca-state file");
    if (j.at("version").get<int>() != kFormatVersion) throw ParseError("unsupported state version");
    StateFile file;
    file.synthetic = synthetic_from_json(j.at("synthetic"));
    const std::size_t d = file.synthetic.d;
    file.state.step = j.at("step").get<std::size_t>();
    file.state.tag_table = matrix_from_json(j.at("tag_table"), d);
    file.state.region_table = matrix_from_json(j.at("region_table"), d);
    file.state.caption_table = matrix_from_json(j.at("caption_table"), d);
    for (const auto& r : j.at("history")) {
      file.state.history.push_back({r.at("step").get<std::size_t>(), r.at("loss").get<double>(),
                                    r.at("retrieval_accuracy").get<double>(),
                                    r.at("mean_pos_phi").get<double>(), r.at("mean_neg_phi").get<double>()});
    }
    const std::size_t n = file.synthetic.n_concepts;
    if (file.state.tag_table.rows() != n || file.state.region_table.rows() != n ||
        file.state.caption_table.rows() != n) {
      throw DimensionError("state tables must have n_concepts rows");
    }
    return file;
  } catch (const json::exception& e) {
    throw ParseError(std::string("unexpected state shape: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

std::string history_record_json(const HistoryRecord& record) { return history_json(record).dump(); }

}  // namespace rca
