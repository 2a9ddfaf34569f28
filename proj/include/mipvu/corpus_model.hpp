#pragma once

// Token-level metaphor corpus: loading, register/partition statistics,
// the seeded file-level split and metaphor-flag diagnostics.
//
// corpus.jsonl: one sentence per line,
//   {"doc_id": "...", "register": "academic|news|fiction", "sent_id": "...",
//    "tokens": [{"surface": "...", "label": 0|1}, ...]}
// Sentences of one document are contiguous.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mipvu/error.hpp"
#include "mipvu/format.hpp"
#include "mipvu/rng.hpp"
#include "mipvu/utf8.hpp"

namespace mipvu::corpus {

enum class Register { academic, news, fiction };

inline constexpr std::array<Register, 3> kRegisters = {
    Register::academic, Register::news, Register::fiction};

inline const char* to_string(Register r) {
  switch (r) {
    case Register::academic: return "academic";
    case Register::news: return "news";
    case Register::fiction: return "fiction";
  }
  return "?";
}

inline std::optional<Register> register_from(std::string_view s) {
  for (auto r : kRegisters) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

struct AnnotatedToken {
  std::string surface;
  bool metaphor = false;
};

struct Sentence {
  std::string sent_id;
  std::vector<AnnotatedToken> tokens;
};

struct Document {
  std::string doc_id;
  Register reg = Register::academic;
  std::vector<Sentence> sentences;
};

struct Corpus {
  std::vector<Document> documents;

  std::size_t sentence_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.sentences.size();
    return n;
  }
};

// ---------------------------------------------------------------------------
// Loading

inline Corpus load_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> closed_docs;
  std::unordered_set<std::string> sent_ids;
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& field, const std::string& what) {
    return schema_error("corpus line " + std::to_string(line_no) +
                        ", field '" + field + "': " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_object()) throw fail("<record>", "not a JSON object");

    auto str = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_string()) {
        throw fail(key, "missing or not a string");
      }
      auto s = j[key].get<std::string>();
      if (s.empty()) throw fail(key, "empty");
      return s;
    };
    const auto doc_id = str("doc_id");
    const auto reg_name = str("register");
    const auto sent_id = str("sent_id");
    const auto reg = register_from(reg_name);
    if (!reg) throw fail("register", "unknown register '" + reg_name + "'");

    if (!j.contains("tokens") || !j["tokens"].is_array()) {
      throw fail("tokens", "missing or not an array");
    }
    Sentence sentence;
    sentence.sent_id = sent_id;
    for (const auto& t : j["tokens"]) {
      if (!t.is_object() || !t.contains("surface") || !t["surface"].is_string() ||
          t["surface"].get<std::string>().empty()) {
        throw fail("tokens", "token without a non-empty string 'surface'");
      }
      if (!t.contains("label") || !t["label"].is_number_integer() ||
          (t["label"].get<int>() != 0 && t["label"].get<int>() != 1)) {
        throw fail("tokens", "token 'label' must be 0 or 1");
      }
      sentence.tokens.push_back(
          {t["surface"].get<std::string>(), t["label"].get<int>() == 1});
    }
    if (sentence.tokens.empty()) throw fail("tokens", "empty sentence");
    if (!sent_ids.insert(sent_id).second) {
      throw fail("sent_id", "duplicate sent_id '" + sent_id + "'");
    }

    if (corpus.documents.empty() || corpus.documents.back().doc_id != doc_id) {
      if (!corpus.documents.empty()) {
        closed_docs.insert(corpus.documents.back().doc_id);
      }
      if (closed_docs.contains(doc_id)) {
        throw fail("doc_id", "duplicate doc_id '" + doc_id + "'");
      }
      corpus.documents.push_back({doc_id, *reg, {}});
    } else if (corpus.documents.back().reg != *reg) {
      throw fail("register", "document '" + doc_id + "' changes register");
    }
    corpus.documents.back().sentences.push_back(std::move(sentence));
  }
  return corpus;
}

inline std::string write_corpus_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.documents) {
    for (const auto& s : doc.sentences) {
      nlohmann::ordered_json j;
      j["doc_id"] = doc.doc_id;
      j["register"] = to_string(doc.reg);
      j["sent_id"] = s.sent_id;
      auto tokens = nlohmann::ordered_json::array();
      for (const auto& t : s.tokens) {
        nlohmann::ordered_json tj;
        tj["surface"] = t.surface;
        tj["label"] = t.metaphor ? 1 : 0;
        tokens.push_back(std::move(tj));
      }
      j["tokens"] = std::move(tokens);
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

/// Unique token surfaces.
inline std::set<std::string> vocabulary(const Corpus& corpus) {
  std::set<std::string> vocab;
  for (const auto& d : corpus.documents) {
    for (const auto& s : d.sentences) {
      for (const auto& t : s.tokens) vocab.insert(t.surface);
    }
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Split manifest

enum class Partition { train, dev, test };

inline constexpr std::array<Partition, 3> kPartitions = {
    Partition::train, Partition::dev, Partition::test};

inline const char* to_string(Partition p) {
  switch (p) {
    case Partition::train: return "train";
    case Partition::dev: return "dev";
    case Partition::test: return "test";
  }
  return "?";
}

inline std::optional<Partition> partition_from(std::string_view s) {
  for (auto p : kPartitions) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

struct SplitRatios {
  double train = 0.7;
  double dev = 0.1;
  double test = 0.2;

  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

struct SplitManifest {
  std::int64_t seed = 42;
  SplitRatios ratios;
  std::array<std::vector<std::string>, 3> partitions;

  const std::vector<std::string>& operator[](Partition p) const {
    return partitions[static_cast<std::size_t>(p)];
  }
  std::vector<std::string>& operator[](Partition p) {
    return partitions[static_cast<std::size_t>(p)];
  }

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

inline void validate_ratios(const SplitRatios& r) {
  for (double v : {r.train, r.dev, r.test}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw validation_error("split ratios must lie in [0, 1]");
    }
  }
  if (std::abs(r.train + r.dev + r.test - 1.0) > 1e-9) {
    throw validation_error("split ratios must sum to 1");
  }
}

struct PartitionSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

/// train = floor(r_train * N), test = round(r_test * N), dev = remainder.
inline PartitionSizes partition_sizes(std::size_t n, const SplitRatios& r) {
  validate_ratios(r);
  const auto total = static_cast<double>(n);
  PartitionSizes s;
  // the epsilon absorbs products such as 0.7 * 10 landing just below 7
  s.train = static_cast<std::size_t>(std::floor(r.train * total + 1e-9));
  s.test = static_cast<std::size_t>(std::llround(r.test * total));
  if (s.train > n) s.train = n;
  if (s.train + s.test > n) s.test = n - s.train;
  s.dev = n - s.train - s.test;
  return s;
}

/// Sorts the document ids, shuffles them with the seeded LCG and assigns
/// contiguous runs to train, dev and test.
inline SplitManifest make_split(std::vector<std::string> doc_ids,
                                std::int64_t seed,
                                const SplitRatios& ratios = {}) {
  validate_ratios(ratios);
  if (doc_ids.size() < 3) {
    throw validation_error("a split needs at least 3 documents, got " +
                           std::to_string(doc_ids.size()));
  }
  std::sort(doc_ids.begin(), doc_ids.end());
  if (std::adjacent_find(doc_ids.begin(), doc_ids.end()) != doc_ids.end()) {
    throw validation_error("duplicate doc_id in split input");
  }
  seeded_shuffle(doc_ids, static_cast<std::uint64_t>(seed));

  const auto sizes = partition_sizes(doc_ids.size(), ratios);
  SplitManifest m;
  m.seed = seed;
  m.ratios = ratios;
  auto first = doc_ids.begin();
  m[Partition::train].assign(first, first + static_cast<std::ptrdiff_t>(sizes.train));
  first += static_cast<std::ptrdiff_t>(sizes.train);
  m[Partition::dev].assign(first, first + static_cast<std::ptrdiff_t>(sizes.dev));
  first += static_cast<std::ptrdiff_t>(sizes.dev);
  m[Partition::test].assign(first, doc_ids.end());
  return m;
}

inline SplitManifest make_split(const Corpus& corpus, std::int64_t seed,
                                const SplitRatios& ratios = {}) {
  std::vector<std::string> ids;
  ids.reserve(corpus.documents.size());
  for (const auto& d : corpus.documents) ids.push_back(d.doc_id);
  return make_split(std::move(ids), seed, ratios);
}

/// Checks that the manifest partitions are disjoint and cover exactly
/// `doc_ids`; the error lists every offending id.
inline void validate_manifest(const std::vector<std::string>& doc_ids,
                              const SplitManifest& manifest) {
  std::set<std::string> expected(doc_ids.begin(), doc_ids.end());
  std::set<std::string> seen;
  std::vector<std::string> repeated;
  std::vector<std::string> extra;
  for (auto p : kPartitions) {
    for (const auto& id : manifest[p]) {
      if (!seen.insert(id).second) repeated.push_back(id);
      if (!expected.contains(id)) extra.push_back(id);
    }
  }
  std::vector<std::string> missing;
  for (const auto& id : expected) {
    if (!seen.contains(id)) missing.push_back(id);
  }
  if (repeated.empty() && extra.empty() && missing.empty()) return;

  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s;
  };
  std::string msg = "split manifest does not match the corpus:";
  if (!missing.empty()) msg += " missing=[" + join(missing) + "]";
  if (!extra.empty()) msg += " extra=[" + join(extra) + "]";
  if (!repeated.empty()) msg += " repeated=[" + join(repeated) + "]";
  throw validation_error(msg);
}

struct SplitCorpora {
  std::array<Corpus, 3> parts;

  const Corpus& operator[](Partition p) const {
    return parts[static_cast<std::size_t>(p)];
  }
};

/// Partitions the corpus by the manifest, keeping corpus document order.
inline SplitCorpora apply_split(const Corpus& corpus,
                                const SplitManifest& manifest) {
  std::vector<std::string> ids;
  for (const auto& d : corpus.documents) ids.push_back(d.doc_id);
  validate_manifest(ids, manifest);

  std::unordered_map<std::string, Partition> where;
  for (auto p : kPartitions) {
    for (const auto& id : manifest[p]) where.emplace(id, p);
  }
  SplitCorpora out;
  for (const auto& d : corpus.documents) {
    out.parts[static_cast<std::size_t>(where.at(d.doc_id))].documents.push_back(d);
  }
  return out;
}

inline std::string write_manifest_json(const SplitManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "mipvu-split";
  j["version"] = 1;
  j["seed"] = m.seed;
  j["ratios"] = {{"train", m.ratios.train},
                 {"dev", m.ratios.dev},
                 {"test", m.ratios.test}};
  nlohmann::ordered_json parts;
  for (auto p : kPartitions) parts[to_string(p)] = m[p];
  j["partitions"] = std::move(parts);
  return j.dump(2) + "\n";
}

/// Accepts manifests written by make_split and externally supplied ones that
/// carry only `partitions` (seed and ratios then keep their defaults).
inline SplitManifest read_manifest_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (!j.is_object()) throw schema_error("split manifest is not a JSON object");
  SplitManifest m;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) {
      throw schema_error("split manifest field 'seed' must be an integer");
    }
    m.seed = j["seed"].get<std::int64_t>();
  }
  if (j.contains("ratios")) {
    const auto& r = j["ratios"];
    auto get = [&](const char* key) {
      if (!r.is_object() || !r.contains(key) || !r[key].is_number()) {
        throw schema_error(std::string("split manifest ratio '") + key +
                           "' missing or not a number");
      }
      return r[key].get<double>();
    };
    m.ratios = {get("train"), get("dev"), get("test")};
  }
  if (!j.contains("partitions") || !j["partitions"].is_object()) {
    throw schema_error("split manifest field 'partitions' missing");
  }
  for (auto p : kPartitions) {
    const auto& arr = j["partitions"].value(to_string(p), nlohmann::json::array());
    if (!arr.is_array()) {
      throw schema_error(std::string("split manifest partition '") +
                         to_string(p) + "' is not an array");
    }
    for (const auto& id : arr) {
      if (!id.is_string()) {
        throw schema_error("split manifest doc ids must be strings");
      }
      m[p].push_back(id.get<std::string>());
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Statistics

struct StatsRow {
  std::string label;
  std::size_t docs = 0;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t metaphor = 0;

  double metaphor_fraction() const {
    return tokens == 0 ? 0.0
                       : static_cast<double>(metaphor) /
                             static_cast<double>(tokens);
  }

  void add(const Document& d) {
    ++docs;
    for (const auto& s : d.sentences) {
      ++sentences;
      tokens += s.tokens.size();
      for (const auto& t : s.tokens) metaphor += t.metaphor ? 1 : 0;
    }
  }
};

struct CorpusStats {
  std::array<StatsRow, 3> registers;  // kRegisters order
  StatsRow total;
  std::optional<std::array<StatsRow, 3>> partitions;  // kPartitions order
};

inline CorpusStats corpus_stats(const Corpus& corpus,
                                const SplitManifest* manifest = nullptr) {
  CorpusStats st;
  for (std::size_t i = 0; i < kRegisters.size(); ++i) {
    std::string label = to_string(kRegisters[i]);
    label[0] = static_cast<char>(label[0] - 'a' + 'A');
    st.registers[i].label = label;
  }
  st.total.label = "Total";
  for (const auto& d : corpus.documents) {
    st.registers[static_cast<std::size_t>(d.reg)].add(d);
    st.total.add(d);
  }
  if (manifest) {
    std::unordered_map<std::string_view, const Document*> by_id;
    for (const auto& d : corpus.documents) by_id.emplace(d.doc_id, &d);
    std::array<StatsRow, 3> rows;
    for (std::size_t i = 0; i < kPartitions.size(); ++i) {
      std::string label = to_string(kPartitions[i]);
      label[0] = static_cast<char>(label[0] - 'a' + 'A');
      rows[i].label = label;
      for (const auto& id : (*manifest)[kPartitions[i]]) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
          throw validation_error("split manifest references unknown doc_id '" +
                                 id + "'");
        }
        rows[i].add(*it->second);
      }
    }
    st.partitions = rows;
  }
  return st;
}

inline nlohmann::ordered_json to_json(const StatsRow& r) {
  nlohmann::ordered_json j;
  j["subset"] = r.label;
  j["docs"] = r.docs;
  j["sentences"] = r.sentences;
  j["tokens"] = r.tokens;
  j["metaphor"] = r.metaphor;
  j["metaphor_fraction"] = r.metaphor_fraction();
  return j;
}

inline nlohmann::ordered_json to_json(const CorpusStats& st) {
  nlohmann::ordered_json j;
  j["registers"] = nlohmann::ordered_json::array();
  for (const auto& r : st.registers) j["registers"].push_back(to_json(r));
  j["total"] = to_json(st.total);
  if (st.partitions) {
    j["partitions"] = nlohmann::ordered_json::array();
    for (const auto& r : *st.partitions) j["partitions"].push_back(to_json(r));
  }
  return j;
}

inline std::string render_stats_markdown(const CorpusStats& st) {
  std::ostringstream os;
  os << "| Subset | #Docs | #Sentences | #Tokens | #Metaphor | %Metaphor |\n"
     << "|---|---:|---:|---:|---:|---:|\n";
  auto row = [&](const StatsRow& r) {
    os << "| " << r.label << " | " << r.docs << " | " << r.sentences << " | "
       << r.tokens << " | " << r.metaphor << " | "
       << fmt::fixed_half_up(r.metaphor_fraction() * 100.0, 2) << " |\n";
  };
  for (const auto& r : st.registers) row(r);
  row(st.total);
  if (st.partitions) {
    for (const auto& r : *st.partitions) row(r);
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Metaphor-flag diagnostics

enum class MarkerKind { pre_source, post_source };

inline const char* to_string(MarkerKind k) {
  return k == MarkerKind::pre_source ? "pre-source" : "post-source";
}

struct MFlagHit {
  std::size_t position;
  MarkerKind kind;

  friend bool operator==(const MFlagHit&, const MFlagHit&) = default;
};

/// Positions of tokens whose surface is exactly a direct-metaphor flag word.
/// Diagnostic only: gold labels are never read or changed.
inline std::vector<MFlagHit> mflag_scan(std::span<const AnnotatedToken> tokens) {
  static constexpr std::string_view kPre[] = {"像", "好像", "如",
                                              "如同", "犹如", "好比"};
  static constexpr std::string_view kPost[] = {"一样", "似的", "般"};
  std::vector<MFlagHit> hits;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string_view s = tokens[i].surface;
    if (std::find(std::begin(kPre), std::end(kPre), s) != std::end(kPre)) {
      hits.push_back({i, MarkerKind::pre_source});
    } else if (std::find(std::begin(kPost), std::end(kPost), s) !=
               std::end(kPost)) {
      hits.push_back({i, MarkerKind::post_source});
    }
  }
  return hits;
}

inline std::vector<MFlagHit> mflag_scan(const Sentence& sentence) {
  return mflag_scan(std::span<const AnnotatedToken>(sentence.tokens));
}

}  // namespace mipvu::corpus
