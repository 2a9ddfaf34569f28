#pragma once

// Per-token binary labels from the three model output families:
// probability heads, generated JSON arrays and BIO tag sequences.
//
// predictions file: one record per line,
//   {"sent_id": "...", "kind": "probs",      "payload": [0.91, 0.02, ...]}
//   {"sent_id": "...", "kind": "generative", "payload": "raw model text"}
//   {"sent_id": "...", "kind": "bio",        "payload": ["B", "I", "O", ...]}

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mipvu/corpus_model.hpp"
#include "mipvu/error.hpp"
#include "mipvu/utf8.hpp"

namespace mipvu::preds {

inline constexpr double kDefaultThreshold = 0.5;

struct TokenLabels {
  std::string sent_id;
  std::vector<bool> labels;

  std::size_t positives() const {
    return static_cast<std::size_t>(
        std::count(labels.begin(), labels.end(), true));
  }

  friend bool operator==(const TokenLabels&, const TokenLabels&) = default;
};

enum class ParseStatus { ok, parse_failure };

inline const char* to_string(ParseStatus s) {
  return s == ParseStatus::ok ? "ok" : "parse-failure";
}

struct ParseOutcome {
  ParseStatus status = ParseStatus::ok;
  std::string detail;

  bool failed() const { return status == ParseStatus::parse_failure; }

  friend bool operator==(const ParseOutcome&, const ParseOutcome&) = default;
};

// ---------------------------------------------------------------------------
// Probability heads

/// label_i = (prob_i >= tau).
inline TokenLabels threshold_probs(std::span<const double> probs,
                                   double tau = kDefaultThreshold,
                                   std::string sent_id = {}) {
  if (std::isnan(tau)) throw validation_error("threshold is NaN");
  TokenLabels out{std::move(sent_id), {}};
  out.labels.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw validation_error("probability at position " + std::to_string(i) +
                             " is outside [0, 1]");
    }
    out.labels.push_back(p >= tau);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generated structured output

struct GenerativeParse {
  TokenLabels labels;
  ParseOutcome outcome;
};

namespace detail {

/// Index one past the `]` that balances the `[` at `open`, skipping over
/// JSON string literals; npos when the brackets never balance.
inline std::size_t matching_bracket(std::string_view raw, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

/// The first substring of `raw`, scanning left to right, that is a complete
/// JSON array.
inline std::optional<nlohmann::json> first_json_array(std::string_view raw) {
  for (std::size_t open = raw.find('['); open != std::string_view::npos;
       open = raw.find('[', open + 1)) {
    const std::size_t end = matching_bracket(raw, open);
    if (end == std::string_view::npos) continue;
    auto j = nlohmann::json::parse(raw.substr(open, end - open), nullptr,
                                   /*allow_exceptions=*/false);
    if (j.is_array()) return j;
  }
  return std::nullopt;
}

}  // namespace detail

/// Labels the gold tokens named by the first well-formed JSON array in `raw`.
/// String items bind to the first not-yet-matched token with that surface,
/// left to right; integer items are 0-based positions. Unmatched surfaces,
/// out-of-range positions and items of any other type are ignored and
/// counted in the outcome detail. With no array at all the sentence is a
/// parse failure and every label is negative.
inline GenerativeParse parse_generative(std::string_view raw,
                                        std::span<const std::string> gold_tokens,
                                        std::string sent_id = {}) {
  GenerativeParse out;
  out.labels.sent_id = std::move(sent_id);
  out.labels.labels.assign(gold_tokens.size(), false);

  auto array = detail::first_json_array(raw);
  if (!array) {
    out.outcome = {ParseStatus::parse_failure, "no well-formed JSON array"};
    return out;
  }

  auto& labels = out.labels.labels;
  std::size_t surfaces = 0, unmatched = 0, indices = 0, out_of_range = 0,
              ignored = 0;
  for (const auto& item : *array) {
    if (item.is_string()) {
      ++surfaces;
      const auto& s = item.get_ref<const std::string&>();
      bool bound = false;
      for (std::size_t i = 0; i < gold_tokens.size(); ++i) {
        if (!labels[i] && gold_tokens[i] == s) {
          labels[i] = true;
          bound = true;
          break;
        }
      }
      if (!bound) ++unmatched;
    } else if (item.is_number_unsigned()) {
      ++indices;
      const auto idx = item.get<std::uint64_t>();
      if (idx < gold_tokens.size()) {
        labels[idx] = true;
      } else {
        ++out_of_range;
      }
    } else if (item.is_number_integer()) {  // negative
      ++indices;
      ++out_of_range;
    } else {
      ++ignored;
    }
  }
  out.outcome.status = ParseStatus::ok;
  out.outcome.detail = "surfaces=" + std::to_string(surfaces) +
                       " unmatched=" + std::to_string(unmatched) +
                       " indices=" + std::to_string(indices) +
                       " out_of_range=" + std::to_string(out_of_range) +
                       " ignored=" + std::to_string(ignored);
  return out;
}

// ---------------------------------------------------------------------------
// BIO tags

struct BioDecode {
  TokenLabels labels;
  std::size_t orphan_count = 0;  // I tags with no preceding B or I
};

/// B and I are both positive at token level. An I that does not continue a
/// span is promoted to B and counted.
inline BioDecode decode_bio(std::span<const std::string> tags,
                            std::string sent_id = {}) {
  BioDecode out;
  out.labels.sent_id = std::move(sent_id);
  out.labels.labels.reserve(tags.size());
  bool inside = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& tag = tags[i];
    if (tag == "B") {
      inside = true;
    } else if (tag == "I") {
      if (!inside) ++out.orphan_count;
      inside = true;
    } else if (tag == "O") {
      inside = false;
    } else {
      throw validation_error("unknown BIO tag '" + tag + "' at position " +
                             std::to_string(i));
    }
    out.labels.labels.push_back(tag != "O");
  }
  return out;
}

// ---------------------------------------------------------------------------

inline double failure_rate(std::span<const ParseOutcome> outcomes) {
  if (outcomes.empty()) {
    throw validation_error("failure rate of an empty outcome list");
  }
  std::size_t failures = 0;
  for (const auto& o : outcomes) failures += o.failed() ? 1 : 0;
  return static_cast<double>(failures) / static_cast<double>(outcomes.size());
}

// ---------------------------------------------------------------------------
// Predictions and labels files

enum class PredictionKind { probs, generative, bio };

inline const char* to_string(PredictionKind k) {
  switch (k) {
    case PredictionKind::probs: return "probs";
    case PredictionKind::generative: return "generative";
    case PredictionKind::bio: return "bio";
  }
  return "?";
}

inline std::optional<PredictionKind> prediction_kind_from(std::string_view s) {
  for (auto k : {PredictionKind::probs, PredictionKind::generative,
                 PredictionKind::bio}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

struct LabelRecord {
  TokenLabels labels;
  PredictionKind kind = PredictionKind::probs;
  ParseOutcome outcome;
  std::size_t orphan_count = 0;
};

struct AdaptedPredictions {
  std::vector<LabelRecord> records;  // predictions-file order
  std::size_t generative = 0;
  std::size_t parse_failures = 0;
  std::size_t bio_orphans = 0;

  std::optional<double> parse_failure_rate() const {
    if (generative == 0) return std::nullopt;
    return static_cast<double>(parse_failures) /
           static_cast<double>(generative);
  }
};

/// Applies the matching adapter to every prediction record, aligning each
/// against its gold sentence in `gold`.
inline AdaptedPredictions adapt_predictions(std::istream& in,
                                            const corpus::Corpus& gold,
                                            double tau = kDefaultThreshold) {
  std::map<std::string_view, const corpus::Sentence*> sentences;
  for (const auto& d : gold.documents) {
    for (const auto& s : d.sentences) sentences.emplace(s.sent_id, &s);
  }

  AdaptedPredictions out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return schema_error("predictions line " + std::to_string(line_no) + ": " +
                        what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_object()) throw fail("not a JSON object");
    if (!j.contains("sent_id") || !j["sent_id"].is_string()) {
      throw fail("field 'sent_id' missing or not a string");
    }
    if (!j.contains("kind") || !j["kind"].is_string()) {
      throw fail("field 'kind' missing or not a string");
    }
    if (!j.contains("payload")) throw fail("field 'payload' missing");
    const auto sent_id = j["sent_id"].get<std::string>();
    const auto kind = prediction_kind_from(j["kind"].get<std::string>());
    if (!kind) throw fail("unknown kind '" + j["kind"].get<std::string>() + "'");
    auto it = sentences.find(sent_id);
    if (it == sentences.end()) {
      throw validation_error("predictions line " + std::to_string(line_no) +
                             ": sent_id '" + sent_id + "' not in the corpus");
    }
    if (!seen.insert(sent_id).second) {
      throw validation_error("predictions line " + std::to_string(line_no) +
                             ": duplicate sent_id '" + sent_id + "'");
    }
    const auto& gold_sentence = *it->second;
    const std::size_t n = gold_sentence.tokens.size();
    auto length_check = [&](std::size_t got) {
      if (got != n) {
        throw validation_error("sentence '" + sent_id + "': payload has " +
                               std::to_string(got) + " items, gold has " +
                               std::to_string(n) + " tokens");
      }
    };

    LabelRecord rec;
    rec.kind = *kind;
    switch (*kind) {
      case PredictionKind::probs: {
        if (!j["payload"].is_array()) throw fail("probs payload must be an array");
        std::vector<double> probs;
        for (const auto& p : j["payload"]) {
          if (!p.is_number()) throw fail("probs payload must hold numbers");
          probs.push_back(p.get<double>());
        }
        length_check(probs.size());
        rec.labels = threshold_probs(probs, tau, sent_id);
        break;
      }
      case PredictionKind::generative: {
        if (!j["payload"].is_string()) {
          throw fail("generative payload must be a string");
        }
        std::vector<std::string> surfaces;
        surfaces.reserve(n);
        for (const auto& t : gold_sentence.tokens) surfaces.push_back(t.surface);
        auto parsed = parse_generative(j["payload"].get<std::string>(),
                                       surfaces, sent_id);
        rec.labels = std::move(parsed.labels);
        rec.outcome = std::move(parsed.outcome);
        ++out.generative;
        if (rec.outcome.failed()) ++out.parse_failures;
        break;
      }
      case PredictionKind::bio: {
        if (!j["payload"].is_array()) throw fail("bio payload must be an array");
        std::vector<std::string> tags;
        for (const auto& t : j["payload"]) {
          if (!t.is_string()) throw fail("bio payload must hold strings");
          tags.push_back(t.get<std::string>());
        }
        length_check(tags.size());
        auto decoded = decode_bio(tags, sent_id);
        rec.labels = std::move(decoded.labels);
        rec.orphan_count = decoded.orphan_count;
        out.bio_orphans += decoded.orphan_count;
        break;
      }
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

inline std::string write_labels_jsonl(const AdaptedPredictions& adapted) {
  std::string out;
  for (const auto& r : adapted.records) {
    nlohmann::ordered_json j;
    j["sent_id"] = r.labels.sent_id;
    j["kind"] = to_string(r.kind);
    auto labels = nlohmann::ordered_json::array();
    for (bool b : r.labels.labels) labels.push_back(b ? 1 : 0);
    j["labels"] = std::move(labels);
    j["status"] = to_string(r.outcome.status);
    if (!r.outcome.detail.empty()) j["detail"] = r.outcome.detail;
    if (r.orphan_count > 0) j["orphans"] = r.orphan_count;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<LabelRecord> read_labels_jsonl(std::istream& in) {
  std::vector<LabelRecord> records;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return schema_error("labels line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_object()) throw fail("not a JSON object");
    if (!j.contains("sent_id") || !j["sent_id"].is_string()) {
      throw fail("field 'sent_id' missing or not a string");
    }
    if (!j.contains("labels") || !j["labels"].is_array()) {
      throw fail("field 'labels' missing or not an array");
    }
    LabelRecord r;
    r.labels.sent_id = j["sent_id"].get<std::string>();
    for (const auto& v : j["labels"]) {
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
        throw fail("labels must be 0 or 1");
      }
      r.labels.labels.push_back(v.get<int>() == 1);
    }
    if (j.contains("kind") && j["kind"].is_string()) {
      auto kind = prediction_kind_from(j["kind"].get<std::string>());
      if (!kind) throw fail("unknown kind");
      r.kind = *kind;
    }
    const auto status = j.value("status", std::string("ok"));
    if (status == "ok") {
      r.outcome.status = ParseStatus::ok;
    } else if (status == "parse-failure") {
      r.outcome.status = ParseStatus::parse_failure;
    } else {
      throw fail("unknown status '" + status + "'");
    }
    r.outcome.detail = j.value("detail", std::string());
    r.orphan_count = j.value("orphans", std::size_t{0});
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace mipvu::preds
