#pragma once

// Basic-meaning resource construction from a decoded dictionary dump:
// record parsing, sense segmentation, basic-meaning selection, bounded
// cross-reference resolution, resource statistics and corpus coverage.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mipvu/error.hpp"
#include "mipvu/format.hpp"
#include "mipvu/utf8.hpp"

namespace mipvu::dict {

inline constexpr int kMaxReferenceDepth = 5;

struct RawEntry {
  std::string headword;
  std::string gloss;
};

enum class RefIndicator { see, same_as, cf };

struct CrossRef {
  RefIndicator indicator;
  std::string target;

  friend bool operator==(const CrossRef&, const CrossRef&) = default;
};

struct Sense {
  int ordinal = 1;
  std::string text;
  std::optional<CrossRef> cross_ref;

  friend bool operator==(const Sense&, const Sense&) = default;
};

struct SenseSplit {
  std::vector<Sense> senses;
  bool marker_anomalous = false;
};

struct CrossRefScan {
  std::optional<CrossRef> ref;
  bool anomalous = false;  // indicator at head but no extractable target
};

/// A dump record after sense segmentation and cross-reference detection.
struct Entry {
  std::string headword;
  std::vector<Sense> senses;
  bool marker_anomalous = false;
  bool ref_anomalous = false;

  /// The entry redirects iff its basic-meaning sense carries a reference.
  const CrossRef* reference() const {
    if (senses.empty() || !senses.front().cross_ref) return nullptr;
    return &*senses.front().cross_ref;
  }
};

using EntryTable = std::map<std::string, Entry, std::less<>>;

struct DumpParse {
  EntryTable table;
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> warnings;
};

enum class MeaningSource { first_sense, headword_fallback, resolved_reference };

enum class ResolutionStatus {
  none_needed,
  resolved,
  failed_missing_target,
  failed_cycle,
  failed_depth,
};

struct Resolution {
  ResolutionStatus status = ResolutionStatus::none_needed;
  int depth = 0;  // edges followed; meaningful only when resolved

  friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct ResolvedEntry {
  std::string headword;
  std::vector<Sense> senses;  // empty when loaded from a resolved table file
  std::size_t sense_count = 0;
  std::string basic_meaning;
  MeaningSource meaning_source = MeaningSource::first_sense;
  Resolution resolution;
  std::optional<std::string> reference_target;
  bool marker_anomalous = false;
  bool ref_anomalous = false;

  friend bool operator==(const ResolvedEntry&, const ResolvedEntry&) = default;
};

using ResolvedTable = std::map<std::string, ResolvedEntry, std::less<>>;

struct ResolutionReport {
  std::size_t referencing = 0;
  std::size_t resolved = 0;
  std::size_t missing_target = 0;
  std::size_t cycle = 0;
  std::size_t depth_exceeded = 0;

  friend bool operator==(const ResolutionReport&,
                         const ResolutionReport&) = default;
};

struct DictStats {
  std::size_t total_entries = 0;
  double parseable_fraction = 0.0;
  std::map<std::size_t, std::size_t> polysemy_histogram;  // senses -> entries
  double multi_sense_fraction = 0.0;
  double mean_senses = 0.0;
  std::size_t max_senses = 0;
  std::size_t referencing_entries = 0;
  std::size_t resolved_count = 0;
  std::size_t missing_target_count = 0;
  std::size_t cycle_count = 0;
  std::size_t depth_exceeded_count = 0;
  std::size_t marker_anomalous_count = 0;
  std::size_t ref_anomalous_count = 0;
};

struct CoverageReport {
  std::size_t vocab_size = 0;
  std::size_t covered = 0;
  double coverage_fraction = 0.0;
  std::vector<std::string> uncovered_tokens;
};

// ---------------------------------------------------------------------------
// Names

inline const char* to_string(RefIndicator k) {
  switch (k) {
    case RefIndicator::see: return "see";
    case RefIndicator::same_as: return "same-as";
    case RefIndicator::cf: return "cf";
  }
  return "?";
}

inline const char* to_string(MeaningSource s) {
  switch (s) {
    case MeaningSource::first_sense: return "first-sense";
    case MeaningSource::headword_fallback: return "headword-fallback";
    case MeaningSource::resolved_reference: return "resolved-reference";
  }
  return "?";
}

inline const char* to_string(ResolutionStatus s) {
  switch (s) {
    case ResolutionStatus::none_needed: return "none-needed";
    case ResolutionStatus::resolved: return "resolved";
    case ResolutionStatus::failed_missing_target: return "failed-missing-target";
    case ResolutionStatus::failed_cycle: return "failed-cycle";
    case ResolutionStatus::failed_depth: return "failed-depth";
  }
  return "?";
}

inline std::optional<MeaningSource> meaning_source_from(std::string_view s) {
  if (s == "first-sense") return MeaningSource::first_sense;
  if (s == "headword-fallback") return MeaningSource::headword_fallback;
  if (s == "resolved-reference") return MeaningSource::resolved_reference;
  return std::nullopt;
}

inline std::optional<ResolutionStatus> resolution_status_from(
    std::string_view s) {
  for (auto st : {ResolutionStatus::none_needed, ResolutionStatus::resolved,
                  ResolutionStatus::failed_missing_target,
                  ResolutionStatus::failed_cycle,
                  ResolutionStatus::failed_depth}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Sense segmentation

/// Value of a circled-number sense marker (①..⑳, ㉑..㉟, ㊱..㊿), or 0.
inline int sense_marker_value(char32_t cp) {
  if (cp >= 0x2460 && cp <= 0x2473) return static_cast<int>(cp - 0x2460) + 1;
  if (cp >= 0x3251 && cp <= 0x325F) return static_cast<int>(cp - 0x3251) + 21;
  if (cp >= 0x32B1 && cp <= 0x32BF) return static_cast<int>(cp - 0x32B1) + 36;
  return 0;
}

/// Splits a gloss at every circled-number marker. Text ahead of the first
/// marker (pronunciation, part-of-speech preamble) is not a sense. Markers
/// that are out of order, repeated, skip a value or introduce empty text are
/// flagged; out-of-order senses are reordered by marker value.
inline SenseSplit split_senses(std::string_view gloss) {
  struct Piece {
    int marker;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Piece> pieces;

  std::size_t pos = 0;
  while (pos < gloss.size()) {
    auto d = utf8::decode(gloss, pos);
    const std::size_t step = d ? d->length : 1;
    if (d) {
      if (int v = sense_marker_value(d->cp); v > 0) {
        if (!pieces.empty()) pieces.back().end = pos;
        pieces.push_back({v, pos + step, gloss.size()});
      }
    }
    pos += step;
  }

  SenseSplit out;
  if (pieces.empty()) {
    auto text = utf8::trim(gloss);
    if (!text.empty()) out.senses.push_back({1, std::string(text), {}});
    return out;
  }

  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].marker != static_cast<int>(i) + 1) {
      out.marker_anomalous = true;
    }
  }
  std::stable_sort(pieces.begin(), pieces.end(),
                   [](const Piece& a, const Piece& b) {
                     return a.marker < b.marker;
                   });
  for (const auto& p : pieces) {
    auto text = utf8::trim(gloss.substr(p.begin, p.end - p.begin));
    if (text.empty()) {
      out.marker_anomalous = true;
      continue;
    }
    out.senses.push_back(
        {static_cast<int>(out.senses.size()) + 1, std::string(text), {}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-reference detection

namespace detail {

inline bool is_separator(char32_t cp) {
  return utf8::is_space(cp) || cp == U':' || cp == U'：';
}

inline bool is_punctuation(char32_t cp) {
  switch (cp) {
    case U'。': case U'，': case U'；': case U'、': case U'.': case U',':
    case U';': case U':': case U'：': case U'!': case U'！': case U'?':
    case U'？':
      return true;
    default:
      return utf8::is_space(cp);
  }
}

inline char32_t closing_for(char32_t open) {
  switch (open) {
    case U'〖': return U'〗';
    case U'【': return U'】';
    case U'「': return U'」';
    case U'『': return U'』';
    case U'‘': return U'’';
    case U'“': return U'”';
    case U'\'': return U'\'';
    case U'"': return U'"';
    default: return 0;
  }
}

}  // namespace detail

/// Recognises a reference sense: an indicator (见 / 同 / 参看) at the head of
/// the sense followed by a bracketed or quoted target. With several targets
/// only the first is taken. An indicator followed by nothing usable (an
/// unterminated or empty span, or bare punctuation) is flagged; an indicator
/// followed by ordinary prose (e.g. 同样...) is not a reference.
inline CrossRefScan detect_cross_ref(std::string_view sense_text) {
  static constexpr std::pair<std::string_view, RefIndicator> kIndicators[] = {
      {"参看", RefIndicator::cf},
      {"见", RefIndicator::see},
      {"同", RefIndicator::same_as},
  };

  const auto text = utf8::trim(sense_text);
  CrossRefScan scan;
  for (const auto& [prefix, kind] : kIndicators) {
    if (!text.starts_with(prefix)) continue;

    std::size_t pos = prefix.size();
    std::optional<utf8::Decoded> d;
    while ((d = utf8::decode(text, pos)) && detail::is_separator(d->cp)) {
      pos += d->length;
    }
    if (!d) {
      // nothing after the indicator (or invalid bytes)
      scan.anomalous = true;
      return scan;
    }
    const char32_t close = detail::closing_for(d->cp);
    if (close == 0) {
      bool only_punct = true;
      for (std::size_t p = pos; p < text.size();) {
        auto c = utf8::decode(text, p);
        if (!c) {
          only_punct = false;
          break;
        }
        if (!detail::is_punctuation(c->cp)) {
          only_punct = false;
          break;
        }
        p += c->length;
      }
      scan.anomalous = only_punct;
      return scan;
    }

    const std::size_t target_begin = pos + d->length;
    for (std::size_t p = target_begin; p < text.size();) {
      auto c = utf8::decode(text, p);
      if (!c) break;
      if (c->cp == close) {
        auto target = utf8::trim(text.substr(target_begin, p - target_begin));
        if (target.empty()) {
          scan.anomalous = true;
        } else {
          scan.ref = CrossRef{kind, std::string(target)};
        }
        return scan;
      }
      p += c->length;
    }
    scan.anomalous = true;  // unterminated span
    return scan;
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Dump parsing

inline Entry build_entry(const RawEntry& raw) {
  Entry e;
  e.headword = raw.headword;
  auto split = split_senses(raw.gloss);
  e.marker_anomalous = split.marker_anomalous;
  e.senses = std::move(split.senses);
  for (auto& s : e.senses) {
    auto scan = detect_cross_ref(s.text);
    s.cross_ref = std::move(scan.ref);
    e.ref_anomalous = e.ref_anomalous || scan.anomalous;
  }
  return e;
}

/// Builds the headword table from already-decoded records. The first
/// occurrence of a headword wins; later ones are counted as duplicates.
inline DumpParse parse_records(std::span<const RawEntry> records) {
  DumpParse out;
  for (const auto& raw : records) {
    if (out.table.contains(raw.headword)) {
      ++out.duplicates;
      out.warnings.push_back("duplicate headword '" + raw.headword +
                             "' ignored");
      continue;
    }
    out.table.emplace(raw.headword, build_entry(raw));
    ++out.accepted;
  }
  if (records.empty()) out.warnings.push_back("empty dictionary dump");
  return out;
}

/// Reads the line-delimited dump (`{"headword": ..., "gloss": ...}` per
/// line). Malformed records are skipped and counted, never fatal.
inline DumpParse parse_dump(std::istream& in) {
  std::vector<RawEntry> records;
  std::vector<std::string> warnings;
  std::size_t malformed = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    const bool ok = j.is_object() && j.contains("headword") &&
                    j["headword"].is_string() && j.contains("gloss") &&
                    j["gloss"].is_string();
    std::string headword;
    if (ok) headword = std::string(utf8::trim(j["headword"].get<std::string>()));
    if (!ok || headword.empty()) {
      ++malformed;
      warnings.push_back("line " + std::to_string(line_no) +
                         ": malformed record skipped");
      continue;
    }
    records.push_back({std::move(headword), j["gloss"].get<std::string>()});
  }
  auto out = parse_records(records);
  out.malformed = malformed;
  warnings.insert(warnings.end(), out.warnings.begin(), out.warnings.end());
  out.warnings = std::move(warnings);
  return out;
}

// ---------------------------------------------------------------------------
// Basic meaning and reference resolution

struct BasicMeaning {
  std::string text;
  MeaningSource source;
};

/// First sense when there is one, otherwise the headword itself.
inline BasicMeaning select_basic_meaning(const Entry& entry) {
  if (!entry.senses.empty()) {
    return {entry.senses.front().text, MeaningSource::first_sense};
  }
  return {entry.headword, MeaningSource::headword_fallback};
}

namespace detail {

struct Followed {
  Resolution resolution;
  const Entry* terminal = nullptr;
};

/// Follows the reference chain from `start` for at most kMaxReferenceDepth
/// edges. Pure given the table.
inline Followed follow_chain(const EntryTable& table, const Entry& start) {
  std::vector<std::string_view> path{start.headword};
  const Entry* current = &start;
  int depth = 0;
  while (const CrossRef* ref = current->reference()) {
    if (depth == kMaxReferenceDepth) {
      return {{ResolutionStatus::failed_depth, 0}, nullptr};
    }
    ++depth;
    auto it = table.find(ref->target);
    if (it == table.end()) {
      return {{ResolutionStatus::failed_missing_target, 0}, nullptr};
    }
    if (std::find(path.begin(), path.end(), ref->target) != path.end()) {
      return {{ResolutionStatus::failed_cycle, 0}, nullptr};
    }
    path.push_back(it->first);
    current = &it->second;
  }
  return {{ResolutionStatus::resolved, depth}, current};
}

}  // namespace detail

/// Resolves every entry against the frozen table. Referencing entries take
/// the basic meaning of the first non-referencing entry on their chain;
/// failed entries keep their own first sense.
inline std::pair<ResolvedTable, ResolutionReport> resolve_references(
    const EntryTable& table) {
  ResolvedTable out;
  ResolutionReport report;
  for (const auto& [headword, entry] : table) {
    ResolvedEntry r;
    r.headword = headword;
    r.senses = entry.senses;
    r.sense_count = entry.senses.size();
    r.marker_anomalous = entry.marker_anomalous;
    r.ref_anomalous = entry.ref_anomalous;

    auto own = select_basic_meaning(entry);
    r.basic_meaning = own.text;
    r.meaning_source = own.source;

    if (const CrossRef* ref = entry.reference()) {
      ++report.referencing;
      r.reference_target = ref->target;
      auto followed = detail::follow_chain(table, entry);
      r.resolution = followed.resolution;
      switch (followed.resolution.status) {
        case ResolutionStatus::resolved: {
          ++report.resolved;
          r.basic_meaning = select_basic_meaning(*followed.terminal).text;
          r.meaning_source = MeaningSource::resolved_reference;
          break;
        }
        case ResolutionStatus::failed_missing_target: ++report.missing_target; break;
        case ResolutionStatus::failed_cycle: ++report.cycle; break;
        case ResolutionStatus::failed_depth: ++report.depth_exceeded; break;
        case ResolutionStatus::none_needed: break;
      }
    }
    out.emplace(headword, std::move(r));
  }
  return {std::move(out), report};
}

/// Recovers the entry table from a resolved table that still carries its
/// senses, so resolution can be re-run.
inline EntryTable to_entry_table(const ResolvedTable& resolved) {
  EntryTable table;
  for (const auto& [headword, r] : resolved) {
    table.emplace(headword, Entry{r.headword, r.senses, r.marker_anomalous,
                                  r.ref_anomalous});
  }
  return table;
}

// ---------------------------------------------------------------------------
// Statistics and coverage

inline DictStats compute_dict_stats(const ResolvedTable& resolved) {
  DictStats s;
  s.total_entries = resolved.size();
  if (resolved.empty()) return s;

  std::size_t parseable = 0;
  std::size_t multi = 0;
  std::size_t total_senses = 0;
  for (const auto& [_, r] : resolved) {
    ++s.polysemy_histogram[r.sense_count];
    total_senses += r.sense_count;
    s.max_senses = std::max(s.max_senses, r.sense_count);
    if (r.sense_count >= 2) ++multi;
    if (r.meaning_source != MeaningSource::headword_fallback) ++parseable;
    if (r.marker_anomalous) ++s.marker_anomalous_count;
    if (r.ref_anomalous) ++s.ref_anomalous_count;
    switch (r.resolution.status) {
      case ResolutionStatus::none_needed: break;
      case ResolutionStatus::resolved: ++s.referencing_entries; ++s.resolved_count; break;
      case ResolutionStatus::failed_missing_target: ++s.referencing_entries; ++s.missing_target_count; break;
      case ResolutionStatus::failed_cycle: ++s.referencing_entries; ++s.cycle_count; break;
      case ResolutionStatus::failed_depth: ++s.referencing_entries; ++s.depth_exceeded_count; break;
    }
  }
  const auto n = static_cast<double>(s.total_entries);
  s.parseable_fraction = static_cast<double>(parseable) / n;
  s.multi_sense_fraction = static_cast<double>(multi) / n;
  s.mean_senses = static_cast<double>(total_senses) / n;
  return s;
}

/// Exact membership of each vocabulary token among the resolved headwords.
inline CoverageReport compute_coverage(const ResolvedTable& resolved,
                                       const std::set<std::string>& vocab) {
  if (vocab.empty()) {
    throw validation_error("coverage is undefined for an empty vocabulary");
  }
  CoverageReport c;
  c.vocab_size = vocab.size();
  for (const auto& token : vocab) {
    if (resolved.contains(token)) {
      ++c.covered;
    } else {
      c.uncovered_tokens.push_back(token);
    }
  }
  c.coverage_fraction =
      static_cast<double>(c.covered) / static_cast<double>(c.vocab_size);
  return c;
}

// ---------------------------------------------------------------------------
// Serialization

/// One resolved entry per line. Sense texts are not written; only the
/// selected basic meaning and the sense count.
inline std::string write_resolved_jsonl(const ResolvedTable& resolved) {
  std::string out;
  for (const auto& [headword, r] : resolved) {
    nlohmann::ordered_json j;
    j["headword"] = r.headword;
    j["basic_meaning"] = r.basic_meaning;
    j["meaning_source"] = to_string(r.meaning_source);
    j["resolution"] = to_string(r.resolution.status);
    if (r.resolution.status == ResolutionStatus::resolved) {
      j["depth"] = r.resolution.depth;
    }
    j["sense_count"] = r.sense_count;
    if (r.reference_target) j["reference_target"] = *r.reference_target;
    if (r.marker_anomalous) j["marker_anomalous"] = true;
    if (r.ref_anomalous) j["ref_anomalous"] = true;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline ResolvedTable read_resolved_jsonl(std::istream& in) {
  ResolvedTable table;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    return schema_error("resolved table line " + std::to_string(line_no) +
                        ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (utf8::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_object()) throw fail("not a JSON object");
    auto str = [&](const char* key) -> std::string {
      if (!j.contains(key) || !j[key].is_string()) {
        throw fail(std::string("field '") + key + "' missing or not a string");
      }
      return j[key].get<std::string>();
    };
    ResolvedEntry r;
    r.headword = str("headword");
    r.basic_meaning = str("basic_meaning");
    auto source = meaning_source_from(str("meaning_source"));
    if (!source) throw fail("field 'meaning_source' has an unknown value");
    r.meaning_source = *source;
    auto status = resolution_status_from(str("resolution"));
    if (!status) throw fail("field 'resolution' has an unknown value");
    r.resolution.status = *status;
    if (*status == ResolutionStatus::resolved) {
      if (!j.contains("depth") || !j["depth"].is_number_integer()) {
        throw fail("field 'depth' required for resolved entries");
      }
      r.resolution.depth = j["depth"].get<int>();
      if (r.resolution.depth < 0 || r.resolution.depth > kMaxReferenceDepth) {
        throw fail("field 'depth' out of range");
      }
    }
    if (!j.contains("sense_count") || !j["sense_count"].is_number_unsigned()) {
      throw fail("field 'sense_count' missing or not a non-negative integer");
    }
    r.sense_count = j["sense_count"].get<std::size_t>();
    if (j.contains("reference_target") && j["reference_target"].is_string()) {
      r.reference_target = j["reference_target"].get<std::string>();
    }
    r.marker_anomalous = j.value("marker_anomalous", false);
    r.ref_anomalous = j.value("ref_anomalous", false);
    if (r.headword.empty()) throw fail("empty headword");
    if (!table.emplace(r.headword, std::move(r)).second) {
      throw fail("duplicate headword");
    }
  }
  return table;
}

inline nlohmann::ordered_json to_json(const DictStats& s) {
  nlohmann::ordered_json j;
  j["total_entries"] = s.total_entries;
  j["parseable_fraction"] = s.parseable_fraction;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [senses, count] : s.polysemy_histogram) {
    hist[std::to_string(senses)] = count;
  }
  j["polysemy_histogram"] = hist;
  j["multi_sense_fraction"] = s.multi_sense_fraction;
  j["mean_senses"] = s.mean_senses;
  j["max_senses"] = s.max_senses;
  j["referencing_entries"] = s.referencing_entries;
  j["resolved_count"] = s.resolved_count;
  j["missing_target_count"] = s.missing_target_count;
  j["cycle_count"] = s.cycle_count;
  j["depth_exceeded_count"] = s.depth_exceeded_count;
  j["marker_anomalous_count"] = s.marker_anomalous_count;
  j["ref_anomalous_count"] = s.ref_anomalous_count;
  return j;
}

inline nlohmann::ordered_json to_json(const CoverageReport& c) {
  nlohmann::ordered_json j;
  j["vocab_size"] = c.vocab_size;
  j["covered"] = c.covered;
  j["coverage_fraction"] = c.coverage_fraction;
  j["uncovered_tokens"] = c.uncovered_tokens;
  return j;
}

/// Polysemy buckets as printed in the resource summary table. Entries with no
/// parseable sense keep their headword as a single meaning and are counted
/// with the single-sense bucket.
struct PolysemyBuckets {
  std::size_t single = 0;
  std::size_t two = 0;
  std::size_t three_plus = 0;
};

inline PolysemyBuckets polysemy_buckets(const DictStats& s) {
  PolysemyBuckets b;
  for (const auto& [senses, count] : s.polysemy_histogram) {
    if (senses <= 1) {
      b.single += count;
    } else if (senses == 2) {
      b.two += count;
    } else {
      b.three_plus += count;
    }
  }
  return b;
}

inline std::string render_stats_markdown(
    const DictStats& s, std::optional<double> coverage = std::nullopt,
    std::size_t embedding_dim = 1024) {
  const auto b = polysemy_buckets(s);
  std::ostringstream os;
  os << "| Item | Value |\n|---|---|\n";
  os << "| Total entries | " << s.total_entries << " |\n";
  os << "| Dictionary entries with basic meaning extracted | "
     << fmt::percent(s.parseable_fraction) << " |\n";
  if (coverage) {
    os << "| Corpus vocab covered by dictionary | " << fmt::percent(*coverage)
       << " |\n";
  }
  os << "| Embedding dim | " << embedding_dim << " |\n";
  os << "| Polysemy: single-sense | " << b.single << " |\n";
  os << "| Polysemy: 2-sense | " << b.two << " |\n";
  os << "| Polysemy: 3+-sense | " << b.three_plus << " |\n";
  os << "| Multi-sense entries (%) | " << fmt::percent(s.multi_sense_fraction)
     << " |\n";
  os << "| Mean senses per entry | " << fmt::fixed_half_up(s.mean_senses, 2)
     << " |\n";
  os << "| Max senses (single entry) | " << s.max_senses << " |\n";
  os << "| Referencing entries | " << s.referencing_entries << " |\n";
  os << "| References resolved | " << s.resolved_count << " |\n";
  os << "| References with missing target | " << s.missing_target_count
     << " |\n";
  os << "| Reference cycles | " << s.cycle_count << " |\n";
  os << "| References exceeding depth " << kMaxReferenceDepth << " | "
     << s.depth_exceeded_count << " |\n";
  return os.str();
}

}  // namespace mipvu::dict
