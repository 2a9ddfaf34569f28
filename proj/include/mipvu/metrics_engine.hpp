#pragma once

// Token-level scoring, per-register breakdowns, cross-seed aggregation and
// the results tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mipvu/corpus_model.hpp"
#include "mipvu/error.hpp"
#include "mipvu/format.hpp"

namespace mipvu::metrics {

/// The fixed seed list shared by every configuration.
inline const std::vector<std::int64_t> kDefaultSeeds = {42, 123, 2024, 7,
                                                        31415};

/// sent_id -> per-token binary labels.
using LabelSet = std::map<std::string, std::vector<bool>, std::less<>>;

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }

  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

struct ScoreSet {
  double pos_precision = 0.0;
  double pos_recall = 0.0;
  double pos_f1 = 0.0;
  double neg_f1 = 0.0;
  double macro_f1 = 0.0;

  friend bool operator==(const ScoreSet&, const ScoreSet&) = default;
};

// ---------------------------------------------------------------------------
// Counting and scoring

inline void tally(const std::vector<bool>& gold, const std::vector<bool>& pred,
                  ConfusionCounts& c) {
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i]) {
      pred[i] ? ++c.tp : ++c.fn;
    } else {
      pred[i] ? ++c.fp : ++c.tn;
    }
  }
}

/// Token-level counts over matching sentence sets.
inline ConfusionCounts confusion(const LabelSet& gold, const LabelSet& pred) {
  for (const auto& [id, _] : pred) {
    if (!gold.contains(id)) {
      throw validation_error("sentence '" + id +
                             "' has a prediction but no gold labels");
    }
  }
  ConfusionCounts c;
  for (const auto& [id, g] : gold) {
    auto it = pred.find(id);
    if (it == pred.end()) {
      throw validation_error("sentence '" + id + "' has no prediction");
    }
    if (it->second.size() != g.size()) {
      throw validation_error("sentence '" + id + "': " +
                             std::to_string(it->second.size()) +
                             " predicted labels for " +
                             std::to_string(g.size()) + " gold tokens");
    }
    tally(g, it->second, c);
  }
  return c;
}

namespace detail {

inline double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

/// Harmonic mean of precision and recall, written as 2tp / (2tp + fp + fn)
/// so it is one correctly rounded division; 0 when tp = 0.
inline double f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  return tp == 0 ? 0.0 : ratio(2 * tp, 2 * tp + fp + fn);
}

}  // namespace detail

/// Precision, recall and F1 for the positive class; F1 for the negative class
/// (tn as its true positives); macro F1 = mean of the two. Every 0/0 is 0.
inline ScoreSet score(const ConfusionCounts& c) {
  ScoreSet s;
  s.pos_precision = detail::ratio(c.tp, c.tp + c.fp);
  s.pos_recall = detail::ratio(c.tp, c.tp + c.fn);
  s.pos_f1 = detail::f1(c.tp, c.fp, c.fn);
  s.neg_f1 = detail::f1(c.tn, c.fn, c.fp);
  s.macro_f1 = (s.pos_f1 + s.neg_f1) / 2.0;
  return s;
}

// ---------------------------------------------------------------------------
// Per-register breakdown

struct RegisterScore {
  ConfusionCounts counts;
  ScoreSet scores;
};

using RegisterBreakdown = std::map<corpus::Register, RegisterScore>;

/// Scores each register on its own tokens. Registers without sentences in
/// `gold` are absent from the result.
inline RegisterBreakdown per_register(
    const LabelSet& gold, const LabelSet& pred,
    const std::map<std::string, corpus::Register, std::less<>>& registers) {
  std::map<corpus::Register, std::pair<LabelSet, LabelSet>> split;
  for (const auto& [id, g] : gold) {
    auto reg = registers.find(id);
    if (reg == registers.end()) {
      throw validation_error("sentence '" + id + "' has no register");
    }
    auto& [gold_part, pred_part] = split[reg->second];
    gold_part.emplace(id, g);
    if (auto p = pred.find(id); p != pred.end()) pred_part.emplace(id, p->second);
  }
  for (const auto& [id, _] : pred) {
    if (!gold.contains(id)) {
      throw validation_error("sentence '" + id +
                             "' has a prediction but no gold labels");
    }
  }
  RegisterBreakdown out;
  for (const auto& [reg, parts] : split) {
    auto counts = confusion(parts.first, parts.second);
    out.emplace(reg, RegisterScore{counts, score(counts)});
  }
  return out;
}

inline LabelSet gold_labels(const corpus::Corpus& corpus) {
  LabelSet gold;
  for (const auto& d : corpus.documents) {
    for (const auto& s : d.sentences) {
      std::vector<bool> labels;
      labels.reserve(s.tokens.size());
      for (const auto& t : s.tokens) labels.push_back(t.metaphor);
      gold.emplace(s.sent_id, std::move(labels));
    }
  }
  return gold;
}

inline std::map<std::string, corpus::Register, std::less<>> register_map(
    const corpus::Corpus& corpus) {
  std::map<std::string, corpus::Register, std::less<>> out;
  for (const auto& d : corpus.documents) {
    for (const auto& s : d.sentences) out.emplace(s.sent_id, d.reg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seed aggregation

struct SeedAggregate {
  std::vector<double> values;
  std::vector<std::int64_t> seeds;  // parallel to values; may be empty
  double mean = 0.0;
  double std_dev = 0.0;  // population (divisor N)

  friend bool operator==(const SeedAggregate&, const SeedAggregate&) = default;
};

/// Mean and population standard deviation (ddof = 0). Accumulates over a
/// sorted copy with Welford's update so the result does not depend on the
/// order of `values`.
inline SeedAggregate aggregate_seeds(std::span<const double> values,
                                     std::span<const std::int64_t> seeds = {}) {
  if (values.empty()) throw validation_error("no values to aggregate");
  if (!seeds.empty() && seeds.size() != values.size()) {
    throw validation_error("seed list and value list differ in length");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : sorted) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  SeedAggregate a;
  a.values.assign(values.begin(), values.end());
  a.seeds.assign(seeds.begin(), seeds.end());
  a.mean = mean;
  a.std_dev = std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));
  return a;
}

// ---------------------------------------------------------------------------
// Run and aggregate files

struct RunScore {
  std::string model;
  std::int64_t seed = 0;
  ConfusionCounts counts;
  ScoreSet scores;
  RegisterBreakdown registers;
  std::optional<double> parse_failure_rate;
};

inline nlohmann::ordered_json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

inline nlohmann::ordered_json to_json(const ScoreSet& s) {
  return {{"pos_precision", s.pos_precision},
          {"pos_recall", s.pos_recall},
          {"pos_f1", s.pos_f1},
          {"neg_f1", s.neg_f1},
          {"macro_f1", s.macro_f1}};
}

inline std::string write_run_json(const RunScore& run) {
  nlohmann::ordered_json j;
  j["format"] = "mipvu-run";
  j["version"] = 1;
  j["model"] = run.model;
  j["seed"] = run.seed;
  j["counts"] = to_json(run.counts);
  j["scores"] = to_json(run.scores);
  if (!run.registers.empty()) {
    nlohmann::ordered_json regs;
    for (const auto& [reg, rs] : run.registers) {
      regs[corpus::to_string(reg)] = {{"counts", to_json(rs.counts)},
                                      {"scores", to_json(rs.scores)}};
    }
    j["registers"] = std::move(regs);
  }
  if (run.parse_failure_rate) j["parse_failure_rate"] = *run.parse_failure_rate;
  return j.dump(2) + "\n";
}

namespace detail {

inline ConfusionCounts counts_from(const nlohmann::json& j) {
  ConfusionCounts c;
  for (auto [key, field] : {std::pair{"tp", &c.tp}, std::pair{"fp", &c.fp},
                            std::pair{"fn", &c.fn}, std::pair{"tn", &c.tn}}) {
    if (!j.contains(key) || !j[key].is_number_unsigned()) {
      throw schema_error(std::string("run file count '") + key + "' missing");
    }
    *field = j[key].get<std::uint64_t>();
  }
  return c;
}

inline ScoreSet scores_from(const nlohmann::json& j) {
  ScoreSet s;
  for (auto [key, field] :
       {std::pair{"pos_precision", &s.pos_precision},
        std::pair{"pos_recall", &s.pos_recall}, std::pair{"pos_f1", &s.pos_f1},
        std::pair{"neg_f1", &s.neg_f1}, std::pair{"macro_f1", &s.macro_f1}}) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw schema_error(std::string("run file score '") + key + "' missing");
    }
    *field = j[key].get<double>();
  }
  return s;
}

}  // namespace detail

inline RunScore read_run_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (!j.is_object() || j.value("format", "") != "mipvu-run") {
    throw schema_error("not a run score file");
  }
  RunScore run;
  if (!j.contains("model") || !j["model"].is_string()) {
    throw schema_error("run file field 'model' missing");
  }
  if (!j.contains("seed") || !j["seed"].is_number_integer()) {
    throw schema_error("run file field 'seed' missing");
  }
  run.model = j["model"].get<std::string>();
  run.seed = j["seed"].get<std::int64_t>();
  if (!j.contains("counts") || !j.contains("scores")) {
    throw schema_error("run file needs 'counts' and 'scores'");
  }
  run.counts = detail::counts_from(j["counts"]);
  run.scores = detail::scores_from(j["scores"]);
  if (j.contains("registers")) {
    for (const auto& [name, body] : j["registers"].items()) {
      auto reg = corpus::register_from(name);
      if (!reg) throw schema_error("run file has unknown register '" + name + "'");
      run.registers.emplace(*reg,
                            RegisterScore{detail::counts_from(body.at("counts")),
                                          detail::scores_from(body.at("scores"))});
    }
  }
  if (j.contains("parse_failure_rate") && j["parse_failure_rate"].is_number()) {
    run.parse_failure_rate = j["parse_failure_rate"].get<double>();
  }
  return run;
}

/// Metric columns in table order, with their machine-readable keys.
struct MetricColumn {
  std::string_view key;
  std::string_view header;
};

inline constexpr MetricColumn kMainColumns[] = {
    {"pos_f1", "Test pos-F1"},     {"macro_f1", "Macro F1"},
    {"pos_precision", "Precision"}, {"pos_recall", "Recall"},
    {"academic_f1", "Academic F1"}, {"fiction_f1", "Fiction F1"},
    {"news_f1", "News F1"},
};

struct ModelAggregate {
  std::string model;
  std::vector<std::int64_t> seeds;
  std::map<std::string, SeedAggregate, std::less<>> metrics;

  friend bool operator==(const ModelAggregate&,
                         const ModelAggregate&) = default;
};

/// Groups runs by model and aggregates every metric present in all of that
/// model's runs. Values are ordered by each seed's position in `seed_order`;
/// seeds outside it follow in ascending order.
inline std::vector<ModelAggregate> aggregate_runs(
    std::span<const RunScore> runs,
    std::span<const std::int64_t> seed_order = kDefaultSeeds) {
  std::vector<std::string> model_order;
  std::map<std::string, std::vector<const RunScore*>> by_model;
  for (const auto& r : runs) {
    auto& list = by_model[r.model];
    if (list.empty()) model_order.push_back(r.model);
    for (const auto* other : list) {
      if (other->seed == r.seed) {
        throw validation_error("model '" + r.model + "' has two runs for seed " +
                               std::to_string(r.seed));
      }
    }
    list.push_back(&r);
  }

  auto rank = [&](std::int64_t seed) {
    auto it = std::find(seed_order.begin(), seed_order.end(), seed);
    return std::pair{it == seed_order.end() ? 1 : 0,
                     it == seed_order.end()
                         ? seed
                         : static_cast<std::int64_t>(it - seed_order.begin())};
  };

  std::vector<ModelAggregate> out;
  for (const auto& model : model_order) {
    auto list = by_model[model];
    std::sort(list.begin(), list.end(), [&](const RunScore* a, const RunScore* b) {
      return rank(a->seed) < rank(b->seed);
    });

    ModelAggregate agg;
    agg.model = model;
    for (const auto* r : list) agg.seeds.push_back(r->seed);

    auto add = [&](std::string key, auto extract) {
      std::vector<double> values;
      for (const auto* r : list) {
        auto v = extract(*r);
        if (!v) return;  // metric missing from some run
        values.push_back(*v);
      }
      agg.metrics.emplace(std::move(key), aggregate_seeds(values, agg.seeds));
    };
    add("pos_f1", [](const RunScore& r) { return std::optional(r.scores.pos_f1); });
    add("macro_f1", [](const RunScore& r) { return std::optional(r.scores.macro_f1); });
    add("pos_precision", [](const RunScore& r) { return std::optional(r.scores.pos_precision); });
    add("pos_recall", [](const RunScore& r) { return std::optional(r.scores.pos_recall); });
    add("neg_f1", [](const RunScore& r) { return std::optional(r.scores.neg_f1); });
    for (auto reg : corpus::kRegisters) {
      add(std::string(corpus::to_string(reg)) + "_f1",
          [reg](const RunScore& r) -> std::optional<double> {
            auto it = r.registers.find(reg);
            if (it == r.registers.end()) return std::nullopt;
            return it->second.scores.pos_f1;
          });
    }
    add("parse_failure_rate",
        [](const RunScore& r) { return r.parse_failure_rate; });
    out.push_back(std::move(agg));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const ModelAggregate& m) {
  nlohmann::ordered_json j;
  j["model"] = m.model;
  j["seeds"] = m.seeds;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [key, a] : m.metrics) {
    metrics[key] = {{"values", a.values}, {"mean", a.mean}, {"std", a.std_dev}};
  }
  j["metrics"] = std::move(metrics);
  return j;
}

inline ModelAggregate model_aggregate_from(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("model") || !j["model"].is_string()) {
    throw schema_error("aggregate entry needs a string 'model'");
  }
  ModelAggregate m;
  m.model = j["model"].get<std::string>();
  if (j.contains("seeds")) m.seeds = j["seeds"].get<std::vector<std::int64_t>>();
  if (j.contains("metrics")) {
    for (const auto& [key, body] : j["metrics"].items()) {
      SeedAggregate a;
      if (!body.is_object() || !body.contains("mean") || !body.contains("std")) {
        throw schema_error("aggregate metric '" + key + "' needs mean and std");
      }
      a.values = body.value("values", std::vector<double>{});
      a.seeds = m.seeds;
      if (a.seeds.size() != a.values.size()) a.seeds.clear();
      a.mean = body["mean"].get<double>();
      a.std_dev = body["std"].get<double>();
      m.metrics.emplace(key, std::move(a));
    }
  }
  return m;
}

inline std::string write_aggregate_json(const std::vector<ModelAggregate>& models) {
  nlohmann::ordered_json j;
  j["format"] = "mipvu-aggregate";
  j["version"] = 1;
  j["models"] = nlohmann::ordered_json::array();
  for (const auto& m : models) j["models"].push_back(to_json(m));
  return j.dump(2) + "\n";
}

/// Reads an aggregate file or a report companion. Returns nullopt for JSON
/// documents of any other kind.
inline std::optional<std::vector<ModelAggregate>> read_aggregate_json(
    std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (!j.is_object()) return std::nullopt;
  const auto format = j.value("format", "");
  if (format != "mipvu-aggregate" && format != "mipvu-report") {
    return std::nullopt;
  }
  if (!j.contains("models") || !j["models"].is_array()) {
    throw schema_error("aggregate file field 'models' missing");
  }
  std::vector<ModelAggregate> out;
  for (const auto& m : j["models"]) out.push_back(model_aggregate_from(m));
  return out;
}

// ---------------------------------------------------------------------------
// Report

enum class ReportFormat { markdown, csv };
enum class ReportLayout { main, taskform };

struct Report {
  std::string table;
  std::string companion;  // full-precision JSON
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string cell(const ModelAggregate& m, std::string_view key) {
  auto it = m.metrics.find(key);
  if (it == m.metrics.end()) return "-";
  return fmt::mean_pm_std(it->second.mean, it->second.std_dev);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Renders one row per model. The main layout shows every metric as
/// `mean ± std` at 4 decimals (half-up); the task-form layout shows
/// positive F1 (a bare value for single-seed models) and the parse failure
/// rate. Models without any metric are dropped with a warning.
inline Report emit_report(const std::vector<ModelAggregate>& models,
                          ReportFormat format = ReportFormat::markdown,
                          ReportLayout layout = ReportLayout::main) {
  Report report;
  std::vector<const ModelAggregate*> rows;
  for (const auto& m : models) {
    if (m.metrics.empty()) {
      report.warnings.push_back("model '" + m.model +
                                "' has no metrics; row omitted");
      continue;
    }
    rows.push_back(&m);
  }

  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> body;
  if (layout == ReportLayout::main) {
    headers.push_back("Model");
    for (const auto& col : kMainColumns) headers.emplace_back(col.header);
    for (const auto* m : rows) {
      std::vector<std::string> line{m->model};
      for (const auto& col : kMainColumns) line.push_back(detail::cell(*m, col.key));
      body.push_back(std::move(line));
    }
  } else {
    headers = {"Task Form", "Seeds", "Test pos-F1", "Parse failure rate"};
    for (const auto* m : rows) {
      std::vector<std::string> line{m->model, std::to_string(m->seeds.size())};
      auto f1 = m->metrics.find("pos_f1");
      if (f1 == m->metrics.end()) {
        line.emplace_back("-");
      } else if (f1->second.values.size() == 1) {
        line.push_back(fmt::fixed_half_up(f1->second.mean, 4));
      } else {
        line.push_back(fmt::mean_pm_std(f1->second.mean, f1->second.std_dev));
      }
      auto pfr = m->metrics.find("parse_failure_rate");
      line.push_back(pfr == m->metrics.end() ? "-"
                                             : fmt::percent(pfr->second.mean));
      body.push_back(std::move(line));
    }
  }

  std::ostringstream os;
  if (format == ReportFormat::markdown) {
    auto row = [&](const std::vector<std::string>& cells) {
      os << '|';
      for (const auto& c : cells) os << ' ' << c << " |";
      os << '\n';
    };
    row(headers);
    os << '|';
    for (std::size_t i = 0; i < headers.size(); ++i) os << "---|";
    os << '\n';
    for (const auto& line : body) row(line);
  } else {
    auto row = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << detail::csv_field(cells[i]);
      }
      os << '\n';
    };
    row(headers);
    for (const auto& line : body) row(line);
  }
  report.table = os.str();

  nlohmann::ordered_json companion;
  companion["format"] = "mipvu-report";
  companion["version"] = 1;
  companion["layout"] = layout == ReportLayout::main ? "main" : "taskform";
  companion["models"] = nlohmann::ordered_json::array();
  for (const auto* m : rows) companion["models"].push_back(to_json(*m));
  report.companion = companion.dump(2) + "\n";
  return report;
}

}  // namespace mipvu::metrics
