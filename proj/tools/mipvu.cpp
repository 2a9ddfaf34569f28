// mipvu: command-line entry point for the metaphor-identification toolkit.
//
// Exit status: 0 success, 2 usage, 3 i/o, 4 schema, 5 validation, 1 other.
// Failures print exactly one line to stderr:
//   mipvu: error {"kind":"<kind>","message":"<text>"}

#include <glob.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mipvu/mipvu.hpp"

namespace fs = std::filesystem;
using namespace mipvu;

namespace {

constexpr int kExitUsage = 2;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::io: return 3;
    case ErrorKind::schema: return 4;
    case ErrorKind::validation: return 5;
  }
  return 1;
}

void print_error(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["message"] = message;
  std::cerr << "mipvu: error " << j.dump(-1, ' ', false,
                                         nlohmann::json::error_handler_t::replace)
            << '\n';
}

void warn(const std::string& message) {
  std::cerr << "mipvu: warning: " << message << '\n';
}

Error usage_error(const std::string& what) {
  return Error(ErrorKind::usage, what);
}

/// Tracks every path read so no subcommand writes over one of its inputs.
class Files {
 public:
  std::string read(const fs::path& p) {
    inputs_.insert(key(p));
    return io::read_file(p);
  }

  std::istringstream stream(const fs::path& p) {
    return std::istringstream(read(p));
  }

  void write(const fs::path& p, const std::string& contents) {
    if (inputs_.contains(key(p))) {
      throw usage_error("refusing to overwrite input file '" + p.string() + "'");
    }
    io::write_atomic(p, contents);
  }

 private:
  static std::string key(const fs::path& p) {
    std::error_code ec;
    auto c = fs::weakly_canonical(p, ec);
    return ec ? p.lexically_normal().string() : c.string();
  }

  std::set<std::string> inputs_;
};

/// Writes to `out` when given, otherwise to stdout.
void emit(Files& files, const std::string& out, const std::string& contents) {
  if (out.empty()) {
    std::cout << contents;
  } else {
    files.write(out, contents);
  }
}

std::string require(const std::string& value, const std::optional<std::string>& fallback,
                    const char* flag) {
  if (!value.empty()) return value;
  if (fallback) return *fallback;
  throw usage_error(std::string("missing required option ") + flag);
}

corpus::Corpus load_corpus_file(Files& files, const std::string& path) {
  auto in = files.stream(path);
  return corpus::load_corpus(in);
}

dict::ResolvedTable load_resolved_file(Files& files, const std::string& path) {
  auto in = files.stream(path);
  return dict::read_resolved_jsonl(in);
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw io_error("glob failed for '" + pattern + "'");
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chinese MIPVU metaphor-identification toolkit", "mipvu"};
  app.set_version_flag(
      "--version",
      std::string("mipvu ") + kToolkitVersion + " (formats: dump " +
          std::to_string(kDumpFormatVersion) + ", corpus " +
          std::to_string(kCorpusFormatVersion) + ", split " +
          std::to_string(kSplitFormatVersion) + ", store " +
          std::to_string(kStoreFormatVersion) + ", labels " +
          std::to_string(kLabelsFormatVersion) + ", run " +
          std::to_string(kRunFormatVersion) + ", aggregate " +
          std::to_string(kAggregateFormatVersion) + ")");
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value run configuration file");

  // dict-build
  std::string dump_path, dict_out;
  auto* dict_build = app.add_subcommand("dict-build", "Build the basic-meaning resource");
  dict_build->add_option("--dump", dump_path, "Decoded dictionary dump (JSONL)");
  dict_build->add_option("--out", dict_out, "Output directory");

  // dict-stats
  std::string resolved_path, stats_format = "md", stats_out;
  auto* dict_stats = app.add_subcommand("dict-stats", "Resource statistics");
  dict_stats->add_option("--resolved", resolved_path, "Resolved table (JSONL)")->required();
  dict_stats->add_option("--format", stats_format, "md or json")
      ->check(CLI::IsMember({"md", "json"}));
  dict_stats->add_option("--out", stats_out, "Output file (default stdout)");

  // coverage
  std::string coverage_resolved, coverage_corpus, coverage_out;
  auto* coverage = app.add_subcommand("coverage", "Corpus vocabulary coverage");
  coverage->add_option("--resolved", coverage_resolved, "Resolved table")->required();
  coverage->add_option("--corpus", coverage_corpus, "Corpus (JSONL)");
  coverage->add_option("--out", coverage_out, "Output file (default stdout)");

  // store
  auto* store_cmd = app.add_subcommand("store", "Embedding store utilities");
  store_cmd->require_subcommand(1);
  std::string matrix_path, index_path, store_dir;
  std::size_t dim = store::kEmbeddingDim;
  auto add_store_paths = [&](CLI::App* sub) {
    sub->add_option("--dir", store_dir, "Directory holding embeddings.bin/.index");
    sub->add_option("--matrix", matrix_path, "embeddings.bin");
    sub->add_option("--index", index_path, "embeddings.index");
    sub->add_option("--dim", dim, "Expected vector dimension");
  };
  auto* store_validate = store_cmd->add_subcommand("validate", "Validate store files");
  add_store_paths(store_validate);
  std::string lookup_token;
  bool lookup_full = false;
  auto* store_lookup = store_cmd->add_subcommand("lookup", "Look up one token");
  store_lookup->add_option("token", lookup_token, "Token surface")->required();
  store_lookup->add_flag("--full", lookup_full, "Print the whole vector");
  add_store_paths(store_lookup);
  std::string synth_out;
  std::uint64_t synth_seed = 1;
  auto* store_synth = store_cmd->add_subcommand(
      "synth", "Write a deterministic synthetic matrix for an index (fixtures)");
  store_synth->add_option("--index", index_path, "embeddings.index")->required();
  store_synth->add_option("--out", synth_out, "Output directory")->required();
  store_synth->add_option("--seed", synth_seed, "Generator seed");
  store_synth->add_option("--dim", dim, "Vector dimension");

  // split
  std::string split_corpus, split_out, split_ratios;
  std::int64_t split_seed = 42;
  auto* split_cmd = app.add_subcommand("split", "Seeded file-level split");
  split_cmd->add_option("--corpus", split_corpus, "Corpus (JSONL)");
  split_cmd->add_option("--seed", split_seed, "Shuffle seed");
  split_cmd->add_option("--ratios", split_ratios, "train,dev,test fractions");
  split_cmd->add_option("--out", split_out, "Output manifest (default stdout)");

  // stats
  std::string stats_corpus, stats_split, cstats_format = "md", cstats_out;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics");
  stats_cmd->add_option("--corpus", stats_corpus, "Corpus (JSONL)");
  stats_cmd->add_option("--split", stats_split, "Split manifest");
  stats_cmd->add_option("--format", cstats_format, "md or json")
      ->check(CLI::IsMember({"md", "json"}));
  stats_cmd->add_option("--out", cstats_out, "Output file (default stdout)");

  // parse-preds
  std::string preds_path, preds_corpus, labels_out;
  std::optional<double> tau_flag;
  auto* parse_preds = app.add_subcommand("parse-preds", "Decode model outputs to token labels");
  parse_preds->add_option("--preds", preds_path, "Predictions (JSONL)");
  parse_preds->add_option("--corpus", preds_corpus, "Corpus (JSONL)");
  parse_preds->add_option("--out", labels_out, "Output labels file")->required();
  parse_preds->add_option("--tau", tau_flag, "Probability threshold");

  // eval
  std::string eval_gold, eval_labels, eval_split, eval_partition = "test",
                                                  eval_model, eval_out;
  std::int64_t eval_seed = 0;
  bool register_breakdown = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score one run");
  eval_cmd->add_option("--gold", eval_gold, "Gold corpus (JSONL)");
  eval_cmd->add_option("--labels", eval_labels, "Labels file from parse-preds")->required();
  eval_cmd->add_option("--split", eval_split, "Split manifest");
  eval_cmd->add_option("--partition", eval_partition, "Partition to score")
      ->check(CLI::IsMember({"train", "dev", "test"}));
  eval_cmd->add_flag("--register-breakdown", register_breakdown, "Per-register scores");
  eval_cmd->add_option("--model", eval_model, "Model name (default: labels file stem)");
  eval_cmd->add_option("--seed", eval_seed, "Seed of this run");
  eval_cmd->add_option("--out", eval_out, "Output run file (default stdout)");

  // aggregate
  std::string runs_glob, aggregate_out;
  auto* aggregate_cmd = app.add_subcommand("aggregate", "Cross-seed mean and population std");
  aggregate_cmd->add_option("--runs", runs_glob, "Glob of run files")->required();
  aggregate_cmd->add_option("--out", aggregate_out, "Output file (default stdout)");

  // report
  std::string aggregates_dir, report_format = "md", report_layout = "main", report_out;
  auto* report_cmd = app.add_subcommand("report", "Render the results table");
  report_cmd->add_option("--aggregates", aggregates_dir, "Directory of aggregate files")
      ->required();
  report_cmd->add_option("--format", report_format, "md or csv")
      ->check(CLI::IsMember({"md", "csv"}));
  report_cmd->add_option("--layout", report_layout, "main or taskform")
      ->check(CLI::IsMember({"main", "taskform"}));
  report_cmd->add_option("--out", report_out,
                         "Output directory for report.<fmt> and report.json "
                         "(default: table to stdout, no companion)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    print_error("usage", e.what());
    return kExitUsage;
  }

  Files files;
  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      auto in = files.stream(config_path);
      cfg = parse_config(in);
    }

    if (*dict_build) {
      const auto dump = require(dump_path, cfg.dump, "--dump");
      const fs::path out = require(dict_out, cfg.out_dir, "--out");
      auto in = files.stream(dump);
      auto parsed = dict::parse_dump(in);
      for (const auto& w : parsed.warnings) warn(w);
      auto [resolved, report] = dict::resolve_references(parsed.table);
      auto stats = dict::compute_dict_stats(resolved);
      auto built = store::build_index(resolved);

      files.write(out / "resolved.jsonl", dict::write_resolved_jsonl(resolved));
      files.write(out / "dict_stats.json", dict::to_json(stats).dump(2) + "\n");
      files.write(out / "worklist.jsonl", store::write_worklist_jsonl(built.worklist));
      files.write(out / "embeddings.index", store::encode_index(built.index));

      nlohmann::ordered_json summary;
      summary["accepted"] = parsed.accepted;
      summary["malformed"] = parsed.malformed;
      summary["duplicates"] = parsed.duplicates;
      summary["referencing"] = report.referencing;
      summary["resolved"] = report.resolved;
      summary["missing_target"] = report.missing_target;
      summary["cycle"] = report.cycle;
      summary["depth_exceeded"] = report.depth_exceeded;
      std::cout << summary.dump() << '\n';
    } else if (*dict_stats) {
      auto resolved = load_resolved_file(files, resolved_path);
      auto stats = dict::compute_dict_stats(resolved);
      emit(files, stats_out,
           stats_format == "json" ? dict::to_json(stats).dump(2) + "\n"
                                  : dict::render_stats_markdown(stats));
    } else if (*coverage) {
      auto resolved = load_resolved_file(files, coverage_resolved);
      auto corpus = load_corpus_file(files, require(coverage_corpus, cfg.corpus, "--corpus"));
      auto report = dict::compute_coverage(resolved, corpus::vocabulary(corpus));
      emit(files, coverage_out, dict::to_json(report).dump(2) + "\n");
    } else if (*store_cmd) {
      auto resolve_paths = [&] {
        if (!store_dir.empty()) {
          if (matrix_path.empty()) matrix_path = (fs::path(store_dir) / "embeddings.bin").string();
          if (index_path.empty()) index_path = (fs::path(store_dir) / "embeddings.index").string();
        }
        if (matrix_path.empty() || index_path.empty()) {
          throw usage_error("store needs --dir or both --matrix and --index");
        }
      };
      if (*store_validate) {
        resolve_paths();
        auto s = store::load_store(matrix_path, index_path, dim);
        nlohmann::ordered_json j;
        j["status"] = "ok";
        j["rows"] = s.rows();
        j["dim"] = s.dim();
        std::cout << j.dump() << '\n';
      } else if (*store_lookup) {
        resolve_paths();
        auto s = store::load_store(matrix_path, index_path, dim);
        auto hit = s.lookup(lookup_token);
        nlohmann::ordered_json j;
        j["token"] = lookup_token;
        j["oov"] = hit.oov;
        if (auto row = s.row_of(lookup_token)) j["row"] = *row;
        const std::size_t shown = lookup_full ? hit.vector.size()
                                              : std::min<std::size_t>(8, hit.vector.size());
        j["vector"] = std::vector<float>(hit.vector.begin(), hit.vector.begin() + static_cast<std::ptrdiff_t>(shown));
        std::cout << j.dump() << '\n';
      } else if (*store_synth) {
        auto in = files.stream(index_path);
        auto index = store::decode_index(in);
        Lcg64 rng(synth_seed);
        std::vector<float> matrix(index.size() * dim);
        for (auto& v : matrix) v = static_cast<float>(rng.unit() * 2.0 - 1.0);
        store::EmbeddingStore s(std::move(index), std::move(matrix), dim);
        const fs::path out = synth_out;
        files.write(out / "embeddings.bin", store::encode_matrix(s.matrix(), s.rows(), s.dim()));
        std::error_code ec;
        if (!fs::equivalent(out / "embeddings.index", index_path, ec)) {
          files.write(out / "embeddings.index", store::encode_index(s.index()));
        }
      }
    } else if (*split_cmd) {
      auto corpus = load_corpus_file(files, require(split_corpus, cfg.corpus, "--corpus"));
      auto ratios = split_ratios.empty() ? cfg.ratios : parse_ratios(split_ratios);
      auto manifest = corpus::make_split(corpus, split_seed, ratios);
      emit(files, split_out, corpus::write_manifest_json(manifest));
    } else if (*stats_cmd) {
      auto corpus = load_corpus_file(files, require(stats_corpus, cfg.corpus, "--corpus"));
      std::optional<corpus::SplitManifest> manifest;
      const std::string split_path = !stats_split.empty() ? stats_split : cfg.split.value_or("");
      if (!split_path.empty()) manifest = corpus::read_manifest_json(files.read(split_path));
      auto st = corpus::corpus_stats(corpus, manifest ? &*manifest : nullptr);
      emit(files, cstats_out,
           cstats_format == "json" ? corpus::to_json(st).dump(2) + "\n"
                                   : corpus::render_stats_markdown(st));
    } else if (*parse_preds) {
      auto corpus = load_corpus_file(files, require(preds_corpus, cfg.corpus, "--corpus"));
      auto in = files.stream(require(preds_path, cfg.predictions, "--preds"));
      const double tau = tau_flag.value_or(cfg.tau);
      auto adapted = preds::adapt_predictions(in, corpus, tau);
      files.write(labels_out, preds::write_labels_jsonl(adapted));
      nlohmann::ordered_json summary;
      summary["sentences"] = adapted.records.size();
      summary["generative"] = adapted.generative;
      summary["parse_failures"] = adapted.parse_failures;
      if (auto rate = adapted.parse_failure_rate()) summary["parse_failure_rate"] = *rate;
      summary["bio_orphans"] = adapted.bio_orphans;
      std::cout << summary.dump() << '\n';
    } else if (*eval_cmd) {
      auto corpus = load_corpus_file(files, require(eval_gold, cfg.corpus, "--gold"));
      const std::string split_path = !eval_split.empty() ? eval_split : cfg.split.value_or("");
      corpus::Corpus evaluated = corpus;
      if (!split_path.empty()) {
        auto manifest = corpus::read_manifest_json(files.read(split_path));
        auto parts = corpus::apply_split(corpus, manifest);
        evaluated = parts[*corpus::partition_from(eval_partition)];
      }
      auto in = files.stream(eval_labels);
      auto records = preds::read_labels_jsonl(in);
      metrics::LabelSet pred;
      std::vector<preds::ParseOutcome> generative;
      auto gold = metrics::gold_labels(evaluated);
      for (auto& r : records) {
        // labels files may cover more than the scored partition
        if (!gold.contains(r.labels.sent_id)) continue;
        if (r.kind == preds::PredictionKind::generative) generative.push_back(r.outcome);
        if (!pred.emplace(r.labels.sent_id, std::move(r.labels.labels)).second) {
          throw validation_error("labels file repeats sentence '" + r.labels.sent_id + "'");
        }
      }
      metrics::RunScore run;
      run.model = eval_model.empty() ? fs::path(eval_labels).stem().string() : eval_model;
      run.seed = eval_seed;
      run.counts = metrics::confusion(gold, pred);
      run.scores = metrics::score(run.counts);
      if (register_breakdown) {
        run.registers = metrics::per_register(gold, pred, metrics::register_map(evaluated));
      }
      if (!generative.empty()) run.parse_failure_rate = preds::failure_rate(generative);
      emit(files, eval_out, metrics::write_run_json(run));
    } else if (*aggregate_cmd) {
      auto paths = expand_glob(runs_glob);
      if (paths.empty()) throw io_error("no run files match '" + runs_glob + "'");
      std::vector<metrics::RunScore> runs;
      for (const auto& p : paths) runs.push_back(metrics::read_run_json(files.read(p)));
      auto models = metrics::aggregate_runs(runs, cfg.seed_list);
      for (const auto& m : models) {
        if (m.seeds.size() != cfg.seed_list.size()) {
          warn("model '" + m.model + "' has " + std::to_string(m.seeds.size()) +
               " runs; the seed list has " + std::to_string(cfg.seed_list.size()));
        }
      }
      emit(files, aggregate_out, metrics::write_aggregate_json(models));
    } else if (*report_cmd) {
      if (!fs::is_directory(aggregates_dir)) {
        throw io_error("'" + aggregates_dir + "' is not a directory");
      }
      std::vector<fs::path> paths;
      for (const auto& e : fs::directory_iterator(aggregates_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") paths.push_back(e.path());
      }
      std::sort(paths.begin(), paths.end());
      std::vector<metrics::ModelAggregate> models;
      for (const auto& p : paths) {
        auto text = files.read(p);
        auto j = nlohmann::json::parse(text, nullptr, false);
        if (j.is_object() && j.value("format", "") == "mipvu-report") continue;
        auto parsed = metrics::read_aggregate_json(text);
        if (!parsed) continue;
        for (auto& m : *parsed) {
          auto dup = std::find_if(models.begin(), models.end(),
                                  [&](const auto& x) { return x.model == m.model; });
          if (dup != models.end()) {
            throw validation_error("model '" + m.model + "' appears in more than one aggregate file");
          }
          models.push_back(std::move(m));
        }
      }
      if (models.empty()) warn("no aggregate files found in '" + aggregates_dir + "'");
      auto report = metrics::emit_report(
          models,
          report_format == "csv" ? metrics::ReportFormat::csv : metrics::ReportFormat::markdown,
          report_layout == "taskform" ? metrics::ReportLayout::taskform
                                      : metrics::ReportLayout::main);
      for (const auto& w : report.warnings) warn(w);
      if (report_out.empty()) {
        std::cout << report.table;
      } else {
        const fs::path out = report_out;
        files.write(out / (std::string("report.") + report_format), report.table);
        files.write(out / "report.json", report.companion);
      }
    }
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
