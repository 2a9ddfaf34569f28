#pragma once

// Run configuration: a line-oriented `key = value` file. Blank lines and
// lines starting with '#' are ignored. Command-line flags override it; the
// environment is never consulted.
//
//   dump        = data/mcd7.jsonl
//   corpus      = data/corpus.jsonl
//   split       = data/split.json
//   predictions = runs/roberta_42.preds.jsonl
//   out_dir     = out
//   seeds       = 42, 123, 2024, 7, 31415
//   ratios      = 0.7, 0.1, 0.2
//   tau         = 0.5

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mipvu/corpus_model.hpp"
#include "mipvu/error.hpp"
#include "mipvu/metrics_engine.hpp"
#include "mipvu/prediction_adapters.hpp"
#include "mipvu/utf8.hpp"

namespace mipvu {

struct RunConfig {
  std::optional<std::string> dump;
  std::optional<std::string> corpus;
  std::optional<std::string> split;
  std::optional<std::string> predictions;
  std::optional<std::string> out_dir;
  std::vector<std::int64_t> seed_list = metrics::kDefaultSeeds;
  corpus::SplitRatios ratios;
  double tau = preds::kDefaultThreshold;
};

namespace detail {

inline std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(utf8::trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw schema_error(what + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

inline std::int64_t parse_int(std::string_view s, const std::string& what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw schema_error(what + ": '" + std::string(s) + "' is not an integer");
  }
  return v;
}

}  // namespace detail

inline std::vector<std::int64_t> parse_seed_list(std::string_view text) {
  std::vector<std::int64_t> seeds;
  for (auto item : detail::split_list(text)) {
    seeds.push_back(detail::parse_int(item, "seeds"));
  }
  return seeds;
}

inline corpus::SplitRatios parse_ratios(std::string_view text) {
  auto items = detail::split_list(text);
  if (items.size() != 3) {
    throw schema_error("ratios: expected three comma-separated values");
  }
  corpus::SplitRatios r{detail::parse_double(items[0], "ratios"),
                        detail::parse_double(items[1], "ratios"),
                        detail::parse_double(items[2], "ratios")};
  corpus::validate_ratios(r);
  return r;
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = utf8::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw schema_error("config line " + std::to_string(line_no) +
                         ": expected key = value");
    }
    const auto key = utf8::trim(text.substr(0, eq));
    const auto value = std::string(utf8::trim(text.substr(eq + 1)));
    if (key == "dump") {
      cfg.dump = value;
    } else if (key == "corpus") {
      cfg.corpus = value;
    } else if (key == "split") {
      cfg.split = value;
    } else if (key == "predictions") {
      cfg.predictions = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "seeds") {
      cfg.seed_list = parse_seed_list(value);
    } else if (key == "ratios") {
      cfg.ratios = parse_ratios(value);
    } else if (key == "tau") {
      cfg.tau = detail::parse_double(value, "tau");
    } else {
      throw schema_error("config line " + std::to_string(line_no) +
                         ": unknown key '" + std::string(key) + "'");
    }
  }
  return cfg;
}

}  // namespace mipvu
