#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace mipvu::fmt {

/// Renders `value` with exactly `decimals` fractional digits, rounding half
/// away from zero on the shortest round-trip decimal form of the double.
/// Working from the shortest form means 0.71425 rounds to 0.7143 even though
/// the nearest binary double lies slightly below it.
inline std::string fixed_half_up(double value, int decimals) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : "inf";

  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value,
                           std::chars_format::scientific);
  std::string sci(buf, res.ptr);

  bool negative = false;
  std::size_t pos = 0;
  if (sci[pos] == '-') {
    negative = true;
    ++pos;
  }
  const auto e_at = sci.find('e');
  std::string digits;
  for (std::size_t i = pos; i < e_at; ++i) {
    if (sci[i] != '.') digits.push_back(sci[i]);
  }
  const int exponent = std::stoi(sci.substr(e_at + 1));

  // value = 0.d1d2d3... * 10^(exponent + 1); point_at = number of integer digits
  int point_at = exponent + 1;
  if (point_at <= 0) {
    digits.insert(0, static_cast<std::size_t>(-point_at) + 1, '0');
    point_at = 1;
  }
  const std::size_t keep = static_cast<std::size_t>(point_at + decimals);
  if (digits.size() < keep + 1) digits.append(keep + 1 - digits.size(), '0');

  const bool round_up = digits[keep] >= '5';
  digits.resize(keep);
  if (round_up) {
    int i = static_cast<int>(keep) - 1;
    while (i >= 0 && digits[static_cast<std::size_t>(i)] == '9') {
      digits[static_cast<std::size_t>(i)] = '0';
      --i;
    }
    if (i < 0) {
      digits.insert(digits.begin(), '1');
      ++point_at;
    } else {
      ++digits[static_cast<std::size_t>(i)];
    }
  }

  std::string int_part = digits.substr(0, static_cast<std::size_t>(point_at));
  const auto nz = int_part.find_first_not_of('0');
  int_part = nz == std::string::npos ? "0" : int_part.substr(nz);
  std::string out = int_part;
  if (decimals > 0) {
    out += '.';
    out += digits.substr(static_cast<std::size_t>(point_at));
  }
  const bool all_zero = out.find_first_not_of("0.") == std::string::npos;
  if (negative && !all_zero) out.insert(out.begin(), '-');
  return out;
}

/// `0.XXXX ± 0.XXXX`
inline std::string mean_pm_std(double mean, double std, int decimals = 4) {
  return fixed_half_up(mean, decimals) + " ± " +
         fixed_half_up(std, decimals);
}

inline std::string percent(double fraction, int decimals = 2) {
  return fixed_half_up(fraction * 100.0, decimals) + "%";
}

}  // namespace mipvu::fmt
