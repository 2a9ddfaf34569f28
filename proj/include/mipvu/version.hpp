#pragma once

namespace mipvu {

inline constexpr const char* kToolkitVersion = "1.0.0";

// File-format schema versions. Bump on any incompatible change.
inline constexpr int kDumpFormatVersion = 1;
inline constexpr int kCorpusFormatVersion = 1;
inline constexpr int kSplitFormatVersion = 1;
inline constexpr int kStoreFormatVersion = 1;
inline constexpr int kLabelsFormatVersion = 1;
inline constexpr int kRunFormatVersion = 1;
inline constexpr int kAggregateFormatVersion = 1;

}  // namespace mipvu
