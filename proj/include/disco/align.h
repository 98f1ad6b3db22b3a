// Extraction validation: align extracted pairs to gold pairs by normalized
// character edit distance and report per-marker precision.

#ifndef DISCO_ALIGN_H_
#define DISCO_ALIGN_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disco/dataset.h"
#include "json.hpp"

namespace disco {

// Unit-cost insert/delete/substitute distance over Unicode code points
// (UTF-8 input).
std::size_t Levenshtein(std::string_view a, std::string_view b);

// Levenshtein / max(len a, len b) in code points; 0 when both are empty.
double NormalizedLevenshtein(std::string_view a, std::string_view b);

std::u32string DecodeUtf8(std::string_view s);

inline constexpr double kAlignThreshold = 0.7;

struct Alignment {
  std::size_t extracted = 0;  // index into the extracted list
  std::size_t gold = 0;       // index into the gold list
  double match_distance = 0.0;
  double quality = 0.0;  // mean of the two side distances
};

struct AlignmentResult {
  std::vector<Alignment> alignments;
  std::vector<std::size_t> unaligned;  // indices into the extracted list
};

// For one marker: each extracted pair is matched to the gold pair minimizing
// min(d(S1,G1), d(S2,G2)); the first gold pair wins ties. The match counts only
// when that distance is strictly below `threshold`.
AlignmentResult AlignPairs(std::span<const PairRecord> extracted,
                           std::span<const PairRecord> gold,
                           double threshold = kAlignThreshold);

// Groups both sides by marker and aligns within each group. Indices in the
// result refer to the original lists.
AlignmentResult AlignByMarker(std::span<const PairRecord> extracted,
                              std::span<const PairRecord> gold,
                              double threshold = kAlignThreshold,
                              std::size_t jobs = 1);

struct PrecisionReport {
  // nullopt when a marker has no extracted pairs.
  std::map<std::string, std::optional<double>> per_marker;
  std::map<std::string, std::size_t> extracted_counts;
  std::map<std::string, std::size_t> aligned_counts;
  std::optional<double> overall;
};

PrecisionReport ExtractionPrecision(const AlignmentResult &result,
                                    std::span<const PairRecord> extracted,
                                    std::span<const std::string> markers = {});

// Replaces every run of digits (with embedded ',' or '.') by "NUM". When a
// vocabulary is given, out-of-vocabulary words become "<unk>".
std::string PreprocessForAlignment(std::string_view text,
                                   const std::set<std::string> *vocab = nullptr);

// The `cap` most frequent whitespace words of the texts (ties lexicographic).
std::set<std::string> TopWords(std::span<const std::string> texts, std::size_t cap);

// Quality histogram over [0, 1] in `bins` equal-width buckets.
std::vector<std::size_t> QualityHistogram(std::span<const Alignment> alignments,
                                          std::size_t bins = 10);

nlohmann::json AlignmentReportJson(const AlignmentResult &result,
                                   const PrecisionReport &precision,
                                   double threshold);

}  // namespace disco

#endif  // DISCO_ALIGN_H_
