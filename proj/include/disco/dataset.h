// Labeled sentence-pair collections: marker sets, splits, balancing,
// statistics and TSV I/O.

#ifndef DISCO_DATASET_H_
#define DISCO_DATASET_H_

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace disco {

struct PairRecord {
  std::string s1;
  std::string s2;
  std::string marker;
  std::string doc_id;  // optional fourth TSV column

  bool operator==(const PairRecord &) const = default;
};

enum class SplitPart { kTrain, kValid, kTest };
std::string_view ToString(SplitPart part);

struct MarkerSet {
  std::string name;
  std::set<std::string> markers;
};

// "books5", "books8", "all" (also "books_all"/"booksall"), case-insensitive;
// anything else is read as a comma-separated custom list. Throws
// std::invalid_argument when the result is empty.
MarkerSet ResolveMarkerSet(std::string_view name);
// Strict lookup of a named set. Throws std::invalid_argument when unknown.
MarkerSet NamedMarkerSet(std::string_view name);

struct PairDataset {
  std::vector<PairRecord> pairs;
  std::string marker_set = "custom";
  std::vector<SplitPart> split;  // empty, or one entry per pair

  std::vector<PairRecord> Part(SplitPart part) const;
  bool operator==(const PairDataset &) const = default;
};

// Deterministic 64-bit generator shared by every seeded operation, so results
// do not depend on the standard library's distribution implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t Next();
  // Uniform in [0, bound) without modulo bias. bound > 0.
  std::uint64_t Below(std::uint64_t bound);
  // Uniform in [0, 1).
  double Uniform();

 private:
  std::uint64_t state_;
};

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> SeededPermutation(std::size_t n, std::uint64_t seed);

PairDataset SubsetMarkers(const PairDataset &ds, const MarkerSet &set);

// Shuffles then cuts valid/test sizes as floor(ratio * n); train takes the
// remainder. Throws std::invalid_argument on an empty dataset or bad ratios.
PairDataset Split(const PairDataset &ds, std::array<double, 3> ratios,
                  std::uint64_t seed);

// Keeps at most `cap` pairs per marker, chosen as the first `cap` of a seeded
// shuffle; survivors stay in their original order.
PairDataset Balance(const PairDataset &ds, std::size_t cap, std::uint64_t seed);

struct MarkerCount {
  std::string marker;
  std::size_t count = 0;
  double percent = 0.0;
};

struct MarkerStats {
  std::vector<MarkerCount> rows;  // descending count, ties by marker
  std::size_t total = 0;
};

MarkerStats ComputeMarkerStats(std::span<const PairRecord> pairs);
void WriteStatsText(std::ostream &out, const MarkerStats &stats);
nlohmann::json StatsToJson(const MarkerStats &stats);

// s1<TAB>s2<TAB>marker[<TAB>doc_id]. Tabs/newlines inside text become spaces.
void WritePairsTsv(std::ostream &out, std::span<const PairRecord> pairs,
                   bool with_doc_id = false);
// Throws std::runtime_error with the line number on malformed rows.
std::vector<PairRecord> ReadPairsTsv(std::istream &in);

std::string SanitizeField(std::string_view text);

// FNV-1a over a byte string; recorded in metadata sidecars.
std::uint64_t Fnv1a64(std::string_view bytes);
std::string HexDigest(std::uint64_t value);

}  // namespace disco

#endif  // DISCO_DATASET_H_
