// Per-marker dependency patterns and the two-edge matcher.
//
// Every pattern has the same shape:
//
//   S1-head --s2_attach--> S2-head --marker_attach--> marker
//
// A marker token is located by its lowercased form; its governor through
// marker_attach is the S2 head, and the S2 head's governor through s2_attach
// (in the same sentence) is the S1 head. Without the second edge the match is
// an IPS candidate: S1 may come from the previous sentence.

#ifndef DISCO_PATTERNS_H_
#define DISCO_PATTERNS_H_

#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "disco/corpus.h"

namespace disco {

enum class MarkerOrder { kAny, kS1First };

struct MarkerPattern {
  std::string marker;  // lowercase; multi-word markers are space-separated
  std::string s2_attach;
  std::string marker_attach;
  MarkerOrder order = MarkerOrder::kAny;
  bool allow_ips = true;

  bool operator==(const MarkerPattern &) const = default;
};

struct PatternMatch {
  int marker_token = 0;
  int s2_head = 0;
  std::optional<int> s1_head;  // absent: IPS candidate
  MarkerPattern pattern;
};

class PatternRegistry {
 public:
  PatternRegistry() = default;
  // Throws std::invalid_argument when a pattern is malformed.
  explicit PatternRegistry(std::vector<MarkerPattern> patterns);

  const std::vector<MarkerPattern> &patterns() const { return patterns_; }

  // All rows for a marker, in registry order. Empty when unknown.
  std::vector<MarkerPattern> Lookup(std::string_view marker) const;
  // First row for a marker. Throws std::out_of_range when unknown.
  const MarkerPattern &at(std::string_view marker) const;
  bool Contains(std::string_view marker) const;

  // Distinct markers in first-appearance order.
  std::vector<std::string> Markers() const;

  // Replaces every row of each marker mentioned in `overrides` and appends
  // markers not yet present.
  PatternRegistry WithOverrides(const std::vector<MarkerPattern> &overrides) const;

  bool operator==(const PatternRegistry &) const = default;

 private:
  std::vector<MarkerPattern> patterns_;
};

// The fifteen markers of the full marker set.
PatternRegistry DefaultPatterns();

// however / meanwhile (parataxis + advmod) and "for example" (parataxis +
// nmod). Not part of the default registry.
std::vector<MarkerPattern> ExtraPatterns();

// Matches `pattern` against every occurrence of its marker in `sentence`, in
// surface order. For and/but, a "cc" marker edge is accepted wherever the
// pattern says "mark".
std::vector<PatternMatch> MatchPattern(const DepSentence &sentence,
                                       const MarkerPattern &pattern);

// Indices of tokens that spell `marker` (the last word of a multi-word marker
// carries the attachment), in surface order.
std::vector<int> MarkerOccurrences(const DepSentence &sentence,
                                   std::string_view marker);

// Every token of a (possibly multi-word) marker occurrence ending at `last`.
std::set<int> MarkerSpan(std::string_view marker, int last);

// JSON pattern file: an array of objects (or {"patterns": [...]}) with keys
// marker, s2_attach, marker_attach, order ("any" | "s1_first"), allow_ips.
std::vector<MarkerPattern> ReadPatternConfig(std::istream &in);

std::string_view ToString(MarkerOrder order);

}  // namespace disco

#endif  // DISCO_PATTERNS_H_
