// Turns pattern matches into filtered (S1, marker, S2) pairs in conceptual
// order, covering same-sentence (SS) and previous-sentence (IPS) cases.

#ifndef DISCO_EXTRACT_H_
#define DISCO_EXTRACT_H_

#include <cstddef>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disco/corpus.h"
#include "disco/patterns.h"

namespace disco {

enum class PairMode { kSS, kIPS };

enum class RejectReason {
  kNoGovernor,
  kOrderViolation,
  kTooShort,
  kTooLong,
  kRatioExceeded,
  kNoMainVerb,
  kNoPreviousSentence,
};

std::string_view ToString(RejectReason reason);
std::string_view ToString(PairMode mode);

struct ExtractedPair {
  std::string s1;
  std::string s2;
  std::string marker;
  PairMode mode = PairMode::kSS;
  std::string doc_id;
  int sentence_index = 0;  // 0-based within the document

  bool operator==(const ExtractedPair &) const = default;
};

struct ExtractionConfig {
  int min_len = 5;
  int max_len = 50;
  double max_ratio = 5.0;
  bool require_main_verb = true;
  // Enabled markers; empty means every marker in the registry.
  std::set<std::string> markers;

  // Throws std::invalid_argument when the bounds are inconsistent.
  void Validate() const;
};

// A rendered pair awaiting the length/verb filters.
struct Candidate {
  std::string s1;
  std::string s2;
  bool s1_has_verb = false;
  bool s2_has_verb = false;
};

struct Rejection {
  std::string doc_id;
  int sentence_index = 0;
  std::string marker;
  RejectReason reason = RejectReason::kNoGovernor;
  int marker_token = 0;
  std::string s1;  // rendered text when the candidate got that far
  std::string s2;

  bool operator==(const Rejection &) const = default;
};

struct ExtractionResult {
  std::vector<ExtractedPair> accepted;
  std::vector<Rejection> rejected;

  void Append(ExtractionResult &&other);
};

// Number of whitespace-separated words.
int WordCount(std::string_view text);

// nullopt means accept.
std::optional<RejectReason> FilterPair(const Candidate &candidate,
                                       const ExtractionConfig &config);

// Space-joins forms. Commas directly before or after the removed marker span
// are dropped, then punctuation-only tokens at either end. Throws
// std::invalid_argument on an empty token list.
std::string RenderText(std::span<const Token> tokens,
                       const std::set<int> &removed_marker = {});

bool IsPunctuation(std::string_view form);

// Every occurrence of an enabled marker word yields exactly one accepted pair
// or one rejection, in sentence order then token order.
ExtractionResult ExtractPairs(const Document &doc,
                              const PatternRegistry &registry,
                              const ExtractionConfig &config);

// Runs ExtractPairs over documents on `jobs` threads; output is merged in
// document order and does not depend on `jobs`.
ExtractionResult ExtractCorpus(std::span<const Document> docs,
                               const PatternRegistry &registry,
                               const ExtractionConfig &config,
                               std::size_t jobs = 1);

// doc_id<TAB>sent_index<TAB>marker<TAB>reason
void WriteRejectionsTsv(std::ostream &out, std::span<const Rejection> rejected);

}  // namespace disco

#endif  // DISCO_EXTRACT_H_
