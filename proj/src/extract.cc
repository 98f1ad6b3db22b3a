#include "disco/extract.h"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace disco {
namespace {

bool HasVerb(std::span<const Token> tokens) {
  return std::any_of(tokens.begin(), tokens.end(), [](const Token &t) {
    return t.upos == "VERB" || t.upos == "AUX";
  });
}

int MinIndex(std::span<const Token> tokens) {
  int m = tokens.front().index;
  for (const Token &t : tokens) m = std::min(m, t.index);
  return m;
}

// Decodes one UTF-8 code point starting at s[i]; advances i.
char32_t NextCodePoint(std::string_view s, std::size_t &i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  int extra = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xE ? 2 : (c >> 3) == 0x1E ? 3 : 0;
  char32_t cp = extra == 0 ? c : c & (0x3F >> extra);
  ++i;
  for (int k = 0; k < extra && i < s.size(); ++k, ++i) {
    cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3F);
  }
  return cp;
}

bool IsPunctCodePoint(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  // General punctuation block, Latin-1 punctuation, CJK punctuation.
  return (cp >= 0x2010 && cp <= 0x205E) || cp == 0xA1 || cp == 0xAB ||
         cp == 0xBB || cp == 0xBF || cp == 0xB7 ||
         (cp >= 0x3000 && cp <= 0x303F);
}

// Tokens of `sentence` covered by the S2 subtree, the marker, or the run of
// punctuation that ends the sentence.
bool CoversSentence(const DepSentence &sentence, const std::set<int> &marker,
                    std::span<const Token> s2_yield) {
  std::set<int> covered(marker);
  for (const Token &t : s2_yield) covered.insert(t.index);
  const auto &tokens = sentence.tokens();
  int tail = static_cast<int>(tokens.size());
  while (tail >= 1 && IsPunctuation(tokens[tail - 1].form)) covered.insert(tail--);
  return static_cast<int>(covered.size()) == static_cast<int>(tokens.size());
}

struct Occurrence {
  int token;
  std::string marker;
};

}  // namespace

std::string_view ToString(RejectReason reason) {
  switch (reason) {
    case RejectReason::kNoGovernor: return "NoGovernor";
    case RejectReason::kOrderViolation: return "OrderViolation";
    case RejectReason::kTooShort: return "TooShort";
    case RejectReason::kTooLong: return "TooLong";
    case RejectReason::kRatioExceeded: return "RatioExceeded";
    case RejectReason::kNoMainVerb: return "NoMainVerb";
    case RejectReason::kNoPreviousSentence: return "NoPreviousSentence";
  }
  return "Unknown";
}

std::string_view ToString(PairMode mode) {
  return mode == PairMode::kSS ? "SS" : "IPS";
}

void ExtractionConfig::Validate() const {
  if (min_len <= 0 || min_len > max_len) {
    throw std::invalid_argument("extraction config needs 0 < min_len <= max_len");
  }
  if (!(max_ratio >= 1.0)) {
    throw std::invalid_argument("extraction config needs max_ratio >= 1");
  }
}

void ExtractionResult::Append(ExtractionResult &&other) {
  accepted.insert(accepted.end(), std::make_move_iterator(other.accepted.begin()),
                  std::make_move_iterator(other.accepted.end()));
  rejected.insert(rejected.end(), std::make_move_iterator(other.rejected.begin()),
                  std::make_move_iterator(other.rejected.end()));
}

int WordCount(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string w;
  int n = 0;
  while (in >> w) ++n;
  return n;
}

std::optional<RejectReason> FilterPair(const Candidate &candidate,
                                       const ExtractionConfig &config) {
  const int n1 = WordCount(candidate.s1);
  const int n2 = WordCount(candidate.s2);
  if (n1 < config.min_len || n2 < config.min_len) return RejectReason::kTooShort;
  if (n1 > config.max_len || n2 > config.max_len) return RejectReason::kTooLong;
  const double ratio = static_cast<double>(std::max(n1, n2)) / std::min(n1, n2);
  if (ratio > config.max_ratio) return RejectReason::kRatioExceeded;
  if (config.require_main_verb && !(candidate.s1_has_verb && candidate.s2_has_verb)) {
    return RejectReason::kNoMainVerb;
  }
  return std::nullopt;
}

bool IsPunctuation(std::string_view form) {
  if (form.empty()) return false;
  std::size_t i = 0;
  while (i < form.size()) {
    if (!IsPunctCodePoint(NextCodePoint(form, i))) return false;
  }
  return true;
}

std::string RenderText(std::span<const Token> tokens,
                       const std::set<int> &removed_marker) {
  if (tokens.empty()) throw std::invalid_argument("cannot render an empty token list");
  std::vector<const Token *> kept;
  for (const Token &t : tokens) {
    if (!removed_marker.empty() && t.form == "," &&
        (t.index == *removed_marker.begin() - 1 ||
         t.index == *removed_marker.rbegin() + 1)) {
      continue;
    }
    kept.push_back(&t);
  }
  std::size_t begin = 0;
  std::size_t end = kept.size();
  while (begin < end && IsPunctuation(kept[begin]->form)) ++begin;
  while (end > begin && IsPunctuation(kept[end - 1]->form)) --end;
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (!out.empty()) out += ' ';
    out += kept[i]->form;
  }
  return out;
}

ExtractionResult ExtractPairs(const Document &doc,
                              const PatternRegistry &registry,
                              const ExtractionConfig &config) {
  config.Validate();
  std::vector<std::string> markers;
  for (const auto &m : registry.Markers()) {
    if (config.markers.empty() || config.markers.count(m)) markers.push_back(m);
  }

  ExtractionResult result;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const DepSentence &sentence = doc.sentences[si];
    const int sent_index = static_cast<int>(si);

    std::vector<Occurrence> occurrences;
    std::map<std::pair<int, std::string>, std::vector<PatternMatch>> matches;
    for (const auto &marker : markers) {
      for (int idx : MarkerOccurrences(sentence, marker)) {
        occurrences.push_back({idx, marker});
      }
      for (const auto &row : registry.Lookup(marker)) {
        for (auto &m : MatchPattern(sentence, row)) {
          matches[{m.marker_token, marker}].push_back(std::move(m));
        }
      }
    }
    std::stable_sort(occurrences.begin(), occurrences.end(),
                     [](const Occurrence &a, const Occurrence &b) {
                       return a.token < b.token;
                     });

    for (const Occurrence &occ : occurrences) {
      auto reject = [&](RejectReason reason, std::string s1 = {},
                        std::string s2 = {}) {
        result.rejected.push_back(Rejection{doc.doc_id, sent_index, occ.marker,
                                            reason, occ.token, std::move(s1),
                                            std::move(s2)});
      };
      const auto it = matches.find({occ.token, occ.marker});
      if (it == matches.end()) {
        reject(RejectReason::kNoGovernor);
        continue;
      }
      const auto &found = it->second;
      // Registry order decides between rows; a same-sentence reading wins.
      const PatternMatch *chosen = nullptr;
      for (const auto &m : found) {
        if (m.s1_head) {
          chosen = &m;
          break;
        }
      }
      const std::set<int> span = MarkerSpan(occ.marker, occ.token);
      Candidate cand;
      PairMode mode = PairMode::kSS;
      if (chosen) {
        std::set<int> s1_excl = span;
        s1_excl.insert(chosen->s2_head);
        // S1's own connective (it links S1 to something else) stays out.
        for (const Token &d : Dependents(sentence, *chosen->s1_head)) {
          if (LabelMatches(d.deprel, "mark") || LabelMatches(d.deprel, "cc")) {
            s1_excl.insert(d.index);
          }
        }
        const auto s1_yield = SubtreeYield(sentence, *chosen->s1_head, s1_excl);
        const auto s2_yield = SubtreeYield(sentence, chosen->s2_head, span);
        if (chosen->pattern.order == MarkerOrder::kS1First &&
            MinIndex(s2_yield) < MinIndex(s1_yield)) {
          reject(RejectReason::kOrderViolation);
          continue;
        }
        cand.s1 = RenderText(s1_yield, span);
        cand.s2 = RenderText(s2_yield, span);
        cand.s1_has_verb = HasVerb(s1_yield);
        cand.s2_has_verb = HasVerb(s2_yield);
      } else {
        for (const auto &m : found) {
          if (m.pattern.allow_ips) {
            chosen = &m;
            break;
          }
        }
        if (!chosen) {
          reject(RejectReason::kNoGovernor);
          continue;
        }
        const auto s2_yield = SubtreeYield(sentence, chosen->s2_head, span);
        if (!CoversSentence(sentence, span, SubtreeYield(sentence, chosen->s2_head))) {
          reject(RejectReason::kNoGovernor);
          continue;
        }
        if (si == 0) {
          reject(RejectReason::kNoPreviousSentence);
          continue;
        }
        const DepSentence &prev = doc.sentences[si - 1];
        mode = PairMode::kIPS;
        cand.s1 = prev.text();
        cand.s2 = RenderText(s2_yield, span);
        cand.s1_has_verb = HasVerb(prev.tokens());
        cand.s2_has_verb = HasVerb(s2_yield);
      }
      if (auto reason = FilterPair(cand, config)) {
        reject(*reason, cand.s1, cand.s2);
        continue;
      }
      result.accepted.push_back(ExtractedPair{std::move(cand.s1), std::move(cand.s2),
                                              occ.marker, mode, doc.doc_id,
                                              sent_index});
    }
  }
  return result;
}

ExtractionResult ExtractCorpus(std::span<const Document> docs,
                               const PatternRegistry &registry,
                               const ExtractionConfig &config,
                               std::size_t jobs) {
  config.Validate();
  std::vector<ExtractionResult> parts(docs.size());
  jobs = std::max<std::size_t>(1, std::min(jobs, docs.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      parts[i] = ExtractPairs(docs[i], registry, config);
    }
  } else {
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < docs.size(); i += jobs) {
          parts[i] = ExtractPairs(docs[i], registry, config);
        }
      });
    }
    for (auto &t : workers) t.join();
  }
  ExtractionResult all;
  for (auto &p : parts) all.Append(std::move(p));
  return all;
}

void WriteRejectionsTsv(std::ostream &out, std::span<const Rejection> rejected) {
  for (const Rejection &r : rejected) {
    out << r.doc_id << '\t' << r.sentence_index << '\t' << r.marker << '\t'
        << ToString(r.reason) << '\n';
  }
}

}  // namespace disco
