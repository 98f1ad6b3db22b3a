#include "disco/patterns.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace disco {
namespace {

std::vector<std::string> Words(std::string_view marker) {
  std::vector<std::string> words;
  std::istringstream in{std::string(marker)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

bool IsCoordinator(std::string_view marker) {
  return marker == "and" || marker == "but";
}

void Validate(const MarkerPattern &p) {
  if (p.marker.empty()) throw std::invalid_argument("pattern with empty marker");
  if (ToLower(p.marker) != p.marker) {
    throw std::invalid_argument("marker '" + p.marker + "' must be lowercase");
  }
  if (p.s2_attach.empty() || p.marker_attach.empty()) {
    throw std::invalid_argument("pattern '" + p.marker + "' has an empty label");
  }
}

MarkerPattern Row(std::string marker, std::string s2, std::string mk,
                  MarkerOrder order = MarkerOrder::kAny) {
  return MarkerPattern{std::move(marker), std::move(s2), std::move(mk), order, true};
}

}  // namespace

PatternRegistry::PatternRegistry(std::vector<MarkerPattern> patterns)
    : patterns_(std::move(patterns)) {
  for (const auto &p : patterns_) Validate(p);
}

std::vector<MarkerPattern> PatternRegistry::Lookup(std::string_view marker) const {
  std::vector<MarkerPattern> out;
  for (const auto &p : patterns_) {
    if (p.marker == marker) out.push_back(p);
  }
  return out;
}

const MarkerPattern &PatternRegistry::at(std::string_view marker) const {
  for (const auto &p : patterns_) {
    if (p.marker == marker) return p;
  }
  throw std::out_of_range("unknown marker '" + std::string(marker) + "'");
}

bool PatternRegistry::Contains(std::string_view marker) const {
  return std::any_of(patterns_.begin(), patterns_.end(),
                     [&](const MarkerPattern &p) { return p.marker == marker; });
}

std::vector<std::string> PatternRegistry::Markers() const {
  std::vector<std::string> out;
  for (const auto &p : patterns_) {
    if (std::find(out.begin(), out.end(), p.marker) == out.end()) {
      out.push_back(p.marker);
    }
  }
  return out;
}

PatternRegistry PatternRegistry::WithOverrides(
    const std::vector<MarkerPattern> &overrides) const {
  std::set<std::string> replaced;
  for (const auto &o : overrides) replaced.insert(o.marker);
  std::vector<MarkerPattern> rows;
  std::set<std::string> emitted;
  for (const auto &p : patterns_) {
    if (!replaced.count(p.marker)) {
      rows.push_back(p);
      continue;
    }
    // Overridden markers keep their original registry position.
    if (emitted.insert(p.marker).second) {
      for (const auto &o : overrides) {
        if (o.marker == p.marker) rows.push_back(o);
      }
    }
  }
  for (const auto &o : overrides) {
    if (!Contains(o.marker)) rows.push_back(o);
  }
  return PatternRegistry(std::move(rows));
}

PatternRegistry DefaultPatterns() {
  using enum MarkerOrder;
  std::vector<MarkerPattern> rows;
  for (const char *m : {"because", "if", "so", "before", "after", "while",
                        "although", "though", "as"}) {
    rows.push_back(Row(m, "advcl", "mark", std::string_view(m) == "so" ? kS1First : kAny));
  }
  rows.push_back(Row("when", "parataxis", "mark"));
  rows.push_back(Row("still", "parataxis", "mark", kS1First));
  rows.push_back(Row("and", "conj", "mark"));
  rows.push_back(Row("but", "conj", "mark"));
  rows.push_back(Row("then", "parataxis", "advmod", kS1First));
  rows.push_back(Row("also", "parataxis", "advmod", kS1First));
  return PatternRegistry(std::move(rows));
}

std::vector<MarkerPattern> ExtraPatterns() {
  return {Row("however", "parataxis", "advmod"),
          Row("meanwhile", "parataxis", "advmod"),
          Row("for example", "parataxis", "nmod")};
}

std::vector<int> MarkerOccurrences(const DepSentence &sentence,
                                   std::string_view marker) {
  const auto words = Words(marker);
  std::vector<int> out;
  if (words.empty()) return out;
  const auto &tokens = sentence.tokens();
  const int n = static_cast<int>(tokens.size());
  const int k = static_cast<int>(words.size());
  for (int last = k; last <= n; ++last) {
    bool ok = true;
    for (int j = 0; j < k && ok; ++j) {
      ok = ToLower(tokens[last - k + j].form) == words[j];
    }
    if (ok) out.push_back(last);
  }
  return out;
}

std::set<int> MarkerSpan(std::string_view marker, int last) {
  const int k = static_cast<int>(Words(marker).size());
  std::set<int> span;
  for (int i = last - k + 1; i <= last; ++i) span.insert(i);
  return span;
}

std::vector<PatternMatch> MatchPattern(const DepSentence &sentence,
                                       const MarkerPattern &pattern) {
  std::vector<PatternMatch> out;
  const bool coord = IsCoordinator(pattern.marker) && pattern.marker_attach == "mark";
  for (int idx : MarkerOccurrences(sentence, pattern.marker)) {
    const Token &marker = sentence.at(idx);
    const bool edge_ok = LabelMatches(marker.deprel, pattern.marker_attach) ||
                         (coord && LabelMatches(marker.deprel, "cc"));
    if (!edge_ok || marker.head == 0) continue;
    const Token &s2 = sentence.at(marker.head);
    PatternMatch m;
    m.marker_token = idx;
    m.s2_head = s2.index;
    m.pattern = pattern;
    if (s2.head != 0 && LabelMatches(s2.deprel, pattern.s2_attach) &&
        !MarkerSpan(pattern.marker, idx).count(s2.head)) {
      m.s1_head = s2.head;
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string_view ToString(MarkerOrder order) {
  return order == MarkerOrder::kS1First ? "s1_first" : "any";
}

std::vector<MarkerPattern> ReadPatternConfig(std::istream &in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw std::invalid_argument(std::string("pattern config: ") + e.what());
  }
  if (doc.is_object() && doc.contains("patterns")) doc = doc["patterns"];
  if (!doc.is_array()) {
    throw std::invalid_argument("pattern config: expected an array of patterns");
  }
  std::vector<MarkerPattern> rows;
  for (const auto &item : doc) {
    try {
      MarkerPattern p;
      p.marker = ToLower(item.at("marker").get<std::string>());
      p.s2_attach = item.at("s2_attach").get<std::string>();
      p.marker_attach = item.at("marker_attach").get<std::string>();
      std::string order = ToLower(item.value("order", std::string("any")));
      if (order == "any") {
        p.order = MarkerOrder::kAny;
      } else if (order == "s1_first" || order == "s1first") {
        p.order = MarkerOrder::kS1First;
      } else {
        throw std::invalid_argument("unknown order '" + order + "'");
      }
      p.allow_ips = item.value("allow_ips", true);
      Validate(p);
      rows.push_back(std::move(p));
    } catch (const nlohmann::json::exception &e) {
      throw std::invalid_argument(std::string("pattern config: ") + e.what());
    }
  }
  return rows;
}

}  // namespace disco
