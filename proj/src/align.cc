#include "disco/align.h"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace disco {

std::u32string DecodeUtf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    int extra = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xE ? 2 : (c >> 3) == 0x1E ? 3 : -1;
    if (extra < 0) {
      // Stray continuation or invalid lead byte: keep it as a raw unit.
      out.push_back(c);
      ++i;
      continue;
    }
    char32_t cp = extra == 0 ? c : c & (0x3F >> extra);
    ++i;
    for (int k = 0; k < extra && i < s.size(); ++k, ++i) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3F);
    }
    out.push_back(cp);
  }
  return out;
}

namespace {

std::size_t EditDistance(const std::u32string &a, const std::u32string &b) {
  const std::u32string &shorter = a.size() <= b.size() ? a : b;
  const std::u32string &longer = a.size() <= b.size() ? b : a;
  std::vector<std::size_t> row(shorter.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= longer.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= shorter.size(); ++j) {
      std::size_t up = row[j];
      std::size_t cost = longer[i - 1] == shorter[j - 1] ? 0 : 1;
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[shorter.size()];
}

double Normalized(const std::u32string &a, const std::u32string &b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(EditDistance(a, b)) / static_cast<double>(longest);
}

struct Decoded {
  std::u32string s1;
  std::u32string s2;
};

std::vector<Decoded> DecodeAll(std::span<const PairRecord> pairs) {
  std::vector<Decoded> out;
  out.reserve(pairs.size());
  for (const auto &p : pairs) out.push_back({DecodeUtf8(p.s1), DecodeUtf8(p.s2)});
  return out;
}

// Best gold pair for one extracted pair; nullopt when gold is empty.
std::optional<Alignment> BestMatch(const Decoded &e, std::span<const Decoded> gold,
                                   std::span<const std::size_t> gold_index) {
  std::optional<Alignment> best;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    const double d1 = Normalized(e.s1, gold[g].s1);
    const double d2 = Normalized(e.s2, gold[g].s2);
    const double md = std::min(d1, d2);
    if (!best || md < best->match_distance) {
      best = Alignment{0, gold_index[g], md, 0.5 * (d1 + d2)};
    }
  }
  return best;
}

}  // namespace

std::size_t Levenshtein(std::string_view a, std::string_view b) {
  return EditDistance(DecodeUtf8(a), DecodeUtf8(b));
}

double NormalizedLevenshtein(std::string_view a, std::string_view b) {
  return Normalized(DecodeUtf8(a), DecodeUtf8(b));
}

AlignmentResult AlignPairs(std::span<const PairRecord> extracted,
                           std::span<const PairRecord> gold, double threshold) {
  const auto ex = DecodeAll(extracted);
  const auto gd = DecodeAll(gold);
  std::vector<std::size_t> gold_index(gold.size());
  std::iota(gold_index.begin(), gold_index.end(), std::size_t{0});
  AlignmentResult result;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    auto best = BestMatch(ex[i], gd, gold_index);
    if (best && best->match_distance < threshold) {
      best->extracted = i;
      result.alignments.push_back(*best);
    } else {
      result.unaligned.push_back(i);
    }
  }
  return result;
}

AlignmentResult AlignByMarker(std::span<const PairRecord> extracted,
                              std::span<const PairRecord> gold, double threshold,
                              std::size_t jobs) {
  std::map<std::string, std::vector<std::size_t>> gold_by_marker;
  for (std::size_t g = 0; g < gold.size(); ++g) gold_by_marker[gold[g].marker].push_back(g);
  std::map<std::string, std::vector<Decoded>> gold_decoded;
  for (const auto &[marker, idx] : gold_by_marker) {
    auto &dst = gold_decoded[marker];
    for (std::size_t g : idx) dst.push_back({DecodeUtf8(gold[g].s1), DecodeUtf8(gold[g].s2)});
  }

  std::vector<std::optional<Alignment>> best(extracted.size());
  auto work = [&](std::size_t i) {
    const auto it = gold_by_marker.find(extracted[i].marker);
    if (it == gold_by_marker.end()) return;
    Decoded e{DecodeUtf8(extracted[i].s1), DecodeUtf8(extracted[i].s2)};
    best[i] = BestMatch(e, gold_decoded.at(it->first), it->second);
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, extracted.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < extracted.size(); ++i) work(i);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < extracted.size(); i += jobs) work(i);
      });
    }
    for (auto &t : workers) t.join();
  }

  AlignmentResult result;
  for (std::size_t i = 0; i < extracted.size(); ++i) {
    if (best[i] && best[i]->match_distance < threshold) {
      best[i]->extracted = i;
      result.alignments.push_back(*best[i]);
    } else {
      result.unaligned.push_back(i);
    }
  }
  return result;
}

PrecisionReport ExtractionPrecision(const AlignmentResult &result,
                                    std::span<const PairRecord> extracted,
                                    std::span<const std::string> markers) {
  PrecisionReport report;
  for (const auto &m : markers) {
    report.extracted_counts[m] = 0;
    report.aligned_counts[m] = 0;
  }
  for (const auto &p : extracted) {
    ++report.extracted_counts[p.marker];
    report.aligned_counts.try_emplace(p.marker, 0);
  }
  for (const auto &a : result.alignments) ++report.aligned_counts[extracted[a.extracted].marker];
  for (const auto &[marker, n] : report.extracted_counts) {
    report.per_marker[marker] =
        n == 0 ? std::nullopt
               : std::optional<double>(static_cast<double>(report.aligned_counts[marker]) /
                                       static_cast<double>(n));
  }
  if (!extracted.empty()) {
    report.overall = static_cast<double>(result.alignments.size()) /
                     static_cast<double>(extracted.size());
  }
  return report;
}

std::string PreprocessForAlignment(std::string_view text,
                                   const std::set<std::string> *vocab) {
  std::string numbered;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[j])) ||
              ((text[j] == ',' || text[j] == '.') && j + 1 < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[j + 1]))))) {
        ++j;
      }
      numbered += "NUM";
      i = j;
    } else {
      numbered += text[i++];
    }
  }
  if (!vocab) return numbered;
  std::istringstream in(numbered);
  std::string word;
  std::string out;
  while (in >> word) {
    if (!out.empty()) out += ' ';
    out += (word == "NUM" || vocab->count(word)) ? word : "<unk>";
  }
  return out;
}

std::set<std::string> TopWords(std::span<const std::string> texts, std::size_t cap) {
  std::map<std::string, std::size_t> freq;
  for (const auto &t : texts) {
    std::istringstream in(t);
    std::string w;
    while (in >> w) ++freq[w];
  }
  std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  std::set<std::string> out;
  for (std::size_t k = 0; k < items.size() && k < cap; ++k) out.insert(items[k].first);
  return out;
}

std::vector<std::size_t> QualityHistogram(std::span<const Alignment> alignments,
                                          std::size_t bins) {
  std::vector<std::size_t> hist(bins, 0);
  if (bins == 0) return hist;
  for (const auto &a : alignments) {
    auto b = static_cast<std::size_t>(a.quality * static_cast<double>(bins));
    ++hist[std::min(b, bins - 1)];
  }
  return hist;
}

nlohmann::json AlignmentReportJson(const AlignmentResult &result,
                                   const PrecisionReport &precision,
                                   double threshold) {
  nlohmann::json per_marker = nlohmann::json::object();
  for (const auto &[marker, p] : precision.per_marker) {
    per_marker[marker] = {
        {"extracted", precision.extracted_counts.at(marker)},
        {"aligned", precision.aligned_counts.at(marker)},
        {"precision", p ? nlohmann::json(*p) : nlohmann::json(nullptr)},
        {"unalignable", p ? nlohmann::json(1.0 - *p) : nlohmann::json(nullptr)}};
  }
  const auto hist = QualityHistogram(result.alignments);
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t b = 0; b <= hist.size(); ++b) edges.push_back(static_cast<double>(b) / hist.size());
  return {{"threshold", threshold},
          {"aligned", result.alignments.size()},
          {"unaligned", result.unaligned.size()},
          {"overall_precision",
           precision.overall ? nlohmann::json(*precision.overall) : nlohmann::json(nullptr)},
          {"per_marker", per_marker},
          {"quality_histogram", {{"edges", edges}, {"counts", hist}}}};
}

}  // namespace disco
