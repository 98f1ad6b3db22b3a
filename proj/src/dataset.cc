#include "disco/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "disco/corpus.h"

namespace disco {
namespace {

const std::set<std::string> kBooks5 = {"and", "but", "because", "if", "when"};
const std::set<std::string> kBooks8 = {"and",    "but",    "because", "if",
                                       "when",   "before", "though",  "so"};
const std::set<std::string> kBooksAll = {
    "and",  "but", "because", "if",    "when", "before", "though", "so",
    "as",   "while", "after", "still", "also", "then",   "although"};

std::string Trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::string_view ToString(SplitPart part) {
  switch (part) {
    case SplitPart::kTrain: return "train";
    case SplitPart::kValid: return "valid";
    case SplitPart::kTest: return "test";
  }
  return "train";
}

MarkerSet NamedMarkerSet(std::string_view name) {
  const std::string key = ToLower(name);
  if (key == "books5") return {"Books5", kBooks5};
  if (key == "books8") return {"Books8", kBooks8};
  if (key == "all" || key == "books_all" || key == "booksall") return {"BooksALL", kBooksAll};
  throw std::invalid_argument("unknown marker set '" + std::string(name) + "'");
}

MarkerSet ResolveMarkerSet(std::string_view name) {
  try {
    return NamedMarkerSet(name);
  } catch (const std::invalid_argument &) {
  }
  MarkerSet set{"custom", {}};
  std::size_t start = 0;
  const std::string text(name);
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string m = ToLower(Trimmed(std::string_view(text).substr(start, comma - start)));
    if (!m.empty()) set.markers.insert(m);
    start = comma + 1;
  }
  if (set.markers.empty()) {
    throw std::invalid_argument("empty marker set '" + text + "'");
  }
  return set;
}

std::vector<PairRecord> PairDataset::Part(SplitPart part) const {
  if (split.size() != pairs.size()) {
    throw std::logic_error("dataset has no split assignment");
  }
  std::vector<PairRecord> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (split[i] == part) out.push_back(pairs[i]);
  }
  return out;
}

std::uint64_t SplitMix64::Next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::Below(std::uint64_t bound) {
  const std::uint64_t limit = -bound % bound;  // 2^64 mod bound
  while (true) {
    std::uint64_t r = Next();
    if (r >= limit) return r % bound;
  }
}

double SplitMix64::Uniform() {
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

std::vector<std::size_t> SeededPermutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.Below(i)]);
  }
  return perm;
}

PairDataset SubsetMarkers(const PairDataset &ds, const MarkerSet &set) {
  PairDataset out;
  out.marker_set = set.name;
  const bool has_split = ds.split.size() == ds.pairs.size() && !ds.split.empty();
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    if (!set.markers.count(ds.pairs[i].marker)) continue;
    out.pairs.push_back(ds.pairs[i]);
    if (has_split) out.split.push_back(ds.split[i]);
  }
  return out;
}

PairDataset Split(const PairDataset &ds, std::array<double, 3> ratios,
                  std::uint64_t seed) {
  if (ds.pairs.empty()) throw std::invalid_argument("cannot split an empty dataset");
  for (double r : ratios) {
    if (!(r >= 0.0) || r > 1.0) throw std::invalid_argument("split ratios must lie in [0, 1]");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  const std::size_t n = ds.pairs.size();
  // The epsilon absorbs representation error such as 0.05 * 100 = 5.000...01.
  auto cut = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_valid = cut(ratios[1]);
  const std::size_t n_test = cut(ratios[2]);
  const std::size_t n_train = n - n_valid - n_test;

  PairDataset out = ds;
  out.split.assign(n, SplitPart::kTrain);
  const auto perm = SeededPermutation(n, seed);
  for (std::size_t k = 0; k < n; ++k) {
    SplitPart part = k < n_train ? SplitPart::kTrain
                     : k < n_train + n_valid ? SplitPart::kValid
                                             : SplitPart::kTest;
    out.split[perm[k]] = part;
  }
  return out;
}

PairDataset Balance(const PairDataset &ds, std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw std::invalid_argument("balance cap must be >= 1");
  const auto perm = SeededPermutation(ds.pairs.size(), seed);
  std::map<std::string, std::size_t> taken;
  std::vector<bool> keep(ds.pairs.size(), false);
  for (std::size_t idx : perm) {
    std::size_t &n = taken[ds.pairs[idx].marker];
    if (n < cap) {
      keep[idx] = true;
      ++n;
    }
  }
  PairDataset out;
  out.marker_set = ds.marker_set;
  const bool has_split = ds.split.size() == ds.pairs.size() && !ds.split.empty();
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    if (!keep[i]) continue;
    out.pairs.push_back(ds.pairs[i]);
    if (has_split) out.split.push_back(ds.split[i]);
  }
  return out;
}

MarkerStats ComputeMarkerStats(std::span<const PairRecord> pairs) {
  std::map<std::string, std::size_t> counts;
  for (const auto &p : pairs) ++counts[p.marker];
  MarkerStats stats;
  stats.total = pairs.size();
  for (const auto &[marker, count] : counts) {
    stats.rows.push_back({marker, count,
                          100.0 * static_cast<double>(count) / static_cast<double>(stats.total)});
  }
  std::stable_sort(stats.rows.begin(), stats.rows.end(),
                   [](const MarkerCount &a, const MarkerCount &b) {
                     return a.count > b.count;
                   });
  return stats;
}

namespace {

std::string Grouped(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  int k = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it, ++k) {
    if (k > 0 && k % 3 == 0) out.insert(out.begin(), ',');
    out.insert(out.begin(), *it);
  }
  return out;
}

std::string Percent(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", p);
  return buf;
}

}  // namespace

void WriteStatsText(std::ostream &out, const MarkerStats &stats) {
  std::size_t width = 6;
  for (const auto &r : stats.rows) width = std::max(width, r.marker.size());
  auto row = [&](const std::string &name, std::size_t count, const std::string &pct) {
    std::string c = Grouped(count);
    out << name << std::string(width - name.size() + 2, ' ')
        << std::string(c.size() < 12 ? 12 - c.size() : 0, ' ') << c << "  "
        << std::string(pct.size() < 7 ? 7 - pct.size() : 0, ' ') << pct << '\n';
  };
  for (const auto &r : stats.rows) row(r.marker, r.count, Percent(r.percent));
  row("Total", stats.total, stats.total ? "100.00" : "0.00");
}

nlohmann::json StatsToJson(const MarkerStats &stats) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto &r : stats.rows) {
    rows.push_back({{"marker", r.marker},
                    {"count", r.count},
                    {"percent", std::stod(Percent(r.percent))}});
  }
  return {{"markers", rows}, {"total", stats.total}};
}

std::string SanitizeField(std::string_view text) {
  std::string out(text);
  for (char &c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

void WritePairsTsv(std::ostream &out, std::span<const PairRecord> pairs,
                   bool with_doc_id) {
  for (const auto &p : pairs) {
    out << SanitizeField(p.s1) << '\t' << SanitizeField(p.s2) << '\t'
        << SanitizeField(p.marker);
    if (with_doc_id) out << '\t' << SanitizeField(p.doc_id);
    out << '\n';
  }
}

std::vector<PairRecord> ReadPairsTsv(std::istream &in) {
  std::vector<PairRecord> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3 && fields.size() != 4) {
      throw std::runtime_error("pairs line " + std::to_string(lineno) +
                               ": expected 3 or 4 tab-separated fields");
    }
    PairRecord rec{fields[0], fields[1], fields[2], fields.size() == 4 ? fields[3] : ""};
    if (rec.marker.empty()) {
      throw std::runtime_error("pairs line " + std::to_string(lineno) + ": empty label");
    }
    pairs.push_back(std::move(rec));
  }
  return pairs;
}

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexDigest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace disco
