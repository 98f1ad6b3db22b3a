#include <fstream>
#include <map>
#include <sstream>

#include "disco/dataset.h"
#include "disco/extract.h"
#include "doctest.h"

using namespace disco;

namespace {

PairDataset Numbered(std::size_t n, const std::vector<std::string> &markers = {"and"}) {
  PairDataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    ds.pairs.push_back({"first " + std::to_string(i), "second " + std::to_string(i),
                        markers[i % markers.size()], ""});
  }
  return ds;
}

std::map<std::string, std::size_t> Counts(const std::vector<PairRecord> &pairs) {
  std::map<std::string, std::size_t> c;
  for (const auto &p : pairs) ++c[p.marker];
  return c;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("named marker sets") {
    const auto b5 = NamedMarkerSet("books5");
    CHECK(b5.markers == std::set<std::string>{"and", "but", "because", "if", "when"});
    const auto b8 = NamedMarkerSet("Books8");
    CHECK(b8.markers.size() == 8);
    for (const char *m : {"before", "though", "so"}) CHECK(b8.markers.count(m));
    CHECK(NamedMarkerSet("all").markers.size() == 15);
    CHECK_THROWS_AS(NamedMarkerSet("books6"), std::invalid_argument);
    CHECK(ResolveMarkerSet("because,so").markers == std::set<std::string>{"because", "so"});
    CHECK_THROWS_AS(ResolveMarkerSet(""), std::invalid_argument);
  }

  TEST_CASE("Books 5 subset drops so pairs and partitions the input") {
    std::ifstream in(DISCO_TEST_DATA "/mini_corpus.conllu");
    const auto docs = ParseConllu(in);
    const auto r = ExtractCorpus(docs, DefaultPatterns(), ExtractionConfig{});
    PairDataset all;
    for (const auto &p : r.accepted) all.pairs.push_back({p.s1, p.s2, p.marker, p.doc_id});
    REQUIRE(Counts(all.pairs)["so"] > 0);
    const auto b5 = SubsetMarkers(all, NamedMarkerSet("books5"));
    CHECK(Counts(b5.pairs).count("so") == 0);
    CHECK(b5.marker_set == "Books5");
    std::size_t outside = 0;
    for (const auto &p : all.pairs) outside += !NamedMarkerSet("books5").markers.count(p.marker);
    CHECK(b5.pairs.size() + outside == all.pairs.size());
    CHECK(SubsetMarkers(all, NamedMarkerSet("all")).pairs == all.pairs);
  }

  TEST_CASE("split sizes") {
    auto sizes = [](const PairDataset &d) {
      return std::array<std::size_t, 3>{d.Part(SplitPart::kTrain).size(), d.Part(SplitPart::kValid).size(),
                                        d.Part(SplitPart::kTest).size()};
    };
    CHECK(sizes(Split(Numbered(100), {0.9, 0.05, 0.05}, 7)) == std::array<std::size_t, 3>{90, 5, 5});
    CHECK(sizes(Split(Numbered(101), {0.9, 0.05, 0.05}, 7)) == std::array<std::size_t, 3>{91, 5, 5});
    CHECK(sizes(Split(Numbered(19), {0.9, 0.05, 0.05}, 7)) == std::array<std::size_t, 3>{19, 0, 0});
    CHECK_THROWS_AS(Split(PairDataset{}, {0.9, 0.05, 0.05}, 7), std::invalid_argument);
    CHECK_THROWS_AS(Split(Numbered(10), {0.9, 0.05, 0.06}, 7), std::invalid_argument);
    CHECK_THROWS_AS(Split(Numbered(10), {1.1, -0.05, -0.05}, 7), std::invalid_argument);
  }

  TEST_CASE("split is a reproducible partition") {
    const auto ds = Numbered(257, {"and", "but", "so"});
    const auto a = Split(ds, {0.9, 0.05, 0.05}, 42);
    const auto b = Split(ds, {0.9, 0.05, 0.05}, 42);
    const auto c = Split(ds, {0.9, 0.05, 0.05}, 43);
    CHECK(a.split == b.split);
    CHECK(a.split != c.split);
    REQUIRE(a.split.size() == ds.pairs.size());
    std::multiset<std::string> joined;
    for (auto part : {SplitPart::kTrain, SplitPart::kValid, SplitPart::kTest}) {
      for (const auto &p : a.Part(part)) joined.insert(p.s1);
    }
    std::multiset<std::string> orig;
    for (const auto &p : ds.pairs) orig.insert(p.s1);
    CHECK(joined == orig);
  }

  TEST_CASE("seeded permutation is a permutation") {
    for (std::size_t n : {0, 1, 2, 10, 1000}) {
      auto p = SeededPermutation(n, 9);
      std::sort(p.begin(), p.end());
      for (std::size_t i = 0; i < n; ++i) CHECK(p[i] == i);
    }
    CHECK(SeededPermutation(50, 1) == SeededPermutation(50, 1));
    CHECK(SeededPermutation(50, 1) != SeededPermutation(50, 2));
  }

  TEST_CASE("balance caps each class") {
    PairDataset ds = Numbered(300, {"and", "and", "and", "but", "so", "so"});
    const auto bal = Balance(ds, 40, 1);
    for (const auto &[m, n] : Counts(bal.pairs)) CHECK(n <= 40);
    CHECK(Counts(bal.pairs)["but"] == 40);
    CHECK(Balance(ds, 1000, 1).pairs == ds.pairs);
    const auto one = Balance(ds, 1, 1);
    CHECK(one.pairs.size() == 3);
    CHECK(Balance(bal, 40, 1).pairs == bal.pairs);
    // A class exactly at the cap stays intact (13,421: the rarest marker
    // count in a full-size extraction).
    PairDataset still;
    for (std::size_t i = 0; i < 13421; ++i) still.pairs.push_back({"a", "b", "still", ""});
    for (std::size_t i = 0; i < 20000; ++i) still.pairs.push_back({"a", "b", "but", ""});
    const auto capped = Balance(still, 13421, 3);
    CHECK(Counts(capped.pairs)["still"] == 13421);
    CHECK(Counts(capped.pairs)["but"] == 13421);
  }

  TEST_CASE("marker stats table") {
    std::vector<PairRecord> pairs;
    for (int i = 0; i < 3; ++i) pairs.push_back({"a", "b", "but", ""});
    pairs.push_back({"a", "b", "so", ""});
    const auto st = ComputeMarkerStats(pairs);
    REQUIRE(st.rows.size() == 2);
    CHECK(st.rows[0].marker == "but");
    CHECK(st.rows[0].percent == doctest::Approx(75.0));
    std::ostringstream out;
    WriteStatsText(out, st);
    CHECK(out.str().find("75.00") != std::string::npos);
    CHECK(out.str().find("Total") != std::string::npos);

    const auto single = ComputeMarkerStats(std::vector<PairRecord>{{"a", "b", "and", ""}});
    CHECK(single.rows[0].percent == doctest::Approx(100.0));
  }

  TEST_CASE("stats text groups thousands and rounds percentages") {
    // A but row of 1,028,995 out of 4,706,292 pairs.
    MarkerStats st;
    st.total = 4706292;
    st.rows.push_back({"but", 1028995, 100.0 * 1028995 / 4706292});
    std::ostringstream out;
    WriteStatsText(out, st);
    CHECK(out.str().find("1,028,995") != std::string::npos);
    CHECK(out.str().find("21.86") != std::string::npos);
    CHECK(out.str().find("4,706,292") != std::string::npos);
  }

  TEST_CASE("rounded percentages sum to 100") {
    std::vector<PairRecord> pairs;
    const std::vector<std::pair<std::string, int>> mix{{"a", 7}, {"b", 13}, {"c", 29}, {"d", 1}, {"e", 3}};
    for (const auto &[m, n] : mix) {
      for (int i = 0; i < n; ++i) pairs.push_back({"x", "y", m, ""});
    }
    const auto st = ComputeMarkerStats(pairs);
    double sum = 0;
    for (const auto &r : st.rows) sum += std::round(r.percent * 100) / 100;
    CHECK(std::abs(sum - 100.0) <= 0.1);
  }

  TEST_CASE("TSV round trip and sanitizing") {
    std::vector<PairRecord> pairs{{"tab\there", "new\nline", "so", ""}, {"plain", "text", "but", "doc3"}};
    std::ostringstream out;
    WritePairsTsv(out, pairs, true);
    std::istringstream in(out.str());
    const auto back = ReadPairsTsv(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].s1 == "tab here");
    CHECK(back[0].s2 == "new line");
    CHECK(back[1] == pairs[1]);
    std::vector<PairRecord> clean{{"a b", "c d", "so", ""}};
    std::ostringstream o2;
    WritePairsTsv(o2, clean);
    std::istringstream i2(o2.str());
    CHECK(ReadPairsTsv(i2) == clean);
    std::istringstream bad("only\ttwo\n");
    CHECK_THROWS_AS(ReadPairsTsv(bad), std::runtime_error);
  }

  TEST_CASE("checksum") {
    CHECK(Fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(HexDigest(Fnv1a64("a")) == "af63dc4c8601ec8c");
  }
}
