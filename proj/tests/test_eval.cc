#include <cmath>
#include <random>
#include <sstream>

#include "disco/eval.h"
#include "doctest.h"
#include "support/oracles.h"

using namespace disco;

namespace {

std::vector<std::string> RandomLabels(std::mt19937_64 &rng, std::size_t n, int k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('a' + rng() % k)));
  return out;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("per-class PRF hand example") {
    const std::vector<std::string> gold{"a", "a", "b"}, pred{"a", "b", "b"};
    const auto r = PerClassPrf(gold, pred);
    REQUIRE(r.classes.size() == 2);
    CHECK(r.classes[0].precision == 1.0);
    CHECK(r.classes[0].recall == 0.5);
    CHECK(r.classes[0].f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.classes[1].precision == 0.5);
    CHECK(r.classes[1].recall == 1.0);
    CHECK(r.macro_f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(PerClassPrf(gold, std::vector<std::string>{"a"}), std::invalid_argument);
  }

  TEST_CASE("never-predicted class gets zero precision") {
    const std::vector<std::string> gold{"a", "b"}, pred{"a", "a"};
    const auto r = PerClassPrf(gold, pred);
    CHECK(r.classes[1].precision == 0.0);
    CHECK(r.classes[1].f1 == 0.0);
  }

  TEST_CASE("PRF agrees with the brute-force oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const auto gold = RandomLabels(rng, 1 + rng() % 40, 5);
      const auto pred = RandomLabels(rng, gold.size(), 5);
      const auto r = PerClassPrf(gold, pred);
      const auto o = disco::testing::BruteForcePrf(gold, pred);
      REQUIRE(r.classes.size() == o.classes.size());
      for (const auto &c : r.classes) {
        const auto &oc = o.classes.at(c.label);
        CHECK(std::abs(c.precision - oc.precision) < 1e-12);
        CHECK(std::abs(c.recall - oc.recall) < 1e-12);
        CHECK(std::abs(c.f1 - oc.f1) < 1e-12);
        CHECK(c.support == oc.support);
      }
      CHECK(std::abs(r.macro_f1 - o.macro_f1) < 1e-12);
      CHECK(std::abs(r.weighted_f1 - o.weighted_f1) < 1e-12);
      CHECK(std::abs(r.accuracy - o.accuracy) < 1e-12);
    }
  }

  TEST_CASE("confusion counts and ordering") {
    const std::vector<std::string> gold{"a", "a", "b", "c", "c", "c"};
    const std::vector<std::string> pred{"a", "c", "b", "c", "a", "c"};
    std::map<std::string, std::size_t> freq{{"a", 2}, {"b", 1}, {"c", 3}, {"d", 1}};
    CHECK(OrderByAscendingFrequency(freq) == std::vector<std::string>{"b", "d", "a", "c"});
    const auto cm = Confusion(gold, pred, {"b", "a", "c"});
    CHECK(cm.Total() == 6);
    CHECK(cm.Trace() == 4);
    CHECK(cm.counts[1][2] == 1);
    CHECK(cm.counts[2][1] == 1);
    for (std::size_t i = 0; i < 3; ++i) {
      double row = 0;
      for (double c : cm.counts[i]) row += c;
      CHECK(row == static_cast<double>(std::count(gold.begin(), gold.end(), cm.classes[i])));
    }
    const auto norm = cm.RowNormalized();
    for (const auto &row : norm) {
      double s = 0;
      for (double c : row) s += c;
      CHECK(s == doctest::Approx(1.0));
    }
    CHECK(cm.LogDisplay()[0][1] == doctest::Approx(std::log(1e-4)));
    CHECK_THROWS_AS(Confusion(gold, pred, {"a", "b"}), std::invalid_argument);
    std::ostringstream csv;
    WriteConfusionCsv(csv, cm);
    CHECK(csv.str().rfind("actual\\predicted,b,a,c\n", 0) == 0);
  }

  TEST_CASE("line fit against normal equations") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x, y;
      for (int i = 0; i < 30; ++i) {
        x.push_back(g(rng));
        y.push_back(1.5 - 0.7 * x.back() + g(rng));
      }
      const auto f = FitLine(x, y);
      const auto o = disco::testing::NormalEquations(x, y);
      CHECK(std::abs(f.slope - o.slope) < 1e-9);
      CHECK(std::abs(f.intercept - o.intercept) < 1e-9);
      CHECK(std::abs(f.r2 - o.r2) < 1e-9);
    }
    CHECK_THROWS_AS(FitLine(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), AnalysisError);
    CHECK_THROWS_AS(FitLine(std::vector<double>{1, 2}, std::vector<double>{1, 2}), AnalysisError);
  }

  TEST_CASE("residual analysis: exact construction gives R^2 = 1") {
    // Unbalanced cells = log(freq of predicted class) * 0.1 + residual; the
    // balanced cells are an exact affine function of that residual.
    const std::vector<std::string> classes{"a", "b", "c", "d"};
    std::map<std::string, double> freq{{"a", 10}, {"b", 40}, {"c", 90}, {"d", 300}};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.01, 0.05);
    ConfusionMatrix unb{classes, std::vector<std::vector<double>>(4, std::vector<double>(4, 0))};
    ConfusionMatrix bal = unb;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        if (i == j) continue;
        unb.counts[i][j] = 0.02 * std::log(freq[classes[j]]) + u(rng);
      }
      unb.counts[i][i] = 1.0;
    }
    // Fit step one once to get the residuals, then build balanced cells from them.
    std::vector<double> x, y;
    const auto un = unb.RowNormalized();
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        if (i != j) {
          x.push_back(std::log(freq[classes[j]]));
          y.push_back(un[i][j]);
        }
    const auto step1 = disco::testing::NormalEquations(x, y);
    std::size_t k = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      double off = 0;
      for (std::size_t j = 0; j < 4; ++j)
        if (i != j) {
          bal.counts[i][j] = 0.1 + 0.5 * step1.residuals[k++];
          off += bal.counts[i][j];
        }
      bal.counts[i][i] = 1.0 - off;
    }
    const auto r = FrequencyResidualAnalysis(unb, bal, freq);
    CHECK(r.cells == 12);
    CHECK(r.r2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.residual_fit.slope == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(FrequencyResidualAnalysis(unb, bal, freq, true).cells == 16);
    freq["a"] = 0;
    CHECK_THROWS_AS(FrequencyResidualAnalysis(unb, bal, freq), AnalysisError);
  }

  TEST_CASE("residual analysis: independent noise gives small R^2") {
    std::vector<std::string> classes;
    std::map<std::string, double> freq;
    for (int i = 0; i < 15; ++i) {
      classes.push_back("m" + std::to_string(10 + i));
      freq[classes.back()] = std::pow(1.6, i) * 100;
    }
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    ConfusionMatrix unb{classes, std::vector<std::vector<double>>(15, std::vector<double>(15))};
    ConfusionMatrix bal = unb;
    for (auto *m : {&unb, &bal})
      for (auto &row : m->counts)
        for (double &c : row) c = u(rng);
    const auto r = FrequencyResidualAnalysis(unb, bal, freq);
    CHECK(r.cells == 210);
    CHECK(r.r2 < 0.05);
  }

  TEST_CASE("pair task: separable cue words") {
    std::vector<PairRecord> train, test;
    for (int i = 0; i < 40; ++i) {
      const std::string lab = i % 2 ? "pos" : "neg";
      const std::string cue = i % 2 ? "sunny" : "rainy";
      (i < 30 ? train : test).push_back({"the day was " + cue, "we went out " + std::to_string(i), lab, ""});
    }
    PairTaskOptions opt;
    opt.hyper.epochs = 50;
    const auto r = PairTaskEval(train, test, opt);
    CHECK(r.metrics.accuracy == 1.0);
    CHECK(r.majority_accuracy == 0.5);
    CHECK(r.unseen_label_errors == 0);
    opt.classifier = Classifier::kMajority;
    const auto m = PairTaskEval(train, test, opt);
    CHECK(m.metrics.accuracy == doctest::Approx(m.majority_accuracy));
  }

  TEST_CASE("pair task: unseen test labels are counted and appended") {
    std::vector<PairRecord> train{{"a b", "c d", "x", ""}, {"a b", "c d", "x", ""}, {"e f", "g h", "y", ""}};
    std::vector<PairRecord> test{{"a b", "c d", "z", ""}, {"e f", "g h", "y", ""}};
    const auto r = PairTaskEval(train, test, PairTaskOptions{});
    CHECK(r.unseen_label_errors == 1);
    CHECK(r.confusion.classes.back() == "z");
    CHECK(r.confusion.classes.front() == "y");
    CHECK_THROWS_AS(PairTaskEval({}, test, PairTaskOptions{}), std::invalid_argument);
  }

  TEST_CASE("pair task: eleven-label toy task") {
    std::vector<PairRecord> train, test;
    for (int i = 0; i < 11 * 12; ++i) {
      const int k = i % 11;
      const std::string lab = "L" + std::to_string(k);
      (i < 11 * 10 ? train : test).push_back({"tok" + std::to_string(k) + " filler", "other words", lab, ""});
    }
    PairTaskOptions opt;
    opt.orders = {1};
    opt.hyper.epochs = 100;
    const auto r = PairTaskEval(train, test, opt);
    CHECK(r.metrics.classes.size() == 11);
    CHECK(r.metrics.accuracy == 1.0);
    const auto j = ReportToJson(r);
    CHECK(j.contains("majority_baseline"));
  }
}
