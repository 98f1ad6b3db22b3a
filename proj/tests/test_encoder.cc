#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "disco/dataset.h"
#include "disco/encoder.h"
#include "doctest.h"
#include "support/oracles.h"

using namespace disco;

namespace {

EncoderDims Tiny(std::size_t h = 4, std::size_t e = 4, std::size_t v = 12, std::size_t k = 3) {
  EncoderDims d;
  d.vocab = v;
  d.embed = e;
  d.hidden = h;
  d.classes = k;
  return d;
}

std::vector<PairExample> RandomBatch(std::size_t n, std::size_t vocab, std::size_t classes,
                                     std::uint64_t seed, int max_len = 6) {
  SplitMix64 rng(seed);
  std::vector<PairExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairExample ex;
    const int l1 = 1 + static_cast<int>(rng.Below(max_len));
    const int l2 = 1 + static_cast<int>(rng.Below(max_len));
    for (int t = 0; t < l1; ++t) ex.s1.push_back(static_cast<int>(rng.Below(vocab)));
    for (int t = 0; t < l2; ++t) ex.s2.push_back(static_cast<int>(rng.Below(vocab)));
    ex.label = static_cast<int>(rng.Below(classes));
    out.push_back(ex);
  }
  return out;
}

double MaxAbsDiff(const EncoderParams &a, const EncoderParams &b) {
  std::vector<double> va, vb;
  VisitTensors(a, [&](const char *, const double *d, std::size_t n) { va.insert(va.end(), d, d + n); });
  VisitTensors(b, [&](const char *, const double *d, std::size_t n) { vb.insert(vb.end(), d, d + n); });
  REQUIRE(va.size() == vb.size());
  double m = 0;
  for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
  return m;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("vocabulary") {
    const std::vector<std::string> texts{"b a a", "c a b"};
    const auto v = WordVocab::Build(texts);
    CHECK(v.words() == std::vector<std::string>{"<unk>", "a", "b", "c"});
    CHECK(v.Id("zzz") == WordVocab::kUnk);
    CHECK(v.Ids("a c q") == std::vector<int>{1, 3, 0});
    CHECK(WordVocab::Build(texts, 2).size() == 3);
    CHECK(WordVocab::Build(texts).Hash() == v.Hash());
  }

  TEST_CASE("single token: pooled state equals the two final states") {
    const auto p = InitParams(Tiny(), 3);
    const std::vector<int> ids{5};
    const auto tr = EncodeTraced(ids, p);
    CHECK(tr.pooled.size() == 8);
    for (int j = 0; j < 4; ++j) {
      CHECK(tr.pooled(j) == tr.forward.hiddens(j, 0));
      CHECK(tr.pooled(4 + j) == tr.backward.hiddens(j, 0));
    }
  }

  TEST_CASE("max-pool dominates every timestep and picks the reported argmax") {
    const auto p = InitParams(Tiny(5), 8);
    const std::vector<int> ids{1, 4, 2, 9, 9, 3, 0};
    const auto tr = EncodeTraced(ids, p);
    for (Eigen::Index j = 0; j < tr.states.rows(); ++j) {
      for (Eigen::Index t = 0; t < tr.states.cols(); ++t) CHECK(tr.pooled(j) >= tr.states(j, t));
      CHECK(tr.pooled(j) == tr.states(j, tr.argmax[j]));
    }
    CHECK(Encode(ids, p) == tr.pooled);
  }

  TEST_CASE("matches the scalar-loop oracle") {
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto p = InitParams(Tiny(6, 5, 20), seed);
      const auto batch = RandomBatch(5, 20, 3, seed + 10, 12);
      for (const auto &ex : batch) {
        const auto fast = Encode(ex.s1, p);
        const auto slow = disco::testing::ScalarEncode(ex.s1, p);
        REQUIRE(slow.size() == static_cast<std::size_t>(fast.size()));
        for (std::size_t j = 0; j < slow.size(); ++j) CHECK(std::abs(fast(j) - slow[j]) < 1e-12);
      }
    }
  }

  TEST_CASE("bad inputs") {
    const auto p = InitParams(Tiny(), 1);
    CHECK_THROWS_AS(Encode(std::vector<int>{}, p), std::invalid_argument);
    CHECK_THROWS_AS(Encode(std::vector<int>{12}, p), std::invalid_argument);
    CHECK_THROWS_AS(MakePairFeatures(VectorXd::Zero(3), VectorXd::Zero(4)), std::invalid_argument);
  }

  TEST_CASE("pair feature identities") {
    VectorXd u(3), v(3);
    u << 1, -2, 3;
    v << 0.5, 4, -1;
    const auto f = MakePairFeatures(u, v);
    CHECK(f.combined.size() == 15);
    CHECK(f.combined.segment(0, 3) == u);
    CHECK(f.combined.segment(3, 3) == v);
    for (int i = 0; i < 3; ++i) {
      CHECK(f.avg(i) == (u(i) + v(i)) / 2);
      CHECK(f.sub(i) == u(i) - v(i));
      CHECK(f.mul(i) == u(i) * v(i));
    }
    const auto same = MakePairFeatures(u, u);
    CHECK(same.sub.isZero(0));
    CHECK(same.avg == u);
    const auto swapped = MakePairFeatures(v, u);
    CHECK(swapped.sub == -f.sub);
    CHECK(swapped.mul == f.mul);
  }

  TEST_CASE("zero output layer gives uniform probabilities and loss ln K") {
    auto p = InitParams(Tiny(4, 4, 12, 5), 2);
    p.out_weight.setZero();
    p.out_bias.setZero();
    const auto batch = RandomBatch(6, 12, 5, 4);
    const auto f = MakePairFeatures(Encode(batch[0].s1, p), Encode(batch[0].s2, p));
    const auto probs = Classify(f.combined, p);
    for (Eigen::Index i = 0; i < probs.size(); ++i) CHECK(probs(i) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(Loss(batch, p) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }

  TEST_CASE("classification is invariant to a constant logit shift") {
    auto p = InitParams(Tiny(), 5);
    const auto batch = RandomBatch(1, 12, 3, 6);
    const auto f = MakePairFeatures(Encode(batch[0].s1, p), Encode(batch[0].s2, p));
    const auto a = Classify(f.combined, p);
    p.out_bias.array() += 50.0;
    const auto b = Classify(f.combined, p);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("duplicating the batch leaves loss and gradient unchanged") {
    const auto p = InitParams(Tiny(), 7);
    const auto batch = RandomBatch(4, 12, 3, 8);
    auto doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    const auto a = LossAndGradients(batch, p);
    const auto b = LossAndGradients(doubled, p);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
    CHECK(MaxAbsDiff(a.grad, b.grad) < 1e-12);
  }

  TEST_CASE("analytic gradients agree with central differences") {
    for (std::size_t h : {2, 4}) {
      const auto p = InitParams(Tiny(h), 11 + h);
      const auto batch = RandomBatch(4, 12, 3, 21 + h);
      const auto r = GradCheck(p, batch);
      CHECK(r.coordinates == p.NumValues());
      CHECK(r.max_relative_error < 1e-4);
    }
  }

  TEST_CASE("gradient check is stable when epsilon halves") {
    const auto p = InitParams(Tiny(3), 4);
    const auto batch = RandomBatch(3, 12, 3, 5);
    const auto a = GradCheck(p, batch, 1e-5, 200, 3);
    const auto b = GradCheck(p, batch, 5e-6, 200, 3);
    CHECK(a.coordinates == 200);
    CHECK(a.max_relative_error < 1e-4);
    CHECK(b.max_relative_error < 1e-4);
  }

  TEST_CASE("clipping rescales to the max norm") {
    const auto p = InitParams(Tiny(), 9);
    auto g = p.ZerosLike();
    g.proj_bias.setConstant(0.0);
    g.proj_bias(0) = 30.0;
    g.out_bias(0) = 40.0;
    g.embedding(0, 0) = 1000.0;  // frozen: ignored
    CHECK(GradientNorm(g, false) == doctest::Approx(50.0));
    const double before = ClipGradients(g, 5.0, false);
    CHECK(before == doctest::Approx(50.0));
    CHECK(GradientNorm(g, false) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(g.proj_bias(0) == doctest::Approx(3.0));
    auto small = p.ZerosLike();
    small.out_bias(0) = 1.0;
    ClipGradients(small, 5.0, false);
    CHECK(small.out_bias(0) == 1.0);
  }

  TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.Validate());
    c.initial_lr = 0;
    CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
    c = {};
    c.anneal_factor = 0.0;
    CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
    c = {};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
  }

  TEST_CASE("training is deterministic and the log follows the annealing rule") {
    const auto train = RandomBatch(60, 12, 3, 30);
    const auto valid = RandomBatch(20, 12, 3, 31);
    TrainConfig c;
    c.dims = Tiny();
    c.max_epochs = 6;
    c.batch_size = 8;
    const auto a = Train(train, valid, c);
    const auto b = Train(train, valid, c);
    CHECK(MaxAbsDiff(a.params, b.params) == 0.0);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      CHECK(a.log[i].train_loss == b.log[i].train_loss);
      CHECK(a.log[i].val_acc == b.log[i].val_acc);
    }
    CHECK(a.log.front().lr == 0.1);
    for (std::size_t i = 1; i < a.log.size(); ++i) {
      const bool dropped = a.log[i - 1].val_acc < (i >= 2 ? a.log[i - 2].val_acc : -1.0);
      const double expect = dropped ? a.log[i - 1].lr / 5.0 : a.log[i - 1].lr;
      CHECK(a.log[i].lr == doctest::Approx(expect).epsilon(1e-15));
    }
    double best = -1;
    for (const auto &e : a.log) best = std::max(best, e.val_acc);
    CHECK(a.best_val_acc == best);
    CHECK(Accuracy(valid, a.params) == doctest::Approx(best));
  }

  TEST_CASE("a single step depends on the batch contents, not their order") {
    const auto p = InitParams(Tiny(), 13);
    auto batch = RandomBatch(5, 12, 3, 14);
    const auto a = LossAndGradients(batch, p);
    std::reverse(batch.begin(), batch.end());
    const auto b = LossAndGradients(batch, p);
    CHECK(std::abs(a.loss - b.loss) < 1e-12);
    CHECK(MaxAbsDiff(a.grad, b.grad) < 1e-12);
  }

  TEST_CASE("checkpoint round trip") {
    Checkpoint ck;
    ck.params = InitParams(Tiny(3, 2, 5, 2), 17);
    ck.vocab = WordVocab::FromWords({"<unk>", "a", "b", "c", "d"});
    ck.labels = {"and", "but"};
    ck.config = {{"seed", 17}};
    const auto dir = std::filesystem::temp_directory_path() / "disco_ckpt_test";
    std::filesystem::create_directories(dir);
    SaveCheckpoint((dir / "enc").string(), ck);
    const auto back = LoadCheckpoint((dir / "enc").string());
    CHECK(MaxAbsDiff(back.params, ck.params) == 0.0);
    CHECK(back.vocab.words() == ck.vocab.words());
    CHECK(back.labels == ck.labels);
    std::filesystem::resize_file(dir / "enc.bin", 16);
    CHECK_THROWS(LoadCheckpoint((dir / "enc").string()));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("pretrained rows are loaded for known words only") {
    auto p = InitParams(Tiny(2, 2, 3, 2), 1);
    const auto vocab = WordVocab::FromWords({"<unk>", "a", "b"});
    const double keep = p.embedding(0, 2);
    std::istringstream in("a 0.5 -0.5\nzz 9 9\n");
    CHECK(LoadEmbeddings(in, vocab, p) == 1);
    CHECK(p.embedding(0, 1) == 0.5);
    CHECK(p.embedding(1, 1) == -0.5);
    CHECK(p.embedding(0, 2) == keep);
  }
}
