#include "synthetic.h"

#include <array>
#include <cctype>

namespace disco::testing {
namespace {

const std::array<const char *, 8> kSubjects = {"he", "she", "they", "we", "it", "you", "i", "everyone"};
const std::array<const char *, 12> kVerbs = {"saw",   "took",  "found", "made",  "kept",  "liked",
                                             "moved", "wrote", "heard", "built", "threw", "paid"};
const std::array<const char *, 24> kNouns = {
    "box",   "river", "garden", "letter", "horse", "window", "bridge", "coffee",
    "paper", "road",  "winter", "table",  "song",  "market", "teacher", "ship",
    "lamp",  "stone", "forest", "ticket", "door",  "castle", "bottle",  "field"};
const std::array<const char *, 10> kAdjs = {"red", "old", "quiet", "small", "bright",
                                            "heavy", "new", "long", "green", "cold"};
const std::array<const char *, 30> kFiller = {
    "the",  "a",    "man",    "woman", "dog",   "cat",   "house", "tree",  "walked", "ran",
    "sat",  "on",   "in",     "big",   "small", "happy", "sad",   "day",   "night",  "car",
    "road", "city", "looked", "told",  "she",   "he",    "it",    "they",  "saw",    "went"};
const std::array<const char *, 3> kCues = {"alpha", "bravo", "charlie"};
const std::array<const char *, 3> kCueLabels = {"and", "but", "because"};

template <typename A>
std::string Pick(SplitMix64 &rng, const A &arr) {
  return arr[rng.Below(arr.size())];
}

// Appends a clause; returns the global index of its head.
int AppendClause(std::vector<Token> &toks, const Clause &c, int head_global, const std::string &head_rel) {
  const int base = static_cast<int>(toks.size());
  int head_index = 0;
  for (std::size_t i = 0; i < c.words.size(); ++i) {
    if (c.heads[i] < 0) head_index = base + static_cast<int>(i) + 1;
  }
  for (std::size_t i = 0; i < c.words.size(); ++i) {
    Token t;
    t.index = base + static_cast<int>(i) + 1;
    t.form = c.words[i];
    t.upos = c.upos[i];
    if (c.heads[i] < 0) {
      t.head = head_global;
      t.deprel = head_rel;
    } else {
      t.head = base + c.heads[i] + 1;
      t.deprel = c.deprels[i];
    }
    toks.push_back(t);
  }
  return head_index;
}

Token Tok(int index, std::string form, std::string upos, int head, std::string rel) {
  return Token{index, std::move(form), std::move(upos), head, std::move(rel)};
}

}  // namespace

DepSentence MakeSentence(const std::vector<Row> &rows, std::string sent_id) {
  std::vector<Token> toks;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &[form, upos, head, rel] = rows[i];
    toks.push_back(Tok(static_cast<int>(i) + 1, form, upos, head, rel));
  }
  return DepSentence(std::move(toks), std::move(sent_id));
}

std::string Clause::Text() const {
  std::string out;
  for (const auto &w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

Clause RandomClause(SplitMix64 &rng, int words, bool with_verb) {
  Clause c;
  if (words <= 0) words = 1;
  if (words == 1) {
    c.words = {with_verb ? Pick(rng, kVerbs) : Pick(rng, kNouns)};
    c.upos = {with_verb ? "VERB" : "NOUN"};
    c.heads = {-1};
    c.deprels = {""};
    return c;
  }
  c.words.push_back(Pick(rng, kSubjects));
  c.upos.push_back("PRON");
  c.heads.push_back(1);
  c.deprels.push_back("nsubj");
  c.words.push_back(with_verb ? Pick(rng, kVerbs) : Pick(rng, kNouns));
  c.upos.push_back(with_verb ? "VERB" : "NOUN");
  c.heads.push_back(-1);
  c.deprels.push_back("");
  // Remaining words: "adj noun" groups hanging off the head.
  int left = words - 2;
  while (left > 0) {
    if (left >= 2 && rng.Below(2) == 0) {
      const int noun = static_cast<int>(c.words.size()) + 1;
      c.words.push_back(Pick(rng, kAdjs));
      c.upos.push_back("ADJ");
      c.heads.push_back(noun);
      c.deprels.push_back("amod");
      left -= 1;
    }
    c.words.push_back(Pick(rng, kNouns));
    c.upos.push_back("NOUN");
    c.heads.push_back(1);
    c.deprels.push_back("obj");
    left -= 1;
  }
  return c;
}

namespace {
std::string MarkerRel(const MarkerPattern &p, SplitMix64 *rng) {
  const bool coord = p.marker == "and" || p.marker == "but";
  if (coord && p.marker_attach == "mark" && rng && rng->Below(2) == 0) return "cc";
  return p.marker_attach;
}
}  // namespace

DepSentence ForwardSentence(const Clause &s1, const MarkerPattern &p, const Clause &s2,
                            std::string marker_form) {
  std::vector<Token> toks;
  const int h1 = AppendClause(toks, s1, 0, "root");
  const int marker_index = static_cast<int>(toks.size()) + 1;
  toks.push_back(Tok(marker_index, marker_form, "SCONJ", 0, p.marker_attach));
  const int h2 = AppendClause(toks, s2, h1, p.s2_attach);
  toks[marker_index - 1].head = h2;
  toks.push_back(Tok(static_cast<int>(toks.size()) + 1, ".", "PUNCT", h1, "punct"));
  return DepSentence(std::move(toks), "fwd");
}

DepSentence PreposedSentence(const Clause &s1, const MarkerPattern &p, const Clause &s2,
                             std::string marker_form) {
  std::vector<Token> toks;
  toks.push_back(Tok(1, marker_form, "SCONJ", 0, p.marker_attach));
  const int h2 = AppendClause(toks, s2, 0, p.s2_attach);
  toks[0].head = h2;
  const int comma = static_cast<int>(toks.size()) + 1;
  toks.push_back(Tok(comma, ",", "PUNCT", h2, "punct"));
  const int h1 = AppendClause(toks, s1, 0, "root");
  toks[h2 - 1].head = h1;
  toks.push_back(Tok(static_cast<int>(toks.size()) + 1, ".", "PUNCT", h1, "punct"));
  return DepSentence(std::move(toks), "pre");
}

DepSentence IpsSentence(const MarkerPattern &p, const Clause &s2, std::string marker_form) {
  std::vector<Token> toks;
  toks.push_back(Tok(1, marker_form, "SCONJ", 0, p.marker_attach));
  const int h2 = AppendClause(toks, s2, 0, "root");
  toks[0].head = h2;
  toks.push_back(Tok(static_cast<int>(toks.size()) + 1, ".", "PUNCT", h2, "punct"));
  return DepSentence(std::move(toks), "ips");
}

DepSentence PlainSentence(const Clause &c, const std::string &distractor) {
  std::vector<Token> toks;
  const int h = AppendClause(toks, c, 0, "root");
  if (!distractor.empty()) {
    // Attach the marker word to the last word of the clause as a plain adverb.
    const int last = static_cast<int>(toks.size());
    toks.push_back(Tok(last + 1, distractor, "ADV", last, "advmod"));
  }
  toks.push_back(Tok(static_cast<int>(toks.size()) + 1, ".", "PUNCT", h, "punct"));
  return DepSentence(std::move(toks), "plain");
}

std::vector<Document> FuzzCorpus(std::size_t sentences, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const PatternRegistry reg = DefaultPatterns();
  const auto markers = reg.Markers();
  std::vector<Document> docs;
  std::size_t made = 0;
  while (made < sentences) {
    Document d;
    d.doc_id = "fuzz" + std::to_string(docs.size());
    const std::size_t len = 1 + rng.Below(4);
    for (std::size_t k = 0; k < len && made < sentences; ++k, ++made) {
      const std::string marker = markers[rng.Below(markers.size())];
      MarkerPattern p = reg.at(marker);
      p.marker_attach = MarkerRel(p, &rng);
      std::string form = marker;
      if (rng.Below(3) == 0) form[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(form[0])));
      // Lengths from 1 to 14 words cover TooShort, ratio and accepted cases.
      const Clause s1 = RandomClause(rng, 1 + static_cast<int>(rng.Below(14)), rng.Below(8) != 0);
      const Clause s2 = RandomClause(rng, 1 + static_cast<int>(rng.Below(14)), rng.Below(8) != 0);
      switch (rng.Below(5)) {
        case 0:
        case 1:
          d.sentences.push_back(ForwardSentence(s1, p, s2, form));
          break;
        case 2:
          d.sentences.push_back(PreposedSentence(s1, p, s2, form));
          break;
        case 3:
          d.sentences.push_back(IpsSentence(p, s2, form));
          break;
        default:
          d.sentences.push_back(PlainSentence(s1, rng.Below(2) ? marker : std::string()));
          break;
      }
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<PairRecord> CueCorpus(std::size_t n, std::uint64_t seed, bool negation) {
  SplitMix64 rng(seed);
  std::vector<PairRecord> out;
  out.reserve(n);
  auto filler = [&](std::size_t len) {
    std::vector<std::string> w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(Pick(rng, kFiller));
    return w;
  };
  auto join = [](const std::vector<std::string> &w) {
    std::string s;
    for (const auto &x : w) {
      if (!s.empty()) s += ' ';
      s += x;
    }
    return s;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cue = rng.Below(3);
    auto s1 = filler(5 + rng.Below(5));
    auto s2 = filler(5 + rng.Below(5));
    std::size_t label = cue;
    std::vector<std::string> cue_words{kCues[cue]};
    if (negation) {
      if (rng.Below(2) == 0) {
        cue_words.insert(cue_words.begin(), "not");
        label = (cue + 1) % 3;
      }
      s1.insert(s1.begin() + static_cast<long>(rng.Below(s1.size() + 1)), kCues[rng.Below(3)]);
      if (rng.Below(2) == 0) {
        s1.insert(s1.begin() + static_cast<long>(rng.Below(s1.size() + 1)), "not");
      }
    }
    s2.insert(s2.begin() + static_cast<long>(rng.Below(s2.size() + 1)), cue_words.begin(), cue_words.end());
    out.push_back({join(s1), join(s2), kCueLabels[label], "cue" + std::to_string(i)});
  }
  return out;
}

}  // namespace disco::testing
