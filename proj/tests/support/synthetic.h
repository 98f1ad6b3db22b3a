// Generators for template sentences and constructed classification corpora.

#ifndef DISCO_TESTS_SYNTHETIC_H_
#define DISCO_TESTS_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "disco/corpus.h"
#include "disco/dataset.h"
#include "disco/patterns.h"

namespace disco::testing {

// (form, upos, head, deprel) rows with 1-based heads.
using Row = std::tuple<std::string, std::string, int, std::string>;
DepSentence MakeSentence(const std::vector<Row> &rows, std::string sent_id = "s");

// A clause: subject pronoun, verb head, then objects/modifiers. No word in it
// is ever a marker.
struct Clause {
  std::vector<std::string> words;
  std::vector<std::string> upos;
  std::vector<int> heads;  // local 0-based index of the head, -1 for the clause head
  std::vector<std::string> deprels;
  std::string Text() const;
};
Clause RandomClause(SplitMix64 &rng, int words, bool with_verb = true);

// "S1 marker S2 ." with S1 as root.
DepSentence ForwardSentence(const Clause &s1, const MarkerPattern &p, const Clause &s2,
                            std::string marker_form);
// "Marker S2 , S1 ."
DepSentence PreposedSentence(const Clause &s1, const MarkerPattern &p, const Clause &s2,
                             std::string marker_form);
// "Marker S2 ." with S2 as root (an IPS candidate).
DepSentence IpsSentence(const MarkerPattern &p, const Clause &s2, std::string marker_form);
// A plain clause; with `distractor`, a marker word hangs off a noun as advmod.
DepSentence PlainSentence(const Clause &c, const std::string &distractor = {});

// Random documents mixing every sentence shape above over all default markers,
// with clause lengths straddling the length filters.
std::vector<Document> FuzzCorpus(std::size_t sentences, std::uint64_t seed);

// Three-marker corpus where a cue word in S2 decides the label. With
// `negation`, a "not" right before the cue shifts the label by one (mod 3) and
// S1 carries an uninformative cue word and "not" as distractors.
std::vector<PairRecord> CueCorpus(std::size_t n, std::uint64_t seed, bool negation);

}  // namespace disco::testing

#endif  // DISCO_TESTS_SYNTHETIC_H_
