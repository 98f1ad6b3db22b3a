// In-memory model of dependency-parsed text read from CoNLL-U.

#ifndef DISCO_CORPUS_H_
#define DISCO_CORPUS_H_

#include <cstddef>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace disco {

// One syntactic word. Indices are 1-based; head 0 marks the root.
struct Token {
  int index = 0;
  std::string form;
  std::string upos;
  int head = 0;
  std::string deprel;

  bool operator==(const Token &other) const = default;
};

class DepSentence {
 public:
  DepSentence() = default;

  // Validates the token table: dense 1-based indices, heads in range, no
  // self-loops, exactly one root and no cycles. Throws StructureError.
  DepSentence(std::vector<Token> tokens, std::optional<std::string> sent_id);

  const std::vector<Token> &tokens() const { return tokens_; }
  const std::optional<std::string> &sent_id() const { return sent_id_; }
  std::size_t size() const { return tokens_.size(); }
  int root() const { return root_; }

  // Token with the given 1-based index. Throws std::invalid_argument.
  const Token &at(int index) const;
  bool valid_index(int index) const {
    return index >= 1 && index <= static_cast<int>(tokens_.size());
  }

  // Space-joined forms of every token.
  std::string text() const;

  bool operator==(const DepSentence &other) const {
    return tokens_ == other.tokens_ && sent_id_ == other.sent_id_;
  }

 private:
  std::vector<Token> tokens_;
  std::optional<std::string> sent_id_;
  int root_ = 0;
};

struct Document {
  std::string doc_id;
  std::vector<DepSentence> sentences;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class StructureError : public std::runtime_error {
 public:
  StructureError(std::string sent_id, const std::string &what)
      : std::runtime_error("sentence '" + sent_id + "': " + what),
        sent_id_(std::move(sent_id)) {}
  const std::string &sent_id() const { return sent_id_; }

 private:
  std::string sent_id_;
};

// Reads CoNLL-U. Multiword ranges (3-4) and empty nodes (5.1) are skipped;
// only ID, FORM, UPOS, HEAD and DEPREL are kept. A "# newdoc" comment starts a
// new document; sentences before the first one land in document "doc1" (and
// so on, numbering unnamed documents by position).
std::vector<Document> ParseConllu(std::istream &in);

// Streaming form: hands each completed document to `sink` and drops it.
void ForEachDocument(std::istream &in,
                     const std::function<void(Document &&)> &sink);
std::vector<Document> ParseConlluString(std::string_view text);

// Writes documents back as CoNLL-U; unused columns are written as "_".
void WriteConllu(std::ostream &out, const std::vector<Document> &docs);

// True when a dependency label equals `pattern` or starts with "pattern:".
bool LabelMatches(std::string_view deprel, std::string_view pattern);

// Direct dependents of `head`, optionally restricted to a relation (matched by
// LabelMatches), in surface order. Throws std::invalid_argument on a bad head.
std::vector<Token> Dependents(const DepSentence &sentence, int head,
                              std::optional<std::string_view> relation = {});

// Tokens dominated by `head` (inclusive), in surface order. Excluded tokens and
// everything below them are cut off.
std::vector<Token> SubtreeYield(const DepSentence &sentence, int head,
                                const std::set<int> &excluded = {});

std::string ToLower(std::string_view s);

}  // namespace disco

#endif  // DISCO_CORPUS_H_
