#include "disco/corpus.h"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

namespace disco {
namespace {

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::optional<int> ParseInt(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Value of a "# key = value" comment, if the comment has that key.
std::optional<std::string> CommentValue(std::string_view line,
                                        std::string_view key) {
  std::string_view body = Trim(line.substr(1));
  if (body.substr(0, key.size()) != key) return std::nullopt;
  std::string_view rest = body.substr(key.size());
  if (!rest.empty() && rest.front() != ' ' && rest.front() != '=' &&
      rest.front() != '\t') {
    return std::nullopt;
  }
  rest = Trim(rest);
  if (!rest.empty() && rest.front() == '=') rest = Trim(rest.substr(1));
  return std::string(rest);
}

class Reader {
 public:
  explicit Reader(const std::function<void(Document &&)> &sink) : sink_(sink) {}

  void Line(std::size_t lineno, std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Trim(line).empty()) {
      EndSentence();
      return;
    }
    if (line.front() == '#') {
      if (auto id = CommentValue(line, "newdoc id")) {
        NewDoc(*id);
      } else if (auto bare = CommentValue(line, "newdoc")) {
        NewDoc(bare->empty() ? std::string() : *bare);
      } else if (auto sid = CommentValue(line, "sent_id")) {
        sent_id_ = *sid;
      }
      return;
    }
    auto fields = SplitTabs(line);
    if (fields.size() != 10) {
      throw ParseError(lineno, "expected 10 tab-separated columns, got " +
                                   std::to_string(fields.size()));
    }
    std::string_view id = fields[0];
    if (id.find('-') != std::string_view::npos ||
        id.find('.') != std::string_view::npos) {
      return;
    }
    auto index = ParseInt(id);
    if (!index) throw ParseError(lineno, "non-numeric token id '" + std::string(id) + "'");
    auto head = ParseInt(fields[6]);
    if (!head) {
      throw ParseError(lineno, "non-numeric head '" + std::string(fields[6]) + "'");
    }
    if (fields[1].empty()) throw ParseError(lineno, "empty form");
    tokens_.push_back(Token{*index, std::string(fields[1]),
                            std::string(fields[3]), *head,
                            std::string(fields[7])});
  }

  void Finish() {
    EndSentence();
    FlushDoc();
  }

 private:
  void NewDoc(std::string id) {
    EndSentence();
    FlushDoc();
    doc_ = Document{std::move(id), {}};
    open_ = true;
  }

  void EndSentence() {
    if (tokens_.empty()) {
      sent_id_.reset();
      return;
    }
    if (!open_) {
      doc_ = Document{};
      open_ = true;
    }
    doc_.sentences.emplace_back(std::move(tokens_), std::move(sent_id_));
    tokens_.clear();
    sent_id_.reset();
  }

  void FlushDoc() {
    if (open_ && !doc_.sentences.empty()) {
      ++ordinal_;
      if (doc_.doc_id.empty()) doc_.doc_id = "doc" + std::to_string(ordinal_);
      sink_(std::move(doc_));
    }
    doc_ = Document{};
    open_ = false;
  }

  const std::function<void(Document &&)> &sink_;
  Document doc_;
  bool open_ = false;
  std::size_t ordinal_ = 0;
  std::vector<Token> tokens_;
  std::optional<std::string> sent_id_;
};

}  // namespace

DepSentence::DepSentence(std::vector<Token> tokens,
                         std::optional<std::string> sent_id)
    : tokens_(std::move(tokens)), sent_id_(std::move(sent_id)) {
  const std::string name = sent_id_.value_or("<unnamed>");
  const int n = static_cast<int>(tokens_.size());
  if (n == 0) throw StructureError(name, "sentence has no tokens");
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token &t = tokens_[i];
    if (t.index != i + 1) {
      throw StructureError(name, "token ids must run 1.." + std::to_string(n));
    }
    if (t.form.empty()) throw StructureError(name, "empty form");
    if (t.head < 0 || t.head > n) {
      throw StructureError(name, "head out of range at token " + std::to_string(t.index));
    }
    if (t.head == t.index) {
      throw StructureError(name, "self-loop at token " + std::to_string(t.index));
    }
    if (t.head == 0) {
      ++roots;
      root_ = t.index;
    }
  }
  if (roots != 1) {
    throw StructureError(name, "expected exactly one root, found " + std::to_string(roots));
  }
  // Every token must reach the root without revisiting a node.
  for (int i = 1; i <= n; ++i) {
    int steps = 0;
    for (int cur = i; cur != 0; cur = tokens_[cur - 1].head) {
      if (++steps > n) {
        throw StructureError(name, "cycle through token " + std::to_string(i));
      }
    }
  }
}

const Token &DepSentence::at(int index) const {
  if (!valid_index(index)) {
    throw std::invalid_argument("token index " + std::to_string(index) +
                                " out of range");
  }
  return tokens_[index - 1];
}

std::string DepSentence::text() const {
  std::string out;
  for (const Token &t : tokens_) {
    if (!out.empty()) out += ' ';
    out += t.form;
  }
  return out;
}

void ForEachDocument(std::istream &in,
                     const std::function<void(Document &&)> &sink) {
  Reader reader(sink);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) reader.Line(++lineno, line);
  reader.Finish();
}

std::vector<Document> ParseConllu(std::istream &in) {
  std::vector<Document> docs;
  ForEachDocument(in, [&](Document &&d) { docs.push_back(std::move(d)); });
  return docs;
}

std::vector<Document> ParseConlluString(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ParseConllu(in);
}

void WriteConllu(std::ostream &out, const std::vector<Document> &docs) {
  for (const Document &doc : docs) {
    out << "# newdoc id = " << doc.doc_id << '\n';
    for (const DepSentence &s : doc.sentences) {
      if (s.sent_id()) out << "# sent_id = " << *s.sent_id() << '\n';
      for (const Token &t : s.tokens()) {
        out << t.index << '\t' << t.form << "\t_\t" << t.upos << "\t_\t_\t"
            << t.head << '\t' << t.deprel << "\t_\t_\n";
      }
      out << '\n';
    }
  }
}

bool LabelMatches(std::string_view deprel, std::string_view pattern) {
  if (deprel.size() < pattern.size()) return false;
  if (deprel.substr(0, pattern.size()) != pattern) return false;
  return deprel.size() == pattern.size() || deprel[pattern.size()] == ':';
}

std::vector<Token> Dependents(const DepSentence &sentence, int head,
                              std::optional<std::string_view> relation) {
  if (!sentence.valid_index(head)) {
    throw std::invalid_argument("head index " + std::to_string(head) +
                                " out of range");
  }
  std::vector<Token> out;
  for (const Token &t : sentence.tokens()) {
    if (t.head != head) continue;
    if (relation && !LabelMatches(t.deprel, *relation)) continue;
    out.push_back(t);
  }
  return out;
}

std::vector<Token> SubtreeYield(const DepSentence &sentence, int head,
                                const std::set<int> &excluded) {
  if (!sentence.valid_index(head)) {
    throw std::invalid_argument("head index " + std::to_string(head) +
                                " out of range");
  }
  const auto &tokens = sentence.tokens();
  const int n = static_cast<int>(tokens.size());
  // in[i]: token i+1 is reachable from head without crossing an excluded node.
  // Resolved lazily by walking up the head chain (the graph is a tree).
  std::vector<signed char> state(n + 1, -1);
  auto reachable = [&](int idx) {
    std::vector<int> path;
    int cur = idx;
    signed char result = 0;
    while (true) {
      if (state[cur] != -1) {
        result = state[cur];
        break;
      }
      if (excluded.count(cur)) {
        result = 0;
        state[cur] = 0;
        break;
      }
      if (cur == head) {
        result = 1;
        state[cur] = 1;
        break;
      }
      path.push_back(cur);
      int parent = tokens[cur - 1].head;
      if (parent == 0) {
        result = 0;
        break;
      }
      cur = parent;
    }
    for (int p : path) state[p] = result;
    return result == 1;
  };
  std::vector<Token> out;
  for (int i = 1; i <= n; ++i) {
    if (reachable(i)) out.push_back(tokens[i - 1]);
  }
  return out;
}

std::string ToLower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
  });
  return out;
}

}  // namespace disco
