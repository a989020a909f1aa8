#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

namespace concsynth {

// Minimal s-expression reader shared by the SyGuS frontend and the
// SMT-LIB response parser. Atoms keep their source spelling; |...| quoting
// and line comments are handled, strings are kept with their quotes.
struct Sexpr {
  bool is_atom = false;
  std::string atom;
  std::vector<Sexpr> kids;
  std::size_t pos = 0;  // byte offset into the source text

  static Sexpr make_atom(std::string s) {
    Sexpr e;
    e.is_atom = true;
    e.atom = std::move(s);
    return e;
  }

  static Sexpr make_list(std::vector<Sexpr> kids) {
    Sexpr e;
    e.kids = std::move(kids);
    return e;
  }

  const Sexpr& operator[](std::size_t i) const { return kids[i]; }
  std::size_t size() const { return kids.size(); }

  bool is(const std::string& s) const { return is_atom && atom == s; }

  std::string str() const {
    if (is_atom) return atom;
    std::string out = "(";
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i) out += ' ';
      out += kids[i].str();
    }
    out += ')';
    return out;
  }
};

struct SexprParseError : std::runtime_error {
  std::size_t pos;
  explicit SexprParseError(const std::string& what, std::size_t p = 0)
      : std::runtime_error(what), pos(p) {}
};

// 1-based line/column of a byte offset, for error reporting.
inline std::pair<std::size_t, std::size_t> line_col(const std::string& text,
                                                    std::size_t pos) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

class SexprReader {
 public:
  explicit SexprReader(std::string text) : text_(std::move(text)) {}

  // Returns false at end of input, otherwise fills `out`.
  bool next(Sexpr& out) {
    skip_ws();
    if (pos_ >= text_.size()) return false;
    out = read();
    return true;
  }

  std::vector<Sexpr> all() {
    std::vector<Sexpr> v;
    Sexpr e;
    while (next(e)) v.push_back(std::move(e));
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace((unsigned char)c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  Sexpr read() {
    skip_ws();
    if (pos_ >= text_.size())
      throw SexprParseError("unexpected end of input", pos_);
    std::size_t at = pos_;
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      std::vector<Sexpr> kids;
      while (true) {
        skip_ws();
        if (pos_ >= text_.size())
          throw SexprParseError("unbalanced parenthesis", at);
        if (text_[pos_] == ')') {
          ++pos_;
          Sexpr e = Sexpr::make_list(std::move(kids));
          e.pos = at;
          return e;
        }
        kids.push_back(read());
      }
    }
    if (c == ')') throw SexprParseError("unexpected ')'", at);
    if (c == '|') {
      std::size_t end = text_.find('|', pos_ + 1);
      if (end == std::string::npos)
        throw SexprParseError("unterminated |...| symbol", at);
      Sexpr a = Sexpr::make_atom(text_.substr(pos_ + 1, end - pos_ - 1));
      a.pos = at;
      pos_ = end + 1;
      return a;
    }
    if (c == '"') {
      std::size_t end = pos_ + 1;
      while (end < text_.size() && text_[end] != '"') ++end;
      if (end >= text_.size()) throw SexprParseError("unterminated string", at);
      Sexpr a = Sexpr::make_atom(text_.substr(pos_, end - pos_ + 1));
      a.pos = at;
      pos_ = end + 1;
      return a;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isspace((unsigned char)d) || d == '(' || d == ')' || d == ';')
        break;
      ++pos_;
    }
    Sexpr a = Sexpr::make_atom(text_.substr(start, pos_ - start));
    a.pos = start;
    return a;
  }

  std::string text_;
  std::size_t pos_ = 0;
};

inline std::vector<Sexpr> parse_sexprs(const std::string& text) {
  return SexprReader(text).all();
}

}  // namespace concsynth
