#include <array>
#include <cctype>
#include <string_view>

#include "poto/parser.hpp"

namespace poto::py {
namespace {

bool is_name_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_name_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

constexpr std::array<std::string_view, 25> kMultiCharOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=",
    "==",  "!=",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "@=", "<>"};

constexpr std::string_view kSingleCharOps = "+-*/%@&|^~<>()[]{},:.;=!";

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    bool at_line_start = true;
    while (pos_ < src_.size()) {
      if (at_line_start && depth_ == 0) {
        if (!handle_indentation()) continue;
        at_line_start = false;
      }
      char c = src_[pos_];
      if (c == '\n' || c == '\r') {
        consume_newline();
        if (depth_ == 0) {
          if (!tokens_.empty() && tokens_.back().kind != TokenKind::Newline) {
            push(TokenKind::Newline, "", pos_, pos_);
          }
          at_line_start = true;
        }
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        skip_comment();
        continue;
      }
      if (c == '\\') {
        std::size_t next = pos_ + 1;
        if (next < src_.size() && (src_[next] == '\n' || src_[next] == '\r')) {
          pos_ = next;
          consume_newline();
          continue;
        }
        throw ParseError(line_, "unexpected character after line continuation");
      }
      if (lex_string_or_name()) continue;
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      lex_operator();
    }
    if (!tokens_.empty() && tokens_.back().kind != TokenKind::Newline &&
        tokens_.back().kind != TokenKind::Dedent) {
      push(TokenKind::Newline, "", pos_, pos_);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(TokenKind::Dedent, "", pos_, pos_);
    }
    push(TokenKind::EndMarker, "", pos_, pos_);
    return std::move(tokens_);
  }

 private:
  void push(TokenKind kind, std::string text, std::size_t begin, std::size_t end) {
    tokens_.push_back(Token{kind, std::move(text), static_cast<std::uint32_t>(begin),
                            static_cast<std::uint32_t>(end), token_line_});
  }

  void consume_newline() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
    ++pos_;
    ++line_;
  }

  void skip_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
  }

  // Returns false when the line is blank or comment-only (already consumed).
  bool handle_indentation() {
    int column = 0;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ') {
        ++column;
      } else if (c == '\t') {
        column = (column / 8 + 1) * 8;
      } else if (c == '\f') {
        column = 0;
      } else {
        break;
      }
      ++pos_;
    }
    if (pos_ >= src_.size()) return false;
    char c = src_[pos_];
    if (c == '#') {
      skip_comment();
      if (pos_ < src_.size()) consume_newline();
      return false;
    }
    if (c == '\n' || c == '\r') {
      consume_newline();
      return false;
    }
    if (c == '\\') return true;
    token_line_ = line_;
    if (column > indents_.back()) {
      indents_.push_back(column);
      push(TokenKind::Indent, "", pos_, pos_);
    } else {
      while (column < indents_.back()) {
        indents_.pop_back();
        push(TokenKind::Dedent, "", pos_, pos_);
      }
      if (column != indents_.back()) throw ParseError(line_, "unindent does not match any outer level");
    }
    return true;
  }

  bool lex_string_or_name() {
    unsigned char c = static_cast<unsigned char>(src_[pos_]);
    if (c == '"' || c == '\'') {
      lex_string(pos_, pos_);
      return true;
    }
    if (!is_name_start(c)) return false;
    std::size_t start = pos_;
    std::size_t p = pos_;
    while (p < src_.size() && is_name_char(static_cast<unsigned char>(src_[p]))) ++p;
    // A short all-prefix-letter word directly followed by a quote starts a string.
    if (p < src_.size() && (src_[p] == '"' || src_[p] == '\'') && p - start <= 2) {
      bool all_prefix = true;
      for (std::size_t i = start; i < p; ++i) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[i])));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') all_prefix = false;
      }
      if (all_prefix) {
        lex_string(start, p);
        return true;
      }
    }
    token_line_ = line_;
    pos_ = p;
    push(TokenKind::Name, src_.substr(start, p - start), start, p);
    return true;
  }

  void lex_string(std::size_t start, std::size_t quote_pos) {
    token_line_ = line_;
    char quote = src_[quote_pos];
    bool triple = quote_pos + 2 < src_.size() && src_[quote_pos + 1] == quote &&
                  src_[quote_pos + 2] == quote;
    std::size_t p = quote_pos + (triple ? 3 : 1);
    while (true) {
      if (p >= src_.size()) throw ParseError(token_line_, "unterminated string literal");
      char ch = src_[p];
      if (ch == '\\') {
        // Escaped quotes never terminate, raw prefix or not.
        if (p + 1 < src_.size() && (src_[p + 1] == '\n' || src_[p + 1] == '\r')) {
          pos_ = p + 1;
          consume_newline();
          p = pos_;
          continue;
        }
        p += 2;
        continue;
      }
      if (ch == '\n' || ch == '\r') {
        if (!triple) throw ParseError(token_line_, "unterminated string literal");
        pos_ = p;
        consume_newline();
        p = pos_;
        continue;
      }
      if (ch == quote) {
        if (!triple) {
          ++p;
          break;
        }
        if (p + 2 < src_.size() && src_[p + 1] == quote && src_[p + 2] == quote) {
          p += 3;
          break;
        }
      }
      ++p;
    }
    pos_ = p;
    push(TokenKind::String, src_.substr(start, p - start), start, p);
  }

  void lex_number() {
    token_line_ = line_;
    std::size_t start = pos_;
    std::size_t p = pos_;
    auto digits = [&](auto pred) {
      while (p < src_.size() && (pred(static_cast<unsigned char>(src_[p])) || src_[p] == '_')) ++p;
    };
    if (src_[p] == '0' && p + 1 < src_.size() &&
        std::string_view("xXoObB").find(src_[p + 1]) != std::string_view::npos) {
      p += 2;
      digits([](unsigned char ch) { return std::isxdigit(ch) != 0; });
    } else {
      digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
      if (p < src_.size() && src_[p] == '.') {
        ++p;
        digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
      }
      if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
        std::size_t q = p + 1;
        if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
        if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
          p = q;
          digits([](unsigned char ch) { return std::isdigit(ch) != 0; });
        }
      }
      if (p < src_.size() && (src_[p] == 'j' || src_[p] == 'J')) ++p;
    }
    pos_ = p;
    push(TokenKind::Number, src_.substr(start, p - start), start, p);
  }

  void lex_operator() {
    token_line_ = line_;
    std::string_view rest = std::string_view(src_).substr(pos_);
    for (std::string_view op : kMultiCharOps) {
      if (rest.substr(0, op.size()) == op) {
        push(TokenKind::Op, std::string(op), pos_, pos_ + op.size());
        pos_ += op.size();
        return;
      }
    }
    char c = src_[pos_];
    if (kSingleCharOps.find(c) == std::string_view::npos) {
      throw ParseError(line_, std::string("invalid character '") + c + "'");
    }
    if (c == '(' || c == '[' || c == '{') ++depth_;
    if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
    push(TokenKind::Op, std::string(1, c), pos_, pos_ + 1);
    ++pos_;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int token_line_ = 1;
  int depth_ = 0;
  std::vector<int> indents_;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(const std::string& source) { return Lexer(source).run(); }

}  // namespace poto::py
