#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "poto/ast.hpp"

namespace poto::py {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message)
      : std::runtime_error(message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class TokenKind { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker };

struct Token {
  TokenKind kind;
  std::string text;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  int line = 0;
};

// Splits source into tokens, synthesizing NEWLINE/INDENT/DEDENT the way the
// reference tokenizer does. Throws ParseError on unterminated strings or
// inconsistent dedents.
std::vector<Token> tokenize(const std::string& source);

// Parses a whole module. Throws ParseError on the first syntax error.
Module parse_module(std::string source);

}  // namespace poto::py
