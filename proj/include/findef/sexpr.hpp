#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "findef/common.hpp"

namespace findef {

struct SourcePos {
  std::size_t line = 1;
  std::size_t column = 1;
  std::string str() const { return std::to_string(line) + ":" + std::to_string(column); }
};

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  SourcePos pos;
};

class SExprReader {
 public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  SExpr read_one() {
    skip_space();
    SExpr e = read();
    skip_space();
    if (i_ < text_.size()) fail("trailing input after expression");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_.str(), msg); }

  void advance() {
    if (text_[i_] == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    ++i_;
  }

  void skip_space() {
    while (i_ < text_.size()) {
      char c = text_[i_];
      if (c == ';') {
        while (i_ < text_.size() && text_[i_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read() {
    if (i_ >= text_.size()) fail("unexpected end of input");
    SExpr e;
    e.pos = pos_;
    if (text_[i_] == ')') fail("unexpected ')'");
    if (text_[i_] == '(') {
      e.is_list = true;
      advance();
      while (true) {
        skip_space();
        if (i_ >= text_.size()) throw ParseError(e.pos.str(), "unclosed '('");
        if (text_[i_] == ')') {
          advance();
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    while (i_ < text_.size()) {
      char c = text_[i_];
      if (c == '(' || c == ')' || c == ';' || std::isspace(static_cast<unsigned char>(c))) break;
      e.atom += c;
      advance();
    }
    return e;
  }

  std::string_view text_;
  std::size_t i_ = 0;
  SourcePos pos_;
};

}  // namespace findef
