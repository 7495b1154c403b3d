#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcflow/diag.hpp"

namespace tcflow {

struct Token {
  enum class Kind : uint8_t {
    Ident,
    Keyword,
    Int,
    Float,
    Str,
    Punct,
    RawBlock,   // text between block markers, byte-exact
    SuperBody,  // text between super-body markers, byte-exact
    Eof,
  };

  Kind kind = Kind::Eof;
  std::string text;  // lexeme; raw text for RawBlock/SuperBody; decoded value for Str
  int64_t int_val = 0;
  double float_val = 0.0;
  SourceLoc loc;

  bool is(Kind k) const { return kind == k; }
  bool is_punct(const char* p) const { return kind == Kind::Punct && text == p; }
  bool is_keyword(const char* k) const { return kind == Kind::Keyword && text == k; }
  bool is_ident(const char* name) const { return kind == Kind::Ident && text == name; }
  std::string describe() const;
};

// C-like tokenizer. #BEGINBLOCK/#ENDBLOCK and #BEGINSUPER/#ENDSUPER regions
// become single opaque tokens preserving their text byte-exactly (one
// newline immediately after the opening marker is not part of the text).
// Comments are stripped outside opaque regions. Throws CompileError on
// unterminated blocks, strings or comments.
std::vector<Token> tokenize(const std::string& source);

}  // namespace tcflow
