#include "tcflow/lexer.hpp"

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <unordered_set>

namespace tcflow {

std::string Token::describe() const {
  switch (kind) {
    case Kind::Ident: return "identifier '" + text + "'";
    case Kind::Keyword: return "'" + text + "'";
    case Kind::Int:
    case Kind::Float: return "number '" + text + "'";
    case Kind::Str: return "string literal";
    case Kind::Punct: return "'" + text + "'";
    case Kind::RawBlock: return "raw block";
    case Kind::SuperBody: return "super body";
    case Kind::Eof: return "end of input";
  }
  return "?";
}

namespace {

const std::unordered_set<std::string> kKeywords = {
    "int",  "float", "bool",  "string", "list",   "double", "treb_super", "treb_parout",
    "if",   "else",  "while", "for",    "return", "true",   "false",
};

struct Lexer {
  const std::string& src;
  size_t pos = 0;
  uint32_t line = 1, col = 1;
  std::vector<Token> out;

  explicit Lexer(const std::string& s) : src(s) {}

  char peek(size_t ahead = 0) const { return pos + ahead < src.size() ? src[pos + ahead] : '\0'; }
  bool starts_with(const char* s) const { return src.compare(pos, std::strlen(s), s) == 0; }

  char advance() {
    char c = src[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }

  SourceLoc here() const { return {line, col}; }

  [[noreturn]] void fail(const std::string& msg, SourceLoc loc) { throw CompileError(msg, loc); }

  void push(Token t) { out.push_back(std::move(t)); }

  // Captures byte-exact text up to `end_marker`, skipping one newline right
  // after the opening marker.
  void opaque_region(const char* end_marker, Token::Kind kind, SourceLoc open_loc) {
    if (peek() == '\n') advance();
    size_t end = src.find(end_marker, pos);
    if (end == std::string::npos)
      fail(std::string("unterminated region; expected ") + end_marker, open_loc);
    Token t;
    t.kind = kind;
    t.text = src.substr(pos, end - pos);
    t.loc = open_loc;
    while (pos < end) advance();
    for (size_t i = 0; end_marker[i]; ++i) advance();
    push(std::move(t));
  }

  void line_comment() {
    while (pos < src.size() && peek() != '\n') advance();
  }

  void block_comment(SourceLoc open_loc) {
    while (pos < src.size()) {
      if (peek() == '*' && peek(1) == '/') {
        advance();
        advance();
        return;
      }
      advance();
    }
    fail("unterminated comment", open_loc);
  }

  void string_literal(SourceLoc loc) {
    Token t;
    t.kind = Token::Kind::Str;
    t.loc = loc;
    while (true) {
      if (pos >= src.size() || peek() == '\n') fail("unterminated string", loc);
      char c = advance();
      if (c == '"') break;
      if (c == '\\') {
        if (pos >= src.size()) fail("unterminated string", loc);
        char e = advance();
        switch (e) {
          case 'n': t.text += '\n'; break;
          case 't': t.text += '\t'; break;
          case 'r': t.text += '\r'; break;
          case '"': t.text += '"'; break;
          case '\\': t.text += '\\'; break;
          default: fail(std::string("unknown escape sequence \\") + e, here());
        }
      } else {
        t.text += c;
      }
    }
    push(std::move(t));
  }

  void number(SourceLoc loc) {
    size_t start = pos;
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    bool is_float = false;
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      is_float = true;
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      size_t save = pos;
      advance();
      if (peek() == '+' || peek() == '-') advance();
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        is_float = true;
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      } else {
        pos = save;  // not an exponent; leave 'e' for the next token
      }
    }
    Token t;
    t.text = src.substr(start, pos - start);
    t.loc = loc;
    if (is_float) {
      t.kind = Token::Kind::Float;
      t.float_val = std::strtod(t.text.c_str(), nullptr);
    } else {
      t.kind = Token::Kind::Int;
      t.int_val = std::strtoll(t.text.c_str(), nullptr, 10);
    }
    push(std::move(t));
  }

  void run() {
    while (pos < src.size()) {
      SourceLoc loc = here();
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        line_comment();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        advance();
        advance();
        block_comment(loc);
        continue;
      }
      if (c == '#') {
        if (starts_with("#BEGINBLOCK")) {
          for (int i = 0; i < 11; ++i) advance();
          opaque_region("#ENDBLOCK", Token::Kind::RawBlock, loc);
          continue;
        }
        if (starts_with("#BEGINSUPER")) {
          for (int i = 0; i < 11; ++i) advance();
          opaque_region("#ENDSUPER", Token::Kind::SuperBody, loc);
          continue;
        }
        fail("unexpected '#' directive", loc);
      }
      if (c == '"') {
        advance();
        string_literal(loc);
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        number(loc);
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
        Token t;
        t.text = src.substr(start, pos - start);
        t.kind = kKeywords.count(t.text) ? Token::Kind::Keyword : Token::Kind::Ident;
        t.loc = loc;
        push(std::move(t));
        continue;
      }
      bool matched = false;
      for (const char* p : {"::", "==", "!=", "<=", ">=", "&&", "||"}) {
        if (starts_with(p)) {
          advance();
          advance();
          push({Token::Kind::Punct, p, 0, 0.0, loc});
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::strchr("(){};,=<>+-*/%!.", c)) {
        advance();
        push({Token::Kind::Punct, std::string(1, c), 0, 0.0, loc});
        continue;
      }
      fail(std::string("unexpected character '") + c + "'", loc);
    }
    push({Token::Kind::Eof, "", 0, 0.0, here()});
  }
};

}  // namespace

std::vector<Token> tokenize(const std::string& source) {
  Lexer lx(source);
  lx.run();
  return std::move(lx.out);
}

}  // namespace tcflow
