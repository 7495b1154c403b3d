#include "tcflow/parser.hpp"

#include <set>

namespace tcflow {

namespace {

struct Parser {
  const std::vector<Token>& toks;
  size_t pos = 0;
  bool body_mode = false;  // calls allowed, addressing/prefixes rejected
  std::string body_where;
  int super_counter = 0;

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos + ahead;
    return i < toks.size() ? toks[i] : toks.back();
  }
  const Token& advance() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }

  [[noreturn]] void fail(const std::string& msg, SourceLoc loc) {
    if (body_mode) throw CompileError("in body of super '" + body_where + "': " + msg, loc);
    throw CompileError(msg, loc);
  }
  [[noreturn]] void expected(const std::string& what) {
    fail("expected " + what + ", got " + peek().describe(), peek().loc);
  }

  bool accept_punct(const char* p) {
    if (peek().is_punct(p)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_punct(const char* p) {
    if (!accept_punct(p)) expected(std::string("'") + p + "'");
  }
  bool accept_keyword(const char* k) {
    if (peek().is_keyword(k)) {
      advance();
      return true;
    }
    return false;
  }
  std::string expect_ident() {
    if (!peek().is(Token::Kind::Ident)) expected("identifier");
    return advance().text;
  }

  bool is_type_keyword(const Token& t) const {
    return t.is_keyword("int") || t.is_keyword("float") || t.is_keyword("bool") ||
           t.is_keyword("string") || t.is_keyword("list") || t.is_keyword("double");
  }

  // addr := NUMBER | '*' | 'mytid' | 'lasttid' | '(' 'mytid' ('+'|'-') NUMBER ')'
  AddressExpr parse_addr() {
    SourceLoc loc = peek().loc;
    if (peek().is(Token::Kind::Int)) {
      return {AddressExpr::Kind::Const, static_cast<uint32_t>(advance().int_val)};
    }
    if (accept_punct("*")) return {AddressExpr::Kind::All, 0};
    if (peek().is_ident("mytid")) {
      advance();
      return {AddressExpr::Kind::MyTid, 0};
    }
    if (peek().is_ident("lasttid")) {
      advance();
      return {AddressExpr::Kind::LastTid, 0};
    }
    if (peek().is_ident("lattid"))
      fail("unknown addressing keyword 'lattid'; did you mean 'lasttid'?", loc);
    if (accept_punct("(")) {
      if (!peek().is_ident("mytid")) expected("'mytid'");
      advance();
      bool plus = false;
      if (accept_punct("+"))
        plus = true;
      else if (!accept_punct("-"))
        expected("'+' or '-'");
      if (!peek().is(Token::Kind::Int)) expected("number");
      uint32_t k = static_cast<uint32_t>(advance().int_val);
      expect_punct(")");
      return {plus ? AddressExpr::Kind::MyTidPlus : AddressExpr::Kind::MyTidMinus, k};
    }
    expected("instance address (NUMBER, *, mytid, lasttid or (mytid +/- NUMBER))");
  }

  VarRef parse_varref(bool allow_prefix) {
    VarRef v;
    v.loc = peek().loc;
    if ((peek().is_ident("local") || peek().is_ident("starter")) && peek(1).is_punct(".")) {
      if (!allow_prefix)
        fail("'" + peek().text + ".' prefix is only allowed in super input lists", peek().loc);
      v.prefix = peek().is_ident("local") ? VarRef::Prefix::Local : VarRef::Prefix::Starter;
      advance();
      advance();
    }
    v.name = expect_ident();
    if (peek().is_punct("::")) {
      SourceLoc loc = peek().loc;
      advance();
      if (body_mode) fail("instance addressing is not allowed inside super bodies", loc);
      v.addr = parse_addr();
    }
    if (v.prefix == VarRef::Prefix::Local) {
      if (!v.addr || !v.addr->is_mytid_offset())
        fail("local input requires (mytid + NUMBER) or (mytid - NUMBER) addressing", v.loc);
    }
    return v;
  }

  ExprPtr mk(Expr::K k, SourceLoc loc) {
    auto e = std::make_unique<Expr>();
    e->k = k;
    e->loc = loc;
    return e;
  }

  ExprPtr parse_primary() {
    SourceLoc loc = peek().loc;
    if (peek().is(Token::Kind::Int)) {
      auto e = mk(Expr::K::IntLit, loc);
      e->int_val = advance().int_val;
      return e;
    }
    if (peek().is(Token::Kind::Float)) {
      auto e = mk(Expr::K::FloatLit, loc);
      e->float_val = advance().float_val;
      return e;
    }
    if (peek().is(Token::Kind::Str)) {
      auto e = mk(Expr::K::StrLit, loc);
      e->str_val = advance().text;
      return e;
    }
    if (peek().is_keyword("true") || peek().is_keyword("false")) {
      auto e = mk(Expr::K::BoolLit, loc);
      e->bool_val = advance().text == "true";
      return e;
    }
    if (accept_punct("(")) {
      auto e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (peek().is(Token::Kind::Ident)) {
      if (peek(1).is_punct("(")) {
        if (!body_mode) fail("function calls are only allowed inside super bodies", loc);
        auto e = mk(Expr::K::Call, loc);
        e->call_name = advance().text;
        advance();  // '('
        if (!peek().is_punct(")")) {
          do {
            e->args.push_back(parse_expr());
          } while (accept_punct(","));
        }
        expect_punct(")");
        return e;
      }
      auto e = mk(Expr::K::Var, loc);
      e->var = parse_varref(/*allow_prefix=*/false);
      return e;
    }
    expected("expression");
  }

  ExprPtr parse_unary() {
    SourceLoc loc = peek().loc;
    if (accept_punct("!")) {
      auto e = mk(Expr::K::Unary, loc);
      e->un = Expr::Un::Not;
      e->a = parse_unary();
      return e;
    }
    if (accept_punct("-")) {
      auto e = mk(Expr::K::Unary, loc);
      e->un = Expr::Un::Neg;
      e->a = parse_unary();
      return e;
    }
    return parse_primary();
  }

  struct Level {
    const char* punct;
    BinOp op;
  };

  ExprPtr parse_binary(int level) {
    static const std::vector<std::vector<Level>> levels = {
        {{"||", BinOp::Or}},
        {{"&&", BinOp::And}},
        {{"==", BinOp::Eq}, {"!=", BinOp::Ne}},
        {{"<", BinOp::Lt}, {"<=", BinOp::Le}, {">", BinOp::Gt}, {">=", BinOp::Ge}},
        {{"+", BinOp::Add}, {"-", BinOp::Sub}},
        {{"*", BinOp::Mul}, {"/", BinOp::Div}, {"%", BinOp::Mod}},
    };
    if (level >= static_cast<int>(levels.size())) return parse_unary();
    auto lhs = parse_binary(level + 1);
    while (true) {
      const Level* matched = nullptr;
      for (const auto& l : levels[level])
        if (peek().is_punct(l.punct)) {
          matched = &l;
          break;
        }
      if (!matched) return lhs;
      SourceLoc loc = peek().loc;
      advance();
      auto e = mk(Expr::K::Binary, loc);
      e->bin = matched->op;
      e->a = std::move(lhs);
      e->b = parse_binary(level + 1);
      lhs = std::move(e);
    }
  }

  ExprPtr parse_expr() { return parse_binary(0); }

  StmtPtr mkstmt(Stmt::K k, SourceLoc loc) {
    auto s = std::make_unique<Stmt>();
    s->k = k;
    s->loc = loc;
    return s;
  }

  StmtPtr parse_stmt() {
    SourceLoc loc = peek().loc;
    if (accept_punct("{")) {
      auto s = mkstmt(Stmt::K::Block, loc);
      while (!peek().is_punct("}")) {
        if (peek().is(Token::Kind::Eof)) expected("'}'");
        s->body.push_back(parse_stmt());
      }
      advance();
      return s;
    }
    if (accept_keyword("if")) {
      auto s = mkstmt(Stmt::K::If, loc);
      expect_punct("(");
      s->expr = parse_expr();
      expect_punct(")");
      s->then_arm = parse_stmt();
      if (accept_keyword("else")) s->else_arm = parse_stmt();
      return s;
    }
    if (accept_keyword("while")) {
      auto s = mkstmt(Stmt::K::While, loc);
      expect_punct("(");
      s->expr = parse_expr();
      expect_punct(")");
      s->loop_body = parse_stmt();
      return s;
    }
    if (accept_keyword("for")) {
      // for (v = init; cond; v2 = step) body  =>  { v = init; while (cond) { body; v2 = step; } }
      expect_punct("(");
      auto init = mkstmt(Stmt::K::Assign, peek().loc);
      init->target = expect_ident();
      expect_punct("=");
      init->expr = parse_expr();
      expect_punct(";");
      auto wh = mkstmt(Stmt::K::While, loc);
      wh->expr = parse_expr();
      expect_punct(";");
      auto step = mkstmt(Stmt::K::Assign, peek().loc);
      step->target = expect_ident();
      expect_punct("=");
      step->expr = parse_expr();
      expect_punct(")");
      auto inner = mkstmt(Stmt::K::Block, loc);
      inner->body.push_back(parse_stmt());
      inner->body.push_back(std::move(step));
      wh->loop_body = std::move(inner);
      auto outer = mkstmt(Stmt::K::Block, loc);
      outer->body.push_back(std::move(init));
      outer->body.push_back(std::move(wh));
      return outer;
    }
    if (accept_keyword("return")) {
      auto s = mkstmt(Stmt::K::Return, loc);
      if (!peek().is_punct(";")) {
        s->expr = parse_expr();
        s->has_value = true;
      }
      expect_punct(";");
      return s;
    }
    if (peek().is(Token::Kind::Ident)) {
      if (peek(1).is_punct("=")) {
        auto s = mkstmt(Stmt::K::Assign, loc);
        s->target = advance().text;
        advance();  // '='
        s->expr = parse_expr();
        expect_punct(";");
        return s;
      }
      if (body_mode && peek(1).is_punct("(")) {
        auto s = mkstmt(Stmt::K::ExprStmt, loc);
        s->expr = parse_expr();
        expect_punct(";");
        return s;
      }
    }
    expected("statement");
  }

  SuperDefAst parse_super(SourceLoc loc) {
    SuperDefAst sd;
    sd.loc = loc;
    if (peek().is_ident("single")) {
      sd.mode = SuperMode::Single;
      advance();
    } else if (peek().is_ident("parallel")) {
      sd.mode = SuperMode::Parallel;
      advance();
    } else {
      expected("'single' or 'parallel'");
    }
    if (peek().is_ident("name")) {
      advance();
      expect_punct("(");
      sd.name = expect_ident();
      expect_punct(")");
    } else {
      sd.name = "super_" + std::to_string(super_counter);
    }
    ++super_counter;
    if (!peek().is_ident("input")) expected("'input'");
    advance();
    expect_punct("(");
    std::set<std::string> seen;
    if (!peek().is_punct(")")) {
      do {
        VarRef v = parse_varref(/*allow_prefix=*/true);
        if (!seen.insert(v.name).second)
          fail("duplicate input base name '" + v.name + "' in super '" + sd.name + "'", v.loc);
        sd.inputs.push_back(std::move(v));
      } while (accept_punct(","));
    }
    expect_punct(")");
    if (!peek().is_ident("output")) expected("'output'");
    advance();
    expect_punct("(");
    if (!peek().is_punct(")")) {
      do {
        sd.outputs.push_back(expect_ident());
      } while (accept_punct(","));
    }
    expect_punct(")");
    if (!peek().is(Token::Kind::SuperBody)) expected("super body (#BEGINSUPER ... #ENDSUPER)");
    sd.body = advance().text;
    return sd;
  }

  Program parse_program() {
    Program prog;
    while (!peek().is(Token::Kind::Eof)) {
      SourceLoc loc = peek().loc;
      Item item;
      if (peek().is(Token::Kind::RawBlock)) {
        item.k = Item::K::Raw;
        item.raw = {advance().text, loc};
      } else if (peek().is_keyword("treb_super")) {
        advance();
        item.k = Item::K::Super;
        item.super = parse_super(loc);
      } else if (peek().is_keyword("treb_parout") || is_type_keyword(peek())) {
        item.k = Item::K::Decl;
        item.decl.loc = loc;
        item.decl.parout = accept_keyword("treb_parout");
        if (!is_type_keyword(peek())) expected("type name");
        item.decl.type = advance().text;
        if (item.decl.type == "double") item.decl.type = "float";
        item.decl.name = expect_ident();
        expect_punct(";");
      } else {
        item.k = Item::K::Stmt;
        item.stmt = parse_stmt();
      }
      prog.items.push_back(std::move(item));
    }
    return prog;
  }
};

}  // namespace

Program parse(const std::vector<Token>& tokens) {
  Parser p{tokens};
  return p.parse_program();
}

std::vector<StmtPtr> parse_body(const std::string& body_text, const std::string& where) {
  auto tokens = tokenize(body_text);
  Parser p{tokens};
  p.body_mode = true;
  p.body_where = where;
  std::vector<StmtPtr> stmts;
  while (!p.peek().is(Token::Kind::Eof)) stmts.push_back(p.parse_stmt());
  return stmts;
}

}  // namespace tcflow
