#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tcflow/ir.hpp"

namespace tcflow {

// Variable reference with optional local./starter. prefix and optional
// instance addressing. Prefixes are legal only in super input lists.
struct VarRef {
  enum class Prefix : uint8_t { None, Local, Starter };

  Prefix prefix = Prefix::None;
  std::string name;
  std::optional<AddressExpr> addr;
  SourceLoc loc;
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  enum class K : uint8_t { IntLit, FloatLit, StrLit, BoolLit, Var, Unary, Binary, Call };
  enum class Un : uint8_t { Not, Neg };

  K k = K::IntLit;
  SourceLoc loc;

  int64_t int_val = 0;
  double float_val = 0.0;
  std::string str_val;
  bool bool_val = false;

  VarRef var;

  Un un = Un::Not;
  BinOp bin = BinOp::Add;
  ExprPtr a, b;

  std::string call_name;
  std::vector<ExprPtr> args;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
  enum class K : uint8_t { Assign, If, While, Return, Block, ExprStmt };

  K k = K::Block;
  SourceLoc loc;

  std::string target;  // Assign
  ExprPtr expr;        // Assign rhs / If-While condition / Return value / ExprStmt
  bool has_value = false;  // Return carries a value

  StmtPtr then_arm, else_arm;  // If
  StmtPtr loop_body;           // While (for-loops are desugared to While)
  std::vector<StmtPtr> body;   // Block
};

struct Decl {
  std::string type;  // int | float | bool | string | list
  std::string name;
  bool parout = false;
  SourceLoc loc;
};

struct SuperDefAst {
  SuperMode mode = SuperMode::Single;
  std::string name;  // explicit name(...) or generated super_<k>
  std::vector<VarRef> inputs;
  std::vector<std::string> outputs;
  std::string body;
  SourceLoc loc;
};

struct RawBlockAst {
  std::string text;
  SourceLoc loc;
};

struct Item {
  enum class K : uint8_t { Decl, Super, Raw, Stmt };

  K k = K::Stmt;
  Decl decl;
  SuperDefAst super;
  RawBlockAst raw;
  StmtPtr stmt;
};

struct Program {
  std::vector<Item> items;
};

}  // namespace tcflow
