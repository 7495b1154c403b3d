#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "tcflow/diag.hpp"

namespace tcflow {

// Dynamically typed datum carried on graph edges and inside super bodies.
// Lists are immutable and shared; nesting depth is capped at 8.
class Value {
 public:
  enum class Kind : uint8_t { Int, Float, Bool, Str, List };

  static constexpr uint32_t kMaxListDepth = 8;

  Value() : v_(int64_t{0}) {}

  static Value ints(int64_t v) { return Value(v); }
  static Value floats(double v) { return Value(v); }
  static Value bools(bool v) { return Value(v); }
  static Value str(std::string v) { return Value(std::move(v)); }
  static Value list(std::vector<Value> items);

  Kind kind() const { return static_cast<Kind>(v_.index()); }
  bool is_int() const { return kind() == Kind::Int; }
  bool is_float() const { return kind() == Kind::Float; }
  bool is_bool() const { return kind() == Kind::Bool; }
  bool is_str() const { return kind() == Kind::Str; }
  bool is_list() const { return kind() == Kind::List; }
  bool is_numeric() const { return is_int() || is_float(); }

  int64_t as_int() const;
  double as_float() const;  // accepts Int (promotes) and Float
  bool as_bool() const;
  const std::string& as_str() const;
  const std::vector<Value>& as_list() const;
  uint32_t list_depth() const;  // 0 for non-lists

  bool operator==(const Value& rhs) const;
  bool operator!=(const Value& rhs) const { return !(*this == rhs); }

  static const char* kind_name(Kind k);

  // Sigil form used by `const` assembly records, RESULT lines and traces:
  // i:5  f:2.5  b:true  s:"quoted"  l:[i:1,i:2]
  std::string sigil_string() const;

 private:
  struct ListData {
    std::vector<Value> items;
    uint32_t depth = 1;  // 1 + deepest nested list
  };

  explicit Value(int64_t v) : v_(v) {}
  explicit Value(double v) : v_(v) {}
  explicit Value(bool v) : v_(v) {}
  explicit Value(std::string v) : v_(std::move(v)) {}
  explicit Value(std::shared_ptr<const ListData> v) : v_(std::move(v)) {}

  std::variant<int64_t, double, bool, std::string, std::shared_ptr<const ListData>> v_;
};

// Deterministic shortest round-trip formatting for doubles (%.17g trimmed).
std::string format_double(double v);
std::string escape_string(const std::string& s);
// Inverse of escape_string; `pos` starts at the opening quote.
std::string unescape_string(const std::string& text, size_t& pos);

// Binary and unary operator application with Int->Float promotion.
// Throws EvalError on type mismatch, division by zero, overflow.
enum class BinOp : uint8_t { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
Value apply_binop(BinOp op, const Value& a, const Value& b);
Value apply_not(const Value& a);
Value apply_neg(const Value& a);
const char* binop_name(BinOp op);

// Iteration-context stamp: a bounded stack of loop counters, outermost first.
// Operand matching is defined by Tag equality; program entry is the empty tag.
struct Tag {
  static constexpr size_t kMaxDepth = 16;

  std::vector<uint32_t> iters;

  bool operator==(const Tag&) const = default;
  size_t depth() const { return iters.size(); }

  Tag pushed() const;  // append counter 0; throws EvalError past kMaxDepth
  Tag popped() const;  // drop innermost; throws EvalError on empty
  Tag bumped() const;  // innermost + 1; throws EvalError on empty

  std::string to_string() const;  // [c0,c1,...]

  struct Hash {
    size_t operator()(const Tag& t) const;
  };
};

}  // namespace tcflow
