#include "tcflow/value.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace tcflow {

std::string SourceLoc::to_string() const {
  if (!valid()) return "<unknown>";
  return std::to_string(line) + ":" + std::to_string(col);
}

std::string Diagnostic::to_string() const {
  std::string s = severity == Severity::Error ? "error: " : "warning: ";
  s += message;
  if (loc.valid()) s += " (at " + loc.to_string() + ")";
  return s;
}

std::string CompileError::format(const std::string& message, SourceLoc loc) {
  if (!loc.valid()) return message;
  return loc.to_string() + ": " + message;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::Error) return true;
  return false;
}

Value Value::list(std::vector<Value> items) {
  uint32_t depth = 1;
  for (const auto& v : items)
    if (v.is_list() && v.list_depth() + 1 > depth) depth = v.list_depth() + 1;
  if (depth > kMaxListDepth) throw EvalError("list nesting depth exceeds " + std::to_string(kMaxListDepth));
  auto data = std::make_shared<ListData>();
  data->items = std::move(items);
  data->depth = depth;
  return Value(std::shared_ptr<const ListData>(std::move(data)));
}

int64_t Value::as_int() const {
  if (!is_int()) throw EvalError(std::string("expected int, got ") + kind_name(kind()));
  return std::get<int64_t>(v_);
}

double Value::as_float() const {
  if (is_int()) return static_cast<double>(std::get<int64_t>(v_));
  if (!is_float()) throw EvalError(std::string("expected float, got ") + kind_name(kind()));
  return std::get<double>(v_);
}

bool Value::as_bool() const {
  if (!is_bool()) throw EvalError(std::string("expected bool, got ") + kind_name(kind()));
  return std::get<bool>(v_);
}

const std::string& Value::as_str() const {
  if (!is_str()) throw EvalError(std::string("expected string, got ") + kind_name(kind()));
  return std::get<std::string>(v_);
}

const std::vector<Value>& Value::as_list() const {
  if (!is_list()) throw EvalError(std::string("expected list, got ") + kind_name(kind()));
  return std::get<std::shared_ptr<const ListData>>(v_)->items;
}

uint32_t Value::list_depth() const {
  if (!is_list()) return 0;
  return std::get<std::shared_ptr<const ListData>>(v_)->depth;
}

bool Value::operator==(const Value& rhs) const {
  if (kind() != rhs.kind()) return false;
  switch (kind()) {
    case Kind::Int: return std::get<int64_t>(v_) == std::get<int64_t>(rhs.v_);
    case Kind::Float: return std::get<double>(v_) == std::get<double>(rhs.v_);
    case Kind::Bool: return std::get<bool>(v_) == std::get<bool>(rhs.v_);
    case Kind::Str: return std::get<std::string>(v_) == std::get<std::string>(rhs.v_);
    case Kind::List: return as_list() == rhs.as_list();
  }
  return false;
}

const char* Value::kind_name(Kind k) {
  switch (k) {
    case Kind::Int: return "int";
    case Kind::Float: return "float";
    case Kind::Bool: return "bool";
    case Kind::Str: return "string";
    case Kind::List: return "list";
  }
  return "?";
}

std::string Value::sigil_string() const {
  switch (kind()) {
    case Kind::Int: return "i:" + std::to_string(std::get<int64_t>(v_));
    case Kind::Float: return "f:" + format_double(std::get<double>(v_));
    case Kind::Bool: return std::get<bool>(v_) ? "b:true" : "b:false";
    case Kind::Str: return "s:" + escape_string(std::get<std::string>(v_));
    case Kind::List: {
      std::string s = "l:[";
      const auto& items = as_list();
      for (size_t i = 0; i < items.size(); ++i) {
        if (i) s += ",";
        s += items[i].sigil_string();
      }
      s += "]";
      return s;
    }
  }
  return "?";
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // %.17g always round-trips; try shorter forms that round-trip too.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

std::string escape_string(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\x%02x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += "\"";
  return out;
}

std::string unescape_string(const std::string& text, size_t& pos) {
  if (pos >= text.size() || text[pos] != '"') throw EvalError("expected opening quote");
  ++pos;
  std::string out;
  while (pos < text.size() && text[pos] != '"') {
    char c = text[pos++];
    if (c != '\\') {
      out += c;
      continue;
    }
    if (pos >= text.size()) throw EvalError("dangling escape");
    char e = text[pos++];
    switch (e) {
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'x': {
        if (pos + 1 >= text.size()) throw EvalError("truncated \\x escape");
        auto hex = [](char h) -> int {
          if (h >= '0' && h <= '9') return h - '0';
          if (h >= 'a' && h <= 'f') return h - 'a' + 10;
          if (h >= 'A' && h <= 'F') return h - 'A' + 10;
          throw EvalError("bad hex digit in \\x escape");
        };
        out += static_cast<char>(hex(text[pos]) * 16 + hex(text[pos + 1]));
        pos += 2;
        break;
      }
      default: throw EvalError(std::string("unknown escape \\") + e);
    }
  }
  if (pos >= text.size()) throw EvalError("unterminated string");
  ++pos;  // closing quote
  return out;
}

const char* binop_name(BinOp op) {
  switch (op) {
    case BinOp::Add: return "add";
    case BinOp::Sub: return "sub";
    case BinOp::Mul: return "mul";
    case BinOp::Div: return "div";
    case BinOp::Mod: return "mod";
    case BinOp::Lt: return "lt";
    case BinOp::Le: return "le";
    case BinOp::Gt: return "gt";
    case BinOp::Ge: return "ge";
    case BinOp::Eq: return "eq";
    case BinOp::Ne: return "ne";
    case BinOp::And: return "and";
    case BinOp::Or: return "or";
  }
  return "?";
}

namespace {

Value numeric_binop(BinOp op, const Value& a, const Value& b) {
  if (a.is_int() && b.is_int()) {
    int64_t x = a.as_int(), y = b.as_int();
    switch (op) {
      case BinOp::Add: return Value::ints(x + y);
      case BinOp::Sub: return Value::ints(x - y);
      case BinOp::Mul: return Value::ints(x * y);
      case BinOp::Div:
        if (y == 0) throw EvalError("division by zero");
        return Value::ints(x / y);
      case BinOp::Mod:
        if (y == 0) throw EvalError("modulo by zero");
        return Value::ints(x % y);
      case BinOp::Lt: return Value::bools(x < y);
      case BinOp::Le: return Value::bools(x <= y);
      case BinOp::Gt: return Value::bools(x > y);
      case BinOp::Ge: return Value::bools(x >= y);
      default: break;
    }
  }
  double x = a.as_float(), y = b.as_float();
  switch (op) {
    case BinOp::Add: return Value::floats(x + y);
    case BinOp::Sub: return Value::floats(x - y);
    case BinOp::Mul: return Value::floats(x * y);
    case BinOp::Div:
      if (y == 0.0) throw EvalError("division by zero");
      return Value::floats(x / y);
    case BinOp::Mod: throw EvalError("modulo requires integer operands");
    case BinOp::Lt: return Value::bools(x < y);
    case BinOp::Le: return Value::bools(x <= y);
    case BinOp::Gt: return Value::bools(x > y);
    case BinOp::Ge: return Value::bools(x >= y);
    default: break;
  }
  throw EvalError("unsupported numeric operator");
}

}  // namespace

Value apply_binop(BinOp op, const Value& a, const Value& b) {
  switch (op) {
    case BinOp::Eq:
    case BinOp::Ne: {
      bool eq;
      if (a.is_numeric() && b.is_numeric() && a.kind() != b.kind())
        eq = a.as_float() == b.as_float();
      else if (a.kind() != b.kind())
        throw EvalError(std::string("cannot compare ") + Value::kind_name(a.kind()) + " with " +
                        Value::kind_name(b.kind()));
      else
        eq = a == b;
      return Value::bools(op == BinOp::Eq ? eq : !eq);
    }
    case BinOp::And:
    case BinOp::Or: {
      bool x = a.as_bool(), y = b.as_bool();
      return Value::bools(op == BinOp::And ? (x && y) : (x || y));
    }
    default:
      if (!a.is_numeric() || !b.is_numeric())
        throw EvalError(std::string(binop_name(op)) + " requires numeric operands, got " +
                        Value::kind_name(a.kind()) + " and " + Value::kind_name(b.kind()));
      return numeric_binop(op, a, b);
  }
}

Value apply_not(const Value& a) { return Value::bools(!a.as_bool()); }

Value apply_neg(const Value& a) {
  if (a.is_int()) return Value::ints(-a.as_int());
  return Value::floats(-a.as_float());
}

Tag Tag::pushed() const {
  if (iters.size() >= kMaxDepth) throw EvalError("tag depth exceeds " + std::to_string(kMaxDepth));
  Tag t = *this;
  t.iters.push_back(0);
  return t;
}

Tag Tag::popped() const {
  if (iters.empty()) throw EvalError("tag pop on empty tag");
  Tag t = *this;
  t.iters.pop_back();
  return t;
}

Tag Tag::bumped() const {
  if (iters.empty()) throw EvalError("tag increment on empty tag");
  Tag t = *this;
  ++t.iters.back();
  return t;
}

std::string Tag::to_string() const {
  std::string s = "[";
  for (size_t i = 0; i < iters.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(iters[i]);
  }
  s += "]";
  return s;
}

size_t Tag::Hash::operator()(const Tag& t) const {
  size_t h = 0x9e3779b97f4a7c15ull;
  for (uint32_t c : t.iters) h = h * 1099511628211ull ^ (c + 0x9e3779b9u);
  return h ^ t.iters.size();
}

}  // namespace tcflow
