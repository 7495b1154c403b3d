#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tcflow/ast.hpp"

namespace tcflow {

// Host services behind the body builtins that touch machine state.
// The VM supplies the real one; test harnesses may supply their own.
class BuiltinHost {
 public:
  virtual ~BuiltinHost() = default;
  virtual int64_t tid() const = 0;
  virtual int64_t n_tasks() const = 0;
  virtual const std::vector<std::string>& argv() const = 0;
  virtual Value read_lines(const std::string& path) = 0;
  virtual void write_line(const std::string& path, const std::string& line) = 0;
  virtual void burn_ms(double ms) = 0;
};

// Dispatches one builtin call. Pure builtins (len, get, append, to_int,
// to_float, concat, exp, log, sqrt, pow, erf) work with host == nullptr;
// the rest require a host. Throws EvalError for unknown names or bad args.
Value call_builtin(const std::string& name, const std::vector<Value>& args, BuiltinHost* host);

struct EvalHooks {
  std::function<Value(const VarRef&)> resolve_var;
  std::function<Value(const std::string&, const std::vector<Value>&, SourceLoc)> call;
};

// Expression evaluation over the shared AST. Exactly the semantics the
// dataflow instructions implement (strict &&/||, Int->Float promotion).
Value eval_expr(const Expr& e, const EvalHooks& hooks);

// Runs body statements against an environment of locals (inputs pre-bound).
// EvalErrors are rethrown with the failing statement's body line attached.
void exec_body(const std::vector<StmtPtr>& stmts, std::map<std::string, Value>& env,
               BuiltinHost* host);

}  // namespace tcflow
