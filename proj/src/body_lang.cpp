#include "tcflow/body_lang.hpp"

#include <cmath>

namespace tcflow {

namespace {

void need_args(const std::string& name, const std::vector<Value>& args, size_t n) {
  if (args.size() != n)
    throw EvalError(name + " expects " + std::to_string(n) + " argument(s), got " +
                    std::to_string(args.size()));
}

BuiltinHost* need_host(const std::string& name, BuiltinHost* host) {
  if (!host) throw EvalError(name + " is only available inside super bodies");
  return host;
}

}  // namespace

Value call_builtin(const std::string& name, const std::vector<Value>& args, BuiltinHost* host) {
  if (name == "treb_get_tid") {
    need_args(name, args, 0);
    return Value::ints(need_host(name, host)->tid());
  }
  if (name == "treb_get_n_tasks") {
    need_args(name, args, 0);
    return Value::ints(need_host(name, host)->n_tasks());
  }
  if (name == "treb_argc") {
    need_args(name, args, 0);
    return Value::ints(static_cast<int64_t>(need_host(name, host)->argv().size()));
  }
  if (name == "treb_argv") {
    need_args(name, args, 1);
    const auto& av = need_host(name, host)->argv();
    int64_t i = args[0].as_int();
    if (i < 0 || i >= static_cast<int64_t>(av.size()))
      throw EvalError("treb_argv index " + std::to_string(i) + " out of range (argc=" +
                      std::to_string(av.size()) + ")");
    return Value::str(av[static_cast<size_t>(i)]);
  }
  if (name == "len") {
    need_args(name, args, 1);
    if (args[0].is_str()) return Value::ints(static_cast<int64_t>(args[0].as_str().size()));
    return Value::ints(static_cast<int64_t>(args[0].as_list().size()));
  }
  if (name == "get") {
    need_args(name, args, 2);
    const auto& xs = args[0].as_list();
    int64_t i = args[1].as_int();
    if (i < 0 || i >= static_cast<int64_t>(xs.size()))
      throw EvalError("list index " + std::to_string(i) + " out of range (len=" +
                      std::to_string(xs.size()) + ")");
    return xs[static_cast<size_t>(i)];
  }
  if (name == "append") {
    need_args(name, args, 2);
    std::vector<Value> xs = args[0].as_list();
    xs.push_back(args[1]);
    return Value::list(std::move(xs));
  }
  if (name == "to_int") {
    need_args(name, args, 1);
    if (args[0].is_int()) return args[0];
    if (args[0].is_float()) return Value::ints(static_cast<int64_t>(args[0].as_float()));
    if (args[0].is_bool()) return Value::ints(args[0].as_bool() ? 1 : 0);
    if (args[0].is_str()) {
      try {
        size_t used = 0;
        int64_t v = std::stoll(args[0].as_str(), &used);
        if (used != args[0].as_str().size()) throw std::invalid_argument("");
        return Value::ints(v);
      } catch (const std::exception&) {
        throw EvalError("to_int: cannot parse \"" + args[0].as_str() + "\"");
      }
    }
    throw EvalError("to_int: unsupported operand");
  }
  if (name == "to_float") {
    need_args(name, args, 1);
    if (args[0].is_float()) return args[0];
    if (args[0].is_int()) return Value::floats(static_cast<double>(args[0].as_int()));
    if (args[0].is_str()) {
      try {
        size_t used = 0;
        double v = std::stod(args[0].as_str(), &used);
        if (used != args[0].as_str().size()) throw std::invalid_argument("");
        return Value::floats(v);
      } catch (const std::exception&) {
        throw EvalError("to_float: cannot parse \"" + args[0].as_str() + "\"");
      }
    }
    throw EvalError("to_float: unsupported operand");
  }
  if (name == "concat") {
    need_args(name, args, 2);
    return Value::str(args[0].as_str() + args[1].as_str());
  }
  if (name == "exp") {
    need_args(name, args, 1);
    return Value::floats(std::exp(args[0].as_float()));
  }
  if (name == "log") {
    need_args(name, args, 1);
    return Value::floats(std::log(args[0].as_float()));
  }
  if (name == "sqrt") {
    need_args(name, args, 1);
    return Value::floats(std::sqrt(args[0].as_float()));
  }
  if (name == "pow") {
    need_args(name, args, 2);
    return Value::floats(std::pow(args[0].as_float(), args[1].as_float()));
  }
  if (name == "erf") {
    need_args(name, args, 1);
    return Value::floats(std::erf(args[0].as_float()));
  }
  if (name == "read_lines") {
    need_args(name, args, 1);
    return need_host(name, host)->read_lines(args[0].as_str());
  }
  if (name == "write_line") {
    need_args(name, args, 2);
    need_host(name, host)->write_line(args[0].as_str(), args[1].as_str());
    return Value::ints(0);
  }
  if (name == "burn_ms") {
    need_args(name, args, 1);
    need_host(name, host)->burn_ms(args[0].as_float());
    return Value::ints(0);
  }
  throw EvalError("unknown function '" + name + "'");
}

Value eval_expr(const Expr& e, const EvalHooks& hooks) {
  switch (e.k) {
    case Expr::K::IntLit: return Value::ints(e.int_val);
    case Expr::K::FloatLit: return Value::floats(e.float_val);
    case Expr::K::StrLit: return Value::str(e.str_val);
    case Expr::K::BoolLit: return Value::bools(e.bool_val);
    case Expr::K::Var: return hooks.resolve_var(e.var);
    case Expr::K::Unary: {
      Value a = eval_expr(*e.a, hooks);
      return e.un == Expr::Un::Not ? apply_not(a) : apply_neg(a);
    }
    case Expr::K::Binary: {
      // Strict evaluation: both sides always run, matching the dataflow
      // graph where both operand subtrees fire.
      Value a = eval_expr(*e.a, hooks);
      Value b = eval_expr(*e.b, hooks);
      return apply_binop(e.bin, a, b);
    }
    case Expr::K::Call: {
      std::vector<Value> args;
      args.reserve(e.args.size());
      for (const auto& arg : e.args) args.push_back(eval_expr(*arg, hooks));
      return hooks.call(e.call_name, args, e.loc);
    }
  }
  throw EvalError("bad expression");
}

namespace {

struct BodyRunner {
  std::map<std::string, Value>& env;
  BuiltinHost* host;
  EvalHooks hooks;

  BodyRunner(std::map<std::string, Value>& env_, BuiltinHost* host_) : env(env_), host(host_) {
    hooks.resolve_var = [this](const VarRef& v) -> Value {
      auto it = env.find(v.name);
      if (it == env.end()) throw EvalError("variable '" + v.name + "' is not bound");
      return it->second;
    };
    hooks.call = [this](const std::string& name, const std::vector<Value>& args, SourceLoc) {
      return call_builtin(name, args, host);
    };
  }

  void run(const Stmt& s) {
    try {
      run_inner(s);
    } catch (const EvalError& e) {
      std::string msg = e.what();
      if (msg.rfind("body line", 0) == 0) throw;  // already located
      throw EvalError("body line " + std::to_string(s.loc.line) + ": " + msg);
    }
  }

  void run_inner(const Stmt& s) {
    switch (s.k) {
      case Stmt::K::Assign: env[s.target] = eval_expr(*s.expr, hooks); return;
      case Stmt::K::ExprStmt: eval_expr(*s.expr, hooks); return;
      case Stmt::K::Block:
        for (const auto& sub : s.body) run(*sub);
        return;
      case Stmt::K::If:
        if (eval_expr(*s.expr, hooks).as_bool()) {
          run(*s.then_arm);
        } else if (s.else_arm) {
          run(*s.else_arm);
        }
        return;
      case Stmt::K::While:
        while (eval_expr(*s.expr, hooks).as_bool()) run(*s.loop_body);
        return;
      case Stmt::K::Return: throw EvalError("'return' is not allowed inside super bodies");
    }
  }
};

}  // namespace

void exec_body(const std::vector<StmtPtr>& stmts, std::map<std::string, Value>& env,
               BuiltinHost* host) {
  BodyRunner runner(env, host);
  for (const auto& s : stmts) runner.run(*s);
}

}  // namespace tcflow
