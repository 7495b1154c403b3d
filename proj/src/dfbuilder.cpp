#include "tcflow/dfbuilder.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace tcflow {

namespace {

// A value source: producer port plus the instance address consumers of
// this binding must put on their edges. Aliases like `x = v::0;` keep the
// address with the binding, so later reads of x wire to instance 0.
struct Source {
  uint32_t id = 0;
  uint32_t port = 0;
  AddressExpr addr;
};
using Sources = std::vector<Source>;

// Scoped bindings. A name can hold several sources after a conditional
// merge; exactly one of them fires per tag.
struct Env {
  std::map<std::string, Sources> vars;
  std::map<std::string, SourceLoc> poisoned;  // may-be-undefined names
};

struct Scan {
  std::set<std::string> reads, writes;

  std::set<std::string> all() const {
    std::set<std::string> s = reads;
    s.insert(writes.begin(), writes.end());
    return s;
  }
};

void scan_expr(const Expr& e, Scan& s) {
  switch (e.k) {
    case Expr::K::Var: s.reads.insert(e.var.name); break;
    case Expr::K::Unary: scan_expr(*e.a, s); break;
    case Expr::K::Binary:
      scan_expr(*e.a, s);
      scan_expr(*e.b, s);
      break;
    case Expr::K::Call:
      for (const auto& a : e.args) scan_expr(*a, s);
      break;
    default: break;
  }
}

void scan_stmt(const Stmt& st, Scan& s) {
  switch (st.k) {
    case Stmt::K::Assign:
      scan_expr(*st.expr, s);
      s.writes.insert(st.target);
      break;
    case Stmt::K::ExprStmt: scan_expr(*st.expr, s); break;
    case Stmt::K::If:
      scan_expr(*st.expr, s);
      scan_stmt(*st.then_arm, s);
      if (st.else_arm) scan_stmt(*st.else_arm, s);
      break;
    case Stmt::K::While:
      scan_expr(*st.expr, s);
      scan_stmt(*st.loop_body, s);
      break;
    case Stmt::K::Return:
      if (st.has_value) scan_expr(*st.expr, s);
      break;
    case Stmt::K::Block:
      for (const auto& sub : st.body) scan_stmt(*sub, s);
      break;
  }
}

bool expr_has_literal(const Expr& e) {
  switch (e.k) {
    case Expr::K::IntLit:
    case Expr::K::FloatLit:
    case Expr::K::StrLit:
    case Expr::K::BoolLit: return true;
    case Expr::K::Unary: return true;  // unary minus materializes a const
    case Expr::K::Binary: return expr_has_literal(*e.a) || expr_has_literal(*e.b);
    default: return false;
  }
}

bool stmt_has_literal(const Stmt& s) {
  switch (s.k) {
    case Stmt::K::Assign:
    case Stmt::K::ExprStmt: return expr_has_literal(*s.expr);
    case Stmt::K::Return: return s.has_value && expr_has_literal(*s.expr);
    case Stmt::K::If:
      return expr_has_literal(*s.expr) || stmt_has_literal(*s.then_arm) ||
             (s.else_arm && stmt_has_literal(*s.else_arm));
    case Stmt::K::While: return expr_has_literal(*s.expr) || stmt_has_literal(*s.loop_body);
    case Stmt::K::Block:
      return std::any_of(s.body.begin(), s.body.end(),
                         [](const StmtPtr& p) { return stmt_has_literal(*p); });
  }
  return false;
}

class GraphBuilder {
 public:
  GraphBuilder(const Program& prog, std::vector<Diagnostic>* warnings)
      : prog_(prog), warnings_(warnings) {}

  GraphIR run() {
    bool terminated = false;
    for (const auto& item : prog_.items) {
      if (terminated) {
        SourceLoc loc = item.k == Item::K::Stmt ? item.stmt->loc
                        : item.k == Item::K::Super ? item.super.loc
                        : item.k == Item::K::Decl ? item.decl.loc
                                                  : item.raw.loc;
        throw CompileError("unreachable code after return", loc);
      }
      switch (item.k) {
        case Item::K::Raw: break;  // external text; nothing flows through the graph
        case Item::K::Decl: declare(item.decl); break;
        case Item::K::Super: compile_super(item.super); break;
        case Item::K::Stmt:
          terminated = compile_stmt(*item.stmt, top_, {}, /*in_loop=*/false);
          break;
      }
    }
    if (!ret_node_) throw CompileError("program must end with a return statement", {});
    for (const auto& [name, decl] : decls_)
      if (decl.parout && !parout_produced_.count(name))
        throw CompileError(
            "treb_parout variable '" + name + "' is never an output of a parallel super", decl.loc);
    auto diags = validate_graph(g_);
    for (const auto& d : diags) {
      if (d.severity == Severity::Error) throw CompileError(d.message, d.loc);
      warn(d.message, d.loc);
    }
    return std::move(g_);
  }

 private:
  const Program& prog_;
  std::vector<Diagnostic>* warnings_;
  GraphIR g_;
  std::map<std::string, Decl> decls_;
  std::set<std::string> parout_produced_;
  Env top_;
  std::optional<uint32_t> ret_node_;

  void warn(std::string msg, SourceLoc loc) {
    if (warnings_) warnings_->push_back({Severity::Warning, std::move(msg), loc});
  }

  uint32_t add_instr(Instruction ins) {
    g_.instrs.push_back(std::move(ins));
    return static_cast<uint32_t>(g_.instrs.size() - 1);
  }

  void add_edge(const Source& src, uint32_t dst, uint32_t dport, SourceLoc loc = {},
                bool local = false, std::optional<AddressExpr> starter = std::nullopt) {
    g_.edges.push_back({src.id, src.port, dst, dport, src.addr, local, starter, loc});
  }

  void add_edges(const Sources& srcs, uint32_t dst, uint32_t dport, SourceLoc loc = {}) {
    for (const auto& s : srcs) add_edge(s, dst, dport, loc);
  }

  uint32_t add_const(Value v, const Sources& pulse, SourceLoc loc) {
    Instruction ins;
    ins.op = Op::Const;
    ins.const_val = std::move(v);
    ins.loc = loc;
    uint32_t id = add_instr(std::move(ins));
    add_edges(pulse, id, 0, loc);  // trigger: fire once per region tag
    return id;
  }

  uint32_t add_simple(Op op, SourceLoc loc) {
    Instruction ins;
    ins.op = op;
    ins.loc = loc;
    return add_instr(std::move(ins));
  }

  const Decl& require_decl(const std::string& name, SourceLoc loc) {
    auto it = decls_.find(name);
    if (it == decls_.end()) throw CompileError("variable '" + name + "' is not declared", loc);
    return it->second;
  }

  void declare(const Decl& d) {
    if (decls_.count(d.name)) throw CompileError("duplicate declaration of '" + d.name + "'", d.loc);
    decls_[d.name] = d;
  }

  bool source_needs_addr(const Source& s) const {
    return g_.is_parallel_super(s.id) && s.addr.is_default();
  }

  const Sources& lookup(const Env& env, const std::string& name, SourceLoc loc) {
    auto poisoned = env.poisoned.find(name);
    if (poisoned != env.poisoned.end())
      throw CompileError("variable '" + name +
                             "' may be undefined here (assigned only on one conditional path or "
                             "inside a loop)",
                         loc);
    auto it = env.vars.find(name);
    if (it == env.vars.end())
      throw CompileError("use of undefined variable '" + name + "'", loc);
    return it->second;
  }

  // Resolves a variable reference to its sources with the final instance
  // address. `in_super_input` admits the mytid family.
  Sources resolve_ref(const VarRef& v, const Env& env, bool in_super_input) {
    require_decl(v.name, v.loc);
    Sources out = lookup(env, v.name, v.loc);
    if (v.addr) {
      bool mytid_family =
          v.addr->kind == AddressExpr::Kind::MyTid || v.addr->is_mytid_offset();
      if (mytid_family && !in_super_input)
        throw CompileError("mytid addressing is only allowed in super input lists", v.loc);
      for (auto& s : out) {
        if (!s.addr.is_default())
          throw CompileError("variable '" + v.name + "' is already bound to instance address '" +
                                 s.addr.to_string() + "' and cannot be re-addressed",
                             v.loc);
        s.addr = *v.addr;
      }
    }
    for (const auto& s : out)
      if (source_needs_addr(s))
        throw CompileError("'" + v.name +
                               "' is produced by a parallel super and requires '::' instance "
                               "addressing",
                           v.loc);
    return out;
  }

  // --- expressions ----------------------------------------------------

  Sources compile_expr(const Expr& e, const Env& env, const Sources& pulse) {
    switch (e.k) {
      case Expr::K::IntLit: return {{add_const(Value::ints(e.int_val), pulse, e.loc), 0, {}}};
      case Expr::K::FloatLit:
        return {{add_const(Value::floats(e.float_val), pulse, e.loc), 0, {}}};
      case Expr::K::StrLit: return {{add_const(Value::str(e.str_val), pulse, e.loc), 0, {}}};
      case Expr::K::BoolLit: return {{add_const(Value::bools(e.bool_val), pulse, e.loc), 0, {}}};
      case Expr::K::Var: return resolve_ref(e.var, env, /*in_super_input=*/false);
      case Expr::K::Unary: {
        if (e.un == Expr::Un::Not) {
          uint32_t id = add_simple(Op::Not, e.loc);
          add_edges(compile_expr(*e.a, env, pulse), id, 0, e.loc);
          return {{id, 0, {}}};
        }
        uint32_t zero = add_const(Value::ints(0), pulse, e.loc);
        uint32_t id = add_simple(Op::Sub, e.loc);
        add_edge({zero, 0, {}}, id, 0, e.loc);
        add_edges(compile_expr(*e.a, env, pulse), id, 1, e.loc);
        return {{id, 0, {}}};
      }
      case Expr::K::Binary: {
        uint32_t id = add_simple(binop_to_op(e.bin), e.loc);
        add_edges(compile_expr(*e.a, env, pulse), id, 0, e.loc);
        add_edges(compile_expr(*e.b, env, pulse), id, 1, e.loc);
        return {{id, 0, {}}};
      }
      case Expr::K::Call:
        throw CompileError("function calls are only allowed inside super bodies", e.loc);
    }
    throw CompileError("bad expression", e.loc);
  }

  // --- statements -----------------------------------------------------

  // Returns true when the statement terminates the program path (return,
  // or a conditional whose both arms do).
  bool compile_stmt(const Stmt& s, Env& env, const Sources& pulse, bool in_loop) {
    switch (s.k) {
      case Stmt::K::Assign: {
        const Decl& d = require_decl(s.target, s.loc);
        if (d.parout)
          throw CompileError(
              "treb_parout variable '" + s.target + "' can only be produced by a parallel super",
              s.loc);
        env.vars[s.target] = compile_expr(*s.expr, env, pulse);
        env.poisoned.erase(s.target);
        return false;
      }
      case Stmt::K::Block: {
        bool terminated = false;
        for (const auto& sub : s.body) {
          if (terminated) throw CompileError("unreachable code after return", sub->loc);
          terminated = compile_stmt(*sub, env, pulse, in_loop);
        }
        return terminated;
      }
      case Stmt::K::If: return compile_conditional(s, env, pulse, in_loop);
      case Stmt::K::While: compile_loop(s, env, pulse); return false;
      case Stmt::K::Return: {
        if (in_loop) throw CompileError("return is not allowed inside a loop", s.loc);
        if (!ret_node_) {
          Instruction ins;
          ins.op = Op::Ret;
          ins.loc = s.loc;
          ret_node_ = add_instr(std::move(ins));
        }
        if (s.has_value) add_edges(compile_expr(*s.expr, env, pulse), *ret_node_, 0, s.loc);
        return true;
      }
      case Stmt::K::ExprStmt:
        throw CompileError("expression statements are only allowed inside super bodies", s.loc);
    }
    return false;
  }

  // One steer per variable used in either arm routes its value into the
  // taken arm; a lazily created pulse steer triggers arm literals. After
  // the conditional each assigned variable carries one producer per arm
  // (or the steer pass-through), exactly one of which fires per tag.
  bool compile_conditional(const Stmt& s, Env& env, const Sources& pulse, bool in_loop) {
    Sources cond = compile_expr(*s.expr, env, pulse);

    Scan then_scan, else_scan;
    scan_stmt(*s.then_arm, then_scan);
    if (s.else_arm) scan_stmt(*s.else_arm, else_scan);
    std::set<std::string> used = then_scan.all();
    for (const auto& n : else_scan.all()) used.insert(n);

    std::map<std::string, uint32_t> steers;
    for (const auto& name : used) {
      auto it = env.vars.find(name);
      if (it == env.vars.end()) continue;  // arm-local; reads before writes fail there
      for (const auto& src : it->second)
        if (source_needs_addr(src))
          throw CompileError("output of parallel super '" + name +
                                 "' cannot be used inside a conditional arm; assign it to a "
                                 "plain variable first",
                             s.loc);
      uint32_t steer = add_simple(Op::Steer, s.loc);
      add_edges(cond, steer, 0, s.loc);
      add_edges(it->second, steer, 1, s.loc);
      steers[name] = steer;
    }

    std::optional<uint32_t> pulse_steer;
    auto arm_pulse = [&](uint32_t port) -> Sources {
      if (!pulse_steer) {
        pulse_steer = add_simple(Op::Steer, s.loc);
        add_edges(cond, *pulse_steer, 0, s.loc);
        add_edges(cond, *pulse_steer, 1, s.loc);
      }
      return {{*pulse_steer, port, {}}};
    };

    auto compile_arm = [&](const Stmt& arm, uint32_t port, Env& arm_env) -> bool {
      arm_env.poisoned = env.poisoned;
      for (const auto& [name, steer] : steers) arm_env.vars[name] = {{steer, port, {}}};
      Sources ap = stmt_has_literal(arm) ? arm_pulse(port) : Sources{};
      return compile_stmt(arm, arm_env, ap, in_loop);
    };

    Env then_env, else_env;
    bool then_returns = compile_arm(*s.then_arm, 0, then_env);
    bool else_returns = false;
    if (s.else_arm) {
      else_returns = compile_arm(*s.else_arm, 1, else_env);
    } else {
      for (const auto& [name, steer] : steers) else_env.vars[name] = {{steer, 1, {}}};
    }

    if (then_returns != else_returns)
      throw CompileError("either both arms of a conditional must return or neither may", s.loc);
    if (then_returns) return true;

    std::set<std::string> assigned = then_scan.writes;
    assigned.insert(else_scan.writes.begin(), else_scan.writes.end());
    for (const auto& name : assigned) {
      bool bound_before = env.vars.count(name) > 0;
      bool in_then = then_scan.writes.count(name) > 0;
      bool in_else = else_scan.writes.count(name) > 0;
      if (!bound_before && !(in_then && in_else && s.else_arm)) {
        env.poisoned[name] = s.loc;
        env.vars.erase(name);
        continue;
      }
      Sources merged = in_then ? then_env.vars[name] : Sources{{steers[name], 0, {}}};
      Sources other = (in_else && s.else_arm) ? else_env.vars[name] : Sources{{steers[name], 1, {}}};
      merged.insert(merged.end(), other.begin(), other.end());
      env.vars[name] = std::move(merged);
      env.poisoned.erase(name);
    }
    return false;
  }

  // Classic tagged-token loop schema, per carried variable: TagPush on
  // entry; a merged port (entry edge + back edge) feeding the condition
  // and the steer; steer true port into the body, false port through
  // TagPop to the code after the loop; the body's final producer feeds
  // IncTag, which closes the cycle back at the merged port.
  void compile_loop(const Stmt& s, Env& env, const Sources& pulse) {
    Scan scan;
    scan_expr(*s.expr, scan);
    scan_stmt(*s.loop_body, scan);

    std::vector<std::string> carried;
    for (const auto& name : scan.all()) {
      auto it = env.vars.find(name);
      if (it == env.vars.end()) continue;
      for (const auto& src : it->second)
        if (source_needs_addr(src) && scan.reads.count(name))
          throw CompileError("output of parallel super '" + name +
                                 "' cannot be used inside a loop; assign it to a plain variable "
                                 "first",
                             s.loc);
      carried.push_back(name);
    }
    std::sort(carried.begin(), carried.end());

    bool synthetic = carried.empty();
    if (synthetic) {
      warn("non-terminating loop: condition reads no loop state", s.loc);
      uint32_t c = add_const(Value::ints(0), pulse, s.loc);
      env.vars["$loop"] = {{c, 0, {}}};
      carried.push_back("$loop");
    }

    struct Frame {
      uint32_t tag_push, inc_tag, steer, tag_pop;
    };
    std::map<std::string, Frame> frames;
    for (const auto& name : carried) {
      Frame f{};
      f.tag_push = add_simple(Op::TagPush, s.loc);
      add_edges(env.vars[name], f.tag_push, 0, s.loc);
      f.inc_tag = add_simple(Op::IncTag, s.loc);
      f.steer = add_simple(Op::Steer, s.loc);
      f.tag_pop = add_simple(Op::TagPop, s.loc);
      add_edge({f.tag_push, 0, {}}, f.steer, 1, s.loc);
      add_edge({f.inc_tag, 0, {}}, f.steer, 1, s.loc);
      add_edge({f.steer, 1, {}}, f.tag_pop, 0, s.loc);
      frames[name] = f;
    }

    // Condition region: merged values, literals pulsed by the pilot carrier.
    const Frame& pilot = frames.begin()->second;
    Env cond_env;
    cond_env.poisoned = env.poisoned;
    for (const auto& [name, f] : frames)
      cond_env.vars[name] = {{f.tag_push, 0, {}}, {f.inc_tag, 0, {}}};
    Sources cond_pulse = {{pilot.tag_push, 0, {}}, {pilot.inc_tag, 0, {}}};
    Sources cond = compile_expr(*s.expr, cond_env, cond_pulse);
    for (const auto& [name, f] : frames) add_edges(cond, f.steer, 0, s.loc);

    // Body region: steered values, literals pulsed by the pilot's true port.
    Env body_env;
    body_env.poisoned = env.poisoned;
    for (const auto& [name, f] : frames) body_env.vars[name] = {{f.steer, 0, {}}};
    Sources body_pulse = {{pilot.steer, 0, {}}};
    compile_stmt(*s.loop_body, body_env, body_pulse, /*in_loop=*/true);

    // Back edges from the body's final producers.
    for (const auto& [name, f] : frames) add_edges(body_env.vars[name], f.inc_tag, 0, s.loc);

    // After the loop the outer tag is restored by TagPop.
    for (const auto& [name, f] : frames) {
      if (name == "$loop") {
        env.vars.erase(name);
        continue;
      }
      env.vars[name] = {{f.tag_pop, 0, {}}};
    }
    for (const auto& name : scan.writes)
      if (!frames.count(name)) {
        env.poisoned[name] = s.loc;
        env.vars.erase(name);
      }
  }

  // --- supers -----------------------------------------------------------

  void compile_super(const SuperDefAst& sd) {
    Instruction ins;
    ins.op = Op::Super;
    ins.loc = sd.loc;
    SuperDef def;
    def.name = sd.name;
    def.mode = sd.mode;
    def.body = sd.body;
    for (const auto& in : sd.inputs) {
      const Decl& d = require_decl(in.name, in.loc);
      def.ins.push_back({in.name, d.type});
    }
    for (const auto& out : sd.outputs) {
      const Decl& d = require_decl(out, sd.loc);
      if (sd.mode == SuperMode::Parallel && !d.parout)
        throw CompileError("output '" + out + "' of parallel super '" + sd.name +
                               "' must be declared treb_parout",
                           sd.loc);
      if (sd.mode == SuperMode::Single && d.parout)
        throw CompileError(
            "treb_parout variable '" + out + "' cannot be the output of a single super", sd.loc);
      def.outs.push_back({out, d.type});
    }
    ins.super = std::move(def);
    uint32_t id = add_instr(std::move(ins));

    for (uint32_t i = 0; i < sd.inputs.size(); ++i) {
      const VarRef& in = sd.inputs[i];
      switch (in.prefix) {
        case VarRef::Prefix::Local: {
          if (sd.mode != SuperMode::Parallel)
            throw CompileError("local input requires a parallel super", in.loc);
          auto out_it = std::find(sd.outputs.begin(), sd.outputs.end(), in.name);
          if (out_it == sd.outputs.end())
            throw CompileError(
                "local input '" + in.name + "' must reference an output of the same super", in.loc);
          uint32_t out_port = static_cast<uint32_t>(out_it - sd.outputs.begin());
          add_edge({id, out_port, *in.addr}, id, i, in.loc, /*local=*/true);
          break;
        }
        case VarRef::Prefix::Starter: {
          bool has_local = std::any_of(sd.inputs.begin(), sd.inputs.end(), [](const VarRef& v) {
            return v.prefix == VarRef::Prefix::Local;
          });
          if (!has_local)
            throw CompileError("starter input on a super with no local input", in.loc);
          VarRef plain = in;
          plain.prefix = VarRef::Prefix::None;
          Sources srcs = resolve_ref(plain, top_, /*in_super_input=*/true);
          for (const auto& src : srcs)
            add_edge({src.id, src.port, {}}, id, i, in.loc, false, src.addr);
          break;
        }
        case VarRef::Prefix::None: {
          Sources srcs = resolve_ref(in, top_, /*in_super_input=*/true);
          add_edges(srcs, id, i, in.loc);
          break;
        }
      }
    }

    for (uint32_t o = 0; o < sd.outputs.size(); ++o) {
      const std::string& name = sd.outputs[o];
      top_.vars[name] = {{id, o, {}}};
      top_.poisoned.erase(name);
      if (sd.mode == SuperMode::Parallel) parout_produced_.insert(name);
    }
  }
};

}  // namespace

GraphIR build_graph(const Program& prog, std::vector<Diagnostic>* warnings) {
  GraphBuilder b(prog, warnings);
  return b.run();
}

std::string emit_dot(const GraphIR& g) {
  std::ostringstream os;
  os << "digraph g {\n";
  for (uint32_t id = 0; id < g.instrs.size(); ++id) {
    const Instruction& ins = g.instrs[id];
    os << "  n" << id << " [label=\"" << id << ":";
    if (ins.op == Op::Super) {
      os << ins.super->name;
      if (ins.super->mode == SuperMode::Parallel) os << " [xN]";
    } else {
      os << op_name(ins.op);
    }
    os << "\"";
    if (g.is_parallel_super(id)) os << ", peripheries=2";
    os << "];\n";
  }
  auto edges = g.edges;
  std::sort(edges.begin(), edges.end(), [](const EdgeSpec& a, const EdgeSpec& b) {
    return std::tuple(a.src, a.src_port, a.dst, a.dst_port, a.addr.kind, a.addr.k) <
           std::tuple(b.src, b.src_port, b.dst, b.dst_port, b.addr.kind, b.addr.k);
  });
  for (const auto& e : edges) {
    os << "  n" << e.src << " -> n" << e.dst;
    std::vector<std::string> labels;
    if (g.instrs[e.src].op == Op::Steer) labels.push_back(e.src_port == 0 ? "true" : "false");
    if (e.local)
      labels.push_back("local " + e.addr.to_string());
    else if (e.starter)
      labels.push_back("starter " + e.starter->to_string());
    else if (!e.addr.is_default())
      labels.push_back(e.addr.to_string());
    if (!labels.empty()) {
      os << " [label=\"";
      for (size_t i = 0; i < labels.size(); ++i) os << (i ? " " : "") << labels[i];
      os << "\"]";
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace tcflow
