#include "tcflow/ir.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace tcflow {

bool op_is_binop(Op op) {
  return op >= Op::Add && op <= Op::Or;
}

BinOp op_to_binop(Op op) {
  return static_cast<BinOp>(static_cast<uint8_t>(op) - static_cast<uint8_t>(Op::Add));
}

Op binop_to_op(BinOp op) {
  return static_cast<Op>(static_cast<uint8_t>(Op::Add) + static_cast<uint8_t>(op));
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Not: return "not";
    case Op::Steer: return "steer";
    case Op::IncTag: return "inctag";
    case Op::TagPush: return "tagpush";
    case Op::TagPop: return "tagpop";
    case Op::Super: return "super";
    case Op::Ret: return "ret";
    default: return binop_name(op_to_binop(op));
  }
}

std::optional<Op> op_from_name(const std::string& name) {
  static const std::unordered_map<std::string, Op> table = [] {
    std::unordered_map<std::string, Op> t;
    for (int i = 0; i <= static_cast<int>(Op::Ret); ++i) {
      Op op = static_cast<Op>(i);
      t[op_name(op)] = op;
    }
    return t;
  }();
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string AddressExpr::to_string() const {
  switch (kind) {
    case Kind::Default: return "default";
    case Kind::All: return "all";
    case Kind::Const: return std::to_string(k);
    case Kind::MyTid: return "mytid";
    case Kind::MyTidPlus: return "mytid+" + std::to_string(k);
    case Kind::MyTidMinus: return "mytid-" + std::to_string(k);
    case Kind::LastTid: return "lasttid";
  }
  return "?";
}

std::optional<AddressExpr> AddressExpr::parse(const std::string& text) {
  if (text == "default") return AddressExpr{};
  if (text == "all") return AddressExpr{Kind::All, 0};
  if (text == "mytid") return AddressExpr{Kind::MyTid, 0};
  if (text == "lasttid") return AddressExpr{Kind::LastTid, 0};
  if (text.rfind("mytid+", 0) == 0 || text.rfind("mytid-", 0) == 0) {
    const std::string num = text.substr(6);
    if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    return AddressExpr{text[5] == '+' ? Kind::MyTidPlus : Kind::MyTidMinus,
                       static_cast<uint32_t>(std::stoul(num))};
  }
  if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos)
    return AddressExpr{Kind::Const, static_cast<uint32_t>(std::stoul(text))};
  return std::nullopt;
}

uint32_t Instruction::max_in_ports() const {
  switch (op) {
    case Op::Const: return 1;  // optional trigger
    case Op::Not:
    case Op::IncTag:
    case Op::TagPush:
    case Op::TagPop: return 1;
    case Op::Steer: return 2;
    case Op::Super: return static_cast<uint32_t>(super->ins.size());
    case Op::Ret: return 1;  // optional result
    default: return 2;       // binops
  }
}

uint32_t Instruction::out_ports() const {
  switch (op) {
    case Op::Steer: return 2;
    case Op::Super: return static_cast<uint32_t>(super->outs.size());
    case Op::Ret: return 0;
    default: return 1;
  }
}

bool Instruction::structurally_equal(const Instruction& rhs) const {
  if (op != rhs.op) return false;
  if (op == Op::Const && !(const_val == rhs.const_val)) return false;
  if (op == Op::Super && !(super == rhs.super)) return false;
  return true;
}

bool EdgeSpec::structurally_equal(const EdgeSpec& rhs) const {
  return src == rhs.src && src_port == rhs.src_port && dst == rhs.dst && dst_port == rhs.dst_port &&
         addr == rhs.addr && local == rhs.local && starter == rhs.starter;
}

bool GraphIR::structurally_equal(const GraphIR& rhs) const {
  if (argv_arity != rhs.argv_arity) return false;
  if (instrs.size() != rhs.instrs.size() || edges.size() != rhs.edges.size()) return false;
  for (size_t i = 0; i < instrs.size(); ++i)
    if (!instrs[i].structurally_equal(rhs.instrs[i])) return false;
  // Edge order is not significant.
  auto key = [](const EdgeSpec& e) {
    return std::tuple(e.src, e.src_port, e.dst, e.dst_port, static_cast<int>(e.addr.kind), e.addr.k,
                      e.local, e.starter.has_value(),
                      e.starter ? static_cast<int>(e.starter->kind) : 0, e.starter ? e.starter->k : 0);
  };
  auto a = edges, b = rhs.edges;
  auto lt = [&](const EdgeSpec& x, const EdgeSpec& y) { return key(x) < key(y); };
  std::sort(a.begin(), a.end(), lt);
  std::sort(b.begin(), b.end(), lt);
  for (size_t i = 0; i < a.size(); ++i)
    if (!a[i].structurally_equal(b[i])) return false;
  return true;
}

std::optional<EdgeSpec> GraphIR::local_edge_of(uint32_t id) const {
  for (const auto& e : edges)
    if (e.local && e.dst == id) return e;
  return std::nullopt;
}

std::set<uint32_t> resolve_address(const AddressExpr& addr, uint32_t consumer_instance,
                                   uint32_t producer_arity, uint32_t n_tasks, SourceLoc loc) {
  (void)n_tasks;
  std::set<uint32_t> out;
  switch (addr.kind) {
    case AddressExpr::Kind::Default:
    case AddressExpr::Kind::All:
      for (uint32_t i = 0; i < producer_arity; ++i) out.insert(i);
      break;
    case AddressExpr::Kind::Const:
      if (addr.k >= producer_arity)
        throw CompileError("instance address ::" + std::to_string(addr.k) +
                               " out of range (producer has " + std::to_string(producer_arity) +
                               " instance(s))",
                           loc);
      out.insert(addr.k);
      break;
    case AddressExpr::Kind::MyTid:
      if (consumer_instance < producer_arity) out.insert(consumer_instance);
      break;
    case AddressExpr::Kind::MyTidPlus:
      if (consumer_instance + addr.k < producer_arity) out.insert(consumer_instance + addr.k);
      break;
    case AddressExpr::Kind::MyTidMinus:
      if (consumer_instance >= addr.k && consumer_instance - addr.k < producer_arity)
        out.insert(consumer_instance - addr.k);
      break;
    case AddressExpr::Kind::LastTid:
      out.insert(producer_arity - 1);
      break;
  }
  return out;
}

uint32_t ConcreteGraph::expected_input_count(uint32_t node) const {
  uint32_t n = 0;
  for (const auto& p : expect[node])
    if (p.connected) ++n;
  return n;
}

std::string ConcreteGraph::node_name(uint32_t node) const {
  const auto& n = nodes[node];
  const auto& ins = ir->instrs[n.tmpl];
  std::string name = std::to_string(n.tmpl) + "." + std::to_string(n.inst) + ":";
  name += ins.op == Op::Super ? ins.super->name : op_name(ins.op);
  return name;
}

size_t ConcreteGraph::edge_count() const {
  size_t n = 0;
  for (const auto& ports : out)
    for (const auto& es : ports) n += es.size();
  return n;
}

namespace {

// Instances of `dst` that a starter edge reaches: the chain heads left
// uncovered by the super's local dependency.
std::set<uint32_t> starter_instances(const EdgeSpec& local, uint32_t n_tasks) {
  std::set<uint32_t> out;
  uint32_t k = std::min(local.addr.k, n_tasks);
  if (local.addr.kind == AddressExpr::Kind::MyTidMinus) {
    for (uint32_t i = 0; i < k; ++i) out.insert(i);
  } else {
    for (uint32_t i = n_tasks - k; i < n_tasks; ++i) out.insert(i);
  }
  return out;
}

}  // namespace

ConcreteGraph expand_instances(std::shared_ptr<const GraphIR> g, uint32_t n_tasks,
                               std::vector<Diagnostic>* warnings) {
  const GraphIR& ir = *g;
  ConcreteGraph cg;
  cg.ir = g;
  cg.n_tasks = n_tasks;

  cg.first_node.resize(ir.instrs.size());
  cg.instance_count.resize(ir.instrs.size());
  for (uint32_t id = 0; id < ir.instrs.size(); ++id) {
    uint32_t count = ir.arity_of(id, n_tasks);
    cg.first_node[id] = static_cast<uint32_t>(cg.nodes.size());
    cg.instance_count[id] = count;
    for (uint32_t i = 0; i < count; ++i) cg.nodes.push_back({id, i});
  }

  cg.out.resize(cg.nodes.size());
  cg.expect.resize(cg.nodes.size());
  for (uint32_t n = 0; n < cg.nodes.size(); ++n) {
    const Instruction& ins = cg.instr_of(n);
    cg.out[n].resize(ins.out_ports());
    cg.expect[n].resize(ins.max_in_ports());
    // Only super ports may be legitimately unconnected for an instance
    // (local/starter chains); simple instructions always wait on every
    // port except the optional const trigger / ret input.
    if (ins.op != Op::Super && !ins.in_port_optional())
      for (auto& pe : cg.expect[n]) pe.connected = true;
  }

  for (const auto& e : ir.edges) {
    const uint32_t producer_arity = ir.arity_of(e.src, n_tasks);
    const uint32_t consumer_arity = ir.arity_of(e.dst, n_tasks);
    const AddressExpr& effective = e.starter ? *e.starter : e.addr;
    const bool gather = effective.kind == AddressExpr::Kind::All;

    std::set<uint32_t> starter_set;
    if (e.starter) {
      auto local = ir.local_edge_of(e.dst);
      if (!local)
        throw CompileError("starter input requires a local input on the same super", e.loc);
      if (local->addr.k >= n_tasks && warnings)
        warnings->push_back({Severity::Warning,
                             "local offset " + std::to_string(local->addr.k) +
                                 " >= task count " + std::to_string(n_tasks) +
                                 "; super degenerates to fully parallel",
                             e.loc});
      starter_set = starter_instances(*local, n_tasks);
    }

    for (uint32_t ci = 0; ci < consumer_arity; ++ci) {
      if (e.starter && !starter_set.count(ci)) continue;
      for (uint32_t pi : resolve_address(effective, ci, producer_arity, n_tasks, e.loc)) {
        uint32_t src_node = cg.node_index(e.src, pi);
        uint32_t dst_node = cg.node_index(e.dst, ci);
        cg.out[src_node][e.src_port].push_back({dst_node, e.dst_port, gather});
        auto& pe = cg.expect[dst_node][e.dst_port];
        pe.connected = true;
        if (gather) {
          pe.gather = true;
          pe.gather_count = producer_arity;
        }
      }
    }
  }

  cg.placement = default_placement(cg, cg.n_pes);
  return cg;
}

namespace {

struct Validator {
  const GraphIR& g;
  std::vector<Diagnostic> diags;

  void error(std::string msg, SourceLoc loc = {}) {
    diags.push_back({Severity::Error, std::move(msg), loc});
  }
  void warn(std::string msg, SourceLoc loc = {}) {
    diags.push_back({Severity::Warning, std::move(msg), loc});
  }

  void check_ports() {
    std::vector<std::vector<int>> in_edges(g.instrs.size());
    for (auto& v : in_edges) v.clear();
    for (uint32_t id = 0; id < g.instrs.size(); ++id)
      in_edges[id].assign(g.instrs[id].max_in_ports(), 0);

    for (const auto& e : g.edges) {
      if (e.src >= g.instrs.size() || e.dst >= g.instrs.size()) {
        error("edge endpoint out of range", e.loc);
        continue;
      }
      const Instruction& src = g.instrs[e.src];
      const Instruction& dst = g.instrs[e.dst];
      if (e.src_port >= src.out_ports()) {
        error("source port " + std::to_string(e.src_port) + " out of range for " + op_name(src.op),
              e.loc);
        continue;
      }
      if (e.dst_port >= dst.max_in_ports()) {
        error("destination port " + std::to_string(e.dst_port) + " out of range for " +
                  op_name(dst.op),
              e.loc);
        continue;
      }
      in_edges[e.dst][e.dst_port]++;

      const bool src_parallel = g.is_parallel_super(e.src);
      const bool dst_parallel = g.is_parallel_super(e.dst);
      const AddressExpr& effective = e.starter ? *e.starter : e.addr;
      if (src_parallel && effective.is_default())
        error("explicit addressing required on edge from parallel super '" + src.super->name + "'",
              e.loc);
      if (!dst_parallel && effective.is_mytid_offset() && !e.starter)
        error("mytid offset addressing on a single-instance consumer leaves the port unconnected",
              e.loc);
      if (e.local) {
        if (e.src != e.dst || !dst_parallel)
          error("local input must connect instances of one parallel super", e.loc);
        else if (!e.addr.is_mytid_offset())
          error("local input requires (mytid + NUMBER) or (mytid - NUMBER) addressing", e.loc);
      }
      if (e.starter && !g.local_edge_of(e.dst))
        error("starter input on a super with no local input", e.loc);
    }

    // Gather exclusivity: a port with an `all` edge admits no other edge.
    std::map<std::pair<uint32_t, uint32_t>, std::pair<int, int>> port_mix;  // (all, other)
    for (const auto& e : g.edges) {
      if (e.dst >= g.instrs.size() || e.dst_port >= g.instrs[e.dst].max_in_ports()) continue;
      auto& mix = port_mix[{e.dst, e.dst_port}];
      const AddressExpr& effective = e.starter ? *e.starter : e.addr;
      (effective.kind == AddressExpr::Kind::All ? mix.first : mix.second)++;
    }
    for (const auto& [port, mix] : port_mix) {
      if (mix.first > 1)
        error("multiple gather edges into one port of instruction " + std::to_string(port.first));
      if (mix.first >= 1 && mix.second >= 1)
        error("gather edge mixed with non-gather edges on one port of instruction " +
              std::to_string(port.first));
    }

    for (uint32_t id = 0; id < g.instrs.size(); ++id) {
      const Instruction& ins = g.instrs[id];
      for (uint32_t p = 0; p < ins.max_in_ports(); ++p) {
        if (in_edges[id][p] == 0 && !ins.in_port_optional())
          error("input port " + std::to_string(p) + " of instruction " + std::to_string(id) + " (" +
                    op_name(ins.op) + ") has no incoming edge",
                ins.loc);
      }
    }
  }

  // Tag-depth labeling: TagPush is +1, TagPop is -1, everything else 0.
  // A consistent labeling must exist; Ret must sit at depth 0.
  void check_tag_balance() {
    const size_t n = g.instrs.size();
    std::vector<int> depth(n, -1);
    auto delta = [&](uint32_t id) {
      switch (g.instrs[id].op) {
        case Op::TagPush: return 1;
        case Op::TagPop: return -1;
        default: return 0;
      }
    };
    std::vector<std::vector<uint32_t>> succ(n);
    std::vector<int> indeg(n, 0);
    for (const auto& e : g.edges) {
      if (e.src >= n || e.dst >= n) continue;
      succ[e.src].push_back(e.dst);
      indeg[e.dst]++;
    }
    std::vector<uint32_t> stack;
    for (uint32_t id = 0; id < n; ++id)
      if (indeg[id] == 0) {
        depth[id] = 0;
        stack.push_back(id);
      }
    bool conflict = false;
    while (!stack.empty()) {
      uint32_t id = stack.back();
      stack.pop_back();
      int out_depth = depth[id] + delta(id);
      for (uint32_t s : succ[id]) {
        if (depth[s] == -1) {
          depth[s] = out_depth;
          stack.push_back(s);
        } else if (depth[s] != out_depth) {
          conflict = true;
        }
        if (depth[s] < 0) conflict = true;
      }
    }
    if (conflict) {
      error("tag push/pop unbalanced along some path");
      return;
    }
    for (uint32_t id = 0; id < n; ++id)
      if (g.instrs[id].op == Op::Ret && depth[id] > 0)
        error("return reachable at tag depth " + std::to_string(depth[id]) +
                  "; operands reaching ret must carry the empty tag",
              g.instrs[id].loc);
  }

  // Every cycle must pass through an IncTag: dropping IncTag nodes must
  // leave the graph acyclic. Local self-edges expand to forward edges
  // between distinct instances, so they are not cycles.
  void check_cycles() {
    const size_t n = g.instrs.size();
    std::vector<std::vector<uint32_t>> succ(n);
    for (const auto& e : g.edges) {
      if (e.src >= n || e.dst >= n || e.local) continue;
      if (g.instrs[e.src].op == Op::IncTag || g.instrs[e.dst].op == Op::IncTag) continue;
      succ[e.src].push_back(e.dst);
    }
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    bool cyclic = false;
    auto dfs = [&](auto&& self, uint32_t v) -> void {
      state[v] = 1;
      for (uint32_t s : succ[v]) {
        if (state[s] == 1) {
          cyclic = true;
        } else if (state[s] == 0) {
          self(self, s);
        }
      }
      state[v] = 2;
    };
    for (uint32_t id = 0; id < n && !cyclic; ++id)
      if (state[id] == 0) dfs(dfs, id);
    if (cyclic) error("untagged cycle: a cycle without an inctag instruction can never match");
  }
};

}  // namespace

std::vector<Diagnostic> validate_graph(const GraphIR& g) {
  Validator v{g};
  v.check_ports();
  v.check_tag_balance();
  v.check_cycles();
  return std::move(v.diags);
}

std::vector<uint32_t> default_placement(const ConcreteGraph& cg, uint32_t n_pes) {
  std::vector<uint32_t> placement(cg.nodes.size(), 0);
  if (n_pes == 0) n_pes = 1;
  uint32_t rr = 0;
  for (uint32_t id = 0; id < cg.ir->instrs.size(); ++id) {
    const bool parallel = cg.ir->is_parallel_super(id);
    for (uint32_t i = 0; i < cg.instance_count[id]; ++i) {
      uint32_t node = cg.first_node[id] + i;
      placement[node] = parallel ? i % n_pes : rr % n_pes;
    }
    if (!parallel) ++rr;
  }
  return placement;
}

}  // namespace tcflow
