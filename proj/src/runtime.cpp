#include "tcflow/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

#include "tcflow/parser.hpp"
#include "tcflow/steal_deque.hpp"

namespace tcflow {

namespace {

using Clock = std::chrono::steady_clock;

// write_line targets are serialized per path for the whole process.
class FileIo {
 public:
  static FileIo& instance() {
    static FileIo io;
    return io;
  }

  Value read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EvalError("read_lines: cannot open '" + path + "'");
    std::vector<Value> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(Value::str(line));
    return Value::list(std::move(lines));
  }

  void write_line(const std::string& path, const std::string& line) {
    std::unique_lock registry_lock(mu_);
    std::mutex& file_mu = files_[path];
    registry_lock.unlock();
    std::lock_guard lock(file_mu);
    std::ofstream out(path, std::ios::app);
    if (!out) throw EvalError("write_line: cannot open '" + path + "'");
    out << line << "\n";
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::mutex> files_;
};

}  // namespace

// --- MatchStore -------------------------------------------------------

std::optional<Activation> MatchStore::deliver(const Message& msg) {
  const uint32_t node = msg.dst_node;
  const auto& expects = cg_->expect[node];
  if (msg.dst_port >= expects.size() || !expects[msg.dst_port].connected)
    throw RuntimeError("message to unconnected port " + std::to_string(msg.dst_port) + " of node " +
                       cg_->node_name(node));
  NodeStore& ns = nodes_[node];
  if (ns.consumed.count(msg.tag))
    throw RuntimeError("token collision at node " + cg_->node_name(node) + " port " +
                       std::to_string(msg.dst_port) + " tag " + msg.tag.to_string() +
                       " (match already consumed)");

  auto [it, fresh] = ns.pending.try_emplace(msg.tag);
  Partial& p = it->second;
  if (fresh) {
    p.scalar.resize(expects.size());
    p.gather.resize(expects.size());
    p.gather_filled.assign(expects.size(), 0);
    for (size_t port = 0; port < expects.size(); ++port)
      if (expects[port].gather) p.gather[port].resize(expects[port].gather_count);
  }

  const auto& exp = expects[msg.dst_port];
  if (exp.gather) {
    if (msg.gather_origin < 0 || msg.gather_origin >= static_cast<int32_t>(exp.gather_count))
      throw RuntimeError("gather origin out of range at node " + cg_->node_name(node));
    auto& slot = p.gather[msg.dst_port][msg.gather_origin];
    if (slot)
      throw RuntimeError("token collision at node " + cg_->node_name(node) + " port " +
                         std::to_string(msg.dst_port) + " tag " + msg.tag.to_string() +
                         " (duplicate gather origin " + std::to_string(msg.gather_origin) + ")");
    slot = msg.value;
    if (++p.gather_filled[msg.dst_port] == exp.gather_count) ++p.satisfied;
  } else {
    auto& slot = p.scalar[msg.dst_port];
    if (slot)
      throw RuntimeError("token collision at node " + cg_->node_name(node) + " port " +
                         std::to_string(msg.dst_port) + " tag " + msg.tag.to_string());
    slot = msg.value;
    ++p.satisfied;
  }

  if (p.satisfied < cg_->expected_input_count(node)) return std::nullopt;

  Activation act;
  act.node = node;
  act.tag = msg.tag;
  act.inputs.resize(expects.size());
  for (size_t port = 0; port < expects.size(); ++port) {
    if (!expects[port].connected) continue;
    if (expects[port].gather) {
      std::vector<Value> items;
      items.reserve(exp.gather_count);
      for (auto& v : p.gather[port]) items.push_back(std::move(*v));
      act.inputs[port] = Value::list(std::move(items));
    } else {
      act.inputs[port] = std::move(*p.scalar[port]);
    }
  }
  ns.pending.erase(it);
  ns.consumed.insert(act.tag);
  return act;
}

std::vector<std::string> MatchStore::starved_report() const {
  std::vector<std::string> out;
  for (const auto& [node, ns] : nodes_) {
    for (const auto& [tag, partial] : ns.pending) {
      std::string ports;
      const auto& expects = cg_->expect[node];
      for (size_t port = 0; port < expects.size(); ++port) {
        if (!expects[port].connected) continue;
        bool filled = expects[port].gather
                          ? partial.gather_filled[port] == expects[port].gather_count
                          : partial.scalar[port].has_value();
        if (!filled) {
          if (!ports.empty()) ports += ",";
          ports += std::to_string(port);
        }
      }
      out.push_back("node " + cg_->node_name(node) + " waiting at tag " + tag.to_string() +
                    " on port(s) [" + ports + "]");
    }
  }
  return out;
}

// --- Registry -----------------------------------------------------------

const Registry::Entry& Registry::register_super(const std::string& name,
                                                std::vector<SuperParam> ins,
                                                std::vector<SuperParam> outs, NativeSuper fn) {
  auto [it, fresh] = map_.try_emplace(name, Entry{std::move(ins), std::move(outs), std::move(fn)});
  if (!fresh) throw CompileError("native super '" + name + "' registered twice", {});
  return it->second;
}

const Registry::Entry* Registry::find(const std::string& name) const {
  auto it = map_.find(name);
  return it == map_.end() ? nullptr : &it->second;
}

void Registry::check_against(const GraphIR& g) const {
  for (const auto& ins : g.instrs) {
    if (ins.op != Op::Super) continue;
    const Entry* entry = find(ins.super->name);
    if (!entry) continue;
    if (entry->ins != ins.super->ins || entry->outs != ins.super->outs) {
      auto sig = [](const std::vector<SuperParam>& ps) {
        std::string s;
        for (const auto& p : ps) s += (s.empty() ? "" : ",") + p.name + ":" + p.type;
        return s;
      };
      throw CompileError("native super '" + ins.super->name + "' signature mismatch: registered (" +
                             sig(entry->ins) + ")->(" + sig(entry->outs) + ") vs graph (" +
                             sig(ins.super->ins) + ")->(" + sig(ins.super->outs) + ")",
                         ins.loc);
    }
  }
}

const Registry& Registry::empty() {
  static const Registry r;
  return r;
}

// --- ExecContext ---------------------------------------------------------

ExecContext::ExecContext(int64_t tid, int64_t n_tasks, const std::vector<std::string>& argv,
                         const SuperDef& def)
    : tid_(tid), n_tasks_(n_tasks), argv_(&argv), def_(&def) {}

Value ExecContext::read_lines(const std::string& path) { return FileIo::instance().read_lines(path); }

void ExecContext::write_line(const std::string& path, const std::string& line) {
  FileIo::instance().write_line(path, line);
}

void ExecContext::burn_ms(double ms) {
  auto until = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                  std::chrono::duration<double, std::milli>(ms));
  while (Clock::now() < until) {
    // busy spin: this models compute, not waiting
  }
}

const Value& ExecContext::in(const std::string& name) const {
  auto it = ins_.find(name);
  if (it == ins_.end())
    throw RuntimeError("super '" + def_->name + "' instance " + std::to_string(tid_) +
                       ": input '" + name + "' is not bound");
  return it->second;
}

void ExecContext::set_out(const std::string& name, Value v) {
  bool declared = false;
  for (const auto& o : def_->outs) declared |= o.name == name;
  if (!declared)
    throw RuntimeError("super '" + def_->name + "' assigned undeclared output '" + name + "'");
  if (!outs_.emplace(name, std::move(v)).second)
    throw RuntimeError("super '" + def_->name + "' output '" + name + "' written twice");
}

std::vector<Value> ExecContext::take_outs() {
  std::vector<Value> out;
  for (const auto& o : def_->outs) {
    auto it = outs_.find(o.name);
    if (it == outs_.end())
      throw RuntimeError("super '" + def_->name + "' did not assign output '" + o.name + "'");
    out.push_back(std::move(it->second));
  }
  return out;
}

// --- run_super ------------------------------------------------------------

std::vector<Value> run_super(const Registry& registry, ExecContext& ctx,
                             const std::vector<StmtPtr>* parsed) {
  const SuperDef& def = ctx.def();
  if (const Registry::Entry* native = registry.find(def.name)) {
    native->fn(ctx);
    return ctx.take_outs();
  }
  std::vector<StmtPtr> own;
  if (!parsed) {
    own = parse_body(def.body, def.name);
    parsed = &own;
  }
  std::map<std::string, Value> env = ctx.ins();
  try {
    exec_body(*parsed, env, &ctx);
  } catch (const EvalError& e) {
    throw RuntimeError("super '" + def.name + "' instance " + std::to_string(ctx.tid()) + ": " +
                       e.what());
  }
  std::vector<Value> out;
  for (const auto& o : def.outs) {
    auto it = env.find(o.name);
    if (it == env.end())
      throw RuntimeError("super '" + def.name + "' did not assign output '" + o.name + "'");
    out.push_back(it->second);
  }
  return out;
}

// --- placement helpers -----------------------------------------------------

std::vector<uint32_t> random_placement(const ConcreteGraph& cg, uint32_t n_pes, uint64_t seed) {
  std::vector<uint32_t> placement(cg.nodes.size());
  std::mt19937_64 rng(seed ^ 0x7c3f95d1u);
  for (auto& pe : placement) pe = static_cast<uint32_t>(rng() % n_pes);
  return placement;
}

// --- termination -------------------------------------------------------------

Decision detect_termination(const std::optional<QuiescenceScan>& prev, const QuiescenceScan& cur) {
  if (cur.ret_fired) return Decision::Stop;
  if (!cur.all_idle || cur.inflight != 0 || cur.ready != 0) return Decision::Continue;
  if (!prev || !prev->all_idle || prev->inflight != 0 || prev->ready != 0)
    return Decision::Continue;
  if (prev->activity != cur.activity) return Decision::Continue;
  return Decision::Deadlock;
}

// --- the machine -------------------------------------------------------------

namespace {

struct Inbox {
  std::mutex mu;
  std::vector<Message> msgs;

  void push(Message m) {
    std::lock_guard lock(mu);
    msgs.push_back(std::move(m));
  }
  std::vector<Message> drain() {
    std::lock_guard lock(mu);
    return std::exchange(msgs, {});
  }
  bool empty() {
    std::lock_guard lock(mu);
    return msgs.empty();
  }
};

constexpr int kStatusRunning = -1;

struct Machine {
  const ConcreteGraph& cg;
  const Registry& registry;
  const RunConfig& cfg;
  std::vector<uint32_t> placement;
  std::vector<std::vector<StmtPtr>> bodies;  // per template id (empty for non-supers)

  std::vector<Inbox> inboxes;
  std::vector<StealDeque<Activation>> deques;
  std::vector<MatchStore> stores;
  std::vector<PeStats> stats;
  std::vector<std::vector<std::string>> traces;
  std::unique_ptr<std::atomic<bool>[]> idle;

  std::atomic<int> status{kStatusRunning};  // or RunStatus once decided
  std::atomic<uint64_t> inflight{0};
  std::atomic<uint64_t> ready{0};
  std::atomic<uint64_t> activity{0};
  std::atomic<uint64_t> seq{0};

  std::mutex outcome_mu;
  std::optional<Value> result;
  std::string error;

  Machine(const ConcreteGraph& cg_, const Registry& reg_, const RunConfig& cfg_)
      : cg(cg_), registry(reg_), cfg(cfg_) {
    const uint32_t n = cfg.n_pes;
    inboxes = std::vector<Inbox>(n);
    deques = std::vector<StealDeque<Activation>>(n);
    stores.reserve(n);
    for (uint32_t i = 0; i < n; ++i) stores.emplace_back(cg);
    stats.assign(n, {});
    traces.assign(n, {});
    idle = std::make_unique<std::atomic<bool>[]>(n);
    for (uint32_t i = 0; i < n; ++i) idle[i] = false;
  }

  void settle(RunStatus st, std::optional<Value> res, std::string err) {
    int expected = kStatusRunning;
    if (status.compare_exchange_strong(expected, static_cast<int>(st))) {
      std::lock_guard lock(outcome_mu);
      result = std::move(res);
      error = std::move(err);
    }
  }

  bool running() const { return status.load(std::memory_order_relaxed) == kStatusRunning; }

  void route(uint32_t pe, uint32_t src_node, uint32_t port, const Value& v, const Tag& tag) {
    for (const auto& edge : cg.out[src_node][port]) {
      Message m;
      m.dst_node = edge.dst_node;
      m.dst_port = edge.dst_port;
      m.value = v;
      m.tag = tag;
      if (edge.gather) m.gather_origin = static_cast<int32_t>(cg.nodes[src_node].inst);
      deliver(pe, std::move(m));
    }
  }

  void deliver(uint32_t pe, Message m) {
    if (cfg.hooks && cfg.hooks->pre_deliver) cfg.hooks->pre_deliver(m);
    bool dup = cfg.hooks && cfg.hooks->duplicate_once && cfg.hooks->duplicate_once(m);
    stats[pe].sent++;
    uint32_t dst_pe = placement[m.dst_node];
    if (dup) {
      inflight.fetch_add(2, std::memory_order_relaxed);
      Message copy = m;
      inboxes[dst_pe].push(std::move(copy));
      inboxes[dst_pe].push(std::move(m));
      stats[pe].sent++;
    } else {
      inflight.fetch_add(1, std::memory_order_relaxed);
      inboxes[dst_pe].push(std::move(m));
    }
  }

  void trace_fire(uint32_t pe, const Activation& act) {
    if (!cfg.trace) return;
    const auto& node = cg.nodes[act.node];
    std::ostringstream os;
    os << "FIRE " << node.tmpl << "." << node.inst << " tag=" << act.tag.to_string() << " pe=" << pe
       << " seq=" << seq.fetch_add(1, std::memory_order_relaxed);
    traces[pe].push_back(os.str());
  }

  void trace_steal(uint32_t thief, uint32_t victim, const Activation& act) {
    if (!cfg.trace) return;
    const auto& node = cg.nodes[act.node];
    std::ostringstream os;
    os << "STEAL thief=" << thief << " victim=" << victim << " node=" << node.tmpl << "."
       << node.inst;
    traces[thief].push_back(os.str());
  }

  const Value& input(const Activation& act, uint32_t port, const char* what) {
    if (port >= act.inputs.size() || !act.inputs[port])
      throw RuntimeError(std::string("missing ") + what + " operand at node " +
                         cg.node_name(act.node) + " tag " + act.tag.to_string());
    return *act.inputs[port];
  }

  void execute(uint32_t pe, const Activation& act) {
    trace_fire(pe, act);
    stats[pe].fired++;
    const auto& node = cg.nodes[act.node];
    const Instruction& ins = cg.ir->instrs[node.tmpl];
    try {
      switch (ins.op) {
        case Op::Const:
          route(pe, act.node, 0, ins.const_val, act.tag);
          break;
        case Op::Not:
          route(pe, act.node, 0, apply_not(input(act, 0, "input")), act.tag);
          break;
        case Op::Steer: {
          const Value& sel = input(act, 0, "selector");
          if (!sel.is_bool())
            throw RuntimeError("steer selector is " + std::string(Value::kind_name(sel.kind())) +
                               ", not bool, at node " + cg.node_name(act.node) + " tag " +
                               act.tag.to_string());
          route(pe, act.node, sel.as_bool() ? 0 : 1, input(act, 1, "value"), act.tag);
          break;
        }
        case Op::IncTag:
          route(pe, act.node, 0, input(act, 0, "input"), act.tag.bumped());
          break;
        case Op::TagPush:
          route(pe, act.node, 0, input(act, 0, "input"), act.tag.pushed());
          break;
        case Op::TagPop:
          route(pe, act.node, 0, input(act, 0, "input"), act.tag.popped());
          break;
        case Op::Ret: {
          std::optional<Value> res;
          if (!act.inputs.empty() && act.inputs[0]) res = *act.inputs[0];
          if (!act.tag.iters.empty())
            throw RuntimeError("ret fired with non-empty tag " + act.tag.to_string());
          settle(RunStatus::Stopped, std::move(res), {});
          break;
        }
        case Op::Super: {
          const SuperDef& def = *ins.super;
          ExecContext ctx(node.inst, cg.n_tasks, cfg.argv, def);
          for (size_t port = 0; port < def.ins.size(); ++port)
            if (port < act.inputs.size() && act.inputs[port])
              ctx.bind_in(def.ins[port].name, *act.inputs[port]);
          std::vector<Value> outs = run_super(registry, ctx, &bodies[node.tmpl]);
          for (size_t port = 0; port < outs.size(); ++port)
            route(pe, act.node, static_cast<uint32_t>(port), outs[port], act.tag);
          break;
        }
        default: {  // binops
          Value r = apply_binop(op_to_binop(ins.op), input(act, 0, "left"), input(act, 1, "right"));
          route(pe, act.node, 0, r, act.tag);
          break;
        }
      }
    } catch (const EvalError& e) {
      throw RuntimeError(std::string(e.what()) + " at node " + cg.node_name(act.node) + " tag " +
                         act.tag.to_string());
    }
  }

  void worker(uint32_t pe) {
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ull + pe + 1);
    int misses = 0;
    int64_t backoff_us = 50;
    try {
      while (running()) {
        bool did_work = false;

        for (Message& m : inboxes[pe].drain()) {
          auto act = stores[pe].deliver(m);
          inflight.fetch_sub(1, std::memory_order_relaxed);
          activity.fetch_add(1, std::memory_order_relaxed);
          if (act) {
            ready.fetch_add(1, std::memory_order_relaxed);
            deques[pe].push(std::move(*act));
          }
          did_work = true;
        }

        if (auto act = deques[pe].take_own()) {
          ready.fetch_sub(1, std::memory_order_relaxed);
          execute(pe, *act);
          activity.fetch_add(1, std::memory_order_relaxed);
          continue;
        }

        if (!did_work && cfg.stealing && cfg.n_pes > 1) {
          std::vector<uint32_t> victims;
          for (uint32_t q = 0; q < cfg.n_pes; ++q)
            if (q != pe && !deques[q].empty()) victims.push_back(q);
          if (!victims.empty()) {
            uint32_t victim = victims[rng() % victims.size()];
            if (auto act = deques[victim].steal()) {
              ready.fetch_sub(1, std::memory_order_relaxed);
              stats[pe].steals++;
              trace_steal(pe, victim, *act);
              execute(pe, *act);
              activity.fetch_add(1, std::memory_order_relaxed);
              did_work = true;
            }
          }
        }

        if (did_work) {
          misses = 0;
          backoff_us = 50;
          continue;
        }
        if (++misses < 4) {
          std::this_thread::yield();
          continue;
        }
        // Exponential backoff keeps oversubscribed idle workers from
        // starving the busy ones of CPU time.
        idle[pe] = true;
        std::this_thread::sleep_for(std::chrono::microseconds(backoff_us));
        idle[pe] = false;
        backoff_us = std::min<int64_t>(backoff_us * 2, 1000);
      }
    } catch (const RuntimeError& e) {
      settle(RunStatus::Error, std::nullopt, e.what());
    } catch (const std::exception& e) {
      settle(RunStatus::Error, std::nullopt, std::string("internal error: ") + e.what());
    }
  }

  void seed_sources() {
    for (uint32_t n = 0; n < cg.nodes.size(); ++n) {
      if (cg.expected_input_count(n) != 0) continue;
      Op op = cg.instr_of(n).op;
      if (op != Op::Const && op != Op::Super && op != Op::Ret) continue;
      Activation act;
      act.node = n;
      act.inputs.resize(cg.expect[n].size());
      ready.fetch_add(1, std::memory_order_relaxed);
      deques[placement[n]].push(std::move(act));
    }
  }

  QuiescenceScan scan() const {
    QuiescenceScan s;
    s.ret_fired = !running();
    s.all_idle = true;
    for (uint32_t p = 0; p < cfg.n_pes; ++p) s.all_idle &= idle[p].load();
    s.inflight = inflight.load();
    s.ready = ready.load();
    s.activity = activity.load();
    return s;
  }
};

}  // namespace

std::string RunOutcome::result_line() const {
  return result ? "RESULT " + result->sigil_string() : "RESULT none";
}

RunOutcome run_program(const ConcreteGraph& cg, const Registry& registry, const RunConfig& cfg) {
  registry.check_against(*cg.ir);

  Machine m(cg, registry, cfg);
  m.placement = cfg.placement ? *cfg.placement
              : cfg.placement_seed ? random_placement(cg, cfg.n_pes, *cfg.placement_seed)
                                   : default_placement(cg, cfg.n_pes);
  if (m.placement.size() != cg.nodes.size())
    throw CompileError("placement covers " + std::to_string(m.placement.size()) + " nodes, graph has " +
                           std::to_string(cg.nodes.size()),
                       {});
  for (uint32_t pe : m.placement)
    if (pe >= cfg.n_pes) throw CompileError("placement names PE " + std::to_string(pe) +
                                                " but only " + std::to_string(cfg.n_pes) +
                                                " PEs are configured",
                                            {});

  // Pre-parse every interpreted body so malformed bodies fail at load.
  m.bodies.resize(cg.ir->instrs.size());
  for (uint32_t id = 0; id < cg.ir->instrs.size(); ++id) {
    const Instruction& ins = cg.ir->instrs[id];
    if (ins.op == Op::Super && !registry.find(ins.super->name))
      m.bodies[id] = parse_body(ins.super->body, ins.super->name);
  }

  auto t0 = Clock::now();
  m.seed_sources();

  std::vector<std::thread> workers;
  workers.reserve(cfg.n_pes);
  for (uint32_t p = 0; p < cfg.n_pes; ++p) workers.emplace_back([&m, p] { m.worker(p); });

  std::optional<QuiescenceScan> prev;
  while (m.running()) {
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    QuiescenceScan cur = m.scan();
    switch (detect_termination(prev, cur)) {
      case Decision::Stop: break;  // status already settled by the ret
      case Decision::Deadlock: {
        std::string detail = "deadlock: program quiescent without return";
        m.settle(RunStatus::Deadlock, std::nullopt, detail);
        break;
      }
      case Decision::Continue: break;
    }
    prev = cur;
  }
  for (auto& w : workers) w.join();

  RunOutcome out;
  out.status = static_cast<RunStatus>(m.status.load());
  out.result = std::move(m.result);
  out.error = std::move(m.error);
  out.stats = m.stats;
  out.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  if (out.status == RunStatus::Deadlock) {
    std::vector<std::string> starved;
    for (const auto& store : m.stores)
      for (auto& line : store.starved_report()) starved.push_back(std::move(line));
    std::sort(starved.begin(), starved.end());
    for (const auto& line : starved) out.error += "\n  " + line;
  }
  if (cfg.trace) {
    for (auto& t : m.traces)
      for (auto& line : t) out.trace.push_back(std::move(line));
    std::sort(out.trace.begin(), out.trace.end(), [](const std::string& a, const std::string& b) {
      auto seq_of = [](const std::string& s) -> long {
        auto pos = s.rfind("seq=");
        return pos == std::string::npos ? -1 : std::stol(s.substr(pos + 4));
      };
      return seq_of(a) < seq_of(b);
    });
  }
  return out;
}

RunOutcome run_graph(std::shared_ptr<const GraphIR> g, const Registry& registry,
                     const RunConfig& cfg) {
  uint32_t n_tasks = cfg.n_tasks.value_or(cfg.n_pes);
  ConcreteGraph cg = expand_instances(std::move(g), n_tasks);
  cg.n_pes = cfg.n_pes;
  return run_program(cg, registry, cfg);
}

}  // namespace tcflow
