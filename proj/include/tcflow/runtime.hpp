#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tcflow/body_lang.hpp"
#include "tcflow/ir.hpp"

namespace tcflow {

// Operand in flight between two node instances.
struct Message {
  uint32_t dst_node = 0;
  uint32_t dst_port = 0;
  Value value;
  Tag tag;
  int32_t gather_origin = -1;  // producer instance; >= 0 iff dst_port is a gather port
};

// A matched (node instance, tag, inputs) triple ready to fire. Super ports
// left unconnected for this instance (local/starter chains) stay empty.
struct Activation {
  uint32_t node = 0;
  Tag tag;
  std::vector<std::optional<Value>> inputs;  // by port
};

// Runtime error that stops the machine (token collision, type mismatch,
// missing output, ...).
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Per-PE tag-matching store. Owned and touched by exactly one worker.
// A value for an already-consumed or already-filled (port, tag) is a hard
// "token collision" error; matching never silently drops or overwrites.
class MatchStore {
 public:
  explicit MatchStore(const ConcreteGraph& cg) : cg_(&cg) {}

  // Records the operand; returns the activation when every connected port
  // for msg.tag is filled (gather ports need one operand per producer).
  std::optional<Activation> deliver(const Message& msg);

  // Nodes with partially filled match sets, for deadlock reports.
  std::vector<std::string> starved_report() const;

 private:
  struct Partial {
    std::vector<std::optional<Value>> scalar;
    std::vector<std::vector<std::optional<Value>>> gather;  // per port, by origin
    std::vector<uint32_t> gather_filled;
    uint32_t satisfied = 0;
  };
  struct NodeStore {
    std::unordered_map<Tag, Partial, Tag::Hash> pending;
    std::unordered_set<Tag, Tag::Hash> consumed;
  };

  const ConcreteGraph* cg_;
  std::unordered_map<uint32_t, NodeStore> nodes_;
};

class ExecContext;
using NativeSuper = std::function<void(ExecContext&)>;

// In-process replacement for the dynamically linked super library: native
// functions registered by name, checked against the graph's signatures at
// load time.
class Registry {
 public:
  struct Entry {
    std::vector<SuperParam> ins, outs;
    NativeSuper fn;
  };

  // Throws CompileError on duplicate names.
  const Entry& register_super(const std::string& name, std::vector<SuperParam> ins,
                              std::vector<SuperParam> outs, NativeSuper fn);

  const Entry* find(const std::string& name) const;

  // Load-time check: every registered name used by the graph must agree on
  // input/output names and types. Throws CompileError naming the super.
  void check_against(const GraphIR& g) const;

  static const Registry& empty();

 private:
  std::map<std::string, Entry> map_;
};

// Test instrumentation: delay or duplicate message delivery.
struct TestHooks {
  std::function<void(const Message&)> pre_deliver;
  std::function<bool(const Message&)> duplicate_once;
};

struct RunConfig {
  uint32_t n_pes = 1;
  std::optional<uint32_t> n_tasks;  // defaults to n_pes
  bool stealing = true;
  std::optional<std::vector<uint32_t>> placement;  // node index -> PE
  std::optional<uint64_t> placement_seed;          // random placement when no override
  std::vector<std::string> argv;
  bool trace = false;
  uint64_t seed = 0;  // victim selection
  const TestHooks* hooks = nullptr;
};

struct PeStats {
  uint64_t fired = 0;
  uint64_t steals = 0;
  uint64_t sent = 0;
};

enum class RunStatus { Stopped, Deadlock, Error };

struct RunOutcome {
  RunStatus status = RunStatus::Stopped;
  std::optional<Value> result;
  std::string error;  // deadlock/runtime-error detail
  std::vector<PeStats> stats;
  double wall_ms = 0.0;
  std::vector<std::string> trace;  // FIRE/STEAL lines, seq order

  std::string result_line() const;  // "RESULT <sigil>" or "RESULT none"
};

// Execution context handed to a super body (interpreted or native).
class ExecContext : public BuiltinHost {
 public:
  ExecContext(int64_t tid, int64_t n_tasks, const std::vector<std::string>& argv,
              const SuperDef& def);

  int64_t tid() const override { return tid_; }
  int64_t n_tasks() const override { return n_tasks_; }
  const std::vector<std::string>& argv() const override { return *argv_; }
  Value read_lines(const std::string& path) override;
  void write_line(const std::string& path, const std::string& line) override;
  void burn_ms(double ms) override;

  const SuperDef& def() const { return *def_; }
  bool has_in(const std::string& name) const { return ins_.count(name) > 0; }
  const Value& in(const std::string& name) const;
  const std::map<std::string, Value>& ins() const { return ins_; }
  void bind_in(const std::string& name, Value v) { ins_[name] = std::move(v); }

  // Fills an output slot; writing one twice or naming an undeclared output
  // is an error.
  void set_out(const std::string& name, Value v);
  // All declared outputs, in declaration order; throws RuntimeError naming
  // any output never assigned.
  std::vector<Value> take_outs();

 private:
  int64_t tid_, n_tasks_;
  const std::vector<std::string>* argv_;
  const SuperDef* def_;
  std::map<std::string, Value> ins_;
  std::map<std::string, Value> outs_;
};

// Helpers shared by the VM and harnesses: run one super firing through the
// native registry or the body interpreter. `parsed` is the pre-parsed body
// (may be null to parse on demand).
std::vector<Value> run_super(const Registry& registry, ExecContext& ctx,
                             const std::vector<StmtPtr>* parsed);

// Deterministic pseudo-random placement (Fisher-Yates over the default
// placement targets), for schedule-shaking tests.
std::vector<uint32_t> random_placement(const ConcreteGraph& cg, uint32_t n_pes, uint64_t seed);

// Pure decision kernel of the termination detector: `stop` once the return
// fired; `deadlock` when two consecutive scans agree the machine is idle
// with nothing in flight and no progress in between.
struct QuiescenceScan {
  bool ret_fired = false;
  bool all_idle = false;
  uint64_t inflight = 0;
  uint64_t ready = 0;
  uint64_t activity = 0;
};
enum class Decision { Continue, Stop, Deadlock };
Decision detect_termination(const std::optional<QuiescenceScan>& prev, const QuiescenceScan& cur);

// Spawns n_pes workers and executes the graph: seeds source nodes, matches
// operands per tag, fires activations (stealing from random victims when
// idle), and stops the moment the return instruction fires.
RunOutcome run_program(const ConcreteGraph& cg, const Registry& registry, const RunConfig& cfg);

// Convenience: expand + place + run a template graph.
RunOutcome run_graph(std::shared_ptr<const GraphIR> g, const Registry& registry,
                     const RunConfig& cfg);

}  // namespace tcflow
