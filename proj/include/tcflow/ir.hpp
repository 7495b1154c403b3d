#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tcflow/value.hpp"

namespace tcflow {

// Simple-instruction and super-instruction opcodes. Binary arithmetic and
// comparison ops are individual opcodes so the assembly stays one word per
// instruction kind.
enum class Op : uint8_t {
  Const,
  Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or,
  Not,
  Steer,    // in: 0=selector(bool), 1=value; out: 0=true port, 1=false port
  IncTag,   // innermost counter + 1
  TagPush,  // append counter 0
  TagPop,   // drop innermost counter
  Super,
  Ret,
};

bool op_is_binop(Op op);
BinOp op_to_binop(Op op);       // valid only for binop opcodes
Op binop_to_op(BinOp op);
const char* op_name(Op op);
std::optional<Op> op_from_name(const std::string& name);

// Which instance(s) of a producer feed a consumer instance.
struct AddressExpr {
  enum class Kind : uint8_t { Default, All, Const, MyTid, MyTidPlus, MyTidMinus, LastTid };

  Kind kind = Kind::Default;
  uint32_t k = 0;  // used by Const / MyTidPlus / MyTidMinus

  bool operator==(const AddressExpr&) const = default;

  bool is_default() const { return kind == Kind::Default; }
  bool is_mytid_offset() const { return kind == Kind::MyTidPlus || kind == Kind::MyTidMinus; }

  std::string to_string() const;  // default | all | <k> | mytid | mytid+<k> | mytid-<k> | lasttid
  static std::optional<AddressExpr> parse(const std::string& text);
};

enum class SuperMode : uint8_t { Single, Parallel };

struct SuperParam {
  std::string name;
  std::string type;  // int | float | bool | string | list

  bool operator==(const SuperParam&) const = default;
};

struct SuperDef {
  std::string name;
  SuperMode mode = SuperMode::Single;
  std::string body;  // verbatim source text between the body markers
  std::vector<SuperParam> ins;
  std::vector<SuperParam> outs;

  bool operator==(const SuperDef&) const = default;
};

struct Instruction {
  Op op = Op::Const;
  Value const_val;                // Op::Const payload
  std::optional<SuperDef> super;  // Op::Super payload
  SourceLoc loc;                  // not part of structural equality

  // Port counts. Const and Ret report their maximum (optional trigger /
  // optional result); whether the port is wired is a property of the graph.
  uint32_t max_in_ports() const;
  uint32_t out_ports() const;
  bool in_port_optional() const { return op == Op::Const || op == Op::Ret; }

  bool structurally_equal(const Instruction& rhs) const;
};

struct EdgeSpec {
  uint32_t src = 0;
  uint32_t src_port = 0;
  uint32_t dst = 0;
  uint32_t dst_port = 0;
  AddressExpr addr;
  bool local = false;                   // dependency between instances of one parallel super
  std::optional<AddressExpr> starter;   // delivered only to chain-head instances
  SourceLoc loc;

  bool structurally_equal(const EdgeSpec& rhs) const;
};

// Template dataflow graph. Instruction ids are dense vector indices.
struct GraphIR {
  std::vector<Instruction> instrs;
  std::vector<EdgeSpec> edges;
  uint32_t argv_arity = 0;

  bool structurally_equal(const GraphIR& rhs) const;

  bool is_parallel_super(uint32_t id) const {
    return instrs[id].op == Op::Super && instrs[id].super->mode == SuperMode::Parallel;
  }
  // Template-level producer instance count: n_tasks for parallel supers, 1 otherwise.
  uint32_t arity_of(uint32_t id, uint32_t n_tasks) const {
    return is_parallel_super(id) ? n_tasks : 1;
  }
  // Offset of the (unique) local input chain of a parallel super, if any.
  // Positive k means instance i depends on instance i-k (MyTidMinus) or i+k.
  std::optional<EdgeSpec> local_edge_of(uint32_t id) const;
};

// Producer instances feeding `consumer_instance`. Empty set means "no edge".
// Throws CompileError for Const(k) with k >= producer_arity.
std::set<uint32_t> resolve_address(const AddressExpr& addr, uint32_t consumer_instance,
                                   uint32_t producer_arity, uint32_t n_tasks,
                                   SourceLoc loc = {});

// Instance-expanded graph for a fixed task count, plus placement.
struct ConcreteGraph {
  struct Node {
    uint32_t tmpl = 0;
    uint32_t inst = 0;
  };
  struct OutEdge {
    uint32_t dst_node = 0;
    uint32_t dst_port = 0;
    bool gather = false;
  };
  struct PortExpect {
    bool connected = false;
    bool gather = false;
    uint32_t gather_count = 0;  // producer instances expected on a gather port
  };

  std::shared_ptr<const GraphIR> ir;
  uint32_t n_tasks = 1;
  uint32_t n_pes = 1;

  std::vector<Node> nodes;               // ordered by (template id, instance)
  std::vector<uint32_t> first_node;      // template id -> first node index
  std::vector<uint32_t> instance_count;  // template id -> instance count

  // out[node][port] -> edges; expect[node][port] -> firing requirement
  std::vector<std::vector<std::vector<OutEdge>>> out;
  std::vector<std::vector<PortExpect>> expect;

  std::vector<uint32_t> placement;  // node index -> PE

  uint32_t node_index(uint32_t tmpl, uint32_t inst) const { return first_node[tmpl] + inst; }
  const Instruction& instr_of(uint32_t node) const { return ir->instrs[nodes[node].tmpl]; }
  uint32_t expected_input_count(uint32_t node) const;
  std::string node_name(uint32_t node) const;  // "<id>.<inst>:<opcode-or-super-name>"
  size_t edge_count() const;
};

// Expands parallel supers to n_tasks instances and resolves every edge's
// addressing at each consumer instance. Warnings (e.g. a local offset >=
// n_tasks) are appended to `warnings` when provided.
ConcreteGraph expand_instances(std::shared_ptr<const GraphIR> g, uint32_t n_tasks,
                               std::vector<Diagnostic>* warnings = nullptr);

// Well-formedness checks: port arities, addressing rules, local/starter
// rules, tag-depth balance, cycles without IncTag. Empty result == valid.
std::vector<Diagnostic> validate_graph(const GraphIR& g);

// Parallel instance i -> PE (i mod n_pes); everything else round-robin in
// template id order. Pure function of (cg, n_pes).
std::vector<uint32_t> default_placement(const ConcreteGraph& cg, uint32_t n_pes);

}  // namespace tcflow
