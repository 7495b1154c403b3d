#include "doctest.h"
#include "tcflow/ir.hpp"

using namespace tcflow;

namespace {

Instruction mk_const(int64_t v) {
  Instruction i;
  i.op = Op::Const;
  i.const_val = Value::ints(v);
  return i;
}

Instruction mk_simple(Op op) {
  Instruction i;
  i.op = op;
  return i;
}

Instruction mk_super(const std::string& name, SuperMode mode, std::vector<SuperParam> ins,
                     std::vector<SuperParam> outs) {
  Instruction i;
  i.op = Op::Super;
  SuperDef sd;
  sd.name = name;
  sd.mode = mode;
  sd.ins = std::move(ins);
  sd.outs = std::move(outs);
  i.super = std::move(sd);
  return i;
}

EdgeSpec mk_edge(uint32_t src, uint32_t sp, uint32_t dst, uint32_t dp, AddressExpr addr = {}) {
  EdgeSpec e;
  e.src = src;
  e.src_port = sp;
  e.dst = dst;
  e.dst_port = dp;
  e.addr = addr;
  return e;
}

}  // namespace

TEST_CASE("resolve_address frozen examples") {
  using K = AddressExpr::Kind;
  CHECK(resolve_address({K::Const, 0}, 5, 3, 8) == std::set<uint32_t>{0});
  CHECK(resolve_address({K::MyTid, 0}, 1, 2, 2) == std::set<uint32_t>{1});
  CHECK(resolve_address({K::MyTidMinus, 1}, 0, 4, 4).empty());
  CHECK(resolve_address({K::LastTid, 0}, 0, 4, 4) == std::set<uint32_t>{3});
  CHECK(resolve_address({K::All, 0}, 1, 3, 4) == std::set<uint32_t>{0, 1, 2});

  CHECK_THROWS_AS(resolve_address({K::Const, 3}, 0, 3, 4), CompileError);

  // Offsets past either end mean "no edge".
  CHECK(resolve_address({K::MyTidPlus, 2}, 3, 4, 4).empty());
  CHECK(resolve_address({K::MyTidPlus, 1}, 2, 4, 4) == std::set<uint32_t>{3});
  CHECK(resolve_address({K::MyTid, 0}, 7, 4, 8).empty());
}

TEST_CASE("resolve_address invariants") {
  using K = AddressExpr::Kind;
  for (uint32_t p = 1; p <= 6; ++p) {
    for (uint32_t i = 0; i < 6; ++i) {
      CHECK(resolve_address({K::All, 0}, i, p, 6).size() == p);
      auto mytid = resolve_address({K::MyTid, 0}, i, p, 6);
      CHECK(mytid.size() <= 1);
      if (!mytid.empty()) CHECK(*mytid.begin() == i);
    }
  }
  // MyTidMinus(k): exactly max(0, n_tasks - k) edges across all consumers.
  for (uint32_t k = 0; k <= 6; ++k) {
    uint32_t n_tasks = 4;
    size_t total = 0;
    for (uint32_t i = 0; i < n_tasks; ++i)
      total += resolve_address({K::MyTidMinus, k}, i, n_tasks, n_tasks).size();
    CHECK(total == (n_tasks > k ? n_tasks - k : 0));
  }
}

TEST_CASE("expansion: local chain with offset 2 and starter delivery") {
  // super s produces o, consumes local.o::(mytid-2) plus starter.c
  auto g = std::make_shared<GraphIR>();
  g->instrs.push_back(mk_const(7));  // c producer
  g->instrs.push_back(mk_super("s", SuperMode::Parallel, {{"o", "int"}, {"c", "int"}}, {{"o", "int"}}));
  EdgeSpec local = mk_edge(1, 0, 1, 0, {AddressExpr::Kind::MyTidMinus, 2});
  local.local = true;
  g->edges.push_back(local);
  EdgeSpec starter = mk_edge(0, 0, 1, 1);
  starter.starter = AddressExpr{};
  g->edges.push_back(starter);

  ConcreteGraph cg = expand_instances(g, 4);
  REQUIRE(cg.nodes.size() == 5);  // const + 4 instances

  // local edges exactly {0->2, 1->3}
  auto node = [&](uint32_t inst) { return cg.node_index(1, inst); };
  std::set<std::pair<uint32_t, uint32_t>> local_edges;
  for (uint32_t inst = 0; inst < 4; ++inst)
    for (const auto& e : cg.out[node(inst)][0])
      if (e.dst_port == 0) local_edges.insert({inst, cg.nodes[e.dst_node].inst});
  CHECK(local_edges == std::set<std::pair<uint32_t, uint32_t>>{{0, 2}, {1, 3}});

  // starter operand reaches exactly instances 0 and 1
  std::set<uint32_t> starter_insts;
  for (const auto& e : cg.out[0][0]) starter_insts.insert(cg.nodes[e.dst_node].inst);
  CHECK(starter_insts == std::set<uint32_t>{0, 1});

  // per-instance firing requirements: heads wait on the starter port only,
  // the rest on the local port only
  CHECK(cg.expect[node(0)][0].connected == false);
  CHECK(cg.expect[node(0)][1].connected == true);
  CHECK(cg.expect[node(2)][0].connected == true);
  CHECK(cg.expect[node(2)][1].connected == false);
}

TEST_CASE("expansion: single to parallel default broadcasts") {
  auto g = std::make_shared<GraphIR>();
  g->instrs.push_back(mk_const(1));
  g->instrs.push_back(mk_super("p", SuperMode::Parallel, {{"x", "int"}}, {{"y", "int"}}));
  g->edges.push_back(mk_edge(0, 0, 1, 0));
  ConcreteGraph cg = expand_instances(g, 3);
  CHECK(cg.out[0][0].size() == 3);
  CHECK(cg.edge_count() == 3);
}

TEST_CASE("expansion is deterministic") {
  auto g = std::make_shared<GraphIR>();
  g->instrs.push_back(mk_const(1));
  g->instrs.push_back(mk_super("p", SuperMode::Parallel, {{"x", "int"}}, {{"y", "int"}}));
  g->instrs.push_back(mk_super("q", SuperMode::Single, {{"y", "int"}}, {{"z", "int"}}));
  g->instrs.push_back(mk_simple(Op::Ret));
  g->edges.push_back(mk_edge(0, 0, 1, 0));
  g->edges.push_back(mk_edge(1, 0, 2, 0, {AddressExpr::Kind::LastTid, 0}));
  g->edges.push_back(mk_edge(2, 0, 3, 0));

  ConcreteGraph a = expand_instances(g, 4);
  ConcreteGraph b = expand_instances(g, 4);
  CHECK(a.nodes.size() == b.nodes.size());
  CHECK(a.edge_count() == b.edge_count());
  for (uint32_t n = 0; n < a.nodes.size(); ++n) {
    CHECK(a.nodes[n].tmpl == b.nodes[n].tmpl);
    CHECK(a.nodes[n].inst == b.nodes[n].inst);
    REQUIRE(a.out[n].size() == b.out[n].size());
    for (size_t p = 0; p < a.out[n].size(); ++p) {
      REQUIRE(a.out[n][p].size() == b.out[n][p].size());
      for (size_t e = 0; e < a.out[n][p].size(); ++e) {
        CHECK(a.out[n][p][e].dst_node == b.out[n][p][e].dst_node);
        CHECK(a.out[n][p][e].dst_port == b.out[n][p][e].dst_port);
      }
    }
  }
}

TEST_CASE("expansion: degenerate local offset warns and delivers starters everywhere") {
  auto g = std::make_shared<GraphIR>();
  g->instrs.push_back(mk_const(7));
  g->instrs.push_back(mk_super("s", SuperMode::Parallel, {{"o", "int"}, {"c", "int"}}, {{"o", "int"}}));
  EdgeSpec local = mk_edge(1, 0, 1, 0, {AddressExpr::Kind::MyTidMinus, 5});
  local.local = true;
  g->edges.push_back(local);
  EdgeSpec starter = mk_edge(0, 0, 1, 1);
  starter.starter = AddressExpr{};
  g->edges.push_back(starter);

  std::vector<Diagnostic> warnings;
  ConcreteGraph cg = expand_instances(g, 3, &warnings);
  CHECK(!warnings.empty());
  std::set<uint32_t> starter_insts;
  for (const auto& e : cg.out[0][0]) starter_insts.insert(cg.nodes[e.dst_node].inst);
  CHECK(starter_insts == std::set<uint32_t>{0, 1, 2});
  // no local edges at all
  for (uint32_t inst = 0; inst < 3; ++inst) {
    for (const auto& e : cg.out[cg.node_index(1, inst)][0]) CHECK(e.dst_port != 0);
  }
}

TEST_CASE("validate: well-formed chain is clean") {
  GraphIR g;
  g.instrs.push_back(mk_const(2));
  g.instrs.push_back(mk_simple(Op::Add));
  g.instrs.push_back(mk_simple(Op::Ret));
  g.edges.push_back(mk_edge(0, 0, 1, 0));
  g.edges.push_back(mk_edge(0, 0, 1, 1));
  g.edges.push_back(mk_edge(1, 0, 2, 0));
  CHECK(validate_graph(g).empty());
}

TEST_CASE("validate: parallel output into single consumer needs explicit addressing") {
  GraphIR g;
  g.instrs.push_back(mk_super("p", SuperMode::Parallel, {}, {{"y", "int"}}));
  g.instrs.push_back(mk_super("q", SuperMode::Single, {{"y", "int"}}, {}));
  g.edges.push_back(mk_edge(0, 0, 1, 0));
  auto diags = validate_graph(g);
  REQUIRE(diags.size() >= 1);
  bool found = false;
  for (const auto& d : diags) found |= d.message.find("explicit addressing") != std::string::npos;
  CHECK(found);
}

TEST_CASE("validate: cycle without inctag is flagged") {
  GraphIR g;
  g.instrs.push_back(mk_const(1));
  g.instrs.push_back(mk_simple(Op::Add));
  g.instrs.push_back(mk_simple(Op::Add));
  g.edges.push_back(mk_edge(0, 0, 1, 0));
  g.edges.push_back(mk_edge(2, 0, 1, 1));
  g.edges.push_back(mk_edge(0, 0, 2, 0));
  g.edges.push_back(mk_edge(1, 0, 2, 1));
  auto diags = validate_graph(g);
  bool found = false;
  for (const auto& d : diags) found |= d.message.find("untagged cycle") != std::string::npos;
  CHECK(found);
}

TEST_CASE("validate: missing input port edge") {
  GraphIR g;
  g.instrs.push_back(mk_const(1));
  g.instrs.push_back(mk_simple(Op::Add));
  g.edges.push_back(mk_edge(0, 0, 1, 0));
  auto diags = validate_graph(g);
  bool found = false;
  for (const auto& d : diags) found |= d.message.find("no incoming edge") != std::string::npos;
  CHECK(found);
}

TEST_CASE("default placement frozen examples") {
  // 4 parallel instances on 2 PEs -> 0,1,0,1
  {
    auto g = std::make_shared<GraphIR>();
    g->instrs.push_back(mk_super("p", SuperMode::Parallel, {}, {{"y", "int"}}));
    ConcreteGraph cg = expand_instances(g, 4);
    auto placement = default_placement(cg, 2);
    CHECK(placement == std::vector<uint32_t>{0, 1, 0, 1});
    // 1 PE -> everything on PE0
    auto all0 = default_placement(cg, 1);
    for (uint32_t pe : all0) CHECK(pe == 0);
  }
  // 3 single supers on 2 PEs -> PE0, PE1, PE0 (round-robin in id order)
  {
    auto g = std::make_shared<GraphIR>();
    for (int i = 0; i < 3; ++i)
      g->instrs.push_back(mk_super("s" + std::to_string(i), SuperMode::Single, {}, {{"x", "int"}}));
    ConcreteGraph cg = expand_instances(g, 4);
    auto placement = default_placement(cg, 2);
    CHECK(placement == std::vector<uint32_t>{0, 1, 0});
  }
  // parallel instances do not consume round-robin slots
  {
    auto g = std::make_shared<GraphIR>();
    g->instrs.push_back(mk_const(1));                                     // rr 0 -> PE0
    g->instrs.push_back(mk_super("p", SuperMode::Parallel, {}, {{"y", "int"}}));  // i mod pes
    g->instrs.push_back(mk_simple(Op::Ret));                              // rr 1 -> PE1
    ConcreteGraph cg = expand_instances(g, 3);
    auto placement = default_placement(cg, 2);
    CHECK(placement == std::vector<uint32_t>{0, 0, 1, 0, 1});
  }
}

TEST_CASE("tag stack semantics") {
  Tag t;
  CHECK(t.to_string() == "[]");
  Tag t2 = t.pushed();
  CHECK(t2.to_string() == "[0]");
  Tag t3 = t2.bumped().bumped();
  CHECK(t3.to_string() == "[2]");
  Tag t4 = t3.pushed();
  CHECK(t4.to_string() == "[2,0]");
  CHECK(t4.popped() == t3);
  CHECK_THROWS_AS(Tag{}.popped(), EvalError);
  CHECK_THROWS_AS(Tag{}.bumped(), EvalError);
  Tag deep;
  for (size_t i = 0; i < Tag::kMaxDepth; ++i) deep = deep.pushed();
  CHECK_THROWS_AS(deep.pushed(), EvalError);
}

TEST_CASE("value arithmetic promotion and errors") {
  CHECK(apply_binop(BinOp::Add, Value::ints(2), Value::ints(3)) == Value::ints(5));
  CHECK(apply_binop(BinOp::Add, Value::ints(2), Value::floats(3.5)) == Value::floats(5.5));
  CHECK(apply_binop(BinOp::Div, Value::ints(14), Value::ints(4)) == Value::ints(3));
  CHECK(apply_binop(BinOp::Mod, Value::ints(14), Value::ints(3)) == Value::ints(2));
  CHECK(apply_binop(BinOp::Eq, Value::ints(2), Value::floats(2.0)) == Value::bools(true));
  CHECK_THROWS_AS(apply_binop(BinOp::Div, Value::ints(1), Value::ints(0)), EvalError);
  CHECK_THROWS_AS(apply_binop(BinOp::Mod, Value::floats(1), Value::floats(2)), EvalError);
  CHECK_THROWS_AS(apply_binop(BinOp::And, Value::ints(1), Value::bools(true)), EvalError);
  CHECK_THROWS_AS(apply_binop(BinOp::Add, Value::str("a"), Value::str("b")), EvalError);
}

TEST_CASE("list nesting depth cap") {
  Value v = Value::list({Value::ints(1)});
  for (int i = 0; i < 6; ++i) v = Value::list({v});
  CHECK(v.list_depth() == 7);
  Value v8 = Value::list({v});
  CHECK(v8.list_depth() == 8);
  CHECK_THROWS_AS(Value::list({v8}), EvalError);
}

TEST_CASE("value sigil round trip formatting") {
  CHECK(Value::ints(5).sigil_string() == "i:5");
  CHECK(Value::floats(2.5).sigil_string() == "f:2.5");
  CHECK(Value::bools(true).sigil_string() == "b:true");
  CHECK(Value::str("a\"b\n").sigil_string() == "s:\"a\\\"b\\n\"");
  CHECK(Value::list({Value::ints(1), Value::floats(0.5)}).sigil_string() == "l:[i:1,f:0.5]");
}
