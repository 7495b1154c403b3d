#include <random>

#include "doctest.h"
#include "graph_gen.hpp"
#include "harness.hpp"
#include "tcflow/assembly.hpp"

using namespace tcflow;
using namespace tcflow::testing;

TEST_CASE("emit trivial program") {
  auto g = compile("int a; a = 5; return a;");
  std::string text = emit_assembly(*g);
  CHECK(text.find("flv 1\n") == 0);
  CHECK(text.find("inst 0 const val=i:5\n") != std::string::npos);
  CHECK(text.find("inst 1 ret\n") != std::string::npos);
  CHECK(text.find("edge 0.0 -> 1.0 addr=default\n") != std::string::npos);
}

TEST_CASE("emit local and starter edges") {
  auto g = compile_corpus("local_chain.tc");
  std::string text = emit_assembly(*g);
  CHECK(text.find("addr=mytid-2 local") != std::string::npos);
  CHECK(text.find("starter=default") != std::string::npos);
}

TEST_CASE("adversarial body text round-trips byte-exactly") {
  GraphIR g;
  Instruction ins;
  ins.op = Op::Super;
  SuperDef sd;
  sd.name = "evil";
  sd.mode = SuperMode::Single;
  sd.body = "x = 1;\n#ENDSUPER\nbody 0 4\ninst 1 ret\nflv 1\n\"quoted\\\"";
  sd.outs.push_back({"x", "int"});
  ins.super = sd;
  g.instrs.push_back(ins);

  GraphIR back = parse_assembly(emit_assembly(g), /*validate=*/false);
  REQUIRE(back.instrs.size() == 1);
  CHECK(back.instrs[0].super->body == sd.body);
  CHECK(back.structurally_equal(g));

  // empty body also survives
  GraphIR g2 = g;
  g2.instrs[0].super->body = "";
  GraphIR back2 = parse_assembly(emit_assembly(g2), /*validate=*/false);
  CHECK(back2.instrs[0].super->body.empty());
}

TEST_CASE("string const values round-trip") {
  GraphIR g;
  Instruction c;
  c.op = Op::Const;
  c.const_val = Value::str("spaces and \"quotes\" and\nnewlines\x01");
  g.instrs.push_back(c);
  GraphIR back = parse_assembly(emit_assembly(g), false);
  CHECK(back.structurally_equal(g));
}

TEST_CASE("whole corpus round-trips structurally") {
  for (const auto& name : corpus_names()) {
    INFO(name);
    auto g = compile_corpus(name);
    std::string text = emit_assembly(*g);
    GraphIR back = parse_assembly(text);
    CHECK(back.structurally_equal(*g));
    // and the re-emission is byte-identical (emit is a pure function)
    CHECK(emit_assembly(back) == text);
  }
}

TEST_CASE("randomized graphs round-trip") {
  std::mt19937_64 rng(91);
  for (int iter = 0; iter < 300; ++iter) {
    GraphIR g = random_graph(rng);
    INFO("iteration " << iter);
    REQUIRE(validate_graph(g).empty());
    GraphIR back = parse_assembly(emit_assembly(g));
    CHECK(back.structurally_equal(g));
  }
}

TEST_CASE("distinct graphs give distinct text") {
  auto a = compile("int x; x = 1; return x;");
  auto b = compile("int x; x = 2; return x;");
  CHECK(emit_assembly(*a) != emit_assembly(*b));
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_assembly(""), doctest::Contains("missing header"), CompileError);
  CHECK_THROWS_WITH_AS(parse_assembly("argv 0\n"), doctest::Contains("missing header"),
                       CompileError);
  CHECK_THROWS_WITH_AS(parse_assembly("flv 2\n"), doctest::Contains("unsupported format version"),
                       CompileError);
  try {
    parse_assembly("flv 1\ninst 0 bogus\n");
    CHECK(false);
  } catch (const CompileError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    CHECK(e.diag().loc.line == 2);
  }
  CHECK_THROWS_AS(parse_assembly("flv 1\ninst 0 const val=i:5\ninst 0 ret\n"), CompileError);
  CHECK_THROWS_AS(parse_assembly("flv 1\nedge 0.0 -> 1.0 addr=default\n"), CompileError);
  CHECK_THROWS_AS(parse_assembly("flv 1\ninst 0 const val=i:1\nbody 0 5\nxxxxx\n"), CompileError);
  CHECK_THROWS_AS(parse_assembly("flv 1\nbanana 1 2\n"), CompileError);
  // body running past the end of the file
  CHECK_THROWS_AS(parse_assembly("flv 1\ninst 0 super name=s mode=single in=0 out=0\nbody 0 400\nx"),
                  CompileError);
}

TEST_CASE("comments and record order are flexible") {
  std::string text =
      "flv 1\n"
      "# a comment\n"
      "edge 7.0 -> 9.0 addr=default\n"
      "inst 9 ret\n"
      "inst 7 const val=f:2.5\n"
      "argv 2\n";
  GraphIR g = parse_assembly(text);
  REQUIRE(g.instrs.size() == 2);
  CHECK(g.argv_arity == 2);
  CHECK(g.instrs[0].op == Op::Const);  // ids remapped densely in id order
  CHECK(g.instrs[0].const_val == Value::floats(2.5));
  CHECK(g.instrs[1].op == Op::Ret);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].src == 0);
  CHECK(g.edges[0].dst == 1);
}

TEST_CASE("validation runs on parse unless disabled") {
  // 2-input add with one port unconnected
  std::string text =
      "flv 1\n"
      "inst 0 const val=i:1\n"
      "inst 1 add\n"
      "edge 0.0 -> 1.0 addr=default\n";
  CHECK_THROWS_WITH_AS(parse_assembly(text), doctest::Contains("no incoming edge"), CompileError);
  GraphIR g = parse_assembly(text, /*validate=*/false);
  CHECK(g.instrs.size() == 2);
}

TEST_CASE("skeleton stub listing") {
  auto g = compile(
      "float c; treb_parout float r;\n"
      "c = 1.0;\n"
      "treb_super parallel name(proc) input(c) output(r)\n#BEGINSUPER\nr = c;\n#ENDSUPER\n"
      "return r::0;");
  CHECK(emit_skeleton(*g) == "super proc mode=parallel in=c:float out=r:float\n");

  auto g2 = compile_corpus("hideio.tc");
  std::string skel = emit_skeleton(*g2);
  // definition order, one line per super
  auto open_pos = skel.find("super open_files");
  auto read_pos = skel.find("super read_stage");
  auto close_pos = skel.find("super close_files");
  CHECK(open_pos != std::string::npos);
  CHECK(read_pos != std::string::npos);
  CHECK(close_pos != std::string::npos);
  CHECK(open_pos < read_pos);
  CHECK(read_pos < close_pos);
  CHECK(skel.find("in=cooked:int,wsum:int,zero:int") != std::string::npos);
}
