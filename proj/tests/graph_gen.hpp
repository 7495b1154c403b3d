#pragma once

#include <random>

#include "tcflow/ir.hpp"

namespace tcflow::testing {

// Random small valid template graphs (layered DAGs, every required port
// wired, addressing rules respected) for round-trip property tests.
inline GraphIR random_graph(std::mt19937_64& rng) {
  GraphIR g;
  auto chance = [&](int pct) { return static_cast<int>(rng() % 100) < pct; };

  auto nasty_string = [&]() {
    static const char* samples[] = {
        "",
        "plain",
        "#ENDSUPER",
        "body 9 4\nXXXX",
        "inst 0 ret",
        "quotes \" and \\ slashes",
        "line1\nline2\n",
        "tab\tand\rcr",
        "edge 0.0 -> 1.0 addr=default",
        "flv 1",
    };
    std::string s = samples[rng() % (sizeof(samples) / sizeof(samples[0]))];
    if (chance(30)) s += std::string(1, static_cast<char>(1 + rng() % 255));
    return s;
  };

  auto random_value = [&]() -> Value {
    switch (rng() % 4) {
      case 0: return Value::ints(static_cast<int64_t>(rng()) % 1000 - 500);
      case 1: return Value::floats(static_cast<double>(rng() % 10000) / 64.0 - 70.0);
      case 2: return Value::bools(chance(50));
      default: return Value::str(nasty_string());
    }
  };

  const uint32_t n = 1 + rng() % 20;
  std::vector<uint32_t> producers;  // ids with at least one out port

  auto pick_producer = [&]() { return producers[rng() % producers.size()]; };

  auto addr_for = [&](uint32_t src, bool consumer_parallel, bool port_solo) -> AddressExpr {
    if (!g.is_parallel_super(src)) {
      if (chance(75)) return {};
      return chance(50) ? AddressExpr{AddressExpr::Kind::Const, 0}
                        : AddressExpr{AddressExpr::Kind::LastTid, 0};
    }
    if (consumer_parallel && chance(40)) {
      if (chance(60)) return {AddressExpr::Kind::MyTid, 0};
      return {chance(50) ? AddressExpr::Kind::MyTidPlus : AddressExpr::Kind::MyTidMinus,
              1 + static_cast<uint32_t>(rng() % 3)};
    }
    if (port_solo && chance(30)) return {AddressExpr::Kind::All, 0};
    if (chance(50)) return {AddressExpr::Kind::LastTid, 0};
    return {AddressExpr::Kind::Const, static_cast<uint32_t>(rng() % 2)};
  };

  for (uint32_t id = 0; id < n; ++id) {
    const bool first = producers.empty();
    int kind = first ? 0 : static_cast<int>(rng() % 10);
    Instruction ins;
    if (kind <= 2) {  // const, possibly triggered
      ins.op = Op::Const;
      ins.const_val = random_value();
      g.instrs.push_back(ins);
      if (!first && chance(40)) {
        uint32_t src = pick_producer();
        g.edges.push_back({src, 0, id, 0, addr_for(src, false, true)});
      }
    } else if (kind <= 5) {  // binop
      static const Op binops[] = {Op::Add, Op::Sub, Op::Mul, Op::Lt, Op::Eq, Op::And};
      ins.op = binops[rng() % 6];
      g.instrs.push_back(ins);
      for (uint32_t p = 0; p < 2; ++p) {
        uint32_t src = pick_producer();
        g.edges.push_back({src, g.instrs[src].out_ports() > 1 ? uint32_t(rng() % 2) : 0, id, p,
                           addr_for(src, false, true)});
      }
    } else if (kind == 6) {
      ins.op = Op::Not;
      g.instrs.push_back(ins);
      uint32_t src = pick_producer();
      g.edges.push_back({src, 0, id, 0, addr_for(src, false, true)});
    } else if (kind == 7) {
      ins.op = Op::Steer;
      g.instrs.push_back(ins);
      for (uint32_t p = 0; p < 2; ++p) {
        uint32_t src = pick_producer();
        g.edges.push_back({src, 0, id, p, addr_for(src, false, true)});
      }
    } else {  // super
      ins.op = Op::Super;
      SuperDef sd;
      sd.name = "s" + std::to_string(id);
      sd.mode = chance(50) ? SuperMode::Parallel : SuperMode::Single;
      sd.body = nasty_string();
      uint32_t n_in = first ? 0 : rng() % 3;
      uint32_t n_out = 1 + rng() % 2;
      bool with_chain = sd.mode == SuperMode::Parallel && !first && chance(35);
      if (with_chain) n_in = std::max<uint32_t>(n_in, 2);
      static const char* types[] = {"int", "float", "bool", "string", "list"};
      for (uint32_t i = 0; i < n_in; ++i)
        sd.ins.push_back({"in" + std::to_string(i), types[rng() % 5]});
      for (uint32_t o = 0; o < n_out; ++o)
        sd.outs.push_back({"out" + std::to_string(o), types[rng() % 5]});
      ins.super = sd;
      g.instrs.push_back(ins);

      uint32_t start_port = 0;
      if (with_chain) {
        EdgeSpec local;
        local.src = id;
        local.src_port = rng() % n_out;
        local.dst = id;
        local.dst_port = 0;
        local.addr = {AddressExpr::Kind::MyTidMinus, 1 + static_cast<uint32_t>(rng() % 2)};
        local.local = true;
        g.edges.push_back(local);
        uint32_t src = pick_producer();
        EdgeSpec starter;
        starter.src = src;
        starter.src_port = 0;
        starter.dst = id;
        starter.dst_port = 1;
        starter.starter = g.is_parallel_super(src)
                              ? AddressExpr{AddressExpr::Kind::Const, 0}
                              : AddressExpr{};
        g.edges.push_back(starter);
        start_port = 2;
      }
      for (uint32_t p = start_port; p < n_in; ++p) {
        uint32_t src = pick_producer();
        uint32_t sp = g.instrs[src].out_ports() > 1 ? static_cast<uint32_t>(rng()) %
                                                          g.instrs[src].out_ports()
                                                    : 0;
        g.edges.push_back({src, sp, id, p, addr_for(src, sd.mode == SuperMode::Parallel, true)});
      }
    }
    if (g.instrs[id].out_ports() > 0) producers.push_back(id);
  }

  if (chance(70)) {
    uint32_t id = static_cast<uint32_t>(g.instrs.size());
    Instruction ret;
    ret.op = Op::Ret;
    g.instrs.push_back(ret);
    if (chance(80)) {
      uint32_t src = pick_producer();
      g.edges.push_back({src, 0, id, 0, addr_for(src, false, true)});
    }
  }
  g.argv_arity = rng() % 4;
  return g;
}

}  // namespace tcflow::testing
