#include "tcflow/assembly.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace tcflow {

namespace {

std::string params_to_string(const std::vector<SuperParam>& params) {
  std::string s;
  for (size_t i = 0; i < params.size(); ++i) {
    if (i) s += ",";
    s += params[i].name + ":" + params[i].type;
  }
  return s;
}

std::vector<SuperParam> params_from_string(const std::string& text, uint32_t line) {
  std::vector<SuperParam> out;
  if (text.empty()) return out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? comma : comma - start);
    size_t colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= item.size())
      throw CompileError("malformed parameter '" + item + "' (want name:type)", {line, 1});
    out.push_back({item.substr(0, colon), item.substr(colon + 1)});
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string value_to_record(const Value& v) { return v.sigil_string(); }

Value value_from_record(const std::string& text, uint32_t line) {
  if (text.size() < 2 || text[1] != ':')
    throw CompileError("malformed const value '" + text + "'", {line, 1});
  const std::string payload = text.substr(2);
  try {
    switch (text[0]) {
      case 'i': return Value::ints(std::stoll(payload));
      case 'f': return Value::floats(std::stod(payload));
      case 'b':
        if (payload == "true") return Value::bools(true);
        if (payload == "false") return Value::bools(false);
        break;
      case 's': {
        size_t pos = 0;
        std::string s = unescape_string(payload, pos);
        if (pos != payload.size()) break;
        return Value::str(std::move(s));
      }
      default: break;
    }
  } catch (const std::exception&) {
  }
  throw CompileError("malformed const value '" + text + "'", {line, 1});
}

}  // namespace

std::string emit_assembly(const GraphIR& g) {
  std::ostringstream os;
  os << "flv 1\n";
  os << "argv " << g.argv_arity << "\n";
  for (uint32_t id = 0; id < g.instrs.size(); ++id) {
    const Instruction& ins = g.instrs[id];
    os << "inst " << id << " " << op_name(ins.op);
    if (ins.op == Op::Const) os << " val=" << value_to_record(ins.const_val);
    if (ins.op == Op::Super) {
      const SuperDef& sd = *ins.super;
      os << " name=" << sd.name << " mode=" << (sd.mode == SuperMode::Parallel ? "parallel" : "single")
         << " in=" << sd.ins.size() << " out=" << sd.outs.size();
      if (!sd.ins.empty()) os << " ins=" << params_to_string(sd.ins);
      if (!sd.outs.empty()) os << " outs=" << params_to_string(sd.outs);
    }
    os << "\n";
  }
  for (uint32_t id = 0; id < g.instrs.size(); ++id) {
    const Instruction& ins = g.instrs[id];
    if (ins.op != Op::Super) continue;
    os << "body " << id << " " << ins.super->body.size() << "\n";
    os << ins.super->body << "\n";
  }
  auto edges = g.edges;
  std::sort(edges.begin(), edges.end(), [](const EdgeSpec& a, const EdgeSpec& b) {
    return std::tuple(a.src, a.src_port, a.dst, a.dst_port, a.addr.kind, a.addr.k, a.local) <
           std::tuple(b.src, b.src_port, b.dst, b.dst_port, b.addr.kind, b.addr.k, b.local);
  });
  for (const auto& e : edges) {
    os << "edge " << e.src << "." << e.src_port << " -> " << e.dst << "." << e.dst_port
       << " addr=" << e.addr.to_string();
    if (e.local) os << " local";
    if (e.starter) os << " starter=" << e.starter->to_string();
    os << "\n";
  }
  return os.str();
}

namespace {

// Splits a record line into space-separated tokens; quoted segments
// (inside a key=value) keep their spaces.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quote = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quote) {
      cur += c;
      if (c == '\\' && i + 1 < line.size()) {
        cur += line[++i];
      } else if (c == '"') {
        in_quote = false;
      }
      continue;
    }
    if (c == '"') {
      cur += c;
      in_quote = true;
      continue;
    }
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
      continue;
    }
    cur += c;
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct AsmParser {
  const std::string& text;
  size_t pos = 0;
  uint32_t line_no = 0;

  struct RawInst {
    uint32_t id;
    Instruction ins;
    uint32_t line;
  };
  std::map<uint32_t, RawInst> insts;
  struct RawEdge {
    uint32_t src, sport, dst, dport;
    AddressExpr addr;
    bool local;
    std::optional<AddressExpr> starter;
    uint32_t line;
  };
  std::vector<RawEdge> edges;
  std::map<uint32_t, std::string> bodies;
  uint32_t argv_arity = 0;
  bool saw_header = false;

  explicit AsmParser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& msg, uint32_t line) {
    throw CompileError(msg, {line, 1});
  }

  bool next_line(std::string& out) {
    if (pos >= text.size()) return false;
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      out = text.substr(pos);
      pos = text.size();
    } else {
      out = text.substr(pos, nl - pos);
      pos = nl + 1;
    }
    ++line_no;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  }

  uint32_t parse_u32(const std::string& s, uint32_t line, const char* what) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      fail(std::string("malformed ") + what + " '" + s + "'", line);
    return static_cast<uint32_t>(std::stoul(s));
  }

  std::map<std::string, std::string> keyvals(const std::vector<std::string>& toks, size_t from,
                                             std::vector<std::string>* flags, uint32_t line) {
    std::map<std::string, std::string> kv;
    for (size_t i = from; i < toks.size(); ++i) {
      size_t eq = toks[i].find('=');
      if (eq == std::string::npos) {
        if (flags)
          flags->push_back(toks[i]);
        else
          fail("unexpected token '" + toks[i] + "'", line);
        continue;
      }
      kv[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
    }
    return kv;
  }

  void parse_inst(const std::vector<std::string>& toks, uint32_t line) {
    if (toks.size() < 3) fail("malformed inst record", line);
    uint32_t id = parse_u32(toks[1], line, "instruction id");
    if (insts.count(id)) fail("duplicate instruction id " + std::to_string(id), line);
    auto op = op_from_name(toks[2]);
    if (!op) fail("unknown opcode '" + toks[2] + "'", line);
    Instruction ins;
    ins.op = *op;
    ins.loc = {line, 1};
    auto kv = keyvals(toks, 3, nullptr, line);
    if (ins.op == Op::Const) {
      auto it = kv.find("val");
      if (it == kv.end()) fail("const record missing val=", line);
      ins.const_val = value_from_record(it->second, line);
    }
    if (ins.op == Op::Super) {
      SuperDef sd;
      if (!kv.count("name") || !kv.count("mode") || !kv.count("in") || !kv.count("out"))
        fail("super record needs name=, mode=, in=, out=", line);
      sd.name = kv["name"];
      if (kv["mode"] == "parallel")
        sd.mode = SuperMode::Parallel;
      else if (kv["mode"] == "single")
        sd.mode = SuperMode::Single;
      else
        fail("bad super mode '" + kv["mode"] + "'", line);
      sd.ins = params_from_string(kv.count("ins") ? kv["ins"] : "", line);
      sd.outs = params_from_string(kv.count("outs") ? kv["outs"] : "", line);
      if (sd.ins.size() != parse_u32(kv["in"], line, "in count"))
        fail("super in= count disagrees with ins= list", line);
      if (sd.outs.size() != parse_u32(kv["out"], line, "out count"))
        fail("super out= count disagrees with outs= list", line);
      ins.super = std::move(sd);
    }
    insts[id] = {id, std::move(ins), line};
  }

  void parse_edge(const std::vector<std::string>& toks, uint32_t line) {
    if (toks.size() < 4 || toks[2] != "->") fail("malformed edge record", line);
    auto endpoint = [&](const std::string& s) -> std::pair<uint32_t, uint32_t> {
      size_t dot = s.find('.');
      if (dot == std::string::npos) fail("malformed edge endpoint '" + s + "'", line);
      return {parse_u32(s.substr(0, dot), line, "node id"),
              parse_u32(s.substr(dot + 1), line, "port")};
    };
    auto [src, sport] = endpoint(toks[1]);
    auto [dst, dport] = endpoint(toks[3]);
    std::vector<std::string> flags;
    auto kv = keyvals(toks, 4, &flags, line);
    RawEdge e{src, sport, dst, dport, {}, false, std::nullopt, line};
    if (kv.count("addr")) {
      auto a = AddressExpr::parse(kv["addr"]);
      if (!a) fail("bad addr '" + kv["addr"] + "'", line);
      e.addr = *a;
    }
    if (kv.count("starter")) {
      auto a = AddressExpr::parse(kv["starter"]);
      if (!a) fail("bad starter address '" + kv["starter"] + "'", line);
      e.starter = *a;
    }
    for (const auto& f : flags) {
      if (f == "local")
        e.local = true;
      else
        fail("unknown edge flag '" + f + "'", line);
    }
    edges.push_back(e);
  }

  void parse_body(const std::vector<std::string>& toks, uint32_t line) {
    if (toks.size() != 3) fail("malformed body record", line);
    uint32_t id = parse_u32(toks[1], line, "instruction id");
    size_t nbytes = parse_u32(toks[2], line, "byte count");
    if (pos + nbytes > text.size()) fail("body block runs past end of file", line);
    std::string body = text.substr(pos, nbytes);
    line_no += static_cast<uint32_t>(std::count(body.begin(), body.end(), '\n'));
    pos += nbytes;
    if (pos < text.size() && text[pos] == '\n') {
      ++pos;
      ++line_no;
    }
    if (bodies.count(id)) fail("duplicate body for instruction " + std::to_string(id), line);
    bodies[id] = std::move(body);
  }

  GraphIR finish(bool validate) {
    GraphIR g;
    g.argv_arity = argv_arity;
    std::map<uint32_t, uint32_t> remap;
    for (auto& [id, raw] : insts) {
      remap[id] = static_cast<uint32_t>(g.instrs.size());
      g.instrs.push_back(std::move(raw.ins));
    }
    for (auto& [id, body] : bodies) {
      auto it = remap.find(id);
      if (it == remap.end()) fail("body for unknown instruction " + std::to_string(id), 0);
      Instruction& ins = g.instrs[it->second];
      if (ins.op != Op::Super) fail("body for non-super instruction " + std::to_string(id), 0);
      ins.super->body = std::move(body);
    }
    for (const auto& e : edges) {
      auto s = remap.find(e.src), d = remap.find(e.dst);
      if (s == remap.end())
        fail("edge references unknown instruction " + std::to_string(e.src), e.line);
      if (d == remap.end())
        fail("edge references unknown instruction " + std::to_string(e.dst), e.line);
      g.edges.push_back(
          {s->second, e.sport, d->second, e.dport, e.addr, e.local, e.starter, {e.line, 1}});
    }
    if (validate) {
      auto diags = validate_graph(g);
      for (const auto& d : diags)
        if (d.severity == Severity::Error)
          throw CompileError("invalid graph: " + d.message, d.loc);
    }
    return g;
  }

  GraphIR run(bool validate) {
    std::string line;
    while (next_line(line)) {
      size_t first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (line[first] == '#') continue;
      auto toks = split_record(line);
      if (!saw_header) {
        if (toks.size() != 2 || toks[0] != "flv") fail("missing header (want 'flv 1')", line_no);
        if (toks[1] != "1") fail("unsupported format version '" + toks[1] + "'", line_no);
        saw_header = true;
        continue;
      }
      if (toks[0] == "argv") {
        if (toks.size() != 2) fail("malformed argv record", line_no);
        argv_arity = parse_u32(toks[1], line_no, "argv arity");
      } else if (toks[0] == "inst") {
        parse_inst(toks, line_no);
      } else if (toks[0] == "edge") {
        parse_edge(toks, line_no);
      } else if (toks[0] == "body") {
        parse_body(toks, line_no);
      } else {
        fail("unknown record '" + toks[0] + "'", line_no);
      }
    }
    if (!saw_header) fail("missing header (want 'flv 1')", line_no ? line_no : 1);
    return finish(validate);
  }
};

}  // namespace

GraphIR parse_assembly(const std::string& text, bool validate) {
  AsmParser p(text);
  return p.run(validate);
}

std::string emit_skeleton(const GraphIR& g) {
  std::ostringstream os;
  for (uint32_t id = 0; id < g.instrs.size(); ++id) {
    const Instruction& ins = g.instrs[id];
    if (ins.op != Op::Super) continue;
    const SuperDef& sd = *ins.super;
    os << "super " << sd.name << " mode=" << (sd.mode == SuperMode::Parallel ? "parallel" : "single")
       << " in=" << params_to_string(sd.ins) << " out=" << params_to_string(sd.outs) << "\n";
  }
  return os.str();
}

}  // namespace tcflow
