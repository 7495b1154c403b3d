#pragma once

#include <memory>

#include "tcflow/ast.hpp"
#include "tcflow/ir.hpp"

namespace tcflow {

// Lowers a parsed program to the template dataflow graph: supers wired by
// def-use, top-level if/else lowered to steers, loops to the tagged-token
// loop schema (TagPush / merged port / Steer / IncTag back edge / TagPop).
// Throws CompileError on semantic errors; warnings are appended when a
// sink is provided. The result passes validate_graph.
GraphIR build_graph(const Program& prog, std::vector<Diagnostic>* warnings = nullptr);

// Deterministic Graphviz rendering: one node per instruction labeled
// "<id>:<opcode-or-super-name>", parallel supers with a doubled border and
// an "[xN]" suffix, edges labeled with their addressing when not default.
std::string emit_dot(const GraphIR& g);

}  // namespace tcflow
