#pragma once

#include <string>

#include "tcflow/ir.hpp"

namespace tcflow {

// Textual assembly, the contract between the compiler and the VM.
//
//   flv 1
//   argv <n>
//   inst <id> <opcode> [key=value ...]
//   inst <id> super name=<ident> mode=<single|parallel> in=<n> out=<m> [ins=...] [outs=...]
//   edge <srcid>.<port> -> <dstid>.<port> addr=<...> [local] [starter=<inner-addr>]
//   body <id> <nbytes>    (followed by exactly nbytes of raw body text)
//
// '#' begins a comment line outside body blocks; records may appear in any
// order except the header, which comes first.

// Deterministic emission in id order. parse_assembly(emit_assembly(g))
// structurally equals g for every valid graph.
std::string emit_assembly(const GraphIR& g);

// Throws CompileError with the offending line number on malformed input,
// unknown opcodes or a version mismatch. With `validate` set the result
// must pass validate_graph.
GraphIR parse_assembly(const std::string& text, bool validate = true);

// Stub listing of every super's signature: the exact contract a native
// registration must satisfy. One record per super, in definition order.
std::string emit_skeleton(const GraphIR& g);

}  // namespace tcflow
