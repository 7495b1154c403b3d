#pragma once

#include "tcflow/ast.hpp"
#include "tcflow/lexer.hpp"

namespace tcflow {

// Parses a full annotated program. Throws CompileError on syntax or
// list-level semantic errors (duplicate input base names, misplaced
// prefixes, unknown addressing keywords).
Program parse(const std::vector<Token>& tokens);

// Parses super-body text: the statement subset plus call expressions for
// the runtime builtins. Instance addressing and prefixes are rejected.
// `where` names the super for error messages; locations are body-relative.
std::vector<StmtPtr> parse_body(const std::string& body_text, const std::string& where);

}  // namespace tcflow
