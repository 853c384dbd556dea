#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace covagent {

struct LintViolation {
  int line = 0;
  // One of: "hierarchical reference", "force/release", "module instantiation".
  std::string rule;
  std::string line_text;
};

// Extracts the module name from a header like "module foo(...);". Empty when
// no module declaration is present.
std::string top_module_name(std::string_view header);

// Token-level check that testbench content drives top-level ports only:
// no hierarchical references (id.id outside port-connection syntax), no
// force/release statements, no instantiation of modules other than `top`.
// Comments and string literals are ignored.
std::vector<LintViolation> lint_stimulus(std::string_view content, const std::string& top);

}  // namespace covagent
