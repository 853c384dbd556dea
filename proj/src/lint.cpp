#include "lint.hpp"

#include <cctype>
#include <set>

#include "util.hpp"

namespace covagent {

namespace {

struct Token {
  enum class Kind { Ident, Number, Punct, Directive };
  Kind kind = Kind::Punct;
  std::string text;
  int line = 0;
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool number_char(char c) {
  // Covers sized literals like 8'hFF and x/z fills as a single token, so a
  // dot between numbers (real literals) never looks like a hierarchy.
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '?';
}

// Comments and string literals carry no executable constructs and are
// dropped before any rule runs.
std::vector<Token> tokenize(std::string_view content) {
  std::vector<Token> tokens;
  int line = 1;
  std::size_t i = 0;
  while (i < content.size()) {
    char c = content[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < content.size() && content[i + 1] == '/') {
      while (i < content.size() && content[i] != '\n') {
        ++i;
      }
      continue;
    }
    if (c == '/' && i + 1 < content.size() && content[i + 1] == '*') {
      i += 2;
      while (i + 1 < content.size() && !(content[i] == '*' && content[i + 1] == '/')) {
        if (content[i] == '\n') {
          ++line;
        }
        ++i;
      }
      i = i + 2 <= content.size() ? i + 2 : content.size();
      continue;
    }
    if (c == '"') {
      ++i;
      while (i < content.size() && content[i] != '"') {
        if (content[i] == '\\' && i + 1 < content.size()) {
          ++i;
        }
        if (content[i] == '\n') {
          ++line;
        }
        ++i;
      }
      ++i;
      continue;
    }
    if (c == '`') {
      Token token{Token::Kind::Directive, "`", line};
      ++i;
      while (i < content.size() && ident_char(content[i])) {
        token.text += content[i];
        ++i;
      }
      tokens.push_back(std::move(token));
      continue;
    }
    if (ident_start(c)) {
      Token token{Token::Kind::Ident, "", line};
      while (i < content.size() && ident_char(content[i])) {
        token.text += content[i];
        ++i;
      }
      tokens.push_back(std::move(token));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '\'' && i + 1 < content.size() &&
         std::isalpha(static_cast<unsigned char>(content[i + 1])))) {
      Token token{Token::Kind::Number, "", line};
      token.text += c;
      ++i;
      while (i < content.size() && number_char(content[i])) {
        token.text += content[i];
        ++i;
      }
      tokens.push_back(std::move(token));
      continue;
    }
    tokens.push_back(Token{Token::Kind::Punct, std::string(1, c), line});
    ++i;
  }
  return tokens;
}

const std::set<std::string>& sv_keywords() {
  static const std::set<std::string> keywords = {
      "module", "endmodule", "macromodule", "input", "output", "inout", "wire", "logic",
      "reg", "bit", "byte", "int", "integer", "longint", "shortint", "shortreal", "real",
      "realtime", "time", "signed", "unsigned", "parameter", "localparam", "defparam",
      "assign", "deassign", "always", "always_comb", "always_ff", "always_latch", "initial",
      "final", "begin", "end", "if", "else", "case", "casex", "casez", "endcase", "default",
      "for", "while", "do", "repeat", "forever", "break", "continue", "function",
      "endfunction", "task", "endtask", "return", "typedef", "enum", "struct", "union",
      "packed", "tagged", "class", "endclass", "interface", "endinterface", "modport",
      "clocking", "endclocking", "property", "endproperty", "assert", "assume", "cover",
      "covergroup", "endgroup", "coverpoint", "cross", "bins", "binsof", "sequence",
      "endsequence", "rand", "randc", "constraint", "randomize", "with", "inside", "dist",
      "new", "null", "this", "super", "virtual", "extends", "implements", "pure", "extern",
      "static", "automatic", "const", "ref", "void", "posedge", "negedge", "edge", "or",
      "and", "not", "nand", "nor", "xor", "xnor", "buf", "bufif0", "bufif1", "notif0",
      "notif1", "pmos", "nmos", "cmos", "tran", "tranif0", "tranif1", "wait", "wait_order",
      "disable", "fork", "join", "join_any", "join_none", "generate", "endgenerate",
      "genvar", "unique", "unique0", "priority", "string", "event", "semaphore", "mailbox",
      "program", "endprogram", "package", "endpackage", "import", "export", "timeunit",
      "timeprecision", "specify", "endspecify", "supply0", "supply1", "tri", "tri0", "tri1",
      "triand", "trior", "trireg", "wand", "wor", "uwire", "scalared", "vectored", "small",
      "medium", "large", "highz0", "highz1", "pull0", "pull1", "pulldown", "pullup",
      "strong0", "strong1", "weak0", "weak1", "force", "release", "iff", "intersect",
      "throughout", "within", "first_match", "matches", "solve", "before", "soft", "local",
      "protected", "chandle", "context", "cell", "config", "endconfig", "design", "instance",
      "liblist", "library", "use", "incdir", "include", "expect", "foreach", "type",
      "var", "let", "alias", "restrict", "global", "interconnect", "nettype", "implies",
  };
  return keywords;
}

bool plain_identifier(const Token& token) {
  return token.kind == Token::Kind::Ident && !sv_keywords().count(token.text);
}

std::string source_line(const std::vector<std::string>& lines, int line) {
  if (line < 1 || static_cast<std::size_t>(line) > lines.size()) {
    return "";
  }
  return trim(lines[static_cast<std::size_t>(line - 1)]);
}

}  // namespace

std::string top_module_name(std::string_view header) {
  std::vector<Token> tokens = tokenize(header);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].kind == Token::Kind::Ident &&
        (tokens[i].text == "module" || tokens[i].text == "macromodule") &&
        tokens[i + 1].kind == Token::Kind::Ident) {
      return tokens[i + 1].text;
    }
  }
  return "";
}

std::vector<LintViolation> lint_stimulus(std::string_view content, const std::string& top) {
  std::vector<LintViolation> violations;
  std::vector<Token> tokens = tokenize(content);
  std::vector<std::string> lines = split_lines(content);

  auto report = [&](int line, const char* rule) {
    violations.push_back(LintViolation{line, rule, source_line(lines, line)});
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& token = tokens[i];

    if (token.kind == Token::Kind::Ident &&
        (token.text == "force" || token.text == "release")) {
      report(token.line, "force/release");
      continue;
    }

    // id '.' id reaches through the hierarchy. Port-connection syntax
    // (".port(sig)") has no identifier before the dot and never matches.
    if (plain_identifier(token) && i + 2 < tokens.size() &&
        tokens[i + 1].kind == Token::Kind::Punct && tokens[i + 1].text == "." &&
        tokens[i + 2].kind == Token::Kind::Ident) {
      report(token.line, "hierarchical reference");
      // Swallow the whole a.b.c chain so one path yields one violation.
      std::size_t j = i + 2;
      while (j + 2 < tokens.size() && tokens[j + 1].text == "." &&
             tokens[j + 2].kind == Token::Kind::Ident) {
        j += 2;
      }
      i = j;
      continue;
    }

    // "<module> <instance> (" instantiates a submodule unless <module> is
    // the configured top. Also matches the parameterized form
    // "<module> #(...) <instance> (".
    if (plain_identifier(token) && token.text != top) {
      std::size_t after = i + 1;
      if (after < tokens.size() && tokens[after].kind == Token::Kind::Punct &&
          tokens[after].text == "#") {
        if (after + 1 < tokens.size() && tokens[after + 1].text == "(") {
          int depth = 0;
          std::size_t j = after + 1;
          for (; j < tokens.size(); ++j) {
            if (tokens[j].text == "(") {
              ++depth;
            } else if (tokens[j].text == ")") {
              --depth;
              if (depth == 0) {
                break;
              }
            }
          }
          after = j + 1;
        } else {
          continue;
        }
      }
      if (after + 1 < tokens.size() && plain_identifier(tokens[after]) &&
          tokens[after + 1].kind == Token::Kind::Punct && tokens[after + 1].text == "(") {
        report(token.line, "module instantiation");
        i = after + 1;
        continue;
      }
    }
  }
  return violations;
}

}  // namespace covagent
