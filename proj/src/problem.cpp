#include "cocoweb/problem.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <utility>

namespace cocoweb {

Term Term::variable(std::string name) {
  Term t;
  t.kind = Kind::Variable;
  t.name = std::move(name);
  return t;
}

Term Term::apply(std::string function, std::vector<Term> args) {
  Term t;
  t.kind = Kind::Application;
  t.name = std::move(function);
  t.args = std::move(args);
  return t;
}

std::string_view to_string(ConditionType type) {
  switch (type) {
    case ConditionType::Oriented: return "ORIENTED";
    case ConditionType::Join: return "JOIN";
    case ConditionType::SemiEquational: return "SEMI-EQUATIONAL";
  }
  return "ORIENTED";
}

std::optional<ConditionType> condition_type_from_string(std::string_view text) {
  if (text == "ORIENTED") return ConditionType::Oriented;
  if (text == "JOIN") return ConditionType::Join;
  if (text == "SEMI-EQUATIONAL") return ConditionType::SemiEquational;
  return std::nullopt;
}

std::string_view to_string(FormatCategory category) {
  switch (category) {
    case FormatCategory::TRS: return "TRS";
    case FormatCategory::CTRS: return "CTRS";
    case FormatCategory::HigherOrder: return "HIGHER_ORDER";
    case FormatCategory::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

bool structurally_equal(const Problem& a, const Problem& b) {
  return a.variables == b.variables && a.rules == b.rules &&
         a.condition_type == b.condition_type && a.signature == b.signature &&
         a.function_declarations == b.function_declarations;
}

ParseError::ParseError(std::size_t line, std::size_t column,
                       const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column),
      detail_(message) {}

namespace {

struct Location {
  std::size_t line = 1;
  std::size_t column = 1;
};

[[noreturn]] void fail(Location at, const std::string& message) {
  throw ParseError(at.line, at.column, message);
}

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_delimiter(char c) {
  return is_space(c) || c == '(' || c == ')' || c == ',' || c == '|';
}

class Cursor {
public:
  explicit Cursor(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  std::size_t offset() const { return pos_; }
  Location location() const { return loc_; }
  std::string_view slice(std::size_t from, std::size_t to) const {
    return text_.substr(from, to - from);
  }

  bool starts_with(std::string_view s) const {
    return text_.substr(pos_).starts_with(s);
  }

  void advance() {
    if (at_end()) return;
    if (text_[pos_] == '\n') {
      ++loc_.line;
      loc_.column = 1;
    } else {
      ++loc_.column;
    }
    ++pos_;
  }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) advance();
  }

  void skip_space() {
    while (!at_end() && is_space(peek())) advance();
  }

  // Identifiers end at delimiters and never contain the "->" or "=="
  // separators, so "f(x)->x" lexes the same as "f(x) -> x".
  std::string identifier() {
    std::size_t start = pos_;
    while (!at_end() && !is_delimiter(peek()) && !starts_with("->") &&
           !starts_with("==")) {
      advance();
    }
    return std::string(text_.substr(start, pos_ - start));
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  Location loc_;
};

// A term before VAR declarations are known; resolved in a second pass.
struct RawTerm {
  std::string name;
  std::vector<RawTerm> args;
  Location at;
};

struct RawRule {
  RawTerm lhs;
  RawTerm rhs;
  std::vector<std::pair<RawTerm, RawTerm>> conditions;
};

struct ArityUse {
  std::size_t arity;
  Location at;
};

class Parser {
public:
  explicit Parser(std::string_view source) : cursor_(source) {}

  Problem run() {
    Problem problem;
    std::size_t sections = 0;
    for (cursor_.skip_space(); !cursor_.at_end(); cursor_.skip_space()) {
      if (cursor_.peek() != '(') {
        fail(cursor_.location(), "expected '(' to start a section");
      }
      section(problem);
      ++sections;
    }
    if (sections == 0) fail(cursor_.location(), "empty problem: no sections");
    resolve(problem);
    return problem;
  }

private:
  void section(Problem& problem) {
    const Location open = cursor_.location();
    cursor_.advance();
    cursor_.skip_space();
    const Location keyword_at = cursor_.location();
    std::string keyword = cursor_.identifier();
    if (keyword.empty()) fail(keyword_at, "expected section keyword");

    if (keyword == "VAR") {
      var_body(problem, open);
    } else if (keyword == "RULES") {
      rules_body(open);
    } else if (keyword == "COMMENT") {
      problem.comments.push_back(raw_body(open, keyword));
    } else if (keyword == "FUN") {
      problem.function_declarations.push_back(raw_body(open, keyword));
    } else if (keyword == "CONDITIONTYPE") {
      condition_type_body(problem, open);
    } else if (keyword == "SIG") {
      sig_body(problem, open);
    } else {
      fail(keyword_at, "unknown section keyword '" + keyword + "'");
    }
  }

  void expect_close(Location open, std::string_view keyword) {
    cursor_.skip_space();
    if (cursor_.at_end()) {
      fail(open, "unclosed section '" + std::string(keyword) + "'");
    }
    if (cursor_.peek() != ')') {
      fail(cursor_.location(),
           "expected ')' to close section '" + std::string(keyword) + "'");
    }
    cursor_.advance();
  }

  void var_body(Problem& problem, Location open) {
    for (cursor_.skip_space(); !cursor_.at_end() && cursor_.peek() != ')';
         cursor_.skip_space()) {
      const Location at = cursor_.location();
      std::string name = cursor_.identifier();
      if (name.empty()) fail(at, "expected variable name in VAR section");
      problem.variables.insert(std::move(name));
    }
    expect_close(open, "VAR");
  }

  void condition_type_body(Problem& problem, Location open) {
    cursor_.skip_space();
    const Location at = cursor_.location();
    std::string value = cursor_.identifier();
    auto type = condition_type_from_string(value);
    if (!type) {
      fail(at, "CONDITIONTYPE must be ORIENTED, JOIN or SEMI-EQUATIONAL, got '" +
                   value + "'");
    }
    if (problem.condition_type && *problem.condition_type != *type) {
      fail(at, "conflicting CONDITIONTYPE declarations");
    }
    problem.condition_type = type;
    expect_close(open, "CONDITIONTYPE");
  }

  void sig_body(Problem& problem, Location open) {
    for (cursor_.skip_space(); !cursor_.at_end() && cursor_.peek() != ')';
         cursor_.skip_space()) {
      const Location entry = cursor_.location();
      if (cursor_.peek() != '(') fail(entry, "expected '(' in SIG entry");
      cursor_.advance();
      cursor_.skip_space();
      std::string name = cursor_.identifier();
      if (name.empty()) fail(cursor_.location(), "expected symbol in SIG entry");
      cursor_.skip_space();
      const Location arity_at = cursor_.location();
      std::string digits = cursor_.identifier();
      if (digits.empty() ||
          !std::all_of(digits.begin(), digits.end(),
                       [](char c) { return c >= '0' && c <= '9'; })) {
        fail(arity_at, "expected arity in SIG entry for '" + name + "'");
      }
      std::size_t arity = std::stoul(digits);
      cursor_.skip_space();
      if (cursor_.at_end()) fail(entry, "unclosed SIG entry");
      if (cursor_.peek() != ')') fail(cursor_.location(), "expected ')' in SIG entry");
      cursor_.advance();
      record_arity(name, arity, entry);
      problem.signature[name] = arity;
    }
    expect_close(open, "SIG");
  }

  // Returns the text between the keyword and the matching ')', verbatim.
  std::string raw_body(Location open, std::string_view keyword) {
    const std::size_t start = cursor_.offset();
    int depth = 1;
    while (!cursor_.at_end()) {
      char c = cursor_.peek();
      if (c == '(') {
        ++depth;
      } else if (c == ')' && --depth == 0) {
        std::string body(cursor_.slice(start, cursor_.offset()));
        cursor_.advance();
        return body;
      }
      cursor_.advance();
    }
    fail(open, "unclosed section '" + std::string(keyword) + "'");
  }

  void rules_body(Location open) {
    for (cursor_.skip_space(); !cursor_.at_end() && cursor_.peek() != ')';
         cursor_.skip_space()) {
      raw_rules_.push_back(rule());
    }
    expect_close(open, "RULES");
  }

  RawRule rule() {
    RawRule r;
    r.lhs = term();
    cursor_.skip_space();
    if (!cursor_.starts_with("->")) {
      fail(cursor_.location(), "rule without '->' separator");
    }
    cursor_.advance(2);
    r.rhs = term();
    cursor_.skip_space();
    if (cursor_.peek() == '|') {
      cursor_.advance();
      r.conditions.push_back(condition());
      for (cursor_.skip_space(); cursor_.peek() == ','; cursor_.skip_space()) {
        cursor_.advance();
        r.conditions.push_back(condition());
      }
    }
    return r;
  }

  std::pair<RawTerm, RawTerm> condition() {
    cursor_.skip_space();
    if (cursor_.at_end() || cursor_.peek() == ')' || cursor_.peek() == ',' ||
        cursor_.peek() == '|') {
      fail(cursor_.location(), "malformed condition list: expected a condition");
    }
    RawTerm lhs = term();
    cursor_.skip_space();
    if (!cursor_.starts_with("==") && !cursor_.starts_with("->")) {
      fail(cursor_.location(),
           "malformed condition list: expected '==' or '->'");
    }
    cursor_.advance(2);
    RawTerm rhs = term();
    return {std::move(lhs), std::move(rhs)};
  }

  RawTerm term() {
    cursor_.skip_space();
    RawTerm t;
    t.at = cursor_.location();
    if (cursor_.at_end()) fail(t.at, "unexpected end of input, expected a term");
    t.name = cursor_.identifier();
    if (t.name.empty()) {
      std::string found = cursor_.starts_with("->") || cursor_.starts_with("==")
                              ? std::string(cursor_.slice(cursor_.offset(),
                                                          cursor_.offset() + 2))
                              : std::string(1, cursor_.peek());
      fail(t.at, "expected a term, found '" + found + "'");
    }
    cursor_.skip_space();
    if (cursor_.peek() != '(') return t;

    const Location paren = cursor_.location();
    cursor_.advance();
    t.args.push_back(term());
    for (;;) {
      cursor_.skip_space();
      if (cursor_.at_end()) fail(paren, "unclosed argument list of '" + t.name + "'");
      if (cursor_.peek() == ')') break;
      if (cursor_.peek() != ',') {
        fail(cursor_.location(), "expected ',' or ')' in arguments of '" + t.name + "'");
      }
      cursor_.advance();
      t.args.push_back(term());
    }
    cursor_.advance();
    return t;
  }

  void record_arity(const std::string& name, std::size_t arity, Location at) {
    auto [it, inserted] = arities_.try_emplace(name, ArityUse{arity, at});
    if (!inserted && it->second.arity != arity) {
      fail(at, "function symbol '" + name + "' used with " +
                   std::to_string(arity) + " argument(s), but with " +
                   std::to_string(it->second.arity) + " at " +
                   std::to_string(it->second.at.line) + ":" +
                   std::to_string(it->second.at.column));
    }
  }

  Term resolve_term(const Problem& problem, const RawTerm& raw) {
    if (problem.variables.contains(raw.name)) {
      if (!raw.args.empty()) {
        fail(raw.at, "variable '" + raw.name + "' applied to arguments");
      }
      return Term::variable(raw.name);
    }
    record_arity(raw.name, raw.args.size(), raw.at);
    std::vector<Term> args;
    args.reserve(raw.args.size());
    for (const auto& a : raw.args) args.push_back(resolve_term(problem, a));
    return Term::apply(raw.name, std::move(args));
  }

  void resolve(Problem& problem) {
    for (const auto& [name, use] : arities_) {
      if (problem.variables.contains(name)) {
        fail(use.at, "'" + name + "' declared both as variable and in SIG");
      }
    }
    for (const auto& raw : raw_rules_) {
      Rule r;
      r.lhs = resolve_term(problem, raw.lhs);
      if (r.lhs.is_variable()) {
        fail(raw.lhs.at, "left-hand side of a rule is the variable '" +
                             raw.lhs.name + "'");
      }
      r.rhs = resolve_term(problem, raw.rhs);
      for (const auto& [lhs, rhs] : raw.conditions) {
        r.conditions.push_back(
            Condition{resolve_term(problem, lhs), resolve_term(problem, rhs)});
      }
      if (r.is_conditional() && !problem.condition_type) {
        fail(raw.lhs.at, "conditional rule without a CONDITIONTYPE section");
      }
      problem.rules.push_back(std::move(r));
    }
  }

  Cursor cursor_;
  std::vector<RawRule> raw_rules_;
  std::unordered_map<std::string, ArityUse> arities_;
};

void render_into(std::string& out, const Term& term) {
  out += term.name;
  if (term.args.empty()) return;
  out += '(';
  for (std::size_t i = 0; i < term.args.size(); ++i) {
    if (i > 0) out += ',';
    render_into(out, term.args[i]);
  }
  out += ')';
}

void collect_constants(const Term& t, std::set<std::string>& out) {
  if (t.is_variable()) return;
  if (t.args.empty()) out.insert(t.name);
  for (const auto& a : t.args) collect_constants(a, out);
}

void collect_symbols(const Term& t, std::set<std::string>& out) {
  if (t.is_variable()) return;
  out.insert(t.name);
  for (const auto& a : t.args) collect_symbols(a, out);
}

struct SectionScan {
  std::string keyword;
  std::string_view body;
};

// Top-level sections of arbitrary text. Stray text between sections is
// reported through `garbage`; an unterminated section runs to end of input.
std::vector<SectionScan> scan_sections(std::string_view text, bool& garbage) {
  std::vector<SectionScan> sections;
  garbage = false;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c != '(') {
      garbage = true;
      ++i;
      continue;
    }
    ++i;
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t kw_start = i;
    while (i < text.size() && !is_delimiter(text[i])) ++i;
    SectionScan s{std::string(text.substr(kw_start, i - kw_start)), {}};
    std::size_t body_start = i;
    int depth = 1;
    while (i < text.size() && depth > 0) {
      if (text[i] == '(') ++depth;
      if (text[i] == ')') --depth;
      ++i;
    }
    std::size_t body_end = depth == 0 ? i - 1 : i;
    s.body = text.substr(body_start, body_end - body_start);
    sections.push_back(std::move(s));
  }
  return sections;
}

}  // namespace

Problem parse_problem(std::string_view source) {
  if (infer_category(source) == FormatCategory::HigherOrder) {
    throw ParseError(1, 1, "higher-order problems are not structurally parsed");
  }
  Problem problem = Parser(source).run();
  problem.raw_source = std::string(source);
  return problem;
}

std::string render_term(const Term& term) {
  std::string out;
  render_into(out, term);
  return out;
}

std::string render_problem(const Problem& problem) {
  std::string out;
  if (problem.condition_type) {
    out += "(CONDITIONTYPE ";
    out += to_string(*problem.condition_type);
    out += ")\n";
  }
  out += "(VAR";
  for (const auto& v : problem.variables) {
    out += ' ';
    out += v;
  }
  out += ")\n";
  if (!problem.signature.empty()) {
    out += "(SIG";
    for (const auto& [name, arity] : problem.signature) {
      out += " (" + name + " " + std::to_string(arity) + ")";
    }
    out += ")\n";
  }
  for (const auto& body : problem.function_declarations) {
    out += "(FUN" + body + ")\n";
  }
  out += "(RULES\n";
  for (const auto& rule : problem.rules) {
    out += "  ";
    render_into(out, rule.lhs);
    out += " -> ";
    render_into(out, rule.rhs);
    for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
      out += i == 0 ? " | " : ", ";
      render_into(out, rule.conditions[i].lhs);
      out += " == ";
      render_into(out, rule.conditions[i].rhs);
    }
    out += '\n';
  }
  out += ")\n";
  for (const auto& body : problem.comments) {
    out += "(COMMENT" + body + ")\n";
  }
  return out;
}

std::vector<std::string> rhs_only_constants(const Problem& problem) {
  std::set<std::string> lhs_symbols;
  std::set<std::string> rhs_constants;
  for (const auto& rule : problem.rules) {
    collect_symbols(rule.lhs, lhs_symbols);
    collect_constants(rule.rhs, rhs_constants);
    for (const auto& c : rule.conditions) {
      collect_constants(c.lhs, rhs_constants);
      collect_constants(c.rhs, rhs_constants);
    }
  }
  std::vector<std::string> out;
  for (const auto& name : rhs_constants) {
    if (!lhs_symbols.contains(name) && !problem.signature.contains(name)) {
      out.push_back(name);
    }
  }
  return out;
}

FormatCategory infer_category(std::string_view source) {
  bool garbage = false;
  const auto sections = scan_sections(source, garbage);
  bool conditional = false;
  bool higher_order = false;
  bool first_order_only = !sections.empty() && !garbage;
  for (const auto& s : sections) {
    if (s.keyword == "CONDITIONTYPE") conditional = true;
    if (s.keyword == "VAR" && s.body.find(':') != std::string_view::npos) {
      higher_order = true;
    }
    if (s.keyword == "FUN" && s.body.find("->") != std::string_view::npos) {
      higher_order = true;
    }
    if (s.keyword != "VAR" && s.keyword != "RULES" && s.keyword != "COMMENT") {
      first_order_only = false;
    }
  }
  if (conditional) return FormatCategory::CTRS;
  if (higher_order) return FormatCategory::HigherOrder;
  if (first_order_only) return FormatCategory::TRS;
  return FormatCategory::Unknown;
}

}  // namespace cocoweb
