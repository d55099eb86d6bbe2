#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cocoweb {

struct Term {
  enum class Kind { Variable, Application };

  Kind kind = Kind::Application;
  std::string name;
  std::vector<Term> args;

  static Term variable(std::string name);
  static Term apply(std::string function, std::vector<Term> args = {});

  bool is_variable() const { return kind == Kind::Variable; }

  friend bool operator==(const Term&, const Term&) = default;
};

struct Condition {
  Term lhs;
  Term rhs;

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct Rule {
  Term lhs;
  Term rhs;
  std::vector<Condition> conditions;

  bool is_conditional() const { return !conditions.empty(); }

  friend bool operator==(const Rule&, const Rule&) = default;
};

enum class ConditionType { Oriented, Join, SemiEquational };

std::string_view to_string(ConditionType type);
std::optional<ConditionType> condition_type_from_string(std::string_view text);

enum class FormatCategory { TRS, CTRS, HigherOrder, Unknown };

std::string_view to_string(FormatCategory category);

/// A first-order (conditional) rewrite system in the Cops section format.
///
/// `raw_source` holds the submitted bytes untouched; tools are always handed
/// those bytes, never a rendering. Comments are kept verbatim but take no part
/// in structural equality, and neither does `raw_source`.
struct Problem {
  std::set<std::string> variables;
  std::vector<Rule> rules;
  std::optional<ConditionType> condition_type;
  /// Arities declared in SIG sections.
  std::map<std::string, std::size_t> signature;
  /// Bodies of FUN sections, kept as text.
  std::vector<std::string> function_declarations;
  std::vector<std::string> comments;
  std::string raw_source;
};

bool structurally_equal(const Problem& a, const Problem& b);

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& detail() const { return detail_; }

private:
  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

/// Parses a problem in the Cops section grammar. Throws ParseError.
///
/// Identifiers not declared in a VAR section are function symbols; those
/// that appear only on right-hand sides are accepted as constants. Every
/// function symbol must be used with a single arity.
Problem parse_problem(std::string_view source);

/// Canonical text; parse_problem(render_problem(p)) is structurally equal to p.
std::string render_problem(const Problem& problem);

std::string render_term(const Term& term);

/// Constants that occur on a right-hand side or in a condition but on no
/// left-hand side and in no SIG declaration.
std::vector<std::string> rhs_only_constants(const Problem& problem);

/// Classifies raw text by its declared sections. Total: never throws and
/// does not require the text to parse.
FormatCategory infer_category(std::string_view source);

}  // namespace cocoweb
