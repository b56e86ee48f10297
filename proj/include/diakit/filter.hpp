#pragma once

#include <string>
#include <vector>

#include "diakit/value.hpp"

namespace diakit {

// Per-attribute logical expression of a discovery query.
struct Predicate {
  enum class Op { eq, ne, lt, le, gt, ge, or_, and_, not_ };

  Op op = Op::eq;
  Value operand;                  // comparison ops
  std::vector<Predicate> children;  // or/and: two, not: one

  bool is_comparison() const { return op <= Op::ge; }
  bool is_ordering() const { return op >= Op::lt && op <= Op::ge; }
  bool operator==(const Predicate&) const = default;
};

Predicate eq(Value v);
Predicate ne(Value v);
Predicate lt(Value v);
Predicate le(Value v);
Predicate gt(Value v);
Predicate ge(Value v);
Predicate any_of(Predicate a, Predicate b);
Predicate all_of(Predicate a, Predicate b);
Predicate negate(Predicate p);

struct FilterClause {
  std::string attribute;
  Predicate predicate;

  bool operator==(const FilterClause&) const = default;
};

// Conjunction of clauses; each attribute appears at most once. Empty matches all.
struct FilterExpr {
  std::vector<FilterClause> clauses;

  FilterExpr& where(std::string attribute, Predicate p);
  bool operator==(const FilterExpr&) const = default;
};

// Evaluates `p` on an attribute value. Operands must already be coerced to the
// attribute's type; ordering ops compare numerically.
bool evaluate(const Predicate& p, const Value& attribute);

// Textual form accepted by parse_query.
std::string to_query_string(const Predicate& p);
std::string to_query_string(const FilterExpr& f);

}  // namespace diakit
