#include "diakit/filter.hpp"

#include <cctype>
#include <stdexcept>

namespace diakit {

namespace {

Predicate compare(Predicate::Op op, Value v) {
  Predicate p;
  p.op = op;
  p.operand = std::move(v);
  return p;
}

std::string literal_text(const Value& v) {
  if (v.is_string()) {
    const std::string& s = v.as_string();
    bool bare = !s.empty();
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) bare = false;
    if (bare && (std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_') && s != "true" &&
        s != "false")
      return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + '"';
  }
  if (v.is_enum()) return v.as_enum().value;
  if (v.is_struct() && v.as_struct().fields.size() == 1)
    return literal_text(v.as_struct().fields.begin()->second);
  return to_canonical_string(v);
}

}  // namespace

Predicate eq(Value v) { return compare(Predicate::Op::eq, std::move(v)); }
Predicate ne(Value v) { return compare(Predicate::Op::ne, std::move(v)); }
Predicate lt(Value v) { return compare(Predicate::Op::lt, std::move(v)); }
Predicate le(Value v) { return compare(Predicate::Op::le, std::move(v)); }
Predicate gt(Value v) { return compare(Predicate::Op::gt, std::move(v)); }
Predicate ge(Value v) { return compare(Predicate::Op::ge, std::move(v)); }

Predicate any_of(Predicate a, Predicate b) {
  Predicate p;
  p.op = Predicate::Op::or_;
  p.children = {std::move(a), std::move(b)};
  return p;
}

Predicate all_of(Predicate a, Predicate b) {
  Predicate p;
  p.op = Predicate::Op::and_;
  p.children = {std::move(a), std::move(b)};
  return p;
}

Predicate negate(Predicate inner) {
  Predicate p;
  p.op = Predicate::Op::not_;
  p.children = {std::move(inner)};
  return p;
}

FilterExpr& FilterExpr::where(std::string attribute, Predicate p) {
  for (const auto& c : clauses)
    if (c.attribute == attribute)
      throw std::invalid_argument("attribute '" + attribute + "' is filtered more than once");
  clauses.push_back({std::move(attribute), std::move(p)});
  return *this;
}

bool evaluate(const Predicate& p, const Value& attribute) {
  switch (p.op) {
    case Predicate::Op::eq:
      return attribute == p.operand;
    case Predicate::Op::ne:
      return !(attribute == p.operand);
    case Predicate::Op::lt:
      return attribute.as_number() < p.operand.as_number();
    case Predicate::Op::le:
      return attribute.as_number() <= p.operand.as_number();
    case Predicate::Op::gt:
      return attribute.as_number() > p.operand.as_number();
    case Predicate::Op::ge:
      return attribute.as_number() >= p.operand.as_number();
    case Predicate::Op::or_:
      return evaluate(p.children.at(0), attribute) || evaluate(p.children.at(1), attribute);
    case Predicate::Op::and_:
      return evaluate(p.children.at(0), attribute) && evaluate(p.children.at(1), attribute);
    case Predicate::Op::not_:
      return !evaluate(p.children.at(0), attribute);
  }
  return false;
}

std::string to_query_string(const Predicate& p) {
  static const char* names[] = {"eq", "ne", "lt", "le", "gt", "ge", "or", "and", "not"};
  std::string out = names[static_cast<int>(p.op)];
  out += '(';
  if (p.is_comparison()) {
    out += literal_text(p.operand);
  } else {
    for (std::size_t i = 0; i < p.children.size(); ++i) {
      if (i) out += ',';
      out += to_query_string(p.children[i]);
    }
  }
  return out + ')';
}

std::string to_query_string(const FilterExpr& f) {
  std::string out;
  for (std::size_t i = 0; i < f.clauses.size(); ++i) {
    if (i) out += ',';
    out += f.clauses[i].attribute + '(' + to_query_string(f.clauses[i].predicate) + ')';
  }
  return out;
}

}  // namespace diakit
