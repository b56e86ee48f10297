#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "diakit/parser.hpp"

namespace diakit {

namespace {

// Recursive-descent reader for the textual discovery filter.
class QueryReader {
 public:
  explicit QueryReader(std::string_view text) : s_(text) {}

  FilterExpr run() {
    FilterExpr f;
    skip_ws();
    if (pos_ == s_.size()) return f;
    std::set<std::string> seen;
    for (;;) {
      skip_ws();
      std::size_t at = pos_;
      std::string attr = word();
      if (attr.empty() || !(std::isalpha(static_cast<unsigned char>(attr[0])) || attr[0] == '_'))
        fail(at, "expected attribute name");
      if (!seen.insert(attr).second)
        fail(at, "attribute '" + attr + "' is filtered more than once");
      expect('(');
      Predicate p = predicate();
      expect(')');
      f.clauses.push_back({std::move(attr), std::move(p)});
      skip_ws();
      if (pos_ == s_.size()) break;
      expect(',');
    }
    return f;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& message, const char* code = parse_codes::kMalformedPredicate) {
    throw QueryError(code, at + 1, message);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c)
      fail(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' || c == '+';
  }

  std::string word() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && word_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  bool next_is(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  Predicate predicate() {
    skip_ws();
    std::size_t at = pos_;
    if (next_is('"')) return eq(quoted());
    std::string w = word();
    if (w.empty()) fail(at, "expected predicate or value");
    if (!next_is('(')) return eq(literal(w));

    static const std::map<std::string, Predicate::Op> ops = {
        {"eq", Predicate::Op::eq}, {"ne", Predicate::Op::ne}, {"lt", Predicate::Op::lt},
        {"le", Predicate::Op::le}, {"gt", Predicate::Op::gt}, {"ge", Predicate::Op::ge},
        {"or", Predicate::Op::or_}, {"and", Predicate::Op::and_}, {"not", Predicate::Op::not_}};
    auto it = ops.find(w);
    if (it == ops.end()) fail(at, "unknown operator '" + w + "'", parse_codes::kUnknownOperator);
    expect('(');
    Predicate p;
    p.op = it->second;
    if (p.is_comparison()) {
      p.operand = value();
    } else if (p.op == Predicate::Op::not_) {
      p.children.push_back(predicate());
    } else {
      p.children.push_back(predicate());
      expect(',');
      p.children.push_back(predicate());
    }
    expect(')');
    return p;
  }

  Value value() {
    skip_ws();
    std::size_t at = pos_;
    if (next_is('"')) return quoted();
    std::string w = word();
    if (w.empty()) fail(at, "expected value");
    if (next_is('(')) fail(at, "expected value, found operator '" + w + "'");
    return literal(w);
  }

  Value quoted() {
    std::size_t at = pos_;
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      out += s_[pos_++];
    }
    if (pos_ >= s_.size()) fail(at, "unterminated string");
    ++pos_;
    return out;
  }

  static Value literal(const std::string& w) {
    if (w == "true") return true;
    if (w == "false") return false;
    const char* b = w.data();
    const char* e = w.data() + w.size();
    if (*b == '+') ++b;
    std::int64_t i = 0;
    auto ri = std::from_chars(b, e, i);
    if (ri.ec == std::errc() && ri.ptr == e) return i;
    double d = 0;
    auto rd = std::from_chars(b, e, d);
    if (rd.ec == std::errc() && rd.ptr == e) return d;
    return w;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

FilterExpr parse_query(std::string_view text) { return QueryReader(text).run(); }

}  // namespace diakit
