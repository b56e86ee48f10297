#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "diakit/model.hpp"

namespace diakit {

class CheckedSpec;
class Value;

struct EnumValue {
  std::string type;
  std::string value;

  bool operator==(const EnumValue&) const = default;
};

struct StructValue {
  std::string type;
  std::map<std::string, Value> fields;

  bool operator==(const StructValue&) const;
};

struct ArrayValue {
  TypeRef element;
  std::vector<Value> items;

  bool operator==(const ArrayValue&) const;
};

// Runtime value of any DiaSpec data type.
class Value {
 public:
  using Storage =
      std::variant<std::string, std::int64_t, double, bool, EnumValue, StructValue, ArrayValue>;

  Value() : v_(std::string{}) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(double d) : v_(d) {}
  Value(bool b) : v_(b) {}
  Value(EnumValue e) : v_(std::move(e)) {}
  Value(StructValue s) : v_(std::move(s)) {}
  Value(ArrayValue a) : v_(std::move(a)) {}

  static Value enumeration(std::string type, std::string value) {
    return EnumValue{std::move(type), std::move(value)};
  }
  static Value structure(std::string type, std::map<std::string, Value> fields);
  static Value array(TypeRef element, std::vector<Value> items) {
    return ArrayValue{std::move(element), std::move(items)};
  }

  const Storage& storage() const { return v_; }

  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_boolean() const { return std::holds_alternative<bool>(v_); }
  bool is_enum() const { return std::holds_alternative<EnumValue>(v_); }
  bool is_struct() const { return std::holds_alternative<StructValue>(v_); }
  bool is_array() const { return std::holds_alternative<ArrayValue>(v_); }
  bool is_number() const { return is_integer() || is_float(); }

  const std::string& as_string() const { return std::get<std::string>(v_); }
  std::int64_t as_integer() const { return std::get<std::int64_t>(v_); }
  double as_float() const { return std::get<double>(v_); }
  bool as_boolean() const { return std::get<bool>(v_); }
  const EnumValue& as_enum() const { return std::get<EnumValue>(v_); }
  const StructValue& as_struct() const { return std::get<StructValue>(v_); }
  const ArrayValue& as_array() const { return std::get<ArrayValue>(v_); }
  double as_number() const { return is_integer() ? static_cast<double>(as_integer()) : as_float(); }

  // Struct field access; throws std::out_of_range.
  const Value& field(const std::string& name) const { return as_struct().fields.at(name); }

  // Name of the data type this value carries, e.g. "Integer", "Area", "UserProfile[]".
  std::string type_name() const;

  bool operator==(const Value& o) const { return v_ == o.v_; }

 private:
  Storage v_;
};

using ValueMap = std::map<std::string, Value>;

class ValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural check of `value` against `type`; returns a description of the
// first mismatch, or nullopt when the value conforms.
std::optional<std::string> type_mismatch(const Value& value, const TypeRef& type,
                                         const CheckedSpec& spec);

// Converts a loosely typed value (a query literal, an Integer for a Float) to
// `type`: strings become enum values, a scalar becomes a single-field
// structure, integers widen to floats. Throws ValueError when impossible.
Value coerce(const Value& value, const TypeRef& type, const CheckedSpec& spec);

// Canonical JSON encoding: String/Integer/Float/Boolean as JSON scalars, enums
// as their value name, structures as objects (sorted keys), arrays as arrays.
nlohmann::json to_json(const Value& value);
std::string to_canonical_string(const Value& value);

// Decodes the canonical encoding against `type`. A single-field structure may
// be written as the bare value of its field. Throws ValueError.
Value value_from_json(const nlohmann::json& j, const TypeRef& type, const CheckedSpec& spec);

nlohmann::json to_json(const ValueMap& values);

}  // namespace diakit
