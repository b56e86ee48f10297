#include "diakit/value.hpp"

#include "diakit/checker.hpp"

namespace diakit {

bool StructValue::operator==(const StructValue& o) const {
  return type == o.type && fields == o.fields;
}

bool ArrayValue::operator==(const ArrayValue& o) const {
  return element == o.element && items == o.items;
}

Value Value::structure(std::string type, std::map<std::string, Value> fields) {
  return StructValue{std::move(type), std::move(fields)};
}

std::string Value::type_name() const {
  struct V {
    std::string operator()(const std::string&) const { return "String"; }
    std::string operator()(std::int64_t) const { return "Integer"; }
    std::string operator()(double) const { return "Float"; }
    std::string operator()(bool) const { return "Boolean"; }
    std::string operator()(const EnumValue& e) const { return e.type; }
    std::string operator()(const StructValue& s) const { return s.type; }
    std::string operator()(const ArrayValue& a) const { return a.element.name + "[]"; }
  };
  return std::visit(V{}, v_);
}

std::optional<std::string> type_mismatch(const Value& value, const TypeRef& type,
                                         const CheckedSpec& spec) {
  auto wrong = [&] {
    return std::optional<std::string>("expected " + type.str() + ", got " + value.type_name());
  };
  if (type.array) {
    if (!value.is_array() || value.as_array().element != type.element()) return wrong();
    const auto& items = value.as_array().items;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (auto m = type_mismatch(items[i], type.element(), spec))
        return "element " + std::to_string(i) + ": " + *m;
    return std::nullopt;
  }
  if (type.name == "String") return value.is_string() ? std::nullopt : wrong();
  if (type.name == "Integer") return value.is_integer() ? std::nullopt : wrong();
  if (type.name == "Float") return value.is_float() ? std::nullopt : wrong();
  if (type.name == "Boolean") return value.is_boolean() ? std::nullopt : wrong();
  if (const EnumDecl* e = spec.find_enum(type.name)) {
    if (!value.is_enum() || value.as_enum().type != e->name) return wrong();
    for (const auto& v : e->values)
      if (v == value.as_enum().value) return std::nullopt;
    return "'" + value.as_enum().value + "' is not a value of " + e->name;
  }
  if (const StructDecl* s = spec.find_struct(type.name)) {
    if (!value.is_struct() || value.as_struct().type != s->name) return wrong();
    const auto& fields = value.as_struct().fields;
    for (const auto& f : s->fields) {
      auto it = fields.find(f.name);
      if (it == fields.end()) return s->name + " is missing field '" + f.name + "'";
      if (auto m = type_mismatch(it->second, f.type, spec)) return "field '" + f.name + "': " + *m;
    }
    for (const auto& [name, _] : fields) {
      bool declared = false;
      for (const auto& f : s->fields) declared = declared || f.name == name;
      if (!declared) return s->name + " has no field '" + name + "'";
    }
    return std::nullopt;
  }
  return "unknown type " + type.str();
}

Value coerce(const Value& value, const TypeRef& type, const CheckedSpec& spec) {
  if (!type_mismatch(value, type, spec)) return value;
  if (!type.array) {
    if (type.name == "Float" && value.is_integer()) return static_cast<double>(value.as_integer());
    if (const EnumDecl* e = spec.find_enum(type.name); e && value.is_string()) {
      Value v = Value::enumeration(e->name, value.as_string());
      if (!type_mismatch(v, type, spec)) return v;
    }
    if (const StructDecl* s = spec.find_struct(type.name);
        s && s->fields.size() == 1 && !value.is_struct()) {
      const Param& only = s->fields.front();
      return Value::structure(s->name, {{only.name, coerce(value, only.type, spec)}});
    }
  } else if (value.is_array()) {
    std::vector<Value> items;
    for (const auto& item : value.as_array().items) items.push_back(coerce(item, type.element(), spec));
    return Value::array(type.element(), std::move(items));
  }
  auto m = type_mismatch(value, type, spec);
  throw ValueError("cannot use " + to_canonical_string(value) + " as " + type.str() + ": " + *m);
}

nlohmann::json to_json(const Value& value) {
  struct V {
    nlohmann::json operator()(const std::string& s) const { return s; }
    nlohmann::json operator()(std::int64_t i) const { return i; }
    nlohmann::json operator()(double d) const { return d; }
    nlohmann::json operator()(bool b) const { return b; }
    nlohmann::json operator()(const EnumValue& e) const { return e.value; }
    nlohmann::json operator()(const StructValue& s) const {
      nlohmann::json o = nlohmann::json::object();
      for (const auto& [k, v] : s.fields) o[k] = to_json(v);
      return o;
    }
    nlohmann::json operator()(const ArrayValue& a) const {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& v : a.items) arr.push_back(to_json(v));
      return arr;
    }
  };
  return std::visit(V{}, value.storage());
}

nlohmann::json to_json(const ValueMap& values) {
  nlohmann::json o = nlohmann::json::object();
  for (const auto& [k, v] : values) o[k] = to_json(v);
  return o;
}

std::string to_canonical_string(const Value& value) { return to_json(value).dump(); }

Value value_from_json(const nlohmann::json& j, const TypeRef& type, const CheckedSpec& spec) {
  auto fail = [&](const std::string& why) -> Value {
    throw ValueError("cannot decode " + j.dump() + " as " + type.str() + ": " + why);
  };
  if (type.array) {
    if (!j.is_array()) return fail("expected an array");
    std::vector<Value> items;
    for (const auto& e : j) items.push_back(value_from_json(e, type.element(), spec));
    return Value::array(type.element(), std::move(items));
  }
  if (type.name == "String") return j.is_string() ? Value(j.get<std::string>()) : fail("expected a string");
  if (type.name == "Integer")
    return j.is_number_integer() ? Value(j.get<std::int64_t>()) : fail("expected an integer");
  if (type.name == "Float") return j.is_number() ? Value(j.get<double>()) : fail("expected a number");
  if (type.name == "Boolean") return j.is_boolean() ? Value(j.get<bool>()) : fail("expected a boolean");
  if (const EnumDecl* e = spec.find_enum(type.name)) {
    if (!j.is_string()) return fail("expected an enumeration value name");
    Value v = Value::enumeration(e->name, j.get<std::string>());
    if (auto m = type_mismatch(v, type, spec)) return fail(*m);
    return v;
  }
  if (const StructDecl* s = spec.find_struct(type.name)) {
    if (!j.is_object()) {
      if (s->fields.size() == 1)
        return Value::structure(s->name,
                                {{s->fields.front().name, value_from_json(j, s->fields.front().type, spec)}});
      return fail("expected an object");
    }
    std::map<std::string, Value> fields;
    for (const auto& f : s->fields) {
      if (!j.contains(f.name)) return fail("missing field '" + f.name + "'");
      fields.emplace(f.name, value_from_json(j.at(f.name), f.type, spec));
    }
    for (const auto& [k, _] : j.items())
      if (!fields.count(k)) return fail("unknown field '" + k + "'");
    return Value::structure(s->name, std::move(fields));
  }
  return fail("unknown type");
}

}  // namespace diakit
