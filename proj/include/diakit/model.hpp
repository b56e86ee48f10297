#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diakit/diagnostic.hpp"

namespace diakit {

// Reference to a data type. Arrays are single-level: `array` marks `name[]`,
// so an array of arrays is not representable.
struct TypeRef {
  enum class Kind { builtin, named, array };

  std::string name;
  bool array = false;

  static TypeRef of(std::string name, bool array = false) { return {std::move(name), array}; }

  Kind kind() const;
  bool is_builtin() const;  // String, Integer, Float, Boolean (ignores `array`)
  TypeRef element() const { return {name, false}; }
  std::string str() const { return array ? name + "[]" : name; }

  bool operator==(const TypeRef&) const = default;
};

bool is_builtin_type_name(std::string_view name);

struct Param {
  std::string name;
  TypeRef type;
  Location loc;
};

struct AttributeDecl {
  std::string name;
  TypeRef type;
  Location loc;
};

struct SourceDecl {
  std::string name;
  TypeRef valueType;
  std::vector<Param> indices;
  Location loc;
};

struct ActionRefDecl {
  std::string name;
  Location loc;
};

struct DeviceDecl {
  std::string name;
  std::optional<std::string> parent;
  std::vector<AttributeDecl> attributes;
  std::vector<SourceDecl> sources;
  std::vector<ActionRefDecl> actionRefs;
  Location loc;
};

struct MethodDecl {
  std::string name;
  std::vector<Param> params;
  Location loc;
};

struct ActionDecl {
  std::string name;
  std::vector<MethodDecl> methods;
  Location loc;
};

struct StructDecl {
  std::string name;
  std::vector<Param> fields;
  Location loc;
};

struct EnumDecl {
  std::string name;
  std::vector<std::string> values;
  Location loc;
};

// One `source a, b from Device;` or `context Name;` line of a component.
struct InputBinding {
  enum class Kind { entitySources, contextRef };

  Kind kind = Kind::entitySources;
  std::vector<std::string> sourceNames;  // entitySources
  std::string deviceClass;               // entitySources
  std::string contextName;               // contextRef
  Location loc;
};

// `action Display on Screen;`
struct ActionUse {
  std::string action;
  std::string deviceClass;
  Location loc;
};

// Contexts and controllers share one member grammar so that misplaced members
// (an action use in a context, an entity source in a controller) survive
// parsing and are reported by the checker as pattern violations.
struct ContextDecl {
  std::string name;
  TypeRef outputType;
  std::vector<Param> outputIndices;  // at most one
  std::vector<InputBinding> inputs;
  std::vector<ActionUse> actionUses;  // always a violation
  Location loc;
};

struct ControllerDecl {
  std::string name;
  std::vector<InputBinding> inputs;  // entitySources bindings are violations
  std::vector<ActionUse> actionUses;
  Location loc;
};

using Declaration =
    std::variant<DeviceDecl, ActionDecl, StructDecl, EnumDecl, ContextDecl, ControllerDecl>;

const std::string& declaration_name(const Declaration& d);
const Location& declaration_location(const Declaration& d);
std::string_view declaration_keyword(const Declaration& d);

struct SpecModel {
  std::vector<Declaration> declarations;
};

// Copy of `model` with every Location reset; two specs are structurally
// identical when their stripped forms compare equal.
SpecModel strip_locations(SpecModel model);
bool structurally_equal(const SpecModel& a, const SpecModel& b);

// Canonical source text for `model`; reparsing it yields a structurally
// identical model.
std::string pretty_print(const SpecModel& model);

// Raised for lookups of names the checked spec does not declare.
class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Members visible on a device: its own plus everything inherited, ancestor first.
struct EffectiveMembers {
  std::vector<AttributeDecl> attributes;
  std::vector<SourceDecl> sources;
  std::vector<ActionRefDecl> actionRefs;
};

struct FlowNode {
  enum class Kind { entitySource, context, controller, entityAction };

  Kind kind = Kind::context;
  std::string component;  // device, context or controller name
  std::string member;     // source or action name for entity nodes

  std::string str() const;
  bool operator==(const FlowNode&) const = default;
  auto operator<=>(const FlowNode&) const = default;
};

struct FlowEdge {
  FlowNode from;
  FlowNode to;

  bool operator==(const FlowEdge&) const = default;
};

class CheckedSpec;

// Inheritance-closed members of `device`. Throws LookupError for unknown devices.
const EffectiveMembers& effective_members(const CheckedSpec& spec, std::string_view device);

// Data edges (one per input binding and source name) followed by one
// controller -> entity action edge per action use, in declaration order.
std::vector<FlowEdge> flow_edges(const CheckedSpec& spec);

}  // namespace diakit
