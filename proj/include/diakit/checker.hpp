#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "diakit/diagnostic.hpp"
#include "diakit/model.hpp"

namespace diakit {

// Checker error codes. Each code has exactly one triggering rule.
namespace check_codes {
inline constexpr const char* kDuplicateName = "E001";
inline constexpr const char* kUnknownType = "E002";
inline constexpr const char* kUnknownDevice = "E003";
inline constexpr const char* kUnknownSource = "E004";
inline constexpr const char* kUnknownContext = "E005";
inline constexpr const char* kUnknownAction = "E006";
inline constexpr const char* kInheritanceCycle = "E007";
inline constexpr const char* kControllerSource = "E008";
inline constexpr const char* kContextAction = "E009";
inline constexpr const char* kInheritedCollision = "E010";
inline constexpr const char* kUnknownIndexType = "E011";
inline constexpr const char* kDuplicateDatatypeMember = "E012";
inline constexpr const char* kContextCycle = "E013";
inline constexpr const char* kEmptyComponent = "E014";
}  // namespace check_codes

struct CheckError {
  std::string code;
  std::string subject;  // name of the offending declaration
  std::string detail;
  Location location;

  Diagnostic to_diagnostic() const;
};

// A SpecModel that passed `check`, with resolved symbol tables, inheritance
// closures and the acyclic data-flow graph. Immutable.
class CheckedSpec {
 public:
  const SpecModel& model() const { return model_; }

  const DeviceDecl* find_device(std::string_view name) const;
  const ActionDecl* find_action(std::string_view name) const;
  const StructDecl* find_struct(std::string_view name) const;
  const EnumDecl* find_enum(std::string_view name) const;
  const ContextDecl* find_context(std::string_view name) const;
  const ControllerDecl* find_controller(std::string_view name) const;

  const DeviceDecl& device(std::string_view name) const;
  const ContextDecl& context(std::string_view name) const;
  const ControllerDecl& controller(std::string_view name) const;
  const ActionDecl& action(std::string_view name) const;

  // Declaration order.
  std::vector<const DeviceDecl*> devices() const;
  std::vector<const ContextDecl*> contexts() const;
  std::vector<const ControllerDecl*> controllers() const;
  std::vector<const ActionDecl*> actions() const;

  const EffectiveMembers& members(std::string_view device) const;
  const SourceDecl* find_source(std::string_view device, std::string_view source) const;
  const AttributeDecl* find_attribute(std::string_view device, std::string_view attribute) const;
  bool has_action(std::string_view device, std::string_view action) const;

  // `device` itself or one of its descendants.
  bool is_a(std::string_view device, std::string_view ancestor) const;
  // Extended by at least one other device; such devices are never instantiated.
  bool is_abstract(std::string_view device) const;

  // Data-flow graph: entity source -> context, context -> context, context -> controller.
  const std::vector<FlowEdge>& flow_graph() const { return flow_graph_; }

  // Contexts and controllers consuming `context`, in declaration order.
  std::vector<std::string> context_consumers(std::string_view context) const;

 private:
  friend struct CheckAccess;

  SpecModel model_;
  std::map<std::string, std::size_t, std::less<>> devices_, actions_, datatypes_, contexts_,
      controllers_;
  std::map<std::string, EffectiveMembers, std::less<>> effective_;
  std::set<std::string, std::less<>> abstract_;
  std::vector<FlowEdge> flow_graph_;
};

struct CheckResult {
  std::shared_ptr<const CheckedSpec> spec;  // null when errors is nonempty
  std::vector<CheckError> errors;

  bool ok() const { return spec != nullptr; }
};

// Resolves names, validates inheritance and typing, and enforces the
// sense/compute/control pattern. Reports every error found, sorted by
// location then code.
CheckResult check(const SpecModel& model);

// One handler a context or controller implementation must provide.
struct HandlerDescriptor {
  enum class Kind { input, initialize };
  enum class InputKind { entitySource, context };

  Kind kind = Kind::input;
  std::string name;  // onNew<Source> / onNew<Context> / initialize
  InputKind inputKind = InputKind::entitySource;
  std::string producer;  // device class or context name
  std::string source;    // entity source name, empty for contexts
  TypeRef valueType;
  std::vector<Param> indices;

  bool operator==(const HandlerDescriptor& o) const {
    return kind == o.kind && name == o.name && inputKind == o.inputKind &&
           producer == o.producer && source == o.source && valueType == o.valueType;
  }
};

inline constexpr const char* kInitializeHandler = "initialize";

// Handlers required by `component` (a context or controller): one per declared
// input source or context, then the initialization hook. Throws LookupError.
std::vector<HandlerDescriptor> conformance_signature(const CheckedSpec& spec,
                                                     std::string_view component);

// "badgeDetected" -> "BadgeDetected".
std::string capitalize(std::string_view name);
std::string handler_name(std::string_view input);    // onNew + capitalized
std::string publisher_name(std::string_view member);  // set + capitalized
std::string accessor_name(std::string_view member);   // get + capitalized

}  // namespace diakit
