#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diakit/checker.hpp"
#include "diakit/filter.hpp"
#include "diakit/trace.hpp"
#include "diakit/value.hpp"

namespace diakit {

namespace runtime_codes {
inline constexpr const char* kUnknownClass = "R-UNKNOWN-CLASS";
inline constexpr const char* kAbstractClass = "R-ABSTRACT-CLASS";
inline constexpr const char* kBadAttributes = "R-BAD-ATTRIBUTES";
inline constexpr const char* kDuplicateId = "R-DUPLICATE-ID";
inline constexpr const char* kUnknownEntity = "R-UNKNOWN-ENTITY";
inline constexpr const char* kOffline = "R-OFFLINE";
inline constexpr const char* kUnknownAttr = "R-UNKNOWN-ATTR";
inline constexpr const char* kNonNumericOrder = "R-NON-NUMERIC-ORDER";
inline constexpr const char* kBadOperand = "R-BAD-OPERAND";
inline constexpr const char* kEmptyComposite = "R-EMPTY-COMPOSITE";
inline constexpr const char* kUnknownSource = "R-UNKNOWN-SOURCE";
inline constexpr const char* kTypeMismatch = "R-TYPE-MISMATCH";
inline constexpr const char* kIndexMismatch = "R-INDEX-MISMATCH";
inline constexpr const char* kUnknownComponent = "R-UNKNOWN-COMPONENT";
inline constexpr const char* kUndeclaredInput = "R-UNDECLARED-INPUT";
inline constexpr const char* kUndeclaredAction = "R-UNDECLARED-ACTION";
inline constexpr const char* kSignatureMismatch = "R-SIGNATURE-MISMATCH";
inline constexpr const char* kNoPullHandler = "R-NO-PULL-HANDLER";
inline constexpr const char* kPullFailed = "R-PULL-FAILED";
inline constexpr const char* kMissingHandler = "R-MISSING-HANDLER";
inline constexpr const char* kExtraHandler = "R-EXTRA-HANDLER";
}  // namespace runtime_codes

class RuntimeError : public std::runtime_error {
 public:
  RuntimeError(std::string code, const std::string& message, std::vector<std::string> subjects = {})
      : std::runtime_error(code + ": " + message),
        code_(std::move(code)),
        subjects_(std::move(subjects)) {}

  const std::string& code() const { return code_; }
  // Names the error is about, e.g. every missing handler.
  const std::vector<std::string>& subjects() const { return subjects_; }

 private:
  std::string code_;
  std::vector<std::string> subjects_;
};

struct EntityInstance {
  std::string id;
  std::string deviceClass;
  ValueMap attributes;  // exactly the effective attributes of deviceClass
  bool online = true;
};

// Discovery result: ids of matching entities in ascending order.
struct Composite {
  std::string deviceClass;
  std::vector<std::string> ids;

  bool empty() const { return ids.empty(); }
  std::size_t size() const { return ids.size(); }
  auto begin() const { return ids.begin(); }
  auto end() const { return ids.end(); }
};

// Lowest id of a nonempty composite; R-EMPTY-COMPOSITE otherwise.
const std::string& any_one(const Composite& composite);

struct ActionInvocation {
  std::string entityId;
  std::string action;
  std::string method;
  std::vector<Value> args;
};

// Entity-side implementation: pull handlers per source, action execution.
struct EntityImpl {
  using PullHandler = std::function<Value(const std::vector<Value>& indexArgs)>;

  std::map<std::string, PullHandler> pull;
  std::function<void(const ActionInvocation&)> onAction;
};

// A value delivered to a context or controller handler.
struct InputEvent {
  HandlerDescriptor::InputKind kind = HandlerDescriptor::InputKind::entitySource;
  std::string handler;
  std::string producer;  // entity id or context name
  std::string source;    // source name or context name
  Value value;
  ValueMap indices;
  ValueMap producerAttributes;  // attributes of the producing entity
  std::uint64_t seq = 0;        // event being delivered
};

class Runtime;

// Facade a component implementation uses: the generated-framework surface
// bound to one context or controller.
class ComponentContext {
 public:
  ComponentContext(Runtime& runtime, std::string component)
      : runtime_(&runtime), component_(std::move(component)) {}

  const std::string& name() const { return component_; }
  const CheckedSpec& spec() const;
  std::int64_t tick() const;

  Composite discover(std::string_view deviceClass, const FilterExpr& filter = {}) const;
  std::optional<EntityInstance> entity(std::string_view id) const;

  void subscribe(const Composite& composite, std::string_view source);
  void publish(Value value, ValueMap indices = {});
  // Only sources this context declares as inputs may be pulled.
  Value pull(std::string_view entityId, std::string_view source, std::vector<Value> indexArgs = {});
  void command(const Composite& composite, std::string_view action, std::string_view method,
               std::vector<Value> args = {});

 private:
  Runtime* runtime_;
  std::string component_;
};

using InputHandler = std::function<void(ComponentContext&, const InputEvent&)>;
using InitHook = std::function<void(ComponentContext&)>;

// Developer-supplied logic of a context or controller, keyed by handler name.
struct ComponentLogic {
  std::map<std::string, InputHandler> handlers;
  InitHook initialize;
};

// In-process execution fabric: entity registry, discovery, and the
// push/pull/command interaction modes over one FIFO delivery queue.
// Single-threaded; the simulator owns it.
class Runtime {
 public:
  explicit Runtime(std::shared_ptr<const CheckedSpec> spec);

  const CheckedSpec& spec() const { return *spec_; }
  std::int64_t tick() const { return tick_; }
  void set_tick(std::int64_t tick) { tick_ = tick; }

  // Registry.
  const EntityInstance& register_entity(std::string_view deviceClass, std::string id,
                                        ValueMap attributes, EntityImpl impl = {});
  void unregister_entity(std::string_view id);
  std::optional<EntityInstance> entity(std::string_view id) const;
  // Every instance ever registered (online or not), ascending id.
  std::vector<EntityInstance> entities() const;

  Composite discover(std::string_view deviceClass, const FilterExpr& filter) const;

  // Component logic. Registration validates against conformance_signature.
  void register_component_logic(std::string_view component, ComponentLogic logic);
  bool has_logic(std::string_view component) const;
  // Runs initialization hooks in declaration order.
  void initialize_components();

  // Push, entity side.
  void publish_source(std::string_view entityId, std::string_view source, Value value,
                      ValueMap indices = {});
  void subscribe_source(std::string_view component, const Composite& composite,
                        std::string_view source);
  // Push, context side. Consumers are subscribed automatically.
  void publish_context(std::string_view component, Value value, ValueMap indices = {});
  // Pull. `requester`, when given, must be a context declaring the source as input.
  Value pull_source(std::string_view entityId, std::string_view source,
                    std::vector<Value> indexArgs, std::string_view requester = {});
  // Command: one invocation per composite member, ascending id.
  void command(std::string_view controller, const Composite& composite, std::string_view action,
               std::string_view method, std::vector<Value> args);

  // Records a stimulus on an entity source and forwards it as a publication.
  std::uint64_t inject_stimulus(std::string_view entityId, std::string_view source, Value value,
                                ValueMap indices = {}, bool steered = false);

  // Runs queued deliveries and commands until the queue is empty; returns how
  // many were processed.
  std::size_t drain();
  bool idle() const { return queue_.empty(); }

  const std::vector<EventRecord>& trace() const { return trace_; }

 private:
  struct Delivery {
    std::string consumer;
    InputEvent event;
    bool toController = false;
  };
  struct CommandCall {
    ActionInvocation invocation;
  };
  struct Queued {
    std::variant<Delivery, CommandCall> item;
    std::optional<std::uint64_t> cause;
  };
  struct Entry {
    EntityInstance instance;
    EntityImpl impl;
  };
  struct SubscriptionKey {
    std::string entity;
    std::string source;
    auto operator<=>(const SubscriptionKey&) const = default;
  };

  std::uint64_t record(EventKind kind, std::string producer, std::string name, Value value,
                       ValueMap indices, std::optional<std::string> target = {},
                       bool steered = false);
  std::uint64_t record_with_cause(std::optional<std::uint64_t> cause, EventKind kind,
                                  std::string producer, std::string name, Value value,
                                  ValueMap indices, std::optional<std::string> target,
                                  bool steered);
  const Entry& online_entry(std::string_view id) const;
  void validate_indices(const std::vector<Param>& declared, const ValueMap& indices,
                        std::string_view what) const;
  void run_delivery(const Delivery& d, std::optional<std::uint64_t> cause);

  std::shared_ptr<const CheckedSpec> spec_;
  std::map<std::string, Entry, std::less<>> entities_;
  std::map<SubscriptionKey, std::vector<std::string>> subscriptions_;
  std::map<std::string, ComponentLogic, std::less<>> logic_;
  std::deque<Queued> queue_;
  std::vector<EventRecord> trace_;
  std::optional<std::uint64_t> current_cause_;
  std::uint64_t next_seq_ = 1;
  std::int64_t tick_ = 0;

  friend class ComponentContext;
};

}  // namespace diakit
