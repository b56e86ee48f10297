#include "diakit/runtime.hpp"

#include <algorithm>

namespace diakit {

using namespace runtime_codes;

namespace {

// Restores the current cause when a delivery finishes or throws.
class CauseScope {
 public:
  CauseScope(std::optional<std::uint64_t>& slot, std::optional<std::uint64_t> value)
      : slot_(slot), saved_(slot) {
    slot_ = value;
  }
  ~CauseScope() { slot_ = saved_; }
  CauseScope(const CauseScope&) = delete;
  CauseScope& operator=(const CauseScope&) = delete;

 private:
  std::optional<std::uint64_t>& slot_;
  std::optional<std::uint64_t> saved_;
};

std::string squote(std::string_view s) { return "'" + std::string(s) + "'"; }

// Binding of `component` that licenses consuming `source` from `deviceClass`.
bool declares_source_input(const CheckedSpec& spec, std::string_view component,
                           std::string_view deviceClass, std::string_view source) {
  const ContextDecl* c = spec.find_context(component);
  if (!c) return false;
  for (const auto& in : c->inputs) {
    if (in.kind != InputBinding::Kind::entitySources) continue;
    if (!spec.is_a(deviceClass, in.deviceClass)) continue;
    if (std::find(in.sourceNames.begin(), in.sourceNames.end(), source) != in.sourceNames.end())
      return true;
  }
  return false;
}

}  // namespace

const std::string& any_one(const Composite& composite) {
  if (composite.empty())
    throw RuntimeError(kEmptyComposite, "composite of " + composite.deviceClass + " is empty");
  return *std::min_element(composite.ids.begin(), composite.ids.end());
}

// ComponentContext

const CheckedSpec& ComponentContext::spec() const { return runtime_->spec(); }
std::int64_t ComponentContext::tick() const { return runtime_->tick(); }

Composite ComponentContext::discover(std::string_view deviceClass, const FilterExpr& filter) const {
  return runtime_->discover(deviceClass, filter);
}

std::optional<EntityInstance> ComponentContext::entity(std::string_view id) const {
  return runtime_->entity(id);
}

void ComponentContext::subscribe(const Composite& composite, std::string_view source) {
  runtime_->subscribe_source(component_, composite, source);
}

void ComponentContext::publish(Value value, ValueMap indices) {
  runtime_->publish_context(component_, std::move(value), std::move(indices));
}

Value ComponentContext::pull(std::string_view entityId, std::string_view source,
                             std::vector<Value> indexArgs) {
  return runtime_->pull_source(entityId, source, std::move(indexArgs), component_);
}

void ComponentContext::command(const Composite& composite, std::string_view action,
                               std::string_view method, std::vector<Value> args) {
  runtime_->command(component_, composite, action, method, std::move(args));
}

// Runtime

Runtime::Runtime(std::shared_ptr<const CheckedSpec> spec) : spec_(std::move(spec)) {
  if (!spec_) throw std::invalid_argument("runtime requires a checked spec");
}

const EntityInstance& Runtime::register_entity(std::string_view deviceClass, std::string id,
                                               ValueMap attributes, EntityImpl impl) {
  if (!spec_->find_device(deviceClass))
    throw RuntimeError(kUnknownClass, "unknown device class " + squote(deviceClass));
  if (spec_->is_abstract(deviceClass))
    throw RuntimeError(kAbstractClass, "device class " + squote(deviceClass) +
                                           " is extended by other devices and cannot be instantiated");
  if (id.empty()) throw RuntimeError(kDuplicateId, "entity id must not be empty");
  if (auto it = entities_.find(id); it != entities_.end() && it->second.instance.online)
    throw RuntimeError(kDuplicateId, "entity id " + squote(id) + " is already registered");

  const auto& declared = spec_->members(deviceClass).attributes;
  std::vector<std::string> missing;
  for (const auto& a : declared) {
    auto it = attributes.find(a.name);
    if (it == attributes.end()) {
      missing.push_back(a.name);
      continue;
    }
    if (auto m = type_mismatch(it->second, a.type, *spec_))
      throw RuntimeError(kBadAttributes, "attribute " + squote(a.name) + " of " + id + ": " + *m, {a.name});
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw RuntimeError(kBadAttributes, "entity " + id + " is missing attribute(s) " + names, missing);
  }
  for (const auto& [name, _] : attributes) {
    bool known = std::any_of(declared.begin(), declared.end(), [&](const auto& a) { return a.name == name; });
    if (!known)
      throw RuntimeError(kBadAttributes,
                         std::string(deviceClass) + " has no attribute " + squote(name), {name});
  }

  Entry entry{EntityInstance{id, std::string(deviceClass), std::move(attributes), true}, std::move(impl)};
  auto [it, _] = entities_.insert_or_assign(id, std::move(entry));
  return it->second.instance;
}

void Runtime::unregister_entity(std::string_view id) {
  auto it = entities_.find(id);
  if (it == entities_.end() || !it->second.instance.online)
    throw RuntimeError(kUnknownEntity, "no online entity " + squote(id));
  it->second.instance.online = false;
  std::erase_if(subscriptions_, [&](const auto& kv) { return kv.first.entity == id; });
}

std::optional<EntityInstance> Runtime::entity(std::string_view id) const {
  auto it = entities_.find(id);
  if (it == entities_.end()) return std::nullopt;
  return it->second.instance;
}

std::vector<EntityInstance> Runtime::entities() const {
  std::vector<EntityInstance> out;
  for (const auto& [_, e] : entities_) out.push_back(e.instance);
  return out;
}

const Runtime::Entry& Runtime::online_entry(std::string_view id) const {
  auto it = entities_.find(id);
  if (it == entities_.end()) throw RuntimeError(kUnknownEntity, "unknown entity " + squote(id));
  if (!it->second.instance.online) throw RuntimeError(kOffline, "entity " + squote(id) + " is offline");
  return it->second;
}

Composite Runtime::discover(std::string_view deviceClass, const FilterExpr& filter) const {
  if (!spec_->find_device(deviceClass))
    throw RuntimeError(kUnknownClass, "unknown device class " + squote(deviceClass));

  // Resolve each clause against the attribute's declared type.
  std::vector<FilterClause> clauses;
  std::function<Predicate(const Predicate&, const AttributeDecl&)> resolve =
      [&](const Predicate& p, const AttributeDecl& attr) {
        Predicate out = p;
        if (p.is_comparison()) {
          bool numeric = !attr.type.array && (attr.type.name == "Integer" || attr.type.name == "Float");
          if (p.is_ordering() && !numeric)
            throw RuntimeError(kNonNumericOrder, "ordering comparison on non-numeric attribute " +
                                                     squote(attr.name) + " (" + attr.type.str() + ")");
          try {
            out.operand = coerce(p.operand, attr.type, *spec_);
          } catch (const ValueError& e) {
            throw RuntimeError(kBadOperand, "filter on " + squote(attr.name) + ": " + e.what());
          }
          return out;
        }
        out.children.clear();
        for (const auto& c : p.children) out.children.push_back(resolve(c, attr));
        return out;
      };
  std::set<std::string> seen;
  for (const auto& c : filter.clauses) {
    const AttributeDecl* attr = spec_->find_attribute(deviceClass, c.attribute);
    if (!attr)
      throw RuntimeError(kUnknownAttr, std::string(deviceClass) + " has no attribute " + squote(c.attribute),
                         {c.attribute});
    if (!seen.insert(c.attribute).second)
      throw RuntimeError(kUnknownAttr, "attribute " + squote(c.attribute) + " is filtered more than once",
                         {c.attribute});
    clauses.push_back({c.attribute, resolve(c.predicate, *attr)});
  }

  Composite out{std::string(deviceClass), {}};
  for (const auto& [id, e] : entities_) {
    if (!e.instance.online || !spec_->is_a(e.instance.deviceClass, deviceClass)) continue;
    bool match = std::all_of(clauses.begin(), clauses.end(), [&](const FilterClause& c) {
      return evaluate(c.predicate, e.instance.attributes.at(c.attribute));
    });
    if (match) out.ids.push_back(id);
  }
  return out;
}

void Runtime::register_component_logic(std::string_view component, ComponentLogic logic) {
  if (!spec_->find_context(component) && !spec_->find_controller(component))
    throw RuntimeError(kUnknownComponent, "unknown context or controller " + squote(component));
  std::vector<std::string> missing;
  std::set<std::string> required;
  for (const auto& h : conformance_signature(*spec_, component)) {
    required.insert(h.name);
    bool present = h.kind == HandlerDescriptor::Kind::initialize ? static_cast<bool>(logic.initialize)
                                                                 : logic.handlers.count(h.name) > 0 &&
                                                                       logic.handlers.at(h.name);
    if (!present) missing.push_back(h.name);
  }
  std::vector<std::string> extra;
  for (const auto& [name, _] : logic.handlers)
    if (!required.count(name) || name == kInitializeHandler) extra.push_back(name);
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
  };
  if (!missing.empty())
    throw RuntimeError(kMissingHandler, std::string(component) + " lacks handler(s) " + join(missing), missing);
  if (!extra.empty())
    throw RuntimeError(kExtraHandler, std::string(component) + " declares no input for handler(s) " + join(extra),
                       extra);
  logic_.insert_or_assign(std::string(component), std::move(logic));
}

bool Runtime::has_logic(std::string_view component) const { return logic_.count(component) > 0; }

void Runtime::initialize_components() {
  for (const auto& decl : spec_->model().declarations) {
    if (!std::holds_alternative<ContextDecl>(decl) && !std::holds_alternative<ControllerDecl>(decl))
      continue;
    auto it = logic_.find(declaration_name(decl));
    if (it == logic_.end()) continue;
    CauseScope scope(current_cause_, std::nullopt);
    ComponentContext ctx(*this, it->first);
    it->second.initialize(ctx);
  }
}

void Runtime::validate_indices(const std::vector<Param>& declared, const ValueMap& indices,
                               std::string_view what) const {
  if (indices.size() != declared.size())
    throw RuntimeError(kIndexMismatch, std::string(what) + " takes " + std::to_string(declared.size()) +
                                           " index value(s), got " + std::to_string(indices.size()));
  for (const auto& p : declared) {
    auto it = indices.find(p.name);
    if (it == indices.end())
      throw RuntimeError(kIndexMismatch, std::string(what) + " is missing index " + squote(p.name));
    if (auto m = type_mismatch(it->second, p.type, *spec_))
      throw RuntimeError(kIndexMismatch, std::string(what) + " index " + squote(p.name) + ": " + *m);
  }
}

std::uint64_t Runtime::record(EventKind kind, std::string producer, std::string name, Value value,
                              ValueMap indices, std::optional<std::string> target, bool steered) {
  return record_with_cause(current_cause_, kind, std::move(producer), std::move(name), std::move(value),
                           std::move(indices), std::move(target), steered);
}

std::uint64_t Runtime::record_with_cause(std::optional<std::uint64_t> cause, EventKind kind,
                                         std::string producer, std::string name, Value value,
                                         ValueMap indices, std::optional<std::string> target,
                                         bool steered) {
  EventRecord e;
  e.seq = next_seq_++;
  e.cause = cause;
  e.tick = tick_;
  e.kind = kind;
  e.producer = std::move(producer);
  e.name = std::move(name);
  e.value = std::move(value);
  e.indices = std::move(indices);
  e.target = std::move(target);
  e.steered = steered;
  trace_.push_back(std::move(e));
  return trace_.back().seq;
}

void Runtime::publish_source(std::string_view entityId, std::string_view source, Value value,
                             ValueMap indices) {
  const Entry& entry = online_entry(entityId);
  const SourceDecl* decl = spec_->find_source(entry.instance.deviceClass, source);
  if (!decl)
    throw RuntimeError(kUnknownSource, entry.instance.deviceClass + " has no source " + squote(source));
  if (auto m = type_mismatch(value, decl->valueType, *spec_))
    throw RuntimeError(kTypeMismatch, "source " + squote(source) + " of " + std::string(entityId) + ": " + *m);
  validate_indices(decl->indices, indices, "source " + squote(source));

  std::uint64_t seq = record(EventKind::sourcePublish, std::string(entityId), std::string(source), value, indices);
  auto it = subscriptions_.find({std::string(entityId), std::string(source)});
  if (it == subscriptions_.end()) return;
  for (const auto& consumer : it->second) {
    InputEvent ev;
    ev.kind = HandlerDescriptor::InputKind::entitySource;
    ev.handler = handler_name(source);
    ev.producer = std::string(entityId);
    ev.source = std::string(source);
    ev.value = value;
    ev.indices = indices;
    ev.producerAttributes = entry.instance.attributes;
    ev.seq = seq;
    queue_.push_back({Delivery{consumer, std::move(ev), false}, seq});
  }
}

void Runtime::subscribe_source(std::string_view component, const Composite& composite,
                               std::string_view source) {
  if (!declares_source_input(*spec_, component, composite.deviceClass, source))
    throw RuntimeError(kUndeclaredInput, std::string(component) + " declares no input " + squote(source) +
                                             " from " + composite.deviceClass);
  for (const auto& id : composite.ids) {
    auto it = entities_.find(id);
    if (it == entities_.end() || !it->second.instance.online) continue;
    if (!spec_->is_a(it->second.instance.deviceClass, composite.deviceClass)) continue;
    auto& subs = subscriptions_[{id, std::string(source)}];
    if (std::find(subs.begin(), subs.end(), component) == subs.end()) subs.emplace_back(component);
  }
}

void Runtime::publish_context(std::string_view component, Value value, ValueMap indices) {
  const ContextDecl* c = spec_->find_context(component);
  if (!c) throw RuntimeError(kUnknownComponent, "unknown context " + squote(component));
  if (auto m = type_mismatch(value, c->outputType, *spec_))
    throw RuntimeError(kTypeMismatch, "context " + std::string(component) + ": " + *m);
  validate_indices(c->outputIndices, indices, "context " + std::string(component));

  std::uint64_t seq = record(EventKind::contextPublish, std::string(component), std::string(component),
                             value, indices);
  for (const auto& consumer : spec_->context_consumers(component)) {
    if (!has_logic(consumer)) continue;
    InputEvent ev;
    ev.kind = HandlerDescriptor::InputKind::context;
    ev.handler = handler_name(component);
    ev.producer = std::string(component);
    ev.source = std::string(component);
    ev.value = value;
    ev.indices = indices;
    ev.seq = seq;
    bool toController = spec_->find_controller(consumer) != nullptr;
    queue_.push_back({Delivery{consumer, std::move(ev), toController}, seq});
  }
}

Value Runtime::pull_source(std::string_view entityId, std::string_view source,
                           std::vector<Value> indexArgs, std::string_view requester) {
  const Entry& entry = online_entry(entityId);
  const SourceDecl* decl = spec_->find_source(entry.instance.deviceClass, source);
  if (!decl)
    throw RuntimeError(kUnknownSource, entry.instance.deviceClass + " has no source " + squote(source));
  if (!requester.empty() &&
      !declares_source_input(*spec_, requester, entry.instance.deviceClass, source))
    throw RuntimeError(kUndeclaredInput, std::string(requester) + " declares no input " + squote(source) +
                                             " from " + entry.instance.deviceClass);
  if (indexArgs.size() != decl->indices.size())
    throw RuntimeError(kIndexMismatch, "source " + squote(source) + " takes " +
                                           std::to_string(decl->indices.size()) + " index argument(s), got " +
                                           std::to_string(indexArgs.size()));
  ValueMap indices;
  for (std::size_t i = 0; i < indexArgs.size(); ++i) {
    const Param& p = decl->indices[i];
    if (auto m = type_mismatch(indexArgs[i], p.type, *spec_))
      throw RuntimeError(kIndexMismatch, "index " + squote(p.name) + " of " + squote(source) + ": " + *m);
    indices.emplace(p.name, indexArgs[i]);
  }
  auto handler = entry.impl.pull.find(std::string(source));
  if (handler == entry.impl.pull.end() || !handler->second)
    throw RuntimeError(kNoPullHandler, "entity " + std::string(entityId) + " cannot answer pulls of " +
                                           squote(source));
  Value value = handler->second(indexArgs);
  if (auto m = type_mismatch(value, decl->valueType, *spec_))
    throw RuntimeError(kTypeMismatch, "pull of " + squote(source) + " from " + std::string(entityId) + ": " + *m);
  record(EventKind::pull, std::string(entityId), std::string(source), value, std::move(indices));
  return value;
}

void Runtime::command(std::string_view controller, const Composite& composite, std::string_view action,
                      std::string_view method, std::vector<Value> args) {
  const ControllerDecl* c = spec_->find_controller(controller);
  bool declared = c && std::any_of(c->actionUses.begin(), c->actionUses.end(), [&](const ActionUse& u) {
                    return u.action == action && spec_->is_a(composite.deviceClass, u.deviceClass);
                  });
  if (!declared)
    throw RuntimeError(kUndeclaredAction, std::string(controller) + " declares no action " + squote(action) +
                                              " on " + composite.deviceClass);
  const ActionDecl& decl = spec_->action(action);
  auto m = std::find_if(decl.methods.begin(), decl.methods.end(),
                        [&](const MethodDecl& md) { return md.name == method; });
  if (m == decl.methods.end())
    throw RuntimeError(kSignatureMismatch, "action " + std::string(action) + " has no method " + squote(method));
  if (args.size() != m->params.size())
    throw RuntimeError(kSignatureMismatch, std::string(method) + " takes " + std::to_string(m->params.size()) +
                                               " argument(s), got " + std::to_string(args.size()));
  std::map<std::string, Value> named;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (auto mm = type_mismatch(args[i], m->params[i].type, *spec_))
      throw RuntimeError(kSignatureMismatch, std::string(method) + " argument " + squote(m->params[i].name) +
                                                 ": " + *mm);
    named.emplace(m->params[i].name, args[i]);
  }
  std::vector<std::string> ids = composite.ids;
  std::sort(ids.begin(), ids.end());
  Value payload = Value::structure(std::string(action), named);
  for (const auto& id : ids) {
    std::uint64_t seq = record(EventKind::command, std::string(controller), std::string(method), payload, {}, id);
    queue_.push_back({CommandCall{ActionInvocation{id, std::string(action), std::string(method), args}}, seq});
  }
}

std::uint64_t Runtime::inject_stimulus(std::string_view entityId, std::string_view source, Value value,
                                       ValueMap indices, bool steered) {
  const Entry& entry = online_entry(entityId);
  const SourceDecl* decl = spec_->find_source(entry.instance.deviceClass, source);
  if (!decl)
    throw RuntimeError(kUnknownSource, entry.instance.deviceClass + " has no source " + squote(source));
  if (auto m = type_mismatch(value, decl->valueType, *spec_))
    throw RuntimeError(kTypeMismatch, "stimulus for " + squote(source) + ": " + *m);
  validate_indices(decl->indices, indices, "source " + squote(source));

  std::uint64_t seq = record_with_cause(std::nullopt, EventKind::stimulus, std::string(entityId),
                                        std::string(source), value, indices, std::nullopt, steered);
  CauseScope scope(current_cause_, seq);
  publish_source(entityId, source, std::move(value), std::move(indices));
  return seq;
}

void Runtime::run_delivery(const Delivery& d, std::optional<std::uint64_t> cause) {
  auto it = logic_.find(d.consumer);
  if (it == logic_.end()) return;
  auto handler = it->second.handlers.find(d.event.handler);
  if (handler == it->second.handlers.end()) return;
  std::optional<std::uint64_t> handling = cause;
  if (d.toController)
    handling = record_with_cause(cause, EventKind::controllerHandle, d.consumer, d.event.handler, d.event.value,
                                 d.event.indices, std::nullopt, false);
  CauseScope scope(current_cause_, handling);
  ComponentContext ctx(*this, d.consumer);
  handler->second(ctx, d.event);
}

std::size_t Runtime::drain() {
  std::size_t processed = 0;
  while (!queue_.empty()) {
    Queued q = std::move(queue_.front());
    queue_.pop_front();
    ++processed;
    if (const auto* d = std::get_if<Delivery>(&q.item)) {
      run_delivery(*d, q.cause);
    } else {
      const auto& call = std::get<CommandCall>(q.item).invocation;
      auto it = entities_.find(call.entityId);
      if (it == entities_.end() || !it->second.instance.online || !it->second.impl.onAction) continue;
      CauseScope scope(current_cause_, q.cause);
      it->second.impl.onAction(call);
    }
  }
  return processed;
}

}  // namespace diakit
