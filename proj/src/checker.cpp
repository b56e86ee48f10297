#include "diakit/checker.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <tuple>

namespace diakit {

using namespace check_codes;

std::string capitalize(std::string_view name) {
  std::string out(name);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string handler_name(std::string_view input) { return "onNew" + capitalize(input); }
std::string publisher_name(std::string_view member) { return "set" + capitalize(member); }
std::string accessor_name(std::string_view member) { return "get" + capitalize(member); }

Diagnostic CheckError::to_diagnostic() const {
  return {Severity::error, code, detail, location};
}

namespace {

template <class T>
const T* lookup(const SpecModel& model, const std::map<std::string, std::size_t, std::less<>>& table,
                std::string_view name) {
  auto it = table.find(name);
  if (it == table.end()) return nullptr;
  return std::get_if<T>(&model.declarations[it->second]);
}

}  // namespace

const DeviceDecl* CheckedSpec::find_device(std::string_view n) const {
  return lookup<DeviceDecl>(model_, devices_, n);
}
const ActionDecl* CheckedSpec::find_action(std::string_view n) const {
  return lookup<ActionDecl>(model_, actions_, n);
}
const StructDecl* CheckedSpec::find_struct(std::string_view n) const {
  return lookup<StructDecl>(model_, datatypes_, n);
}
const EnumDecl* CheckedSpec::find_enum(std::string_view n) const {
  return lookup<EnumDecl>(model_, datatypes_, n);
}
const ContextDecl* CheckedSpec::find_context(std::string_view n) const {
  return lookup<ContextDecl>(model_, contexts_, n);
}
const ControllerDecl* CheckedSpec::find_controller(std::string_view n) const {
  return lookup<ControllerDecl>(model_, controllers_, n);
}

namespace {

template <class T>
const T& require(const T* p, std::string_view what, std::string_view name) {
  if (!p) throw LookupError("unknown " + std::string(what) + " '" + std::string(name) + "'");
  return *p;
}

template <class T>
std::vector<const T*> all_of_kind(const SpecModel& model) {
  std::vector<const T*> out;
  for (const auto& d : model.declarations)
    if (const T* p = std::get_if<T>(&d)) out.push_back(p);
  return out;
}

}  // namespace

const DeviceDecl& CheckedSpec::device(std::string_view n) const {
  return require(find_device(n), "device", n);
}
const ContextDecl& CheckedSpec::context(std::string_view n) const {
  return require(find_context(n), "context", n);
}
const ControllerDecl& CheckedSpec::controller(std::string_view n) const {
  return require(find_controller(n), "controller", n);
}
const ActionDecl& CheckedSpec::action(std::string_view n) const {
  return require(find_action(n), "action", n);
}

std::vector<const DeviceDecl*> CheckedSpec::devices() const { return all_of_kind<DeviceDecl>(model_); }
std::vector<const ContextDecl*> CheckedSpec::contexts() const { return all_of_kind<ContextDecl>(model_); }
std::vector<const ControllerDecl*> CheckedSpec::controllers() const {
  return all_of_kind<ControllerDecl>(model_);
}
std::vector<const ActionDecl*> CheckedSpec::actions() const { return all_of_kind<ActionDecl>(model_); }

const EffectiveMembers& CheckedSpec::members(std::string_view device) const {
  auto it = effective_.find(device);
  if (it == effective_.end()) throw LookupError("unknown device '" + std::string(device) + "'");
  return it->second;
}

const SourceDecl* CheckedSpec::find_source(std::string_view device, std::string_view source) const {
  auto it = effective_.find(device);
  if (it == effective_.end()) return nullptr;
  for (const auto& s : it->second.sources)
    if (s.name == source) return &s;
  return nullptr;
}

const AttributeDecl* CheckedSpec::find_attribute(std::string_view device,
                                                 std::string_view attribute) const {
  auto it = effective_.find(device);
  if (it == effective_.end()) return nullptr;
  for (const auto& a : it->second.attributes)
    if (a.name == attribute) return &a;
  return nullptr;
}

bool CheckedSpec::has_action(std::string_view device, std::string_view action) const {
  auto it = effective_.find(device);
  if (it == effective_.end()) return false;
  for (const auto& a : it->second.actionRefs)
    if (a.name == action) return true;
  return false;
}

bool CheckedSpec::is_a(std::string_view device, std::string_view ancestor) const {
  const DeviceDecl* d = find_device(device);
  while (d) {
    if (d->name == ancestor) return true;
    d = d->parent ? find_device(*d->parent) : nullptr;
  }
  return false;
}

bool CheckedSpec::is_abstract(std::string_view device) const { return abstract_.count(device) > 0; }

std::vector<std::string> CheckedSpec::context_consumers(std::string_view context) const {
  std::vector<std::string> out;
  for (const auto& decl : model_.declarations) {
    const std::vector<InputBinding>* inputs = nullptr;
    if (const auto* c = std::get_if<ContextDecl>(&decl)) inputs = &c->inputs;
    if (const auto* c = std::get_if<ControllerDecl>(&decl)) inputs = &c->inputs;
    if (!inputs) continue;
    for (const auto& in : *inputs) {
      if (in.kind == InputBinding::Kind::contextRef && in.contextName == context) {
        out.push_back(declaration_name(decl));
        break;
      }
    }
  }
  return out;
}

const EffectiveMembers& effective_members(const CheckedSpec& spec, std::string_view device) {
  return spec.members(device);
}

namespace {

void component_edges(const std::string& name, FlowNode::Kind kind,
                     const std::vector<InputBinding>& inputs, std::vector<FlowEdge>& out) {
  FlowNode to{kind, name, {}};
  for (const auto& in : inputs) {
    if (in.kind == InputBinding::Kind::contextRef) {
      out.push_back({FlowNode{FlowNode::Kind::context, in.contextName, {}}, to});
    } else {
      for (const auto& s : in.sourceNames)
        out.push_back({FlowNode{FlowNode::Kind::entitySource, in.deviceClass, s}, to});
    }
  }
}

}  // namespace

std::vector<FlowEdge> flow_edges(const CheckedSpec& spec) {
  std::vector<FlowEdge> out;
  for (const auto& decl : spec.model().declarations) {
    if (const auto* c = std::get_if<ContextDecl>(&decl)) {
      component_edges(c->name, FlowNode::Kind::context, c->inputs, out);
    } else if (const auto* c = std::get_if<ControllerDecl>(&decl)) {
      component_edges(c->name, FlowNode::Kind::controller, c->inputs, out);
      for (const auto& use : c->actionUses)
        out.push_back({FlowNode{FlowNode::Kind::controller, c->name, {}},
                       FlowNode{FlowNode::Kind::entityAction, use.deviceClass, use.action}});
    }
  }
  return out;
}

struct CheckAccess {
  using Table = std::map<std::string, std::size_t, std::less<>>;

  explicit CheckAccess(const SpecModel& model) : spec(std::make_shared<CheckedSpec>()) {
    spec->model_ = model;
  }

  std::shared_ptr<CheckedSpec> spec;
  std::vector<CheckError> errors;
  std::set<std::string> unresolved;  // devices whose ancestry is broken

  const SpecModel& model() const { return spec->model_; }

  void error(const char* code, const std::string& subject, const std::string& detail,
             const Location& loc) {
    errors.push_back({code, subject, detail, loc});
  }

  void build_tables() {
    const auto& decls = model().declarations;
    for (std::size_t i = 0; i < decls.size(); ++i) {
      const Declaration& d = decls[i];
      Table* table = nullptr;
      const char* ns = "";
      switch (d.index()) {
        case 0: table = &spec->devices_; ns = "device"; break;
        case 1: table = &spec->actions_; ns = "action"; break;
        case 2:
        case 3: table = &spec->datatypes_; ns = "data type"; break;
        case 4: table = &spec->contexts_; ns = "context"; break;
        case 5: table = &spec->controllers_; ns = "controller"; break;
      }
      const std::string& name = declaration_name(d);
      if (!table->emplace(name, i).second)
        error(kDuplicateName, name, "duplicate " + std::string(ns) + " '" + name + "'",
              declaration_location(d));
    }
  }

  bool type_known(const TypeRef& t) const {
    return t.is_builtin() || spec->datatypes_.count(t.name) > 0;
  }

  void check_type(const TypeRef& t, const std::string& subject, const Location& loc) {
    if (!type_known(t)) error(kUnknownType, subject, "unknown type '" + t.name + "'", loc);
  }

  void check_index_types(const std::vector<Param>& indices, const std::string& subject) {
    std::set<std::string> seen;
    for (const auto& p : indices) {
      if (!type_known(p.type))
        error(kUnknownIndexType, subject, "unknown index type '" + p.type.name + "'", p.loc);
      if (!seen.insert(p.name).second)
        error(kDuplicateName, subject, "duplicate index '" + p.name + "'", p.loc);
    }
  }

  void check_params(const std::vector<Param>& params, const std::string& subject) {
    std::set<std::string> seen;
    for (const auto& p : params) {
      check_type(p.type, subject, p.loc);
      if (!seen.insert(p.name).second)
        error(kDuplicateName, subject, "duplicate parameter '" + p.name + "'", p.loc);
    }
  }

  // Type references, member uniqueness and datatype shape of every declaration.
  void check_declarations() {
    for (const auto& decl : model().declarations) {
      if (const auto* d = std::get_if<DeviceDecl>(&decl)) {
        std::set<std::string> keys;
        auto member = [&](const std::string& name, const Location& loc) {
          if (!keys.insert(capitalize(name)).second)
            error(kDuplicateName, d->name, "duplicate member '" + name + "' in device " + d->name, loc);
        };
        for (const auto& a : d->attributes) {
          check_type(a.type, d->name, a.loc);
          member(a.name, a.loc);
        }
        for (const auto& s : d->sources) {
          check_type(s.valueType, d->name, s.loc);
          check_index_types(s.indices, d->name);
          member(s.name, s.loc);
        }
        for (const auto& r : d->actionRefs) {
          member(r.name, r.loc);
          if (!spec->actions_.count(r.name))
            error(kUnknownAction, d->name, "unknown action '" + r.name + "'", r.loc);
        }
        if (d->parent && !spec->devices_.count(*d->parent))
          error(kUnknownDevice, d->name, "unknown parent device '" + *d->parent + "'", d->loc);
      } else if (const auto* a = std::get_if<ActionDecl>(&decl)) {
        std::set<std::string> seen;
        for (const auto& m : a->methods) {
          if (!seen.insert(m.name).second)
            error(kDuplicateName, a->name, "duplicate method '" + m.name + "'", m.loc);
          check_params(m.params, a->name);
        }
      } else if (const auto* s = std::get_if<StructDecl>(&decl)) {
        std::set<std::string> seen;
        for (const auto& f : s->fields) {
          check_type(f.type, s->name, f.loc);
          if (!seen.insert(f.name).second)
            error(kDuplicateDatatypeMember, s->name, "duplicate field '" + f.name + "'", f.loc);
        }
      } else if (const auto* e = std::get_if<EnumDecl>(&decl)) {
        std::set<std::string> seen;
        for (const auto& v : e->values)
          if (!seen.insert(v).second)
            error(kDuplicateDatatypeMember, e->name, "duplicate enumeration value '" + v + "'", e->loc);
      } else if (const auto* c = std::get_if<ContextDecl>(&decl)) {
        check_type(c->outputType, c->name, c->loc);
        check_index_types(c->outputIndices, c->name);
      }
    }
  }

  // E007 for every device on an inheritance cycle; devices whose chain does
  // not reach a root are left without effective members.
  void resolve_inheritance() {
    enum class Mark { none, active, done };
    std::map<std::string, Mark> marks;
    std::set<std::string> cyclic;
    for (const DeviceDecl* root : spec->devices()) {
      std::vector<const DeviceDecl*> path;
      const DeviceDecl* d = root;
      while (d && marks[d->name] == Mark::none) {
        marks[d->name] = Mark::active;
        path.push_back(d);
        d = d->parent ? spec->find_device(*d->parent) : nullptr;
      }
      if (d && marks[d->name] == Mark::active) {
        auto it = std::find(path.begin(), path.end(), d);
        for (; it != path.end(); ++it) cyclic.insert((*it)->name);
      }
      for (const auto* p : path) marks[p->name] = Mark::done;
    }
    for (const DeviceDecl* d : spec->devices()) {
      if (spec->find_device(d->name) != d) continue;  // shadowed duplicate
      if (cyclic.count(d->name))
        error(kInheritanceCycle, d->name, "device '" + d->name + "' inherits from itself", d->loc);
    }
    for (const DeviceDecl* d : spec->devices()) {
      const DeviceDecl* p = d;
      while (p) {
        if (cyclic.count(p->name)) {
          unresolved.insert(d->name);
          break;
        }
        p = p->parent ? spec->find_device(*p->parent) : nullptr;
      }
    }
    for (const DeviceDecl* d : spec->devices()) {
      if (spec->find_device(d->name) != d || unresolved.count(d->name)) continue;
      members_of(*d);
      if (d->parent && spec->find_device(*d->parent)) spec->abstract_.insert(*d->parent);
    }
  }

  const EffectiveMembers& members_of(const DeviceDecl& d) {
    if (auto it = spec->effective_.find(d.name); it != spec->effective_.end()) return it->second;
    EffectiveMembers m;
    const DeviceDecl* parent = d.parent ? spec->find_device(*d.parent) : nullptr;
    if (parent) m = members_of(*parent);
    std::set<std::string> inherited;
    for (const auto& a : m.attributes) inherited.insert(capitalize(a.name));
    for (const auto& s : m.sources) inherited.insert(capitalize(s.name));
    for (const auto& r : m.actionRefs) inherited.insert(capitalize(r.name));
    auto clash = [&](const std::string& name, const Location& loc) {
      if (!inherited.count(capitalize(name))) return false;
      error(kInheritedCollision, d.name,
            "member '" + name + "' of device " + d.name + " collides with an inherited member", loc);
      return true;
    };
    for (const auto& a : d.attributes)
      if (!clash(a.name, a.loc)) m.attributes.push_back(a);
    for (const auto& s : d.sources)
      if (!clash(s.name, s.loc)) m.sources.push_back(s);
    for (const auto& r : d.actionRefs)
      if (!clash(r.name, r.loc)) m.actionRefs.push_back(r);
    return spec->effective_.emplace(d.name, std::move(m)).first->second;
  }

  bool device_resolved(const std::string& name) const {
    return spec->effective_.count(name) > 0;
  }

  void check_inputs(const std::string& component, const std::vector<InputBinding>& inputs,
                    bool isController, bool& violated) {
    std::set<std::string> handlers;
    auto handler = [&](const std::string& input, const Location& loc) {
      if (!handlers.insert(handler_name(input)).second)
        error(kDuplicateName, component, "duplicate input '" + input + "'", loc);
    };
    for (const auto& in : inputs) {
      if (in.kind == InputBinding::Kind::contextRef) {
        if (!spec->contexts_.count(in.contextName))
          error(kUnknownContext, component, "unknown context '" + in.contextName + "'", in.loc);
        handler(in.contextName, in.loc);
        continue;
      }
      if (isController) {
        violated = true;
        error(kControllerSource, component,
              "controller " + component + " cannot consume entity sources directly (from " +
                  in.deviceClass + ")",
              in.loc);
        continue;
      }
      for (const auto& s : in.sourceNames) handler(s, in.loc);
      if (!spec->devices_.count(in.deviceClass)) {
        error(kUnknownDevice, component, "unknown device '" + in.deviceClass + "'", in.loc);
        continue;
      }
      if (!device_resolved(in.deviceClass)) continue;
      for (const auto& s : in.sourceNames)
        if (!spec->find_source(in.deviceClass, s))
          error(kUnknownSource, component,
                "device " + in.deviceClass + " has no source '" + s + "'", in.loc);
    }
  }

  void check_action_uses(const std::string& component, const std::vector<ActionUse>& uses) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& u : uses) {
      if (!seen.insert({u.action, u.deviceClass}).second)
        error(kDuplicateName, component, "duplicate action use '" + u.action + "'", u.loc);
      if (!spec->devices_.count(u.deviceClass)) {
        error(kUnknownDevice, component, "unknown device '" + u.deviceClass + "'", u.loc);
        continue;
      }
      if (!spec->actions_.count(u.action)) {
        error(kUnknownAction, component, "unknown action '" + u.action + "'", u.loc);
        continue;
      }
      if (device_resolved(u.deviceClass) && !spec->has_action(u.deviceClass, u.action))
        error(kUnknownAction, component,
              "device " + u.deviceClass + " does not provide action '" + u.action + "'", u.loc);
    }
  }

  void check_components() {
    for (const ContextDecl* c : spec->contexts()) {
      bool violated = false;
      check_inputs(c->name, c->inputs, false, violated);
      for (const auto& u : c->actionUses) {
        violated = true;
        error(kContextAction, c->name,
              "context " + c->name + " cannot invoke action '" + u.action + "'", u.loc);
      }
      if (!violated && c->inputs.empty())
        error(kEmptyComponent, c->name, "context " + c->name + " declares no input", c->loc);
    }
    for (const ControllerDecl* c : spec->controllers()) {
      bool violated = false;
      check_inputs(c->name, c->inputs, true, violated);
      check_action_uses(c->name, c->actionUses);
      bool hasContext = std::any_of(c->inputs.begin(), c->inputs.end(), [](const auto& in) {
        return in.kind == InputBinding::Kind::contextRef;
      });
      if (!violated && (!hasContext || c->actionUses.empty()))
        error(kEmptyComponent, c->name,
              "controller " + c->name + " needs at least one context and one action", c->loc);
    }
  }

  void check_context_cycles() {
    std::map<std::string, std::vector<std::string>> deps;
    for (const ContextDecl* c : spec->contexts())
      for (const auto& in : c->inputs)
        if (in.kind == InputBinding::Kind::contextRef && spec->contexts_.count(in.contextName))
          deps[c->name].push_back(in.contextName);
    // A context is on a cycle when it can reach itself.
    for (const ContextDecl* c : spec->contexts()) {
      if (spec->find_context(c->name) != c) continue;
      std::set<std::string> seen;
      std::vector<std::string> stack = deps[c->name];
      bool cyclic = false;
      while (!stack.empty() && !cyclic) {
        std::string n = stack.back();
        stack.pop_back();
        if (n == c->name) cyclic = true;
        if (!seen.insert(n).second) continue;
        for (const auto& m : deps[n]) stack.push_back(m);
      }
      if (cyclic)
        error(kContextCycle, c->name, "context " + c->name + " depends on itself", c->loc);
    }
  }

  void build_flow_graph() {
    for (auto& e : flow_edges(*spec))
      if (e.to.kind != FlowNode::Kind::entityAction) spec->flow_graph_.push_back(std::move(e));
  }
};

}  // namespace diakit

namespace diakit {

CheckResult check(const SpecModel& model) {
  CheckAccess c(model);
  c.build_tables();
  c.check_declarations();
  c.resolve_inheritance();
  c.check_components();
  c.check_context_cycles();

  CheckResult result;
  if (c.errors.empty()) {
    c.build_flow_graph();
    result.spec = std::move(c.spec);
    return result;
  }
  std::sort(c.errors.begin(), c.errors.end(), [](const CheckError& a, const CheckError& b) {
    return std::tie(a.location.file, a.location.line, a.location.column, a.code, a.subject,
                    a.detail) < std::tie(b.location.file, b.location.line, b.location.column,
                                         b.code, b.subject, b.detail);
  });
  result.errors = std::move(c.errors);
  return result;
}

std::vector<HandlerDescriptor> conformance_signature(const CheckedSpec& spec,
                                                     std::string_view component) {
  const std::vector<InputBinding>* inputs = nullptr;
  if (const auto* c = spec.find_context(component)) inputs = &c->inputs;
  if (const auto* c = spec.find_controller(component)) inputs = &c->inputs;
  if (!inputs) throw LookupError("unknown component '" + std::string(component) + "'");

  std::vector<HandlerDescriptor> out;
  for (const auto& in : *inputs) {
    if (in.kind == InputBinding::Kind::contextRef) {
      const ContextDecl& producer = spec.context(in.contextName);
      HandlerDescriptor h;
      h.name = handler_name(in.contextName);
      h.inputKind = HandlerDescriptor::InputKind::context;
      h.producer = in.contextName;
      h.valueType = producer.outputType;
      h.indices = producer.outputIndices;
      out.push_back(std::move(h));
      continue;
    }
    for (const auto& s : in.sourceNames) {
      const SourceDecl* src = spec.find_source(in.deviceClass, s);
      HandlerDescriptor h;
      h.name = handler_name(s);
      h.inputKind = HandlerDescriptor::InputKind::entitySource;
      h.producer = in.deviceClass;
      h.source = s;
      if (src) {
        h.valueType = src->valueType;
        h.indices = src->indices;
      }
      out.push_back(std::move(h));
    }
  }
  HandlerDescriptor init;
  init.kind = HandlerDescriptor::Kind::initialize;
  init.name = kInitializeHandler;
  out.push_back(std::move(init));
  return out;
}

}  // namespace diakit
