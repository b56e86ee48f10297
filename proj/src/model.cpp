#include "diakit/model.hpp"

#include <array>
#include <sstream>

namespace diakit {

namespace {

constexpr std::array<std::string_view, 4> kBuiltins = {"String", "Integer", "Float", "Boolean"};

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void print_params(std::ostringstream& os, const std::vector<Param>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) os << ", ";
    os << params[i].name << " as " << params[i].type.str();
  }
}

void print_index(std::ostringstream& os, const std::vector<Param>& indices) {
  if (indices.empty()) return;
  os << " indexed by ";
  print_params(os, indices);
}

void print_component_members(std::ostringstream& os, const std::vector<InputBinding>& inputs,
                             const std::vector<ActionUse>& actions) {
  for (const auto& in : inputs) {
    if (in.kind == InputBinding::Kind::contextRef) {
      os << "  context " << in.contextName << ";\n";
      continue;
    }
    os << "  source ";
    for (std::size_t i = 0; i < in.sourceNames.size(); ++i) {
      if (i) os << ", ";
      os << in.sourceNames[i];
    }
    os << " from " << in.deviceClass << ";\n";
  }
  for (const auto& a : actions) os << "  action " << a.action << " on " << a.deviceClass << ";\n";
}

}  // namespace

bool is_builtin_type_name(std::string_view name) {
  for (auto b : kBuiltins)
    if (b == name) return true;
  return false;
}

TypeRef::Kind TypeRef::kind() const {
  if (array) return Kind::array;
  return is_builtin() ? Kind::builtin : Kind::named;
}

bool TypeRef::is_builtin() const { return is_builtin_type_name(name); }

const std::string& declaration_name(const Declaration& d) {
  return std::visit([](const auto& x) -> const std::string& { return x.name; }, d);
}

const Location& declaration_location(const Declaration& d) {
  return std::visit([](const auto& x) -> const Location& { return x.loc; }, d);
}

std::string_view declaration_keyword(const Declaration& d) {
  return std::visit(overloaded{
                        [](const DeviceDecl&) { return std::string_view("device"); },
                        [](const ActionDecl&) { return std::string_view("action"); },
                        [](const StructDecl&) { return std::string_view("structure"); },
                        [](const EnumDecl&) { return std::string_view("enumeration"); },
                        [](const ContextDecl&) { return std::string_view("context"); },
                        [](const ControllerDecl&) { return std::string_view("controller"); },
                    },
                    d);
}

std::string FlowNode::str() const {
  switch (kind) {
    case Kind::entitySource:
    case Kind::entityAction:
      return component + "." + member;
    case Kind::context:
    case Kind::controller:
      break;
  }
  return component;
}

SpecModel strip_locations(SpecModel model) {
  auto clear = [](auto& v) {
    for (auto& x : v) x.loc = {};
  };
  for (auto& decl : model.declarations) {
    std::visit(overloaded{
                   [&](DeviceDecl& d) {
                     d.loc = {};
                     clear(d.attributes);
                     clear(d.actionRefs);
                     for (auto& s : d.sources) {
                       s.loc = {};
                       clear(s.indices);
                     }
                   },
                   [&](ActionDecl& a) {
                     a.loc = {};
                     for (auto& m : a.methods) {
                       m.loc = {};
                       clear(m.params);
                     }
                   },
                   [&](StructDecl& s) {
                     s.loc = {};
                     clear(s.fields);
                   },
                   [&](EnumDecl& e) { e.loc = {}; },
                   [&](ContextDecl& c) {
                     c.loc = {};
                     clear(c.outputIndices);
                     clear(c.inputs);
                     clear(c.actionUses);
                   },
                   [&](ControllerDecl& c) {
                     c.loc = {};
                     clear(c.inputs);
                     clear(c.actionUses);
                   },
               },
               decl);
  }
  return model;
}

namespace {

bool eq(const Param& a, const Param& b) { return a.name == b.name && a.type == b.type; }

template <class T, class F>
bool all_eq(const std::vector<T>& a, const std::vector<T>& b, F f) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!f(a[i], b[i])) return false;
  return true;
}

bool eq(const InputBinding& a, const InputBinding& b) {
  return a.kind == b.kind && a.sourceNames == b.sourceNames && a.deviceClass == b.deviceClass &&
         a.contextName == b.contextName;
}

bool eq(const ActionUse& a, const ActionUse& b) {
  return a.action == b.action && a.deviceClass == b.deviceClass;
}

bool eq(const Declaration& x, const Declaration& y) {
  if (x.index() != y.index()) return false;
  auto params = [](const std::vector<Param>& a, const std::vector<Param>& b) {
    return all_eq(a, b, [](const Param& p, const Param& q) { return eq(p, q); });
  };
  return std::visit(
      overloaded{
          [&](const DeviceDecl& a) {
            const auto& b = std::get<DeviceDecl>(y);
            return a.name == b.name && a.parent == b.parent &&
                   all_eq(a.attributes, b.attributes,
                          [](const auto& p, const auto& q) {
                            return p.name == q.name && p.type == q.type;
                          }) &&
                   all_eq(a.sources, b.sources,
                          [&](const SourceDecl& p, const SourceDecl& q) {
                            return p.name == q.name && p.valueType == q.valueType &&
                                   params(p.indices, q.indices);
                          }) &&
                   all_eq(a.actionRefs, b.actionRefs,
                          [](const auto& p, const auto& q) { return p.name == q.name; });
          },
          [&](const ActionDecl& a) {
            const auto& b = std::get<ActionDecl>(y);
            return a.name == b.name && all_eq(a.methods, b.methods, [&](const auto& p, const auto& q) {
                     return p.name == q.name && params(p.params, q.params);
                   });
          },
          [&](const StructDecl& a) {
            const auto& b = std::get<StructDecl>(y);
            return a.name == b.name && params(a.fields, b.fields);
          },
          [&](const EnumDecl& a) {
            const auto& b = std::get<EnumDecl>(y);
            return a.name == b.name && a.values == b.values;
          },
          [&](const ContextDecl& a) {
            const auto& b = std::get<ContextDecl>(y);
            return a.name == b.name && a.outputType == b.outputType &&
                   params(a.outputIndices, b.outputIndices) &&
                   all_eq(a.inputs, b.inputs, [](const auto& p, const auto& q) { return eq(p, q); }) &&
                   all_eq(a.actionUses, b.actionUses,
                          [](const auto& p, const auto& q) { return eq(p, q); });
          },
          [&](const ControllerDecl& a) {
            const auto& b = std::get<ControllerDecl>(y);
            return a.name == b.name &&
                   all_eq(a.inputs, b.inputs, [](const auto& p, const auto& q) { return eq(p, q); }) &&
                   all_eq(a.actionUses, b.actionUses,
                          [](const auto& p, const auto& q) { return eq(p, q); });
          },
      },
      x);
}

}  // namespace

bool structurally_equal(const SpecModel& a, const SpecModel& b) {
  return all_eq(a.declarations, b.declarations,
                [](const Declaration& x, const Declaration& y) { return eq(x, y); });
}

std::string pretty_print(const SpecModel& model) {
  std::ostringstream os;
  bool first = true;
  for (const auto& decl : model.declarations) {
    if (!first) os << '\n';
    first = false;
    std::visit(overloaded{
                   [&](const DeviceDecl& d) {
                     os << "device " << d.name;
                     if (d.parent) os << " extends " << *d.parent;
                     os << " {\n";
                     for (const auto& a : d.attributes)
                       os << "  attribute " << a.name << " as " << a.type.str() << ";\n";
                     for (const auto& s : d.sources) {
                       os << "  source " << s.name << " as " << s.valueType.str();
                       print_index(os, s.indices);
                       os << ";\n";
                     }
                     for (const auto& r : d.actionRefs) os << "  action " << r.name << ";\n";
                     os << "}\n";
                   },
                   [&](const ActionDecl& a) {
                     os << "action " << a.name << " {\n";
                     for (const auto& m : a.methods) {
                       os << "  " << m.name << "(";
                       print_params(os, m.params);
                       os << ");\n";
                     }
                     os << "}\n";
                   },
                   [&](const StructDecl& s) {
                     os << "structure " << s.name << " {\n";
                     for (const auto& f : s.fields)
                       os << "  " << f.name << " as " << f.type.str() << ";\n";
                     os << "}\n";
                   },
                   [&](const EnumDecl& e) {
                     os << "enumeration " << e.name << " {";
                     for (std::size_t i = 0; i < e.values.size(); ++i)
                       os << (i ? ", " : "") << e.values[i];
                     os << "}\n";
                   },
                   [&](const ContextDecl& c) {
                     os << "context " << c.name << " as " << c.outputType.str();
                     print_index(os, c.outputIndices);
                     os << " {\n";
                     print_component_members(os, c.inputs, c.actionUses);
                     os << "}\n";
                   },
                   [&](const ControllerDecl& c) {
                     os << "controller " << c.name << " {\n";
                     print_component_members(os, c.inputs, c.actionUses);
                     os << "}\n";
                   },
               },
               decl);
  }
  return os.str();
}

}  // namespace diakit
