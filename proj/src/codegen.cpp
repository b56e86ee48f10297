#include "diakit/codegen.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace diakit {

using nlohmann::json;

namespace {

std::string lower_first(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
  return out;
}

json params_json(const std::vector<Param>& params) {
  json arr = json::array();
  for (const auto& p : params) arr.push_back({{"name", p.name}, {"type", p.type.str()}});
  return arr;
}

json methods_json(const ActionDecl& action) {
  json arr = json::array();
  for (const auto& m : action.methods)
    arr.push_back({{"name", m.name}, {"parameters", params_json(m.params)}});
  return arr;
}

// Discovery support for one device class: all<Device>s and <device>sWhere
// with one clause slot per effective attribute.
json discovery_json(const CheckedSpec& spec, const std::string& device) {
  json clauses = json::array();
  for (const auto& a : spec.members(device).attributes)
    clauses.push_back({{"attribute", a.name}, {"type", a.type.str()}});
  return {{"device", device},
          {"all", "all" + device + "s"},
          {"filter", lower_first(device) + "sWhere"},
          {"clauses", clauses}};
}

json handlers_json(const CheckedSpec& spec, const std::string& component) {
  json arr = json::array();
  for (const auto& h : conformance_signature(spec, component)) {
    if (h.kind == HandlerDescriptor::Kind::initialize) continue;
    json j = {{"name", h.name},
              {"producer", h.producer},
              {"valueType", h.valueType.str()},
              {"indices", params_json(h.indices)}};
    if (h.inputKind == HandlerDescriptor::InputKind::entitySource) {
      j["input"] = "entitySource";
      j["source"] = h.source;
      j["subscriber"] = "subscribe" + capitalize(h.source);
      j["pullAccessor"] = accessor_name(h.source);
    } else {
      j["input"] = "context";
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

json device_json(const CheckedSpec& spec, const DeviceDecl& d) {
  const EffectiveMembers& m = spec.members(d.name);
  json attributes = json::array();
  json ctor = json::array();
  for (const auto& a : m.attributes) {
    attributes.push_back({{"name", a.name},
                          {"type", a.type.str()},
                          {"constructorRequired", true},
                          {"getter", accessor_name(a.name)},
                          {"setter", publisher_name(a.name)}});
    ctor.push_back({{"name", a.name}, {"type", a.type.str()}});
  }
  json sources = json::array();
  for (const auto& s : m.sources) {
    sources.push_back({{"name", s.name},
                       {"valueType", s.valueType.str()},
                       {"indices", params_json(s.indices)},
                       {"publisher", publisher_name(s.name)},
                       {"pullAccessor", accessor_name(s.name)}});
  }
  json actions = json::array();
  for (const auto& r : m.actionRefs)
    actions.push_back({{"name", r.name}, {"methods", methods_json(spec.action(r.name))}});
  return {{"name", d.name},
          {"parent", d.parent ? json(*d.parent) : json(nullptr)},
          {"abstract", spec.is_abstract(d.name)},
          {"constructor", {{"parameters", ctor}}},
          {"attributes", attributes},
          {"sources", sources},
          {"actions", actions}};
}

json context_json(const CheckedSpec& spec, const ContextDecl& c) {
  json discovery = json::array();
  std::set<std::string> seen;
  for (const auto& in : c.inputs)
    if (in.kind == InputBinding::Kind::entitySources && seen.insert(in.deviceClass).second)
      discovery.push_back(discovery_json(spec, in.deviceClass));
  return {{"name", c.name},
          {"outputType", c.outputType.str()},
          {"indices", params_json(c.outputIndices)},
          {"publisher", publisher_name(c.name)},
          {"initializer", kInitializeHandler},
          {"handlers", handlers_json(spec, c.name)},
          {"discovery", discovery}};
}

json controller_json(const CheckedSpec& spec, const ControllerDecl& c) {
  json actions = json::array();
  json discovery = json::array();
  std::set<std::string> seen;
  for (const auto& u : c.actionUses) {
    actions.push_back({{"action", u.action},
                       {"device", u.deviceClass},
                       {"proxy", u.deviceClass + "Composite"},
                       {"methods", methods_json(spec.action(u.action))}});
    if (seen.insert(u.deviceClass).second) discovery.push_back(discovery_json(spec, u.deviceClass));
  }
  return {{"name", c.name},
          {"initializer", kInitializeHandler},
          {"handlers", handlers_json(spec, c.name)},
          {"actions", actions},
          {"discovery", discovery}};
}

std::string signature(const json& params) {
  std::string out;
  for (const auto& p : params) {
    if (!out.empty()) out += ", ";
    out += p.at("name").get<std::string>() + ": " + p.at("type").get<std::string>();
  }
  return out;
}

std::string header(const std::string& summary) {
  std::ostringstream os;
  os << kGeneratedMarker << "\n";
  os << "// " << summary << "\n";
  os << "#pragma once\n\n#include <stdexcept>\n#include <vector>\n\n#include \"diakit/runtime.hpp\"\n\n";
  os << "namespace diakit_stubs {\n\n";
  return os.str();
}

std::string device_stub(const json& d) {
  const std::string name = d.at("name");
  std::string summary = "device " + name;
  if (!d.at("parent").is_null()) summary += " extends " + d.at("parent").get<std::string>();
  std::ostringstream os;
  os << header(summary);
  os << "// Constructor: " << name << "(" << signature(d.at("constructor").at("parameters")) << ")\n";
  for (const auto& s : d.at("sources")) {
    std::string idx = signature(s.at("indices"));
    os << "// Publisher: " << s.at("publisher").get<std::string>() << "(" << s.at("valueType").get<std::string>()
       << (idx.empty() ? "" : ", " + idx) << ")\n";
  }
  os << "inline diakit::EntityImpl make_" << name << "_impl() {\n";
  os << "  diakit::EntityImpl impl;\n";
  for (const auto& s : d.at("sources")) {
    const std::string src = s.at("name");
    os << "  // " << s.at("pullAccessor").get<std::string>() << "(" << signature(s.at("indices"))
       << ") -> " << s.at("valueType").get<std::string>() << "\n";
    os << "  impl.pull[\"" << src << "\"] = [](const std::vector<diakit::Value>&) -> diakit::Value {\n";
    os << "    // TODO: return the current " << src << " value\n";
    os << "    throw std::logic_error(\"" << s.at("pullAccessor").get<std::string>() << " not implemented\");\n";
    os << "  };\n";
  }
  os << "  impl.onAction = [](const diakit::ActionInvocation&) {\n";
  for (const auto& a : d.at("actions"))
    for (const auto& m : a.at("methods"))
      os << "    // " << a.at("name").get<std::string>() << "." << m.at("name").get<std::string>() << "("
         << signature(m.at("parameters")) << ")\n";
  os << "    // TODO: execute the invoked method\n";
  os << "  };\n";
  os << "  return impl;\n}\n\n}  // namespace diakit_stubs\n";
  return os.str();
}

std::string component_stub(const json& c, bool controller) {
  const std::string name = c.at("name");
  std::string summary = (controller ? "controller " : "context ") + name;
  if (!controller) {
    summary += " as " + c.at("outputType").get<std::string>();
    std::string idx = signature(c.at("indices"));
    if (!idx.empty()) summary += " indexed by " + idx;
  }
  std::ostringstream os;
  os << header(summary);
  if (!controller) {
    std::string idx = signature(c.at("indices"));
    os << "// Publisher: " << c.at("publisher").get<std::string>() << "(" << c.at("outputType").get<std::string>()
       << (idx.empty() ? "" : ", " + idx) << ") is ctx.publish(value, indices)\n";
  } else {
    for (const auto& a : c.at("actions"))
      for (const auto& m : a.at("methods"))
        os << "// Command: ctx.command(" << a.at("proxy").get<std::string>() << ", \""
           << a.at("action").get<std::string>() << "\", \"" << m.at("name").get<std::string>() << "\", {"
           << signature(m.at("parameters")) << "})\n";
  }
  for (const auto& d : c.at("discovery"))
    os << "// Discovery: ctx.discover(\"" << d.at("device").get<std::string>() << "\", filter) for "
       << d.at("filter").get<std::string>() << "()\n";
  os << "inline diakit::ComponentLogic make_" << name << "_logic() {\n";
  os << "  diakit::ComponentLogic logic;\n";
  os << "  logic.initialize = [](diakit::ComponentContext&) {\n";
  bool subscribes = false;
  for (const auto& h : c.at("handlers")) {
    if (h.at("input") != "entitySource") continue;
    os << "    // ctx.subscribe(ctx.discover(\"" << h.at("producer").get<std::string>() << "\"), \""
       << h.at("source").get<std::string>() << "\");\n";
    subscribes = true;
  }
  os << "    // TODO: " << (subscribes ? "subscribe to the entity sources this component consumes"
                                       : "initialize component state")
     << "\n";
  os << "  };\n";
  for (const auto& h : c.at("handlers")) {
    std::string idx = signature(h.at("indices"));
    os << "  // " << h.at("producer").get<std::string>();
    if (h.at("input") == "entitySource") os << "." << h.at("source").get<std::string>();
    os << ": " << h.at("valueType").get<std::string>() << (idx.empty() ? "" : ", index " + idx) << "\n";
    os << "  logic.handlers[\"" << h.at("name").get<std::string>()
       << "\"] = [](diakit::ComponentContext&, const diakit::InputEvent&) {\n";
    os << "    // TODO: handle the new value\n";
    os << "  };\n";
  }
  os << "  return logic;\n}\n\n}  // namespace diakit_stubs\n";
  return os.str();
}

bool carries_marker(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string first;
  std::getline(in, first);
  return first == kGeneratedMarker;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw GenerateError("cannot write " + p.string(), p);
  out << content;
  out.close();
  if (!out) throw GenerateError("cannot write " + p.string(), p);
}

}  // namespace

std::string FrameworkManifest::serialize() const { return document.dump(2) + "\n"; }

FrameworkManifest generate_manifest(const CheckedSpec& spec) {
  json devices = json::array();
  for (const DeviceDecl* d : spec.devices()) devices.push_back(device_json(spec, *d));
  json contexts = json::array();
  for (const ContextDecl* c : spec.contexts()) contexts.push_back(context_json(spec, *c));
  json controllers = json::array();
  for (const ControllerDecl* c : spec.controllers()) controllers.push_back(controller_json(spec, *c));
  return {json{{"formatVersion", kManifestFormatVersion},
               {"devices", devices},
               {"contexts", contexts},
               {"controllers", controllers}}};
}

std::filesystem::path stub_path(std::string_view section, std::string_view name) {
  return std::filesystem::path(section) / (std::string(name) + ".stub.hpp");
}

std::vector<std::filesystem::path> generate_stubs(const FrameworkManifest& manifest,
                                                  const std::filesystem::path& outDir) {
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  const json& doc = manifest.document;
  for (const auto& d : doc.at("devices"))
    if (!d.at("abstract").get<bool>())
      files.emplace_back(outDir / stub_path("devices", d.at("name").get<std::string>()), device_stub(d));
  for (const auto& c : doc.at("contexts"))
    files.emplace_back(outDir / stub_path("contexts", c.at("name").get<std::string>()),
                       component_stub(c, false));
  for (const auto& c : doc.at("controllers"))
    files.emplace_back(outDir / stub_path("controllers", c.at("name").get<std::string>()),
                       component_stub(c, true));

  for (const auto& [path, _] : files) {
    std::error_code ec;
    if (std::filesystem::exists(path, ec) && !carries_marker(path))
      throw GenerateError("refusing to overwrite " + path.string() + ": not a generated file", path);
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [path, content] : files) {
    write_file(path, content);
    written.push_back(path);
  }
  return written;
}

std::filesystem::path write_manifest(const FrameworkManifest& manifest,
                                     const std::filesystem::path& outDir) {
  std::error_code ec;
  std::filesystem::create_directories(outDir, ec);
  auto path = outDir / kManifestFileName;
  write_file(path, manifest.serialize());
  return path;
}

}  // namespace diakit
