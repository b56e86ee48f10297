#include "diakit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace diakit {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool Environment::contains(Vec2 p) const {
  return p.x >= 0 && p.y >= 0 && p.x <= width && p.y <= height;
}

std::string_view to_string(StimulusSpec::Kind kind) {
  switch (kind) {
    case StimulusSpec::Kind::constant: return "constant";
    case StimulusSpec::Kind::sequence: return "sequence";
    case StimulusSpec::Kind::sinusoid: return "sinusoid";
    case StimulusSpec::Kind::agentProximity: return "agentProximity";
  }
  return "unknown";
}

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string s = "invalid scenario";
  for (const auto& p : problems) s += "\n  " + p;
  return s;
}

std::string fmt_point(Vec2 p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

const std::set<std::string> kBehaviors = {"basic", "table", "proximitySensor"};

// Collects decoding problems under a JSON path prefix.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  void problem(const std::string& path, const std::string& what) { problems_.push_back(path + ": " + what); }

  template <class T>
  std::optional<T> get(const nlohmann::json& obj, const std::string& key, const std::string& path,
                       bool required) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) problem(path, "missing '" + key + "'");
      return std::nullopt;
    }
    try {
      return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      problem(path + "." + key, "wrong JSON type");
      return std::nullopt;
    }
  }

  std::optional<Vec2> point(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("x") || !j.contains("y") || !j["x"].is_number() || !j["y"].is_number()) {
      problem(path, "expected {\"x\": number, \"y\": number}");
      return std::nullopt;
    }
    return Vec2{j["x"].get<double>(), j["y"].get<double>()};
  }

  std::optional<Value> value(const nlohmann::json& j, const TypeRef& type, const CheckedSpec& spec,
                             const std::string& path) {
    try {
      return value_from_json(j, type, spec);
    } catch (const ValueError& e) {
      problem(path, e.what());
      return std::nullopt;
    }
  }

  const nlohmann::json& array(const nlohmann::json& obj, const std::string& key, const std::string& path) {
    static const nlohmann::json empty = nlohmann::json::array();
    if (!obj.contains(key)) return empty;
    if (!obj[key].is_array()) {
      problem(path + "." + key, "expected an array");
      return empty;
    }
    return obj[key];
  }

 private:
  std::vector<std::string>& problems_;
};

std::optional<StimulusSpec::Kind> parse_kind(const std::string& s) {
  if (s == "constant") return StimulusSpec::Kind::constant;
  if (s == "sequence") return StimulusSpec::Kind::sequence;
  if (s == "sinusoid") return StimulusSpec::Kind::sinusoid;
  if (s == "agentProximity") return StimulusSpec::Kind::agentProximity;
  return std::nullopt;
}

ValueMap read_indices(Reader& r, const nlohmann::json& j, const SourceDecl* decl, const CheckedSpec& spec,
                      const std::string& path) {
  ValueMap out;
  if (!j.contains("indices")) return out;
  if (!j["indices"].is_object()) {
    r.problem(path + ".indices", "expected an object");
    return out;
  }
  for (const auto& [name, v] : j["indices"].items()) {
    const Param* p = nullptr;
    if (decl)
      for (const auto& idx : decl->indices)
        if (idx.name == name) p = &idx;
    if (!p) {
      r.problem(path + ".indices." + name, "source declares no such index");
      continue;
    }
    if (auto val = r.value(v, p->type, spec, path + ".indices." + name)) out.emplace(name, *val);
  }
  return out;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

Scenario load_scenario(const nlohmann::json& j, const CheckedSpec& spec) {
  std::vector<std::string> problems;
  Reader r(problems);
  Scenario s;
  if (!j.is_object()) throw ScenarioError({"scenario: expected a JSON object"});
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> known = {"environment", "entities",     "agents",     "stimuli",
                                                "durationTicks", "seed",        "tickSeconds"};
    if (!known.count(key)) r.problem("scenario", "unknown key '" + key + "'");
  }

  if (!j.contains("environment") || !j["environment"].is_object()) {
    r.problem("environment", "missing or not an object");
  } else {
    const auto& env = j["environment"];
    s.environment.width = r.get<double>(env, "width", "environment", true).value_or(0);
    s.environment.height = r.get<double>(env, "height", "environment", true).value_or(0);
    const auto& areas = r.array(env, "areas", "environment");
    for (std::size_t i = 0; i < areas.size(); ++i) {
      std::string path = "environment.areas[" + std::to_string(i) + "]";
      AreaLayout a;
      a.name = r.get<std::string>(areas[i], "name", path, true).value_or("");
      a.rect.x = r.get<double>(areas[i], "x", path, true).value_or(0);
      a.rect.y = r.get<double>(areas[i], "y", path, true).value_or(0);
      a.rect.w = r.get<double>(areas[i], "w", path, true).value_or(0);
      a.rect.h = r.get<double>(areas[i], "h", path, true).value_or(0);
      s.environment.areas.push_back(std::move(a));
    }
    const auto& walls = r.array(env, "walls", "environment");
    for (std::size_t i = 0; i < walls.size(); ++i) {
      std::string path = "environment.walls[" + std::to_string(i) + "]";
      auto from = r.point(walls[i].value("from", nlohmann::json()), path + ".from");
      auto to = r.point(walls[i].value("to", nlohmann::json()), path + ".to");
      if (from && to) s.environment.walls.push_back({*from, *to});
    }
  }

  const auto& entities = r.array(j, "entities", "scenario");
  for (std::size_t i = 0; i < entities.size(); ++i) {
    std::string path = "entities[" + std::to_string(i) + "]";
    const auto& e = entities[i];
    SimEntityConfig c;
    c.deviceClass = r.get<std::string>(e, "deviceClass", path, true).value_or("");
    c.id = r.get<std::string>(e, "id", path, true).value_or("");
    if (e.contains("position")) {
      if (auto p = r.point(e["position"], path + ".position")) c.position = *p;
    } else {
      r.problem(path, "missing 'position'");
    }
    bool known = spec.find_device(c.deviceClass) != nullptr;
    if (!known && !c.deviceClass.empty()) r.problem(path, "unknown device class '" + c.deviceClass + "'");
    if (e.contains("attributes")) {
      if (!e["attributes"].is_object()) {
        r.problem(path + ".attributes", "expected an object");
      } else if (known) {
        for (const auto& [name, v] : e["attributes"].items()) {
          const AttributeDecl* a = spec.find_attribute(c.deviceClass, name);
          if (!a) {
            r.problem(path + ".attributes." + name, c.deviceClass + " has no such attribute");
            continue;
          }
          if (auto val = r.value(v, a->type, spec, path + ".attributes." + name)) c.attributes.emplace(name, *val);
        }
      }
    }
    if (e.contains("behavior")) {
      const auto& b = e["behavior"];
      if (b.is_string()) {
        c.behavior.name = b.get<std::string>();
      } else if (b.is_object()) {
        c.behavior.name = r.get<std::string>(b, "name", path + ".behavior", true).value_or("basic");
        c.behavior.detectionRange =
            r.get<double>(b, "detectionRange", path + ".behavior", false).value_or(kDefaultDetectionRange);
        if (b.contains("tables")) {
          if (!b["tables"].is_object()) r.problem(path + ".behavior.tables", "expected an object");
          else
            for (const auto& [source, rows] : b["tables"].items()) {
              std::string tpath = path + ".behavior.tables." + source;
              const SourceDecl* decl = known ? spec.find_source(c.deviceClass, source) : nullptr;
              if (known && !decl) {
                r.problem(tpath, c.deviceClass + " has no such source");
                continue;
              }
              if (!rows.is_array()) {
                r.problem(tpath, "expected an array of {index, value}");
                continue;
              }
              auto& table = c.behavior.tables[source];
              for (std::size_t k = 0; k < rows.size() && decl; ++k) {
                std::string rpath = tpath + "[" + std::to_string(k) + "]";
                const auto& row = rows[k];
                BehaviorConfig::PullEntry entry;
                nlohmann::json index = row.is_object() && row.contains("index") ? row["index"] : nlohmann::json::array();
                if (!index.is_array()) index = nlohmann::json::array({index});
                if (index.size() != decl->indices.size()) {
                  r.problem(rpath + ".index", "expected " + std::to_string(decl->indices.size()) + " index value(s)");
                  continue;
                }
                bool ok = true;
                for (std::size_t n = 0; n < index.size(); ++n) {
                  auto v = r.value(index[n], decl->indices[n].type, spec, rpath + ".index[" + std::to_string(n) + "]");
                  if (v) entry.index.push_back(*v);
                  else ok = false;
                }
                if (!row.is_object() || !row.contains("value")) {
                  r.problem(rpath, "missing 'value'");
                  continue;
                }
                auto v = r.value(row["value"], decl->valueType, spec, rpath + ".value");
                if (ok && v) {
                  entry.value = *v;
                  table.push_back(std::move(entry));
                }
              }
            }
        }
      } else {
        r.problem(path + ".behavior", "expected a name or an object");
      }
    }
    s.entities.push_back(std::move(c));
  }

  const auto& agents = r.array(j, "agents", "scenario");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    std::string path = "agents[" + std::to_string(i) + "]";
    const auto& a = agents[i];
    Agent agent;
    agent.id = r.get<std::string>(a, "id", path, true).value_or("");
    agent.properties =
        r.get<std::map<std::string, std::string>>(a, "properties", path, false).value_or(std::map<std::string, std::string>{});
    if (a.contains("position")) {
      if (auto p = r.point(a["position"], path + ".position")) agent.position = *p;
    } else {
      r.problem(path, "missing 'position'");
    }
    agent.speed = r.get<double>(a, "speed", path, false).value_or(1.0);
    const auto& wps = r.array(a, "waypoints", path);
    for (std::size_t k = 0; k < wps.size(); ++k)
      if (auto p = r.point(wps[k], path + ".waypoints[" + std::to_string(k) + "]")) agent.waypoints.push_back(*p);
    s.agents.push_back(std::move(agent));
  }

  const auto& stimuli = r.array(j, "stimuli", "scenario");
  for (std::size_t i = 0; i < stimuli.size(); ++i) {
    std::string path = "stimuli[" + std::to_string(i) + "]";
    const auto& st = stimuli[i];
    StimulusSpec spec_;
    auto kind = parse_kind(r.get<std::string>(st, "kind", path, true).value_or(""));
    if (!kind) {
      r.problem(path + ".kind", "expected constant, sequence, sinusoid or agentProximity");
      continue;
    }
    spec_.kind = *kind;
    spec_.refreshPeriod = r.get<std::int64_t>(st, "refreshPeriod", path, false).value_or(1);
    spec_.startTick = r.get<std::int64_t>(st, "startTick", path, false).value_or(0);
    spec_.count = r.get<std::int64_t>(st, "count", path, false);
    if (spec_.kind == StimulusSpec::Kind::agentProximity) {
      spec_.deviceClass = r.get<std::string>(st, "deviceClass", path, true).value_or("");
      spec_.property = r.get<std::string>(st, "property", path, true).value_or("");
      spec_.enterSource = r.get<std::string>(st, "enterSource", path, true).value_or("");
      spec_.leaveSource = r.get<std::string>(st, "leaveSource", path, true).value_or("");
      s.stimuli.push_back(std::move(spec_));
      continue;
    }
    spec_.device = r.get<std::string>(st, "device", path, true).value_or("");
    spec_.source = r.get<std::string>(st, "source", path, true).value_or("");
    const SimEntityConfig* target = nullptr;
    for (const auto& e : s.entities)
      if (e.id == spec_.device) target = &e;
    const SourceDecl* decl = nullptr;
    if (!target) {
      r.problem(path + ".device", "no scenario entity '" + spec_.device + "'");
    } else if (spec.find_device(target->deviceClass)) {
      decl = spec.find_source(target->deviceClass, spec_.source);
      if (!decl) r.problem(path + ".source", target->deviceClass + " has no source '" + spec_.source + "'");
    }
    spec_.indices = read_indices(r, st, decl, spec, path);
    switch (spec_.kind) {
      case StimulusSpec::Kind::constant:
        if (!st.contains("value")) r.problem(path, "missing 'value'");
        else if (decl)
          if (auto v = r.value(st["value"], decl->valueType, spec, path + ".value")) spec_.value = *v;
        break;
      case StimulusSpec::Kind::sequence: {
        const auto& vals = r.array(st, "values", path);
        for (std::size_t k = 0; k < vals.size() && decl; ++k)
          if (auto v = r.value(vals[k], decl->valueType, spec, path + ".values[" + std::to_string(k) + "]"))
            spec_.values.push_back(*v);
        if (vals.empty()) r.problem(path + ".values", "expected at least one value");
        break;
      }
      case StimulusSpec::Kind::sinusoid:
        spec_.offset = r.get<double>(st, "offset", path, false).value_or(0);
        spec_.amplitude = r.get<double>(st, "amplitude", path, true).value_or(0);
        spec_.phase = r.get<double>(st, "phaseRadians", path, false).value_or(0);
        spec_.periodTicks = r.get<std::int64_t>(st, "periodTicks", path, true).value_or(1);
        break;
      case StimulusSpec::Kind::agentProximity: break;
    }
    s.stimuli.push_back(std::move(spec_));
  }

  if (auto d = r.get<std::int64_t>(j, "durationTicks", "scenario", true)) s.durationTicks = *d;
  s.seed = r.get<std::uint64_t>(j, "seed", "scenario", false).value_or(0);
  s.tickSeconds = r.get<double>(j, "tickSeconds", "scenario", false).value_or(1.0);

  if (!problems.empty()) throw ScenarioError(std::move(problems));
  auto semantic = validate_scenario(s, spec);
  if (!semantic.empty()) throw ScenarioError(std::move(semantic));
  return s;
}

std::vector<std::string> validate_scenario(const Scenario& s, const CheckedSpec& spec) {
  std::vector<std::string> out;
  auto problem = [&](const std::string& path, const std::string& what) { out.push_back(path + ": " + what); };
  const Environment& env = s.environment;
  if (!(env.width > 0) || !(env.height > 0)) problem("environment", "width and height must be positive");
  if (s.durationTicks < 0) problem("durationTicks", "must be >= 0");
  if (!(s.tickSeconds > 0)) problem("tickSeconds", "must be positive");
  for (std::size_t i = 0; i < env.areas.size(); ++i) {
    const auto& a = env.areas[i];
    if (a.name.empty()) problem("environment.areas[" + std::to_string(i) + "]", "area needs a name");
    if (a.rect.w < 0 || a.rect.h < 0) problem("environment.areas[" + std::to_string(i) + "]", "negative size");
  }

  std::set<std::string> ids;
  std::map<std::string, const SimEntityConfig*> byId;
  for (std::size_t i = 0; i < s.entities.size(); ++i) {
    const auto& e = s.entities[i];
    std::string path = "entities[" + std::to_string(i) + "]";
    if (e.id.empty()) problem(path, "empty id");
    else if (!ids.insert(e.id).second) problem(path, "duplicate id '" + e.id + "'");
    byId.emplace(e.id, &e);
    if (!env.contains(e.position)) problem(path, "position " + fmt_point(e.position) + " is out of bounds");
    if (!kBehaviors.count(e.behavior.name)) problem(path + ".behavior", "unknown behavior '" + e.behavior.name + "'");
    if (!(e.behavior.detectionRange > 0)) problem(path + ".behavior", "detectionRange must be positive");
    if (!e.behavior.tables.empty() && e.behavior.name != "table")
      problem(path + ".behavior", "tables require the 'table' behavior");
    if (!spec.find_device(e.deviceClass)) {
      problem(path, "unknown device class '" + e.deviceClass + "'");
      continue;
    }
    if (spec.is_abstract(e.deviceClass)) problem(path, "device class '" + e.deviceClass + "' is abstract");
    for (const auto& a : spec.members(e.deviceClass).attributes) {
      auto it = e.attributes.find(a.name);
      if (it == e.attributes.end()) problem(path, "missing attribute '" + a.name + "'");
      else if (auto m = type_mismatch(it->second, a.type, spec)) problem(path + ".attributes." + a.name, *m);
    }
    for (const auto& [name, _] : e.attributes)
      if (!spec.find_attribute(e.deviceClass, name)) problem(path + ".attributes." + name, "no such attribute");
    for (const auto& [source, rows] : e.behavior.tables) {
      const SourceDecl* decl = spec.find_source(e.deviceClass, source);
      if (!decl) {
        problem(path + ".behavior.tables." + source, "no such source");
        continue;
      }
      for (const auto& row : rows) {
        if (row.index.size() != decl->indices.size()) problem(path + ".behavior.tables." + source, "index arity");
        if (auto m = type_mismatch(row.value, decl->valueType, spec)) problem(path + ".behavior.tables." + source, *m);
      }
    }
  }

  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    std::string path = "agents[" + std::to_string(i) + "]";
    if (a.id.empty()) problem(path, "empty id");
    else if (!ids.insert(a.id).second) problem(path, "duplicate id '" + a.id + "'");
    if (!(a.speed > 0)) problem(path, "speed must be positive");
    if (!env.contains(a.position)) problem(path, "position " + fmt_point(a.position) + " is out of bounds");
    for (const auto& w : a.waypoints)
      if (!env.contains(w)) problem(path, "waypoint " + fmt_point(w) + " is out of bounds");
  }

  for (std::size_t i = 0; i < s.stimuli.size(); ++i) {
    const auto& st = s.stimuli[i];
    std::string path = "stimuli[" + std::to_string(i) + "]";
    if (st.refreshPeriod < 1) problem(path, "refreshPeriod must be >= 1");
    if (st.startTick < 0) problem(path, "startTick must be >= 0");
    if (st.count && *st.count < 0) problem(path, "count must be >= 0");
    if (st.kind == StimulusSpec::Kind::agentProximity) {
      if (!spec.find_device(st.deviceClass)) {
        problem(path, "unknown device class '" + st.deviceClass + "'");
        continue;
      }
      if (st.property.empty()) problem(path, "property must be named");
      for (const auto& src : {st.enterSource, st.leaveSource}) {
        const SourceDecl* d = spec.find_source(st.deviceClass, src);
        if (!d) problem(path, st.deviceClass + " has no source '" + src + "'");
        else if (d->valueType.array || d->valueType.name != "String" || !d->indices.empty())
          problem(path, "source '" + src + "' must be an unindexed String source");
      }
      continue;
    }
    auto it = byId.find(st.device);
    if (it == byId.end()) {
      problem(path, "no scenario entity '" + st.device + "'");
      continue;
    }
    if (!spec.find_device(it->second->deviceClass)) continue;
    const SourceDecl* d = spec.find_source(it->second->deviceClass, st.source);
    if (!d) {
      problem(path, it->second->deviceClass + " has no source '" + st.source + "'");
      continue;
    }
    if (st.indices.size() != d->indices.size()) problem(path, "source '" + st.source + "' index values do not match");
    for (const auto& p : d->indices) {
      auto iv = st.indices.find(p.name);
      if (iv == st.indices.end()) problem(path, "missing index '" + p.name + "'");
      else if (auto m = type_mismatch(iv->second, p.type, spec)) problem(path + ".indices." + p.name, *m);
    }
    switch (st.kind) {
      case StimulusSpec::Kind::constant:
        if (auto m = type_mismatch(st.value, d->valueType, spec)) problem(path + ".value", *m);
        break;
      case StimulusSpec::Kind::sequence:
        if (st.values.empty()) problem(path + ".values", "expected at least one value");
        for (const auto& v : st.values)
          if (auto m = type_mismatch(v, d->valueType, spec)) problem(path + ".values", *m);
        break;
      case StimulusSpec::Kind::sinusoid:
        if (d->valueType.array || d->valueType.name != "Float") problem(path, "sinusoid needs a Float source");
        if (st.periodTicks <= 0) problem(path, "periodTicks must be positive");
        break;
      case StimulusSpec::Kind::agentProximity: break;
    }
  }
  return out;
}

Vec2 step_agent(Agent& agent) {
  if (agent.waypoints.empty()) return agent.position;
  Vec2 target = agent.waypoints.front();
  double d = distance(agent.position, target);
  if (d <= agent.speed) {
    agent.position = target;
    agent.waypoints.erase(agent.waypoints.begin());
  } else {
    double f = agent.speed / d;
    agent.position = {agent.position.x + (target.x - agent.position.x) * f,
                      agent.position.y + (target.y - agent.position.y) * f};
  }
  return agent.position;
}

double sinusoid_value(std::int64_t t, double offset, double amplitude, std::int64_t periodTicks, double phase) {
  if (periodTicks <= 0) throw std::invalid_argument("periodTicks must be positive");
  // Reducing t first keeps the angle small, so long runs stay accurate.
  std::int64_t r = ((t % periodTicks) + periodTicks) % periodTicks;
  return offset + amplitude * std::sin(2 * std::numbers::pi * static_cast<double>(r) /
                                           static_cast<double>(periodTicks) + phase);
}

std::vector<ProximityEvent> ProximityTracker::update(const std::vector<AgentPosition>& agents,
                                                     std::vector<ProximitySensor> sensors) {
  std::sort(sensors.begin(), sensors.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::vector<ProximityEvent> events;
  for (const auto& a : agents) {
    if (auto it = tracked_.find(a.id); it != tracked_.end()) {
      auto s = std::find_if(sensors.begin(), sensors.end(), [&](const auto& x) { return x.id == it->second; });
      if (s == sensors.end()) {
        tracked_.erase(it);
      } else if (distance(a.position, s->position) > s->range) {
        events.push_back({s->id, ProximityEvent::Kind::leave, a.id});
        tracked_.erase(it);
      } else {
        continue;
      }
    }
    for (const auto& s : sensors) {
      if (distance(a.position, s.position) < s.range) {
        events.push_back({s.id, ProximityEvent::Kind::enter, a.id});
        tracked_[a.id] = s.id;
        break;
      }
    }
  }
  return events;
}

std::optional<std::string> ProximityTracker::tracking(const std::string& agentId) const {
  auto it = tracked_.find(agentId);
  if (it == tracked_.end()) return std::nullopt;
  return it->second;
}

namespace {

nlohmann::json point_json(Vec2 p) { return {{"x", p.x}, {"y", p.y}}; }

}  // namespace

nlohmann::json to_json(const Snapshot& s) {
  nlohmann::json env = {{"width", s.environment.width}, {"height", s.environment.height}};
  env["areas"] = nlohmann::json::array();
  for (const auto& a : s.environment.areas)
    env["areas"].push_back({{"name", a.name}, {"x", a.rect.x}, {"y", a.rect.y}, {"w", a.rect.w}, {"h", a.rect.h}});
  env["walls"] = nlohmann::json::array();
  for (const auto& w : s.environment.walls) env["walls"].push_back({{"from", point_json(w.from)}, {"to", point_json(w.to)}});

  nlohmann::json entities = nlohmann::json::array();
  for (const auto& e : s.entities) {
    nlohmann::json je = {{"id", e.id},
                         {"deviceClass", e.deviceClass},
                         {"position", point_json(e.position)},
                         {"attributes", to_json(e.attributes)},
                         {"online", e.online}};
    if (e.lastAction) je["lastAction"] = *e.lastAction;
    entities.push_back(std::move(je));
  }
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : s.agents) {
    nlohmann::json wps = nlohmann::json::array();
    for (const auto& w : a.waypoints) wps.push_back(point_json(w));
    agents.push_back({{"id", a.id}, {"position", point_json(a.position)}, {"properties", a.properties}, {"waypoints", wps}});
  }
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : s.events) events.push_back(to_json(e));
  return {{"tick", s.tick},         {"paused", s.paused}, {"finished", s.finished}, {"environment", env},
          {"entities", entities}, {"agents", agents},   {"events", events}};
}

// Simulation

Simulation::Simulation(std::shared_ptr<const CheckedSpec> spec, std::map<std::string, ComponentLogic> logic,
                       Scenario scenario)
    : scenario_(std::move(scenario)), runtime_(spec) {
  if (auto problems = validate_scenario(scenario_, *spec); !problems.empty()) throw ScenarioError(problems);
  for (std::size_t i = 0; i < scenario_.entities.size(); ++i) {
    const auto& e = scenario_.entities[i];
    entityIndex_.emplace(e.id, i);
    runtime_.register_entity(e.deviceClass, e.id, e.attributes, make_impl(e));
  }
  agents_ = scenario_.agents;
  for (std::size_t i = 0; i < agents_.size(); ++i) agentIndex_.emplace(agents_[i].id, i);
  trackers_.resize(scenario_.stimuli.size());
  fired_.assign(scenario_.stimuli.size(), 0);
  for (auto& [name, l] : logic) runtime_.register_component_logic(name, std::move(l));
  runtime_.set_tick(0);
  runtime_.initialize_components();
  runtime_.drain();
  publish_snapshot(runtime_.trace().size());
}

EntityImpl Simulation::make_impl(const SimEntityConfig& config) {
  EntityImpl impl;
  std::string id = config.id;
  impl.onAction = [this, id](const ActionInvocation& call) {
    std::string text = call.method + "(";
    for (std::size_t i = 0; i < call.args.size(); ++i) text += (i ? ", " : "") + to_canonical_string(call.args[i]);
    lastAction_[id] = text + ")";
  };
  for (const auto& [source, rows] : config.behavior.tables) {
    impl.pull[source] = [rows, source, id](const std::vector<Value>& args) -> Value {
      for (const auto& row : rows)
        if (row.index == args) return row.value;
      std::string key;
      for (const auto& a : args) key += (key.empty() ? "" : ", ") + to_canonical_string(a);
      throw RuntimeError(runtime_codes::kPullFailed, id + " has no " + source + " entry for (" + key + ")");
    };
  }
  return impl;
}

void Simulation::steer(SteeringCommand command) {
  std::vector<std::string> problems;
  if (auto* inj = std::get_if<InjectStimulus>(&command)) {
    auto it = entityIndex_.find(inj->device);
    if (it == entityIndex_.end()) {
      problems.push_back("inject: no scenario entity '" + inj->device + "'");
    } else {
      const auto& cls = scenario_.entities[it->second].deviceClass;
      const SourceDecl* d = spec().find_source(cls, inj->source);
      if (!d) {
        problems.push_back("inject: " + cls + " has no source '" + inj->source + "'");
      } else {
        if (auto m = type_mismatch(inj->value, d->valueType, spec())) problems.push_back("inject: " + *m);
        if (inj->indices.size() != d->indices.size()) problems.push_back("inject: index values do not match source");
        for (const auto& p : d->indices) {
          auto iv = inj->indices.find(p.name);
          if (iv == inj->indices.end()) problems.push_back("inject: missing index '" + p.name + "'");
          else if (auto m = type_mismatch(iv->second, p.type, spec())) problems.push_back("inject: index '" + p.name + "': " + *m);
        }
      }
    }
  } else if (auto* wp = std::get_if<SetWaypoints>(&command)) {
    if (!agentIndex_.count(wp->agent)) problems.push_back("waypoints: no agent '" + wp->agent + "'");
    for (const auto& p : wp->points)
      if (!scenario_.environment.contains(p)) problems.push_back("waypoints: " + fmt_point(p) + " is out of bounds");
  }
  if (!problems.empty()) throw ScenarioError(std::move(problems));

  std::lock_guard lock(mutex_);
  if (std::holds_alternative<Pause>(command)) {
    paused_ = true;
  } else if (std::holds_alternative<Resume>(command)) {
    paused_ = false;
  } else if (std::holds_alternative<StepOne>(command)) {
    ++stepCredits_;
  } else {
    inbox_.push_back(std::move(command));
  }
  wake_.notify_all();
}

void Simulation::apply_inbox(std::vector<InjectStimulus>& injections) {
  std::deque<SteeringCommand> pending;
  {
    std::lock_guard lock(mutex_);
    pending.swap(inbox_);
  }
  for (auto& c : pending) {
    if (auto* inj = std::get_if<InjectStimulus>(&c)) injections.push_back(std::move(*inj));
    else if (auto* wp = std::get_if<SetWaypoints>(&c)) agents_[agentIndex_.at(wp->agent)].waypoints = wp->points;
  }
}

bool Simulation::step() {
  if (tick_ >= scenario_.durationTicks) return false;
  const std::size_t firstEvent = runtime_.trace().size();
  runtime_.set_tick(tick_);

  std::vector<InjectStimulus> injections;
  apply_inbox(injections);

  for (auto& a : agents_) step_agent(a);

  for (std::size_t i = 0; i < scenario_.stimuli.size(); ++i) {
    const auto& st = scenario_.stimuli[i];
    if (st.kind != StimulusSpec::Kind::agentProximity) continue;
    std::vector<ProximitySensor> sensors;
    for (const auto& e : scenario_.entities) {
      auto inst = runtime_.entity(e.id);
      if (inst && inst->online && spec().is_a(e.deviceClass, st.deviceClass))
        sensors.push_back({e.id, e.position, e.behavior.detectionRange});
    }
    std::vector<AgentPosition> positions;
    for (const auto& a : agents_)
      if (a.properties.count(st.property)) positions.push_back({a.id, a.position});
    for (const auto& ev : trackers_[i].update(positions, sensors)) {
      const auto& agent = agents_[agentIndex_.at(ev.agentId)];
      const auto& source = ev.kind == ProximityEvent::Kind::enter ? st.enterSource : st.leaveSource;
      runtime_.inject_stimulus(ev.sensorId, source, Value(agent.properties.at(st.property)));
    }
  }

  for (std::size_t i = 0; i < scenario_.stimuli.size(); ++i) {
    const auto& st = scenario_.stimuli[i];
    if (st.kind == StimulusSpec::Kind::agentProximity) continue;
    if (tick_ < st.startTick || (tick_ - st.startTick) % st.refreshPeriod != 0) continue;
    if (st.count && fired_[i] >= *st.count) continue;
    if (st.kind == StimulusSpec::Kind::sequence && fired_[i] >= static_cast<std::int64_t>(st.values.size())) continue;
    auto inst = runtime_.entity(st.device);
    if (!inst || !inst->online) continue;
    Value v;
    switch (st.kind) {
      case StimulusSpec::Kind::constant: v = st.value; break;
      case StimulusSpec::Kind::sequence: v = st.values[static_cast<std::size_t>(fired_[i])]; break;
      case StimulusSpec::Kind::sinusoid: v = sinusoid_value(tick_, st.offset, st.amplitude, st.periodTicks, st.phase); break;
      case StimulusSpec::Kind::agentProximity: break;
    }
    ++fired_[i];
    runtime_.inject_stimulus(st.device, st.source, std::move(v), st.indices);
  }

  for (auto& inj : injections) {
    auto inst = runtime_.entity(inj.device);
    if (!inst || !inst->online) continue;
    runtime_.inject_stimulus(inj.device, inj.source, std::move(inj.value), std::move(inj.indices), true);
  }

  runtime_.drain();
  ++tick_;
  publish_snapshot(firstEvent);
  return true;
}

void Simulation::publish_snapshot(std::size_t firstEvent) {
  auto s = std::make_shared<Snapshot>();
  s->tick = tick_;
  s->finished = tick_ >= scenario_.durationTicks;
  s->environment = scenario_.environment;
  for (const auto& e : scenario_.entities) {
    Snapshot::EntityState st;
    st.id = e.id;
    st.deviceClass = e.deviceClass;
    st.position = e.position;
    auto inst = runtime_.entity(e.id);
    st.attributes = inst ? inst->attributes : e.attributes;
    st.online = inst && inst->online;
    if (auto it = lastAction_.find(e.id); it != lastAction_.end()) st.lastAction = it->second;
    s->entities.push_back(std::move(st));
  }
  for (const auto& a : agents_) s->agents.push_back({a.id, a.position, a.properties, a.waypoints});
  const auto& trace = runtime_.trace();
  s->events.assign(trace.begin() + static_cast<std::ptrdiff_t>(std::min(firstEvent, trace.size())), trace.end());
  TickListener listener;
  {
    std::lock_guard lock(mutex_);
    s->paused = paused_;
    snapshot_ = s;
    listener = listener_;
  }
  if (listener) listener(*s);
}

Snapshot Simulation::snapshot() const {
  std::lock_guard lock(mutex_);
  Snapshot s = *snapshot_;
  s.paused = paused_;
  return s;
}

std::int64_t Simulation::tick() const {
  std::lock_guard lock(mutex_);
  return snapshot_->tick;
}

bool Simulation::finished() const {
  std::lock_guard lock(mutex_);
  return snapshot_->finished;
}

void Simulation::set_tick_listener(TickListener listener) {
  std::lock_guard lock(mutex_);
  listener_ = std::move(listener);
}

void Simulation::stop() {
  std::lock_guard lock(mutex_);
  stopping_ = true;
  wake_.notify_all();
}

void Simulation::run(RunOptions options) {
  {
    std::lock_guard lock(mutex_);
    if (options.startPaused) paused_ = true;
  }
  while (true) {
    bool paced = false;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || !paused_ || stepCredits_ > 0; });
      if (stopping_) return;
      if (paused_) --stepCredits_;
      else paced = options.tickInterval.count() > 0;
    }
    if (!step()) return;
    if (tick_ >= scenario_.durationTicks) return;
    if (paced) {
      std::unique_lock lock(mutex_);
      wake_.wait_for(lock, options.tickInterval, [&] { return stopping_ || paused_; });
    }
  }
}

}  // namespace diakit
