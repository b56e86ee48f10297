#include "diakit/trace.hpp"

namespace diakit {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::stimulus: return "stimulus";
    case EventKind::sourcePublish: return "sourcePublish";
    case EventKind::contextPublish: return "contextPublish";
    case EventKind::controllerHandle: return "controllerHandle";
    case EventKind::command: return "command";
    case EventKind::pull: return "pull";
  }
  return "unknown";
}

nlohmann::json to_json(const EventRecord& e) {
  nlohmann::json j = {{"seq", e.seq},
                      {"cause", e.cause ? nlohmann::json(*e.cause) : nlohmann::json(nullptr)},
                      {"tick", e.tick},
                      {"kind", to_string(e.kind)},
                      {"producer", e.producer},
                      {"name", e.name},
                      {"value", to_json(e.value)},
                      {"indices", to_json(e.indices)}};
  if (e.target) j["target"] = *e.target;
  if (e.steered) j["steered"] = true;
  return j;
}

std::string to_json_line(const EventRecord& e) { return to_json(e).dump(); }

std::string serialize_trace(const std::vector<EventRecord>& events) {
  std::string out;
  for (const auto& e : events) {
    out += to_json_line(e);
    out += '\n';
  }
  return out;
}

}  // namespace diakit
