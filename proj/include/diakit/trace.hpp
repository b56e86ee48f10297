#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diakit/value.hpp"

namespace diakit {

enum class EventKind { stimulus, sourcePublish, contextPublish, controllerHandle, command, pull };

std::string_view to_string(EventKind kind);

struct EventRecord {
  std::uint64_t seq = 0;
  std::optional<std::uint64_t> cause;
  std::int64_t tick = 0;
  EventKind kind = EventKind::stimulus;
  std::string producer;  // component name or entity id
  std::string name;      // source, context, handler or action method
  Value value;
  ValueMap indices;
  std::optional<std::string> target;  // entity receiving a command
  bool steered = false;

  bool operator==(const EventRecord&) const = default;
};

// One JSON object with keys seq, cause, tick, kind, producer, name, value,
// indices; `target` and `steered` appear only when set.
nlohmann::json to_json(const EventRecord& e);
std::string to_json_line(const EventRecord& e);  // no trailing newline

// JSON Lines, LF-terminated.
std::string serialize_trace(const std::vector<EventRecord>& events);

}  // namespace diakit
