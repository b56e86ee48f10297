#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "diakit/checker.hpp"
#include "diakit/runtime.hpp"
#include "diakit/trace.hpp"
#include "diakit/value.hpp"

namespace diakit {

// Meters.
struct Vec2 {
  double x = 0;
  double y = 0;

  bool operator==(const Vec2&) const = default;
};

double distance(Vec2 a, Vec2 b);

struct Rect {
  double x = 0, y = 0, w = 0, h = 0;
};

struct AreaLayout {
  std::string name;
  Rect rect;
};

// Rendering data only; agents pass through walls.
struct Wall {
  Vec2 from;
  Vec2 to;
};

struct Environment {
  double width = 0;
  double height = 0;
  std::vector<AreaLayout> areas;
  std::vector<Wall> walls;

  bool contains(Vec2 p) const;
};

inline constexpr double kDefaultDetectionRange = 5.0;

// Behavior of a simulated entity. Every entity forwards stimuli aimed at its
// sources and accepts commands; `table` answers pulls from lookup tables and
// `proximitySensor` sets the range used by agentProximity stimuli.
struct BehaviorConfig {
  struct PullEntry {
    std::vector<Value> index;
    Value value;
  };

  std::string name = "basic";
  double detectionRange = kDefaultDetectionRange;
  std::map<std::string, std::vector<PullEntry>> tables;  // by source name
};

struct SimEntityConfig {
  std::string deviceClass;
  std::string id;
  ValueMap attributes;
  Vec2 position;
  BehaviorConfig behavior;
};

struct Agent {
  std::string id;
  std::map<std::string, std::string> properties;
  Vec2 position;
  double speed = 1.0;  // meters per tick
  std::vector<Vec2> waypoints;
};

struct StimulusSpec {
  enum class Kind { constant, sequence, sinusoid, agentProximity };

  Kind kind = Kind::constant;
  // Timed stimuli: target entity source.
  std::string device;
  std::string source;
  ValueMap indices;
  std::int64_t refreshPeriod = 1;  // fires at startTick, startTick + period, ...
  std::int64_t startTick = 0;
  std::optional<std::int64_t> count;  // firings; unlimited when absent
  Value value;                        // constant
  std::vector<Value> values;          // sequence, one per firing, then stops
  double offset = 0, amplitude = 0, phase = 0;  // sinusoid
  std::int64_t periodTicks = 1;
  // agentProximity: sensors of deviceClass publish the agent property value
  // on enterSource / leaveSource.
  std::string deviceClass;
  std::string property;
  std::string enterSource;
  std::string leaveSource;
};

std::string_view to_string(StimulusSpec::Kind kind);

struct Scenario {
  Environment environment;
  std::vector<SimEntityConfig> entities;
  std::vector<Agent> agents;
  std::vector<StimulusSpec> stimuli;
  std::int64_t durationTicks = 0;
  std::uint64_t seed = 0;
  double tickSeconds = 1.0;  // informational
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Decodes the scenario file format; attribute and stimulus values are decoded
// against the spec. Throws ScenarioError.
Scenario load_scenario(const nlohmann::json& j, const CheckedSpec& spec);

// Every reason `scenario` cannot run against `spec`; empty when valid.
std::vector<std::string> validate_scenario(const Scenario& scenario, const CheckedSpec& spec);

// Moves `agent` `speed` meters toward its first waypoint, landing on and
// consuming it when within reach. Returns the new position.
Vec2 step_agent(Agent& agent);

// offset + amplitude * sin(2*pi*t/periodTicks + phase). Throws
// std::invalid_argument when periodTicks <= 0.
double sinusoid_value(std::int64_t t, double offset, double amplitude, std::int64_t periodTicks,
                      double phase);

struct ProximitySensor {
  std::string id;
  Vec2 position;
  double range = kDefaultDetectionRange;
};

struct AgentPosition {
  std::string id;
  Vec2 position;
};

struct ProximityEvent {
  enum class Kind { enter, leave };

  std::string sensorId;
  Kind kind = Kind::enter;
  std::string agentId;

  bool operator==(const ProximityEvent&) const = default;
};

// Enter/leave detection with strict inequalities. An agent is tracked by at
// most one sensor: the first sensor (ascending id) it came strictly within
// range of; it leaves when strictly beyond that sensor's range.
class ProximityTracker {
 public:
  std::vector<ProximityEvent> update(const std::vector<AgentPosition>& agents,
                                     std::vector<ProximitySensor> sensors);
  std::optional<std::string> tracking(const std::string& agentId) const;

 private:
  std::map<std::string, std::string> tracked_;  // agent -> sensor
};

struct InjectStimulus {
  std::string device;
  std::string source;
  Value value;
  ValueMap indices;
};
struct SetWaypoints {
  std::string agent;
  std::vector<Vec2> points;
};
struct Pause {};
struct Resume {};
struct StepOne {};

using SteeringCommand = std::variant<InjectStimulus, SetWaypoints, Pause, Resume, StepOne>;

struct Snapshot {
  struct EntityState {
    std::string id;
    std::string deviceClass;
    Vec2 position;
    ValueMap attributes;
    bool online = true;
    std::optional<std::string> lastAction;  // "method(args)" of the latest command
  };
  struct AgentState {
    std::string id;
    Vec2 position;
    std::map<std::string, std::string> properties;
    std::vector<Vec2> waypoints;
  };

  std::int64_t tick = 0;  // ticks completed
  bool paused = false;
  bool finished = false;
  Environment environment;
  std::vector<EntityState> entities;
  std::vector<AgentState> agents;
  std::vector<EventRecord> events;  // emitted during the last completed tick
};

nlohmann::json to_json(const Snapshot& s);

// Deterministic discrete-time execution of a scenario over the runtime.
// Per tick: apply steering inbox, move agents, evaluate agentProximity
// stimuli, fire timed stimuli (then steered injections), drain deliveries.
// steer() and snapshot() may be called from any thread.
class Simulation {
 public:
  using TickListener = std::function<void(const Snapshot&)>;

  // Throws ScenarioError when the scenario does not validate, RuntimeError
  // when component logic does not conform.
  Simulation(std::shared_ptr<const CheckedSpec> spec, std::map<std::string, ComponentLogic> logic,
             Scenario scenario);

  const CheckedSpec& spec() const { return runtime_.spec(); }
  const Scenario& scenario() const { return scenario_; }

  // Validates synchronously (throws ScenarioError, no state change) and
  // queues the command for the next tick boundary.
  void steer(SteeringCommand command);

  Snapshot snapshot() const;

  // Executes one tick, applying any queued injections and waypoint changes.
  // Returns false once durationTicks ticks have run.
  bool step();

  struct RunOptions {
    bool startPaused = false;
    std::chrono::milliseconds tickInterval{0};  // wall-clock pacing
  };
  // Runs to completion honoring pause/resume/step, or until stop().
  void run(RunOptions options);
  void run() { run(RunOptions{}); }
  void stop();

  void set_tick_listener(TickListener listener);

  std::int64_t tick() const;
  bool finished() const;
  const std::vector<EventRecord>& trace() const { return runtime_.trace(); }
  const Runtime& runtime() const { return runtime_; }

 private:
  void apply_inbox(std::vector<InjectStimulus>& injections);
  void publish_snapshot(std::size_t firstEvent);
  EntityImpl make_impl(const SimEntityConfig& config);

  Scenario scenario_;
  Runtime runtime_;
  std::vector<Agent> agents_;
  std::map<std::string, std::size_t> agentIndex_;
  std::map<std::string, std::size_t> entityIndex_;
  std::vector<ProximityTracker> trackers_;  // one per agentProximity stimulus
  std::vector<std::int64_t> fired_;         // firings per stimulus
  std::map<std::string, std::string> lastAction_;
  std::int64_t tick_ = 0;

  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<SteeringCommand> inbox_;
  bool paused_ = false;
  bool stopping_ = false;
  std::int64_t stepCredits_ = 0;
  std::shared_ptr<const Snapshot> snapshot_;
  TickListener listener_;
};

}  // namespace diakit
