#include <gtest/gtest.h>

#include <random>

#include "diakit/newscast.hpp"
#include "diakit/parser.hpp"
#include "diakit/runtime.hpp"
#include "support.hpp"

using namespace diakit;
namespace rc = runtime_codes;
using testing_support::newscast_spec;

namespace {

Value area(const std::string& name) { return Value::structure("Area", {{"name", Value(name)}}); }

Value profile(const std::string& name, const std::string& lang, const std::string& dept) {
  return Value::structure("UserProfile", {{"name", Value(name)},
                                          {"language", Value::enumeration("Language", lang)},
                                          {"department", Value::enumeration("Department", dept)}});
}

template <typename F>
std::string error_code(F&& f) {
  try {
    f();
  } catch (const RuntimeError& e) {
    return e.code();
  }
  return "no error";
}

ComponentLogic handlers_for(const std::string& component, InputHandler h = {}) {
  ComponentLogic logic;
  logic.initialize = [](ComponentContext&) {};
  for (const auto& d : conformance_signature(*newscast_spec(), component))
    if (d.kind == HandlerDescriptor::Kind::input) logic.handlers[d.name] = h ? h : [](ComponentContext&, const InputEvent&) {};
  return logic;
}

std::vector<const EventRecord*> events_of(const Runtime& rt, EventKind kind) {
  std::vector<const EventRecord*> out;
  for (const auto& e : rt.trace())
    if (e.kind == kind) out.push_back(&e);
  return out;
}

// Panels with a numeric size next to sensors; Quiet has no consumer.
const char* kSmallSpec = R"(
structure Area { name as String; }
action Show { show(text as String); }
device Located { attribute area as Area; }
device Panel extends Located { attribute size as Integer; action Show; }
device Sensor extends Located { source reading as Integer; }
context Level as Integer { source reading from Sensor; }
context Quiet as Integer { source reading from Sensor; }
controller Board { context Level; action Show on Panel; }
)";

std::shared_ptr<const CheckedSpec> small_spec() {
  auto r = testing_support::check_text(kSmallSpec);
  if (!r.ok()) throw std::runtime_error("small spec rejected");
  return r.spec;
}

}  // namespace

// Registry

TEST(Registry, RegisteredEntityIsDiscoverable) {
  Runtime rt(newscast_spec());
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  EXPECT_EQ(rt.discover("BadgeReader", {}).ids, std::vector<std::string>{"br1"});
}

TEST(Registry, MissingAttributeIsNamed) {
  Runtime rt(newscast_spec());
  try {
    rt.register_entity("BadgeReader", "br1", {});
    FAIL();
  } catch (const RuntimeError& e) {
    EXPECT_EQ(e.code(), rc::kBadAttributes);
    EXPECT_NE(std::string(e.what()).find("area"), std::string::npos);
  }
}

TEST(Registry, OrderingFilterOnBrightness) {
  Runtime rt(newscast_spec());
  rt.register_entity("Screen", "s1", {{"area", area("Hall")}, {"brightness", Value(50)}});
  rt.register_entity("Screen", "s2", {{"area", area("Hall")}, {"brightness", Value(30)}});
  auto c = rt.discover("Screen", parse_query("brightness(gt(40))"));
  EXPECT_EQ(c.ids, std::vector<std::string>{"s1"});
}

TEST(Registry, RejectsBadRegistrations) {
  Runtime rt(newscast_spec());
  EXPECT_EQ(error_code([&] { rt.register_entity("Toaster", "t", {}); }), rc::kUnknownClass);
  EXPECT_EQ(error_code([&] { rt.register_entity("LocatedDevice", "l", {{"area", area("Hall")}}); }),
            rc::kAbstractClass);
  EXPECT_EQ(error_code([&] { rt.register_entity("BadgeReader", "b", {{"area", Value(3)}}); }), rc::kBadAttributes);
  EXPECT_EQ(error_code([&] {
              rt.register_entity("BadgeReader", "b", {{"area", area("Hall")}, {"brightness", Value(1)}});
            }),
            rc::kBadAttributes);
  rt.register_entity("BadgeReader", "b", {{"area", area("Hall")}});
  EXPECT_EQ(error_code([&] { rt.register_entity("BadgeReader", "b", {{"area", area("Hall")}}); }), rc::kDuplicateId);
}

TEST(Registry, UnregisterRemovesFromDiscovery) {
  Runtime rt(newscast_spec());
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  rt.unregister_entity("br1");
  EXPECT_TRUE(rt.discover("BadgeReader", {}).empty());
  EXPECT_FALSE(rt.entity("br1")->online);
  EXPECT_EQ(error_code([&] { rt.unregister_entity("nobody"); }), rc::kUnknownEntity);
}

TEST(Registry, UnregisterMidTickStillDeliversQueued) {
  Runtime rt(newscast_spec());
  std::vector<std::string> seen;
  auto logic = handlers_for("Proximity", [&](ComponentContext&, const InputEvent& in) {
    seen.push_back(in.producer + ":" + in.value.as_string());
  });
  logic.initialize = [](ComponentContext& ctx) { ctx.subscribe(ctx.discover("BadgeReader"), "badgeDetected"); };
  rt.register_component_logic("Proximity", logic);
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  rt.initialize_components();
  rt.publish_source("br1", "badgeDetected", Value("A"));
  rt.unregister_entity("br1");
  rt.drain();
  EXPECT_EQ(seen, std::vector<std::string>{"br1:A"});
  EXPECT_EQ(error_code([&] { rt.publish_source("br1", "badgeDetected", Value("B")); }), rc::kOffline);
}

// Discovery

TEST(Discovery, OrOfAreas) {
  Runtime rt(newscast_spec());
  for (int i = 1; i <= 3; ++i)
    rt.register_entity("Screen", "s" + std::to_string(i),
                       {{"area", area("room" + std::to_string(i))}, {"brightness", Value(10)}});
  auto c = rt.discover("Screen", parse_query("area(or(eq(room1),eq(room2)))"));
  EXPECT_EQ(c.ids, (std::vector<std::string>{"s1", "s2"}));
}

TEST(Discovery, AreaAndSize) {
  Runtime rt(small_spec());
  rt.register_entity("Panel", "small", {{"area", area("room1")}, {"size", Value(8)}});
  rt.register_entity("Panel", "large", {{"area", area("room1")}, {"size", Value(12)}});
  rt.register_entity("Panel", "elsewhere", {{"area", area("room2")}, {"size", Value(20)}});
  auto c = rt.discover("Panel", parse_query("area(room1),size(gt(10))"));
  EXPECT_EQ(c.ids, std::vector<std::string>{"large"});
}

TEST(Discovery, EmptyClassGivesEmptyComposite) {
  Runtime rt(newscast_spec());
  auto c = rt.discover("LoudSpeaker", {});
  EXPECT_TRUE(c.empty());
  EXPECT_EQ(c.deviceClass, "LoudSpeaker");
}

TEST(Discovery, Errors) {
  Runtime rt(newscast_spec());
  EXPECT_EQ(error_code([&] { rt.discover("Screen", parse_query("size(1)")); }), rc::kUnknownAttr);
  EXPECT_EQ(error_code([&] { rt.discover("Screen", parse_query("area(gt(1))")); }), rc::kNonNumericOrder);
  EXPECT_EQ(error_code([&] { rt.discover("Screen", parse_query("brightness(bright)")); }), rc::kBadOperand);
  EXPECT_EQ(error_code([&] { rt.discover("Toaster", {}); }), rc::kUnknownClass);
}

TEST(Discovery, SubclassPolymorphism) {
  Runtime rt(newscast_spec());
  rt.register_entity("BadgeReader", "a", {{"area", area("Hall")}});
  rt.register_entity("Screen", "b", {{"area", area("Hall")}, {"brightness", Value(1)}});
  rt.register_entity("LoudSpeaker", "c", {{"area", area("Hall")}});
  rt.register_entity("LoudSpeaker", "d", {{"area", area("Lab")}});
  rt.register_entity("ProfileDB", "e", {});
  EXPECT_EQ(rt.discover("LocatedDevice", parse_query("area(Hall)")).ids, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(rt.discover("SwitchableDevice", {}).size(), 4u);
}

TEST(Discovery, MatchesBruteForceOracle) {
  auto world = testing_support::oracle_world();
  std::mt19937_64 rng(20261019);
  for (int i = 0; i < 200; ++i) {
    auto trial = testing_support::random_trial(world, rng);
    ASSERT_EQ(testing_support::runtime_discover(world, trial), testing_support::brute_force(world, trial))
        << to_query_string(trial.filter);
  }
}

TEST(AnyOne, PicksLowestId) {
  EXPECT_EQ(any_one(Composite{"ProfileDB", {"p2", "p1"}}), "p1");
  EXPECT_EQ(any_one(Composite{"ProfileDB", {"p1"}}), "p1");
  EXPECT_EQ(error_code([] { any_one(Composite{"ProfileDB", {}}); }), rc::kEmptyComposite);
}

// Push

TEST(Push, SourceReachesSubscriber) {
  Runtime rt(newscast_spec());
  std::vector<InputEvent> got;
  auto logic = handlers_for("Proximity", [&](ComponentContext&, const InputEvent& in) { got.push_back(in); });
  logic.initialize = [](ComponentContext& ctx) { ctx.subscribe(ctx.discover("BadgeReader"), "badgeDetected"); };
  rt.register_component_logic("Proximity", logic);
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  rt.initialize_components();
  rt.publish_source("br1", "badgeDetected", Value("0A12"));
  EXPECT_TRUE(got.empty());
  rt.drain();
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].handler, "onNewBadgeDetected");
  EXPECT_EQ(got[0].producer, "br1");
  EXPECT_EQ(got[0].value, Value("0A12"));
  EXPECT_EQ(got[0].producerAttributes.at("area"), area("Hall"));
}

TEST(Push, NoSubscribersRecordsOnly) {
  Runtime rt(newscast_spec());
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  rt.publish_source("br1", "badgeDetected", Value("0A12"));
  EXPECT_EQ(rt.drain(), 0u);
  ASSERT_EQ(rt.trace().size(), 1u);
  EXPECT_EQ(rt.trace()[0].kind, EventKind::sourcePublish);
}

TEST(Push, SubscriberRegistrationOrder) {
  for (bool scheduleFirst : {true, false}) {
    Runtime rt(newscast_spec());
    std::vector<std::string> order;
    auto make = [&](const std::string& name) {
      return handlers_for(name, [&order, name](ComponentContext&, const InputEvent&) { order.push_back(name); });
    };
    rt.register_component_logic("ScheduleSelector", make("ScheduleSelector"));
    rt.register_component_logic("ClassReminder", make("ClassReminder"));
    rt.register_entity("ScheduleDB", "db", {});
    auto all = rt.discover("ScheduleDB", {});
    std::vector<std::string> subscribers = {"ScheduleSelector", "ClassReminder"};
    if (!scheduleFirst) std::swap(subscribers[0], subscribers[1]);
    for (const auto& s : subscribers) rt.subscribe_source(s, all, "todaySchedule");
    rt.publish_source("db", "todaySchedule",
                      Value::structure("Schedule", {{"department", Value::enumeration("Department", "ELECTRONICS")},
                                                    {"classes", Value::array(TypeRef::of("String"), {})}}));
    rt.drain();
    EXPECT_EQ(order, subscribers);
  }
}

TEST(Push, SourceErrors) {
  Runtime rt(newscast_spec());
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  EXPECT_EQ(error_code([&] { rt.publish_source("br1", "temperature", Value(1)); }), rc::kUnknownSource);
  EXPECT_EQ(error_code([&] { rt.publish_source("br1", "badgeDetected", Value(1)); }), rc::kTypeMismatch);
  EXPECT_EQ(error_code([&] { rt.publish_source("ghost", "badgeDetected", Value("x")); }), rc::kUnknownEntity);
  EXPECT_TRUE(rt.trace().empty());
}

TEST(Subscribe, LicensedAndUnlicensed) {
  Runtime rt(newscast_spec());
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  rt.register_entity("Screen", "s1", {{"area", area("Hall")}, {"brightness", Value(1)}});
  rt.register_entity("ScheduleDB", "db", {});
  EXPECT_NO_THROW(rt.subscribe_source("Proximity", rt.discover("BadgeReader", {}), "badgeDetected"));
  EXPECT_EQ(error_code([&] { rt.subscribe_source("Proximity", rt.discover("Screen", {}), "badgeDetected"); }),
            rc::kUndeclaredInput);
  EXPECT_EQ(error_code([&] { rt.subscribe_source("Proximity", rt.discover("ScheduleDB", {}), "todaySchedule"); }),
            rc::kUndeclaredInput);
  EXPECT_EQ(error_code([&] { rt.subscribe_source("VisualManager", rt.discover("BadgeReader", {}), "badgeDetected"); }),
            rc::kUndeclaredInput);
}

TEST(Subscribe, TwiceIsIdempotent) {
  Runtime rt(newscast_spec());
  int calls = 0;
  auto logic = handlers_for("Proximity", [&](ComponentContext&, const InputEvent&) { ++calls; });
  logic.initialize = [](ComponentContext& ctx) {
    ctx.subscribe(ctx.discover("BadgeReader"), "badgeDetected");
    ctx.subscribe(ctx.discover("BadgeReader"), "badgeDetected");
  };
  rt.register_component_logic("Proximity", logic);
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  rt.initialize_components();
  rt.publish_source("br1", "badgeDetected", Value("x"));
  rt.drain();
  EXPECT_EQ(calls, 1);
}

TEST(Subscribe, BindsToEntitiesPresentAtSubscribeTime) {
  Runtime rt(newscast_spec());
  std::vector<std::string> producers;
  auto logic = handlers_for("Proximity", [&](ComponentContext&, const InputEvent& in) { producers.push_back(in.producer); });
  logic.initialize = [](ComponentContext& ctx) { ctx.subscribe(ctx.discover("BadgeReader"), "badgeDetected"); };
  rt.register_component_logic("Proximity", logic);
  rt.register_entity("BadgeReader", "br1", {{"area", area("Hall")}});
  rt.initialize_components();
  rt.register_entity("BadgeReader", "br2", {{"area", area("Hall")}});
  rt.publish_source("br2", "badgeDetected", Value("x"));
  rt.publish_source("br1", "badgeDetected", Value("y"));
  rt.drain();
  EXPECT_EQ(producers, std::vector<std::string>{"br1"});
}

TEST(Push, ContextFansOutToDeclaredConsumers) {
  Runtime rt(newscast_spec());
  std::vector<std::string> order;
  for (const char* name : {"LanguageSelector", "DepartmentSelector"}) {
    std::string n = name;
    rt.register_component_logic(n, handlers_for(n, [&order, n](ComponentContext&, const InputEvent& in) {
                                  EXPECT_EQ(in.indices.at("area"), area("Hall"));
                                  EXPECT_EQ(in.producer, "Proximity");
                                  order.push_back(n);
                                }));
  }
  Value profiles = Value::array(TypeRef::of("UserProfile"), {profile("Alice", "FRENCH", "ELECTRONICS")});
  rt.publish_context("Proximity", profiles, {{"area", area("Hall")}});
  rt.drain();
  EXPECT_EQ(order, (std::vector<std::string>{"LanguageSelector", "DepartmentSelector"}));
  auto pubs = events_of(rt, EventKind::contextPublish);
  ASSERT_EQ(pubs.size(), 1u);
  EXPECT_EQ(pubs[0]->indices.at("area"), area("Hall"));
}

TEST(Push, ControllerDiscoversScreensByArea) {
  Runtime rt(newscast_spec());
  rt.register_entity("Screen", "hall", {{"area", area("Hall")}, {"brightness", Value(1)}});
  rt.register_entity("Screen", "lab", {{"area", area("Lab")}, {"brightness", Value(1)}});
  auto logic = handlers_for("VisualManager", [](ComponentContext& ctx, const InputEvent& in) {
    if (in.producer != "NewsSelector") return;
    auto screens = ctx.discover("Screen", FilterExpr{}.where("area", eq(in.indices.at("area"))));
    ctx.command(screens, "Display", "display",
                {Value::structure("Information", {{"content", in.value.as_struct().fields.at("content")}})});
  });
  rt.register_component_logic("VisualManager", logic);
  rt.publish_context("NewsSelector",
                     Value::structure("News", {{"title", Value("t")},
                                               {"content", Value("c")},
                                               {"language", Value::enumeration("Language", "ENGLISH")}}),
                     {{"area", area("Hall")}});
  rt.drain();
  auto commands = events_of(rt, EventKind::command);
  ASSERT_EQ(commands.size(), 1u);
  EXPECT_EQ(commands[0]->target, "hall");
  auto handled = events_of(rt, EventKind::controllerHandle);
  ASSERT_EQ(handled.size(), 1u);
  EXPECT_EQ(commands[0]->cause, handled[0]->seq);
}

TEST(Push, ContextWithoutConsumersRecordsOnly) {
  Runtime rt(small_spec());
  rt.publish_context("Quiet", Value(3));
  EXPECT_EQ(rt.drain(), 0u);
  EXPECT_EQ(rt.trace().size(), 1u);
}

TEST(Push, ContextErrors) {
  Runtime rt(newscast_spec());
  EXPECT_EQ(error_code([&] { rt.publish_context("Proximity", Value(3), {{"area", area("Hall")}}); }),
            rc::kTypeMismatch);
  Value empty = Value::array(TypeRef::of("UserProfile"), {});
  EXPECT_EQ(error_code([&] { rt.publish_context("Proximity", empty); }), rc::kIndexMismatch);
  EXPECT_EQ(error_code([&] { rt.publish_context("Proximity", empty, {{"area", Value(1)}}); }), rc::kIndexMismatch);
  EXPECT_EQ(error_code([&] { rt.publish_context("VisualManager", empty); }), rc::kUnknownComponent);
}

// Pull

TEST(Pull, ProfileFromTable) {
  Runtime rt(newscast_spec());
  EntityImpl impl;
  impl.pull["profile"] = [](const std::vector<Value>& args) {
    if (args.at(0) == Value("0A12")) return profile("Alice", "FRENCH", "COMPUTER_SCIENCE");
    throw RuntimeError(rc::kPullFailed, "no such badge");
  };
  rt.register_entity("ProfileDB", "pdb", {}, impl);
  EXPECT_EQ(rt.pull_source("pdb", "profile", {Value("0A12")}), profile("Alice", "FRENCH", "COMPUTER_SCIENCE"));
  auto pulls = events_of(rt, EventKind::pull);
  ASSERT_EQ(pulls.size(), 1u);
  EXPECT_EQ(pulls[0]->indices.at("badge"), Value("0A12"));
  EXPECT_EQ(error_code([&] { rt.pull_source("pdb", "profile", {Value("FFFF")}); }), rc::kPullFailed);
}

TEST(Pull, Errors) {
  Runtime rt(newscast_spec());
  EntityImpl impl;
  impl.pull["profile"] = [](const std::vector<Value>&) { return profile("A", "FRENCH", "ELECTRONICS"); };
  rt.register_entity("ProfileDB", "pdb", {}, impl);
  rt.register_entity("ScheduleDB", "sdb", {});
  EXPECT_EQ(error_code([&] { rt.pull_source("pdb", "profile", {}); }), rc::kIndexMismatch);
  EXPECT_EQ(error_code([&] { rt.pull_source("pdb", "profile", {Value(7)}); }), rc::kIndexMismatch);
  EXPECT_EQ(error_code([&] { rt.pull_source("ghost", "profile", {Value("x")}); }), rc::kUnknownEntity);
  EXPECT_EQ(error_code([&] { rt.pull_source("sdb", "todaySchedule", {}); }), rc::kNoPullHandler);
  EXPECT_EQ(error_code([&] { rt.pull_source("pdb", "profile", {Value("x")}, "NewsSelector"); }),
            rc::kUndeclaredInput);
  EXPECT_NO_THROW(rt.pull_source("pdb", "profile", {Value("x")}, "Proximity"));
  rt.unregister_entity("pdb");
  EXPECT_EQ(error_code([&] { rt.pull_source("pdb", "profile", {Value("x")}); }), rc::kOffline);
}

// Command

TEST(Command, FansOutInIdOrder) {
  Runtime rt(newscast_spec());
  std::vector<std::string> executed;
  EntityImpl impl;
  impl.onAction = [&](const ActionInvocation& inv) { executed.push_back(inv.entityId + "." + inv.method); };
  rt.register_entity("Screen", "s2", {{"area", area("Hall")}, {"brightness", Value(1)}}, impl);
  rt.register_entity("Screen", "s1", {{"area", area("Hall")}, {"brightness", Value(1)}}, impl);
  Value info = Value::structure("Information", {{"content", Value("hello")}});
  rt.command("VisualManager", rt.discover("Screen", {}), "Display", "display", {info});
  auto commands = events_of(rt, EventKind::command);
  ASSERT_EQ(commands.size(), 2u);
  EXPECT_EQ(commands[0]->target, "s1");
  EXPECT_EQ(commands[1]->target, "s2");
  EXPECT_EQ(commands[0]->name, "display");
  EXPECT_EQ(commands[0]->producer, "VisualManager");
  EXPECT_EQ(commands[0]->value.field("information"), info);
  EXPECT_TRUE(executed.empty());
  rt.drain();
  EXPECT_EQ(executed, (std::vector<std::string>{"s1.display", "s2.display"}));
}

TEST(Command, Errors) {
  Runtime rt(newscast_spec());
  rt.register_entity("Screen", "s1", {{"area", area("Hall")}, {"brightness", Value(1)}});
  rt.register_entity("LoudSpeaker", "l1", {{"area", area("Hall")}});
  auto screens = rt.discover("Screen", {});
  Value info = Value::structure("Information", {{"content", Value("x")}});
  EXPECT_EQ(error_code([&] { rt.command("NewsSelector", screens, "Display", "display", {info}); }),
            rc::kUndeclaredAction);
  EXPECT_EQ(error_code([&] { rt.command("VisualManager", screens, "OnOff", "on", {}); }), rc::kUndeclaredAction);
  EXPECT_EQ(error_code([&] {
              rt.command("VisualManager", rt.discover("LoudSpeaker", {}), "Display", "display", {info});
            }),
            rc::kUndeclaredAction);
  EXPECT_EQ(error_code([&] { rt.command("VisualManager", screens, "Display", "display", {}); }),
            rc::kSignatureMismatch);
  EXPECT_EQ(error_code([&] { rt.command("VisualManager", screens, "Display", "display", {Value("x")}); }),
            rc::kSignatureMismatch);
  EXPECT_EQ(error_code([&] { rt.command("VisualManager", screens, "Display", "show", {info}); }),
            rc::kSignatureMismatch);
  EXPECT_TRUE(rt.trace().empty());
}

TEST(Command, EmptyCompositeIsSilent) {
  Runtime rt(newscast_spec());
  Value info = Value::structure("Information", {{"content", Value("x")}});
  EXPECT_NO_THROW(rt.command("VisualManager", rt.discover("Screen", {}), "Display", "display", {info}));
  EXPECT_TRUE(rt.trace().empty());
  EXPECT_EQ(rt.drain(), 0u);
}

TEST(Command, OfflineMemberSkippedAtExecution) {
  Runtime rt(newscast_spec());
  int executed = 0;
  EntityImpl impl;
  impl.onAction = [&](const ActionInvocation&) { ++executed; };
  rt.register_entity("Screen", "s1", {{"area", area("Hall")}, {"brightness", Value(1)}}, impl);
  rt.command("VisualManager", rt.discover("Screen", {}), "Display", "display",
             {Value::structure("Information", {{"content", Value("x")}})});
  rt.unregister_entity("s1");
  rt.drain();
  EXPECT_EQ(executed, 0);
}

// Conformance

TEST(Conformance, MissingHandlerIsNamed) {
  Runtime rt(newscast_spec());
  auto logic = handlers_for("Proximity");
  logic.handlers.erase("onNewProfile");
  try {
    rt.register_component_logic("Proximity", logic);
    FAIL();
  } catch (const RuntimeError& e) {
    EXPECT_EQ(e.code(), rc::kMissingHandler);
    EXPECT_EQ(e.subjects(), std::vector<std::string>{"onNewProfile"});
  }
  EXPECT_FALSE(rt.has_logic("Proximity"));
}

TEST(Conformance, CompleteLogicAccepted) {
  Runtime rt(newscast_spec());
  EXPECT_NO_THROW(rt.register_component_logic("Proximity", handlers_for("Proximity")));
  EXPECT_TRUE(rt.has_logic("Proximity"));
  for (auto& [name, logic] : newscast_logic()) EXPECT_NO_THROW(Runtime(newscast_spec()).register_component_logic(name, logic));
}

TEST(Conformance, ExtraHandlerRejected) {
  Runtime rt(newscast_spec());
  auto logic = handlers_for("Proximity");
  logic.handlers["onNewFoo"] = [](ComponentContext&, const InputEvent&) {};
  try {
    rt.register_component_logic("Proximity", logic);
    FAIL();
  } catch (const RuntimeError& e) {
    EXPECT_EQ(e.code(), rc::kExtraHandler);
    EXPECT_EQ(e.subjects(), std::vector<std::string>{"onNewFoo"});
  }
  EXPECT_FALSE(rt.has_logic("Proximity"));
  EXPECT_EQ(error_code([&] { rt.register_component_logic("Nope", {}); }), rc::kUnknownComponent);
}

// Properties

namespace {

struct NewscastWorld {
  Runtime rt{newscast_spec()};
  NewscastWorld() {
    for (auto& [name, logic] : newscast_logic()) rt.register_component_logic(name, logic);
    EntityImpl db;
    db.pull["profile"] = [](const std::vector<Value>& args) {
      const std::string badge = args.at(0).as_string();
      static const char* langs[] = {"ENGLISH", "FRENCH", "SPANISH"};
      static const char* depts[] = {"COMPUTER_SCIENCE", "ELECTRONICS", "MATHEMATICS"};
      unsigned h = static_cast<unsigned>(std::hash<std::string>{}(badge));
      return profile(badge, langs[h % 3], depts[(h / 3) % 3]);
    };
    rt.register_entity("ProfileDB", "pdb", {}, db);
    for (const char* a : {"Hall", "Lab"}) {
      std::string n = a;
      rt.register_entity("BadgeReader", "br-" + n, {{"area", area(n)}});
      rt.register_entity("Screen", "scr-" + n, {{"area", area(n)}, {"brightness", Value(40)}});
      rt.register_entity("LoudSpeaker", "spk-" + n, {{"area", area(n)}});
    }
    rt.register_entity("BuildingStatus", "bs", {});
    rt.register_entity("ScheduleDB", "sdb", {});
    rt.register_entity("NewsProvider", "np", {});
    rt.initialize_components();
    rt.drain();
  }

  void random_stimuli(std::mt19937_64& rng, int count) {
    std::uniform_int_distribution<int> pick(0, 5), badge(0, 6);
    for (int i = 0; i < count; ++i) {
      rt.set_tick(i);
      std::string b = "B" + std::to_string(badge(rng));
      switch (pick(rng)) {
        case 0: rt.inject_stimulus("br-Hall", "badgeDetected", Value(b)); break;
        case 1: rt.inject_stimulus("br-Lab", "badgeDetected", Value(b)); break;
        case 2: rt.inject_stimulus("br-Hall", "badgeDisappeared", Value(b)); break;
        case 3:
          rt.inject_stimulus("bs", "state", Value::enumeration("BuildingState", rng() % 2 ? "OPEN" : "CLOSE"));
          break;
        case 4:
          rt.inject_stimulus("sdb", "todaySchedule",
                             Value::structure("Schedule", {{"department", Value::enumeration("Department", "ELECTRONICS")},
                                                           {"classes", Value::array(TypeRef::of("String"), {Value("Algebra")})}}));
          break;
        default:
          rt.inject_stimulus("np", "news",
                             Value::structure("News", {{"title", Value("T")},
                                                       {"content", Value("C" + b)},
                                                       {"language", Value::enumeration("Language", "FRENCH")}}),
                             {{"topic", Value::enumeration("Topic", "COURSES")}});
      }
      rt.drain();
    }
  }
};

}  // namespace

TEST(RuntimeProperty, CommandsAreCausedThroughControllers) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    NewscastWorld w;
    std::mt19937_64 rng(seed);
    w.random_stimuli(rng, 60);
    const auto& trace = w.rt.trace();
    std::size_t commands = 0;
    for (const auto& e : trace) {
      ASSERT_TRUE(!e.cause || *e.cause < e.seq);
      if (e.kind != EventKind::command) continue;
      ++commands;
      auto chain = testing_support::cause_chain(trace, e.seq);
      ASSERT_GE(chain.size(), 2u);
      EXPECT_EQ(chain[1]->kind, EventKind::controllerHandle);
      EXPECT_EQ(chain.back()->kind, EventKind::stimulus);
      for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
        EXPECT_TRUE(chain[i]->kind == EventKind::controllerHandle || chain[i]->kind == EventKind::contextPublish ||
                    chain[i]->kind == EventKind::sourcePublish);
      }
    }
    EXPECT_GT(commands, 0u) << "seed " << seed;
  }
}

TEST(RuntimeProperty, PerProducerFifo) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Runtime rt(newscast_spec());
    std::vector<std::pair<std::string, std::uint64_t>> delivered;
    auto logic = handlers_for("Proximity", [&](ComponentContext&, const InputEvent& in) {
      delivered.emplace_back(in.producer, in.seq);
    });
    logic.initialize = [](ComponentContext& ctx) {
      ctx.subscribe(ctx.discover("BadgeReader"), "badgeDetected");
      ctx.subscribe(ctx.discover("BadgeReader"), "badgeDisappeared");
    };
    rt.register_component_logic("Proximity", logic);
    for (int i = 0; i < 4; ++i) rt.register_entity("BadgeReader", "r" + std::to_string(i), {{"area", area("Hall")}});
    rt.initialize_components();
    std::mt19937_64 rng(seed);
    std::map<std::string, std::vector<std::uint64_t>> published;
    for (int i = 0; i < 100; ++i) {
      std::string producer = "r" + std::to_string(rng() % 4);
      rt.publish_source(producer, rng() % 2 ? "badgeDetected" : "badgeDisappeared", Value(std::to_string(i)));
      published[producer].push_back(rt.trace().back().seq);
      if (rng() % 10 == 0) rt.drain();
    }
    rt.drain();
    std::map<std::string, std::vector<std::uint64_t>> received;
    for (const auto& [p, seq] : delivered) received[p].push_back(seq);
    EXPECT_EQ(received, published);
  }
}

TEST(RuntimeProperty, UnpluggedEntityProducesNothingLater) {
  NewscastWorld w;
  std::mt19937_64 rng(5);
  w.random_stimuli(rng, 20);
  w.rt.set_tick(100);
  w.rt.unregister_entity("br-Lab");
  EXPECT_EQ(error_code([&] { w.rt.inject_stimulus("br-Lab", "badgeDetected", Value("B1")); }), rc::kOffline);
  w.random_stimuli(rng, 0);
  for (int t = 101; t < 140; ++t) {
    w.rt.set_tick(t);
    w.rt.inject_stimulus("br-Hall", "badgeDetected", Value("B" + std::to_string(t % 5)));
    w.rt.drain();
  }
  for (const auto& e : w.rt.trace())
    if (e.tick >= 100) {
      EXPECT_NE(e.producer, "br-Lab");
    }
  EXPECT_TRUE(w.rt.discover("BadgeReader", {}).ids == std::vector<std::string>{"br-Hall"});
}

TEST(RuntimeProperty, ReplugIsDiscoverableButNotRebound) {
  NewscastWorld w;
  w.rt.unregister_entity("br-Lab");
  w.rt.register_entity("BadgeReader", "br-Lab", {{"area", area("Lab")}});
  EXPECT_EQ(w.rt.discover("BadgeReader", parse_query("area(Lab)")).ids, std::vector<std::string>{"br-Lab"});
  std::size_t before = w.rt.trace().size();
  w.rt.inject_stimulus("br-Lab", "badgeDetected", Value("B1"));
  EXPECT_EQ(w.rt.drain(), 0u);
  EXPECT_EQ(w.rt.trace().size(), before + 2);
}

TEST(Trace, SequenceAndJson) {
  NewscastWorld w;
  std::mt19937_64 rng(11);
  w.random_stimuli(rng, 10);
  std::uint64_t expected = 1;
  for (const auto& e : w.rt.trace()) EXPECT_EQ(e.seq, expected++);
  std::string text = serialize_trace(w.rt.trace());
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = text.find('\n', pos)) != std::string::npos; ++pos) ++lines;
  EXPECT_EQ(lines, w.rt.trace().size());
  auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  for (const char* key : {"seq", "cause", "tick", "kind", "producer", "name", "value", "indices"})
    EXPECT_TRUE(first.contains(key)) << key;
  EXPECT_TRUE(first["cause"].is_null());
  EXPECT_EQ(first["kind"], "stimulus");
}
