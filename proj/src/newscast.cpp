#include "diakit/newscast.hpp"

#include <algorithm>
#include <memory>

namespace diakit {

namespace {

const std::string& area_key(const Value& area) { return area.field("name").as_string(); }

FilterExpr in_area(const Value& area) { return FilterExpr{}.where("area", eq(area)); }

// Most frequent value of `field` across the profiles; ties go to the value
// declared first in the enumeration.
std::optional<Value> most_frequent(const CheckedSpec& spec, const Value& profiles, const std::string& field,
                                   const std::string& enumName) {
  const auto& items = profiles.as_array().items;
  if (items.empty()) return std::nullopt;
  std::map<std::string, int> counts;
  for (const auto& p : items) ++counts[p.field(field).as_enum().value];
  const EnumDecl* e = spec.find_enum(enumName);
  std::string best;
  int bestCount = 0;
  for (const auto& v : e->values)
    if (counts[v] > bestCount) best = v, bestCount = counts[v];
  return Value::enumeration(enumName, best);
}

ComponentLogic proximity() {
  struct Present {
    std::string badge;
    Value profile;
  };
  auto byArea = std::make_shared<std::map<std::string, std::vector<Present>>>();

  auto publish = [byArea](ComponentContext& ctx, const Value& area) {
    std::vector<Value> list;
    for (const auto& p : (*byArea)[area_key(area)]) list.push_back(p.profile);
    ctx.publish(Value::array(TypeRef::of("UserProfile"), std::move(list)), {{"area", area}});
  };

  ComponentLogic l;
  l.initialize = [](ComponentContext& ctx) {
    auto readers = ctx.discover("BadgeReader");
    ctx.subscribe(readers, "badgeDetected");
    ctx.subscribe(readers, "badgeDisappeared");
  };
  l.handlers["onNewBadgeDetected"] = [byArea, publish](ComponentContext& ctx, const InputEvent& ev) {
    const Value& area = ev.producerAttributes.at("area");
    const std::string& badge = ev.value.as_string();
    auto& present = (*byArea)[area_key(area)];
    if (std::any_of(present.begin(), present.end(), [&](const Present& p) { return p.badge == badge; })) return;
    auto dbs = ctx.discover("ProfileDB");
    if (dbs.empty()) return;
    Value profile;
    try {
      profile = ctx.pull(any_one(dbs), "profile", {Value(badge)});
    } catch (const RuntimeError& e) {
      if (e.code() != runtime_codes::kPullFailed) throw;
      return;  // unknown badge
    }
    present.push_back({badge, std::move(profile)});
    publish(ctx, area);
  };
  l.handlers["onNewBadgeDisappeared"] = [byArea, publish](ComponentContext& ctx, const InputEvent& ev) {
    const Value& area = ev.producerAttributes.at("area");
    auto& present = (*byArea)[area_key(area)];
    auto n = std::erase_if(present, [&](const Present& p) { return p.badge == ev.value.as_string(); });
    if (n > 0) publish(ctx, area);
  };
  l.handlers["onNewProfile"] = [](ComponentContext&, const InputEvent&) {};
  return l;
}

// LanguageSelector and DepartmentSelector: dominant profile field per area,
// published when it changes.
ComponentLogic dominant(const std::string& field, const std::string& enumName) {
  auto last = std::make_shared<std::map<std::string, Value>>();
  ComponentLogic l;
  l.initialize = [](ComponentContext&) {};
  l.handlers["onNewProximity"] = [=](ComponentContext& ctx, const InputEvent& ev) {
    const Value& area = ev.indices.at("area");
    auto v = most_frequent(ctx.spec(), ev.value, field, enumName);
    if (!v) return;
    auto it = last->find(area_key(area));
    if (it != last->end() && it->second == *v) return;
    (*last)[area_key(area)] = *v;
    ctx.publish(*v, {{"area", area}});
  };
  return l;
}

ComponentLogic news_selector() {
  struct State {
    std::map<std::string, Value> newsByLanguage;
    std::map<std::string, std::pair<Value, std::string>> languageByArea;  // area name -> (area, language)
  };
  auto st = std::make_shared<State>();
  auto pick = [st](const std::string& language) {
    auto it = st->newsByLanguage.find(language);
    if (it != st->newsByLanguage.end()) return it->second;
    return Value::structure("News", {{"title", Value("Campus news")},
                                     {"content", Value("Welcome to the campus")},
                                     {"language", Value::enumeration("Language", language)}});
  };
  ComponentLogic l;
  l.initialize = [](ComponentContext& ctx) { ctx.subscribe(ctx.discover("NewsProvider"), "news"); };
  l.handlers["onNewNews"] = [st, pick](ComponentContext& ctx, const InputEvent& ev) {
    const std::string& language = ev.value.field("language").as_enum().value;
    st->newsByLanguage[language] = ev.value;
    for (const auto& [_, entry] : st->languageByArea)
      if (entry.second == language) ctx.publish(pick(language), {{"area", entry.first}});
  };
  l.handlers["onNewLanguageSelector"] = [st, pick](ComponentContext& ctx, const InputEvent& ev) {
    const Value& area = ev.indices.at("area");
    const std::string& language = ev.value.as_enum().value;
    st->languageByArea[area_key(area)] = {area, language};
    ctx.publish(pick(language), {{"area", area}});
  };
  return l;
}

ComponentLogic schedule_selector() {
  struct State {
    std::map<std::string, Value> byDepartment;
    std::map<std::string, std::pair<Value, std::string>> departmentByArea;
  };
  auto st = std::make_shared<State>();
  auto pick = [st](ComponentContext& ctx, const std::string& department) {
    if (auto it = st->byDepartment.find(department); it != st->byDepartment.end()) return it->second;
    for (const auto& id : ctx.discover("ScheduleDB")) {
      try {
        Value s = ctx.pull(id, "todaySchedule");
        if (s.field("department").as_enum().value == department) return s;
      } catch (const RuntimeError& e) {
        if (e.code() != runtime_codes::kNoPullHandler && e.code() != runtime_codes::kPullFailed) throw;
      }
    }
    return Value::structure("Schedule", {{"department", Value::enumeration("Department", department)},
                                         {"classes", Value::array(TypeRef::of("String"), {})}});
  };
  ComponentLogic l;
  l.initialize = [](ComponentContext& ctx) { ctx.subscribe(ctx.discover("ScheduleDB"), "todaySchedule"); };
  l.handlers["onNewTodaySchedule"] = [st](ComponentContext& ctx, const InputEvent& ev) {
    const std::string& department = ev.value.field("department").as_enum().value;
    st->byDepartment[department] = ev.value;
    for (const auto& [_, entry] : st->departmentByArea)
      if (entry.second == department) ctx.publish(ev.value, {{"area", entry.first}});
  };
  l.handlers["onNewDepartmentSelector"] = [st, pick](ComponentContext& ctx, const InputEvent& ev) {
    const Value& area = ev.indices.at("area");
    const std::string& department = ev.value.as_enum().value;
    st->departmentByArea[area_key(area)] = {area, department};
    ctx.publish(pick(ctx, department), {{"area", area}});
  };
  return l;
}

ComponentLogic class_reminder() {
  struct State {
    std::optional<Value> schedule;
    bool open = false;
  };
  auto st = std::make_shared<State>();
  auto remind = [st](ComponentContext& ctx) {
    if (!st->open || !st->schedule) return;
    std::string message = "Classes today:";
    const auto& classes = st->schedule->field("classes").as_array().items;
    if (classes.empty()) message += " none";
    for (std::size_t i = 0; i < classes.size(); ++i) message += (i ? ", " : " ") + classes[i].as_string();
    ctx.publish(Value::structure("Reminder", {{"message", Value(message)}}));
  };
  ComponentLogic l;
  l.initialize = [](ComponentContext& ctx) {
    ctx.subscribe(ctx.discover("ScheduleDB"), "todaySchedule");
    ctx.subscribe(ctx.discover("BuildingStatus"), "state");
  };
  l.handlers["onNewTodaySchedule"] = [st, remind](ComponentContext& ctx, const InputEvent& ev) {
    st->schedule = ev.value;
    remind(ctx);
  };
  l.handlers["onNewState"] = [st, remind](ComponentContext& ctx, const InputEvent& ev) {
    bool open = ev.value.as_enum().value == "OPEN";
    bool opened = open && !st->open;
    st->open = open;
    if (opened) remind(ctx);
  };
  return l;
}

ComponentLogic visual_manager() {
  auto show = [](ComponentContext& ctx, const Value& area, std::string content) {
    auto screens = ctx.discover("Screen", in_area(area));
    ctx.command(screens, "Display", "display",
                {Value::structure("Information", {{"content", Value(std::move(content))}})});
  };
  ComponentLogic l;
  l.initialize = [](ComponentContext&) {};
  l.handlers["onNewNewsSelector"] = [show](ComponentContext& ctx, const InputEvent& ev) {
    show(ctx, ev.indices.at("area"), ev.value.field("content").as_string());
  };
  l.handlers["onNewScheduleSelector"] = [show](ComponentContext& ctx, const InputEvent& ev) {
    std::string content = "Schedule:";
    const auto& classes = ev.value.field("classes").as_array().items;
    if (classes.empty()) content += " no classes";
    for (std::size_t i = 0; i < classes.size(); ++i) content += (i ? ", " : " ") + classes[i].as_string();
    show(ctx, ev.indices.at("area"), std::move(content));
  };
  return l;
}

ComponentLogic audio_manager() {
  ComponentLogic l;
  l.initialize = [](ComponentContext&) {};
  l.handlers["onNewClassReminder"] = [](ComponentContext& ctx, const InputEvent& ev) {
    ctx.command(ctx.discover("LoudSpeaker"), "Play", "play",
                {Value::structure("Audio", {{"message", ev.value.field("message")}})});
  };
  return l;
}

}  // namespace

std::map<std::string, ComponentLogic> newscast_logic() {
  std::map<std::string, ComponentLogic> out;
  out["Proximity"] = proximity();
  out["LanguageSelector"] = dominant("language", "Language");
  out["DepartmentSelector"] = dominant("department", "Department");
  out["NewsSelector"] = news_selector();
  out["ScheduleSelector"] = schedule_selector();
  out["ClassReminder"] = class_reminder();
  out["VisualManager"] = visual_manager();
  out["AudioManager"] = audio_manager();
  return out;
}

}  // namespace diakit
