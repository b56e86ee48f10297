#include "support.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>
#include <sys/wait.h>
#include <unistd.h>

namespace testing_support {

using namespace diakit;

std::string fixture_path(const std::string& relative) { return std::string(DIAKIT_FIXTURES) + "/" + relative; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::vector<std::string> newscast_paths() {
  return {fixture_path("newscast/taxonomy.diaspec"), fixture_path("newscast/architecture.diaspec")};
}

std::vector<SourceFile> newscast_sources() {
  std::vector<SourceFile> out;
  for (const auto& p : newscast_paths()) out.push_back({p, read_file(p)});
  return out;
}

std::shared_ptr<const CheckedSpec> newscast_spec() {
  static std::shared_ptr<const CheckedSpec> spec = [] {
    auto parsed = parse(newscast_sources());
    if (!parsed.ok()) throw std::runtime_error("newscast fixture does not parse");
    auto checked = check(parsed.model);
    if (!checked.ok()) throw std::runtime_error("newscast fixture does not check");
    return checked.spec;
  }();
  return spec;
}

CheckResult check_text(const std::string& text, const std::string& path) {
  auto parsed = parse({{path, text}});
  if (!parsed.ok()) throw std::runtime_error("test source does not parse: " + format_diagnostic(parsed.diagnostics.front()));
  return check(parsed.model);
}

std::vector<std::string> error_codes(const std::string& text) {
  std::set<std::string> codes;
  auto parsed = parse({{"test.diaspec", text}});
  for (const auto& d : parsed.diagnostics) codes.insert(d.code);
  if (parsed.ok())
    for (const auto& e : check(parsed.model).errors) codes.insert(e.code);
  return {codes.begin(), codes.end()};
}

const std::vector<NegativeCase>& negative_cases() {
  static const std::vector<NegativeCase> cases = {
      {"E001", "device A {}\ndevice A {}\n"},
      {"E002", "device A { attribute x as Nope; }\n"},
      {"E003", "device A extends Missing {}\n"},
      {"E004",
       "device ProfileDB { source other as String; }\n"
       "context C as String { source profile from ProfileDB; }\n"},
      {"E005", "context C as String { context Missing; }\n"},
      {"E006",
       "action Display { display(); }\ndevice D { source s as String; }\ndevice S {}\n"
       "context C as String { source s from D; }\n"
       "controller K { context C; action Display on S; }\n"},
      {"E007", "device A extends B {}\ndevice B extends A {}\n"},
      {"E008",
       "device BadgeReader { source badgeDetected as String; }\n"
       "controller Bad { source badgeDetected from BadgeReader; }\n"},
      {"E009",
       "action OnOff { on(); }\ndevice D { source s as String; action OnOff; }\n"
       "context C as String { source s from D; action OnOff on D; }\n"},
      {"E010", "device P { attribute a as String; }\ndevice Q extends P { attribute a as Integer; }\n"},
      {"E011", "device D { source s as String indexed by k as Nope; }\n"},
      {"E012", "enumeration E {A, B, A}\n"},
      {"E013",
       "device D { source s as String; }\n"
       "context A as String { source s from D; context B; }\n"
       "context B as String { context A; }\n"},
  };
  return cases;
}

nlohmann::json walkthrough_json() {
  return nlohmann::json::parse(read_file(fixture_path("newscast/walkthrough.scenario.json")));
}

Scenario walkthrough_scenario() { return load_scenario(walkthrough_json(), *newscast_spec()); }

CliResult run_cli(const std::vector<std::string>& args) {
  char errTemplate[] = "/tmp/diakit-stderr-XXXXXX";
  int errFd = mkstemp(errTemplate);
  if (errFd < 0) throw std::runtime_error("mkstemp failed");
  close(errFd);
  std::string cmd = "'" + std::string(DIAKIT_CLI) + "'";
  for (const auto& a : args) {
    std::string quoted;
    for (char c : a) quoted += c == '\'' ? std::string("'\\''") : std::string(1, c);
    cmd += " '" + quoted + "'";
  }
  cmd += " 2>" + std::string(errTemplate);
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.exitCode = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_file(errTemplate);
  std::filesystem::remove(errTemplate);
  return r;
}

TempDir::TempDir() {
  char tmpl[] = "/tmp/diakit-test-XXXXXX";
  if (!mkdtemp(tmpl)) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

// Discovery oracle

namespace {

const char* kOracleSpec = R"(
enumeration Color {RED, GREEN, BLUE}
structure Area { name as String; }
device Located { attribute area as Area; attribute floor as Integer; }
device Screen extends Located {
  attribute size as Float;
  attribute color as Color;
  attribute active as Boolean;
  attribute label as String;
}
device Sensor extends Located { attribute active as Boolean; }
device Speaker extends Located { attribute volume as Integer; }
)";

const std::vector<std::string> kAreas = {"room1", "room2", "room3", "hall"};
const std::vector<std::string> kColors = {"RED", "GREEN", "BLUE"};
const std::vector<std::string> kLabels = {"a", "b", "c", "d d"};

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

int roll(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// A random attribute value of `type`; loose = the untyped literal a query would carry.
Value random_value(const TypeRef& type, std::mt19937_64& rng, bool loose) {
  if (type.name == "Integer") return Value(static_cast<std::int64_t>(roll(rng, 0, 9)));
  if (type.name == "Float") {
    if (loose && roll(rng, 0, 1)) return Value(static_cast<std::int64_t>(roll(rng, 0, 20)));
    return Value(roll(rng, 0, 40) / 2.0);
  }
  if (type.name == "Boolean") return Value(roll(rng, 0, 1) == 1);
  if (type.name == "String") return Value(pick(kLabels, rng));
  if (type.name == "Color") {
    if (loose) return Value(pick(kColors, rng));
    return Value::enumeration("Color", pick(kColors, rng));
  }
  if (type.name == "Area") {
    if (loose) return Value(pick(kAreas, rng));
    return Value::structure("Area", {{"name", Value(pick(kAreas, rng))}});
  }
  throw std::logic_error("no generator for " + type.str());
}

Predicate random_predicate(const TypeRef& type, std::mt19937_64& rng, int depth) {
  bool numeric = type.name == "Integer" || type.name == "Float";
  if (depth > 1 && roll(rng, 0, 2) > 0) {
    switch (roll(rng, 0, 2)) {
      case 0: return any_of(random_predicate(type, rng, depth - 1), random_predicate(type, rng, depth - 1));
      case 1: return all_of(random_predicate(type, rng, depth - 1), random_predicate(type, rng, depth - 1));
      default: return negate(random_predicate(type, rng, depth - 1));
    }
  }
  Value operand = random_value(type, rng, true);
  int op = numeric ? roll(rng, 0, 5) : roll(rng, 0, 1);
  switch (op) {
    case 0: return eq(operand);
    case 1: return ne(operand);
    case 2: return lt(operand);
    case 3: return le(operand);
    case 4: return gt(operand);
    default: return ge(operand);
  }
}

// Oracle-side comparison: numbers numerically, everything else through its
// canonical JSON, with a bare literal standing for a single-field Area.
int compare_numbers(double a, double b) { return a < b ? -1 : (a > b ? 1 : 0); }

bool oracle_equal(const Value& attr, const Value& operand) {
  if (attr.is_number() && operand.is_number()) return attr.as_number() == operand.as_number();
  nlohmann::json a = to_json(attr);
  nlohmann::json o = to_json(operand);
  if (a.is_object() && a.size() == 1 && !o.is_object()) o = nlohmann::json{{a.begin().key(), o}};
  return a == o;
}

bool oracle_eval(const Predicate& p, const Value& attr) {
  switch (p.op) {
    case Predicate::Op::eq: return oracle_equal(attr, p.operand);
    case Predicate::Op::ne: return !oracle_equal(attr, p.operand);
    case Predicate::Op::lt: return compare_numbers(attr.as_number(), p.operand.as_number()) < 0;
    case Predicate::Op::le: return compare_numbers(attr.as_number(), p.operand.as_number()) <= 0;
    case Predicate::Op::gt: return compare_numbers(attr.as_number(), p.operand.as_number()) > 0;
    case Predicate::Op::ge: return compare_numbers(attr.as_number(), p.operand.as_number()) >= 0;
    case Predicate::Op::or_: return oracle_eval(p.children[0], attr) || oracle_eval(p.children[1], attr);
    case Predicate::Op::and_: return oracle_eval(p.children[0], attr) && oracle_eval(p.children[1], attr);
    case Predicate::Op::not_: return !oracle_eval(p.children[0], attr);
  }
  return false;
}

}  // namespace

OracleWorld oracle_world() {
  static OracleWorld world = [] {
    auto r = check_text(kOracleSpec, "oracle.diaspec");
    if (!r.ok()) throw std::runtime_error("oracle taxonomy does not check");
    return OracleWorld{r.spec, {"Screen", "Sensor", "Speaker"}};
  }();
  return world;
}

OracleTrial random_trial(const OracleWorld& world, std::mt19937_64& rng) {
  static const std::vector<std::string> queryClasses = {"Located", "Screen", "Sensor", "Speaker"};
  OracleTrial t;
  t.queryClass = pick(queryClasses, rng);
  int n = roll(rng, 0, 100);
  for (int i = 0; i < n; ++i) {
    EntityInstance e;
    e.id = "e" + std::to_string(1000 + roll(rng, 0, 8999)) + "_" + std::to_string(i);
    e.deviceClass = pick(world.classes, rng);
    for (const auto& a : world.spec->members(e.deviceClass).attributes)
      e.attributes.emplace(a.name, random_value(a.type, rng, false));
    e.online = roll(rng, 0, 9) > 0;
    t.population.push_back(std::move(e));
  }
  const auto& attrs = world.spec->members(t.queryClass).attributes;
  std::vector<const AttributeDecl*> pool;
  for (const auto& a : attrs) pool.push_back(&a);
  std::shuffle(pool.begin(), pool.end(), rng);
  int clauses = roll(rng, 0, static_cast<int>(std::min<std::size_t>(pool.size(), 3)));
  for (int i = 0; i < clauses; ++i)
    t.filter.where(pool[i]->name, random_predicate(pool[i]->type, rng, roll(rng, 1, 3)));
  return t;
}

std::vector<std::string> brute_force(const OracleWorld& world, const OracleTrial& trial) {
  std::vector<std::string> ids;
  for (const auto& e : trial.population) {
    if (!e.online || !world.spec->is_a(e.deviceClass, trial.queryClass)) continue;
    bool all = true;
    for (const auto& c : trial.filter.clauses) all = all && oracle_eval(c.predicate, e.attributes.at(c.attribute));
    if (all) ids.push_back(e.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> runtime_discover(const OracleWorld& world, const OracleTrial& trial) {
  Runtime rt(world.spec);
  for (const auto& e : trial.population) rt.register_entity(e.deviceClass, e.id, e.attributes);
  for (const auto& e : trial.population)
    if (!e.online) rt.unregister_entity(e.id);
  return rt.discover(trial.queryClass, trial.filter).ids;
}

const EventRecord* find_event(const std::vector<EventRecord>& trace, std::uint64_t seq) {
  for (const auto& e : trace)
    if (e.seq == seq) return &e;
  return nullptr;
}

std::vector<const EventRecord*> cause_chain(const std::vector<EventRecord>& trace, std::uint64_t seq) {
  std::vector<const EventRecord*> chain;
  const EventRecord* e = find_event(trace, seq);
  while (e) {
    chain.push_back(e);
    if (!e->cause) break;
    if (*e->cause >= e->seq) break;  // causes always precede
    e = find_event(trace, *e->cause);
  }
  return chain;
}

std::string trace_without_steering(const std::vector<EventRecord>& trace) {
  std::vector<EventRecord> copy = trace;
  for (auto& e : copy) e.steered = false;
  return serialize_trace(copy);
}

double reference_sinusoid(std::int64_t t, double offset, double amplitude, std::int64_t periodTicks, double phase) {
  long double angle = 2.0L * std::numbers::pi_v<long double> * static_cast<long double>(t) /
                          static_cast<long double>(periodTicks) +
                      static_cast<long double>(phase);
  return static_cast<double>(static_cast<long double>(offset) + static_cast<long double>(amplitude) * std::sin(angle));
}

}  // namespace testing_support
