#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "diakit/checker.hpp"
#include "diakit/filter.hpp"
#include "diakit/parser.hpp"
#include "diakit/runtime.hpp"
#include "diakit/simulator.hpp"

namespace testing_support {

std::string fixture_path(const std::string& relative);
std::string read_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

std::vector<diakit::SourceFile> newscast_sources();
std::vector<std::string> newscast_paths();
std::shared_ptr<const diakit::CheckedSpec> newscast_spec();
// Checks one or more inline sources; returns the result whatever it is.
diakit::CheckResult check_text(const std::string& text, const std::string& path = "test.diaspec");
// Sorted distinct error codes of a parse+check over `text` (parse codes too).
std::vector<std::string> error_codes(const std::string& text);

// One crafted invalid spec per checker code; `text` is checked alone.
struct NegativeCase {
  std::string code;
  std::string text;
};
const std::vector<NegativeCase>& negative_cases();

nlohmann::json walkthrough_json();
diakit::Scenario walkthrough_scenario();

struct CliResult {
  int exitCode = -1;
  std::string out;
  std::string err;
};
CliResult run_cli(const std::vector<std::string>& args);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Random discovery trials over a small test taxonomy.
struct OracleWorld {
  std::shared_ptr<const diakit::CheckedSpec> spec;
  std::vector<std::string> classes;  // concrete classes used for the population
};
OracleWorld oracle_world();

struct OracleTrial {
  std::string queryClass;
  diakit::FilterExpr filter;
  std::vector<diakit::EntityInstance> population;
};
OracleTrial random_trial(const OracleWorld& world, std::mt19937_64& rng);

// Independent brute-force evaluation of a trial: ids in ascending order.
std::vector<std::string> brute_force(const OracleWorld& world, const OracleTrial& trial);

// Runs the trial through the runtime's discover.
std::vector<std::string> runtime_discover(const OracleWorld& world, const OracleTrial& trial);

// Trace helpers.
const diakit::EventRecord* find_event(const std::vector<diakit::EventRecord>& trace, std::uint64_t seq);
// Events from `seq` back to the root of its cause chain (inclusive).
std::vector<const diakit::EventRecord*> cause_chain(const std::vector<diakit::EventRecord>& trace,
                                                    std::uint64_t seq);
// Trace serialization with the steered flag removed.
std::string trace_without_steering(const std::vector<diakit::EventRecord>& trace);

// Reference value of a*sin(2*pi*t/p + phase) + offset computed with long double.
double reference_sinusoid(std::int64_t t, double offset, double amplitude, std::int64_t periodTicks, double phase);

}  // namespace testing_support
