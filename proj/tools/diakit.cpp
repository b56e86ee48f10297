// diakit command line: check, generate, simulate.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <pthread.h>

#include "CLI11.hpp"

#include "diakit/checker.hpp"
#include "diakit/codegen.hpp"
#include "diakit/gateway.hpp"
#include "diakit/newscast.hpp"
#include "diakit/parser.hpp"
#include "diakit/simulator.hpp"

namespace {

enum Exit { kOk = 0, kSpecErrors = 1, kValidation = 2, kIo = 3 };

struct IoFailure {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure{"cannot read " + path};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Parses and checks; prints diagnostics to stderr. Null on errors.
std::shared_ptr<const diakit::CheckedSpec> load_spec(const std::vector<std::string>& paths) {
  std::vector<diakit::SourceFile> files;
  for (const auto& p : paths) files.push_back({p, read_file(p)});
  auto parsed = diakit::parse(files);
  for (const auto& d : parsed.diagnostics) std::cerr << diakit::format_diagnostic(d) << '\n';
  if (!parsed.ok()) return nullptr;
  auto checked = diakit::check(parsed.model);
  for (const auto& e : checked.errors) std::cerr << diakit::format_diagnostic(e.to_diagnostic()) << '\n';
  return checked.spec;
}

int cmd_check(const std::vector<std::string>& files) {
  auto spec = load_spec(files);
  if (!spec) return kSpecErrors;
  std::cout << "OK: " << spec->devices().size() << " devices, " << spec->contexts().size() << " contexts, "
            << spec->controllers().size() << " controllers\n";
  return kOk;
}

int cmd_generate(const std::vector<std::string>& files, const std::string& out, bool manifestOnly) {
  auto spec = load_spec(files);
  if (!spec) return kSpecErrors;
  auto manifest = diakit::generate_manifest(*spec);
  try {
    std::filesystem::create_directories(out);
    if (!manifestOnly) diakit::generate_stubs(manifest, out);
    diakit::write_manifest(manifest, out);
  } catch (const diakit::GenerateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}

std::map<std::string, diakit::ComponentLogic> builtin_logic(const diakit::CheckedSpec& spec) {
  std::map<std::string, diakit::ComponentLogic> out;
  for (auto& [name, logic] : diakit::newscast_logic())
    if (spec.find_context(name) || spec.find_controller(name)) out.emplace(name, std::move(logic));
  return out;
}

int cmd_simulate(const std::vector<std::string>& files, const std::string& scenarioPath,
                 const std::string& tracePath, std::optional<int> servePort) {
  auto spec = load_spec(files);
  if (!spec) return kSpecErrors;

  nlohmann::json scenarioJson = nlohmann::json::parse(read_file(scenarioPath), nullptr, false);
  if (scenarioJson.is_discarded()) {
    std::cerr << "error: " << scenarioPath << ": not valid JSON\n";
    return kValidation;
  }
  std::unique_ptr<diakit::Simulation> sim;
  try {
    sim = std::make_unique<diakit::Simulation>(spec, builtin_logic(*spec),
                                               diakit::load_scenario(scenarioJson, *spec));
  } catch (const diakit::ScenarioError& e) {
    for (const auto& p : e.problems()) std::cerr << "error: " << scenarioPath << ": " << p << '\n';
    return kValidation;
  } catch (const diakit::RuntimeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }

  int status = kOk;
  auto run = [&](diakit::Simulation::RunOptions options) {
    try {
      sim->run(options);
    } catch (const diakit::RuntimeError& e) {
      std::cerr << "error: tick " << sim->tick() << ": " << e.what() << '\n';
      status = kValidation;
    }
  };

  if (!servePort) {
    run({});
  } else {
    if (*servePort < 0 || *servePort > 65535) {
      std::cerr << "error: invalid port " << *servePort << '\n';
      return kValidation;
    }
    // SIGUSR1 resumes, SIGINT/SIGTERM stop; SIGUSR2 ends the watcher.
    sigset_t set;
    sigemptyset(&set);
    for (int s : {SIGINT, SIGTERM, SIGUSR1, SIGUSR2}) sigaddset(&set, s);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    std::unique_ptr<diakit::Gateway> gateway;
    try {
      gateway = std::make_unique<diakit::Gateway>(*sim, static_cast<std::uint16_t>(*servePort));
    } catch (const diakit::GatewayError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kIo;
    }
    std::cout << "LISTENING " << gateway->port() << std::endl;

    std::thread watcher([&] {
      for (;;) {
        int sig = 0;
        if (sigwait(&set, &sig) != 0) continue;
        if (sig == SIGUSR1) {
          sim->steer(diakit::Resume{});
        } else {
          sim->stop();
          if (sig == SIGUSR2) return;
        }
      }
    });
    auto interval = std::chrono::milliseconds(
        static_cast<std::int64_t>(sim->scenario().tickSeconds * 1000.0));
    run({true, interval});
    pthread_kill(watcher.native_handle(), SIGUSR2);
    watcher.join();
    gateway->stop();
  }

  std::ofstream out(tracePath, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << tracePath << '\n';
    return kIo;
  }
  out << diakit::serialize_trace(sim->trace());
  if (!out.flush()) {
    std::cerr << "error: cannot write " << tracePath << '\n';
    return kIo;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diakit: design-language compiler, runtime and simulator"};
  app.require_subcommand(1);

  std::vector<std::string> files;
  auto* check = app.add_subcommand("check", "Parse and check specification files");
  check->add_option("files", files, "Specification files")->required();

  std::string out;
  bool manifestOnly = false;
  auto* generate = app.add_subcommand("generate", "Generate the framework manifest and stubs");
  generate->add_option("files", files, "Specification files")->required();
  generate->add_option("--out", out, "Output directory")->required();
  generate->add_flag("--manifest-only", manifestOnly, "Write only the manifest");

  std::string scenario, trace;
  std::optional<int> port;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its trace");
  simulate->add_option("files", files, "Specification files")->required();
  simulate->add_option("--scenario", scenario, "Scenario JSON file")->required();
  simulate->add_option("--trace", trace, "Trace output (JSON Lines)")->required();
  simulate->add_option("--serve", port, "Serve the console on this port (0 picks one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*check) return cmd_check(files);
    if (*generate) return cmd_generate(files, out, manifestOnly);
    return cmd_simulate(files, scenario, trace, port);
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.message << '\n';
    return kIo;
  }
}
