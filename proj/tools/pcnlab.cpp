#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "pcn/harness.hpp"

using namespace pcn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;

void write_json(const std::string& path, const Json& j) {
  if (path.empty()) return;
  if (path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_lines(const std::string& path, const std::vector<Json>& lines) {
  if (path.empty()) return;
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (path != "-") {
    file.open(path);
    if (!file) throw Error(Errc::InvalidArgument, "cannot write " + path);
    out = &file;
  }
  for (const auto& l : lines) *out << l.dump() << '\n';
}

Json violations_json(const std::vector<Violation>& vs) {
  Json out = Json::array();
  for (const auto& v : vs) out.push_back({{"expectation", v.expectation}, {"witness", v.witness}});
  return out;
}

std::filesystem::path resolve_scenario(const std::string& arg) {
  std::filesystem::path p(arg);
  if (std::filesystem::exists(p)) return p;
  return scenario_directory() / (arg + ".jsonl");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcnlab: payment-channel network simulator"};
  std::string scenario_arg;
  std::string mode_arg;
  std::string schedule_arg = "identity";
  std::string backend_arg = "revealing";
  std::string metrics_path;
  std::string trace_path;
  std::string ledger_path;
  std::string model = "protocol";
  std::size_t max_events = 12;
  std::uint64_t seed = 1;
  bool contested = false;
  bool list = false;

  app.add_option("--scenario", scenario_arg, "scenario file or canned scenario name");
  app.add_option("--mode", mode_arg, "fulgor or rayo (defaults to the scenario header)")
      ->check(CLI::IsMember({"fulgor", "rayo"}));
  app.add_option("--schedule", schedule_arg, "identity, enumerate, seed:N or explicit:a,b,...");
  app.add_option("--proof-backend", backend_arg, "revealing or oracle")
      ->check(CLI::IsMember({"revealing", "oracle"}));
  app.add_option("--metrics", metrics_path, "write metrics JSON here ('-' for stdout)");
  app.add_option("--trace", trace_path, "write the message trace as JSON lines");
  app.add_option("--ledger", ledger_path, "write the ledger as JSON lines");
  app.add_option("--max-events", max_events, "reorderable-event bound for enumeration");
  app.add_option("--model", model, "protocol or ideal")->check(CLI::IsMember({"protocol", "ideal"}));
  app.add_option("--seed", seed, "simulation seed");
  app.add_flag("--contested", contested, "publish fulfilments on the ledger");
  app.add_flag("--list", list, "list canned scenarios");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& name : canned_scenarios()) std::cout << name << '\n';
    return kExitOk;
  }
  if (scenario_arg.empty()) {
    std::cerr << "--scenario is required\n";
    return kExitUsage;
  }

  try {
    const Scenario scenario = Scenario::load(resolve_scenario(scenario_arg));
    RunOptions options;
    options.mode = !mode_arg.empty() ? parse_mode(mode_arg) : scenario.mode.value_or(Mode::Fulgor);
    options.proof_backend = parse_proof_backend(backend_arg);
    options.seed = seed;
    options.contested_settlement = contested;

    std::vector<Violation> violations;
    Json metrics;

    if (scenario.contract == ContractKind::Dltc) {
      Metrics m = run_dltc_scenario(scenario, test_group(), seed);
      m.mode = options.mode;
      violations = check_metric_expectations(scenario, m);
      metrics = m.to_json();
      metrics["contract"] = "dltc";
    } else if (model == "ideal") {
      Metrics m = run_ideal(scenario, options.mode);
      violations = check_metric_expectations(scenario, m);
      metrics = m.to_json();
    } else if (schedule_arg == "enumerate") {
      std::map<std::string, std::size_t> outcomes;
      std::optional<Json> first;
      std::size_t run_index = 0;
      const Exploration ex = explore(scenario, options, max_events, [&](const Simulator& sim) {
        Metrics m = collect_metrics(sim);
        std::string key;
        for (const auto& p : m.payments) key += (key.empty() ? "" : ",") + p.status;
        ++outcomes[key];
        if (!first) first = m.to_json();
        for (auto& v : check_expectations(scenario, sim)) {
          v.witness += " [schedule " + sim.schedule().describe() + "]";
          violations.push_back(v);
        }
        for (const auto& d : sim.divergences()) violations.push_back({"replica agreement", d});
        ++run_index;
      });
      metrics = {{"model", "protocol"},     {"mode", mode_name(options.mode)}, {"schedule", "enumerate"},
                 {"runs", ex.runs},          {"exhaustive", ex.exhaustive},    {"outcomes", outcomes},
                 {"first", first.value_or(Json{})}};
      if (!ex.warning.empty()) {
        metrics["warning"] = ex.warning;
        std::cerr << ex.warning << '\n';
      }
    } else {
      auto sim = build_simulator(scenario, options, Schedule::parse(schedule_arg));
      sim->run();
      violations = check_expectations(scenario, *sim);
      for (const auto& d : sim->divergences()) violations.push_back({"replica agreement", d});
      metrics = collect_metrics(*sim).to_json();
      write_lines(trace_path, sim->trace());
      if (!ledger_path.empty()) {
        std::ofstream out(ledger_path);
        sim->chain().ledger().dump_jsonl(out);
      }
    }

    metrics["scenario"] = scenario.name;
    metrics["violations"] = violations_json(violations);
    write_json(metrics_path, metrics);
    if (!violations.empty()) {
      std::cerr << "property violation in " << scenario.name << ":\n";
      for (const auto& v : violations) std::cerr << "  " << v.expectation << "\n    witness: " << v.witness << '\n';
      return kExitViolation;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << errc_name(e.code()) << ": " << e.what() << '\n';
    return kExitUsage;
  }
}
