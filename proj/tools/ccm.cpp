#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ccm/dataset.hpp"
#include "ccm/errors.hpp"
#include "ccm/report.hpp"
#include "ccm/simulate.hpp"

namespace {

// 0 = complete report, 1 = unexpected failure, 2 = input problem,
// 3 = denominator gate failure, 4 = singular model
constexpr int exit_ok = 0;
constexpr int exit_unexpected = 1;
constexpr int exit_input = 2;
constexpr int exit_gate = 3;
constexpr int exit_singular = 4;

std::uint64_t draw_entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::uint64_t settle_seed(bool seed_given, std::uint64_t seed) {
  if (seed_given) return seed;
  const std::uint64_t drawn = draw_entropy_seed();
  std::cerr << "seed: " << drawn << " (drawn from system entropy; pass --seed " << drawn
            << " to reproduce this run)\n";
  return drawn;
}

struct EstimateArgs {
  std::string input;
  std::string t1 = "t1", t2 = "t2", m = "m", y = "y";
  std::string delimiter = "comma";
  double alpha = 0.05;
  int boot = 2000;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string interaction = "auto";
  bool stratified = false;
  std::string ci = "percentile";
  std::string format = "json";
  bool force = false;
};

struct SimulateArgs {
  std::string config;
  std::string preset;
  int reps = 100;
  int boot = 1000;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir = ".";
};

void add_common_estimate_flags(CLI::App* cmd, EstimateArgs& a) {
  cmd->add_option("--input", a.input, "delimited data file with a header row")->required();
  cmd->add_option("--t1", a.t1, "column holding the first treatment indicator");
  cmd->add_option("--t2", a.t2, "column holding the second treatment indicator");
  cmd->add_option("--m", a.m, "column holding the mediator");
  cmd->add_option("--y", a.y, "column holding the outcome");
  cmd->add_option("--delimiter", a.delimiter, "field delimiter")
      ->check(CLI::IsMember({"comma", "tab"}));
  cmd->add_option("--alpha", a.alpha, "level for intervals, gates, and tests");
  cmd->add_option("--boot", a.boot, "bootstrap resamples");
  cmd->add_option("--seed", a.seed, "master seed (omit to draw one from system entropy)")
      ->trigger_on_parse()
      ->each([&a](const std::string&) { a.seed_given = true; });
  cmd->add_option("--interaction", a.interaction,
                  "outcome-model form: test-then-choose, force on, or force off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  cmd->add_flag("--stratified", a.stratified, "resample within arms instead of whole rows");
  cmd->add_option("--format", a.format, "output format")
      ->check(CLI::IsMember({"json", "text"}));
}

ccm::EstimateOptions to_options(const EstimateArgs& a) {
  ccm::EstimateOptions opt;
  opt.input_file = a.input;
  opt.columns = ccm::ColumnMap{a.t1, a.t2, a.m, a.y};
  opt.delimiter = a.delimiter == "tab" ? '\t' : ',';
  opt.alpha = a.alpha;
  opt.b_reps = a.boot;
  opt.seed = settle_seed(a.seed_given, a.seed);
  opt.interaction = a.interaction == "auto" ? ccm::InteractionChoice::auto_detect
                    : a.interaction == "on" ? ccm::InteractionChoice::on
                                            : ccm::InteractionChoice::off;
  opt.stratified = a.stratified;
  opt.ci_method = a.ci == "delta" ? ccm::CiMethod::delta : ccm::CiMethod::percentile;
  opt.force = a.force;
  return opt;
}

int cmd_estimate(const EstimateArgs& a) {
  const ccm::EstimateOptions opt = to_options(a);
  const ccm::Dataset d = ccm::load_dataset_file(a.input, opt.columns, opt.delimiter);
  const ccm::RunReport report = ccm::run_estimate(d, opt);
  if (a.format == "text")
    std::cout << ccm::render_text(report);
  else
    std::cout << ccm::to_json(report).dump(2) << "\n";
  return exit_ok;
}

int cmd_diagnose(const EstimateArgs& a) {
  const ccm::EstimateOptions opt = to_options(a);
  const ccm::Dataset d = ccm::load_dataset_file(a.input, opt.columns, opt.delimiter);
  const ccm::DiagnoseReport report = ccm::run_diagnose(d, opt);
  if (a.format == "text")
    std::cout << ccm::render_text(report);
  else
    std::cout << ccm::to_json(report).dump(2) << "\n";
  return exit_ok;
}

nlohmann::ordered_json spec_json(const ccm::NormalSpec& s) {
  return nlohmann::ordered_json{{"mean", s.mean}, {"var", s.var}};
}

nlohmann::ordered_json config_json(const ccm::SimulationConfig& c) {
  nlohmann::ordered_json j{{"n_per_arm", c.n_per_arm},
                           {"seed", c.seed},
                           {"pi", spec_json(c.pi)},
                           {"lambda", spec_json(c.lambda)},
                           {"alpha1", spec_json(c.alpha1)},
                           {"alpha2", spec_json(c.alpha2)},
                           {"beta", spec_json(c.beta)},
                           {"delta1", spec_json(c.delta1)},
                           {"delta2", spec_json(c.delta2)},
                           {"psi", spec_json(c.psi)},
                           {"phi", spec_json(c.phi)},
                           {"x_range", nlohmann::ordered_json::array({c.x_lo, c.x_hi})}};
  if (c.interactions)
    j["interactions"] = nlohmann::ordered_json{{"gamma1", spec_json(c.interactions->gamma1)},
                                               {"gamma2", spec_json(c.interactions->gamma2)}};
  else
    j["interactions"] = nullptr;
  return j;
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.config.empty() == a.preset.empty())
    throw std::invalid_argument("pass exactly one of --config and --preset");

  ccm::SimulationConfig cfg;
  bool config_sets_seed = false;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ccm::SchemaError("cannot open config file: " + a.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ccm::SchemaError(std::string("config: ") + e.what());
    }
    cfg = ccm::parse_simulation_config(j);
    config_sets_seed = j.contains("seed");
  } else {
    cfg = a.preset == "paper-figD1" ? ccm::preset_interacted() : ccm::preset_no_interaction();
  }

  const std::uint64_t master = settle_seed(a.seed_given, a.seed);
  if (!config_sets_seed) cfg.seed = master;

  const ccm::McSummary summary = ccm::monte_carlo(cfg, a.reps, a.boot, master);

  nlohmann::ordered_json out;
  out["kind"] = "simulation";
  out["options"] = nlohmann::ordered_json{
      {"preset", a.preset.empty() ? nlohmann::ordered_json(nullptr)
                                  : nlohmann::ordered_json(a.preset)},
      {"config_file", a.config.empty() ? nlohmann::ordered_json(nullptr)
                                       : nlohmann::ordered_json(a.config)},
      {"reps", a.reps},
      {"boot", a.boot},
      {"seed", master}};
  out["config"] = config_json(cfg);
  nlohmann::ordered_json body = ccm::to_json(summary);
  for (auto it = body.begin(); it != body.end(); ++it)
    if (it.key() != "kind") out[it.key()] = std::move(it.value());

  std::filesystem::create_directories(a.out_dir);
  const auto summary_path = std::filesystem::path(a.out_dir) / "summary.json";
  const auto table_path = std::filesystem::path(a.out_dir) / "replicates.csv";
  {
    std::ofstream f(summary_path);
    if (!f) throw ccm::SchemaError("cannot write " + summary_path.string());
    f << out.dump(2) << "\n";
  }
  {
    std::ofstream f(table_path);
    if (!f) throw ccm::SchemaError("cannot write " + table_path.string());
    ccm::write_replicate_table(f, summary);
  }
  std::cout << out.dump(2) << "\n";
  std::cerr << "wrote " << summary_path.string() << " and " << table_path.string() << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comparative causal mediation for three-arm randomized experiments"};
  app.require_subcommand(1);

  EstimateArgs est_args;
  CLI::App* est = app.add_subcommand("estimate", "estimate the comparative ratios from a data file");
  add_common_estimate_flags(est, est_args);
  est->add_option("--ci", est_args.ci, "interval construction for the ratio estimands")
      ->check(CLI::IsMember({"percentile", "delta"}));
  est->add_flag("--force", est_args.force,
                "emit estimates even when a denominator gate fails (marked unreliable)");

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "run a Monte Carlo study and write summary files");
  CLI::Option* oc = sim->add_option("--config", sim_args.config, "simulation config file (json)");
  CLI::Option* op = sim->add_option("--preset", sim_args.preset, "built-in study preset")
                        ->check(CLI::IsMember({"paper-fig1", "paper-figD1"}));
  oc->excludes(op);
  op->excludes(oc);
  sim->add_option("--reps", sim_args.reps, "Monte Carlo replicates");
  sim->add_option("--boot", sim_args.boot, "bootstrap resamples per replicate");
  sim->add_option("--seed", sim_args.seed, "master seed (omit to draw one from system entropy)")
      ->trigger_on_parse()
      ->each([&sim_args](const std::string&) { sim_args.seed_given = true; });
  sim->add_option("--out-dir", sim_args.out_dir, "directory for summary.json and replicates.csv");

  EstimateArgs diag_args;
  CLI::App* diag = app.add_subcommand(
      "diagnose", "run validation, gates, interaction test, and the conservatism check");
  add_common_estimate_flags(diag, diag_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_input;
  }

  try {
    if (est->parsed()) return cmd_estimate(est_args);
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (diag->parsed()) return cmd_diagnose(diag_args);
    std::cerr << "error: no subcommand\n";
    return exit_input;
  } catch (const ccm::GateError& e) {
    std::cerr << "gate failure: " << e.what() << "\n";
    return exit_gate;
  } catch (const ccm::SingularModelError& e) {
    std::cerr << "singular model: " << e.what() << "\n";
    return exit_singular;
  } catch (const ccm::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_input;
  } catch (const ccm::SchemaError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_input;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_unexpected;
  }
}
