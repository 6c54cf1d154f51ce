#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tagcode/config.hpp"
#include "tagcode/criteria.hpp"
#include "tagcode/error.hpp"
#include "tagcode/experiments.hpp"
#include "tagcode/io.hpp"
#include "tagcode/rng.hpp"

namespace fs = std::filesystem;
using namespace tagcode;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string scale;
  std::string out_dir = ".";
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Configuration file (INI)");
  cmd->add_option("--seed", f.seed, "Global seed (overrides the config)");
  cmd->add_option("--scale", f.scale, "Preset sizes for grid/trials/arrays")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--out-dir", f.out_dir, "Directory for outputs");
  cmd->add_flag("-v,--verbose", f.verbose, "Progress messages on stderr");
}

ScenarioConfig resolve_config(const CommonFlags& f) {
  ScenarioConfig c = f.config_path.empty() ? ScenarioConfig{} : load_config(f.config_path);
  if (f.scale == "paper") apply_scale(c, Scale::Paper);
  if (f.scale == "desk") apply_scale(c, Scale::Desk);
  if (f.seed) c.seed = *f.seed;
  c.validate();
  return c;
}

ProgressFn progress(const CommonFlags& f) {
  if (!f.verbose) return {};
  return [](const std::string& msg) { std::cerr << msg << "\n"; };
}

class Run {
 public:
  Run(std::string subcommand, const CommonFlags& flags, const ScenarioConfig& config)
      : out_(flags.out_dir) {
    fs::create_directories(out_);
    m_.subcommand = std::move(subcommand);
    m_.tool_version = tool_version();
    m_.config_hash = config_hash(config);
    m_.seeds["global"] = config.seed;
    m_.seeds["grid"] = derive_seed(config.seed, "grid");
    m_.seeds["design"] = derive_seed(config.seed, "design");
    m_.started = std::chrono::system_clock::now();
  }

  fs::path write(const std::string& name, const std::string& content) {
    const fs::path p = out_ / name;
    atomic_write(p, content);
    m_.outputs.push_back(p.string());
    return p;
  }

  RunManifest& manifest() { return m_; }

  void finish() {
    m_.finished = std::chrono::system_clock::now();
    atomic_write(out_ / ("manifest_" + m_.subcommand + ".json"), manifest_json(m_));
  }

 private:
  fs::path out_;
  RunManifest m_;
};

CodeMetadata metadata_for(const MethodCode& mc, const ScenarioConfig& c, double sigma) {
  CodeMetadata meta;
  meta.method = std::string(method_name(mc.method));
  meta.length = mc.code.length();
  meta.tag_count = mc.code.tag_count();
  meta.design_snr_db = c.eval_snr_db;
  meta.sigma = sigma;
  meta.seed = c.seed;
  meta.config_hash = config_hash(c);
  if (mc.design) {
    meta.proportions = mc.design->proportions.weights();
    meta.objective = mc.design->objective;
    meta.rounded_objective = mc.design->rounded_objective;
    meta.iterations = mc.design->iterations;
    meta.converged = mc.design->converged;
    meta.selected = mc.design->selected;
  }
  return meta;
}

int cmd_design(const CommonFlags& f) {
  const ScenarioConfig c = resolve_config(f);
  Run run("design", f, c);
  const Scenario sc = prepare_scenario(c, 0, {ChannelOptions{c.multipath, 1.0}, {}});
  const PairDistanceTable pairs = design_pair_table(c, sc, sc.table);
  const double sigma = NoiseModel(c.eval_snr_db, c.geometry.antennas).sigma();
  for (const Method m : all_methods()) {
    const MethodCode mc = design_for_method(m, c, pairs, sigma);
    const std::string name(method_name(m));
    run.write(name + ".code", code_to_string(mc.code));
    run.write(name + ".meta.json", code_metadata_json(metadata_for(mc, c, sigma)));
    std::cout << name << ": U " << format_number(average_upper_bound(proportions_of(mc.code),
                                                                     c.code_length, pairs, sigma))
              << " V "
              << format_number(
                     worst_lower_bound(proportions_of(mc.code), c.code_length, pairs, sigma))
              << "\n";
  }
  run.finish();
  return 0;
}

int cmd_evaluate(const CommonFlags& f, const std::string& code_path, std::optional<double> snr,
                 bool per_orientation) {
  const ScenarioConfig c = resolve_config(f);
  std::ifstream in(code_path);
  if (!in) throw ConfigError("cannot open code file '" + code_path + "'", 0);
  const Code code = read_code(in);
  if (static_cast<std::size_t>(code.tag_count()) != c.geometry.tags)
    throw InvalidArgument("code has " + std::to_string(code.tag_count()) +
                          " rows but the geometry has " + std::to_string(c.geometry.tags) +
                          " tags");
  Run run("evaluate", f, c);
  const double snr_db = snr.value_or(c.eval_snr_db);
  const Scenario sc = prepare_scenario(c, 0, {ChannelOptions{c.multipath, 1.0}, {}});
  SimulationOptions so;
  so.trials = c.trials;
  so.seed = derive_seed(c.seed, "noise", {0});
  so.loss = c.loss;
  so.threads = c.threads;
  run.manifest().seeds["noise"] = so.seed;
  const ErrorReport r =
      simulate(sc.table, code, sc.grid, NoiseModel(snr_db, c.geometry.antennas), so);
  const std::string stem = fs::path(code_path).stem().string();
  run.write("evaluate_" + stem + ".json", report_json(r, per_orientation));
  std::cout << "average " << format_number(r.average) << " worst " << format_number(r.worst)
            << " average_se " << format_number(r.average_se) << " misdecode_rate "
            << format_number(r.misdecode_rate) << "\n";
  run.finish();
  return 0;
}

int cmd_sweep(const CommonFlags& f) {
  const ScenarioConfig c = resolve_config(f);
  Run run("sweep", f, c);
  const auto rows = run_snr_sweep(c, progress(f));
  const auto p = run.write("sweep.csv", sweep_csv(rows, config_hash(c)));
  std::cout << p.string() << "\n";
  run.finish();
  return 0;
}

int cmd_arrays(const CommonFlags& f, std::optional<std::size_t> arrays) {
  ScenarioConfig c = resolve_config(f);
  if (arrays) c.arrays = *arrays;
  c.validate();
  Run run("arrays", f, c);
  const auto recs = run_random_array_study(c, c.arrays, progress(f));
  std::size_t skipped = 0;
  for (const auto& r : recs) skipped += r.skipped ? 1 : 0;
  run.manifest().notes["skipped_arrays"] = std::to_string(skipped);
  const auto p = run.write("histogram.csv", histogram_csv(recs, c.seed, config_hash(c)));
  run.write("array_errors.csv", array_errors_csv(recs, c.seed, config_hash(c)));
  std::cout << p.string() << "\n";
  run.finish();
  return 0;
}

int cmd_multipath(const CommonFlags& f) {
  const ScenarioConfig c = resolve_config(f);
  Run run("multipath", f, c);
  const auto rows = run_multipath_study(c, progress(f));
  const auto p = run.write("multipath.csv", multipath_csv(rows, c.seed, config_hash(c)));
  std::cout << p.string() << "\n";
  run.finish();
  return 0;
}

int cmd_robustness(const CommonFlags& f) {
  const ScenarioConfig c = resolve_config(f);
  Run run("robustness", f, c);
  const auto rows = run_robustness_study(c, progress(f));
  const auto p = run.write("robustness.csv", robustness_csv(rows, config_hash(c)));
  std::cout << p.string() << "\n";
  run.finish();
  return 0;
}

int cmd_bound(const CommonFlags& f, const std::string& code_path, std::optional<double> snr) {
  const ScenarioConfig c = resolve_config(f);
  Code code = orthogonal_code(static_cast<int>(c.geometry.tags), c.code_length);
  if (!code_path.empty()) {
    std::ifstream in(code_path);
    if (!in) throw ConfigError("cannot open code file '" + code_path + "'", 0);
    code = read_code(in);
  }
  Run run("bound", f, c);
  const Scenario sc = prepare_scenario(c, 0, {ChannelOptions{c.multipath, 1.0}, {}});
  const double snr_db = snr.value_or(c.eval_snr_db);
  const double sigma = NoiseModel(snr_db, c.geometry.antennas).sigma();
  const LeCamBound b = lecam_bound(sc.geometry, code, c.reflectivity, sigma);
  run.manifest().notes["bound"] = format_number(b.value);
  run.manifest().notes["optimal_delta"] = format_number(b.optimal_delta);
  run.manifest().notes["delta_feasible"] = b.delta_feasible ? "true" : "false";
  run.manifest().notes["snr_db"] = format_number(snr_db);
  std::cout << format_number(b.value) << "\n";
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orientation-sensing code design and Monte Carlo studies", "tagcode"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  CommonFlags flags;
  std::string code_path;
  std::optional<double> snr;
  std::optional<std::size_t> arrays;
  bool per_orientation = false;

  auto* design = app.add_subcommand("design", "Write code files for all four methods");
  auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo error report for a code file");
  auto* sweep = app.add_subcommand("sweep", "Average and worst error versus SNR");
  auto* arr = app.add_subcommand("arrays", "Error ratios over seeded random tag placements");
  auto* mp = app.add_subcommand("multipath", "Line of sight versus multipath errors");
  auto* rob = app.add_subcommand("robustness", "Designs from noisy channel estimates");
  auto* bound = app.add_subcommand("bound", "Closed-form worst-case lower bound");
  for (auto* cmd : {design, evaluate, sweep, arr, mp, rob, bound}) add_common(cmd, flags);
  evaluate->add_option("--code", code_path, "Code file")->required();
  evaluate->add_option("--snr", snr, "Evaluation SNR in dB (default: config eval_snr_db)");
  evaluate->add_flag("--per-orientation", per_orientation, "Include per-orientation statistics");
  arr->add_option("--arrays", arrays, "Number of random arrays (default: config)");
  bound->add_option("--code", code_path, "Code file (default: orthogonal code)");
  bound->add_option("--snr", snr, "SNR in dB (default: config eval_snr_db)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*design) return cmd_design(flags);
    if (*evaluate) return cmd_evaluate(flags, code_path, snr, per_orientation);
    if (*sweep) return cmd_sweep(flags);
    if (*arr) return cmd_arrays(flags, arrays);
    if (*mp) return cmd_multipath(flags);
    if (*rob) return cmd_robustness(flags);
    if (*bound) return cmd_bound(flags, code_path, snr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
