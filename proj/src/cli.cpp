#include "ura/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ura/config.hpp"
#include "ura/errors.hpp"
#include "ura/figures.hpp"
#include "ura/self_check.hpp"

namespace ura {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Command {
  std::string verb;
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

class RunDirectory {
 public:
  explicit RunDirectory(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream file(root_ / name, std::ios::binary | std::ios::trunc);
    file << content;
    if (!file) throw ResourceError("cannot write " + (root_ / name).string());
    files_.push_back(name);
  }

  const fs::path& root() const noexcept { return root_; }
  const std::vector<std::string>& files() const noexcept { return files_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

fs::path output_directory(const Command& cmd, const ExperimentConfig& config) {
  if (!cmd.output_dir.empty()) return cmd.output_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("URA_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "ura_out";
}

ExperimentConfig load_config(const Command& cmd) {
  ConfigText text = ConfigText::parse(read_config_source(cmd.config_path));
  for (const auto& assignment : cmd.overrides) text.apply_override(assignment);
  if (cmd.seed) text.set("scenario", "master_seed", std::to_string(*cmd.seed));
  return resolve_config(text);
}

ordered_json seeds_json(const ScenarioConfig& scenario) {
  ordered_json seeds = ordered_json::object();
  for (const auto& [name, value] : derived_seeds(scenario)) seeds[name] = value;
  return seeds;
}

ordered_json run_experiment(const std::string& verb, const ExperimentConfig& config, RunDirectory& dir) {
  const ScenarioConfig& sc = config.scenario;
  ordered_json metrics;
  if (verb == "run") {
    const Simulator sim(sc);
    const auto reports = sim.run_trials();
    std::vector<std::uint64_t> seeds;
    ErrorReport mean;
    for (Index t = 0; t < sc.trials; ++t) seeds.push_back(sim.trial_seed(t));
    for (const auto& r : reports) {
      mean.p_md += r.p_md / static_cast<double>(reports.size());
      mean.p_fa += r.p_fa / static_cast<double>(reports.size());
      mean.overflows += r.overflows;
      mean.detector_failures += r.detector_failures;
    }
    dir.write("trials.csv", trials_csv(reports, seeds));
    metrics = {{"trials", sc.trials},
               {"p_md", mean.p_md},
               {"p_fa", mean.p_fa},
               {"p_e", mean.p_md + mean.p_fa},
               {"overflows", mean.overflows},
               {"detector_failures", mean.detector_failures}};
  } else if (verb == "sweep") {
    if (config.sweep.snr_db.empty()) throw UsageError("sweep needs [sweep] snr_db");
    SweepTable table;
    for (Index m : config.sweep.m_values) {
      for (ChannelMode mode : config.sweep.channel_modes) {
        ScenarioConfig point = sc;
        point.m = m;
        point.channel.m = m;
        point.channel.mode = mode;
        const auto rows = snr_sweep(point, config.sweep.snr_db);
        table.rows.insert(table.rows.end(), rows.begin(), rows.end());
      }
    }
    sort_sweep_rows(table.rows);
    dir.write("sweep.csv", sweep_csv(table.rows));
    dir.write("fig2.csv", emit_figure_data(table, FigureKind::fig2));
    metrics = ordered_json::array();
    for (const auto& r : table.rows)
      metrics.push_back({{"snr_db", r.snr_db},
                         {"m", r.m},
                         {"channel_mode", to_string(r.channel_mode)},
                         {"p_md", r.p_md},
                         {"p_fa", r.p_fa},
                         {"p_e", r.p_e},
                         {"overflows", r.overflows}});
  } else {
    ConvergenceResult result = convergence_experiment(sc, config.convergence.policies, config.convergence.trial);
    ordered_json per_policy = ordered_json::array();
    for (const auto& t : result.traces)
      per_policy.push_back({{"policy", to_string(t.policy)},
                            {"iterations", t.trace.empty() ? 0 : t.trace.back().iteration},
                            {"terminal_e_gamma", t.terminal_e_gamma}});
    thin_traces(result, config.convergence.trace_stride);
    dir.write("convergence.csv", convergence_csv(result));
    dir.write("fig1.csv", emit_figure_data(result, FigureKind::fig1));
    metrics = {{"gamma_true_norm", result.gamma_true.norm()}, {"policies", per_policy}};
  }
  return metrics;
}

int validate(const Command& cmd, std::ostream& out) {
  int failed = 0;
  for (const auto& c : run_self_checks()) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.passed) out << ": " << c.detail;
    out << '\n';
    failed += c.passed ? 0 : 1;
  }
  if (!cmd.config_path.empty()) {
    const ExperimentConfig config = load_config(cmd);
    out << "PASS config " << cmd.config_path << " resolves (snr " << config.scenario.snr_db() << " dB)\n";
  }
  out << (failed == 0 ? "all self checks passed\n" : std::to_string(failed) + " self checks failed\n");
  return failed == 0 ? 0 : 1;
}

int dispatch(const Command& cmd, std::ostream& out) {
  if (cmd.verb == "validate") return validate(cmd, out);

  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config = load_config(cmd);
  RunDirectory dir(output_directory(cmd, config));
  config.output_dir.clear();
  const std::string config_text = write_config(config);

  const ordered_json metrics = run_experiment(cmd.verb, config, dir);
  const ordered_json seeds = seeds_json(config.scenario);

  ordered_json summary;
  summary["verb"] = cmd.verb;
  summary["version"] = URA_VERSION;
  summary["config"] = config_text;
  summary["seeds"] = seeds;
  summary["metrics"] = metrics;
  dir.write("summary.json", summary.dump(2) + "\n");

  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  ordered_json manifest;
  manifest["tool"] = "ura_sim";
  manifest["version"] = URA_VERSION;
  manifest["verb"] = cmd.verb;
  manifest["config"] = config_text;
  manifest["seeds"] = seeds;
  manifest["outputs"] = dir.files();
  manifest["outputs"].push_back("manifest.json");
  manifest["wall_clock_seconds"] = elapsed.count();
  dir.write("manifest.json", manifest.dump(2) + "\n");

  out << cmd.verb << ": wrote " << dir.files().size() << " files to " << dir.root().string() << '\n';
  return 0;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsourced random access over correlated massive MIMO: simulation driver", "ura_sim"};
  app.set_version_flag("--version", URA_VERSION);
  app.require_subcommand(1, 1);

  Command cmd;
  const auto add_common = [&cmd](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("-c,--config", cmd.config_path, "config text or run manifest (.json)");
    if (config_required) opt->required();
    sub->add_option("-o,--out", cmd.output_dir, "output directory");
    sub->add_option("--set", cmd.overrides, "override one value, section.key=value")->take_all();
    sub->add_option("--seed", cmd.seed, "master seed override");
  };
  add_common(app.add_subcommand("run", "Monte Carlo trials at one operating point"), true);
  add_common(app.add_subcommand("sweep", "error rates over an SNR grid"), true);
  add_common(app.add_subcommand("convergence", "estimation error per iteration for each policy"), true);
  add_common(app.add_subcommand("validate", "closed-form self checks, no simulation"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  cmd.verb = app.get_subcommands().front()->get_name();

  try {
    return dispatch(cmd, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidSpec& e) {
    err << "error: invalid specification: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ura
