#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ura/system_sim.hpp"

namespace ura {

/// Grid of a `sweep` experiment. Every (m, channel mode) pair gets the full SNR grid.
struct SweepPlan {
  std::vector<double> snr_db;
  std::vector<Index> m_values;
  std::vector<ChannelMode> channel_modes;
};

struct ConvergencePlan {
  std::vector<Policy> policies{Policy::bla, Policy::random};
  Index trace_stride = 1;  ///< keep every n-th iteration in the CSV outputs
  Index trial = 0;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  SweepPlan sweep;
  ConvergencePlan convergence;
  std::string output_dir;
};

/// Raw `[section]` / `key = value` store with the line each value came from.
/// Comments start with '#' or ';'. Keys are checked against the known schema.
class ConfigText {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigText parse(std::string_view text);

  /// `section.key=value`; unknown keys are rejected.
  void apply_override(std::string_view assignment);
  void set(const std::string& section, const std::string& key, std::string value, int line = 0);

  const Entry* find(const std::string& section, const std::string& key) const;

  using Section = std::map<std::string, Entry>;
  const std::map<std::string, Section>& sections() const noexcept { return sections_; }

 private:
  std::map<std::string, Section> sections_;
};

/// Typed, validated configuration; derived seeds are filled in from
/// scenario.master_seed when the text leaves them out. Throws ParseError, or
/// InvalidSpec for an infeasible tree-code profile.
ExperimentConfig resolve_config(const ConfigText& text);

ExperimentConfig parse_config(std::string_view text);

/// Fully resolved text form; parse_config(write_config(c)) reproduces c.
std::string write_config(const ExperimentConfig& config);

/// Reads a config file, or the `config` member of a run manifest (*.json).
std::string read_config_source(const std::filesystem::path& path);

/// Named stream seeds actually used by a scenario, for run manifests.
std::vector<std::pair<std::string, std::uint64_t>> derived_seeds(const ScenarioConfig& scenario);

}  // namespace ura
