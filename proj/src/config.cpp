#include "ura/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ura/errors.hpp"
#include "ura/format.hpp"

namespace ura {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> kSchema{
      {"scenario",
       {"k_tot", "k_a", "m", "d", "n_k", "g", "snr_db", "sigma2", "trials", "master_seed", "workers",
        "codebook_normalized"}},
      {"treecode", {"j", "s", "w", "profile", "parity_seed", "max_paths"}},
      {"channel", {"mode", "m", "n_k", "rho_r", "rho_t", "rician_k", "seed"}},
      {"detector", {"q_total", "q_mod", "zeta", "zeta_relative", "policy", "sigma2", "resync_period"}},
      {"sweep", {"snr_db", "m_values", "channel_modes"}},
      {"convergence", {"policies", "trace_stride", "trial"}},
      {"output", {"dir"}},
  };
  return kSchema;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

void check_known(const std::string& section, const std::string& key, int line) {
  const auto it = schema().find(section);
  if (it == schema().end()) throw ParseError(line, section, "unknown section");
  if (!it->second.contains(key)) throw ParseError(line, section + "." + key, "unknown key");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Typed reads from one section with line-aware diagnostics.
class Reader {
 public:
  Reader(const ConfigText& text, std::string section) : text_(text), section_(std::move(section)) {}

  bool has(const std::string& key) const { return text_.find(section_, key) != nullptr; }

  template <class T>
  T get(const std::string& key) const {
    const auto* e = entry(key);
    return convert<T>(e->value, e->line, key);
  }

  template <class T>
  T get_or(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  template <class T>
  std::vector<T> list(const std::string& key) const {
    const auto* e = entry(key);
    std::vector<T> out;
    for (const auto& item : split_list(e->value)) out.push_back(convert<T>(item, e->line, key));
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto* e = text_.find(section_, key);
    throw ParseError(e != nullptr ? e->line : 0, section_ + "." + key, what);
  }

 private:
  const ConfigText::Entry* entry(const std::string& key) const {
    const auto* e = text_.find(section_, key);
    if (e == nullptr) throw ParseError(0, section_ + "." + key, "required key is missing");
    return e;
  }

  template <class T>
  T convert(const std::string& v, int line, const std::string& key) const {
    const std::string field = section_ + "." + key;
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw ParseError(line, field, "expected true|false, got '" + v + "'");
    } else if constexpr (std::is_same_v<T, double>) {
      double out = 0.0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || ptr != v.data() + v.size())
        throw ParseError(line, field, "expected a number, got '" + v + "'");
      return out;
    } else if constexpr (std::is_same_v<T, ChannelMode>) {
      try {
        return parse_channel_mode(v);
      } catch (const InvalidParameter& e) {
        throw ParseError(line, field, e.what());
      }
    } else if constexpr (std::is_same_v<T, Policy>) {
      try {
        return parse_policy(v);
      } catch (const InvalidParameter& e) {
        throw ParseError(line, field, e.what());
      }
    } else {
      T out{};
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || ptr != v.data() + v.size())
        throw ParseError(line, field, "expected an integer, got '" + v + "'");
      return out;
    }
  }

  const ConfigText& text_;
  std::string section_;
};

template <class T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ",";
    if constexpr (std::is_same_v<T, double>) out += format_double(items[i]);
    else if constexpr (std::is_same_v<T, ChannelMode> || std::is_same_v<T, Policy>) out += to_string(items[i]);
    else out += std::to_string(items[i]);
  }
  return out;
}

}  // namespace

ConfigText ConfigText::parse(std::string_view text) {
  ConfigText out;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "", "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!schema().contains(section)) throw ParseError(line_no, section, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "", "expected key = value");
    if (section.empty()) throw ParseError(line_no, "", "key outside of any section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    check_known(section, key, line_no);
    if (out.find(section, key) != nullptr) throw ParseError(line_no, section + "." + key, "duplicate key");
    out.sections_[section][key] = Entry{value, line_no};
  }
  return out;
}

void ConfigText::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
    throw ParseError(0, std::string(assignment), "override must look like section.key=value");
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  check_known(section, key, 0);
  set(section, key, trim(assignment.substr(eq + 1)));
}

void ConfigText::set(const std::string& section, const std::string& key, std::string value, int line) {
  check_known(section, key, line);
  sections_[section][key] = Entry{std::move(value), line};
}

const ConfigText::Entry* ConfigText::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

ExperimentConfig resolve_config(const ConfigText& text) {
  ExperimentConfig cfg;
  ScenarioConfig& sc = cfg.scenario;

  const Reader scenario(text, "scenario");
  sc.k_a = scenario.get<Index>("k_a");
  sc.k_tot = scenario.get_or<Index>("k_tot", 0);
  sc.m = scenario.get<Index>("m");
  sc.d = scenario.get<Index>("d");
  sc.n_k = scenario.get_or<Index>("n_k", 1);
  sc.sigma2 = scenario.get_or<double>("sigma2", 1.0);
  sc.trials = scenario.get_or<Index>("trials", 1);
  sc.master_seed = scenario.get_or<std::uint64_t>("master_seed", 0);
  sc.workers = scenario.get_or<Index>("workers", 1);
  sc.codebook_normalized = scenario.get_or<bool>("codebook_normalized", false);
  if (scenario.has("g") == scenario.has("snr_db"))
    scenario.fail(scenario.has("g") ? "g" : "snr_db", "give exactly one of g and snr_db");
  if (scenario.has("g")) sc.g = scenario.get<double>("g");
  else sc.set_snr_db(scenario.get<double>("snr_db"));

  const Reader tree(text, "treecode");
  sc.tree.j = tree.get<int>("j");
  sc.tree.profile = tree.list<int>("profile");
  sc.tree.s = tree.get_or<int>("s", static_cast<int>(sc.tree.profile.size()));
  int profile_sum = 0;
  for (int ws : sc.tree.profile) profile_sum += ws;
  sc.tree.w = tree.get_or<int>("w", profile_sum);
  sc.tree.parity_seed =
      tree.get_or<std::uint64_t>("parity_seed", derive_seed(sc.master_seed, Stream::parity));
  sc.max_paths = tree.get_or<std::size_t>("max_paths", kDefaultMaxPaths);
  sc.tree.validate();

  const Reader channel(text, "channel");
  sc.channel.mode = channel.get_or<ChannelMode>("mode", ChannelMode::iid);
  sc.channel.m = channel.get_or<Index>("m", sc.m);
  sc.channel.n_k = channel.get_or<Index>("n_k", sc.n_k);
  if (sc.channel.m != sc.m) channel.fail("m", "channel M differs from scenario.m");
  if (sc.channel.n_k != sc.n_k) channel.fail("n_k", "channel N_k differs from scenario.n_k");
  sc.channel.rho_r = channel.get_or<double>("rho_r", 0.0);
  sc.channel.rho_t = channel.get_or<double>("rho_t", 0.0);
  sc.channel.rician_k = channel.get_or<double>("rician_k", 0.0);
  sc.channel.seed = channel.get_or<std::uint64_t>("seed", derive_seed(sc.master_seed, Stream::channel));

  const Reader det(text, "detector");
  sc.detector.q_total = det.get<Index>("q_total");
  sc.detector.q_mod = det.get<Index>("q_mod");
  sc.detector.policy = det.get_or<Policy>("policy", Policy::bla);
  sc.detector.sigma2 = det.get_or<double>("sigma2", sc.sigma2);
  sc.detector.resync_period = det.get_or<Index>("resync_period", 10000);
  if (det.has("zeta") == det.has("zeta_relative"))
    det.fail(det.has("zeta") ? "zeta" : "zeta_relative", "give exactly one of zeta and zeta_relative");
  if (det.has("zeta")) sc.detector.zeta = det.get<double>("zeta");
  else sc.zeta_relative = det.get<double>("zeta_relative");

  const Reader sweep(text, "sweep");
  if (sweep.has("snr_db")) cfg.sweep.snr_db = sweep.list<double>("snr_db");
  cfg.sweep.m_values = sweep.has("m_values") ? sweep.list<Index>("m_values") : std::vector<Index>{sc.m};
  cfg.sweep.channel_modes = sweep.has("channel_modes") ? sweep.list<ChannelMode>("channel_modes")
                                                       : std::vector<ChannelMode>{sc.channel.mode};

  const Reader conv(text, "convergence");
  if (conv.has("policies")) cfg.convergence.policies = conv.list<Policy>("policies");
  cfg.convergence.trace_stride = conv.get_or<Index>("trace_stride", 1);
  cfg.convergence.trial = conv.get_or<Index>("trial", 0);
  if (cfg.convergence.trace_stride < 1) conv.fail("trace_stride", "must be >= 1");

  cfg.output_dir = Reader(text, "output").get_or<std::string>("dir", "");

  try {
    sc.validate();
  } catch (const InvalidParameter& e) {
    throw ParseError(0, "", e.what());
  }
  return cfg;
}

ExperimentConfig parse_config(std::string_view text) { return resolve_config(ConfigText::parse(text)); }

std::string write_config(const ExperimentConfig& config) {
  const ScenarioConfig& sc = config.scenario;
  std::ostringstream out;
  out << "[scenario]\n"
      << "k_tot = " << sc.k_tot << "\n"
      << "k_a = " << sc.k_a << "\n"
      << "m = " << sc.m << "\n"
      << "d = " << sc.d << "\n"
      << "n_k = " << sc.n_k << "\n"
      << "g = " << format_double(sc.g) << "\n"
      << "sigma2 = " << format_double(sc.sigma2) << "\n"
      << "trials = " << sc.trials << "\n"
      << "master_seed = " << sc.master_seed << "\n"
      << "workers = " << sc.workers << "\n"
      << "codebook_normalized = " << (sc.codebook_normalized ? "true" : "false") << "\n\n";
  out << "[treecode]\n"
      << "j = " << sc.tree.j << "\n"
      << "s = " << sc.tree.s << "\n"
      << "w = " << sc.tree.w << "\n"
      << "profile = " << join(sc.tree.profile) << "\n"
      << "parity_seed = " << sc.tree.parity_seed << "\n"
      << "max_paths = " << sc.max_paths << "\n\n";
  out << "[channel]\n"
      << "mode = " << to_string(sc.channel.mode) << "\n"
      << "m = " << sc.m << "\n"
      << "n_k = " << sc.n_k << "\n"
      << "rho_r = " << format_double(sc.channel.rho_r) << "\n"
      << "rho_t = " << format_double(sc.channel.rho_t) << "\n"
      << "rician_k = " << format_double(sc.channel.rician_k) << "\n"
      << "seed = " << sc.channel.seed << "\n\n";
  out << "[detector]\n"
      << "q_total = " << sc.detector.q_total << "\n"
      << "q_mod = " << sc.detector.q_mod << "\n";
  if (sc.zeta_relative) out << "zeta_relative = " << format_double(*sc.zeta_relative) << "\n";
  else out << "zeta = " << format_double(sc.detector.zeta) << "\n";
  out << "policy = " << to_string(sc.detector.policy) << "\n"
      << "sigma2 = " << format_double(sc.detector.sigma2) << "\n"
      << "resync_period = " << sc.detector.resync_period << "\n\n";
  out << "[sweep]\n";
  if (!config.sweep.snr_db.empty()) out << "snr_db = " << join(config.sweep.snr_db) << "\n";
  out << "m_values = " << join(config.sweep.m_values) << "\n"
      << "channel_modes = " << join(config.sweep.channel_modes) << "\n\n";
  out << "[convergence]\n"
      << "policies = " << join(config.convergence.policies) << "\n"
      << "trace_stride = " << config.convergence.trace_stride << "\n"
      << "trial = " << config.convergence.trial << "\n";
  if (!config.output_dir.empty()) out << "\n[output]\ndir = " << config.output_dir << "\n";
  return out.str();
}

std::string read_config_source(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (path.extension() != ".json") return ss.str();

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, path.string(), std::string("bad manifest: ") + e.what());
  }
  if (!manifest.contains("config") || !manifest["config"].is_string())
    throw ParseError(0, path.string(), "manifest has no 'config' text");
  return manifest["config"].get<std::string>();
}

std::vector<std::pair<std::string, std::uint64_t>> derived_seeds(const ScenarioConfig& scenario) {
  std::vector<std::pair<std::string, std::uint64_t>> out{
      {"master", scenario.master_seed},
      {"codebook", derive_seed(scenario.master_seed, Stream::codebook)},
      {"parity", scenario.tree.parity_seed},
      {"channel", scenario.channel.seed},
  };
  for (Index t = 0; t < scenario.trials; ++t)
    out.emplace_back("trial_" + std::to_string(t),
                     derive_seed(scenario.master_seed, Stream::trial, static_cast<std::uint64_t>(t)));
  return out;
}

}  // namespace ura
