#include "ura/system_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ura/errors.hpp"

namespace ura {

double ScenarioConfig::snr_db() const { return 10.0 * std::log10(g / sigma2); }

void ScenarioConfig::set_snr_db(double snr_db) { g = sigma2 * std::pow(10.0, snr_db / 10.0); }

double ScenarioConfig::effective_zeta() const {
  if (zeta_relative) return *zeta_relative * g * static_cast<double>(n_k);
  return detector.zeta;
}

void ScenarioConfig::validate() const {
  if (k_a < 1) throw InvalidParameter("k_a must be >= 1");
  if (k_tot != 0 && k_tot < k_a) throw InvalidParameter("k_tot must be >= k_a");
  if (m < 1 || d < 1 || n_k < 1) throw InvalidParameter("m, d and n_k must be >= 1");
  tree.validate();
  if (!(g > 0.0) || !std::isfinite(g)) throw InvalidParameter("g must be positive and finite");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidParameter("sigma2 must be positive and finite");
  if (!std::isfinite(snr_db())) throw InvalidParameter("SNR must be finite");
  detector.validate();
  if (zeta_relative && !(*zeta_relative >= 0.0)) throw InvalidParameter("zeta_relative must be >= 0");
  if (trials < 1) throw InvalidParameter("trials must be >= 1");
  if (workers < 1) throw InvalidParameter("workers must be >= 1");
  if (max_paths < 1) throw InvalidParameter("max_paths must be >= 1");
}

CMatrix synthesize_slot(std::span<const std::uint32_t> chunks, const Codebook& codebook,
                        std::span<const CMatrix> h_tilde, Index m, double g, double sigma2,
                        Rng& rng) {
  if (chunks.size() != h_tilde.size())
    throw InvalidParameter("need one channel realization per active user");
  CMatrix y = complex_normal_matrix(codebook.dimension(), m, rng, sigma2);
  const double amp = std::sqrt(g);
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    if (h_tilde[k].rows() != m) throw InvalidParameter("channel realizations differ in antenna count");
    if (chunks[k] >= static_cast<std::uint64_t>(codebook.size())) throw InvalidParameter("chunk index outside the codebook");
    const CVector h_sum = h_tilde[k].rowwise().sum();
    y.noalias() += amp * codebook.a.col(chunks[k]) * h_sum.transpose();
  }
  return y;
}

GammaVector slot_gamma(std::span<const std::uint32_t> chunks, std::span<const double> user_power,
                       Index n_cw) {
  if (chunks.size() != user_power.size()) throw InvalidParameter("need one power per active user");
  GammaVector gamma = GammaVector::Zero(n_cw);
  for (std::size_t k = 0; k < chunks.size(); ++k) gamma[chunks[k]] += user_power[k];
  return gamma;
}

std::pair<double, double> error_rates(std::span<const Bits> transmitted, std::span<const Bits> decoded) {
  std::vector<Bits> listed(decoded.begin(), decoded.end());
  std::sort(listed.begin(), listed.end());
  std::vector<Bits> sent(transmitted.begin(), transmitted.end());
  std::sort(sent.begin(), sent.end());

  double p_md = 0.0;
  if (!transmitted.empty()) {
    std::size_t missed = 0;
    for (const auto& m : transmitted) missed += std::binary_search(listed.begin(), listed.end(), m) ? 0 : 1;
    p_md = static_cast<double>(missed) / static_cast<double>(transmitted.size());
  }
  double p_fa = 0.0;
  if (!listed.empty()) {
    std::size_t spurious = 0;
    for (const auto& m : listed) spurious += std::binary_search(sent.begin(), sent.end(), m) ? 0 : 1;
    p_fa = static_cast<double>(spurious) / static_cast<double>(listed.size());
  }
  return {p_md, p_fa};
}

Simulator::Simulator(ScenarioConfig config) : config_(std::move(config)) {
  config_.channel.m = config_.m;
  config_.channel.n_k = config_.n_k;
  config_.validate();
  const Index n_cw = Index{1} << config_.tree.j;
  codebook_ = generate_codebook(derive_seed(config_.master_seed, Stream::codebook), config_.d, n_cw,
                                config_.codebook_normalized);
  rules_ = build_rules(config_.tree);
  base_channel_ = build_spec(config_.channel);
  const double lambda_sum = transmit_eigenvalues(build_omega(base_channel_)).lambda_t.sum();
  user_power_ = config_.g * lambda_sum / static_cast<double>(config_.m);
}

std::uint64_t Simulator::trial_seed(Index trial) const {
  return derive_seed(config_.master_seed, Stream::trial, static_cast<std::uint64_t>(trial));
}

CMatrix Simulator::user_hbar(Index user) const {
  CMatrix hbar = base_channel_.hbar;
  if (base_channel_.mode == ChannelMode::correlated) {
    Rng rng = make_rng(derive_seed(config_.channel.seed, Stream::channel_spec,
                                   static_cast<std::uint64_t>(user) + 1));
    redraw_los_phases(hbar, rng);
  }
  return hbar;
}

Simulator::Transmission Simulator::draw_transmission(std::uint64_t trial_seed) const {
  const Index k_tot = config_.total_users();
  Transmission tx;

  // Partial Fisher-Yates: the first k_a entries are the active users.
  Rng user_rng = make_rng(derive_seed(trial_seed, Stream::users));
  std::vector<Index> pool(static_cast<std::size_t>(k_tot));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index k = 0; k < config_.k_a; ++k) {
    std::uniform_int_distribution<Index> pick(k, k_tot - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(user_rng))]);
  }
  tx.users.assign(pool.begin(), pool.begin() + config_.k_a);

  Rng msg_rng = make_rng(derive_seed(trial_seed, Stream::messages));
  for (Index k = 0; k < config_.k_a; ++k) {
    tx.messages.push_back(random_message(config_.tree.w, msg_rng));
    tx.chunks.push_back(encode(tx.messages.back(), rules_, config_.tree));
  }
  return tx;
}

Simulator::SlotSample Simulator::sample_slot(std::uint64_t trial_seed, int slot,
                                             const Transmission& tx) const {
  const auto s = static_cast<std::uint64_t>(slot);
  Rng channel_rng = make_rng(derive_seed(trial_seed, Stream::channel, s));
  Rng noise_rng = make_rng(derive_seed(trial_seed, Stream::noise, s));

  SlotSample out;
  std::vector<CMatrix> h_tilde;
  std::vector<double> power;
  h_tilde.reserve(tx.users.size());
  for (std::size_t k = 0; k < tx.users.size(); ++k) {
    out.truth.active_chunks.push_back(tx.chunks[k][static_cast<std::size_t>(slot)]);
    h_tilde.push_back(sample_h_tilde(user_hbar(tx.users[k]), base_channel_.p, channel_rng));
    power.push_back(user_power_);
  }
  out.y = synthesize_slot(out.truth.active_chunks, codebook_, h_tilde, config_.m, config_.g,
                          config_.sigma2, noise_rng);
  out.truth.gamma_true = slot_gamma(out.truth.active_chunks, power, codebook_.size());
  return out;
}

ErrorReport Simulator::run_trial(std::uint64_t trial_seed) const {
  const Transmission tx = draw_transmission(trial_seed);
  const double zeta = config_.effective_zeta();
  DetectorConfig det = config_.detector;
  det.zeta = zeta;

  ErrorReport report;
  std::vector<std::vector<std::uint32_t>> lists(static_cast<std::size_t>(config_.tree.s));
  for (int s = 0; s < config_.tree.s; ++s) {
    const SlotSample sample = sample_slot(trial_seed, s, tx);
    const SampleCovariance cov = sample_covariance(sample.y);
    Rng det_rng = make_rng(derive_seed(trial_seed, Stream::detector, static_cast<std::uint64_t>(s)));
    DetectionOptions opts;
    opts.record_trace = false;
    const DetectionResult result = run_detection(cov, codebook_, det, det_rng, opts);

    SlotStats stats;
    stats.detector_failed = result.failure.has_value();
    if (stats.detector_failed) ++report.detector_failures;
    auto& list = lists[static_cast<std::size_t>(s)];
    for (Index i : threshold_decide(result.gamma, zeta)) list.push_back(static_cast<std::uint32_t>(i));

    std::vector<std::uint32_t> sent = sample.truth.active_chunks;
    std::sort(sent.begin(), sent.end());
    sent.erase(std::unique(sent.begin(), sent.end()), sent.end());
    stats.list_size = list.size();
    stats.true_chunks = sent.size();
    for (auto c : sent) stats.missed += std::binary_search(list.begin(), list.end(), c) ? 0 : 1;
    for (auto c : list) stats.false_chunks += std::binary_search(sent.begin(), sent.end(), c) ? 0 : 1;
    report.slots.push_back(stats);
  }

  std::vector<Bits> decoded;
  try {
    decoded = decode(SlotLists(std::move(lists)), rules_, config_.tree, config_.max_paths);
  } catch (const DecoderOverflow&) {
    ++report.overflows;
  }
  report.decoded = decoded.size();
  std::tie(report.p_md, report.p_fa) = error_rates(tx.messages, decoded);
  report.p_e = report.p_md + report.p_fa;
  return report;
}

std::vector<ErrorReport> Simulator::run_trials() const {
  std::vector<ErrorReport> reports(static_cast<std::size_t>(config_.trials));
  parallel_for(config_.trials, config_.workers,
               [&](Index t) { reports[static_cast<std::size_t>(t)] = run_trial(trial_seed(t)); });
  return reports;
}

ErrorReport run_trial(const ScenarioConfig& config, std::uint64_t trial_seed) {
  return Simulator(config).run_trial(trial_seed);
}

std::vector<SweepRow> snr_sweep(const ScenarioConfig& config, std::span<const double> snr_grid_db) {
  if (snr_grid_db.empty()) throw InvalidParameter("SNR grid is empty");
  std::vector<SweepRow> rows;
  for (double snr : snr_grid_db) {
    ScenarioConfig point = config;
    point.set_snr_db(snr);
    const Simulator sim(point);
    const auto reports = sim.run_trials();

    SweepRow row;
    row.snr_db = snr;
    row.m = point.m;
    row.channel_mode = point.channel.mode;
    row.trials = point.trials;
    for (const auto& r : reports) {
      row.p_md += r.p_md;
      row.p_fa += r.p_fa;
      row.overflows += r.overflows;
    }
    row.p_md /= static_cast<double>(reports.size());
    row.p_fa /= static_cast<double>(reports.size());
    row.p_e = row.p_md + row.p_fa;
    rows.push_back(row);
  }
  return rows;
}

ConvergenceResult convergence_experiment(const ScenarioConfig& config, std::span<const Policy> policies,
                                         Index trial) {
  if (policies.empty()) throw InvalidParameter("no policies to compare");
  const Simulator sim(config);
  const std::uint64_t seed = sim.trial_seed(trial);
  const auto tx = sim.draw_transmission(seed);
  const auto sample = sim.sample_slot(seed, 0, tx);
  const SampleCovariance cov = sample_covariance(sample.y);

  ConvergenceResult out;
  out.gamma_true = sample.truth.gamma_true;
  for (Policy policy : policies) {
    DetectorConfig det = sim.config().detector;
    det.policy = policy;
    det.zeta = sim.config().effective_zeta();
    Rng rng = make_rng(derive_seed(seed, Stream::detector, 0));
    DetectionOptions opts;
    opts.truth = &out.gamma_true;
    DetectionResult result = run_detection(cov, sim.codebook(), det, rng, opts);
    if (result.failure) throw NumericalFailure("detector failed: " + *result.failure);
    PolicyTrace trace;
    trace.policy = policy;
    trace.terminal_e_gamma = estimation_error(result.gamma, out.gamma_true);
    trace.trace = std::move(result.trace);
    out.traces.push_back(std::move(trace));
  }
  return out;
}

}  // namespace ura
