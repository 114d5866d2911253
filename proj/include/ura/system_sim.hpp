#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ura/channel_model.hpp"
#include "ura/codebook.hpp"
#include "ura/detector.hpp"
#include "ura/tree_code.hpp"

namespace ura {

struct ScenarioConfig {
  Index k_tot = 0;  ///< 0 means 2 * k_a
  Index k_a = 1;
  Index m = 1;
  Index d = 1;
  Index n_k = 1;
  TreeCodeSpec tree;
  double g = 1.0;       ///< common large-scale fading coefficient (linear power)
  double sigma2 = 1.0;  ///< true noise variance
  ChannelParams channel;
  DetectorConfig detector;  ///< detector.sigma2 is the receiver's assumed noise variance
  /// When set, the decision threshold is zeta_relative * g * n_k (one user's
  /// activity power) instead of detector.zeta.
  std::optional<double> zeta_relative;
  Index trials = 1;
  std::uint64_t master_seed = 0;
  Index workers = 1;
  std::size_t max_paths = kDefaultMaxPaths;
  bool codebook_normalized = false;

  double snr_db() const;
  /// Sets g = sigma2 * 10^(snr/10).
  void set_snr_db(double snr_db);
  double effective_zeta() const;
  Index total_users() const { return k_tot > 0 ? k_tot : 2 * k_a; }

  /// Throws InvalidParameter / InvalidSpec.
  void validate() const;
};

struct SlotGroundTruth {
  std::vector<std::uint32_t> active_chunks;  ///< one entry per active user, collisions kept
  GammaVector gamma_true;
};

struct SlotStats {
  std::size_t list_size = 0;
  std::size_t true_chunks = 0;   ///< distinct transmitted chunks
  std::size_t missed = 0;        ///< transmitted but not listed
  std::size_t false_chunks = 0;  ///< listed but not transmitted
  bool detector_failed = false;
};

struct ErrorReport {
  double p_md = 0.0;
  double p_fa = 0.0;
  double p_e = 0.0;
  std::vector<SlotStats> slots;
  std::size_t decoded = 0;
  Index overflows = 0;
  Index detector_failures = 0;
};

/// Received block Y = sum_k sqrt(g) a_{i_k} (sum_n h_tilde_k[:, n])^T + Z with
/// Z ~ CN(0, sigma2) i.i.d. One M x N_k coupling matrix per active user.
CMatrix synthesize_slot(std::span<const std::uint32_t> chunks, const Codebook& codebook,
                        std::span<const CMatrix> h_tilde, Index m, double g, double sigma2,
                        Rng& rng);

/// gamma_i = sum over users sending i of g * sum(Lambda_t) / M.
GammaVector slot_gamma(std::span<const std::uint32_t> chunks, std::span<const double> user_power,
                       Index n_cw);

/// (1/K_a) sum_k [m(k) not in L] and |L \ T| / |L| (0 when L is empty).
std::pair<double, double> error_rates(std::span<const Bits> transmitted, std::span<const Bits> decoded);

/// Everything a trial needs that does not change between trials.
class Simulator {
 public:
  explicit Simulator(ScenarioConfig config);

  const ScenarioConfig& config() const noexcept { return config_; }
  const Codebook& codebook() const noexcept { return codebook_; }
  const ParityRules& rules() const noexcept { return rules_; }
  const ChannelSpec& base_channel() const noexcept { return base_channel_; }

  std::uint64_t trial_seed(Index trial) const;

  /// User k's LOS matrix: the base law with its own LOS phases.
  CMatrix user_hbar(Index user) const;
  /// g * sum(Lambda_t) / M for every user.
  double user_power() const noexcept { return user_power_; }

  /// Active users (distinct, ascending draw order) and their messages.
  struct Transmission {
    std::vector<Index> users;
    std::vector<Bits> messages;
    std::vector<ChunkSequence> chunks;
  };
  Transmission draw_transmission(std::uint64_t trial_seed) const;

  struct SlotSample {
    CMatrix y;
    SlotGroundTruth truth;
  };
  SlotSample sample_slot(std::uint64_t trial_seed, int slot, const Transmission& tx) const;

  ErrorReport run_trial(std::uint64_t trial_seed) const;

  /// All config.trials trials, fanned out over config.workers threads,
  /// returned in trial order.
  std::vector<ErrorReport> run_trials() const;

 private:
  ScenarioConfig config_;
  Codebook codebook_;
  ParityRules rules_;
  ChannelSpec base_channel_;
  double user_power_ = 0.0;
};

ErrorReport run_trial(const ScenarioConfig& config, std::uint64_t trial_seed);

struct SweepRow {
  double snr_db = 0.0;
  Index m = 0;
  ChannelMode channel_mode = ChannelMode::iid;
  double p_md = 0.0;
  double p_fa = 0.0;
  double p_e = 0.0;
  Index trials = 0;
  Index overflows = 0;
};

/// Mean error rates per grid point. Every point reuses the same trial seeds.
std::vector<SweepRow> snr_sweep(const ScenarioConfig& config, std::span<const double> snr_grid_db);

struct PolicyTrace {
  Policy policy = Policy::bla;
  std::vector<TraceEntry> trace;
  double terminal_e_gamma = 0.0;
};

struct ConvergenceResult {
  GammaVector gamma_true;
  std::vector<PolicyTrace> traces;
};

/// Feeds the sample covariance of slot 0 of trial `trial` to each policy,
/// all with the same detector stream, and records e_gamma per iteration.
ConvergenceResult convergence_experiment(const ScenarioConfig& config, std::span<const Policy> policies,
                                         Index trial = 0);

/// Runs fn(t) for t in [0, count) on `workers` threads.
template <class Fn>
void parallel_for(Index count, Index workers, Fn&& fn);

}  // namespace ura

#include "ura/detail/parallel.hpp"
