#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ura/codebook.hpp"
#include "ura/linalg.hpp"
#include "ura/random.hpp"

namespace ura {

/// Sigma_hat = Y Y^H / M, the sufficient statistic for the activity powers.
struct SampleCovariance {
  CMatrix sigma_hat;
  Index m = 0;

  Index dimension() const noexcept { return sigma_hat.rows(); }
};

SampleCovariance sample_covariance(const CMatrix& y);

/// Negative normalized log-likelihood
///   f(gamma) = log det(Sigma) + tr(Sigma^{-1} Sigma_hat),
///   Sigma = sigma2 I + A diag(gamma) A^H,
/// evaluated through a Cholesky factorization. Throws NumericalFailure when
/// Sigma is not positive definite or the value is not finite.
double cost(const GammaVector& gamma, const Codebook& codebook, const SampleCovariance& cov,
            double sigma2);

/// Maintained inverse of Sigma = sigma2 I + A diag(gamma) A^H.
struct SigmaState {
  CMatrix sigma_inv;
  double sigma2 = 0.0;

  /// gamma = 0, so Sigma^{-1} = I / sigma2.
  static SigmaState initial(Index d, double sigma2);
  /// Direct inversion for the given gamma.
  static SigmaState exact(const GammaVector& gamma, const Codebook& codebook, double sigma2);
};

/// The two quadratic forms every coordinate update needs.
struct CoordinateForms {
  double c = 0.0;  ///< a_i^H Sigma^{-1} a_i
  double b = 0.0;  ///< a_i^H Sigma^{-1} Sigma_hat Sigma^{-1} a_i
};

CoordinateForms coordinate_forms(Index i, const SigmaState& state, const SampleCovariance& cov,
                                 const Codebook& codebook);

/// Closed-form minimizer of f along coordinate i, clipped so gamma_i + d >= 0.
double optimal_step(const CoordinateForms& forms, double gamma_i);

/// Decrease of f from moving coordinate i by d:
///   d b / (1 + d c) - log(1 + d c).
double step_reward(const CoordinateForms& forms, double d);

double cd_step(Index i, const SigmaState& state, const SampleCovariance& cov,
               const Codebook& codebook, const GammaVector& gamma);

/// Sherman-Morrison update of Sigma^{-1} for gamma_i += d. Throws
/// NumericalFailure when 1 + d a_i^H Sigma^{-1} a_i <= 1e-12.
void apply_rank_one_update(SigmaState& state, Index i, double d, const Codebook& codebook);

double reward(Index i, double d, const SigmaState& state, const SampleCovariance& cov,
              const Codebook& codebook);

/// Bayesian learning automaton arbitrating greedy vs uniform coordinate picks.
struct BlaState {
  double alpha1 = 1.0;
  double beta1 = 1.0;
  double alpha2 = 1.0;
  double beta2 = 1.0;
  RVector psi;  ///< reward cache, one entry per coordinate

  explicit BlaState(Index n = 0) : psi(RVector::Zero(n)) {}
};

struct BlaChoice {
  Index coordinate = 0;
  int arm = 0;          ///< 1 or 2
  bool greedy = false;  ///< Bernoulli outcome z
};

/// Lowest index among the maxima of psi.
Index greedy_coordinate(const RVector& psi);

/// Samples both Beta arms, keeps the larger draw, flips z ~ Bernoulli of it,
/// updates that arm's posterior and returns argmax psi (z = 1) or a uniform
/// coordinate (z = 0).
BlaChoice bla_select(BlaState& bla, Rng& rng);

enum class Policy { bla, random, cyclic };

std::string to_string(Policy policy);
Policy parse_policy(const std::string& text);

struct DetectorConfig {
  Index q_total = 40000;
  Index q_mod = 2048;
  double zeta = 0.0;
  Policy policy = Policy::bla;
  double sigma2 = 1.0;
  Index resync_period = 10000;

  /// Throws InvalidParameter.
  void validate() const;
};

struct TraceEntry {
  Index iteration = 0;  ///< 1-based
  Index coordinate = 0;
  double step = 0.0;
  double reward = 0.0;
  double cost = 0.0;
  double e_gamma = 0.0;  ///< NaN when no ground truth was supplied
};

struct DetectionResult {
  GammaVector gamma;
  std::vector<TraceEntry> trace;
  double final_cost = 0.0;
  Index iterations = 0;
  std::optional<std::string> failure;
};

/// Read-only view of one completed iteration, for instrumentation.
struct IterationView {
  const TraceEntry& entry;
  const GammaVector& gamma;
  const SigmaState& state;
};

struct DetectionOptions {
  const GammaVector* truth = nullptr;  ///< enables e_gamma in the trace
  bool record_trace = true;
  std::function<void(const IterationView&)> observer;
};

/// Coordinate descent on f over gamma >= 0 for q_total iterations.
///
/// With the BLA policy the whole reward cache is refreshed whenever
/// (q - 1) mod q_mod == 0; between refreshes only the visited coordinate's
/// entry changes, to the reward its optimal step would earn from the updated
/// state. Sigma^{-1} is recomputed from scratch every resync_period
/// iterations and once more at the end.
///
/// Numerical failures stop the run; the partial gamma and trace are returned
/// with `failure` set.
DetectionResult run_detection(const SampleCovariance& cov, const Codebook& codebook,
                              const DetectorConfig& config, Rng& rng,
                              const DetectionOptions& options = {});

/// Indices i with gamma_hat_i > zeta, ascending.
std::vector<Index> threshold_decide(const GammaVector& gamma_hat, double zeta);

/// ||gamma_hat - gamma_true||_2.
double estimation_error(const GammaVector& gamma_hat, const GammaVector& gamma_true);

}  // namespace ura
