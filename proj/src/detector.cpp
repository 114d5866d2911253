#include "ura/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/random/beta_distribution.hpp>

#include "ura/errors.hpp"

namespace ura {

namespace {

constexpr double kMinDenominator = 1e-12;

CMatrix build_sigma(const GammaVector& gamma, const Codebook& codebook, double sigma2) {
  const Index d = codebook.dimension();
  CMatrix sigma = sigma2 * CMatrix::Identity(d, d);
  for (Index i = 0; i < gamma.size(); ++i)
    if (gamma[i] != 0.0) sigma.noalias() += gamma[i] * codebook.a.col(i) * codebook.a.col(i).adjoint();
  return sigma;
}

void check_shapes(const SampleCovariance& cov, const Codebook& codebook) {
  if (cov.sigma_hat.rows() != codebook.dimension() || cov.sigma_hat.cols() != codebook.dimension())
    throw InvalidParameter("sample covariance is " + std::to_string(cov.sigma_hat.rows()) + " x " +
                           std::to_string(cov.sigma_hat.cols()) + ", codebook dimension is " +
                           std::to_string(codebook.dimension()));
}

// sigma_inv -= coeff * u u^H, written through the lower triangle and mirrored
// so the result stays exactly Hermitian.
void hermitian_rank_one(CMatrix& sigma_inv, const CVector& u, double coeff) {
  const Index n = u.size();
  for (Index col = 0; col < n; ++col) {
    const cplx uc = coeff * std::conj(u[col]);
    for (Index row = col + 1; row < n; ++row) {
      sigma_inv(row, col) -= u[row] * uc;
      sigma_inv(col, row) = std::conj(sigma_inv(row, col));
    }
    sigma_inv(col, col) = cplx(sigma_inv(col, col).real() - coeff * std::norm(u[col]), 0.0);
  }
}

CoordinateForms forms_from(const Codebook& codebook, Index i, const CVector& u,
                           const SampleCovariance& cov, CVector& scratch) {
  CoordinateForms f;
  f.c = codebook.a.col(i).dot(u).real();
  scratch.noalias() = cov.sigma_hat * u;
  f.b = u.dot(scratch).real();
  return f;
}

}  // namespace

SampleCovariance sample_covariance(const CMatrix& y) {
  if (y.cols() < 1) throw InvalidParameter("received signal needs at least one antenna column");
  SampleCovariance out;
  out.m = y.cols();
  out.sigma_hat = (y * y.adjoint()) / static_cast<double>(y.cols());
  out.sigma_hat = 0.5 * (out.sigma_hat + out.sigma_hat.adjoint()).eval();
  return out;
}

double cost(const GammaVector& gamma, const Codebook& codebook, const SampleCovariance& cov,
            double sigma2) {
  check_shapes(cov, codebook);
  if (gamma.size() != codebook.size()) throw InvalidParameter("gamma length differs from codebook size");
  if ((gamma.array() < 0.0).any()) throw InvalidParameter("gamma must be nonnegative");

  Eigen::LLT<CMatrix> llt(build_sigma(gamma, codebook, sigma2));
  if (llt.info() != Eigen::Success) throw NumericalFailure("covariance is not positive definite");
  const CMatrix& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Index k = 0; k < l.rows(); ++k) log_det += 2.0 * std::log(l(k, k).real());
  const double trace = llt.solve(cov.sigma_hat).trace().real();
  const double f = log_det + trace;
  if (!std::isfinite(f)) throw NumericalFailure("cost is not finite");
  return f;
}

SigmaState SigmaState::initial(Index d, double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidParameter("sigma2 must be positive");
  return {CMatrix::Identity(d, d) / sigma2, sigma2};
}

SigmaState SigmaState::exact(const GammaVector& gamma, const Codebook& codebook, double sigma2) {
  const Index d = codebook.dimension();
  Eigen::LLT<CMatrix> llt(build_sigma(gamma, codebook, sigma2));
  if (llt.info() != Eigen::Success) throw NumericalFailure("covariance is not positive definite");
  CMatrix inv = llt.solve(CMatrix::Identity(d, d));
  inv = 0.5 * (inv + inv.adjoint()).eval();
  return {std::move(inv), sigma2};
}

CoordinateForms coordinate_forms(Index i, const SigmaState& state, const SampleCovariance& cov,
                                 const Codebook& codebook) {
  check_shapes(cov, codebook);
  const CVector u = state.sigma_inv * codebook.a.col(i);
  CVector scratch(u.size());
  return forms_from(codebook, i, u, cov, scratch);
}

double optimal_step(const CoordinateForms& forms, double gamma_i) {
  if (!(forms.c > 0.0)) throw NumericalFailure("a^H Sigma^{-1} a is not positive");
  const double d = (forms.b - forms.c) / (forms.c * forms.c);
  if (!std::isfinite(d)) throw NumericalFailure("coordinate step is not finite");
  return std::max(d, -gamma_i);
}

double step_reward(const CoordinateForms& forms, double d) {
  if (d == 0.0) return 0.0;
  const double dc = d * forms.c;
  if (!(1.0 + dc > kMinDenominator)) throw NumericalFailure("step leaves the feasible region");
  return d * forms.b / (1.0 + dc) - std::log1p(dc);
}

double cd_step(Index i, const SigmaState& state, const SampleCovariance& cov,
               const Codebook& codebook, const GammaVector& gamma) {
  return optimal_step(coordinate_forms(i, state, cov, codebook), gamma[i]);
}

void apply_rank_one_update(SigmaState& state, Index i, double d, const Codebook& codebook) {
  if (d == 0.0) return;
  const CVector u = state.sigma_inv * codebook.a.col(i);
  const double c = codebook.a.col(i).dot(u).real();
  const double denom = 1.0 + d * c;
  if (!(denom > kMinDenominator)) throw NumericalFailure("singular rank-one update");
  hermitian_rank_one(state.sigma_inv, u, d / denom);
}

double reward(Index i, double d, const SigmaState& state, const SampleCovariance& cov,
              const Codebook& codebook) {
  return step_reward(coordinate_forms(i, state, cov, codebook), d);
}

Index greedy_coordinate(const RVector& psi) {
  Index best = 0;
  for (Index i = 1; i < psi.size(); ++i)
    if (psi[i] > psi[best]) best = i;
  return best;
}

BlaChoice bla_select(BlaState& bla, Rng& rng) {
  if (bla.psi.size() < 1) throw InvalidParameter("BLA needs at least one coordinate");
  boost::random::beta_distribution<double> arm1(bla.alpha1, bla.beta1);
  boost::random::beta_distribution<double> arm2(bla.alpha2, bla.beta2);
  const double eps1 = arm1(rng);
  const double eps2 = arm2(rng);

  BlaChoice choice;
  choice.arm = eps1 >= eps2 ? 1 : 2;
  const double eps = choice.arm == 1 ? eps1 : eps2;
  choice.greedy = std::bernoulli_distribution(eps)(rng);
  const double z = choice.greedy ? 1.0 : 0.0;
  if (choice.arm == 1) {
    bla.alpha1 += z;
    bla.beta1 += 1.0 - z;
  } else {
    bla.alpha2 += z;
    bla.beta2 += 1.0 - z;
  }

  if (choice.greedy) {
    choice.coordinate = greedy_coordinate(bla.psi);
  } else {
    std::uniform_int_distribution<Index> pick(0, bla.psi.size() - 1);
    choice.coordinate = pick(rng);
  }
  return choice;
}

std::string to_string(Policy policy) {
  switch (policy) {
    case Policy::bla: return "bla";
    case Policy::random: return "random";
    case Policy::cyclic: return "cyclic";
  }
  return "?";
}

Policy parse_policy(const std::string& text) {
  if (text == "bla") return Policy::bla;
  if (text == "random") return Policy::random;
  if (text == "cyclic") return Policy::cyclic;
  throw InvalidParameter("unknown policy '" + text + "' (expected bla|random|cyclic)");
}

void DetectorConfig::validate() const {
  if (q_total < 1) throw InvalidParameter("q_total must be >= 1");
  if (q_mod < 1) throw InvalidParameter("q_mod must be >= 1");
  if (!(zeta >= 0.0)) throw InvalidParameter("zeta must be >= 0");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidParameter("sigma2 must be positive and finite");
  if (resync_period < 1) throw InvalidParameter("resync_period must be >= 1");
}

DetectionResult run_detection(const SampleCovariance& cov, const Codebook& codebook,
                              const DetectorConfig& config, Rng& rng,
                              const DetectionOptions& options) {
  config.validate();
  check_shapes(cov, codebook);
  const Index n = codebook.size();
  const Index dim = codebook.dimension();
  const GammaVector* truth = options.truth;
  if (truth != nullptr && truth->size() != n) throw InvalidParameter("ground truth length differs from codebook size");

  DetectionResult result;
  result.gamma = GammaVector::Zero(n);
  if (options.record_trace) result.trace.reserve(static_cast<std::size_t>(config.q_total));
  GammaVector& gamma = result.gamma;

  SigmaState state = SigmaState::initial(dim, config.sigma2);
  BlaState bla(config.policy == Policy::bla ? n : 0);
  std::uniform_int_distribution<Index> uniform(0, n - 1);
  CVector u(dim);
  CVector scratch(dim);
  CMatrix sigma_inv_a(dim, n);
  CMatrix sigma_hat_u(dim, n);

  double err2 = truth != nullptr ? truth->squaredNorm() : std::numeric_limits<double>::quiet_NaN();

  auto refresh_rewards = [&] {
    sigma_inv_a.noalias() = state.sigma_inv * codebook.a;
    sigma_hat_u.noalias() = cov.sigma_hat * sigma_inv_a;
    for (Index i = 0; i < n; ++i) {
      CoordinateForms forms;
      forms.c = codebook.a.col(i).dot(sigma_inv_a.col(i)).real();
      forms.b = sigma_inv_a.col(i).dot(sigma_hat_u.col(i)).real();
      bla.psi[i] = step_reward(forms, optimal_step(forms, gamma[i]));
    }
  };

  try {
    double f = cost(gamma, codebook, cov, config.sigma2);
    result.final_cost = f;
    for (Index q = 1; q <= config.q_total; ++q) {
      Index i = 0;
      switch (config.policy) {
        case Policy::bla:
          if ((q - 1) % config.q_mod == 0) refresh_rewards();
          i = bla_select(bla, rng).coordinate;
          break;
        case Policy::random:
          i = uniform(rng);
          break;
        case Policy::cyclic:
          i = (q - 1) % n;
          break;
      }

      u.noalias() = state.sigma_inv * codebook.a.col(i);
      const CoordinateForms forms = forms_from(codebook, i, u, cov, scratch);
      const double d = optimal_step(forms, gamma[i]);
      const double r = step_reward(forms, d);
      const double denom = 1.0 + d * forms.c;
      if (!(denom > kMinDenominator)) throw NumericalFailure("singular rank-one update");

      const double old_gamma = gamma[i];
      if (d != 0.0) {
        hermitian_rank_one(state.sigma_inv, u, d / denom);
        gamma[i] = d == -old_gamma ? 0.0 : old_gamma + d;
      }
      if (truth != nullptr) {
        const double t = (*truth)[i];
        err2 += (gamma[i] - t) * (gamma[i] - t) - (old_gamma - t) * (old_gamma - t);
      }
      f -= r;

      if (config.policy == Policy::bla) {
        // Sigma^{-1} a_i scales by 1 / denom under the update.
        const CoordinateForms next{forms.c / denom, forms.b / (denom * denom)};
        bla.psi[i] = step_reward(next, optimal_step(next, gamma[i]));
      }

      if (q % config.resync_period == 0 || q == config.q_total) {
        state = SigmaState::exact(gamma, codebook, config.sigma2);
        f = cost(gamma, codebook, cov, config.sigma2);
        if (truth != nullptr) err2 = (gamma - *truth).squaredNorm();
      }

      result.iterations = q;
      result.final_cost = f;
      TraceEntry entry{q, i, d, r, f, truth != nullptr ? std::sqrt(std::max(err2, 0.0)) : err2};
      if (options.observer) options.observer(IterationView{entry, gamma, state});
      if (options.record_trace) result.trace.push_back(entry);
    }
  } catch (const NumericalFailure& e) {
    result.failure = e.what();
  }
  return result;
}

std::vector<Index> threshold_decide(const GammaVector& gamma_hat, double zeta) {
  if (!(zeta >= 0.0)) throw InvalidParameter("zeta must be >= 0");
  std::vector<Index> out;
  for (Index i = 0; i < gamma_hat.size(); ++i)
    if (gamma_hat[i] > zeta) out.push_back(i);
  return out;
}

double estimation_error(const GammaVector& gamma_hat, const GammaVector& gamma_true) {
  if (gamma_hat.size() != gamma_true.size()) throw InvalidParameter("gamma vectors differ in length");
  return (gamma_hat - gamma_true).norm();
}

}  // namespace ura
