#pragma once

// Reference computations used by the tests. Each one takes the slow, direct
// route so it shares no code path with the library.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "ura/codebook.hpp"
#include "ura/detector.hpp"
#include "ura/random.hpp"

namespace oracle {

using ura::CMatrix;
using ura::GammaVector;
using ura::Index;

inline CMatrix dense_sigma(const GammaVector& gamma, const CMatrix& a, double sigma2) {
  CMatrix sigma = sigma2 * CMatrix::Identity(a.rows(), a.rows());
  for (Index i = 0; i < a.cols(); ++i)
    for (Index r = 0; r < a.rows(); ++r)
      for (Index c = 0; c < a.rows(); ++c) sigma(r, c) += gamma[i] * a(r, i) * std::conj(a(c, i));
  return sigma;
}

/// log det through an LU determinant, trace through an LU inverse.
inline double dense_cost(const GammaVector& gamma, const CMatrix& a, const CMatrix& sigma_hat, double sigma2) {
  const CMatrix sigma = dense_sigma(gamma, a, sigma2);
  Eigen::FullPivLU<CMatrix> lu(sigma);
  return std::log(std::abs(lu.determinant())) + (lu.inverse() * sigma_hat).trace().real();
}

inline CMatrix direct_inverse(const GammaVector& gamma, const CMatrix& a, double sigma2) {
  return dense_sigma(gamma, a, sigma2).fullPivLu().inverse();
}

inline CMatrix loop_covariance(const CMatrix& y) {
  CMatrix out = CMatrix::Zero(y.rows(), y.rows());
  for (Index m = 0; m < y.cols(); ++m)
    for (Index r = 0; r < y.rows(); ++r)
      for (Index c = 0; c < y.rows(); ++c) out(r, c) += y(r, m) * std::conj(y(c, m));
  return out / static_cast<double>(y.cols());
}

/// Minimizer of a unimodal fn on [lo, hi].
inline double golden_section(const std::function<double(double)>& fn, double lo, double hi, double tol = 1e-12) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = fn(x1);
  double f2 = fn(x2);
  while (hi - lo > tol * (1.0 + std::abs(lo) + std::abs(hi))) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = fn(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = fn(x2);
    }
  }
  return 0.5 * (lo + hi);
}

/// Observation Y = A diag(sqrt(gamma)) X + sigma W with X, W ~ CN(0, 1);
/// E{Sigma_hat} = sigma2 I + A diag(gamma) A^H.
inline ura::SampleCovariance synthetic_covariance(const GammaVector& gamma, const CMatrix& a, double sigma2,
                                                  Index m, ura::Rng& rng) {
  CMatrix y = ura::complex_normal_matrix(a.rows(), m, rng, sigma2);
  const CMatrix x = ura::complex_normal_matrix(a.cols(), m, rng);
  for (Index i = 0; i < a.cols(); ++i)
    if (gamma[i] > 0.0) y += std::sqrt(gamma[i]) * a.col(i) * x.row(i);
  return ura::sample_covariance(y);
}

}  // namespace oracle
