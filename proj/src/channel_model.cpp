#include "ura/channel_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "ura/errors.hpp"

namespace ura {

static_assert(std::endian::native == std::endian::little,
              "matrix export assumes a little-endian host");

std::string to_string(ChannelMode mode) {
  return mode == ChannelMode::iid ? "iid" : "correlated";
}

ChannelMode parse_channel_mode(const std::string& text) {
  if (text == "iid") return ChannelMode::iid;
  if (text == "correlated") return ChannelMode::correlated;
  throw InvalidParameter("unknown channel mode '" + text + "' (expected iid|correlated)");
}

ChannelSpec ChannelSpec::iid(Index m, Index n_k) {
  if (m < 1 || n_k < 1) throw InvalidSpec("channel needs M >= 1 and N_k >= 1");
  ChannelSpec spec;
  spec.m = m;
  spec.n_k = n_k;
  spec.hbar = CMatrix::Zero(m, n_k);
  spec.p = RMatrix::Ones(m, n_k);
  spec.u_t = CMatrix::Identity(n_k, n_k);
  spec.u_r = CMatrix::Identity(m, m);
  spec.mode = ChannelMode::iid;
  return spec;
}

namespace {

double unitarity_error(const CMatrix& u) {
  return (u * u.adjoint() - CMatrix::Identity(u.rows(), u.rows())).norm();
}

}  // namespace

void validate_structure(const ChannelSpec& spec) {
  const Index m = spec.m;
  const Index n = spec.n_k;
  if (m < 1 || n < 1) throw InvalidSpec("channel needs M >= 1 and N_k >= 1");
  if (spec.hbar.rows() != m || spec.hbar.cols() != n)
    throw InvalidSpec("Hbar must be M x N_k");
  if (spec.p.rows() != m || spec.p.cols() != n) throw InvalidSpec("P must be M x N_k");
  if (spec.u_t.rows() != n || spec.u_t.cols() != n) throw InvalidSpec("U_t must be N_k x N_k");
  if (spec.u_r.rows() != m || spec.u_r.cols() != m) throw InvalidSpec("U_r must be M x M");

  if (!spec.hbar.allFinite() || !spec.p.allFinite() || !spec.u_t.allFinite() ||
      !spec.u_r.allFinite())
    throw InvalidSpec("channel spec holds non-finite entries");
  if ((spec.p.array() < 0.0).any()) throw InvalidSpec("P must be entrywise nonnegative");

  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < m; ++r)
      if (r != c && spec.hbar(r, c) != cplx(0.0, 0.0))
        throw InvalidSpec("Hbar may only be nonzero at (d, d)");

  if (unitarity_error(spec.u_t) > kUnitaryTolerance) throw InvalidSpec("U_t is not unitary");
  if (unitarity_error(spec.u_r) > kUnitaryTolerance) throw InvalidSpec("U_r is not unitary");

  if (spec.mode == ChannelMode::iid) {
    const bool white = spec.hbar.isZero(0.0) && (spec.p.array() == 1.0).all() &&
                       spec.u_t.isIdentity(1e-12) && spec.u_r.isIdentity(1e-12);
    if (!white) throw InvalidSpec("iid mode requires Hbar = 0, P = 1 and identity bases");
  }
}

void validate_spec(const ChannelSpec& spec) {
  validate_structure(spec);
  const double total = build_omega(spec).omega.sum();
  const double target = static_cast<double>(spec.n_k * spec.m);
  if (std::abs(total - target) > kPowerTolerance * target)
    throw InvalidSpec("power constraint violated: sum(Omega) = " + std::to_string(total) +
                      ", expected " + std::to_string(target));
}

CouplingMatrix build_omega(const ChannelSpec& spec) {
  if (spec.hbar.rows() != spec.p.rows() || spec.hbar.cols() != spec.p.cols())
    throw InvalidSpec("Hbar and P shapes differ");
  if ((spec.p.array() < 0.0).any()) throw InvalidSpec("P must be entrywise nonnegative");
  return {spec.hbar.cwiseAbs2() + spec.p.cwiseAbs2()};
}

ChannelSpec normalize_spec(const ChannelSpec& spec) {
  validate_structure(spec);
  const double total = build_omega(spec).omega.sum();
  if (!(total > 0.0)) throw InvalidSpec("cannot normalize a channel with zero coupling power");
  const double scale = std::sqrt(static_cast<double>(spec.n_k * spec.m) / total);
  ChannelSpec out = spec;
  out.hbar *= scale;
  out.p *= scale;
  return out;
}

CMatrix sample_h_tilde(const CMatrix& hbar, const RMatrix& p, Rng& rng) {
  CMatrix h = complex_normal_matrix(p.rows(), p.cols(), rng);
  h.array() *= p.array().cast<cplx>();
  h += hbar;
  return h;
}

CMatrix sample_h_tilde(const ChannelSpec& spec, Rng& rng) {
  return sample_h_tilde(spec.hbar, spec.p, rng);
}

ChannelRealization sample_coupling(const ChannelSpec& spec, Rng& rng) {
  ChannelRealization out;
  out.h_tilde = sample_h_tilde(spec, rng);
  out.h = spec.u_r * out.h_tilde * spec.u_t.adjoint();
  return out;
}

TransmitEigenvalues transmit_eigenvalues(const CouplingMatrix& omega) {
  return {omega.omega.colwise().sum().transpose()};
}

RVector receive_eigenvalues(const CouplingMatrix& omega) {
  return omega.omega.rowwise().sum();
}

ExpCorrelationEigen exp_correlation_eigen(Index n, double rho) {
  if (n < 1) throw InvalidParameter("correlation size must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidParameter("rho must lie in [0, 1)");
  if (rho == 0.0) return {RVector::Ones(n), RMatrix::Identity(n, n)};

  RMatrix r(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) r(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));

  Eigen::SelfAdjointEigenSolver<RMatrix> eig(r);
  if (eig.info() != Eigen::Success) throw NumericalFailure("correlation eigensolver failed");

  // Ascending from Eigen; flip so the strongest mode sits at index 0 where
  // the LOS diagonal lives.
  ExpCorrelationEigen out;
  out.values = eig.eigenvalues().reverse().cwiseMax(0.0);
  out.vectors = eig.eigenvectors().rowwise().reverse();
  return out;
}

void redraw_los_phases(CMatrix& hbar, Rng& rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const Index diag = std::min(hbar.rows(), hbar.cols());
  for (Index d = 0; d < diag; ++d) {
    const double amp = std::abs(hbar(d, d));
    const double phi = phase(rng);
    if (amp > 0.0) hbar(d, d) = std::polar(amp, phi);
  }
}

ChannelSpec make_exp_correlated_spec(Index m, Index n_k, double rho_r, double rho_t,
                                     double rician_k, Rng& rng) {
  if (m < 1 || n_k < 1) throw InvalidParameter("channel needs M >= 1 and N_k >= 1");
  if (!(rho_r >= 0.0 && rho_r < 1.0)) throw InvalidParameter("rho_r must lie in [0, 1)");
  if (!(rho_t >= 0.0 && rho_t < 1.0)) throw InvalidParameter("rho_t must lie in [0, 1)");
  if (!(rician_k >= 0.0) || !std::isfinite(rician_k))
    throw InvalidParameter("rician_k must be finite and >= 0");

  const auto rx = exp_correlation_eigen(m, rho_r);
  const auto tx = exp_correlation_eigen(n_k, rho_t);
  const double total = static_cast<double>(m * n_k);
  const double scatter = 1.0 / (1.0 + rician_k);
  const double los = rician_k / (1.0 + rician_k);

  ChannelSpec spec;
  spec.m = m;
  spec.n_k = n_k;
  spec.mode = ChannelMode::correlated;
  spec.p = (scatter * rx.values * tx.values.transpose()).cwiseSqrt();
  spec.hbar = CMatrix::Zero(m, n_k);
  const Index diag = std::min(m, n_k);
  const double los_amp = std::sqrt(los * total / static_cast<double>(diag));
  for (Index d = 0; d < diag; ++d) spec.hbar(d, d) = los_amp;
  redraw_los_phases(spec.hbar, rng);
  spec.u_r = rx.vectors.cast<cplx>();
  spec.u_t = tx.vectors.cast<cplx>();
  return normalize_spec(spec);
}

ChannelSpec build_spec(const ChannelParams& params) {
  if (params.mode == ChannelMode::iid) return ChannelSpec::iid(params.m, params.n_k);
  Rng rng = make_rng(derive_seed(params.seed, Stream::channel_spec));
  return make_exp_correlated_spec(params.m, params.n_k, params.rho_r, params.rho_t,
                                  params.rician_k, rng);
}

void export_complex_matrix(std::ostream& out, const CMatrix& mat) {
  out.write(reinterpret_cast<const char*>(mat.data()),
            static_cast<std::streamsize>(mat.size() * sizeof(cplx)));
}

CMatrix import_complex_matrix(std::istream& in, Index rows, Index cols) {
  CMatrix mat(rows, cols);
  in.read(reinterpret_cast<char*>(mat.data()),
          static_cast<std::streamsize>(mat.size() * sizeof(cplx)));
  if (!in) throw UsageError("truncated complex matrix stream");
  return mat;
}

}  // namespace ura
