#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ura/linalg.hpp"
#include "ura/random.hpp"

namespace ura {

enum class ChannelMode { iid, correlated };

std::string to_string(ChannelMode mode);
ChannelMode parse_channel_mode(const std::string& text);

/// Deterministic law of one user's joint-correlated channel
///
///   H = U_r (Hbar + P .* Hhat) U_t^H,   Hhat_{mn} ~ CN(0, 1) i.i.d.
///
/// Hbar carries the line-of-sight part and may only be nonzero on its leading
/// diagonal. P holds nonnegative scattering amplitudes. The law is normalized
/// when E{tr(H H^H)} = sum(Omega) = N_k * M.
struct ChannelSpec {
  Index m = 0;    ///< receive antennas
  Index n_k = 0;  ///< transmit antennas
  CMatrix hbar;   ///< M x N_k
  RMatrix p;      ///< M x N_k
  CMatrix u_t;    ///< N_k x N_k unitary
  CMatrix u_r;    ///< M x M unitary
  ChannelMode mode = ChannelMode::iid;

  /// Spatially white unit-power channel: Hbar = 0, P = 1, identity bases.
  static ChannelSpec iid(Index m, Index n_k);
};

/// Average power coupling between receive and transmit eigenmodes.
struct CouplingMatrix {
  RMatrix omega;
};

struct ChannelRealization {
  CMatrix h_tilde;  ///< coupling matrix, M x N_k
  CMatrix h;        ///< full channel U_r h_tilde U_t^H
};

struct TransmitEigenvalues {
  RVector lambda_t;
};

inline constexpr double kUnitaryTolerance = 1e-10;
inline constexpr double kPowerTolerance = 1e-10;

/// Shapes, unitarity, LOS placement, nonnegativity and the iid-mode contract.
/// Throws InvalidSpec.
void validate_structure(const ChannelSpec& spec);

/// validate_structure plus the power constraint sum(Omega) = N_k * M.
void validate_spec(const ChannelSpec& spec);

CouplingMatrix build_omega(const ChannelSpec& spec);

/// Rescales Hbar and P by one common factor so that sum(Omega) = N_k * M.
/// Throws InvalidSpec when Omega is identically zero.
ChannelSpec normalize_spec(const ChannelSpec& spec);

/// Draws Hbar + P .* Hhat only. Cheaper than sample_coupling when the
/// unitary rotations are not needed (the received signal model only uses it).
CMatrix sample_h_tilde(const ChannelSpec& spec, Rng& rng);
CMatrix sample_h_tilde(const CMatrix& hbar, const RMatrix& p, Rng& rng);

ChannelRealization sample_coupling(const ChannelSpec& spec, Rng& rng);

/// Column sums of Omega (diagonal of Lambda_t).
TransmitEigenvalues transmit_eigenvalues(const CouplingMatrix& omega);

/// Row sums of Omega (diagonal of Lambda_r).
RVector receive_eigenvalues(const CouplingMatrix& omega);

/// Eigen-decomposition of the n x n exponential correlation matrix
/// R_{ij} = rho^{|i-j|}, eigenvalues sorted in descending order.
struct ExpCorrelationEigen {
  RVector values;
  RMatrix vectors;
};
ExpCorrelationEigen exp_correlation_eigen(Index n, double rho);

/// Parametric correlated law: P^2 follows the product of the receive and
/// transmit exponential-correlation eigenvalues, the LOS diagonal carries a
/// fraction rician_k / (1 + rician_k) of the power with phases drawn from
/// `rng`, and the bases are the correlation eigenvectors. Returned normalized.
ChannelSpec make_exp_correlated_spec(Index m, Index n_k, double rho_r, double rho_t,
                                     double rician_k, Rng& rng);

/// Replaces every LOS phase with a fresh uniform draw; magnitudes unchanged.
void redraw_los_phases(CMatrix& hbar, Rng& rng);

/// The text-configurable description of a channel law.
struct ChannelParams {
  ChannelMode mode = ChannelMode::iid;
  Index m = 1;
  Index n_k = 1;
  double rho_r = 0.0;
  double rho_t = 0.0;
  double rician_k = 0.0;
  std::uint64_t seed = 0;
};

/// iid -> ChannelSpec::iid; correlated -> make_exp_correlated_spec seeded by params.seed.
ChannelSpec build_spec(const ChannelParams& params);

/// Raw column-major dump, interleaved re/im as little-endian float64.
void export_complex_matrix(std::ostream& out, const CMatrix& mat);
CMatrix import_complex_matrix(std::istream& in, Index rows, Index cols);

}  // namespace ura
