#pragma once

#include <complex>

#include <Eigen/Dense>

namespace ura {

using Index = Eigen::Index;
using cplx = std::complex<double>;

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Codeword activity powers, one entry per codebook column. Entrywise >= 0.
using GammaVector = Eigen::VectorXd;

}  // namespace ura
