#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "gaussnet/error.hpp"

namespace gaussnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Block-diagonal symplectic form with one [[0,1],[-1,0]] block per mode,
/// matching the (x1,p1,...,xn,pn) quadrature ordering.
class SymplecticForm {
 public:
  explicit SymplecticForm(std::size_t n_modes) : n_modes_(n_modes) {
    detail::require(n_modes >= 1, "symplectic form needs at least one mode");
    const auto dim = static_cast<Eigen::Index>(2 * n_modes);
    omega_ = Matrix::Zero(dim, dim);
    for (Eigen::Index k = 0; k < dim; k += 2) {
      omega_(k, k + 1) = 1.0;
      omega_(k + 1, k) = -1.0;
    }
  }

  std::size_t n_modes() const { return n_modes_; }
  const Matrix& matrix() const { return omega_; }

 private:
  std::size_t n_modes_;
  Matrix omega_;
};

namespace detail {

inline double symmetry_defect(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline void require_covariance_shape(const Matrix& cov) {
  require(cov.rows() == cov.cols(), "covariance matrix must be square");
  require(cov.rows() > 0 && cov.rows() % 2 == 0, "covariance matrix dimension must be even and nonzero");
}

}  // namespace detail

/// Tolerance on the +/- pairing of the spectrum of i*Omega*cov, relative to
/// the largest symplectic eigenvalue.
inline constexpr double kPairingTolerance = 1e-9;

/// Symplectic eigenvalues of a positive-definite covariance matrix, ascending.
///
/// With cov = L L^T the real antisymmetric K = L^T Omega L is similar to
/// Omega*cov, and i*K is Hermitian with spectrum {+nu_j, -nu_j}.  The pairing
/// is checked before the positive half is returned.
inline std::vector<double> symplectic_eigenvalues(const Matrix& cov) {
  detail::require_covariance_shape(cov);
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (detail::symmetry_defect(cov) > 1e-10 * scale) {
    throw InvalidArgument("covariance matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance matrix is not positive definite");
  }
  const Matrix lower = llt.matrixL();
  const auto n = static_cast<std::size_t>(cov.rows() / 2);
  const Matrix k = lower.transpose() * SymplecticForm(n).matrix() * lower;
  const Eigen::MatrixXcd hermitian = std::complex<double>(0.0, 1.0) * k.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symplectic eigenvalue decomposition did not converge");
  }
  const Vector& spectrum = solver.eigenvalues();  // ascending, real
  const auto dim = spectrum.size();
  const double top = std::max(1.0, std::abs(spectrum(dim - 1)));
  for (Eigen::Index j = 0; j < dim / 2; ++j) {
    if (std::abs(spectrum(j) + spectrum(dim - 1 - j)) > kPairingTolerance * top) {
      throw NumericalError("symplectic spectrum is not +/- paired");
    }
  }
  std::vector<double> nu(n);
  for (std::size_t j = 0; j < n; ++j) {
    nu[j] = spectrum(static_cast<Eigen::Index>(n + j));
  }
  return nu;
}

inline double min_symplectic_eigenvalue(const Matrix& cov) {
  return symplectic_eigenvalues(cov).front();
}

/// True iff S Omega S^T = Omega to within tol (max abs entry).
inline bool is_symplectic(const Matrix& s, double tol = 1e-12) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0) return false;
  const Matrix omega = SymplecticForm(static_cast<std::size_t>(s.rows() / 2)).matrix();
  return (s * omega * s.transpose() - omega).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace gaussnet
