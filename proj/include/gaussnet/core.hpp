#pragma once

// Gaussian states as covariance matrices over labelled optical modes, and the
// linear operations of the distribution network: squeezed inputs, beam
// splitters, pure-loss channels and shared classical displacement noise.
//
// Conventions: quadrature ordering (x1,p1,...,xn,pn); vacuum variance 1,
// i.e. [x,p] = 2i.  First moments are identically zero and are not tracked.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gaussnet/error.hpp"
#include "gaussnet/symplectic.hpp"

namespace gaussnet {

class GaussianState {
 public:
  /// Takes ownership of cov and symmetrizes it.  labels must be unique and
  /// one per mode.
  GaussianState(Matrix cov, std::vector<std::string> labels) : cov_(std::move(cov)), labels_(std::move(labels)) {
    detail::require_covariance_shape(cov_);
    detail::require(static_cast<std::size_t>(cov_.rows()) == 2 * labels_.size(),
                    "need exactly one label per mode");
    detail::require(cov_.allFinite(), "covariance matrix has non-finite entries");
    std::unordered_set<std::string_view> seen;
    for (const auto& l : labels_) {
      detail::require(!l.empty(), "mode labels must be nonempty");
      detail::require(seen.insert(l).second, "duplicate mode label '" + l + "'");
    }
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  }

  /// Labels default to "1","2",...
  explicit GaussianState(Matrix cov) : GaussianState(cov, default_labels(cov)) {}

  std::size_t n_modes() const { return labels_.size(); }
  const Matrix& cov() const { return cov_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }

  std::size_t index_of(std::string_view label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw InvalidArgument("unknown mode label '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels_.begin());
  }

  bool has_label(std::string_view label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
  }

  std::vector<std::size_t> indices_of(const std::vector<std::string>& labels) const {
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(index_of(l));
    return out;
  }

  /// 2x2 block between modes i and j.
  Eigen::Matrix2d block(std::size_t i, std::size_t j) const {
    check_mode(i);
    check_mode(j);
    return cov_.block<2, 2>(static_cast<Eigen::Index>(2 * i), static_cast<Eigen::Index>(2 * j));
  }

  double var_x(std::size_t i) const { return block(i, i)(0, 0); }
  double var_p(std::size_t i) const { return block(i, i)(1, 1); }

  GaussianState relabeled(std::size_t i, std::string label) const {
    check_mode(i);
    auto labels = labels_;
    labels[i] = std::move(label);
    return GaussianState(cov_, std::move(labels));
  }

  void check_mode(std::size_t i) const {
    if (i >= n_modes()) {
      throw InvalidArgument("mode index " + std::to_string(i) + " out of range for " + std::to_string(n_modes()) +
                            "-mode state");
    }
  }

 private:
  static std::vector<std::string> default_labels(const Matrix& cov) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < cov.rows() / 2; ++i) out.push_back(std::to_string(i + 1));
    return out;
  }

  Matrix cov_;
  std::vector<std::string> labels_;
};

enum class SqueezeSign { squeezed, antisqueezed };
enum class Orientation { x_squeezed, p_squeezed };

/// Variance corresponding to a squeezing level given as a positive dB magnitude.
inline double db_to_variance(double db, SqueezeSign sign) {
  return sign == SqueezeSign::squeezed ? std::pow(10.0, -db / 10.0) : std::pow(10.0, db / 10.0);
}

inline GaussianState vacuum(std::size_t n) {
  detail::require(n >= 1, "vacuum needs at least one mode");
  const auto dim = static_cast<Eigen::Index>(2 * n);
  return GaussianState(Matrix::Identity(dim, dim));
}

inline GaussianState vacuum(std::vector<std::string> labels) {
  detail::require(!labels.empty(), "vacuum needs at least one mode");
  const auto dim = static_cast<Eigen::Index>(2 * labels.size());
  return GaussianState(Matrix::Identity(dim, dim), std::move(labels));
}

/// Single-mode squeezed (possibly mixed) state with diagonal covariance.
inline GaussianState squeezed_mode(double v_s, double v_a, Orientation orientation, std::string label = "1") {
  detail::require(v_s > 0.0 && v_a > 0.0, "squeezed-state variances must be positive");
  detail::require(v_s <= 1.0 + 1e-12 && v_a >= 1.0 - 1e-12, "expected v_s <= 1 <= v_a");
  Matrix cov = Matrix::Zero(2, 2);
  if (orientation == Orientation::x_squeezed) {
    cov(0, 0) = v_s;
    cov(1, 1) = v_a;
  } else {
    cov(0, 0) = v_a;
    cov(1, 1) = v_s;
  }
  return GaussianState(std::move(cov), {std::move(label)});
}

inline GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  auto labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  const auto na = a.cov().rows();
  const auto nb = b.cov().rows();
  Matrix cov = Matrix::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return GaussianState(std::move(cov), std::move(labels));  // rejects duplicate labels
}

/// Symplectic matrix of a beam splitter of transmittance T acting on modes
/// i and j of an n-mode system:
///   a_i' = sqrt(T) a_i + sqrt(1-T) a_j
///   a_j' = sqrt(1-T) a_i - sqrt(T) a_j
/// applied identically to x and p.
inline Matrix beam_splitter_matrix(std::size_t n_modes, std::size_t i, std::size_t j, double transmittance) {
  detail::require_unit_interval(transmittance, "beam-splitter transmittance");
  detail::require(i != j, "beam splitter needs two distinct modes");
  detail::require(i < n_modes && j < n_modes, "beam-splitter mode out of range");
  const auto dim = static_cast<Eigen::Index>(2 * n_modes);
  Matrix s = Matrix::Identity(dim, dim);
  const double t = std::sqrt(transmittance);
  const double r = std::sqrt(1.0 - transmittance);
  for (Eigen::Index q = 0; q < 2; ++q) {
    const auto a = static_cast<Eigen::Index>(2 * i) + q;
    const auto b = static_cast<Eigen::Index>(2 * j) + q;
    s(a, a) = t;
    s(a, b) = r;
    s(b, a) = r;
    s(b, b) = -t;
  }
  return s;
}

inline GaussianState beam_splitter(const GaussianState& state, std::size_t i, std::size_t j, double transmittance) {
  const Matrix s = beam_splitter_matrix(state.n_modes(), i, j, transmittance);
  return GaussianState(s * state.cov() * s.transpose(), state.labels());
}

inline GaussianState beam_splitter(const GaussianState& state, std::string_view i, std::string_view j,
                                   double transmittance) {
  return beam_splitter(state, state.index_of(i), state.index_of(j), transmittance);
}

/// Pure-loss channel o -> sqrt(eta) o + sqrt(1-eta) o_vac on mode i.
inline GaussianState loss_channel(const GaussianState& state, std::size_t i, double eta) {
  detail::require_unit_interval(eta, "transmission efficiency");
  state.check_mode(i);
  Matrix cov = state.cov();
  const double g = std::sqrt(eta);
  const auto r = static_cast<Eigen::Index>(2 * i);
  cov.middleRows(r, 2) *= g;
  cov.middleCols(r, 2) *= g;
  cov(r, r) += 1.0 - eta;
  cov(r + 1, r + 1) += 1.0 - eta;
  return GaussianState(std::move(cov), state.labels());
}

inline GaussianState loss_channel(const GaussianState& state, std::string_view i, double eta) {
  return loss_channel(state, state.index_of(i), eta);
}

/// Shared classical displacement noise: every mode k receives
/// x_k += x_coeffs[k] * x_dis and p_k += p_coeffs[k] * p_dis, with x_dis and
/// p_dis independent zero-mean Gaussians of variance v_dis.
struct NoisePattern {
  std::vector<double> x_coeffs;
  std::vector<double> p_coeffs;
  double v_dis = 0.0;
};

inline GaussianState add_correlated_noise(const GaussianState& state, const NoisePattern& pattern) {
  const std::size_t n = state.n_modes();
  detail::require(pattern.x_coeffs.size() == n && pattern.p_coeffs.size() == n,
                  "noise pattern length does not match the number of modes");
  detail::require(pattern.v_dis >= 0.0, "displacement variance must be nonnegative");
  const auto dim = static_cast<Eigen::Index>(2 * n);
  Vector u = Vector::Zero(dim);
  Vector w = Vector::Zero(dim);
  for (std::size_t k = 0; k < n; ++k) {
    u(static_cast<Eigen::Index>(2 * k)) = pattern.x_coeffs[k];
    w(static_cast<Eigen::Index>(2 * k + 1)) = pattern.p_coeffs[k];
  }
  Matrix cov = state.cov() + pattern.v_dis * (u * u.transpose() + w * w.transpose());
  return GaussianState(std::move(cov), state.labels());
}

/// Gaussian partial trace onto the kept modes, in the requested order.
inline GaussianState select_modes(const GaussianState& state, const std::vector<std::size_t>& keep) {
  detail::require(!keep.empty(), "must keep at least one mode");
  std::vector<bool> used(state.n_modes(), false);
  std::vector<Eigen::Index> rows;
  std::vector<std::string> labels;
  for (auto m : keep) {
    state.check_mode(m);
    detail::require(!used[m], "mode " + state.label(m) + " selected twice");
    used[m] = true;
    rows.push_back(static_cast<Eigen::Index>(2 * m));
    rows.push_back(static_cast<Eigen::Index>(2 * m + 1));
    labels.push_back(state.label(m));
  }
  Matrix cov = state.cov()(rows, rows);
  return GaussianState(std::move(cov), std::move(labels));
}

inline GaussianState select_modes(const GaussianState& state, const std::vector<std::string>& keep) {
  return select_modes(state, state.indices_of(keep));
}

/// sigma + i*Omega >= 0, checked via the smallest symplectic eigenvalue.
inline bool is_physical(const GaussianState& state, double tol = 1e-9) {
  try {
    return min_symplectic_eigenvalue(state.cov()) >= 1.0 - tol;
  } catch (const NumericalError&) {
    return false;
  }
}

}  // namespace gaussnet
