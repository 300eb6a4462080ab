#pragma once

// Separability (PPT) and steerability certification of Gaussian states.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/LU>

#include "gaussnet/core.hpp"
#include "gaussnet/error.hpp"
#include "gaussnet/symplectic.hpp"

namespace gaussnet {

/// Ordered split of modes into a steering party N and a steered party M.
/// The union need not cover the whole state; uncovered modes are traced out.
struct Partition {
  std::vector<std::size_t> steering;
  std::vector<std::size_t> steered;

  Partition swapped() const { return {steered, steering}; }

  void validate(std::size_t n_modes) const {
    detail::require(!steering.empty() && !steered.empty(), "both parties of a partition must be nonempty");
    std::vector<bool> used(n_modes, false);
    for (const auto* party : {&steering, &steered}) {
      for (auto m : *party) {
        detail::require(m < n_modes, "partition mode index out of range");
        detail::require(!used[m], "partition parties overlap");
        used[m] = true;
      }
    }
  }

  static Partition from_labels(const GaussianState& state, const std::vector<std::string>& steering,
                               const std::vector<std::string>& steered) {
    Partition p{state.indices_of(steering), state.indices_of(steered)};
    p.validate(state.n_modes());
    return p;
  }

  /// Party N against every remaining mode.
  static Partition one_vs_rest(std::size_t n_modes, std::vector<std::size_t> party) {
    Partition p{std::move(party), {}};
    for (std::size_t m = 0; m < n_modes; ++m) {
      if (std::find(p.steering.begin(), p.steering.end(), m) == p.steering.end()) p.steered.push_back(m);
    }
    p.validate(n_modes);
    return p;
  }
};

enum class Separability { separable, inseparable };

inline const char* to_string(Separability s) { return s == Separability::separable ? "separable" : "inseparable"; }

/// Default tolerance for separability verdicts: ppt >= 1 - tol is separable.
inline constexpr double kSeparabilityTolerance = 1e-9;
/// Schur-complement symplectic eigenvalues at or above 1 - this contribute
/// nothing to the steering sum.
inline constexpr double kSteeringCutoff = 1e-12;
/// Condition-number guard for inverting the steering party's block.
inline constexpr double kMaxConditionNumber = 1e12;

namespace detail {

inline std::vector<Eigen::Index> quadrature_rows(const std::vector<std::size_t>& modes) {
  std::vector<Eigen::Index> rows;
  rows.reserve(2 * modes.size());
  for (auto m : modes) {
    rows.push_back(static_cast<Eigen::Index>(2 * m));
    rows.push_back(static_cast<Eigen::Index>(2 * m + 1));
  }
  return rows;
}

inline std::vector<std::size_t> concat(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  auto out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace detail

/// Flips the sign of every momentum row and column belonging to `party`.
inline Matrix partial_transpose(const Matrix& cov, const std::vector<std::size_t>& party) {
  detail::require_covariance_shape(cov);
  const auto n = static_cast<std::size_t>(cov.rows() / 2);
  Matrix out = cov;
  for (auto m : party) {
    detail::require(m < n, "partial transpose mode index out of range");
    const auto r = static_cast<Eigen::Index>(2 * m + 1);
    out.row(r) *= -1.0;
    out.col(r) *= -1.0;
  }
  return out;
}

/// Smallest symplectic eigenvalue of the state partially transposed on
/// `party`.  Values below 1 certify entanglement across party|rest; for a
/// single-mode party, >= 1 certifies separability.
inline double ppt_min(const GaussianState& state, const std::vector<std::size_t>& party) {
  detail::require(!party.empty() && party.size() < state.n_modes(),
                  "PPT party must be a nonempty strict subset of the modes");
  std::vector<bool> used(state.n_modes(), false);
  for (auto m : party) {
    state.check_mode(m);
    detail::require(!used[m], "PPT party lists a mode twice");
    used[m] = true;
  }
  return min_symplectic_eigenvalue(partial_transpose(state.cov(), party));
}

inline double ppt_min(const GaussianState& state, const std::vector<std::string>& party) {
  return ppt_min(state, state.indices_of(party));
}

/// PPT value of the N|M split of the reduced state on N u M.
inline double ppt_min(const GaussianState& state, const Partition& split) {
  split.validate(state.n_modes());
  const GaussianState reduced = select_modes(state, detail::concat(split.steering, split.steered));
  std::vector<std::size_t> party(split.steering.size());
  for (std::size_t k = 0; k < party.size(); ++k) party[k] = k;
  return ppt_min(reduced, party);
}

/// Closed-form minimum PPT eigenvalue of a two-mode covariance matrix:
/// mu = sqrt[(C - sqrt(C^2 - 4 det sigma)) / 2], C = det N + det M - 2 det gamma.
inline double ppt_two_mode(const Matrix& cov) {
  detail::require(cov.rows() == 4 && cov.cols() == 4, "two-mode PPT needs a 4x4 covariance matrix");
  const double det_n = cov.block<2, 2>(0, 0).determinant();
  const double det_m = cov.block<2, 2>(2, 2).determinant();
  const double det_g = cov.block<2, 2>(0, 2).determinant();
  const double c = det_n + det_m - 2.0 * det_g;
  const double det_s = cov.determinant();
  const double disc = std::max(0.0, c * c - 4.0 * det_s);
  return std::sqrt(std::max(0.0, (c - std::sqrt(disc)) / 2.0));
}

/// Schur complement M - gamma^T N^{-1} gamma of the steering party.
inline Matrix steering_schur_complement(const GaussianState& state, const Partition& partition) {
  partition.validate(state.n_modes());
  const auto rn = detail::quadrature_rows(partition.steering);
  const auto rm = detail::quadrature_rows(partition.steered);
  const Matrix n_block = state.cov()(rn, rn);
  const Matrix m_block = state.cov()(rm, rm);
  const Matrix gamma = state.cov()(rn, rm);
  Eigen::FullPivLU<Matrix> lu(n_block);
  if (!lu.isInvertible()) throw NumericalError("steering party block is singular");
  const Eigen::JacobiSVD<Matrix> svd(n_block);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > kMaxConditionNumber) {
    throw NumericalError("steering party block is ill-conditioned");
  }
  Matrix schur = m_block - gamma.transpose() * lu.solve(gamma);
  return 0.5 * (schur + schur.transpose());
}

/// Gaussian steerability G^{N->M} = max{0, -sum_{nu_j < 1} ln nu_j} over the
/// symplectic eigenvalues of the Schur complement.
inline double steerability(const GaussianState& state, const Partition& partition) {
  const auto nu = symplectic_eigenvalues(steering_schur_complement(state, partition));
  double g = 0.0;
  for (double v : nu) {
    if (v < 1.0 - kSteeringCutoff) g -= std::log(v);
  }
  return std::max(0.0, g);
}

inline double steerability(const GaussianState& state, const std::vector<std::string>& steering,
                           const std::vector<std::string>& steered) {
  return steerability(state, Partition::from_labels(state, steering, steered));
}

/// Per-split certification results.
struct SplitEntry {
  std::string split;     ///< "A|B0,C1"
  std::string forward;   ///< "A->B0,C1"
  std::string backward;  ///< "B0,C1->A"
  double ppt = 0.0;
  double g_forward = 0.0;
  double g_backward = 0.0;
  Separability verdict = Separability::separable;
};

struct SteeringReport {
  std::vector<SplitEntry> entries;
  double tolerance = kSeparabilityTolerance;

  const SplitEntry& entry(std::string_view split) const {
    for (const auto& e : entries) {
      if (e.split == split) return e;
    }
    throw InvalidArgument("no split '" + std::string(split) + "' in report");
  }

  double ppt(std::string_view split) const { return entry(split).ppt; }
  Separability verdict(std::string_view split) const { return entry(split).verdict; }

  /// Looks a direction up in either orientation of the stored splits.
  double steer(std::string_view direction) const {
    for (const auto& e : entries) {
      if (e.forward == direction) return e.g_forward;
      if (e.backward == direction) return e.g_backward;
    }
    throw InvalidArgument("no direction '" + std::string(direction) + "' in report");
  }
};

inline std::string join_labels(const GaussianState& state, const std::vector<std::size_t>& modes) {
  std::string out;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (k) out += ',';
    out += state.label(modes[k]);
  }
  return out;
}

/// PPT and both steering directions per split.  Measured matrices can be
/// slightly unphysical; pass require_physical = false to evaluate them anyway
/// (they must still be positive definite).
inline SteeringReport full_report(const GaussianState& state, const std::vector<Partition>& splits,
                                  double tol = kSeparabilityTolerance, bool require_physical = true) {
  if (require_physical && !is_physical(state, tol)) throw NumericalError("state is not physical");
  SteeringReport report;
  report.tolerance = tol;
  for (const auto& split : splits) {
    split.validate(state.n_modes());
    SplitEntry e;
    const auto n = join_labels(state, split.steering);
    const auto m = join_labels(state, split.steered);
    e.split = n + "|" + m;
    e.forward = n + "->" + m;
    e.backward = m + "->" + n;
    e.ppt = ppt_min(state, split);
    e.g_forward = steerability(state, split);
    e.g_backward = steerability(state, split.swapped());
    e.verdict = e.ppt >= 1.0 - tol ? Separability::separable : Separability::inseparable;
    report.entries.push_back(std::move(e));
  }
  return report;
}

/// Every single-mode-versus-rest split of the state.
inline std::vector<Partition> one_vs_rest_splits(std::size_t n_modes) {
  std::vector<Partition> out;
  for (std::size_t m = 0; m < n_modes; ++m) out.push_back(Partition::one_vs_rest(n_modes, {m}));
  return out;
}

}  // namespace gaussnet
