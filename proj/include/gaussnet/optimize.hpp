#pragma once

// Optimal displacement coefficients, an independent scalar search that
// re-derives them from the pipeline, and QSS deployment figures.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gaussnet/criteria.hpp"
#include "gaussnet/error.hpp"
#include "gaussnet/protocol.hpp"

namespace gaussnet {

/// F_B maximizing G^{A->B} with Alice at the server:
/// sqrt(2 eta_ab (1-T2)) V_a / [sqrt(eta_sb T2) (V_a + V_s)].
inline double optimal_fb(double t2, double eta_sb, double eta_ab, double v_a, double v_s) {
  detail::require_unit_interval(t2, "t2");
  detail::require_unit_interval(eta_sb, "eta_sb");
  detail::require_unit_interval(eta_ab, "eta_ab");
  detail::require(t2 > 0.0 && eta_sb > 0.0, "optimal F_B is undefined for t2 = 0 or eta_sb = 0");
  return std::sqrt(2.0 * eta_ab * (1.0 - t2)) * v_a / (std::sqrt(eta_sb * t2) * (v_a + v_s));
}

/// F_D maximizing G^{A->BD} with balanced splitters and uniform loss eta.
inline double optimal_fd(double eta, double v_a, double v_s) {
  detail::require_unit_interval(eta, "eta");
  return 2.0 * std::sqrt(eta) * v_a / (v_a + v_s);
}

/// F_B with loss eta_sa between the server and Alice (balanced T1, T2).
/// Reduces to optimal_fb(1/2, ...) at eta_sa = 1.
inline double optimal_fb_general_loss(double eta_sa, double eta_sb, double eta_ab, double v_a, double v_s) {
  detail::require_unit_interval(eta_sa, "eta_sa");
  detail::require_unit_interval(eta_sb, "eta_sb");
  detail::require_unit_interval(eta_ab, "eta_ab");
  detail::require(eta_sb > 0.0, "optimal F_B is undefined for eta_sb = 0");
  return std::sqrt(2.0 * eta_sa * eta_ab) * (1.0 + (v_a - 1.0) * eta_sa) /
         (std::sqrt(eta_sb) * (2.0 + (v_a + v_s - 2.0) * eta_sa));
}

/// F_D = sqrt(2 eta) F_B when every channel, Alice's included, has efficiency eta.
inline double optimal_fd_general_loss(double eta, double v_a, double v_s) {
  detail::require_unit_interval(eta, "eta");
  if (eta == 0.0) return 0.0;
  return std::sqrt(2.0 * eta) * optimal_fb_general_loss(eta, eta, eta, v_a, v_s);
}

enum class Objective { steer_a_to_b, steer_a_to_bd, steer_bd_to_a };
enum class Coefficient { f_b, f_d };
enum class SearchMethod { analytic, golden_section };

inline const char* to_string(SearchMethod m) { return m == SearchMethod::analytic ? "analytic" : "golden_section"; }

struct OptimizationResult {
  double f_star = 0.0;
  double g_star = 0.0;
  bool constraint_active = false;  ///< the separability constraint changed the optimum
  bool boundary = false;           ///< no interior maximum; f_star sits on a bracket end
  SearchMethod method = SearchMethod::golden_section;
};

struct SearchOptions {
  double lo = 0.0;
  double hi = 4.0;
  double tol = 1e-6;
  std::size_t grid_points = 64;
  bool enforce_separability = true;
};

struct ScalarMaximum {
  double x = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  bool boundary = false;
  bool found = false;  ///< some evaluated point was finite
};

/// Maximizes f on [lo, hi].  A uniform grid locates the best cell (f may be
/// flat or -inf over most of the interval), then golden-section refines it
/// to tol.  Returns the best point evaluated.
inline ScalarMaximum maximize_scalar(const std::function<double(double)>& f, double lo, double hi, double tol,
                                     std::size_t grid_points = 64) {
  detail::require(hi > lo, "search bracket must satisfy lo < hi");
  detail::require(tol > 0.0, "search tolerance must be positive");
  detail::require(grid_points >= 3, "need at least 3 grid points");
  ScalarMaximum best;
  auto consider = [&](double x) {
    const double v = f(x);
    if (std::isfinite(v) && (!best.found || v > best.value)) {
      best.x = x;
      best.value = v;
      best.found = true;
    }
    return v;
  };

  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::size_t best_k = 0;
  double best_grid = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double x = k + 1 == grid_points ? hi : lo + step * static_cast<double>(k);
    const double v = consider(x);
    if (v > best_grid) {
      best_grid = v;
      best_k = k;
    }
  }
  if (!best.found) return best;

  double a = lo + step * static_cast<double>(best_k == 0 ? 0 : best_k - 1);
  double b = std::min(hi, lo + step * static_cast<double>(best_k + 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = consider(c);
  double fd = consider(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = consider(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = consider(d);
    }
  }
  consider(0.5 * (a + b));
  best.boundary = best.x - lo <= tol || hi - best.x <= tol;
  return best;
}

namespace detail {

inline double objective_value(Objective objective, const ProtocolParams& p) {
  switch (objective) {
    case Objective::steer_a_to_b: {
      const ProtocolParams q = [&] {
        ProtocolParams r = p;
        r.users = Users::two;
        return r;
      }();
      return steerability(build_network_state(q, Stage::final_two_user), Partition{{0}, {1}});
    }
    case Objective::steer_a_to_bd:
      return steerability(build_network_state(p, Stage::final_three_user), Partition{{0}, {1, 2}});
    case Objective::steer_bd_to_a:
      return steerability(build_network_state(p, Stage::final_three_user), Partition{{1, 2}, {0}});
  }
  return 0.0;
}

/// Ancillas in transit stay PPT-separable from everything else.
inline bool ancillas_separable(Objective objective, const ProtocolParams& p) {
  ProtocolParams q = p;
  if (objective == Objective::steer_a_to_b) q.users = Users::two;
  const double tol = kSeparabilityTolerance;
  if (ppt_min(build_network_state(q, Stage::pre_bob), std::vector<std::size_t>{2}) < 1.0 - tol) return false;
  if (q.users == Users::three &&
      ppt_min(build_network_state(q, Stage::pre_david), std::vector<std::size_t>{2}) < 1.0 - tol) {
    return false;
  }
  return true;
}

}  // namespace detail

/// Golden-section search over one displacement coefficient with the other
/// held at its value in `params`.  Points where an ancilla would be
/// entangled with the rest of the network are rejected when
/// options.enforce_separability is set.
inline OptimizationResult numeric_optimize_coefficient(Objective objective, const ProtocolParams& params,
                                                       Coefficient which, const SearchOptions& options = {}) {
  params.validate();
  if (objective != Objective::steer_a_to_b) {
    detail::require(params.users == Users::three, "three-user objective needs a three-user network");
  }
  if (objective == Objective::steer_a_to_b) {
    detail::require(which == Coefficient::f_b, "G^{A->B} does not depend on F_D");
  }
  auto evaluate = [&](bool constrained) {
    return [&, constrained](double x) {
      ProtocolParams p = params;
      (which == Coefficient::f_b ? p.f_b : p.f_d) = x;
      if (constrained && !detail::ancillas_separable(objective, p)) return -std::numeric_limits<double>::infinity();
      return detail::objective_value(objective, p);
    };
  };

  const ScalarMaximum best = maximize_scalar(evaluate(options.enforce_separability), options.lo, options.hi,
                                             options.tol, options.grid_points);
  if (!best.found) throw NumericalError("no feasible coefficient in the search bracket");
  OptimizationResult r;
  r.f_star = best.x;
  r.g_star = std::max(0.0, best.value);
  r.boundary = best.boundary;
  r.method = SearchMethod::golden_section;
  if (options.enforce_separability) {
    const ScalarMaximum free =
        maximize_scalar(evaluate(false), options.lo, options.hi, options.tol, options.grid_points);
    r.constraint_active = free.value > best.value + 1e-9;
  }
  return r;
}

/// ln(e/2), computed as 1 - ln 2.
inline const double kLnEOver2 = 1.0 - std::log(2.0);

/// Guaranteed secret key rate of one-sided device-independent QSS.
inline double key_rate(double g_bd_to_a) {
  detail::require(g_bd_to_a >= 0.0, "steerability must be nonnegative");
  return std::max(0.0, g_bd_to_a - kLnEOver2);
}

inline constexpr double kFiberLossDbPerKm = 0.2;

/// Fiber length with transmission eta = 10^{-alpha L / 10}.
inline double fiber_distance(double eta, double alpha_db_per_km = kFiberLossDbPerKm) {
  detail::require(eta > 0.0 && eta <= 1.0, "fiber distance needs 0 < eta <= 1");
  detail::require(alpha_db_per_km > 0.0, "fiber loss must be positive");
  return -10.0 * std::log10(eta) / alpha_db_per_km;
}

/// Smallest eta in [lo, hi] above which `present(eta)` holds, by bisection,
/// assuming present is false at lo and true at hi.
inline double onset_efficiency(const std::function<bool(double)>& present, double lo, double hi,
                               double tol = 1e-6) {
  detail::require(hi > lo, "onset bracket must satisfy lo < hi");
  if (!present(hi)) return std::numeric_limits<double>::infinity();
  if (present(lo)) return lo;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (present(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace gaussnet
