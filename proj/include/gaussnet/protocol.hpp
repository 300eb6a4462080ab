#pragma once

// The server/multi-user distribution network.  A quantum server prepares a
// p-squeezed mode A_in, an x-squeezed mode C_in and vacuum-variance modes
// B_in, D_in, then adds correlated classical displacement noise so that the
// four outgoing modes are fully separable.  Users interfere what they receive
// on beam splitters and forward one port (the ancilla C1, then C2):
//
//   A0,C0 --[T1 @ Alice]--> A, C1 --(eta_ab)--> [T2 @ Bob with B0] --> B, C2
//   C2 --(eta_bd)--> [T3 @ David with D0] --> D, C3 (discarded)
//
// build_network_state follows those steps with core operations; the
// analytic_* functions are the closed-form covariances for the balanced,
// Alice-at-the-server regime and must agree with the pipeline.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gaussnet/core.hpp"
#include "gaussnet/criteria.hpp"
#include "gaussnet/error.hpp"

namespace gaussnet {

inline constexpr double kNominalSqueezingDb = 3.0;
inline constexpr double kNominalAntisqueezingDb = 5.5;
inline constexpr double kDisplacementVariance = 1.5;

enum class Users { two, three };

enum class Stage { pre_bob, final_two_user, pre_david, final_three_user };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::pre_bob: return "pre_bob";
    case Stage::final_two_user: return "final_two_user";
    case Stage::pre_david: return "pre_david";
    case Stage::final_three_user: return "final_three_user";
  }
  return "?";
}

struct ProtocolParams {
  double v_s = db_to_variance(kNominalSqueezingDb, SqueezeSign::squeezed);
  double v_a = db_to_variance(kNominalAntisqueezingDb, SqueezeSign::antisqueezed);
  double v_dis = kDisplacementVariance;
  double t1 = 0.5;
  double t2 = 0.5;
  double t3 = 0.5;
  double eta_sa = 1.0;
  double eta_sb = 1.0;
  double eta_sd = 1.0;
  double eta_ab = 1.0;
  double eta_bd = 1.0;
  double f_a = 1.0;
  double f_b = 0.0;
  double f_c = 1.0;
  double f_d = 0.0;
  Users users = Users::two;

  void validate() const {
    detail::require(v_s > 0.0 && v_a > 0.0, "squeezing variances must be positive");
    detail::require(v_s <= 1.0 + 1e-12 && v_a >= 1.0 - 1e-12, "expected v_s <= 1 <= v_a");
    detail::require(v_dis >= 0.0, "displacement variance must be nonnegative");
    detail::require_unit_interval(t1, "t1");
    detail::require_unit_interval(t2, "t2");
    detail::require_unit_interval(t3, "t3");
    detail::require_unit_interval(eta_sa, "eta_sa");
    detail::require_unit_interval(eta_sb, "eta_sb");
    detail::require_unit_interval(eta_sd, "eta_sd");
    detail::require_unit_interval(eta_ab, "eta_ab");
    detail::require_unit_interval(eta_bd, "eta_bd");
    for (double f : {f_a, f_b, f_c, f_d}) detail::require(std::isfinite(f), "displacement coefficients must be finite");
  }

  /// Sets every user-side channel to eta (Alice stays at the server).
  ProtocolParams& with_uniform_loss(double eta) {
    eta_sb = eta_sd = eta_ab = eta_bd = eta;
    return *this;
  }
};

namespace detail {

inline void require_stage_matches(const ProtocolParams& p, Stage stage) {
  if (stage == Stage::final_two_user) {
    require(p.users == Users::two, "final_two_user stage needs a two-user network");
  }
  if (stage == Stage::pre_david || stage == Stage::final_three_user) {
    require(p.users == Users::three, std::string(to_string(stage)) + " stage needs a three-user network");
  }
}

inline bool close(double a, double b) { return std::abs(a - b) <= 1e-12; }

/// The printed closed forms assume a balanced T1, Alice at the server and
/// unit F_A, F_C.
inline void require_closed_form_base(const ProtocolParams& p) {
  p.validate();
  require(close(p.t1, 0.5), "closed form requires t1 = 1/2");
  require(close(p.eta_sa, 1.0), "closed form requires eta_sa = 1");
  require(close(p.f_a, 1.0) && close(p.f_c, 1.0), "closed form requires f_a = f_c = 1");
}

inline void require_symmetric_three_user(const ProtocolParams& p) {
  require_closed_form_base(p);
  require(close(p.t2, 0.5) && close(p.t3, 0.5), "three-user closed form requires t2 = t3 = 1/2");
  require(close(p.eta_sb, p.eta_ab) && close(p.eta_sb, p.eta_sd) && close(p.eta_sb, p.eta_bd),
          "three-user closed form requires equal channel efficiencies");
}

}  // namespace detail

/// Server output: the four displaced modes A0,B0,C0,D0 before any channel.
inline GaussianState server_state(const ProtocolParams& p) {
  p.validate();
  GaussianState s = tensor(tensor(squeezed_mode(p.v_s, p.v_a, Orientation::p_squeezed, "A0"), vacuum({"B0"})),
                           tensor(squeezed_mode(p.v_s, p.v_a, Orientation::x_squeezed, "C0"), vacuum({"D0"})));
  // x: C0 +F_C, B0 +F_B, D0 +F_D;  p: A0 +F_A, B0 -F_B, D0 -F_D.
  NoisePattern noise{{0.0, p.f_b, p.f_c, p.f_d}, {p.f_a, -p.f_b, 0.0, -p.f_d}, p.v_dis};
  return add_correlated_noise(s, noise);
}

/// Propagates the server output through the network and keeps the modes
/// belonging to `stage`:
///   pre_bob          -> (A, B0, C1)
///   final_two_user   -> (A, B)
///   pre_david        -> (A, B, C2, D0)
///   final_three_user -> (A, B, D)
inline GaussianState build_network_state(const ProtocolParams& p, Stage stage) {
  p.validate();
  detail::require_stage_matches(p, stage);
  GaussianState s = server_state(p);  // A0 B0 C0 D0
  s = loss_channel(s, "A0", p.eta_sa);
  s = loss_channel(s, "C0", p.eta_sa);
  s = loss_channel(s, "B0", p.eta_sb);
  s = loss_channel(s, "D0", p.eta_sd);

  // Alice: A = first port, C1 = second port.
  s = beam_splitter(s, "A0", "C0", p.t1);
  s = s.relabeled(s.index_of("A0"), "A").relabeled(s.index_of("C0"), "C1");
  s = loss_channel(s, "C1", p.eta_ab);
  if (stage == Stage::pre_bob) return select_modes(s, std::vector<std::string>{"A", "B0", "C1"});

  // Bob: B = first port (B0 side), C2 = second port.
  s = beam_splitter(s, "B0", "C1", p.t2);
  s = s.relabeled(s.index_of("B0"), "B").relabeled(s.index_of("C1"), "C2");
  if (stage == Stage::final_two_user) return select_modes(s, std::vector<std::string>{"A", "B"});

  s = loss_channel(s, "C2", p.eta_bd);
  if (stage == Stage::pre_david) return select_modes(s, std::vector<std::string>{"A", "B", "C2", "D0"});

  // David keeps the second port, D = sqrt(1-T3) D0 - sqrt(T3) C2; C3 is discarded.
  s = beam_splitter(s, "D0", "C2", p.t3);
  s = s.relabeled(s.index_of("D0"), "C3").relabeled(s.index_of("C2"), "D");
  return select_modes(s, std::vector<std::string>{"A", "B", "D"});
}

namespace detail {

/// Fills an x-p block-diagonal covariance from per-mode variances and
/// (x-x, p-p) covariance pairs; x-p cross terms are zero throughout.
struct XpBlockBuilder {
  explicit XpBlockBuilder(std::size_t n) : cov(Matrix::Zero(2 * n, 2 * n)) {}
  void variance(std::size_t i, double vx, double vp) {
    cov(2 * i, 2 * i) = vx;
    cov(2 * i + 1, 2 * i + 1) = vp;
  }
  void covariance(std::size_t i, std::size_t j, double cxx, double cpp) {
    cov(2 * i, 2 * j) = cov(2 * j, 2 * i) = cxx;
    cov(2 * i + 1, 2 * j + 1) = cov(2 * j + 1, 2 * i + 1) = cpp;
  }
  Matrix cov;
};

}  // namespace detail

/// Closed-form covariance of (A, B0, C1) after Alice's balanced beam splitter.
inline Matrix analytic_cov_pre_bob(const ProtocolParams& p) {
  detail::require_closed_form_base(p);
  const double sum = p.v_a + p.v_s + p.v_dis;
  const double var_a = sum / 2.0;
  const double var_b0 = p.eta_sb * (1.0 + p.v_dis * p.f_b * p.f_b) + 1.0 - p.eta_sb;
  const double var_c1 = p.eta_ab * sum / 2.0 + 1.0 - p.eta_ab;
  const double c_ab0 = std::sqrt(2.0 * p.eta_sb) * p.v_dis * p.f_b / 2.0;
  const double c_ac1 = std::sqrt(p.eta_ab) * (p.v_a - p.v_s - p.v_dis) / 2.0;
  const double c_b0c1 = -std::sqrt(2.0 * p.eta_ab * p.eta_sb) * p.v_dis * p.f_b / 2.0;

  detail::XpBlockBuilder b(3);
  b.variance(0, var_a, var_a);
  b.variance(1, var_b0, var_b0);
  b.variance(2, var_c1, var_c1);
  b.covariance(0, 1, c_ab0, -c_ab0);
  b.covariance(0, 2, c_ac1, -c_ac1);
  b.covariance(1, 2, c_b0c1, c_b0c1);
  return b.cov;
}

/// Closed-form covariance of (A, B) for general T2 and channel efficiencies.
inline Matrix analytic_cov_final_two_user(const ProtocolParams& p) {
  detail::require_closed_form_base(p);
  const double sum = p.v_a + p.v_s + p.v_dis;
  const double t2 = p.t2;
  const double var_a = sum / 2.0;
  const double var_b = p.eta_ab * (1.0 - t2) * sum / 2.0 + p.eta_sb * t2 * p.v_dis * p.f_b * p.f_b -
                       std::sqrt(2.0 * p.eta_sb * p.eta_ab * t2 * (1.0 - t2)) * p.v_dis * p.f_b + 1.0 - p.eta_ab +
                       p.eta_ab * t2;
  const double c_ab = (std::sqrt(p.eta_ab * (1.0 - t2)) * (p.v_a - p.v_s - p.v_dis) +
                       std::sqrt(2.0 * p.eta_sb * t2) * p.v_dis * p.f_b) /
                      2.0;
  detail::XpBlockBuilder b(2);
  b.variance(0, var_a, var_a);
  b.variance(1, var_b, var_b);
  b.covariance(0, 1, c_ab, -c_ab);
  return b.cov;
}

/// Closed-form covariance of (A, B, D) with balanced beam splitters and a
/// single efficiency eta on every user channel.
inline Matrix analytic_cov_three_user(const ProtocolParams& p) {
  detail::require_symmetric_three_user(p);
  const double eta = p.eta_sb;
  const double sum = p.v_a + p.v_s + p.v_dis;
  const double vd = p.v_dis;
  const double fb = p.f_b;
  const double fd = p.f_d;
  const double r2 = std::sqrt(2.0);
  const double eta32 = std::sqrt(eta * eta * eta);

  const double f = eta / 2.0 * (vd * fb * fb - 1.0 - r2 * vd * fb) + 1.0;
  const double g = (4.0 + eta * eta * (vd * fb * fb + r2 * vd * fb - 1.0) + 2.0 * eta * vd * fd * fd) / 4.0 -
                   2.0 * eta32 * vd * fd * (r2 * fb + 1.0) / 4.0;
  const double j = (2.0 * std::sqrt(eta) * vd * fd - r2 * eta * vd * fb) / 4.0;
  const double k = (-r2 * eta32 * (vd * fb * fb + 1.0) + r2 * eta * vd * fd * (r2 * fb - 1.0)) / 4.0;

  const double var_a = sum / 2.0;
  const double var_b = eta * sum / 4.0 + f;
  const double var_d = eta * eta * sum / 8.0 + g;
  const double c_ab = std::sqrt(2.0 * eta) * (p.v_a - p.v_s - vd + r2 * vd * fb) / 4.0;
  const double c_ad = eta * (p.v_a - p.v_s - vd) / 4.0 + j;
  const double c_bd = r2 * eta32 * sum / 8.0 + k;

  detail::XpBlockBuilder b(3);
  b.variance(0, var_a, var_a);
  b.variance(1, var_b, var_b);
  b.variance(2, var_d, var_d);
  b.covariance(0, 1, c_ab, -c_ab);
  b.covariance(0, 2, c_ad, -c_ad);
  b.covariance(1, 2, c_bd, c_bd);
  return b.cov;
}

/// Smallest displacement variance keeping C1 separable from (A, B0) at the
/// params' F_B and eta_sb.  +infinity when no variance suffices.
inline double separable_boundary_vsep(const ProtocolParams& p) {
  p.validate();
  const double denom = 2.0 - p.eta_sb * p.f_b * p.f_b * (1.0 - p.v_s);
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * (1.0 - p.v_s) / denom;
}

/// The same boundary with the steering-optimal F_B substituted.
inline double separable_boundary_vsep_optimal(double t2, double eta_ab, double v_a, double v_s) {
  detail::require_unit_interval(t2, "t2");
  detail::require_unit_interval(eta_ab, "eta_ab");
  const double s2 = (v_a + v_s) * (v_a + v_s);
  const double denom = t2 * s2 - eta_ab * (1.0 - t2) * (1.0 - v_s) * v_a * v_a;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return t2 * (1.0 - v_s) * s2 / denom;
}

/// Maximal G^{A->B} at the optimal F_B, general T2 and eta_ab.
inline double closed_form_steering_two_user(const ProtocolParams& p) {
  detail::require_closed_form_base(p);
  const double s = p.v_a + p.v_s;
  const double denom = (1.0 - p.eta_ab + p.eta_ab * p.t2) * s + 2.0 * p.eta_ab * (1.0 - p.t2) * p.v_s * p.v_a;
  return std::max(0.0, std::log(s / denom));
}

struct ThreeUserSteering {
  double a_to_bd = 0.0;
  double a_to_b = 0.0;
  double a_to_d = 0.0;
};

/// G^{A->BD}, G^{A->B}, G^{A->D} at the optimal F_B, F_D in the symmetric regime.
inline ThreeUserSteering closed_form_steering_three_user(const ProtocolParams& p) {
  detail::require_symmetric_three_user(p);
  const double eta = p.eta_sb;
  const double s = p.v_a + p.v_s;
  const double prod = p.v_s * p.v_a;
  ThreeUserSteering out;
  out.a_to_bd = std::log(4.0 * s / ((4.0 - eta * eta - 2.0 * eta) * s + (4.0 * eta + 2.0 * eta * eta) * prod));
  out.a_to_b = std::log(2.0 * s / ((2.0 - eta) * s + 2.0 * eta * prod));
  out.a_to_d = std::log(4.0 * s / ((4.0 - eta * eta) * s + 2.0 * eta * eta * prod));
  out.a_to_bd = std::max(0.0, out.a_to_bd);
  out.a_to_b = std::max(0.0, out.a_to_b);
  out.a_to_d = std::max(0.0, out.a_to_d);
  return out;
}

// Quantum secret sharing resource: -10/+11 dB squeezing with fixed F_B, F_D.
inline constexpr double kQssSqueezingDb = 10.0;
inline constexpr double kQssAntisqueezingDb = 11.0;
inline constexpr double kQssFb = 0.92;
inline constexpr double kQssFd = 1.70;

/// Three-user QSS parameters at user-channel efficiency eta.  With
/// alice_loss the server-to-Alice channel also has efficiency eta.
inline ProtocolParams qss_params(double eta, bool alice_loss = false) {
  ProtocolParams p;
  p.users = Users::three;
  p.v_s = db_to_variance(kQssSqueezingDb, SqueezeSign::squeezed);
  p.v_a = db_to_variance(kQssAntisqueezingDb, SqueezeSign::antisqueezed);
  p.f_b = kQssFb;
  p.f_d = kQssFd;
  p.with_uniform_loss(eta);
  if (alice_loss) p.eta_sa = eta;
  return p;
}

struct QssPoint {
  double eta = 0.0;
  SteeringReport report;  ///< splits A|B,D  B|A  D|A on the final state
  double ppt_c1 = 0.0;    ///< C1 | A,B0
  double ppt_c2 = 0.0;    ///< C2 | A,B,D0

  double g_bd_to_a() const { return report.steer("B,D->A"); }
  double g_b_to_a() const { return report.steer("B->A"); }
  double g_d_to_a() const { return report.steer("D->A"); }
};

/// Steering towards the dealer and ancilla separability of a three-user network.
inline QssPoint qss_point(const ProtocolParams& p, double eta) {
  detail::require(p.users == Users::three, "QSS scenario needs a three-user network");
  QssPoint q;
  q.eta = eta;
  const GaussianState fin = build_network_state(p, Stage::final_three_user);  // A B D
  q.report = full_report(fin, {Partition{{0}, {1, 2}}, Partition{{1}, {0}}, Partition{{2}, {0}}});
  const GaussianState pre_bob = build_network_state(p, Stage::pre_bob);  // A B0 C1
  q.ppt_c1 = ppt_min(pre_bob, std::vector<std::size_t>{2});
  const GaussianState pre_david = build_network_state(p, Stage::pre_david);  // A B C2 D0
  q.ppt_c2 = ppt_min(pre_david, std::vector<std::size_t>{2});
  return q;
}

inline std::vector<QssPoint> qss_scenario(const std::vector<double>& etas, bool alice_loss = false) {
  std::vector<QssPoint> out;
  out.reserve(etas.size());
  for (double eta : etas) out.push_back(qss_point(qss_params(eta, alice_loss), eta));
  return out;
}

}  // namespace gaussnet
