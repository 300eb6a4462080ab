#pragma once

// Shot-level Monte-Carlo twin of build_network_state.  Each shot draws the
// input quadratures, one shared (x_dis, p_dis) pair and a fresh vacuum pair
// at every loss site, then pushes the numbers through the same linear maps.
// Shot k uses its own generator seeded from (seed, k), so batches do not
// depend on how shots are split across threads.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gaussnet/error.hpp"
#include "gaussnet/protocol.hpp"
#include "gaussnet/symplectic.hpp"

namespace gaussnet {

/// SplitMix64; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t shot_stream_seed(std::uint64_t seed, std::uint64_t shot) {
  SplitMix64 mix(seed ^ SplitMix64(shot)());
  return mix();
}

struct ShotBatch {
  std::size_t n_shots = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> labels;
  Matrix quads;  ///< n_shots x 2n, columns (x1,p1,...,xn,pn) of the retained modes
};

namespace detail {

/// Quadratures of the four network modes, (x,p) per mode.
struct ShotModes {
  std::array<double, 8> q{};
  double& x(std::size_t m) { return q[2 * m]; }
  double& p(std::size_t m) { return q[2 * m + 1]; }
};

enum NetMode : std::size_t { kA = 0, kB = 1, kC = 2, kD = 3 };

inline void shot_loss(ShotModes& s, std::size_t m, double eta, double vac_x, double vac_p) {
  const double g = std::sqrt(eta);
  const double r = std::sqrt(1.0 - eta);
  s.x(m) = g * s.x(m) + r * vac_x;
  s.p(m) = g * s.p(m) + r * vac_p;
}

/// Same port convention as beam_splitter_matrix.
inline void shot_beam_splitter(ShotModes& s, std::size_t i, std::size_t j, double t) {
  const double st = std::sqrt(t);
  const double sr = std::sqrt(1.0 - t);
  for (std::size_t k = 0; k < 2; ++k) {
    const double a = s.q[2 * i + k];
    const double b = s.q[2 * j + k];
    s.q[2 * i + k] = st * a + sr * b;
    s.q[2 * j + k] = sr * a - st * b;
  }
}

/// Slot (into ShotModes) of each retained mode for a stage.  After the
/// network runs, slot kA holds A, kB holds B0 then B, kC holds C1 then C2,
/// kD holds D0 and finally D.
inline std::vector<std::pair<std::string, std::size_t>> stage_slots(Stage stage) {
  switch (stage) {
    case Stage::pre_bob: return {{"A", kA}, {"B0", kB}, {"C1", kC}};
    case Stage::final_two_user: return {{"A", kA}, {"B", kB}};
    case Stage::pre_david: return {{"A", kA}, {"B", kB}, {"C2", kC}, {"D0", kD}};
    case Stage::final_three_user: return {{"A", kA}, {"B", kB}, {"D", kD}};
  }
  return {};
}

inline ShotModes sample_one_shot(const ProtocolParams& p, Stage stage, std::uint64_t seed, std::uint64_t shot) {
  SplitMix64 rng(shot_stream_seed(seed, shot));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double variance) { return std::sqrt(variance) * normal(rng); };

  ShotModes s;
  // Inputs: A_in p-squeezed, C_in x-squeezed, B_in and D_in vacuum-variance.
  s.x(kA) = draw(p.v_a);
  s.p(kA) = draw(p.v_s);
  s.x(kB) = draw(1.0);
  s.p(kB) = draw(1.0);
  s.x(kC) = draw(p.v_s);
  s.p(kC) = draw(p.v_a);
  s.x(kD) = draw(1.0);
  s.p(kD) = draw(1.0);
  const double x_dis = draw(p.v_dis);
  const double p_dis = draw(p.v_dis);
  // Vacuum injections, drawn unconditionally so every shot consumes the same stream layout.
  std::array<double, 12> vac{};
  for (auto& v : vac) v = normal(rng);

  s.x(kC) += p.f_c * x_dis;
  s.p(kA) += p.f_a * p_dis;
  s.x(kB) += p.f_b * x_dis;
  s.p(kB) -= p.f_b * p_dis;
  s.x(kD) += p.f_d * x_dis;
  s.p(kD) -= p.f_d * p_dis;

  shot_loss(s, kA, p.eta_sa, vac[0], vac[1]);
  shot_loss(s, kC, p.eta_sa, vac[2], vac[3]);
  shot_loss(s, kB, p.eta_sb, vac[4], vac[5]);
  shot_loss(s, kD, p.eta_sd, vac[6], vac[7]);
  shot_beam_splitter(s, kA, kC, p.t1);  // A, C1
  shot_loss(s, kC, p.eta_ab, vac[8], vac[9]);
  if (stage == Stage::pre_bob) return s;
  shot_beam_splitter(s, kB, kC, p.t2);  // B, C2
  if (stage == Stage::final_two_user) return s;
  shot_loss(s, kC, p.eta_bd, vac[10], vac[11]);
  if (stage == Stage::pre_david) return s;
  shot_beam_splitter(s, kD, kC, p.t3);  // C3 in slot kD, D in slot kC
  std::swap(s.q[2 * kC], s.q[2 * kD]);
  std::swap(s.q[2 * kC + 1], s.q[2 * kD + 1]);
  return s;
}

}  // namespace detail

/// Draws n_shots homodyne records of the modes retained at `stage`.
inline ShotBatch simulate_shots(const ProtocolParams& params, Stage stage, std::size_t n_shots, std::uint64_t seed,
                                unsigned threads = 1) {
  params.validate();
  detail::require_stage_matches(params, stage);
  detail::require(n_shots >= 2, "need at least two shots");
  const auto slots = detail::stage_slots(stage);
  ShotBatch batch;
  batch.n_shots = n_shots;
  batch.seed = seed;
  for (const auto& [label, slot] : slots) batch.labels.push_back(label);
  batch.quads.resize(static_cast<Eigen::Index>(n_shots), static_cast<Eigen::Index>(2 * slots.size()));

  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      detail::ShotModes s = detail::sample_one_shot(params, stage, seed, k);
      for (std::size_t c = 0; c < slots.size(); ++c) {
        batch.quads(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(2 * c)) = s.x(slots[c].second);
        batch.quads(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(2 * c + 1)) = s.p(slots[c].second);
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_shots)));
  if (threads == 1) {
    fill(0, n_shots);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_shots + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(n_shots, b + chunk);
      if (b < e) pool.emplace_back(fill, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return batch;
}

/// Unbiased sample covariance (divisor n-1) with the sample mean removed.
inline Matrix estimate_covariance(const ShotBatch& batch) {
  const auto n = batch.quads.rows();
  detail::require(n >= 2, "need at least two shots to estimate a covariance");
  detail::require(batch.quads.cols() > 0, "batch has no quadrature columns");
  const Eigen::RowVectorXd mean = batch.quads.colwise().mean();
  const Matrix centered = batch.quads.rowwise() - mean;
  Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  return 0.5 * (cov + cov.transpose());
}

struct FlaggedElement {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double z = 0.0;
};

struct CovarianceComparison {
  double max_abs_deviation = 0.0;
  Matrix z_scores;
  std::vector<FlaggedElement> flagged;  ///< upper triangle, |z| > threshold
};

inline constexpr double kFlagSigma = 5.0;

/// Element-wise comparison of a sample covariance against its expectation;
/// the standard error of element (i,j) is sqrt((s_ii s_jj + s_ij^2) / n).
inline CovarianceComparison compare_covariance(const Matrix& estimated, const Matrix& analytic, std::size_t n_shots,
                                               double flag_sigma = kFlagSigma) {
  detail::require(estimated.rows() == analytic.rows() && estimated.cols() == analytic.cols(),
                  "covariance matrices differ in dimension");
  detail::require(n_shots >= 1, "need a positive shot count");
  CovarianceComparison out;
  const Matrix diff = estimated - analytic;
  out.max_abs_deviation = diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
  out.z_scores = Matrix::Zero(diff.rows(), diff.cols());
  for (Eigen::Index i = 0; i < diff.rows(); ++i) {
    for (Eigen::Index j = 0; j < diff.cols(); ++j) {
      const double var = (analytic(i, i) * analytic(j, j) + analytic(i, j) * analytic(i, j)) /
                         static_cast<double>(n_shots);
      const double se = std::sqrt(std::max(var, 0.0));
      const double z = se > 0.0 ? diff(i, j) / se : (diff(i, j) == 0.0 ? 0.0 : HUGE_VAL);
      out.z_scores(i, j) = z;
      if (j >= i && std::abs(z) > flag_sigma) out.flagged.push_back({i, j, z});
    }
  }
  return out;
}

}  // namespace gaussnet
