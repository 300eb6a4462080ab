#include <gtest/gtest.h>

#include <cmath>

#include "gaussnet/criteria.hpp"
#include "gaussnet/io.hpp"
#include "gaussnet/protocol.hpp"
#include "testing.hpp"

using namespace gaussnet;
using testing_util::max_abs_diff;

namespace {

GaussianState measured_three_mode() { return io::read_cov_matrix_file(GAUSSNET_TEST_DATA "/sigma_ab0c1.txt"); }
GaussianState measured_four_mode() { return io::read_cov_matrix_file(GAUSSNET_TEST_DATA "/sigma_abc2d0.txt"); }

/// Printed coefficients with the rounded 0.50 / 3.55 variances.
ProtocolParams printed_two_user() {
  ProtocolParams p;
  p.v_s = 0.5;
  p.v_a = 3.55;
  p.f_b = 1.239;
  return p;
}

}  // namespace

TEST(SymplecticEigenvalues, Basics) {
  for (double v : symplectic_eigenvalues(Matrix::Identity(6, 6))) EXPECT_NEAR(v, 1.0, 1e-12);
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 0.5;
  m(1, 1) = 3.55;
  const auto nu = symplectic_eigenvalues(m);
  ASSERT_EQ(nu.size(), 1u);
  EXPECT_NEAR(nu[0], std::sqrt(0.5 * 3.55), 1e-12);
  EXPECT_NEAR(nu[0], 1.332, 1e-3);
}

TEST(SymplecticEigenvalues, InvariantUnderBeamSplitter) {
  const auto in = tensor(GaussianState(testing_util::random_physical_cov(1), {"a"}),
                         GaussianState(testing_util::random_physical_cov(1), {"b"}));
  const auto before = symplectic_eigenvalues(in.cov());
  const auto after = symplectic_eigenvalues(beam_splitter(in, 0, 1, 0.3).cov());
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(before[k], after[k], 1e-10);
}

TEST(SymplecticEigenvalues, MatchReferenceOnRandomStates) {
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
    const Matrix c = testing_util::random_physical_cov(n);
    const auto got = symplectic_eigenvalues(c);
    const auto ref = testing_util::reference_symplectic_eigenvalues(c);
    ASSERT_EQ(got.size(), n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(got[k], ref[k], 1e-8 * std::max(1.0, ref[k]));
    EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
  }
}

TEST(SymplecticEigenvalues, RejectsBadInput) {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.3;
  EXPECT_THROW(symplectic_eigenvalues(asym), InvalidArgument);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  EXPECT_THROW(symplectic_eigenvalues(indefinite), NumericalError);
  EXPECT_THROW(symplectic_eigenvalues(Matrix::Identity(3, 3)), InvalidArgument);
}

TEST(PartialTranspose, InvolutionAndReference) {
  const Matrix c = testing_util::random_physical_cov(3);
  EXPECT_EQ(partial_transpose(partial_transpose(c, {0, 2}), {0, 2}), c);
  EXPECT_LT(max_abs_diff(partial_transpose(c, {1}), testing_util::reference_partial_transpose(c, {1})), 0.0 + 1e-15);
  EXPECT_THROW(partial_transpose(c, {3}), InvalidArgument);
}

TEST(PartialTranspose, ProductStateUnchangedSpectrum) {
  const auto s = tensor(GaussianState(testing_util::random_physical_cov(1), {"a"}),
                        GaussianState(testing_util::random_physical_cov(1), {"b"}));
  const auto before = symplectic_eigenvalues(s.cov());
  const auto after = symplectic_eigenvalues(partial_transpose(s.cov(), {0}));
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(before[k], after[k], 1e-10);
}

TEST(PptMin, MeasuredThreeModeMatrix) {
  const auto s = measured_three_mode();
  EXPECT_NEAR(ppt_min(s, std::vector<std::string>{"A"}), 0.701, 0.01);
  EXPECT_NEAR(ppt_min(s, std::vector<std::string>{"B0"}), 1.182, 0.01);
  EXPECT_NEAR(ppt_min(s, std::vector<std::string>{"C1"}), 1.264, 0.01);
}

TEST(PptMin, MeasuredFourModeMatrix) {
  const auto s = measured_four_mode();
  EXPECT_NEAR(ppt_min(s, std::vector<std::string>{"A"}), 0.589, 0.01);
  EXPECT_NEAR(ppt_min(s, std::vector<std::string>{"B"}), 0.686, 0.01);
  EXPECT_NEAR(ppt_min(s, std::vector<std::string>{"C2"}), 1.177, 0.01);
  EXPECT_NEAR(ppt_min(s, std::vector<std::string>{"D0"}), 1.183, 0.01);
}

TEST(PptMin, ProductStatesAreSeparable) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = tensor(GaussianState(testing_util::random_physical_cov(1), {"a"}),
                          GaussianState(testing_util::random_physical_cov(2), {"b", "c"}));
    EXPECT_GE(ppt_min(s, std::vector<std::size_t>{0}), 1.0 - 1e-9);
  }
}

TEST(PptMin, RejectsEmptyAndFullParty) {
  const auto s = vacuum(2);
  EXPECT_THROW(ppt_min(s, std::vector<std::size_t>{}), InvalidArgument);
  EXPECT_THROW(ppt_min(s, std::vector<std::size_t>{0, 1}), InvalidArgument);
  EXPECT_THROW(ppt_min(s, std::vector<std::size_t>{0, 0}), InvalidArgument);
}

TEST(PptMin, PartitionFormTracesOutRest) {
  const auto s = GaussianState(testing_util::random_physical_cov(3));
  const double direct = ppt_min(select_modes(s, std::vector<std::size_t>{0, 2}), std::vector<std::size_t>{0});
  EXPECT_NEAR(ppt_min(s, Partition{{0}, {2}}), direct, 1e-14);
}

TEST(PptTwoMode, VacuumAndPrintedTwoUserState) {
  EXPECT_NEAR(ppt_two_mode(Matrix::Identity(4, 4)), 1.0, 1e-12);
  const auto s = build_network_state(printed_two_user(), Stage::final_two_user);
  EXPECT_NEAR(ppt_two_mode(s.cov()), 0.682, 2e-3);
  EXPECT_NEAR(ppt_two_mode(s.cov()), ppt_min(s, std::vector<std::size_t>{0}), 1e-9);
  EXPECT_THROW(ppt_two_mode(Matrix::Identity(6, 6)), InvalidArgument);
}

TEST(PptTwoMode, AgreesWithGeneralMethodOnRandomStates) {
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix c = testing_util::random_physical_cov(2, 1.2, 1.5);
    const GaussianState s(c);
    EXPECT_NEAR(ppt_two_mode(c), ppt_min(s, std::vector<std::size_t>{0}), 1e-9);
    EXPECT_NEAR(ppt_two_mode(c), testing_util::reference_min_symplectic(testing_util::reference_partial_transpose(c, {0})),
                1e-8);
  }
}

TEST(Steerability, ProductStatesAreUnsteerable) {
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = tensor(GaussianState(testing_util::random_physical_cov(1), {"a"}),
                          GaussianState(testing_util::random_physical_cov(1), {"b"}));
    EXPECT_EQ(steerability(s, Partition{{0}, {1}}), 0.0);
    EXPECT_EQ(steerability(s, Partition{{1}, {0}}), 0.0);
  }
}

TEST(Steerability, PrintedTwoUserStateIsOneWay) {
  const auto s = build_network_state(printed_two_user(), Stage::final_two_user);
  const double g = steerability(s, Partition{{0}, {1}});
  EXPECT_NEAR(g, std::log(8.10 / 7.60), 2e-3);
  EXPECT_NEAR(g, testing_util::reference_steering(s.cov(), {0}, {1}), 1e-9);
  EXPECT_EQ(steerability(s, Partition{{1}, {0}}), 0.0);
  // B -> A: the conditional A state is the scalar Schur complement.
  const Matrix schur = steering_schur_complement(s, Partition{{1}, {0}});
  EXPECT_NEAR(schur(0, 0), 1.51, 0.01);
}

TEST(Steerability, MatchesReferenceOnRandomStates) {
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix c = testing_util::random_physical_cov(3, 1.0, 0.3);
    const GaussianState s(c);
    EXPECT_NEAR(steerability(s, Partition{{0}, {1, 2}}), testing_util::reference_steering(c, {0}, {1, 2}), 1e-9);
    EXPECT_NEAR(steerability(s, Partition{{1, 2}, {0}}), testing_util::reference_steering(c, {1, 2}, {0}), 1e-9);
    EXPECT_NEAR(steerability(s, Partition{{2}, {0}}), testing_util::reference_steering(c, {2}, {0}), 1e-9);
  }
}

TEST(Steerability, InvariantUnderLocalOperationsOnSteeredParty) {
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianState s(testing_util::random_physical_cov(3, 1.0, 0.3));
    const double t = testing_util::uniform(0, 1);
    const auto rotated = beam_splitter(s, 1, 2, t);
    EXPECT_NEAR(steerability(s, Partition{{0}, {1, 2}}), steerability(rotated, Partition{{0}, {1, 2}}), 1e-9);
  }
}

TEST(Steerability, SteeringImpliesInseparability) {
  for (int trial = 0; trial < 300; ++trial) {
    const GaussianState s(testing_util::random_physical_cov(2, 1.0, 0.5));
    if (steerability(s, Partition{{0}, {1}}) > 0.0) {
      EXPECT_LT(ppt_min(s, std::vector<std::size_t>{0}), 1.0);
    }
  }
}

TEST(Steerability, RejectsSingularSteeringBlock) {
  Matrix c = Matrix::Identity(4, 4);
  c(0, 0) = 0.0;
  const GaussianState s(c);
  EXPECT_THROW(steerability(s, Partition{{0}, {1}}), NumericalError);
  EXPECT_THROW(steerability(vacuum(2), Partition{{0}, {0}}), InvalidArgument);
  EXPECT_THROW(steerability(vacuum(2), Partition{{}, {1}}), InvalidArgument);
}

TEST(FullReport, VacuumEverythingSeparable) {
  const auto rep = full_report(vacuum({"a", "b", "c"}), one_vs_rest_splits(3));
  ASSERT_EQ(rep.entries.size(), 3u);
  for (const auto& e : rep.entries) {
    EXPECT_EQ(e.verdict, Separability::separable);
    EXPECT_EQ(e.g_forward, 0.0);
    EXPECT_EQ(e.g_backward, 0.0);
    EXPECT_NEAR(e.ppt, 1.0, 1e-12);
  }
  EXPECT_EQ(rep.entries[1].split, "b|a,c");
  EXPECT_EQ(rep.entries[1].forward, "b->a,c");
  EXPECT_EQ(rep.entries[1].backward, "a,c->b");
}

TEST(FullReport, ThreeUserOrderingAndOneWaySteering) {
  ProtocolParams p;
  p.users = Users::three;
  p.v_s = 0.5;
  p.v_a = 3.55;
  p.f_b = 1.239;
  p.f_d = 1.752;
  const auto s = build_network_state(p, Stage::final_three_user);
  const auto rep = full_report(s, {Partition{{0}, {1, 2}}, Partition{{0}, {1}}, Partition{{0}, {2}},
                                   Partition{{1}, {2}}});
  EXPECT_GT(rep.steer("A->B,D"), rep.steer("A->B"));
  EXPECT_GT(rep.steer("A->B,D"), rep.steer("A->D"));
  EXPECT_EQ(rep.steer("B->D"), 0.0);
  EXPECT_EQ(rep.steer("D->B"), 0.0);
  EXPECT_EQ(rep.verdict("A|B,D"), Separability::inseparable);
  EXPECT_THROW(rep.steer("X->Y"), InvalidArgument);
}

TEST(FullReport, RejectsUnphysicalUnlessAsked) {
  const auto s4 = measured_four_mode();
  EXPECT_FALSE(is_physical(s4));
  EXPECT_THROW(full_report(s4, one_vs_rest_splits(4)), NumericalError);
  const auto rep = full_report(s4, one_vs_rest_splits(4), kSeparabilityTolerance, false);
  EXPECT_NEAR(rep.ppt("C2|A,B,D0"), 1.177, 0.01);
}
