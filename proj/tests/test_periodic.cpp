#include "switchmargin/periodic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace {

using switchmargin::Mat;
using switchmargin::Vec;

Mat example1_a() {
    Mat a(2, 2);
    a << 0.0, 1.0, -1.0, -0.5;
    return a;
}

Mat example1_a0() {
    Mat a0(2, 2);
    a0 << 0.0, 0.0, -1.0, 0.0;
    return a0;
}

TEST(TransitionMatrix, SingleSegmentIsExponential) {
    const switchmargin::SwitchedLinearSystem sys(example1_a(), example1_a0());
    switchmargin::SwitchingSignal signal;
    signal.delta = 0.0;
    signal.times = {0.0, 1.3};
    signal.values = {0.0};
    const Mat a_d = switchmargin::transition_matrix(sys, signal, 0, 1);
    EXPECT_LT((a_d - switchmargin::expm(sys.a, 1.3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TransitionMatrix, SemigroupAcrossEqualModes) {
    const switchmargin::SwitchedLinearSystem sys(example1_a(), Mat::Zero(2, 2));
    switchmargin::SwitchingSignal signal;
    signal.delta = 1.0;
    signal.times = {0.0, 0.7, 2.0};
    signal.values = {1.0, 0.0};  // A0 = 0, so both segments use A
    const Mat a_d = switchmargin::transition_matrix(sys, signal, 0, 2);
    EXPECT_LT((a_d - switchmargin::expm(sys.a, 2.0)).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(TransitionMatrix, OrderingAppliesEarliestSegmentFirst) {
    const switchmargin::SwitchedLinearSystem sys(example1_a(), example1_a0());
    switchmargin::SwitchingSignal signal;
    signal.delta = 2.0;
    signal.times = {0.0, 0.9, 2.1};
    signal.values = {2.0, 0.0};
    const Mat a_d = switchmargin::transition_matrix(sys, signal, 0, 2);
    const Mat expected =
        switchmargin::expm(sys.mode(0.0), 1.2) * switchmargin::expm(sys.mode(2.0), 0.9);
    EXPECT_LT((a_d - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TransitionMatrix, IndexPreconditions) {
    const switchmargin::SwitchedLinearSystem sys(example1_a(), example1_a0());
    switchmargin::SwitchingSignal signal;
    signal.delta = 0.0;
    signal.times = {0.0, 1.0};
    signal.values = {0.0};
    EXPECT_THROW(switchmargin::transition_matrix(sys, signal, 1, 1), switchmargin::DimensionError);
    EXPECT_THROW(switchmargin::transition_matrix(sys, signal, 0, 2), switchmargin::DimensionError);
}

TEST(FindPeriodicSegment, DecayingConstantSignalHasNoWitness) {
    const switchmargin::SwitchedLinearSystem sys(example1_a(), Mat::Zero(2, 2));
    switchmargin::SwitchingSignal signal;
    signal.delta = 1.0;
    signal.times = {0.0, 0.5, 1.5, 2.5, 4.0};
    signal.values = {1.0, 0.0, 1.0, 0.0};
    const auto out = switchmargin::find_periodic_segment(sys, signal, 1e-3);
    EXPECT_FALSE(out.witness.has_value());
    EXPECT_FALSE(out.diverging);
    EXPECT_GT(out.best_residual, 1e-3);
}

TEST(FindPeriodicSegment, DetectsHandConstructedCycle) {
    // mode(1) = diag(-1, -1) and mode(0) = diag(1, -1): a two-segment span of
    // equal durations has product diag(e^0, e^{-2 d}), an exact unit eigenvalue.
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -1.0;
    Mat a0 = Mat::Zero(2, 2);
    a0(0, 0) = -2.0;
    const switchmargin::SwitchedLinearSystem sys(a, a0);

    switchmargin::SwitchingSignal signal;
    signal.delta = 1.0;
    signal.times = {0.0, 0.8, 1.6, 2.0};
    signal.values = {1.0, 0.0, 1.0};
    const auto out = switchmargin::find_periodic_segment(sys, signal, 1e-3);
    ASSERT_TRUE(out.witness.has_value());
    EXPECT_EQ(out.witness->j, 0);
    EXPECT_EQ(out.witness->k, 2);
    EXPECT_LE(out.witness->unit_eig_residual, 1e-9);
}

TEST(FindPeriodicSegment, UnequalDurationsDivergeInstead) {
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -1.0;
    Mat a0 = Mat::Zero(2, 2);
    a0(0, 0) = -2.0;
    const switchmargin::SwitchedLinearSystem sys(a, a0);

    switchmargin::SwitchingSignal signal;
    signal.delta = 1.0;
    signal.times = {0.0, 0.5, 2.2};  // e^{-0.5} then e^{1.7} on the first state
    signal.values = {1.0, 0.0};
    const auto out = switchmargin::find_periodic_segment(sys, signal, 1e-3);
    EXPECT_FALSE(out.witness.has_value());
    EXPECT_TRUE(out.diverging);
}

TEST(FindPeriodicSegment, DivergingSignalFlagged) {
    // Long unstable segments: spectral radius above 1 + tol, no unit witness.
    Mat a = -0.2 * Mat::Identity(2, 2);
    Mat a0 = Mat::Identity(2, 2);
    const switchmargin::SwitchedLinearSystem sys(a, a0);
    switchmargin::SwitchingSignal signal;
    signal.delta = 1.0;  // mode(1.0) = 0.8 I, strongly expanding
    signal.times = {0.0, 2.0, 2.1, 4.1, 4.2};
    signal.values = {1.0, 0.0, 1.0, 0.0};
    const auto out = switchmargin::find_periodic_segment(sys, signal, 1e-3);
    EXPECT_FALSE(out.witness.has_value());
    EXPECT_TRUE(out.diverging);
}

TEST(UpperBoundMargin, TrivialBranchFiresAtHurwitzLoss) {
    // A = -I, A0 = I loses Hurwitzness at delta = 1; the lower-bound sweep certifies
    // just below 1, so the sweep's trivial branch fires within one increment.
    const switchmargin::SwitchedLinearSystem sys(-Mat::Identity(2, 2), Mat::Identity(2, 2));
    switchmargin::AlgorithmConfig cfg;
    cfg.i_max = 1;
    cfg.epsilon = 0.01;
    const auto lower = switchmargin::under_approximate_margin(sys, cfg);
    ASSERT_NEAR(lower.delta_lower, 1.0, 1e-4);

    Vec x0(2);
    x0 << 1.0, 0.5;
    const auto report =
        switchmargin::upper_bound_margin(sys, lower.certificate, x0, 4.0, 0.01, 1e-3);
    EXPECT_NEAR(report.delta_upper, 1.0, 0.011);
    ASSERT_TRUE(std::holds_alternative<switchmargin::TrivialHurwitzLoss>(report.witness));
    const auto& trivial = std::get<switchmargin::TrivialHurwitzLoss>(report.witness);
    EXPECT_GE(trivial.spectrum.spectral_radius(), 1.0);
    ASSERT_EQ(report.periodic_signal.values.size(), 1u);
    EXPECT_EQ(report.periodic_signal.values[0], report.delta_upper);
    EXPECT_EQ(report.periodic_signal.times.back(), 4.0);
    EXPECT_LE(report.delta_lower, report.delta_upper);
}

TEST(UpperBoundMargin, TrivialWitnessHasUnstableEigenvalue) {
    // Property: whenever the Hurwitz test fails and t_f > 0, the constant-mode
    // exponential has an eigenvalue of magnitude >= 1.
    std::mt19937 rng(79);
    for (int trial = 0; trial < 10; ++trial) {
        Mat m = oracles::random_hurwitz(rng, 3);
        m(0, 0) += 5.0;  // destabilize
        if (switchmargin::is_hurwitz(m, 1e-9)) continue;
        const Mat a_d = switchmargin::expm(m, 2.5);
        EXPECT_GE(switchmargin::eigenvalues(a_d).spectral_radius(), 1.0 - 1e-9);
    }
}

TEST(UpperBoundMargin, Example1BracketsTheMargin) {
    const switchmargin::SwitchedLinearSystem sys(example1_a(), example1_a0());
    switchmargin::AlgorithmConfig cfg;
    cfg.i_max = 7;
    cfg.epsilon = 0.01;
    const auto lower = switchmargin::under_approximate_margin(sys, cfg);

    Vec x0(2);
    x0 << 1.0, 1.0;
    const auto report =
        switchmargin::upper_bound_margin(sys, lower.certificate, x0, 20.0, 0.01, 1e-3);
    EXPECT_LE(report.delta_lower, report.delta_upper);
    EXPECT_GT(report.delta_upper, report.delta_lower);  // strict gap on this fixture
    ASSERT_TRUE(std::holds_alternative<switchmargin::PeriodicityWitness>(report.witness));
    const auto& w = std::get<switchmargin::PeriodicityWitness>(report.witness);
    EXPECT_LE(w.unit_eig_residual, 1e-3);

    // Witness consistency: replaying the re-based periodic signal reproduces
    // the action of A_d on the initial state of the cycle.
    const auto replay = switchmargin::simulate_fixed_signal(
        sys, report.periodic_signal, Vec::Ones(2), {}, switchmargin::ReplayMode::Exact);
    const Vec mapped = w.a_d * Vec::Ones(2);
    EXPECT_LT((replay.states.back() - mapped).norm(), 1e-4 * Vec::Ones(2).norm());
}

TEST(UpperBoundMargin, PeriodicSegmentReplaysNearClosedOrbit) {
    // Replay the periodic segment for three cycles: the state norm after each
    // cycle stays within 10% of the initial norm (unit-magnitude monodromy).
    const switchmargin::SwitchedLinearSystem sys(example1_a(), example1_a0());
    switchmargin::AlgorithmConfig cfg;
    cfg.i_max = 7;
    cfg.epsilon = 0.01;
    const auto lower = switchmargin::under_approximate_margin(sys, cfg);
    Vec x0(2);
    x0 << 1.0, 1.0;
    const auto report =
        switchmargin::upper_bound_margin(sys, lower.certificate, x0, 20.0, 0.01, 1e-3);
    const auto& w = std::get<switchmargin::PeriodicityWitness>(report.witness);

    // Start on the cycle: use the eigenvector associated with the
    // unit-magnitude eigenvalue when it is real; otherwise any state works
    // since the rotation preserves norms on the cycle's invariant plane.
    Eigen::EigenSolver<Mat> es(w.a_d);
    int unit_idx = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(std::abs(es.eigenvalues()(i)) - 1.0) <
            std::abs(std::abs(es.eigenvalues()(unit_idx)) - 1.0))
            unit_idx = i;
    Vec start = es.eigenvectors().col(unit_idx).real();
    if (start.norm() < 1e-9) start = es.eigenvectors().col(unit_idx).imag();
    start /= start.norm();

    // Replay the re-based segment three times through the simulator (exact
    // mode) and compare against three applications of the monodromy matrix.
    Vec x = start;
    for (int cycle = 0; cycle < 3; ++cycle) {
        const auto traj = switchmargin::simulate_fixed_signal(sys, report.periodic_signal, x);
        x = traj.states.back();
    }
    Vec x_matrix = start;
    for (int cycle = 0; cycle < 3; ++cycle) x_matrix = w.a_d * x_matrix;
    EXPECT_LT((x - x_matrix).norm(), 1e-8);
    EXPECT_NEAR(x.norm(), 1.0, 0.1);
}

TEST(UpperBoundMargin, DetectionPersistsAboveTheBound) {
    // Above the detected bound the system does not re-stabilize: the best
    // span product at delta_upper + 0.1 keeps spectral radius >= 1 - 1e-3.
    const switchmargin::SwitchedLinearSystem sys(example1_a(), example1_a0());
    switchmargin::AlgorithmConfig cfg;
    cfg.i_max = 7;
    cfg.epsilon = 0.01;
    const auto lower = switchmargin::under_approximate_margin(sys, cfg);
    Vec x0(2);
    x0 << 1.0, 1.0;
    const auto report =
        switchmargin::upper_bound_margin(sys, lower.certificate, x0, 20.0, 0.01, 1e-3);

    const auto level = switchmargin::build_level(sys, lower.certificate.level);
    const auto wc = switchmargin::find_switching_sequence(
        sys, level, lower.certificate.p, report.delta_upper + 0.1, x0, 20.0);
    double max_radius = 0.0;
    for (int span = 2; span <= wc.signal.segments(); span += 2) {
        for (int j = 0; j + span <= wc.signal.segments(); ++j) {
            const Mat a_d = switchmargin::transition_matrix(sys, wc.signal, j, j + span);
            max_radius =
                std::max(max_radius, switchmargin::eigenvalues(a_d).spectral_radius());
        }
    }
    EXPECT_GE(max_radius, 1.0 - 1e-3);
}

}  // namespace
