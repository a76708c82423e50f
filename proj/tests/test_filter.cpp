#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "dstrack/filter.hpp"
#include "oracles.hpp"

using namespace dstrack;

namespace {

const KalmanBoxFilter kFilter{};

KalmanState moving_state(double vx, double vy) {
  KalmanState st = kFilter.initiate({10, 10, 4, 2, 0});
  st.mean[kVcx] = vx;
  st.mean[kVcy] = vy;
  return st;
}

void expect_symmetric_psd(const StateMatrix& p) {
  EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_GE(p.diagonal().minCoeff(), 0.0);
  const Eigen::SelfAdjointEigenSolver<StateMatrix> eig(p);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9 * std::max(1.0, eig.eigenvalues().maxCoeff()));
}

oracle::AxisFilter axis_oracle(double pos, double s, const FilterConfig& c = {}) {
  const double sp = c.init_pos_factor * std::sqrt(s);
  const double sv = c.init_vel_factor * sp;
  return {pos, 0.0, sp * sp, 0.0, sv * sv, c.q_pos, c.q_vel, c.r_pos};
}

}  // namespace

TEST(Initiate, MapsBoxIntoState) {
  const KalmanState st = kFilter.initiate({10, 10, 4, 2, 0});
  StateVector want;
  want << 10, 10, 8, 2, 0, 0, 0, 0;
  EXPECT_EQ(st.mean, want);
  expect_symmetric_psd(st.covariance);
  // Position sigma is twice the mean side, velocity sigma ten times that.
  EXPECT_DOUBLE_EQ(st.covariance(kCx, kCx), 4.0 * 8.0);
  EXPECT_DOUBLE_EQ(st.covariance(kVcx, kVcx), 100.0 * 4.0 * 8.0);
}

TEST(Initiate, Deterministic) {
  const RotatedBox b{3.5, -2, 7, 3, 0.4};
  const KalmanState a = kFilter.initiate(b), c = kFilter.initiate(b);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.covariance, c.covariance);
}

TEST(Predict, ZeroVelocityKeepsPositionAndGrowsCovariance) {
  const KalmanState st = kFilter.initiate({10, 10, 4, 2, 0});
  const KalmanState p = kFilter.predict(st);
  EXPECT_EQ(p.mean[kCx], 10.0);
  EXPECT_EQ(p.mean[kCy], 10.0);
  for (int i = 0; i < kStateDim; ++i) EXPECT_GT(p.covariance(i, i), st.covariance(i, i)) << i;
}

TEST(Predict, VelocityAddsExactly) {
  const KalmanState p = kFilter.predict(moving_state(3, 0));
  EXPECT_EQ(p.mean[kCx], 13.0);
}

TEST(Predict, FiveStepsClosedForm) {
  KalmanState st = moving_state(1, 2);
  for (int i = 0; i < 5; ++i) st = kFilter.predict(st);
  EXPECT_NEAR(st.mean[kCx], 15.0, 1e-9);
  EXPECT_NEAR(st.mean[kCy], 20.0, 1e-9);
  EXPECT_EQ(st.mean[kAspect], 2.0);
  EXPECT_EQ(st.mean[kAngle], 0.0);
}

TEST(Predict, LinearInPositionVelocityBlock) {
  FilterConfig quiet;
  quiet.q_pos = quiet.q_vel = quiet.q_aspect = quiet.q_angle = quiet.q_area_rel = quiet.q_varea_rel = 0.0;
  const KalmanBoxFilter f(quiet);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 100; ++i) {
    KalmanState x = f.initiate({u(rng), u(rng), 4, 2, 0});
    x.mean[kVcx] = u(rng);
    x.mean[kVcy] = u(rng);
    const double alpha = u(rng) / 10;
    KalmanState ax = x;
    for (const int k : {kCx, kCy, kVcx, kVcy}) ax.mean[k] *= alpha;
    const StateVector px = f.predict(x).mean, pax = f.predict(ax).mean;
    for (const int k : {kCx, kCy, kVcx, kVcy}) EXPECT_NEAR(pax[k], alpha * px[k], 1e-9 * (1 + std::abs(px[k])));
  }
}

TEST(Update, ZeroInnovationKeepsMean) {
  const KalmanState pred = kFilter.predict(moving_state(1, -1));
  const KalmanState up = kFilter.update(pred, state_to_box(pred));
  for (int i = 0; i < kStateDim; ++i) EXPECT_NEAR(up.mean[i], pred.mean[i], 1e-9) << i;
}

TEST(Update, ObservedTraceDoesNotGrow) {
  const KalmanState pred = kFilter.predict(kFilter.initiate({10, 10, 4, 2, 0.1}));
  const KalmanState up = kFilter.update(pred, {11, 9, 4.2, 2.1, 0.12});
  const double before = pred.covariance.topLeftCorner<kMeasureDim, kMeasureDim>().trace();
  const double after = up.covariance.topLeftCorner<kMeasureDim, kMeasureDim>().trace();
  EXPECT_LE(after, before);
}

TEST(Update, AngleResidualWrapsAcrossBoundary) {
  KalmanState st = kFilter.initiate({0, 0, 4, 2, kHalfPi - 0.01});
  const double gain = st.covariance(kAngle, kAngle) / (st.covariance(kAngle, kAngle) + 0.02 * 0.02);
  const KalmanState up = kFilter.update(st, {0, 0, 4, 2, -kHalfPi + 0.01});
  // The residual is +0.02, so theta moves up through pi/2 and wraps.
  EXPECT_NEAR(up.mean[kAngle], wrap_half_turn(kHalfPi - 0.01 + gain * 0.02), 1e-12);
  EXPECT_GT(std::abs(up.mean[kAngle]), kHalfPi - 0.011);
}

TEST(Update, RepeatedStationaryObservationMatchesScalarRecurrence) {
  const RotatedBox truth{50, 40, 20, 10, 0};
  KalmanState st = kFilter.initiate({53, 38, 20, 10, 0});
  oracle::AxisFilter ox = axis_oracle(53, 200), oy = axis_oracle(38, 200);
  int converged_at = -1;
  for (int n = 1; n <= 20; ++n) {
    st = kFilter.update(kFilter.predict(st), truth);
    ox.predict();
    ox.update(truth.cx);
    oy.predict();
    oy.update(truth.cy);
    EXPECT_NEAR(st.mean[kCx], ox.pos, 1e-9);
    EXPECT_NEAR(st.mean[kCy], oy.pos, 1e-9);
    EXPECT_NEAR(st.covariance(kCx, kCx), ox.p00, 1e-9 * ox.p00);
    if (converged_at < 0 && std::hypot(st.mean[kCx] - truth.cx, st.mean[kCy] - truth.cy) < 0.01) converged_at = n;
  }
  EXPECT_GT(converged_at, 0);
  EXPECT_LE(converged_at, 20);
}

TEST(Update, ConstantVelocityTrackConverges) {
  RotatedBox truth{100, 100, 30, 12, 0.2};
  KalmanState st = kFilter.initiate(truth);
  double err = 1e9;
  for (int n = 1; n <= 10; ++n) {
    truth.cx += 2.0;
    truth.cy -= 1.0;
    st = kFilter.update(kFilter.predict(st), truth);
    err = std::hypot(st.mean[kCx] - truth.cx, st.mean[kCy] - truth.cy);
  }
  EXPECT_LT(err, 0.1);
}

TEST(Update, TrackAngleOffCopiesObservedTheta) {
  FilterConfig cfg;
  cfg.track_angle = false;
  const KalmanBoxFilter f(cfg);
  const KalmanState up = f.update(f.predict(f.initiate({0, 0, 4, 2, 0.3})), {1, 0, 4, 2, -0.7});
  EXPECT_DOUBLE_EQ(up.mean[kAngle], -0.7);
}

TEST(Covariance, StaysSymmetricPsdOverRandomCycles) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> jitter(0.0, 2.0), ang(0.0, 0.3);
  std::uniform_real_distribution<double> side(2.0, 60.0);
  KalmanState st = kFilter.initiate({0, 0, 20, 8, 0});
  for (int i = 0; i < 1000; ++i) {
    st = kFilter.predict(st);
    if (i % 7 != 3) st = kFilter.update(st, {jitter(rng), jitter(rng), side(rng), side(rng), ang(rng)});
    expect_symmetric_psd(st.covariance);
    EXPECT_GT(st.mean[kArea], 0.0);
    EXPECT_GT(st.mean[kAspect], 0.0);
    EXPECT_GE(st.mean[kAngle], -kHalfPi);
    EXPECT_LT(st.mean[kAngle], kHalfPi);
  }
}

TEST(Determinism, BitIdenticalStates) {
  const auto run = [] {
    KalmanState st = kFilter.initiate({5, 5, 10, 4, 0.1});
    for (int i = 0; i < 50; ++i) st = kFilter.update(kFilter.predict(st), {5.0 + i, 5.0 - 0.5 * i, 10, 4, 0.1});
    return st;
  };
  const KalmanState a = run(), b = run();
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.covariance, b.covariance);
}

TEST(StateToBox, Examples) {
  KalmanState st;
  st.mean << 10, 10, 8, 2, 0, 0, 0, 0;
  const RotatedBox b = state_to_box(st);
  EXPECT_DOUBLE_EQ(b.cx, 10);
  EXPECT_DOUBLE_EQ(b.w, 4);
  EXPECT_DOUBLE_EQ(b.h, 2);
  EXPECT_DOUBLE_EQ(b.theta, 0);

  st.mean << 0, 0, 1, 1, 0, 0, 0, 0;
  EXPECT_DOUBLE_EQ(state_to_box(st).w, 1);
  EXPECT_DOUBLE_EQ(state_to_box(st).h, 1);
}

TEST(StateToBox, RoundTripsInitiate) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> c(-100, 100), side(0.5, 80), ang(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const RotatedBox b = canonicalize({c(rng), c(rng), side(rng), side(rng), ang(rng)});
    const RotatedBox r = state_to_box(kFilter.initiate(b));
    EXPECT_NEAR(r.cx, b.cx, 1e-9);
    EXPECT_NEAR(r.cy, b.cy, 1e-9);
    EXPECT_NEAR(r.w, b.w, 1e-9);
    EXPECT_NEAR(r.h, b.h, 1e-9);
    EXPECT_NEAR(std::remainder(r.theta - b.theta, is_square(b.w, b.h) ? kHalfPi : kPi), 0.0, 1e-9);
  }
}

TEST(StateToBox, DegenerateStateThrows) {
  KalmanState st;
  st.mean << 0, 0, -1, 2, 0, 0, 0, 0;
  EXPECT_THROW(state_to_box(st), Error);
  st.mean << 0, 0, NAN, 2, 0, 0, 0, 0;
  EXPECT_THROW(state_to_box(st), Error);
}
