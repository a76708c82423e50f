#pragma once

// Constant-velocity Kalman filter over a rotated-box state
//   [cx, cy, s, r, theta, vcx, vcy, vs]
// with s = w*h (area) and r = w/h. Aspect ratio and angle are observed but not
// propagated; there is no angular velocity.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "dstrack/error.hpp"
#include "dstrack/geometry.hpp"

namespace dstrack {

inline constexpr int kStateDim = 8;
inline constexpr int kMeasureDim = 5;

enum StateIndex : int { kCx = 0, kCy, kArea, kAspect, kAngle, kVcx, kVcy, kVarea };

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using MeasureVector = Eigen::Matrix<double, kMeasureDim, 1>;
using MeasureMatrix = Eigen::Matrix<double, kMeasureDim, kMeasureDim>;

// Noise model. Values marked "variance" are used as-is; values marked
// "sigma" are squared; "*_rel" sigmas scale with the current area s.
struct FilterConfig {
  // Process noise Q.
  double q_pos = 1.0;          // variance, px^2
  double q_area_rel = 0.01;    // sigma / s
  double q_aspect = 1e-4;      // variance
  double q_angle = 0.01;       // sigma, rad
  double q_vel = 0.25;         // variance, (px/frame)^2
  double q_varea_rel = 0.001;  // sigma / s
  // Measurement noise R.
  double r_pos = 1.0;         // variance, px^2
  double r_area_rel = 0.05;   // sigma / s
  double r_aspect = 1e-2;     // variance
  double r_angle = 0.02;      // sigma, rad
  // Initial covariance.
  double init_pos_factor = 2.0;   // sigma_pos = factor * sqrt(s)
  double init_vel_factor = 10.0;  // sigma_vel = factor * sigma_pos (also vs vs. s)
  double init_area_rel = 0.5;     // sigma_s = factor * s
  double init_aspect = 0.5;       // sigma_r, absolute
  double init_angle = 0.2;        // sigma_theta, rad
  // When false, theta skips the filter and is copied from each observation.
  bool track_angle = true;
};

struct KalmanState {
  StateVector mean = StateVector::Zero();
  StateMatrix covariance = StateMatrix::Zero();
};

inline constexpr double kMinAreaAspect = 1e-6;

class KalmanBoxFilter {
 public:
  KalmanBoxFilter() = default;
  explicit KalmanBoxFilter(const FilterConfig& cfg) : cfg_(cfg) {}

  const FilterConfig& config() const noexcept { return cfg_; }

  KalmanState initiate(const RotatedBox& b) const {
    KalmanState st;
    const double s = b.w * b.h;
    const double r = b.w / b.h;
    st.mean << b.cx, b.cy, s, r, b.theta, 0.0, 0.0, 0.0;
    const double sig_pos = cfg_.init_pos_factor * std::sqrt(s);
    const double sig_vel = cfg_.init_vel_factor * sig_pos;
    const double sig_s = cfg_.init_area_rel * s;
    StateVector var;
    var << sig_pos * sig_pos, sig_pos * sig_pos, sig_s * sig_s, cfg_.init_aspect * cfg_.init_aspect,
        cfg_.init_angle * cfg_.init_angle, sig_vel * sig_vel, sig_vel * sig_vel,
        cfg_.init_vel_factor * cfg_.init_vel_factor * sig_s * sig_s;
    st.covariance = var.asDiagonal();
    return st;
  }

  KalmanState predict(const KalmanState& st) const {
    const double s = st.mean[kArea];
    StateVector q;
    q << cfg_.q_pos, cfg_.q_pos, sq(cfg_.q_area_rel * s), cfg_.q_aspect, sq(cfg_.q_angle), cfg_.q_vel, cfg_.q_vel,
        sq(cfg_.q_varea_rel * s);
    const StateMatrix& f = transition();
    KalmanState out;
    out.mean = f * st.mean;
    out.covariance = f * st.covariance * f.transpose();
    out.covariance.diagonal() += q;
    finalize(out);
    return out;
  }

  KalmanState update(const KalmanState& st, const RotatedBox& obs) const {
    const double s = st.mean[kArea];
    MeasureVector r;
    r << cfg_.r_pos, cfg_.r_pos, sq(cfg_.r_area_rel * s), cfg_.r_aspect, sq(cfg_.r_angle);

    MeasureVector innovation;
    innovation << obs.cx - st.mean[kCx], obs.cy - st.mean[kCy], obs.w * obs.h - st.mean[kArea],
        obs.w / obs.h - st.mean[kAspect], wrap_half_turn(obs.theta - st.mean[kAngle]);
    if (!cfg_.track_angle) innovation[4] = 0.0;

    // H selects the leading kMeasureDim components.
    const auto p_ht = st.covariance.leftCols<kMeasureDim>();
    MeasureMatrix innov_cov = st.covariance.topLeftCorner<kMeasureDim, kMeasureDim>();
    innov_cov.diagonal() += r;
    const Eigen::LLT<MeasureMatrix> llt(innov_cov);
    // K = P H^T S^-1, computed as (S^-1 H P)^T since S, P are symmetric.
    const Eigen::Matrix<double, kStateDim, kMeasureDim> gain = llt.solve(p_ht.transpose()).transpose();

    KalmanState out;
    out.mean = st.mean + gain * innovation;
    // Joseph form keeps the posterior PSD.
    StateMatrix ikh = StateMatrix::Identity();
    ikh.leftCols<kMeasureDim>() -= gain;
    out.covariance = ikh * st.covariance * ikh.transpose() + gain * r.asDiagonal() * gain.transpose();
    if (!cfg_.track_angle) out.mean[kAngle] = obs.theta;
    finalize(out);
    return out;
  }

 private:
  static double sq(double v) { return v * v; }

  static const StateMatrix& transition() {
    static const StateMatrix f = [] {
      StateMatrix m = StateMatrix::Identity();
      m(kCx, kVcx) = 1.0;
      m(kCy, kVcy) = 1.0;
      m(kArea, kVarea) = 1.0;
      return m;
    }();
    return f;
  }

  static void finalize(KalmanState& st) {
    st.mean[kArea] = std::max(st.mean[kArea], kMinAreaAspect);
    st.mean[kAspect] = std::max(st.mean[kAspect], kMinAreaAspect);
    st.mean[kAngle] = wrap_half_turn(st.mean[kAngle]);
    st.covariance = 0.5 * (st.covariance + st.covariance.transpose());
  }

  FilterConfig cfg_{};
};

// w = sqrt(s*r), h = sqrt(s/r). Throws if s*r is not positive.
inline RotatedBox state_to_box(const KalmanState& st) {
  const double s = st.mean[kArea];
  const double r = st.mean[kAspect];
  if (!(s * r > 0.0) || !(r > 0.0) || !std::isfinite(s * r)) throw Error("degenerate state");
  return canonicalize({st.mean[kCx], st.mean[kCy], std::sqrt(s * r), std::sqrt(s / r), st.mean[kAngle]});
}

}  // namespace dstrack
