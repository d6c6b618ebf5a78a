#include "slamobs/observer.hpp"


#include <cmath>
#include <string>

namespace slamobs {

namespace {

void check_count(const ObserverState& state, const SensorFrame& frame, const GainConfig* gains) {
  const std::size_t n = state.landmarks_hat.size();
  if (frame.y.size() != n) {
    throw std::invalid_argument("frame has " + std::to_string(frame.y.size()) +
                                " landmark measurements, observer tracks " + std::to_string(n));
  }
  if (gains != nullptr && gains->alpha.size() != n) {
    throw std::invalid_argument("gain config has " + std::to_string(gains->alpha.size()) +
                                " alpha values, observer tracks " + std::to_string(n));
  }
}

// Σ (1/α_i) [y_i]× R̂ᵀ e_i and Σ (1/α_i) R̂ᵀ e_i.
struct InnovationSums {
  Vec3 rot = Vec3::Zero();
  Vec3 trans = Vec3::Zero();
};

InnovationSums innovation_sums(const ObserverState& state, const SensorFrame& frame,
                               std::span<const Vec3> errors, const GainConfig& gains) {
  InnovationSums s;
  const Rotation3 rt = state.r_hat.transpose();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const Vec3 q = rt * errors[i];
    const double w = 1.0 / gains.alpha[i];
    s.rot += w * frame.y[i].cross(q);
    s.trans += w * q;
  }
  return s;
}

Eigen::LLT<Mat3> spd_factor(const Mat3& gamma) {
  if (!gamma.allFinite() || (gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + gamma.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("gamma must be a finite symmetric matrix");
  }
  Eigen::LLT<Mat3> llt(gamma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("gamma must be positive definite");
  }
  return llt;
}

}  // namespace

void GainConfig::validate() const {
  if (!(k_p > 0.0) || !std::isfinite(k_p)) throw std::invalid_argument("k_p must be positive");
  if (!(k_w > 0.0) || !std::isfinite(k_w)) throw std::invalid_argument("k_w must be positive");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("every alpha must be positive");
  }
  spd_factor(gamma);
}

Vec3 landmark_error(const ObserverState& state, const Vec3& y_i, std::size_t i) {
  if (i >= state.landmarks_hat.size()) {
    throw std::out_of_range("landmark index " + std::to_string(i) + " out of range");
  }
  return state.landmarks_hat[i] - (state.r_hat * y_i + state.p_hat);
}

std::vector<Vec3> landmark_errors(const ObserverState& state, const SensorFrame& frame) {
  check_count(state, frame, nullptr);
  std::vector<Vec3> errors;
  errors.reserve(frame.y.size());
  for (std::size_t i = 0; i < frame.y.size(); ++i) errors.push_back(landmark_error(state, frame.y[i], i));
  return errors;
}

LandmarkError error_geometry(const Vec3& e, double k_p) {
  LandmarkError out;
  out.e = e;
  const double norm = e.norm();
  out.theta = 2.0 * std::atan(norm);
  if (norm > 0.0) {
    // cot(θ/2) = 1/‖e‖, so the axis is e normalized.
    const Vec3 x = e / norm;
    out.x = x;
    const Mat3 k = hat3(x).matrix();
    const Mat3 r = Mat3::Identity() + std::sin(out.theta) * k + (1.0 - std::cos(out.theta)) * k * k;
    out.r_e = Rotation3(r);
    out.psi = k_p / (1.0 + r.trace());
  } else {
    out.psi = k_p / 4.0;
  }
  return out;
}

double fast_adaptation_gain(const Vec3& e, double k_p) {
  return 0.25 * k_p * (1.0 + e.squaredNorm());
}

CorrectionTerms correction_terms(const ObserverState& state, const SensorFrame& frame,
                                 const GainConfig& gains) {
  check_count(state, frame, &gains);
  const std::vector<Vec3> errors = landmark_errors(state, frame);
  const InnovationSums s = innovation_sums(state, frame, errors, gains);
  return {-gains.k_w * s.rot, -gains.k_w * s.trans};
}

ObserverState observer_step(const ObserverState& state, const SensorFrame& frame,
                            const GainConfig& gains, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("observer_step: dt must be positive");
  check_count(state, frame, &gains);

  const std::vector<Vec3> errors = landmark_errors(state, frame);
  const InnovationSums s = innovation_sums(state, frame, errors, gains);
  const Vec3 w_omega = -gains.k_w * s.rot;
  const Vec3 w_v = -gains.k_w * s.trans;

  const Twist corrected{frame.omega_m - state.b_omega_hat - w_omega,
                        frame.v_m - state.b_v_hat - w_v};
  if (!corrected.is_finite()) throw ObserverAbort("observer_step: non-finite corrected twist");
  const Pose next_pose = state.pose() * se3_exp(corrected, dt);

  ObserverState next;
  if (!next_pose.rotation.matrix().allFinite() || !next_pose.position.allFinite()) {
    throw ObserverAbort("observer_step: non-finite pose estimate");
  }
  next.r_hat = project_orthonormal(next_pose.rotation.matrix());
  next.p_hat = next_pose.position;
  next.landmarks_hat.reserve(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    next.landmarks_hat.push_back(state.landmarks_hat[i] -
                                 dt * fast_adaptation_gain(errors[i], gains.k_p) * errors[i]);
  }
  next.b_omega_hat = state.b_omega_hat - dt * (gains.gamma * s.rot);
  next.b_v_hat = state.b_v_hat - dt * (gains.gamma * s.trans);

  bool finite = next.b_omega_hat.allFinite() && next.b_v_hat.allFinite();
  for (const Vec3& p : next.landmarks_hat) finite = finite && p.allFinite();
  if (!finite) throw ObserverAbort("observer_step: non-finite landmark or bias estimate");
  return next;
}

BiasError bias_error(const ObserverState& state, const SensorBias& true_bias) {
  return {true_bias.b_omega - state.b_omega_hat, true_bias.b_v - state.b_v_hat};
}

PoseError pose_error(const ObserverState& state, const TrueState& truth) {
  const Rotation3 r_tilde = state.r_hat * truth.pose.rotation.transpose();
  return {r_tilde, state.p_hat - r_tilde * truth.pose.position};
}

double lyapunov_value(const ObserverState& state, std::span<const Vec3> errors,
                      const SensorBias& true_bias, const GainConfig& gains) {
  if (gains.alpha.size() != errors.size()) {
    throw std::invalid_argument("lyapunov_value: alpha count does not match error count");
  }
  const Eigen::LLT<Mat3> llt = spd_factor(gains.gamma);
  double v = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) v += errors[i].squaredNorm() / (2.0 * gains.alpha[i]);
  const BiasError b = bias_error(state, true_bias);
  v += 0.5 * b.b_omega_tilde.dot(llt.solve(b.b_omega_tilde));
  v += 0.5 * b.b_v_tilde.dot(llt.solve(b.b_v_tilde));
  return v;
}

std::vector<Vec3> landmark_error_rates(const ObserverState& state, const SensorFrame& frame,
                                       const GainConfig& gains, const SensorBias& true_bias) {
  const CorrectionTerms w = correction_terms(state, frame, gains);
  const BiasError b = bias_error(state, true_bias);
  const std::vector<Vec3> errors = landmark_errors(state, frame);
  const Vec3 d_omega = b.b_omega_tilde - w.w_omega;
  const Vec3 d_v = b.b_v_tilde - w.w_v;
  std::vector<Vec3> rates;
  rates.reserve(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const Vec3 p_hat_dot = -fast_adaptation_gain(errors[i], gains.k_p) * errors[i];
    const Vec3 coupling = -(state.r_hat * frame.y[i].cross(d_omega)) + state.r_hat * d_v;
    rates.push_back(p_hat_dot - coupling);
  }
  return rates;
}

}  // namespace slamobs
