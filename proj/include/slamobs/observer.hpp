#pragma once

#include "slamobs/lie.hpp"
#include "slamobs/world.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace slamobs {

/// Estimates carried by the observer between steps.
struct ObserverState {
  Rotation3 r_hat;
  Vec3 p_hat = Vec3::Zero();
  std::vector<Vec3> landmarks_hat;
  Vec3 b_omega_hat = Vec3::Zero();
  Vec3 b_v_hat = Vec3::Zero();

  Pose pose() const { return {r_hat, p_hat}; }
};

struct GainConfig {
  double k_p = 1.0;
  double k_w = 1.0;
  Mat3 gamma = Mat3::Identity();
  std::vector<double> alpha;

  /// Throws std::invalid_argument unless k_p, k_w and every alpha are
  /// positive and gamma is symmetric positive definite.
  void validate() const;
};

/// Angle-axis view of one landmark error.
struct LandmarkError {
  Vec3 e = Vec3::Zero();
  double theta = 0.0;
  std::optional<Vec3> x;  // empty when e == 0
  Rotation3 r_e;
  double psi = 0.0;
};

struct CorrectionTerms {
  Vec3 w_omega = Vec3::Zero();
  Vec3 w_v = Vec3::Zero();
};

/// b̃ = b − b̂.
struct BiasError {
  Vec3 b_omega_tilde = Vec3::Zero();
  Vec3 b_v_tilde = Vec3::Zero();
};

/// R̃ = R̂Rᵀ, P̃ = P̂ − R̃P.
struct PoseError {
  Rotation3 r_tilde;
  Vec3 p_tilde = Vec3::Zero();
};

/// Thrown when a step produces non-finite estimates.
class ObserverAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// e_i = p̂_i − (R̂ y_i + P̂). Throws std::out_of_range for a bad index.
Vec3 landmark_error(const ObserverState& state, const Vec3& y_i, std::size_t i);

/// All e_i for a frame. Throws std::invalid_argument on a count mismatch.
std::vector<Vec3> landmark_errors(const ObserverState& state, const SensorFrame& frame);

/// Builds θ = 2·atan‖e‖, the unit axis, the Rodrigues matrix R_e and
/// ψ = k_p / (1 + Tr R_e) from the matrix itself.
LandmarkError error_geometry(const Vec3& e, double k_p);

/// ψ(e) in closed form, k_p (1 + ‖e‖²) / 4. Equal to error_geometry(e, k_p).psi.
double fast_adaptation_gain(const Vec3& e, double k_p);

CorrectionTerms correction_terms(const ObserverState& state, const SensorFrame& frame,
                                 const GainConfig& gains);

/// One explicit step of the discrete observer. Every correction uses the
/// pre-update state. Throws ObserverAbort if the result is not finite.
ObserverState observer_step(const ObserverState& state, const SensorFrame& frame,
                            const GainConfig& gains, double dt);

BiasError bias_error(const ObserverState& state, const SensorBias& true_bias);

PoseError pose_error(const ObserverState& state, const TrueState& truth);

/// Σ‖e_i‖²/(2α_i) + ½ b̃_Ωᵀ Γ⁻¹ b̃_Ω + ½ b̃_Vᵀ Γ⁻¹ b̃_V.
/// Throws std::invalid_argument if gamma is not SPD.
double lyapunov_value(const ObserverState& state, std::span<const Vec3> errors,
                      const SensorBias& true_bias, const GainConfig& gains);

/// Continuous-time landmark error rate
///   ė_i = ṗ̂_i − [−R̂[y_i]×  R̂] [b̃_Ω − W_Ω; b̃_V − W_V]
/// evaluated at the current state. Truth-aware (needs the true biases).
std::vector<Vec3> landmark_error_rates(const ObserverState& state, const SensorFrame& frame,
                                       const GainConfig& gains, const SensorBias& true_bias);

}  // namespace slamobs
