#pragma once

#include "slamobs/lie.hpp"

#include <cstdint>
#include <vector>

namespace slamobs {

/// Ground truth: vehicle pose and n fixed inertial-frame landmarks.
struct TrueState {
  Pose pose;
  std::vector<Vec3> landmarks;
};

/// Constant sensor offsets. `b_y` may be empty (treated as all zero).
struct SensorBias {
  Vec3 b_omega = Vec3::Zero();
  Vec3 b_v = Vec3::Zero();
  std::vector<Vec3> b_y;
};

/// Per-axis Gaussian standard deviations. All zero means noise-free.
struct NoiseSpec {
  double sigma_omega = 0.0;
  double sigma_v = 0.0;
  double sigma_y = 0.0;
  std::uint64_t seed = 0;

  bool is_zero() const { return sigma_omega == 0.0 && sigma_v == 0.0 && sigma_y == 0.0; }
};

/// One time step of body-frame measurements.
struct SensorFrame {
  Vec3 omega_m = Vec3::Zero();
  Vec3 v_m = Vec3::Zero();
  std::vector<Vec3> y;
  double t = 0.0;
};

/// Counter-based normal generator: draw k is a pure function of (seed, k).
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

  double uniform();   // in (0, 1)
  double gaussian();  // standard normal
  Vec3 gaussian3(double sigma);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Advances the truth by the exact exponential of a twist held constant over dt.
TrueState true_step(const TrueState& s, const Twist& u, double dt);

/// Synthesizes velocity and landmark measurements at the current instant.
/// Draws from `rng` only for non-zero sigmas.
SensorFrame sense(const TrueState& s, const SensorBias& bias, const NoiseSpec& noise,
                  const Twist& u, NoiseStream& rng, double t = 0.0);

}  // namespace slamobs
