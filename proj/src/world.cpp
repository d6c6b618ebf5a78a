#include "slamobs/world.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slamobs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double NoiseStream::uniform() {
  const std::uint64_t bits = splitmix64(splitmix64(seed_) ^ counter_++);
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double NoiseStream::gaussian() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec3 NoiseStream::gaussian3(double sigma) {
  const double x = gaussian();
  const double y = gaussian();
  const double z = gaussian();
  return sigma * Vec3(x, y, z);
}

TrueState true_step(const TrueState& s, const Twist& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("true_step: dt must be positive");
  if (!u.is_finite()) throw std::invalid_argument("true_step: twist must be finite");
  const Pose next = s.pose * se3_exp(u, dt);
  return {{project_orthonormal(next.rotation.matrix()), next.position}, s.landmarks};
}

SensorFrame sense(const TrueState& s, const SensorBias& bias, const NoiseSpec& noise,
                  const Twist& u, NoiseStream& rng, double t) {
  if (!bias.b_y.empty() && bias.b_y.size() != s.landmarks.size()) {
    throw std::invalid_argument("sense: landmark bias count does not match landmark count");
  }
  SensorFrame frame;
  frame.t = t;
  frame.omega_m = u.omega + bias.b_omega;
  if (noise.sigma_omega > 0.0) frame.omega_m += rng.gaussian3(noise.sigma_omega);
  frame.v_m = u.vel + bias.b_v;
  if (noise.sigma_v > 0.0) frame.v_m += rng.gaussian3(noise.sigma_v);

  const Rotation3 rt = s.pose.rotation.transpose();
  frame.y.reserve(s.landmarks.size());
  for (std::size_t i = 0; i < s.landmarks.size(); ++i) {
    Vec3 y = rt * (s.landmarks[i] - s.pose.position);
    if (!bias.b_y.empty()) y += bias.b_y[i];
    if (noise.sigma_y > 0.0) y += rng.gaussian3(noise.sigma_y);
    frame.y.push_back(y);
  }
  return frame;
}

}  // namespace slamobs
