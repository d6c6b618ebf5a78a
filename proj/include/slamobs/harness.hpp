#pragma once

#include "slamobs/lie.hpp"
#include "slamobs/observer.hpp"
#include "slamobs/world.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slamobs {

/// Malformed scenario text or structure.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed scenario that violates an invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Observer blow-up during a run; carries the failing step index.
class RunAbort : public std::runtime_error {
 public:
  RunAbort(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// The twist applies from `t` until the next knot.
struct TwistKnot {
  double t = 0.0;
  Twist twist;
};

inline constexpr double kDefaultDt = 0.001;
inline constexpr double kDefaultDuration = 30.0;
inline constexpr std::size_t kDefaultStride = 10;
inline constexpr double kMaxStepCount = 1e8;

struct ScenarioConfig {
  double duration = kDefaultDuration;
  double dt = kDefaultDt;
  std::vector<TwistKnot> twist_profile;
  Pose initial_pose;
  std::vector<Vec3> landmarks;
  SensorBias bias;
  NoiseSpec noise;
  GainConfig gains;
  ObserverState initial_estimates;

  /// Throws ValidationError naming the violated invariant.
  void validate() const;

  /// Number of observer steps, ⌈duration/dt⌉ (integral ratios are not rounded up).
  std::size_t step_count() const;

  Twist twist_at(double t) const;
};

/// Built-in reference scenario: constant yaw-rate circle above four landmarks.
ScenarioConfig paper_sec5_scenario();

inline constexpr std::string_view kBuiltinScenario = "paper-sec5";

/// Reads a JSON scenario file, or returns the built-in one for "paper-sec5".
ScenarioConfig load_scenario(const std::string& path_or_name);

ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig parse_scenario_text(std::string_view text);
nlohmann::json scenario_to_json(const ScenarioConfig& config);

struct MetricsRecord {
  double t = 0.0;
  std::vector<double> e_norm;  // ‖e_i‖
  std::vector<double> p_err;   // ‖p_i − p̂_i‖
  double r_tilde_dist = 0.0;
  double p_tilde_norm = 0.0;
  double b_omega_tilde_norm = 0.0;
  double b_v_tilde_norm = 0.0;
  double lyapunov = 0.0;

  double max_e() const;
  double max_p_err() const;
};

/// Diagnostics for one instant. The landmark errors use the noise-free
/// measurement Rᵀ(p_i − P), so the record depends only on truth and estimate.
MetricsRecord compute_metrics(double t, const TrueState& truth, const ObserverState& est,
                              const SensorBias& bias, const GainConfig& gains);

struct TraceEntry {
  std::size_t step = 0;
  double t = 0.0;
  TrueState truth;
  ObserverState estimate;
  SensorFrame frame;
};

struct RunOptions {
  std::size_t stride = kDefaultStride;
  bool keep_trace = false;  // stores every step, not only recorded ones
};

struct RunResult {
  std::vector<MetricsRecord> records;
  std::vector<TraceEntry> trace;
};

/// Co-simulates truth and observer for step_count() steps. Records metrics
/// at every `stride`-th step including step 0. Throws RunAbort on observer
/// blow-up.
RunResult run(const ScenarioConfig& config, const RunOptions& options = {});

/// Header `t,e1..en,perr1..perrn,rtilde,ptilde,bomega,bv,lyap`, LF endings.
void write_csv(std::ostream& os, const std::vector<MetricsRecord>& records);

enum class SweepAxis { kP, kW, GammaScale, AlphaScale, SigmaOmega, SigmaV, SigmaY, Dt };

/// Throws std::invalid_argument for an unknown name.
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view sweep_axis_name(SweepAxis axis);

/// Returns a copy of `base` with the axis set to `value`.
ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepAxis axis, double value);

inline constexpr double kSettleThreshold = 0.05;
inline constexpr double kSettleWindow = 1.0;

/// First recorded time after which max_i ‖e_i‖ stays below `threshold` for
/// `window` seconds. NaN if that never happens within the records.
double settling_time(const std::vector<MetricsRecord>& records, double threshold = kSettleThreshold,
                     double window = kSettleWindow);

struct SweepRow {
  double value = 0.0;
  bool aborted = false;
  std::string error;
  double settling_time = 0.0;
  double final_max_e = 0.0;
  double final_max_perr = 0.0;
  double final_rtilde = 0.0;
  double final_ptilde = 0.0;
};

/// One independent run per value, executed concurrently. Rows follow the
/// order of `values`.
std::vector<SweepRow> sweep(const ScenarioConfig& base, SweepAxis axis,
                            const std::vector<double>& values, std::size_t stride = kDefaultStride);

void write_sweep_csv(std::ostream& os, SweepAxis axis, const std::vector<SweepRow>& rows);

}  // namespace slamobs
