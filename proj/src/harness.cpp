#include "slamobs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>

namespace slamobs {

namespace {

using nlohmann::json;

// ---- scenario parsing ------------------------------------------------------

Vec3 read_vec3(const json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + ": expected an array of 3 numbers");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw ParseError(std::string(what) + ": expected an array of 3 numbers");
    v(k) = j[k].get<double>();
  }
  return v;
}

std::vector<Vec3> read_vec3_list(const json& j, std::string_view what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array of 3-vectors");
  std::vector<Vec3> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(read_vec3(j[i], std::string(what) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Mat3 read_mat3(const json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + ": expected 3 rows of 3 numbers");
  Mat3 m;
  for (int r = 0; r < 3; ++r) m.row(r) = read_vec3(j[r], what).transpose();
  return m;
}

double read_number(const json& j, std::string_view what) {
  if (!j.is_number()) throw ParseError(std::string(what) + ": expected a number");
  return j.get<double>();
}

Rotation3 read_rotation(const json& j, std::string_view what) {
  const Mat3 m = read_mat3(j, what);
  try {
    return Rotation3(m);
  } catch (const GeometryError& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known,
                         std::string_view section) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParseError("unknown key '" + key + "' in " + std::string(section));
    }
  }
}

const json& require_object(const json& j, std::string_view what) {
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected an object");
  return j;
}

Twist read_twist(const json& j, std::string_view what) {
  require_object(j, what);
  Twist u;
  if (j.contains("omega")) u.omega = read_vec3(j["omega"], std::string(what) + ".omega");
  if (j.contains("vel")) u.vel = read_vec3(j["vel"], std::string(what) + ".vel");
  return u;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json mat_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

json vec_list_json(const std::vector<Vec3>& vs) {
  json out = json::array();
  for (const Vec3& v : vs) out.push_back(vec_json(v));
  return out;
}

// ---- metrics ---------------------------------------------------------------

double max_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m = std::max(m, x);
  return m;
}

}  // namespace

// ---- ScenarioConfig ----------------------------------------------------------

void ScenarioConfig::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ValidationError("duration must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
  if (duration / dt > kMaxStepCount) throw ValidationError("duration/dt exceeds the 1e8 step cap");

  const std::size_t n = landmarks.size();
  if (n < 3) {
    throw ValidationError("at least 3 landmarks are required for observability of the correction terms, got " +
                          std::to_string(n));
  }
  if (gains.alpha.size() != n) {
    throw ValidationError("alpha count (" + std::to_string(gains.alpha.size()) + ") must equal landmark count (" +
                          std::to_string(n) + ")");
  }
  if (initial_estimates.landmarks_hat.size() != n) {
    throw ValidationError("initial landmark estimate count (" +
                          std::to_string(initial_estimates.landmarks_hat.size()) +
                          ") must equal landmark count (" + std::to_string(n) + ")");
  }
  if (!bias.b_y.empty() && bias.b_y.size() != n) {
    throw ValidationError("landmark bias count must be zero or equal the landmark count");
  }
  try {
    gains.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("gains: ") + e.what());
  }
  if (!(noise.sigma_omega >= 0.0) || !(noise.sigma_v >= 0.0) || !(noise.sigma_y >= 0.0)) {
    throw ValidationError("noise sigmas must be nonnegative");
  }
  if (twist_profile.empty()) throw ValidationError("twist_profile must contain at least one knot");
  if (twist_profile.front().t != 0.0) throw ValidationError("the first twist knot must start at t = 0");
  for (std::size_t k = 0; k < twist_profile.size(); ++k) {
    if (!twist_profile[k].twist.is_finite()) throw ValidationError("twist_profile entries must be finite");
    if (k > 0 && !(twist_profile[k].t > twist_profile[k - 1].t)) {
      throw ValidationError("twist_profile knot times must be strictly increasing");
    }
  }
  auto finite_list = [](const std::vector<Vec3>& vs) {
    return std::all_of(vs.begin(), vs.end(), [](const Vec3& v) { return v.allFinite(); });
  };
  if (!finite_list(landmarks) || !finite_list(initial_estimates.landmarks_hat) || !finite_list(bias.b_y) ||
      !initial_pose.position.allFinite() || !initial_estimates.p_hat.allFinite() || !bias.b_omega.allFinite() ||
      !bias.b_v.allFinite() || !initial_estimates.b_omega_hat.allFinite() || !initial_estimates.b_v_hat.allFinite()) {
    throw ValidationError("scenario vectors must be finite");
  }
}

std::size_t ScenarioConfig::step_count() const {
  const double ratio = duration / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

Twist ScenarioConfig::twist_at(double t) const {
  // Knots are sorted; take the last one starting at or before t.
  auto it = std::upper_bound(twist_profile.begin(), twist_profile.end(), t,
                             [](double time, const TwistKnot& k) { return time < k.t; });
  if (it == twist_profile.begin()) return twist_profile.front().twist;
  return std::prev(it)->twist;
}

ScenarioConfig paper_sec5_scenario() {
  ScenarioConfig c;
  c.duration = kDefaultDuration;
  c.dt = kDefaultDt;
  c.twist_profile = {{0.0, Twist{Vec3(0.0, 0.0, 0.3), Vec3(2.5, 0.0, 0.0)}}};
  c.initial_pose = Pose{Rotation3::identity(), Vec3(0.0, 0.0, 6.0)};
  c.landmarks = {Vec3(7, 7, 0), Vec3(-7, 7, 0), Vec3(7, -7, 0), Vec3(-7, -7, 0)};
  c.bias.b_omega = Vec3(0.09, -0.15, -0.1);
  c.bias.b_v = Vec3(0.09, 0.06, -0.07);
  c.gains.k_p = 1.0;
  c.gains.k_w = 2.0;
  c.gains.gamma = 30.0 * Mat3::Identity();
  c.gains.alpha.assign(4, 0.1);
  c.initial_estimates.landmarks_hat.assign(4, Vec3::Zero());
  return c;
}

ScenarioConfig parse_scenario(const json& j) {
  require_object(j, "scenario");
  reject_unknown_keys(j,
                      {"duration", "dt", "twist_profile", "initial_pose", "landmarks", "landmark_velocities", "bias",
                       "noise", "gains", "initial_estimates"},
                      "scenario");
  ScenarioConfig c;
  if (j.contains("duration")) c.duration = read_number(j["duration"], "duration");
  if (j.contains("dt")) c.dt = read_number(j["dt"], "dt");

  if (!j.contains("twist_profile")) throw ParseError("missing required key 'twist_profile'");
  const json& tp = j["twist_profile"];
  if (tp.is_object() && !tp.contains("t")) {
    reject_unknown_keys(tp, {"omega", "vel"}, "twist_profile");
    c.twist_profile = {{0.0, read_twist(tp, "twist_profile")}};
  } else if (tp.is_array()) {
    for (std::size_t k = 0; k < tp.size(); ++k) {
      const std::string what = "twist_profile[" + std::to_string(k) + "]";
      require_object(tp[k], what);
      reject_unknown_keys(tp[k], {"t", "omega", "vel"}, what);
      if (!tp[k].contains("t")) throw ParseError(what + ": missing 't'");
      c.twist_profile.push_back({read_number(tp[k]["t"], what + ".t"), read_twist(tp[k], what)});
    }
  } else {
    throw ParseError("twist_profile: expected {omega, vel} or an array of {t, omega, vel} knots");
  }

  if (j.contains("initial_pose")) {
    const json& ip = require_object(j["initial_pose"], "initial_pose");
    reject_unknown_keys(ip, {"rotation", "position"}, "initial_pose");
    if (ip.contains("rotation")) c.initial_pose.rotation = read_rotation(ip["rotation"], "initial_pose.rotation");
    if (ip.contains("position")) c.initial_pose.position = read_vec3(ip["position"], "initial_pose.position");
  }

  if (!j.contains("landmarks")) throw ParseError("missing required key 'landmarks'");
  c.landmarks = read_vec3_list(j["landmarks"], "landmarks");
  const std::size_t n = c.landmarks.size();

  if (j.contains("landmark_velocities")) {
    for (const Vec3& v : read_vec3_list(j["landmark_velocities"], "landmark_velocities")) {
      if (!v.isZero(0.0)) throw ValidationError("landmarks must be fixed: every landmark velocity must be zero");
    }
  }

  if (j.contains("bias")) {
    const json& b = require_object(j["bias"], "bias");
    reject_unknown_keys(b, {"b_omega", "b_v", "b_y"}, "bias");
    if (b.contains("b_omega")) c.bias.b_omega = read_vec3(b["b_omega"], "bias.b_omega");
    if (b.contains("b_v")) c.bias.b_v = read_vec3(b["b_v"], "bias.b_v");
    if (b.contains("b_y")) c.bias.b_y = read_vec3_list(b["b_y"], "bias.b_y");
  }

  if (j.contains("noise")) {
    const json& ns = require_object(j["noise"], "noise");
    reject_unknown_keys(ns, {"sigma_omega", "sigma_v", "sigma_y", "seed"}, "noise");
    if (ns.contains("sigma_omega")) c.noise.sigma_omega = read_number(ns["sigma_omega"], "noise.sigma_omega");
    if (ns.contains("sigma_v")) c.noise.sigma_v = read_number(ns["sigma_v"], "noise.sigma_v");
    if (ns.contains("sigma_y")) c.noise.sigma_y = read_number(ns["sigma_y"], "noise.sigma_y");
    if (ns.contains("seed")) {
      if (!ns["seed"].is_number_unsigned()) throw ParseError("noise.seed: expected a nonnegative integer");
      c.noise.seed = ns["seed"].get<std::uint64_t>();
    }
  }

  if (!j.contains("gains")) throw ParseError("missing required key 'gains'");
  const json& g = require_object(j["gains"], "gains");
  reject_unknown_keys(g, {"k_p", "k_w", "gamma", "alpha"}, "gains");
  for (const char* key : {"k_p", "k_w", "gamma", "alpha"}) {
    if (!g.contains(key)) throw ParseError(std::string("gains: missing '") + key + "'");
  }
  c.gains.k_p = read_number(g["k_p"], "gains.k_p");
  c.gains.k_w = read_number(g["k_w"], "gains.k_w");
  c.gains.gamma = g["gamma"].is_number() ? Mat3(read_number(g["gamma"], "gains.gamma") * Mat3::Identity())
                                         : read_mat3(g["gamma"], "gains.gamma");
  if (g["alpha"].is_number()) {
    c.gains.alpha.assign(n, g["alpha"].get<double>());
  } else if (g["alpha"].is_array()) {
    for (const json& a : g["alpha"]) c.gains.alpha.push_back(read_number(a, "gains.alpha"));
  } else {
    throw ParseError("gains.alpha: expected a number or an array of numbers");
  }

  c.initial_estimates.landmarks_hat.assign(n, Vec3::Zero());
  if (j.contains("initial_estimates")) {
    const json& ie = require_object(j["initial_estimates"], "initial_estimates");
    reject_unknown_keys(ie, {"r_hat", "p_hat", "landmarks_hat", "b_omega_hat", "b_v_hat"}, "initial_estimates");
    if (ie.contains("r_hat")) c.initial_estimates.r_hat = read_rotation(ie["r_hat"], "initial_estimates.r_hat");
    if (ie.contains("p_hat")) c.initial_estimates.p_hat = read_vec3(ie["p_hat"], "initial_estimates.p_hat");
    if (ie.contains("landmarks_hat")) {
      c.initial_estimates.landmarks_hat = read_vec3_list(ie["landmarks_hat"], "initial_estimates.landmarks_hat");
    }
    if (ie.contains("b_omega_hat")) {
      c.initial_estimates.b_omega_hat = read_vec3(ie["b_omega_hat"], "initial_estimates.b_omega_hat");
    }
    if (ie.contains("b_v_hat")) c.initial_estimates.b_v_hat = read_vec3(ie["b_v_hat"], "initial_estimates.b_v_hat");
  }

  c.validate();
  return c;
}

ScenarioConfig parse_scenario_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed scenario: ") + e.what());
  }
  return parse_scenario(j);
}

ScenarioConfig load_scenario(const std::string& path_or_name) {
  if (path_or_name == kBuiltinScenario) return paper_sec5_scenario();
  std::ifstream in(path_or_name);
  if (!in) throw ParseError("cannot open scenario file '" + path_or_name + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["duration"] = c.duration;
  j["dt"] = c.dt;
  json knots = json::array();
  for (const TwistKnot& k : c.twist_profile) {
    knots.push_back({{"t", k.t}, {"omega", vec_json(k.twist.omega)}, {"vel", vec_json(k.twist.vel)}});
  }
  j["twist_profile"] = knots;
  j["initial_pose"] = {{"rotation", mat_json(c.initial_pose.rotation.matrix())},
                       {"position", vec_json(c.initial_pose.position)}};
  j["landmarks"] = vec_list_json(c.landmarks);
  j["bias"] = {{"b_omega", vec_json(c.bias.b_omega)}, {"b_v", vec_json(c.bias.b_v)}};
  if (!c.bias.b_y.empty()) j["bias"]["b_y"] = vec_list_json(c.bias.b_y);
  j["noise"] = {{"sigma_omega", c.noise.sigma_omega},
                {"sigma_v", c.noise.sigma_v},
                {"sigma_y", c.noise.sigma_y},
                {"seed", c.noise.seed}};
  j["gains"] = {{"k_p", c.gains.k_p}, {"k_w", c.gains.k_w}, {"gamma", mat_json(c.gains.gamma)},
                {"alpha", c.gains.alpha}};
  j["initial_estimates"] = {{"r_hat", mat_json(c.initial_estimates.r_hat.matrix())},
                            {"p_hat", vec_json(c.initial_estimates.p_hat)},
                            {"landmarks_hat", vec_list_json(c.initial_estimates.landmarks_hat)},
                            {"b_omega_hat", vec_json(c.initial_estimates.b_omega_hat)},
                            {"b_v_hat", vec_json(c.initial_estimates.b_v_hat)}};
  return j;
}

// ---- metrics and runs ------------------------------------------------------

double MetricsRecord::max_e() const { return max_of(e_norm); }
double MetricsRecord::max_p_err() const { return max_of(p_err); }

MetricsRecord compute_metrics(double t, const TrueState& truth, const ObserverState& est,
                              const SensorBias& bias, const GainConfig& gains) {
  MetricsRecord r;
  r.t = t;
  const std::size_t n = truth.landmarks.size();
  std::vector<Vec3> errors;
  errors.reserve(n);
  const Rotation3 rt = truth.pose.rotation.transpose();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 y = rt * (truth.landmarks[i] - truth.pose.position);
    errors.push_back(landmark_error(est, y, i));
    r.e_norm.push_back(errors.back().norm());
    r.p_err.push_back((truth.landmarks[i] - est.landmarks_hat[i]).norm());
  }
  const PoseError pe = pose_error(est, truth);
  r.r_tilde_dist = rotation_distance(pe.r_tilde);
  r.p_tilde_norm = pe.p_tilde.norm();
  const BiasError be = bias_error(est, bias);
  r.b_omega_tilde_norm = be.b_omega_tilde.norm();
  r.b_v_tilde_norm = be.b_v_tilde.norm();
  r.lyapunov = lyapunov_value(est, errors, bias, gains);
  return r;
}

RunResult run(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  const std::size_t stride = std::max<std::size_t>(options.stride, 1);
  const std::size_t steps = config.step_count();

  TrueState truth{config.initial_pose, config.landmarks};
  ObserverState est = config.initial_estimates;
  NoiseStream rng(config.noise.seed);

  RunResult result;
  result.records.reserve(steps / stride + 1);
  if (options.keep_trace) result.trace.reserve(steps + 1);

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    if (k % stride == 0) result.records.push_back(compute_metrics(t, truth, est, config.bias, config.gains));
    if (k == steps) {
      if (options.keep_trace) result.trace.push_back({k, t, truth, est, {}});
      break;
    }
    const Twist u = config.twist_at(t);
    SensorFrame frame = sense(truth, config.bias, config.noise, u, rng, t);
    try {
      ObserverState next = observer_step(est, frame, config.gains, config.dt);
      if (options.keep_trace) result.trace.push_back({k, t, truth, est, std::move(frame)});
      est = std::move(next);
    } catch (const ObserverAbort& e) {
      throw RunAbort(k, e.what());
    } catch (const GeometryError& e) {
      throw RunAbort(k, e.what());
    }
    truth = true_step(truth, u, config.dt);
  }
  return result;
}

void write_csv(std::ostream& os, const std::vector<MetricsRecord>& records) {
  const std::size_t n = records.empty() ? 0 : records.front().e_norm.size();
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",e" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",perr" << i;
  os << ",rtilde,ptilde,bomega,bv,lyap\n";
  char buf[32];
  auto cell = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf;
  };
  for (const MetricsRecord& r : records) {
    cell(r.t);
    for (double x : r.e_norm) os << ',', cell(x);
    for (double x : r.p_err) os << ',', cell(x);
    for (double x : {r.r_tilde_dist, r.p_tilde_norm, r.b_omega_tilde_norm, r.b_v_tilde_norm, r.lyapunov}) {
      os << ',';
      cell(x);
    }
    os << '\n';
  }
}

// ---- sweeps ----------------------------------------------------------------

SweepAxis parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::kP, SweepAxis::kW, SweepAxis::GammaScale, SweepAxis::AlphaScale,
                      SweepAxis::SigmaOmega, SweepAxis::SigmaV, SweepAxis::SigmaY, SweepAxis::Dt}) {
    if (sweep_axis_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) +
                              "' (expected k_p, k_w, gamma_scale, alpha_scale, sigma_omega, sigma_v, sigma_y or dt)");
}

std::string_view sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kP: return "k_p";
    case SweepAxis::kW: return "k_w";
    case SweepAxis::GammaScale: return "gamma_scale";
    case SweepAxis::AlphaScale: return "alpha_scale";
    case SweepAxis::SigmaOmega: return "sigma_omega";
    case SweepAxis::SigmaV: return "sigma_v";
    case SweepAxis::SigmaY: return "sigma_y";
    case SweepAxis::Dt: return "dt";
  }
  return "";
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepAxis axis, double value) {
  ScenarioConfig c = base;
  switch (axis) {
    case SweepAxis::kP: c.gains.k_p = value; break;
    case SweepAxis::kW: c.gains.k_w = value; break;
    case SweepAxis::GammaScale: c.gains.gamma *= value; break;
    case SweepAxis::AlphaScale:
      for (double& a : c.gains.alpha) a *= value;
      break;
    case SweepAxis::SigmaOmega: c.noise.sigma_omega = value; break;
    case SweepAxis::SigmaV: c.noise.sigma_v = value; break;
    case SweepAxis::SigmaY: c.noise.sigma_y = value; break;
    case SweepAxis::Dt: c.dt = value; break;
  }
  return c;
}

double settling_time(const std::vector<MetricsRecord>& records, double threshold, double window) {
  std::size_t start = 0;
  bool in_run = false;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const bool below = records[k].max_e() < threshold;
    if (below && !in_run) {
      start = k;
      in_run = true;
    }
    if (!below) in_run = false;
    if (in_run && records[k].t - records[start].t >= window - 1e-12) return records[start].t;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<SweepRow> sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<double>& values,
                            std::size_t stride) {
  std::vector<std::future<SweepRow>> jobs;
  jobs.reserve(values.size());
  for (double value : values) {
    jobs.push_back(std::async(std::launch::async, [&base, axis, value, stride] {
      SweepRow row;
      row.value = value;
      try {
        const ScenarioConfig c = apply_sweep_value(base, axis, value);
        const RunResult r = run(c, {stride, false});
        const MetricsRecord& last = r.records.back();
        row.settling_time = settling_time(r.records);
        row.final_max_e = last.max_e();
        row.final_max_perr = last.max_p_err();
        row.final_rtilde = last.r_tilde_dist;
        row.final_ptilde = last.p_tilde_norm;
      } catch (const std::exception& e) {
        row.aborted = true;
        row.error = e.what();
        row.settling_time = row.final_max_e = row.final_max_perr = row.final_rtilde = row.final_ptilde =
            std::numeric_limits<double>::quiet_NaN();
      }
      return row;
    }));
  }
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (auto& job : jobs) rows.push_back(job.get());
  return rows;
}

void write_sweep_csv(std::ostream& os, SweepAxis axis, const std::vector<SweepRow>& rows) {
  os << sweep_axis_name(axis) << ",status,settling_time,final_max_e,final_max_perr,final_rtilde,final_ptilde\n";
  char buf[32];
  auto cell = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << ',' << buf;
  };
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    os << buf << ',' << (r.aborted ? "aborted" : "ok");
    for (double x : {r.settling_time, r.final_max_e, r.final_max_perr, r.final_rtilde, r.final_ptilde}) cell(x);
    os << '\n';
  }
}

}  // namespace slamobs
