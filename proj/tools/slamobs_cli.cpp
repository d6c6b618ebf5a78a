// Command-line runner for the SLAM observer simulation.
//
//   slamobs run --scenario <path|paper-sec5> --out <dir> [--dt s] [--duration s] [--seed n] [--stride k]
//   slamobs sweep --scenario <path|paper-sec5> --axis <name> --values v1,v2,... [--out <dir>]
//   slamobs validate --scenario <path>
//
// Exit codes: 0 success, 1 parse/validation error, 2 runtime abort.

#include "slamobs/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitAbort = 2;

struct Overrides {
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<std::uint64_t> seed;
};

slamobs::ScenarioConfig load_with_overrides(const std::string& scenario, const Overrides& o) {
  slamobs::ScenarioConfig c = slamobs::load_scenario(scenario);
  if (o.dt) c.dt = *o.dt;
  if (o.duration) c.duration = *o.duration;
  if (o.seed) c.noise.seed = *o.seed;
  c.validate();
  return c;
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast-adaptation nonlinear SLAM observer simulation harness"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir;
  std::string axis_name;
  std::vector<double> values;
  std::size_t stride = slamobs::kDefaultStride;
  Overrides overrides;

  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario and write metrics.csv");
  run_cmd->add_option("--scenario", scenario, "Scenario JSON file or 'paper-sec5'")->required();
  run_cmd->add_option("--out", out_dir, "Output directory")->required();
  run_cmd->add_option("--dt", overrides.dt, "Integration step [s]");
  run_cmd->add_option("--duration", overrides.duration, "Simulated time [s]");
  run_cmd->add_option("--seed", overrides.seed, "Noise seed");
  run_cmd->add_option("--stride", stride, "Record every k-th step")->check(CLI::PositiveNumber);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one simulation per parameter value");
  sweep_cmd->add_option("--scenario", scenario, "Scenario JSON file or 'paper-sec5'")->required();
  sweep_cmd->add_option("--axis", axis_name, "k_p, k_w, gamma_scale, alpha_scale, sigma_omega, sigma_v, sigma_y, dt")
      ->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->delimiter(',');
  sweep_cmd->add_option("--out", out_dir, "Write sweep.csv here instead of stdout");
  sweep_cmd->add_option("--dt", overrides.dt, "Base integration step [s]");
  sweep_cmd->add_option("--duration", overrides.duration, "Simulated time [s]");
  sweep_cmd->add_option("--stride", stride, "Record every k-th step")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Parse and check a scenario");
  validate_cmd->add_option("--scenario", scenario, "Scenario JSON file or 'paper-sec5'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalid;
  }

  slamobs::ScenarioConfig config;
  try {
    config = load_with_overrides(scenario, overrides);
  } catch (const slamobs::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const slamobs::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitInvalid;
  }

  if (validate_cmd->parsed()) {
    std::cout << "ok: " << config.landmarks.size() << " landmarks, " << config.step_count() << " steps\n";
    return kExitOk;
  }

  try {
    if (run_cmd->parsed()) {
      const auto start = std::chrono::steady_clock::now();
      const slamobs::RunResult result = slamobs::run(config, {stride, false});
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::ofstream out = open_output(out_dir, "metrics.csv");
      slamobs::write_csv(out, result.records);
      const slamobs::MetricsRecord& last = result.records.back();
      std::cout << "steps " << config.step_count() << ", records " << result.records.size() << ", wall "
                << elapsed << " s\n"
                << "final max|e_i| " << last.max_e() << ", max|p_i - p_hat_i| " << last.max_p_err()
                << ", lyapunov " << last.lyapunov << '\n';
      return kExitOk;
    }

    slamobs::SweepAxis axis;
    try {
      axis = slamobs::parse_sweep_axis(axis_name);
    } catch (const std::invalid_argument& e) {
      std::cerr << e.what() << '\n';
      return kExitInvalid;
    }
    for (double v : values) {
      try {
        slamobs::apply_sweep_value(config, axis, v).validate();
      } catch (const slamobs::ValidationError& e) {
        std::cerr << "validation error for " << axis_name << "=" << v << ": " << e.what() << '\n';
        return kExitInvalid;
      }
    }
    const auto rows = slamobs::sweep(config, axis, values, stride);
    if (out_dir.empty()) {
      slamobs::write_sweep_csv(std::cout, axis, rows);
    } else {
      std::ofstream out = open_output(out_dir, "sweep.csv");
      slamobs::write_sweep_csv(out, axis, rows);
    }
    bool any_abort = false;
    for (const auto& r : rows) {
      if (r.aborted) {
        std::cerr << axis_name << "=" << r.value << " aborted: " << r.error << '\n';
        any_abort = true;
      }
    }
    return any_abort ? kExitAbort : kExitOk;
  } catch (const slamobs::RunAbort& e) {
    std::cerr << "run aborted at " << e.what() << '\n';
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAbort;
  }
}
