#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pglab/harness.hpp"
#include "pglab/verify.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir) {
  pglab::ExperimentConfig config = pglab::load_config(config_path);
  if (seed) config.master_seed = *seed;
  if (out_dir) config.out_dir = *out_dir;
  const pglab::CsvReport report = pglab::run_experiment(config);
  pglab::write_report(report, config.out_dir);

  int aborted = 0;
  for (const pglab::RunCurve& curve : report.curves) {
    if (curve.history.aborted) {
      ++aborted;
      std::fprintf(stderr, "seed %llu: %s\n",
                   static_cast<unsigned long long>(curve.seed_index),
                   curve.history.abort_reason.c_str());
    }
  }
  std::printf("%zu run(s) -> %s/raw.csv, %s/aggregate.csv\n",
              report.curves.size(), config.out_dir.c_str(),
              config.out_dir.c_str());
  return aborted == 0 ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<double>& values,
              std::optional<std::string> out_dir) {
  pglab::ExperimentConfig config = pglab::load_config(config_path);
  if (out_dir) config.out_dir = *out_dir;

  pglab::CsvReport report;
  if (param == "B") {
    std::vector<int> b_values;
    for (double v : values) b_values.push_back(static_cast<int>(v));
    report = pglab::sweep_batch_size(config, b_values);
    pglab::write_report(report, config.out_dir);
  } else if (param == "eta") {
    // One report per learning rate, written under out/eta-<value>/.
    for (double eta : values) {
      pglab::ExperimentConfig sub = config;
      sub.eta = eta;
      const pglab::CsvReport sub_report = pglab::run_experiment(sub);
      pglab::write_report(sub_report,
                          config.out_dir + "/eta-" + std::to_string(eta));
      for (const pglab::RunCurve& curve : sub_report.curves) {
        report.curves.push_back(curve);
      }
    }
  } else {
    std::fprintf(stderr, "unsupported sweep parameter: %s (use B or eta)\n",
                 param.c_str());
    return 2;
  }

  int aborted = 0;
  for (const pglab::RunCurve& curve : report.curves) {
    if (curve.history.aborted) ++aborted;
  }
  std::printf("swept %s over %zu value(s), %zu run(s) -> %s\n", param.c_str(),
              values.size(), report.curves.size(), config.out_dir.c_str());
  return aborted == 0 ? 0 : 1;
}

int cmd_verify(bool desk_scale) {
  const auto results = pglab::run_verification(desk_scale);
  int failures = 0;
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  for (const auto& r : results) {
    std::printf("%-*s  %s  %s\n", static_cast<int>(width), r.name.c_str(),
                r.passed ? "PASS" : "FAIL", r.detail.c_str());
    if (!r.passed) ++failures;
  }
  std::printf("%zu/%zu checks passed\n", results.size() - failures,
              results.size());
  return failures == 0 ? 0 : 1;
}

int cmd_presets(const std::string& presets_dir) {
  const auto names = pglab::preset_names(presets_dir);
  if (names.empty()) {
    std::fprintf(stderr, "no presets found under %s\n", presets_dir.c_str());
    return 1;
  }
  for (const auto& name : names) std::printf("%s\n", name.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced policy gradient lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  auto* run = app.add_subcommand("run", "Execute one experiment config");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Override master seed");
  run->add_option("--out", out_dir, "Override output directory");

  std::string param = "B";
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter");
  sweep->add_option("--config", config_path, "Config file")->required();
  sweep->add_option("--param", param, "Parameter to sweep (B or eta)");
  sweep->add_option("--values", values, "Comma-separated values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out", out_dir, "Override output directory");

  bool desk_scale = false;
  auto* verify = app.add_subcommand("verify", "Run the oracle/property suite");
  verify->add_flag("--desk-scale", desk_scale,
                   "Include the desk-scale learning reproductions");

  std::string presets_dir = "presets";
  auto* presets = app.add_subcommand("presets", "List shipped preset configs");
  presets->add_option("--dir", presets_dir, "Presets directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out_dir);
    if (sweep->parsed()) return cmd_sweep(config_path, param, values, out_dir);
    if (verify->parsed()) return cmd_verify(desk_scale);
    if (presets->parsed()) return cmd_presets(presets_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
