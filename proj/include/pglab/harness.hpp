#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pglab/optimizer.hpp"
#include "pglab/pgpe.hpp"

namespace pglab {

enum class Algo { Gpomdp, Svrpg, SrvrPg, Pgpe, SrvrPgPe };

std::string algo_name(Algo algo);
Algo parse_algo(const std::string& name);

// Flat key = value experiment description; see presets/ for the shipped
// Table-style configurations.
struct ExperimentConfig {
  std::string env_id = "cartpole";
  Algo algo = Algo::SrvrPg;
  std::string policy = "linear";  // linear | mlp64 | mlp8x8 | softmax
  double sigma = 1.0;
  double gamma = 0.99;
  double eta = 0.01;
  int snapshot_batch = 10;   // N
  int inner_batch = 5;       // B
  int epoch_len = 1;         // m
  int horizon = 100;
  long long budget = 1000;   // total trajectories per run
  int n_seeds = 1;
  std::uint64_t master_seed = 0;
  std::string out_dir = "out";
  EstimatorKind estimator = EstimatorKind::Gpomdp;
  OutputRule output_rule = OutputRule::Last;
  ConstraintSet constraint;
  double hyper_sigma = 1.0;
  bool optimize_sigma = false;
  double weight_cap = 0.0;  // 0 = off
  bool mean_baseline = true;
  double grad_clip = 0.0;  // 0 = off

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct RunCurve {
  std::uint64_t seed_index = 0;
  int B = 0;
  RunHistory history;
};

struct CsvReport {
  std::vector<RunCurve> curves;
  std::string raw_csv;
  std::string aggregate_csv;
};

// Builds the policy spec implied by config.policy for the given environment.
PolicySpec make_policy_spec(const ExperimentConfig& config, const Environment& env);

// Executes n_seeds runs with seeds derived from master_seed, collects learning
// curves and renders the raw and (mean, std) aggregate CSVs.
CsvReport run_experiment(const ExperimentConfig& config);

// One run_experiment per B value, everything else fixed; merged CSVs keyed by
// the B column.
CsvReport sweep_batch_size(const ExperimentConfig& config,
                           const std::vector<int>& b_values);

void write_report(const CsvReport& report, const std::string& out_dir);

// Names of the shipped preset files (without directory or extension).
std::vector<std::string> preset_names(const std::string& presets_dir);

}  // namespace pglab
