#include "pglab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pglab {

namespace fs = std::filesystem;

std::string algo_name(Algo algo) {
  switch (algo) {
    case Algo::Gpomdp: return "gpomdp";
    case Algo::Svrpg: return "svrpg";
    case Algo::SrvrPg: return "srvr-pg";
    case Algo::Pgpe: return "pgpe";
    case Algo::SrvrPgPe: return "srvr-pg-pe";
  }
  return "?";
}

Algo parse_algo(const std::string& name) {
  if (name == "gpomdp") return Algo::Gpomdp;
  if (name == "svrpg") return Algo::Svrpg;
  if (name == "srvr-pg") return Algo::SrvrPg;
  if (name == "pgpe") return Algo::Pgpe;
  if (name == "srvr-pg-pe") return Algo::SrvrPgPe;
  throw std::invalid_argument("unknown algo: " + name);
}

namespace {

bool has_inner_loop(Algo algo) {
  return algo == Algo::Svrpg || algo == Algo::SrvrPg || algo == Algo::SrvrPgPe;
}

// Episodes consumed per epoch (or per iteration for the plain methods).
long long episodes_per_epoch(const ExperimentConfig& c) {
  switch (c.algo) {
    case Algo::Gpomdp:
    case Algo::Pgpe:
      return c.snapshot_batch;
    case Algo::Svrpg:
      return c.snapshot_batch +
             static_cast<long long>(c.epoch_len) * c.inner_batch;
    case Algo::SrvrPg:
    case Algo::SrvrPgPe:
      return c.snapshot_batch +
             static_cast<long long>(c.epoch_len - 1) * c.inner_batch;
  }
  return 1;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_seeds < 1) throw std::invalid_argument("config: n_seeds must be >= 1");
  if (budget < snapshot_batch) {
    throw std::invalid_argument("config: budget below one snapshot batch");
  }
  if (has_inner_loop(algo) &&
      static_cast<long long>(inner_batch) * epoch_len > budget) {
    throw std::invalid_argument("config: B * m exceeds the trajectory budget");
  }
  if (budget < episodes_per_epoch(*this)) {
    throw std::invalid_argument("config: budget below one epoch of episodes");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": expected key = value");
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key or value");
    }

    if (key == "env") config.env_id = value;
    else if (key == "algo") config.algo = parse_algo(value);
    else if (key == "policy") config.policy = value;
    else if (key == "sigma") config.sigma = std::stod(value);
    else if (key == "gamma") config.gamma = std::stod(value);
    else if (key == "eta") config.eta = std::stod(value);
    else if (key == "N") config.snapshot_batch = std::stoi(value);
    else if (key == "B") config.inner_batch = std::stoi(value);
    else if (key == "m") config.epoch_len = std::stoi(value);
    else if (key == "horizon") config.horizon = std::stoi(value);
    else if (key == "budget") config.budget = std::stoll(value);
    else if (key == "n_seeds") config.n_seeds = std::stoi(value);
    else if (key == "master_seed") config.master_seed = std::stoull(value);
    else if (key == "out") config.out_dir = value;
    else if (key == "hyper_sigma") config.hyper_sigma = std::stod(value);
    else if (key == "optimize_sigma") config.optimize_sigma = (value == "true");
    else if (key == "weight_cap") config.weight_cap = std::stod(value);
    else if (key == "grad_clip") config.grad_clip = std::stod(value);
    else if (key == "baseline") {
      if (value == "none") config.mean_baseline = false;
      else if (value == "batch-mean") config.mean_baseline = true;
      else throw std::invalid_argument("unknown baseline: " + value);
    }
    else if (key == "output_rule") {
      config.output_rule = value == "uniform" ? OutputRule::Uniform : OutputRule::Last;
    } else if (key == "estimator") {
      if (value == "reinforce") config.estimator = EstimatorKind::Reinforce;
      else if (value == "pgt") config.estimator = EstimatorKind::Pgt;
      else if (value == "gpomdp") config.estimator = EstimatorKind::Gpomdp;
      else throw std::invalid_argument("unknown estimator: " + value);
    } else if (key == "constraint") {
      if (value == "none") config.constraint = ConstraintSet::unconstrained();
      else if (value.rfind("ball:", 0) == 0) {
        config.constraint.kind = ConstraintSet::Kind::L2Ball;
        config.constraint.radius = std::stod(value.substr(5));
      } else {
        throw std::invalid_argument("unknown constraint: " + value);
      }
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

PolicySpec make_policy_spec(const ExperimentConfig& config, const Environment& env) {
  if (config.policy == "linear") {
    return linear_gaussian_spec(env.obs_dim(), config.sigma);
  }
  if (config.policy == "mlp64") {
    return mlp_gaussian_spec(env.obs_dim(), {64}, config.sigma);
  }
  if (config.policy == "mlp8x8") {
    return mlp_gaussian_spec(env.obs_dim(), {8, 8}, config.sigma);
  }
  if (config.policy == "softmax") {
    const auto* tabular = dynamic_cast<const TabularEnv*>(&env);
    if (tabular == nullptr) {
      throw std::invalid_argument("softmax policy requires a tabular environment");
    }
    return softmax_spec(tabular->mdp().n_states, tabular->mdp().n_actions);
  }
  throw std::invalid_argument("unknown policy: " + config.policy);
}

namespace {

SrvrPgConfig to_run_config(const ExperimentConfig& config) {
  SrvrPgConfig rc;
  rc.epoch_len = config.epoch_len;
  rc.step_size = config.eta;
  rc.snapshot_batch = config.snapshot_batch;
  rc.inner_batch = config.inner_batch;
  rc.gamma = config.gamma;
  rc.horizon = config.horizon;
  rc.constraint = config.constraint;
  rc.estimator = config.estimator;
  rc.output_rule = config.output_rule;
  if (config.weight_cap > 0.0) rc.weights.cap = config.weight_cap;
  rc.mean_baseline = config.mean_baseline;
  rc.grad_clip = config.grad_clip;
  if (rc.constraint.kind == ConstraintSet::Kind::L2Ball &&
      rc.constraint.center.size() == 0) {
    rc.constraint.center = Vector();  // resolved once the param dim is known
  }
  return rc;
}

RunHistory run_one(const ExperimentConfig& config, const Environment& env,
                   const PolicySpec& spec, const Vector& init, Rng& rng) {
  SrvrPgConfig rc = to_run_config(config);
  if (rc.constraint.kind == ConstraintSet::Kind::L2Ball &&
      rc.constraint.center.size() == 0) {
    rc.constraint.center = Vector::Zero(init.size());
  }
  const long long per_epoch = episodes_per_epoch(config);
  const int epochs = static_cast<int>(std::max<long long>(1, config.budget / per_epoch));
  rc.epochs = epochs;

  switch (config.algo) {
    case Algo::Gpomdp:
      return gpomdp_run(rc, env, spec, init, rng, epochs);
    case Algo::Svrpg:
      return svrpg_run(rc, env, spec, init, rng);
    case Algo::SrvrPg:
      return srvr_pg_run(rc, env, spec, init, rng);
    case Algo::Pgpe:
    case Algo::SrvrPgPe: {
      HyperParams hyper;
      hyper.mu = init;
      hyper.log_std = Vector::Constant(init.size(), std::log(config.hyper_sigma));
      hyper.optimize_sigma = config.optimize_sigma;
      if (config.algo == Algo::Pgpe) {
        return pgpe_run(rc, env, spec, hyper, rng, epochs);
      }
      return srvr_pg_pe_run(rc, env, spec, hyper, rng);
    }
  }
  throw std::logic_error("unreachable");
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string render_raw_csv(const ExperimentConfig& config,
                           const std::vector<RunCurve>& curves) {
  std::ostringstream out;
  out << "algo,env,seed,B,epoch,step,trajectories,avg_return,update_norm\n";
  for (const RunCurve& curve : curves) {
    for (const UpdateRecord& rec : curve.history.records) {
      out << algo_name(config.algo) << ',' << config.env_id << ','
          << curve.seed_index << ',' << curve.B << ',' << rec.epoch << ','
          << rec.step << ',' << rec.trajectories << ','
          << format_double(rec.avg_return) << ','
          << format_double(rec.update_norm) << '\n';
    }
  }
  return out.str();
}

// Linear interpolation of a learning curve at a trajectory count.
bool interpolate(const std::vector<UpdateRecord>& records, double x, double* y) {
  if (records.empty() || x < records.front().trajectories ||
      x > records.back().trajectories) {
    return false;
  }
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    const double x0 = static_cast<double>(records[i].trajectories);
    const double x1 = static_cast<double>(records[i + 1].trajectories);
    if (x >= x0 && x <= x1) {
      const double t = (x1 == x0) ? 0.0 : (x - x0) / (x1 - x0);
      *y = records[i].avg_return +
           t * (records[i + 1].avg_return - records[i].avg_return);
      return true;
    }
  }
  *y = records.back().avg_return;
  return true;
}

std::string render_aggregate_csv(const ExperimentConfig& config,
                                 const std::vector<RunCurve>& curves) {
  std::ostringstream out;
  out << "algo,env,B,trajectories,mean_return,std_return,n_seeds\n";

  std::map<int, std::vector<const RunCurve*>> by_b;
  for (const RunCurve& curve : curves) by_b[curve.B].push_back(&curve);

  for (const auto& [b, group] : by_b) {
    // Common grid: trajectory points of the longest curve in the group.
    const RunCurve* longest = group.front();
    for (const RunCurve* c : group) {
      if (c->history.records.size() > longest->history.records.size()) {
        longest = c;
      }
    }
    for (const UpdateRecord& rec : longest->history.records) {
      const double x = static_cast<double>(rec.trajectories);
      double sum = 0.0, sum_sq = 0.0;
      int count = 0;
      for (const RunCurve* c : group) {
        double y = 0.0;
        if (interpolate(c->history.records, x, &y)) {
          sum += y;
          sum_sq += y * y;
          ++count;
        }
      }
      if (count == 0) continue;
      const double mean = sum / count;
      const double var = std::max(0.0, sum_sq / count - mean * mean);
      out << algo_name(config.algo) << ',' << config.env_id << ',' << b << ','
          << rec.trajectories << ',' << format_double(mean) << ','
          << format_double(count > 1 ? std::sqrt(var) : 0.0) << ',' << count
          << '\n';
    }
  }
  return out.str();
}

}  // namespace

CsvReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto env = make_environment(config.env_id);
  const PolicySpec spec = make_policy_spec(config, *env);

  // One shared initialization across seeds; only rollout noise differs.
  Rng init_rng(split_seed(config.master_seed, 0));
  const Vector init = init_params(spec, init_rng);

  CsvReport report;
  for (int i = 0; i < config.n_seeds; ++i) {
    Rng rng(split_seed(config.master_seed, 1 + static_cast<std::uint64_t>(i)));
    RunCurve curve;
    curve.seed_index = static_cast<std::uint64_t>(i);
    curve.B = config.inner_batch;
    curve.history = run_one(config, *env, spec, init, rng);
    report.curves.push_back(std::move(curve));
  }
  report.raw_csv = render_raw_csv(config, report.curves);
  report.aggregate_csv = render_aggregate_csv(config, report.curves);
  return report;
}

CsvReport sweep_batch_size(const ExperimentConfig& config,
                           const std::vector<int>& b_values) {
  if (b_values.empty()) throw std::invalid_argument("sweep: no B values");
  CsvReport merged;
  for (int b : b_values) {
    if (b < 1) throw std::invalid_argument("sweep: B values must be >= 1");
    ExperimentConfig sub = config;
    sub.inner_batch = b;
    CsvReport report = run_experiment(sub);
    for (RunCurve& curve : report.curves) merged.curves.push_back(std::move(curve));
  }
  ExperimentConfig label = config;
  merged.raw_csv = render_raw_csv(label, merged.curves);
  merged.aggregate_csv = render_aggregate_csv(label, merged.curves);
  return merged;
}

void write_report(const CsvReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream raw(fs::path(out_dir) / "raw.csv", std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write raw.csv under " + out_dir);
    raw << report.raw_csv;
  }
  std::ofstream agg(fs::path(out_dir) / "aggregate.csv", std::ios::binary);
  if (!agg) throw std::runtime_error("cannot write aggregate.csv under " + out_dir);
  agg << report.aggregate_csv;
}

std::vector<std::string> preset_names(const std::string& presets_dir) {
  std::vector<std::string> names;
  if (!fs::is_directory(presets_dir)) return names;
  for (const auto& entry : fs::directory_iterator(presets_dir)) {
    if (entry.path().extension() == ".cfg") {
      names.push_back(entry.path().stem().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace pglab
