#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "obliv/complexity.hpp"
#include "obliv/noise.hpp"
#include "obliv/recovery.hpp"
#include "obliv/solver.hpp"

namespace obliv {

inline constexpr std::int64_t kDefaultMaxRuns = 10000;

struct SweepAxes {
  std::vector<double> lambda;
  std::vector<double> alpha;
  std::vector<double> epsilon;
};

struct ExperimentConfig {
  PipelineParams pipeline;
  NoiseSpec noise = BoundedUniform{1.0};
  std::optional<CorruptionSpec> corruption;
  int trials = 1;
  std::uint64_t base_seed = 0;
  SweepAxes sweep;
  double success_threshold = 0.9;
  std::int64_t max_runs = kDefaultMaxRuns;
  std::string jsonl_path = "results.jsonl";
  std::string csv_path = "aggregate.csv";

  void validate() const;
};

nlohmann::json to_json(const NoiseSpec& spec);
NoiseSpec noise_from_json(const nlohmann::json& j, const std::string& path = "noise");
nlohmann::json to_json(const SolverParams& p);
SolverParams solver_params_from_json(const nlohmann::json& j, const std::string& path = "solver");
nlohmann::json to_json(const CorruptionSpec& c);
CorruptionSpec corruption_from_json(const nlohmann::json& j, const std::string& path = "corruption");
nlohmann::json to_json(const PipelineParams& p);
PipelineParams pipeline_params_from_json(const nlohmann::json& j, const std::string& path = "pipeline");

nlohmann::json to_json(const ExperimentConfig& c);
/// Field errors name the offending key path.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
/// Parse errors carry the line and column.
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json parse_json_file(const std::string& path);

/// One (lambda, alpha, epsilon) combination of the sweep.
struct SweepPoint {
  double lambda = 0.0;
  double alpha = 1.0;
  double epsilon = 0.0;
};

/// Cross product in lambda-major order; empty axes fall back to the base
/// values of the config.
std::vector<SweepPoint> sweep_points(const ExperimentConfig& c);

/// Seed of trial `trial` at sweep point `point`.
std::uint64_t trial_seed(std::uint64_t base_seed, int trial, std::size_t point);

/// Worker count from OBLIV_THREADS, else the hardware concurrency.
int worker_count();

struct AggregateRow {
  double lambda = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  int trials = 0;
  int completed = 0;
  double success_rate = 0.0;
  double median_correlation = 0.0;
  double median_l2_error = 0.0;
  double mean_wall_ms = 0.0;
};

/// Groups by (lambda, alpha, epsilon) in order of first appearance.
std::vector<AggregateRow> aggregate(const std::vector<ExperimentResult>& results, double success_threshold);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

struct ExperimentOutputs {
  std::string jsonl_path;
  std::string csv_path;
  std::vector<ExperimentResult> results;  // sweep point major, trial minor
  std::vector<AggregateRow> aggregates;
};

/// Runs every trial of every sweep point on OBLIV_THREADS workers. Trial
/// failures are recorded in their rows; lines are written in task order.
ExperimentOutputs run_experiment(const ExperimentConfig& config);

/// Reads a JSON-lines result file back.
std::vector<ExperimentResult> read_results(const std::string& jsonl_path);

/// Config for the complexity subcommand.
struct ComplexityConfig {
  std::string estimator = "gaussian";  // gaussian | rademacher | sparse-bound
  std::string system = "unit-ball";    // unit-ball | tensor-pca | sparse-pca
  int n = 10;
  int p = 1;
  int k = 1;
  int t = 2;
  double lambda = 1.0;
  double b = 100.0;
  int trials = 10;
  std::uint64_t seed = 0;
  SolverParams solver;
};

ComplexityConfig complexity_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ComplexityConfig& c);
ComplexityReport run_complexity(const ComplexityConfig& c);

}  // namespace obliv
