#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "obliv/error.hpp"
#include "obliv/harness.hpp"
#include "obliv/rng.hpp"
#include "obliv/selftest.hpp"

namespace obliv {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "obliv_harness_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Noise that is exactly zero on all n^p entries.
NoiseSpec zero_noise(int n, int p) {
  ZeroOnSet z;
  z.indices.resize(static_cast<std::size_t>(std::pow(n, p)));
  std::iota(z.indices.begin(), z.indices.end(), 0);
  z.inner = std::make_shared<const NoiseSpec>(BoundedUniform{1.0});
  return z;
}

ExperimentConfig small_config(const fs::path& dir) {
  ExperimentConfig c;
  c.pipeline.n = 4;
  c.pipeline.p = 3;
  c.pipeline.lambda = 20.0;
  c.pipeline.solver.max_outer_iters = 100;
  c.noise = BoundedUniform{1.0};
  c.trials = 2;
  c.base_seed = 5;
  c.jsonl_path = (dir / "r.jsonl").string();
  c.csv_path = (dir / "a.csv").string();
  return c;
}

class EnvGuard {
 public:
  explicit EnvGuard(const char* value) {
    if (const char* old = std::getenv("OBLIV_THREADS")) old_ = old;
    if (value) setenv("OBLIV_THREADS", value, 1);
    else unsetenv("OBLIV_THREADS");
  }
  ~EnvGuard() {
    if (old_) setenv("OBLIV_THREADS", old_->c_str(), 1);
    else unsetenv("OBLIV_THREADS");
  }

 private:
  std::optional<std::string> old_;
};

TEST(ConfigRoundTrip, Populated) {
  ExperimentConfig c;
  c.pipeline.kind = ProblemKind::SparsePca;
  c.pipeline.n = 10;
  c.pipeline.k = 3;
  c.pipeline.solver.projection.tol = 1e-9;
  c.pipeline.solver.adaptive_penalty = true;
  ZeroOnSet z{{1, 5, 9}, std::make_shared<const NoiseSpec>(Cauchy{0.3})};
  c.noise = z;
  c.corruption = CorruptionSpec{0.05, CorruptionStrategy::RandomExtreme, 1e6};
  c.trials = 7;
  c.base_seed = 18446744073709551615ull;
  c.sweep = {{1.5, 3.0}, {0.25, 0.5}, {0.0, 0.01}};
  c.success_threshold = 0.99;
  c.max_runs = 100;
  const json j = to_json(c);
  const json again = to_json(experiment_config_from_json(j));
  EXPECT_EQ(j, again);
  EXPECT_EQ(j.dump(), again.dump());
}

TEST(ConfigRoundTrip, RandomConfigs) {
  CounterRng rng(3);
  for (int t = 0; t < 200; ++t) {
    ExperimentConfig c;
    c.pipeline.lambda = 0.1 + 100 * rng.uniform();
    c.pipeline.alpha = 0.01 + 0.99 * rng.uniform();
    c.pipeline.zeta = 0.1 + rng.uniform();
    c.pipeline.solver.grad_tol = rng.uniform() * 1e-3 + 1e-12;
    c.pipeline.solver.seed = rng();
    switch (rng.below(4)) {
      case 0: c.noise = BoundedUniform{0.1 + rng.uniform()}; break;
      case 1: c.noise = Cauchy{0.1 + rng.uniform()}; break;
      case 2: c.noise = HeavyMixture{0.01 + 0.99 * rng.uniform(), 0.1 + rng.uniform(), 1 + 50 * rng.uniform()}; break;
      default: c.noise = RademacherScaled{0.1 + rng.uniform()}; break;
    }
    if (rng.below(2)) c.corruption = CorruptionSpec{0.3 * rng.uniform(), CorruptionStrategy::TargetedSignFlip, rng.uniform()};
    c.trials = 1 + static_cast<int>(rng.below(5));
    c.base_seed = rng();
    for (int i = 0, m = static_cast<int>(rng.below(3)); i < m; ++i) c.sweep.lambda.push_back(1 + rng.uniform());
    c.success_threshold = rng.uniform();
    const json j = to_json(c);
    const ExperimentConfig parsed = experiment_config_from_json(json::parse(j.dump()));
    EXPECT_EQ(to_json(parsed), j) << j.dump();
  }
}

TEST(ConfigValidation, NamesTheField) {
  ExperimentConfig valid;
  valid.pipeline.lambda = 10.0;
  const json base = to_json(valid);
  auto expect_field = [](json j, const std::string& field) {
    try {
      experiment_config_from_json(j);
      ADD_FAILURE() << "accepted " << j.dump();
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find("'" + field + "'"), std::string::npos) << e.what();
    }
  };
  json j = base;
  j["pipeline"]["bogus"] = 1;
  expect_field(j, "pipeline.bogus");
  j = base;
  j["trials"] = "three";
  expect_field(j, "trials");
  j = base;
  j["pipeline"]["n"] = 0;
  expect_field(j, "pipeline");
  j = base;
  j["noise"] = {{"type", "laplace"}};
  expect_field(j, "noise.type");
  j = base;
  j["pipeline"]["solver"]["max_outer_iters"] = 2.5;
  expect_field(j, "pipeline.solver.max_outer_iters");
  j = base;
  j["sweep"]["lambda"] = {1.0, -2.0};
  expect_field(j, "sweep.lambda[1]");
  j = base;
  j["sweep"]["epsilon"] = {0.1};
  expect_field(j, "sweep.epsilon");
}

TEST(ConfigValidation, RunCap) {
  ExperimentConfig c;
  c.pipeline.lambda = 10.0;
  c.sweep.lambda = {1, 2, 3};
  c.trials = 4;
  c.max_runs = 12;
  EXPECT_NO_THROW(c.validate());
  c.max_runs = 11;
  EXPECT_THROW(c.validate(), ValidationError);
  c.sweep = {};
  c.max_runs = kDefaultMaxRuns;
  c.trials = 10001;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(ConfigValidation, MalformedJsonReportsLine) {
  const auto dir = scratch("malformed");
  const auto path = dir / "bad.json";
  std::ofstream(path) << "{\n  \"trials\": 3,\n  \"base_seed\": ,\n}\n";
  try {
    load_experiment_config(path.string());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_experiment_config((dir / "missing.json").string()), ValidationError);
}

TEST(Sweep, CrossProductOrder) {
  ExperimentConfig c;
  c.pipeline.lambda = 9.0;
  c.corruption = CorruptionSpec{};
  c.sweep.lambda = {1, 2};
  c.sweep.epsilon = {0.0, 0.1, 0.2};
  const auto pts = sweep_points(c);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0].lambda, 1.0);
  EXPECT_EQ(pts[2].epsilon, 0.2);
  EXPECT_EQ(pts[3].lambda, 2.0);
  EXPECT_EQ(pts[5].alpha, c.pipeline.alpha);
  c.sweep = {};
  ASSERT_EQ(sweep_points(c).size(), 1u);
  EXPECT_EQ(sweep_points(c)[0].lambda, 9.0);
}

TEST(Sweep, TrialSeedsDistinct) {
  std::set<std::uint64_t> seen;
  for (std::size_t pt = 0; pt < 10; ++pt)
    for (int t = 0; t < 100; ++t) seen.insert(trial_seed(42, t, pt));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(trial_seed(42, 3, 0), trial_seed(45, 0, 0));
}

TEST(WorkerCount, Env) {
  {
    EnvGuard g("3");
    EXPECT_EQ(worker_count(), 3);
  }
  {
    EnvGuard g("zero");
    EXPECT_THROW(worker_count(), ValidationError);
  }
  {
    EnvGuard g("0");
    EXPECT_THROW(worker_count(), ValidationError);
  }
  {
    EnvGuard g(nullptr);
    EXPECT_GE(worker_count(), 1);
  }
}

TEST(Aggregate, CountsFailuresAgainstSuccessRate) {
  std::vector<ExperimentResult> rs(5);
  const double corr[] = {0.95, 0.5, 0.99, 0.97, 0.0};
  for (int i = 0; i < 5; ++i) {
    rs[static_cast<std::size_t>(i)].lambda = 2.0;
    rs[static_cast<std::size_t>(i)].correlation = corr[i];
    rs[static_cast<std::size_t>(i)].l2_error = 1.0 - corr[i];
    rs[static_cast<std::size_t>(i)].wall_ms = 10.0 * i;
  }
  rs[4].status = "eigensolver failed";
  const auto rows = aggregate(rs, 0.9);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].trials, 5);
  EXPECT_EQ(rows[0].completed, 4);
  EXPECT_DOUBLE_EQ(rows[0].success_rate, 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(rows[0].median_correlation, 0.96);
  EXPECT_DOUBLE_EQ(rows[0].median_l2_error, 0.5 * ((1 - 0.97) + (1 - 0.95)));
  EXPECT_DOUBLE_EQ(rows[0].mean_wall_ms, 15.0);
  const std::string csv = aggregate_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "lambda,alpha,epsilon,trials,completed,success_rate,median_correlation,median_l2_error,mean_wall_ms");
}

TEST(RunExperiment, ZeroNoiseSingleTrial) {
  const auto dir = scratch("zero");
  ExperimentConfig c = small_config(dir);
  c.noise = zero_noise(4, 3);
  c.trials = 1;
  EnvGuard g("1");
  const auto out = run_experiment(c);
  const auto rs = read_results(out.jsonl_path);
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0].status, "ok");
  EXPECT_GE(rs[0].correlation, 0.999);
}

TEST(RunExperiment, SweepRowsAndRecomputedAggregates) {
  const auto dir = scratch("sweep");
  ExperimentConfig c = small_config(dir);
  c.sweep.lambda = {10.0, 20.0, 40.0};
  EnvGuard g("2");
  const auto out = run_experiment(c);
  const std::string csv = slurp(out.csv_path);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(aggregate_csv(aggregate(read_results(out.jsonl_path), c.success_threshold)), csv);
  ASSERT_EQ(out.results.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(out.results[i].lambda, c.sweep.lambda[i / 2]);
}

// Per-trial results with the timing field blanked.
std::vector<std::string> untimed_lines(const std::string& path) {
  std::vector<std::string> out;
  for (auto r : read_results(path)) {
    r.wall_ms = 0;
    out.push_back(to_json(r).dump());
  }
  return out;
}

TEST(RunExperiment, DeterministicAcrossWorkerCounts) {
  const auto dir = scratch("determinism");
  ExperimentConfig c = small_config(dir);
  c.noise = HeavyMixture{0.5, 1.0, 50.0};
  c.corruption = CorruptionSpec{0.02, CorruptionStrategy::TargetedSignFlip, 100.0};
  c.trials = 3;
  c.sweep.alpha = {0.5, 0.9};
  c.jsonl_path = (dir / "one.jsonl").string();
  {
    EnvGuard g("1");
    run_experiment(c);
  }
  c.jsonl_path = (dir / "three.jsonl").string();
  {
    EnvGuard g("3");
    run_experiment(c);
  }
  const auto a = untimed_lines((dir / "one.jsonl").string());
  const auto b = untimed_lines((dir / "three.jsonl").string());
  ASSERT_EQ(a.size(), 6u);
  EXPECT_EQ(a, b);
}

TEST(RunExperiment, TrialFailuresAreRecorded) {
  const auto dir = scratch("failures");
  ExperimentConfig c = small_config(dir);
  c.pipeline.n = 60;  // degree-6 basis in 60 variables exceeds the monomial cap
  c.trials = 2;
  EnvGuard g("2");
  ExperimentOutputs out;
  ASSERT_NO_THROW(out = run_experiment(c));
  const auto rs = read_results(out.jsonl_path);
  ASSERT_EQ(rs.size(), 2u);
  for (const auto& r : rs) EXPECT_NE(r.status, "ok");
  ASSERT_EQ(out.aggregates.size(), 1u);
  EXPECT_EQ(out.aggregates[0].completed, 0);
  EXPECT_EQ(out.aggregates[0].success_rate, 0.0);
  EXPECT_EQ(aggregate_csv(aggregate(rs, c.success_threshold)), slurp(out.csv_path));
}

TEST(Complexity, ConfigAndRun) {
  const json j = {{"estimator", "sparse-bound"}, {"n", 8}, {"k", 4}, {"t", 2}, {"trials", 3}, {"seed", 1}};
  const auto c = complexity_config_from_json(j);
  const auto r = run_complexity(c);
  EXPECT_EQ(r.trials, 3);
  EXPECT_EQ(r.interpretation, Interpretation::CertificateUpperBound);
  EXPECT_EQ(to_json(complexity_config_from_json(to_json(c))), to_json(c));
  EXPECT_THROW(complexity_config_from_json({{"estimator", "entropy"}}), ValidationError);
  EXPECT_THROW(complexity_config_from_json({{"trials", 0}}), ValidationError);
}

TEST(Selftest, AllChecksPass) {
  for (const auto& c : run_selftest()) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
}

}  // namespace
}  // namespace obliv
