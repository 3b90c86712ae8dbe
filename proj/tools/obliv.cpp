#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "obliv/error.hpp"
#include "obliv/harness.hpp"
#include "obliv/recovery.hpp"
#include "obliv/selftest.hpp"

using namespace obliv;

namespace {

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
};

struct EstimateArgs {
  std::string kind = "tensor-pca-odd";
  int n = 8, p = 3, k = 0;
  double lambda = 0.0;
  std::string noise = "bounded_uniform";
  double noise_scale = 1.0;
  double alpha = 0.5;
  double heavy_sigma = 10.0;
  double epsilon = 0.0;
  std::string strategy = "random_extreme";
  double magnitude = 100.0;
  int iters = 300;
  std::uint64_t seed = 0;
};

struct CliqueArgs {
  int n = 0;
  double q = 0.5;
  int k = 0;
  std::uint64_t seed = 0;
};

struct DumpArgs {
  std::string kind = "tensor-pca";
  int n = 2, p = 2, k = 1;
  double lambda = 1.0, b = 100.0;
};

NoiseSpec noise_from_flags(const EstimateArgs& a) {
  if (a.noise == "bounded_uniform") return BoundedUniform{a.noise_scale};
  if (a.noise == "cauchy") return Cauchy{a.noise_scale};
  if (a.noise == "heavy_mixture") return HeavyMixture{a.alpha, a.noise_scale, a.heavy_sigma};
  if (a.noise == "rademacher") return RademacherScaled{a.noise_scale};
  throw ValidationError("unknown noise '" + a.noise + "'");
}

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (a.seed) cfg.base_seed = *a.seed;
  const auto out = run_experiment(cfg);
  std::cout << aggregate_csv(out.aggregates);
  std::cerr << "results: " << out.jsonl_path << "\naggregate: " << out.csv_path << '\n';
  return 0;
}

int cmd_estimate(const EstimateArgs& a) {
  PipelineParams params;
  params.kind = problem_kind_from_string(a.kind);
  params.n = a.n;
  params.p = a.p;
  params.k = a.k;
  params.lambda = a.lambda;
  params.solver.max_outer_iters = a.iters;
  if (a.epsilon > 0) params.corruption = CorruptionSpec{a.epsilon, corruption_strategy_from_string(a.strategy), a.magnitude};
  const NoiseSpec noise = noise_from_flags(a);
  validate(noise);
  const Instance inst = generate_instance(params, noise, a.seed);
  const auto out = run_pipeline(inst.observation, params, a.seed, &inst.v);
  auto j = to_json(out.result);
  j["v"] = std::vector<double>(inst.v.data(), inst.v.data() + inst.v.size());
  if (out.v_hat.size()) j["v_hat"] = std::vector<double>(out.v_hat.data(), out.v_hat.data() + out.v_hat.size());
  std::cout << j.dump() << '\n';
  return out.result.status == "ok" ? 0 : 2;
}

int cmd_complexity(const std::string& path, std::optional<std::uint64_t> seed) {
  ComplexityConfig cfg;
  try {
    cfg = complexity_config_from_json(parse_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (seed) cfg.seed = *seed;
  const auto report = run_complexity(cfg);
  std::cout << "trial,value\n";
  std::cout.precision(17);
  for (std::size_t t = 0; t < report.values.size(); ++t) std::cout << t << ',' << report.values[t] << '\n';
  std::cerr << "mean " << report.mean << " std_error " << report.std_error << " (" << to_string(report.interpretation)
            << ", " << report.failed << " failed)\n";
  return 0;
}

int cmd_clique(const CliqueArgs& a) {
  const auto pc = planted_clique_gen(a.n, a.q, a.k, a.seed);
  std::cout << "# n " << a.n << " q " << a.q << " k " << a.k << " seed " << a.seed << '\n';
  std::cout << "# clique";
  for (int v : pc.clique) std::cout << ' ' << v;
  std::cout << "\n# edges " << pc.graph.edge_count() << '\n';
  for (int i = 0; i < a.n; ++i)
    for (int j = i + 1; j < a.n; ++j)
      if (pc.graph.has_edge(i, j)) std::cout << i << ' ' << j << '\n';
  return 0;
}

int cmd_dump(const DumpArgs& a) {
  const ConstraintSystem sys = a.kind == "tensor-pca"   ? compile_tensor_pca(a.n, a.p, a.lambda)
                               : a.kind == "sparse-pca" ? compile_sparse_pca(a.n, a.k, a.b)
                               : a.kind == "unit-ball"  ? compile_unit_ball(a.n)
                                                        : throw ValidationError("unknown system '" + a.kind + "'");
  std::cout << to_json(sys).dump(2) << '\n';
  return 0;
}

int cmd_selftest() {
  bool ok = true;
  for (const auto& c : run_selftest()) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ')';
    std::cout << '\n';
    ok = ok && c.pass;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Huber-loss moment relaxations for tensor PCA, sparse PCA and planted clique under oblivious noise"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment sweep from a JSON config");
  run_cmd->add_option("config", run.config, "Experiment config")->required();
  run_cmd->add_option("--seed", run.seed, "Override the base seed");

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Generate and solve a single instance");
  est_cmd->add_option("--kind", est.kind, "tensor-pca-odd | tensor-pca-even | tensor-pca-symmetric | sparse-pca | "
                                          "sparse-pca-upper-triangle");
  est_cmd->add_option("--n", est.n, "Dimension");
  est_cmd->add_option("--p", est.p, "Tensor order");
  est_cmd->add_option("--k", est.k, "Sparsity");
  est_cmd->add_option("--lambda", est.lambda, "Signal strength (0 picks k for sparse kinds)");
  est_cmd->add_option("--noise", est.noise, "bounded_uniform | cauchy | heavy_mixture | rademacher");
  est_cmd->add_option("--noise-scale", est.noise_scale, "zeta or scale of the noise");
  est_cmd->add_option("--alpha", est.alpha, "Inlier probability of heavy_mixture");
  est_cmd->add_option("--heavy-sigma", est.heavy_sigma, "Outlier deviation of heavy_mixture");
  est_cmd->add_option("--epsilon", est.epsilon, "Corrupted fraction");
  est_cmd->add_option("--strategy", est.strategy, "random_extreme | targeted_sign_flip");
  est_cmd->add_option("--magnitude", est.magnitude, "Corruption magnitude");
  est_cmd->add_option("--iters", est.iters, "Solver iterations");
  est_cmd->add_option("--seed", est.seed, "Instance seed");

  std::string complexity_config;
  std::optional<std::uint64_t> complexity_seed;
  auto* cx_cmd = app.add_subcommand("complexity", "Monte-Carlo complexity estimate, per-trial CSV on stdout");
  cx_cmd->add_option("config", complexity_config, "Complexity config")->required();
  cx_cmd->add_option("--seed", complexity_seed, "Override the seed");

  CliqueArgs cl;
  auto* cl_cmd = app.add_subcommand("clique", "Print a planted-clique graph as an edge list");
  cl_cmd->add_option("--n", cl.n, "Vertices")->required();
  cl_cmd->add_option("--q", cl.q, "Edge probability")->required();
  cl_cmd->add_option("--k", cl.k, "Clique size")->required();
  cl_cmd->add_option("--seed", cl.seed, "Seed");

  DumpArgs dump;
  auto* dump_cmd = app.add_subcommand("dump-system", "Print a compiled constraint system as JSON");
  dump_cmd->add_option("--kind", dump.kind, "tensor-pca | sparse-pca | unit-ball");
  dump_cmd->add_option("--n", dump.n, "Variables");
  dump_cmd->add_option("--p", dump.p, "Tensor order");
  dump_cmd->add_option("--lambda", dump.lambda, "Signal strength");
  dump_cmd->add_option("--k", dump.k, "Sparsity");
  dump_cmd->add_option("--b", dump.b, "Entry bound");

  auto* self_cmd = app.add_subcommand("selftest", "Run the built-in invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*est_cmd) return cmd_estimate(est);
    if (*cx_cmd) return cmd_complexity(complexity_config, complexity_seed);
    if (*cl_cmd) return cmd_clique(cl);
    if (*dump_cmd) return cmd_dump(dump);
    if (*self_cmd) return cmd_selftest();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 2;
  }
  std::cerr << app.help();
  return 1;
}
