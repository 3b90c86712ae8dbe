#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "obliv/moments.hpp"
#include "obliv/noise.hpp"
#include "obliv/solver.hpp"
#include "obliv/tensor.hpp"

namespace obliv {

enum class ProblemKind { TensorPcaOdd, TensorPcaEven, TensorPcaSymmetric, SparsePca, SparsePcaUpperTriangle };

std::string to_string(ProblemKind k);
ProblemKind problem_kind_from_string(const std::string& s);

/// Odd-order tensor kinds round with the first moment; everything else is
/// sign-ambiguous and rounds with the second-moment matrix.
bool is_sign_ambiguous(ProblemKind kind, int p);

struct PipelineParams {
  ProblemKind kind = ProblemKind::TensorPcaOdd;
  int n = 8;
  int p = 3;
  int k = 0;            // sparsity, sparse kinds only
  double lambda = 0.0;  // 0 picks k for sparse kinds
  double alpha = 1.0;   // recorded alongside the noise, not used by the estimator
  double zeta = 1.0;
  std::optional<CorruptionSpec> corruption;
  SolverParams solver;

  void validate() const;
  double effective_lambda() const;
  int order() const;  // 2 for sparse kinds
};

/// Ex / |Ex|. Throws RuntimeFailure when the first moment vanishes.
Eigen::VectorXd round_odd(const PseudoMoments& m);

/// Top eigenvector of Exx^T with its largest-magnitude coordinate made
/// positive. Exact ties follow Eigen's ascending eigenvalue order.
Eigen::VectorXd round_even(const PseudoMoments& m);

/// <v, v_hat>; both must be unit vectors within 1e-8.
double correlation(const Eigen::VectorXd& v, const Eigen::VectorXd& v_hat);

struct ExperimentResult {
  std::uint64_t seed = 0;
  std::string kind;
  int n = 0;
  int p = 0;
  int k = 0;
  double lambda = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  double correlation = 0.0;  // |<v, v_hat>| for sign-ambiguous kinds
  double l2_error = 0.0;     // distance to the nearer of +-v for sign-ambiguous kinds
  double objective = 0.0;
  bool converged = false;
  double wall_ms = 0.0;
  std::string status = "ok";  // "ok" or the failure message
};

inline const std::vector<std::string>& experiment_csv_columns() {
  static const std::vector<std::string> cols{"seed",        "kind",     "n",         "p",         "k",
                                             "lambda",      "alpha",    "epsilon",   "correlation", "l2_error",
                                             "objective",   "converged", "wall_ms",  "status"};
  return cols;
}

nlohmann::json to_json(const ExperimentResult& r);
ExperimentResult experiment_result_from_json(const nlohmann::json& j);
std::string csv_row(const ExperimentResult& r);

struct PipelineOutput {
  Eigen::VectorXd v_hat;  // empty on failure
  PseudoMoments moments;
  ExperimentResult result;
};

/// Full tensor input for tensor-pca-odd, tensor-pca-even and sparse-pca;
/// the non-strict upper simplex for tensor-pca-symmetric; the strict upper
/// triangle for sparse-pca-upper-triangle. `truth`, when given, fills the
/// correlation and error fields. Failures are reported in result.status.
PipelineOutput run_pipeline(const Eigen::VectorXd& observation, const PipelineParams& params, std::uint64_t seed,
                            const Eigen::VectorXd* truth = nullptr);
PipelineOutput run_pipeline(const Tensor& observation, const PipelineParams& params, std::uint64_t seed,
                            const Eigen::VectorXd* truth = nullptr);

struct Instance {
  Eigen::VectorXd v;
  Eigen::VectorXd observation;  // in the layout run_pipeline expects for the kind
  std::vector<std::int64_t> corrupted;
};

/// Planted flat signal (random signs over all n coordinates, or over a
/// random k-subset for sparse kinds) plus oblivious noise and optional
/// corruption, all derived from `seed`.
Instance generate_instance(const PipelineParams& params, const NoiseSpec& noise, std::uint64_t seed);

class Graph {
 public:
  explicit Graph(int n = 0);

  int size() const { return n_; }
  bool has_edge(int i, int j) const { return adj_(i, j) != 0; }
  void add_edge(int i, int j);
  std::int64_t edge_count() const;
  int degree(int i) const;
  double density() const;
  const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& adjacency() const { return adj_; }

 private:
  int n_;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> adj_;
};

/// Strict upper triangle of 2A - J, row-major over i < j.
Eigen::VectorXd clique_reduce(const Graph& g);

struct PlantedClique {
  Graph graph;
  std::vector<int> clique;  // ascending
};

/// G(n, q) with every pair inside a uniform random k-subset forced to an edge.
PlantedClique planted_clique_gen(int n, double q, int k, std::uint64_t seed);

struct CliqueExtraction {
  std::vector<int> vertices;  // ascending
  bool ok = false;
};

/// Candidate set from the top ceil(4k / rho^2) entries of |v_hat|, a
/// spectral seed inside it, then expansion by common neighbours.
CliqueExtraction clique_extract(const Eigen::VectorXd& v_hat, const Graph& g, int k, double rho);

}  // namespace obliv
