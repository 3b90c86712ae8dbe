#include "obliv/recovery.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "obliv/error.hpp"
#include "obliv/rng.hpp"

namespace obliv {

namespace {

constexpr std::array<std::pair<ProblemKind, const char*>, 5> kKindNames{{
    {ProblemKind::TensorPcaOdd, "tensor-pca-odd"},
    {ProblemKind::TensorPcaEven, "tensor-pca-even"},
    {ProblemKind::TensorPcaSymmetric, "tensor-pca-symmetric"},
    {ProblemKind::SparsePca, "sparse-pca"},
    {ProblemKind::SparsePcaUpperTriangle, "sparse-pca-upper-triangle"},
}};

bool is_sparse(ProblemKind k) { return k == ProblemKind::SparsePca || k == ProblemKind::SparsePcaUpperTriangle; }

Eigen::VectorXd first_moment(const PseudoMoments& m) {
  const auto& b = *m.basis;
  Eigen::VectorXd out(b.num_vars());
  for (int i = 0; i < b.num_vars(); ++i) {
    const int idx[1] = {i};
    out[i] = m.values[b.index_of(idx)];
  }
  return out;
}

Eigen::MatrixXd second_moment(const PseudoMoments& m) {
  const auto& b = *m.basis;
  const int n = b.num_vars();
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int idx[2] = {i, j};
      out(i, j) = out(j, i) = m.values[b.index_of(idx)];
    }
  return out;
}

std::int64_t simplex_size(int n, int p, bool strict) {
  std::int64_t count = 0;
  for_each_sorted_tuple(n, p, strict, [&](std::span<const int>) { ++count; });
  return count;
}

// Vertices sorted by descending score, ties by index.
std::vector<int> order_by_score(const Eigen::VectorXd& score, const std::vector<int>& among) {
  std::vector<int> out = among;
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) { return score[a] > score[b]; });
  return out;
}

}  // namespace

std::string to_string(ProblemKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  throw ValidationError("unknown problem kind '" + s + "'");
}

bool is_sign_ambiguous(ProblemKind kind, int p) { return is_sparse(kind) || p % 2 == 0; }

void PipelineParams::validate() const {
  require(n >= 1, "n must be positive");
  require(alpha > 0 && alpha <= 1, "alpha must lie in (0, 1]");
  require(zeta > 0, "zeta must be positive");
  require(lambda >= 0, "lambda must be nonnegative");
  if (is_sparse(kind)) {
    require(k >= 1 && k <= n, "sparse kinds need 1 <= k <= n");
  } else {
    require(p >= 2, "tensor kinds need p >= 2");
    require(lambda > 0, "tensor kinds need lambda > 0");
    if (kind == ProblemKind::TensorPcaOdd) require(p % 2 == 1, "tensor-pca-odd needs odd p");
    if (kind == ProblemKind::TensorPcaEven) require(p % 2 == 0, "tensor-pca-even needs even p");
  }
  if (corruption) obliv::validate(*corruption);
  solver.validate();
}

double PipelineParams::effective_lambda() const {
  if (is_sparse(kind) && lambda == 0.0) return static_cast<double>(k);
  return lambda;
}

int PipelineParams::order() const { return is_sparse(kind) ? 2 : p; }

Eigen::VectorXd round_odd(const PseudoMoments& m) {
  const Eigen::VectorXd x = first_moment(m);
  const double norm = x.norm();
  if (!(norm >= 1e-10)) throw RuntimeFailure("unroundable: first moments vanish (symmetric or uninformative solution)");
  return x / norm;
}

Eigen::VectorXd round_even(const PseudoMoments& m) {
  const Eigen::MatrixXd s = second_moment(m);
  if (!(s.trace() >= 1e-10)) throw RuntimeFailure("unroundable: second-moment matrix has vanishing trace");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw RuntimeFailure("eigensolver failed on the second-moment matrix");
  Eigen::VectorXd v = es.eigenvectors().col(s.rows() - 1);
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0) v = -v;
  return v;
}

double correlation(const Eigen::VectorXd& v, const Eigen::VectorXd& v_hat) {
  require(v.size() == v_hat.size(), "correlation needs vectors of equal length");
  require(std::abs(v.norm() - 1) <= 1e-8 && std::abs(v_hat.norm() - 1) <= 1e-8, "correlation needs unit vectors");
  return std::clamp(v.dot(v_hat), -1.0, 1.0);
}

nlohmann::json to_json(const ExperimentResult& r) {
  return {{"seed", r.seed},
          {"kind", r.kind},
          {"n", r.n},
          {"p", r.p},
          {"k", r.k},
          {"lambda", r.lambda},
          {"alpha", r.alpha},
          {"epsilon", r.epsilon},
          {"correlation", r.correlation},
          {"l2_error", r.l2_error},
          {"objective", r.objective},
          {"converged", r.converged},
          {"wall_ms", r.wall_ms},
          {"status", r.status}};
}

ExperimentResult experiment_result_from_json(const nlohmann::json& j) {
  ExperimentResult r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.kind = j.at("kind").get<std::string>();
  r.n = j.at("n").get<int>();
  r.p = j.at("p").get<int>();
  r.k = j.at("k").get<int>();
  r.lambda = j.at("lambda").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.epsilon = j.at("epsilon").get<double>();
  r.correlation = j.at("correlation").get<double>();
  r.l2_error = j.at("l2_error").get<double>();
  r.objective = j.at("objective").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.status = j.at("status").get<std::string>();
  return r;
}

std::string csv_row(const ExperimentResult& r) {
  std::ostringstream os;
  os.precision(17);
  std::string status = r.status;
  std::replace(status.begin(), status.end(), ',', ';');
  std::replace(status.begin(), status.end(), '\n', ' ');
  os << r.seed << ',' << r.kind << ',' << r.n << ',' << r.p << ',' << r.k << ',' << r.lambda << ',' << r.alpha << ','
     << r.epsilon << ',' << r.correlation << ',' << r.l2_error << ',' << r.objective << ',' << (r.converged ? 1 : 0)
     << ',' << r.wall_ms << ',' << status;
  return os.str();
}

PipelineOutput run_pipeline(const Eigen::VectorXd& observation, const PipelineParams& params, std::uint64_t seed,
                            const Eigen::VectorXd* truth) {
  params.validate();
  const auto start = std::chrono::steady_clock::now();
  const int n = params.n;
  const int p = params.order();
  const double lambda = params.effective_lambda();

  PipelineOutput out;
  ExperimentResult& r = out.result;
  r.seed = seed;
  r.kind = to_string(params.kind);
  r.n = n;
  r.p = p;
  r.k = params.k;
  r.lambda = lambda;
  r.alpha = params.alpha;
  r.epsilon = params.corruption ? params.corruption->epsilon : 0.0;
  if (truth) require(truth->size() == n, "truth vector has the wrong length");

  try {
    const auto sys = is_sparse(params.kind) ? compile_sparse_pca(n, params.k, 100.0) : compile_tensor_pca(n, p, lambda);
    const double h = is_sparse(params.kind) ? 201.0 / params.k : 3.0 / lambda;
    const Eigen::VectorXd y = observation / lambda;

    Observation obs;
    switch (params.kind) {
      case ProblemKind::TensorPcaSymmetric:
        require(observation.size() == simplex_size(n, p, false), "expected the non-strict upper simplex");
        obs = simplex_observation(y, n, p, false, sys.basis());
        break;
      case ProblemKind::SparsePcaUpperTriangle:
        // Mirrored entries would only double each off-diagonal residual and
        // the diagonal is masked, so the strict triangle carries the same
        // objective up to a factor.
        require(observation.size() == simplex_size(n, 2, true), "expected the strict upper triangle");
        obs = simplex_observation(y, n, 2, true, sys.basis());
        break;
      default:
        require(observation.size() == static_cast<Eigen::Index>(checked_power(n, p)), "expected a full tensor");
        obs = full_observation(Tensor(p, n, y), sys.basis());
        break;
    }

    SolverParams sp = params.solver;
    sp.seed = seed;
    auto solved = minimize_huber(obs, sys, h, sp);
    r.objective = solved.report.objective;
    r.converged = solved.report.converged;
    out.v_hat = is_sign_ambiguous(params.kind, p) ? round_even(solved.moments) : round_odd(solved.moments);
    out.moments = std::move(solved.moments);
    if (truth) {
      const double c = correlation(*truth, out.v_hat);
      if (is_sign_ambiguous(params.kind, p)) {
        r.correlation = std::abs(c);
        r.l2_error = std::min((*truth - out.v_hat).norm(), (*truth + out.v_hat).norm());
      } else {
        r.correlation = c;
        r.l2_error = (*truth - out.v_hat).norm();
      }
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    r.status = e.what();
    r.correlation = 0.0;
    r.l2_error = truth ? std::sqrt(2.0) : 0.0;
    out.v_hat.resize(0);
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PipelineOutput run_pipeline(const Tensor& observation, const PipelineParams& params, std::uint64_t seed,
                            const Eigen::VectorXd* truth) {
  require(observation.dim() == params.n && observation.order() == params.order(),
          "observation shape does not match the parameters");
  switch (params.kind) {
    case ProblemKind::TensorPcaSymmetric:
      return run_pipeline(upper_simplex(observation, false), params, seed, truth);
    case ProblemKind::SparsePcaUpperTriangle:
      return run_pipeline(upper_simplex(observation, true), params, seed, truth);
    default:
      return run_pipeline(observation.values(), params, seed, truth);
  }
}

Instance generate_instance(const PipelineParams& params, const NoiseSpec& noise, std::uint64_t seed) {
  params.validate();
  const int n = params.n;
  const int p = params.order();
  const double lambda = params.effective_lambda();
  CounterRng rng(derive_seed(seed, 1));

  Instance inst;
  inst.v = Eigen::VectorXd::Zero(n);
  if (is_sparse(params.kind)) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < params.k; ++i) {
      const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      inst.v[idx[static_cast<std::size_t>(i)]] = rng.sign() / std::sqrt(static_cast<double>(params.k));
    }
  } else {
    for (int i = 0; i < n; ++i) inst.v[i] = rng.sign() / std::sqrt(static_cast<double>(n));
  }

  const Tensor signal = lambda * rank_one(inst.v, p);
  const Tensor full = signal + Tensor(p, n, sample_noise(noise, static_cast<std::int64_t>(signal.size()),
                                                          derive_seed(seed, 2)));
  // Symmetric kinds see a symmetric noise tensor: the sampled entry at the
  // sorted index is shared by all its permutations.
  Eigen::VectorXd observed, clean;
  switch (params.kind) {
    case ProblemKind::TensorPcaSymmetric:
      observed = upper_simplex(full, false);
      clean = upper_simplex(signal, false);
      break;
    case ProblemKind::SparsePcaUpperTriangle:
      observed = upper_simplex(full, true);
      clean = upper_simplex(signal, true);
      break;
    default:
      observed = full.values();
      clean = signal.values();
      break;
  }
  if (params.corruption && params.corruption->epsilon > 0) {
    auto c = corrupt(observed, *params.corruption, clean, derive_seed(seed, 3));
    observed = std::move(c.values);
    inst.corrupted = std::move(c.mask);
  }
  inst.observation = std::move(observed);
  return inst;
}

Graph::Graph(int n) : n_(n), adj_(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n)) {
  require(n >= 0, "graph size must be nonnegative");
}

void Graph::add_edge(int i, int j) {
  require(i >= 0 && j >= 0 && i < n_ && j < n_ && i != j, "edge endpoints must be distinct vertices");
  adj_(i, j) = adj_(j, i) = 1;
}

std::int64_t Graph::edge_count() const { return adj_.cast<std::int64_t>().sum() / 2; }

int Graph::degree(int i) const { return adj_.col(i).cast<int>().sum(); }

double Graph::density() const {
  if (n_ < 2) return 0.0;
  return static_cast<double>(edge_count()) / (0.5 * n_ * (n_ - 1.0));
}

Eigen::VectorXd clique_reduce(const Graph& g) {
  const int n = g.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n) * (n - 1) / 2);
  Eigen::Index at = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out[at++] = g.has_edge(i, j) ? 1.0 : -1.0;
  return out;
}

PlantedClique planted_clique_gen(int n, double q, int k, std::uint64_t seed) {
  require(k >= 1 && k <= n, "planted clique needs 1 <= k <= n");
  require(q >= 0 && q <= 1, "edge probability must lie in [0, 1]");
  PlantedClique out{Graph(n), {}};
  CounterRng edges(derive_seed(seed, 1));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edges.uniform() < q) out.graph.add_edge(i, j);

  CounterRng pick(derive_seed(seed, 2));
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(pick.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  out.clique.assign(idx.begin(), idx.begin() + k);
  std::sort(out.clique.begin(), out.clique.end());
  for (std::size_t a = 0; a < out.clique.size(); ++a)
    for (std::size_t b = a + 1; b < out.clique.size(); ++b) out.graph.add_edge(out.clique[a], out.clique[b]);
  return out;
}

CliqueExtraction clique_extract(const Eigen::VectorXd& v_hat, const Graph& g, int k, double rho) {
  const int n = g.size();
  require(v_hat.size() == n, "v_hat length must match the graph");
  require(rho > 0 && rho <= 1, "rho must lie in (0, 1]");
  require(k >= 1, "k must be positive");
  const double s_real = 4.0 * k / (rho * rho);
  require(s_real <= n, "4k / rho^2 exceeds the number of vertices");
  const int s = static_cast<int>(std::ceil(s_real - 1e-9));

  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  const Eigen::VectorXd mag = v_hat.cwiseAbs();
  std::vector<int> cand = order_by_score(mag, all);
  cand.resize(static_cast<std::size_t>(s));
  std::sort(cand.begin(), cand.end());

  const double q = g.density();
  Eigen::MatrixXd centered(s, s);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b)
      centered(a, b) = a == b ? 0.0 : g.has_edge(cand[static_cast<std::size_t>(a)], cand[static_cast<std::size_t>(b)]) - q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(centered);
  if (es.info() != Eigen::Success) throw RuntimeFailure("eigensolver failed on the candidate subgraph");
  Eigen::VectorXd u = es.eigenvectors().col(s - 1);
  if (u.sum() < 0) u = -u;  // a dense block puts the mass on one sign

  Eigen::VectorXd score = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  for (int a = 0; a < s; ++a) score[cand[static_cast<std::size_t>(a)]] = u[a];
  std::vector<int> top = order_by_score(score, cand);
  top.resize(static_cast<std::size_t>(std::min(k, s)));

  std::vector<int> seed;
  for (int v : top)
    if (std::all_of(seed.begin(), seed.end(), [&](int w) { return g.has_edge(v, w); })) seed.push_back(v);
  CliqueExtraction out;
  if (seed.size() < 3) return out;

  std::vector<int> expanded = seed;
  for (int v = 0; v < n; ++v) {
    if (std::find(seed.begin(), seed.end(), v) != seed.end()) continue;
    if (std::all_of(seed.begin(), seed.end(), [&](int w) { return g.has_edge(v, w); })) expanded.push_back(v);
  }
  std::sort(expanded.begin(), expanded.end());
  out.vertices = std::move(expanded);
  out.ok = true;
  return out;
}

}  // namespace obliv
