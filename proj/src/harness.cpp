#include "obliv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "obliv/error.hpp"
#include "obliv/rng.hpp"

namespace obliv {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& msg) {
  throw ValidationError("config field '" + path + "': " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) field_error(path, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) field_error(join(path, k), "unknown key");
}

const json* find(const json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_double(const json& j, const std::string& key, const std::string& path, double def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number()) field_error(join(path, key), "expected a number");
  return v->get<double>();
}

std::int64_t get_int(const json& j, const std::string& key, const std::string& path, std::int64_t def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number_integer()) field_error(join(path, key), "expected an integer");
  return v->get<std::int64_t>();
}

int get_int32(const json& j, const std::string& key, const std::string& path, int def) {
  const auto v = get_int(j, key, path, def);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    field_error(join(path, key), "out of range");
  return static_cast<int>(v);
}

std::uint64_t get_u64(const json& j, const std::string& key, const std::string& path, std::uint64_t def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
    field_error(join(path, key), "expected a nonnegative integer");
  return v->get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& key, const std::string& path, bool def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_boolean()) field_error(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path, const std::string& def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_string()) field_error(join(path, key), "expected a string");
  return v->get<std::string>();
}

std::vector<double> get_doubles(const json& j, const std::string& key, const std::string& path) {
  const json* v = find(j, key);
  if (!v) return {};
  if (!v->is_array()) field_error(join(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number()) field_error(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back((*v)[i].get<double>());
  }
  return out;
}

// Rethrows a ValidationError from a validate() call with the field path attached.
template <class Fn>
void validate_at(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    field_error(path, e.what());
  }
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

PipelineParams params_at(const ExperimentConfig& c, const SweepPoint& pt) {
  PipelineParams p = c.pipeline;
  p.lambda = pt.lambda;
  p.alpha = pt.alpha;
  p.corruption = c.corruption;
  if (p.corruption) p.corruption->epsilon = pt.epsilon;
  return p;
}

NoiseSpec noise_at(const ExperimentConfig& c, const SweepPoint& pt) {
  NoiseSpec spec = c.noise;
  if (auto* mix = std::get_if<HeavyMixture>(&spec); mix && !c.sweep.alpha.empty()) mix->alpha = pt.alpha;
  return spec;
}

ExperimentResult run_trial(const ExperimentConfig& c, const SweepPoint& pt, std::uint64_t seed) {
  const PipelineParams params = params_at(c, pt);
  try {
    const Instance inst = generate_instance(params, noise_at(c, pt), seed);
    return run_pipeline(inst.observation, params, seed, &inst.v).result;
  } catch (const std::exception& e) {
    ExperimentResult r;
    r.seed = seed;
    r.kind = to_string(params.kind);
    r.n = params.n;
    r.p = params.order();
    r.k = params.k;
    r.lambda = params.effective_lambda();
    r.alpha = params.alpha;
    r.epsilon = pt.epsilon;
    r.status = e.what();
    return r;
  }
}

}  // namespace

json to_json(const NoiseSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoundedUniform>) {
          return {{"type", "bounded_uniform"}, {"zeta", s.zeta}};
        } else if constexpr (std::is_same_v<T, Cauchy>) {
          return {{"type", "cauchy"}, {"scale", s.scale}};
        } else if constexpr (std::is_same_v<T, HeavyMixture>) {
          return {{"type", "heavy_mixture"}, {"alpha", s.alpha}, {"zeta", s.zeta}, {"heavy_sigma", s.heavy_sigma}};
        } else if constexpr (std::is_same_v<T, RademacherScaled>) {
          return {{"type", "rademacher"}, {"scale", s.scale}};
        } else {
          return {{"type", "zero_on_set"}, {"indices", s.indices}, {"inner", s.inner ? to_json(*s.inner) : json()}};
        }
      },
      spec);
}

NoiseSpec noise_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object");
  const std::string type = get_string(j, "type", path, "");
  NoiseSpec spec;
  if (type == "bounded_uniform") {
    require_object(j, path, {"type", "zeta"});
    spec = BoundedUniform{get_double(j, "zeta", path, 1.0)};
  } else if (type == "cauchy") {
    require_object(j, path, {"type", "scale"});
    spec = Cauchy{get_double(j, "scale", path, 1.0)};
  } else if (type == "heavy_mixture") {
    require_object(j, path, {"type", "alpha", "zeta", "heavy_sigma"});
    spec = HeavyMixture{get_double(j, "alpha", path, 0.5), get_double(j, "zeta", path, 1.0),
                        get_double(j, "heavy_sigma", path, 1.0)};
  } else if (type == "rademacher") {
    require_object(j, path, {"type", "scale"});
    spec = RademacherScaled{get_double(j, "scale", path, 1.0)};
  } else if (type == "zero_on_set") {
    require_object(j, path, {"type", "indices", "inner"});
    ZeroOnSet z;
    const json* idx = find(j, "indices");
    if (!idx || !idx->is_array()) field_error(join(path, "indices"), "expected an array of integers");
    for (const auto& e : *idx) {
      if (!e.is_number_integer()) field_error(join(path, "indices"), "expected an array of integers");
      z.indices.push_back(e.get<std::int64_t>());
    }
    const json* inner = find(j, "inner");
    if (!inner) field_error(join(path, "inner"), "missing");
    z.inner = std::make_shared<const NoiseSpec>(noise_from_json(*inner, join(path, "inner")));
    spec = std::move(z);
  } else {
    field_error(join(path, "type"), "expected bounded_uniform, cauchy, heavy_mixture, rademacher or zero_on_set");
  }
  validate_at(path, [&] { validate(spec); });
  return spec;
}

json to_json(const SolverParams& p) {
  return {{"max_outer_iters", p.max_outer_iters},
          {"step_init", p.step_init},
          {"backtrack_factor", p.backtrack_factor},
          {"adaptive_penalty", p.adaptive_penalty},
          {"grad_tol", p.grad_tol},
          {"check_every", p.check_every},
          {"projection", {{"max_iters", p.projection.max_iters}, {"tol", p.projection.tol}}},
          {"seed", p.seed}};
}

SolverParams solver_params_from_json(const json& j, const std::string& path) {
  require_object(j, path,
                 {"max_outer_iters", "step_init", "backtrack_factor", "adaptive_penalty", "grad_tol", "check_every",
                  "projection", "seed"});
  SolverParams p;
  p.max_outer_iters = get_int32(j, "max_outer_iters", path, p.max_outer_iters);
  p.step_init = get_double(j, "step_init", path, p.step_init);
  p.backtrack_factor = get_double(j, "backtrack_factor", path, p.backtrack_factor);
  p.adaptive_penalty = get_bool(j, "adaptive_penalty", path, p.adaptive_penalty);
  p.grad_tol = get_double(j, "grad_tol", path, p.grad_tol);
  p.check_every = get_int32(j, "check_every", path, p.check_every);
  if (const json* proj = find(j, "projection")) {
    const std::string pp = join(path, "projection");
    require_object(*proj, pp, {"max_iters", "tol"});
    p.projection.max_iters = get_int32(*proj, "max_iters", pp, p.projection.max_iters);
    p.projection.tol = get_double(*proj, "tol", pp, p.projection.tol);
  }
  p.seed = get_u64(j, "seed", path, p.seed);
  validate_at(path, [&] { p.validate(); });
  return p;
}

json to_json(const CorruptionSpec& c) {
  return {{"epsilon", c.epsilon}, {"strategy", to_string(c.strategy)}, {"magnitude", c.magnitude}};
}

CorruptionSpec corruption_from_json(const json& j, const std::string& path) {
  require_object(j, path, {"epsilon", "strategy", "magnitude"});
  CorruptionSpec c;
  c.epsilon = get_double(j, "epsilon", path, c.epsilon);
  validate_at(join(path, "strategy"),
              [&] { c.strategy = corruption_strategy_from_string(get_string(j, "strategy", path, to_string(c.strategy))); });
  c.magnitude = get_double(j, "magnitude", path, c.magnitude);
  validate_at(path, [&] { validate(c); });
  return c;
}

json to_json(const PipelineParams& p) {
  return {{"kind", to_string(p.kind)}, {"n", p.n},         {"p", p.p},
          {"k", p.k},                  {"lambda", p.lambda}, {"alpha", p.alpha},
          {"zeta", p.zeta},            {"solver", to_json(p.solver)}};
}

PipelineParams pipeline_params_from_json(const json& j, const std::string& path) {
  require_object(j, path, {"kind", "n", "p", "k", "lambda", "alpha", "zeta", "solver"});
  PipelineParams p;
  validate_at(join(path, "kind"), [&] { p.kind = problem_kind_from_string(get_string(j, "kind", path, to_string(p.kind))); });
  p.n = get_int32(j, "n", path, p.n);
  p.p = get_int32(j, "p", path, p.p);
  p.k = get_int32(j, "k", path, p.k);
  p.lambda = get_double(j, "lambda", path, p.lambda);
  p.alpha = get_double(j, "alpha", path, p.alpha);
  p.zeta = get_double(j, "zeta", path, p.zeta);
  if (const json* s = find(j, "solver")) p.solver = solver_params_from_json(*s, join(path, "solver"));
  return p;
}

void ExperimentConfig::validate() const {
  validate_at("pipeline", [&] { pipeline.validate(); });
  validate_at("noise", [&] { obliv::validate(noise); });
  if (corruption) validate_at("corruption", [&] { obliv::validate(*corruption); });
  if (trials < 1) field_error("trials", "must be at least 1");
  if (!(success_threshold >= -1.0 && success_threshold <= 1.0)) field_error("success_threshold", "must lie in [-1, 1]");
  if (max_runs < 1) field_error("max_runs", "must be at least 1");
  if (jsonl_path.empty()) field_error("output.jsonl", "must be nonempty");
  if (csv_path.empty()) field_error("output.csv", "must be nonempty");
  if (!sweep.epsilon.empty() && !corruption) field_error("sweep.epsilon", "needs a corruption spec");
  const double points = static_cast<double>(std::max<std::size_t>(sweep.lambda.size(), 1)) *
                        static_cast<double>(std::max<std::size_t>(sweep.alpha.size(), 1)) *
                        static_cast<double>(std::max<std::size_t>(sweep.epsilon.size(), 1));
  if (points * trials > static_cast<double>(max_runs))
    field_error("sweep", "sweep points times trials exceeds max_runs (" + std::to_string(max_runs) + ")");
  for (std::size_t i = 0; i < sweep.lambda.size(); ++i)
    if (!(sweep.lambda[i] > 0)) field_error("sweep.lambda[" + std::to_string(i) + "]", "must be positive");
  for (std::size_t i = 0; i < sweep.alpha.size(); ++i)
    if (!(sweep.alpha[i] > 0 && sweep.alpha[i] <= 1))
      field_error("sweep.alpha[" + std::to_string(i) + "]", "must lie in (0, 1]");
  for (std::size_t i = 0; i < sweep.epsilon.size(); ++i)
    if (!(sweep.epsilon[i] >= 0 && sweep.epsilon[i] < 1))
      field_error("sweep.epsilon[" + std::to_string(i) + "]", "must lie in [0, 1)");
  if (std::holds_alternative<HeavyMixture>(noise)) {
    for (const auto& pt : sweep_points(*this)) validate_at("sweep", [&] { obliv::validate(noise_at(*this, pt)); });
  }
}

json to_json(const ExperimentConfig& c) {
  return {{"pipeline", to_json(c.pipeline)},
          {"noise", to_json(c.noise)},
          {"corruption", c.corruption ? to_json(*c.corruption) : json()},
          {"trials", c.trials},
          {"base_seed", c.base_seed},
          {"sweep", {{"lambda", c.sweep.lambda}, {"alpha", c.sweep.alpha}, {"epsilon", c.sweep.epsilon}}},
          {"success_threshold", c.success_threshold},
          {"max_runs", c.max_runs},
          {"output", {{"jsonl", c.jsonl_path}, {"csv", c.csv_path}}}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  require_object(j, "", {"pipeline", "noise", "corruption", "trials", "base_seed", "sweep", "success_threshold",
                         "max_runs", "output"});
  ExperimentConfig c;
  const json* pipeline = find(j, "pipeline");
  if (!pipeline) field_error("pipeline", "missing");
  c.pipeline = pipeline_params_from_json(*pipeline);
  if (const json* noise = find(j, "noise")) c.noise = noise_from_json(*noise);
  if (const json* corr = find(j, "corruption"); corr && !corr->is_null()) c.corruption = corruption_from_json(*corr);
  c.pipeline.corruption = c.corruption;
  c.trials = get_int32(j, "trials", "", c.trials);
  c.base_seed = get_u64(j, "base_seed", "", c.base_seed);
  if (const json* sweep = find(j, "sweep")) {
    require_object(*sweep, "sweep", {"lambda", "alpha", "epsilon"});
    c.sweep.lambda = get_doubles(*sweep, "lambda", "sweep");
    c.sweep.alpha = get_doubles(*sweep, "alpha", "sweep");
    c.sweep.epsilon = get_doubles(*sweep, "epsilon", "sweep");
  }
  c.success_threshold = get_double(j, "success_threshold", "", c.success_threshold);
  c.max_runs = get_int(j, "max_runs", "", c.max_runs);
  if (const json* out = find(j, "output")) {
    require_object(*out, "output", {"jsonl", "csv"});
    c.jsonl_path = get_string(*out, "jsonl", "output", c.jsonl_path);
    c.csv_path = get_string(*out, "csv", "output", c.csv_path);
  }
  c.validate();
  return c;
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at), '\n');
    const auto nl = text.rfind('\n', at == 0 ? 0 : at - 1);
    const auto col = nl == std::string::npos || at == 0 ? at + 1 : at - nl;
    throw ValidationError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const json j = parse_json_file(path);
  try {
    return experiment_config_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
  const std::vector<double> lambdas = c.sweep.lambda.empty() ? std::vector<double>{c.pipeline.lambda} : c.sweep.lambda;
  const std::vector<double> alphas = c.sweep.alpha.empty() ? std::vector<double>{c.pipeline.alpha} : c.sweep.alpha;
  const double eps0 = c.corruption ? c.corruption->epsilon : 0.0;
  const std::vector<double> epss = c.sweep.epsilon.empty() ? std::vector<double>{eps0} : c.sweep.epsilon;
  std::vector<SweepPoint> out;
  for (double l : lambdas)
    for (double a : alphas)
      for (double e : epss) out.push_back({l, a, e});
  return out;
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial, std::size_t point) {
  return derive_seed(base_seed + static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(point));
}

int worker_count() {
  const char* env = std::getenv("OBLIV_THREADS");
  if (!env || !*env) return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) throw ValidationError("OBLIV_THREADS must be an integer in [1, 1024]");
  return static_cast<int>(v);
}

std::vector<AggregateRow> aggregate(const std::vector<ExperimentResult>& results, double success_threshold) {
  std::vector<AggregateRow> rows;
  std::vector<std::tuple<double, double, double>> keys;
  std::vector<std::vector<const ExperimentResult*>> groups;
  for (const auto& r : results) {
    const auto key = std::make_tuple(r.lambda, r.alpha, r.epsilon);
    const auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      groups.push_back({&r});
    } else {
      groups[static_cast<std::size_t>(it - keys.begin())].push_back(&r);
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    AggregateRow row;
    std::tie(row.lambda, row.alpha, row.epsilon) = keys[g];
    row.trials = static_cast<int>(groups[g].size());
    std::vector<double> corr, err;
    double wall = 0.0;
    int successes = 0;
    for (const auto* r : groups[g]) {
      if (r->status != "ok") continue;
      corr.push_back(r->correlation);
      err.push_back(r->l2_error);
      wall += r->wall_ms;
      if (r->correlation >= success_threshold) ++successes;
    }
    row.completed = static_cast<int>(corr.size());
    row.success_rate = static_cast<double>(successes) / row.trials;
    row.median_correlation = median(corr);
    row.median_l2_error = median(err);
    row.mean_wall_ms = row.completed ? wall / row.completed : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "lambda,alpha,epsilon,trials,completed,success_rate,median_correlation,median_l2_error,mean_wall_ms\n";
  for (const auto& r : rows) {
    os << format_double(r.lambda) << ',' << format_double(r.alpha) << ',' << format_double(r.epsilon) << ','
       << r.trials << ',' << r.completed << ',' << format_double(r.success_rate) << ','
       << format_double(r.median_correlation) << ',' << format_double(r.median_l2_error) << ','
       << format_double(r.mean_wall_ms) << '\n';
  }
  return os.str();
}

ExperimentOutputs run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto points = sweep_points(config);
  const std::size_t trials = static_cast<std::size_t>(config.trials);
  const std::size_t total = points.size() * trials;

  ensure_parent(config.jsonl_path);
  ensure_parent(config.csv_path);
  std::ofstream jsonl(config.jsonl_path, std::ios::trunc);
  if (!jsonl) throw RuntimeFailure("cannot open '" + config.jsonl_path + "' for writing");

  ExperimentOutputs out;
  out.jsonl_path = config.jsonl_path;
  out.csv_path = config.csv_path;
  out.results.resize(total);
  std::vector<char> done(total, 0);
  std::size_t flushed = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  // Lines go out in task order so reruns produce the same file whatever the
  // completion order.
  auto worker = [&] {
    for (std::size_t task; (task = next.fetch_add(1)) < total;) {
      const std::size_t point = task / trials;
      const int trial = static_cast<int>(task % trials);
      ExperimentResult r = run_trial(config, points[point], trial_seed(config.base_seed, trial, point));
      std::lock_guard lock(mu);
      out.results[task] = std::move(r);
      done[task] = 1;
      for (; flushed < total && done[flushed]; ++flushed) jsonl << to_json(out.results[flushed]).dump() << '\n';
      jsonl.flush();
    }
  };

  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(worker_count()), total));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (!jsonl) throw RuntimeFailure("failed writing '" + config.jsonl_path + "'");
  jsonl.close();

  out.aggregates = aggregate(out.results, config.success_threshold);
  std::ofstream csv(config.csv_path, std::ios::trunc);
  csv << aggregate_csv(out.aggregates);
  if (!csv) throw RuntimeFailure("failed writing '" + config.csv_path + "'");
  return out;
}

std::vector<ExperimentResult> read_results(const std::string& jsonl_path) {
  std::ifstream in(jsonl_path);
  if (!in) throw ValidationError("cannot open '" + jsonl_path + "'");
  std::vector<ExperimentResult> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    try {
      out.push_back(experiment_result_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError(jsonl_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ComplexityConfig complexity_config_from_json(const json& j) {
  require_object(j, "", {"estimator", "system", "n", "p", "k", "t", "lambda", "b", "trials", "seed", "solver"});
  ComplexityConfig c;
  c.estimator = get_string(j, "estimator", "", c.estimator);
  c.system = get_string(j, "system", "", c.system);
  c.n = get_int32(j, "n", "", c.n);
  c.p = get_int32(j, "p", "", c.p);
  c.k = get_int32(j, "k", "", c.k);
  c.t = get_int32(j, "t", "", c.t);
  c.lambda = get_double(j, "lambda", "", c.lambda);
  c.b = get_double(j, "b", "", c.b);
  c.trials = get_int32(j, "trials", "", c.trials);
  c.seed = get_u64(j, "seed", "", c.seed);
  if (const json* s = find(j, "solver")) c.solver = solver_params_from_json(*s);
  if (c.estimator != "gaussian" && c.estimator != "rademacher" && c.estimator != "sparse-bound")
    field_error("estimator", "expected gaussian, rademacher or sparse-bound");
  if (c.system != "unit-ball" && c.system != "tensor-pca" && c.system != "sparse-pca")
    field_error("system", "expected unit-ball, tensor-pca or sparse-pca");
  if (c.trials < 1) field_error("trials", "must be at least 1");
  if (c.n < 1) field_error("n", "must be positive");
  return c;
}

json to_json(const ComplexityConfig& c) {
  return {{"estimator", c.estimator}, {"system", c.system}, {"n", c.n},         {"p", c.p},
          {"k", c.k},                 {"t", c.t},           {"lambda", c.lambda}, {"b", c.b},
          {"trials", c.trials},       {"seed", c.seed},     {"solver", to_json(c.solver)}};
}

ComplexityReport run_complexity(const ComplexityConfig& c) {
  if (c.estimator == "sparse-bound") return sparse_complexity_bound_mc(c.n, c.k, c.t, c.trials, c.seed);
  ConstraintSystem sys = c.system == "unit-ball"    ? compile_unit_ball(c.n)
                         : c.system == "tensor-pca" ? compile_tensor_pca(c.n, c.p, c.lambda)
                                                    : compile_sparse_pca(c.n, c.k, c.b);
  return c.estimator == "gaussian" ? gaussian_complexity_mc(sys, c.p, c.trials, c.solver, c.seed)
                                   : rademacher_complexity_mc(sys, c.p, c.trials, c.solver, c.seed);
}

}  // namespace obliv
