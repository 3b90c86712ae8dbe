#include "obliv/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <type_traits>

#include "obliv/error.hpp"
#include "obliv/rng.hpp"

namespace obliv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double draw(const NoiseSpec& spec, CounterRng& rng) {
  return std::visit(
      overloaded{
          [&](const BoundedUniform& s) { return s.zeta * (2.0 * rng.uniform() - 1.0); },
          [&](const Cauchy& s) { return s.scale * std::tan(std::numbers::pi * (rng.uniform_open() - 0.5)); },
          [&](const HeavyMixture& s) {
            if (rng.uniform() < s.alpha) return s.zeta * (2.0 * rng.uniform() - 1.0);
            return s.heavy_sigma * rng.normal();
          },
          [&](const RademacherScaled& s) { return s.scale * rng.sign(); },
          [&](const ZeroOnSet& s) { return draw(*s.inner, rng); },
      },
      spec);
}

}  // namespace

void validate(const NoiseSpec& spec) {
  std::visit(overloaded{
                 [](const BoundedUniform& s) { require(s.zeta > 0, "BoundedUniform zeta must be positive"); },
                 [](const Cauchy& s) { require(s.scale > 0, "Cauchy scale must be positive"); },
                 [](const HeavyMixture& s) {
                   require(s.alpha > 0 && s.alpha <= 1, "HeavyMixture alpha must be in (0,1]");
                   require(s.zeta > 0 && s.heavy_sigma > 0, "HeavyMixture zeta and heavy_sigma must be positive");
                 },
                 [](const RademacherScaled& s) { require(s.scale > 0, "RademacherScaled scale must be positive"); },
                 [](const ZeroOnSet& s) {
                   require(s.inner != nullptr, "ZeroOnSet needs an inner spec");
                   for (auto i : s.indices) require(i >= 0, "ZeroOnSet indices must be nonnegative");
                   validate(*s.inner);
                 },
             },
             spec);
}

std::string describe(const NoiseSpec& spec) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const BoundedUniform& s) { os << "BoundedUniform(zeta=" << s.zeta << ")"; },
                 [&](const Cauchy& s) { os << "Cauchy(scale=" << s.scale << ")"; },
                 [&](const HeavyMixture& s) {
                   os << "HeavyMixture(alpha=" << s.alpha << ",zeta=" << s.zeta << ",heavy_sigma=" << s.heavy_sigma
                      << ")";
                 },
                 [&](const RademacherScaled& s) { os << "RademacherScaled(scale=" << s.scale << ")"; },
                 [&](const ZeroOnSet& s) {
                   os << "ZeroOnSet(" << s.indices.size() << " entries," << describe(*s.inner) << ")";
                 },
             },
             spec);
  return os.str();
}

Eigen::VectorXd sample_noise(const NoiseSpec& spec, std::int64_t count, std::uint64_t seed) {
  require(count > 0, "sample_noise needs count >= 1");
  validate(spec);
  CounterRng rng(seed);
  Eigen::VectorXd out(count);
  for (std::int64_t i = 0; i < count; ++i) out[i] = draw(spec, rng);
  if (const auto* z = std::get_if<ZeroOnSet>(&spec)) {
    for (auto i : z->indices)
      if (i < count) out[i] = 0.0;
  }
  return out;
}

double alpha_at(const NoiseSpec& spec, double zeta) {
  require(zeta > 0, "alpha_at needs zeta > 0");
  return std::visit(overloaded{
                        [&](const BoundedUniform& s) { return std::min(1.0, zeta / s.zeta); },
                        [&](const Cauchy& s) { return 2.0 / std::numbers::pi * std::atan(zeta / s.scale); },
                        [&](const HeavyMixture& s) {
                          const double inner = std::min(1.0, zeta / s.zeta);
                          const double outer = std::erf(zeta / (s.heavy_sigma * std::numbers::sqrt2));
                          return s.alpha * inner + (1.0 - s.alpha) * outer;
                        },
                        [&](const RademacherScaled& s) { return zeta >= s.scale ? 1.0 : 0.0; },
                        [&](const ZeroOnSet& s) { return alpha_at(*s.inner, zeta); },
                    },
                    spec);
}

void validate(const CorruptionSpec& spec) {
  require(spec.epsilon >= 0.0 && spec.epsilon < 1.0, "corruption epsilon must be in [0,1)");
  require(spec.magnitude > 0.0, "corruption magnitude must be positive");
}

std::string to_string(CorruptionStrategy s) {
  return s == CorruptionStrategy::RandomExtreme ? "random_extreme" : "targeted_sign_flip";
}

CorruptionStrategy corruption_strategy_from_string(const std::string& s) {
  if (s == "random_extreme" || s == "RandomExtreme") return CorruptionStrategy::RandomExtreme;
  if (s == "targeted_sign_flip" || s == "TargetedSignFlip") return CorruptionStrategy::TargetedSignFlip;
  throw ValidationError("unknown corruption strategy '" + s + "'");
}

std::int64_t corrupted_count(double epsilon, std::int64_t m) {
  const double raw = epsilon * static_cast<double>(m);
  // eps = 1/m must give exactly one entry even when eps*m rounds to 0.999...
  return static_cast<std::int64_t>(std::floor(raw + 1e-9 * std::max(1.0, raw)));
}

Corrupted corrupt(const Eigen::VectorXd& observed, const CorruptionSpec& spec, const Eigen::VectorXd& signal,
                  std::uint64_t seed) {
  validate(spec);
  const auto m = static_cast<std::int64_t>(observed.size());
  const std::int64_t count = corrupted_count(spec.epsilon, m);
  Corrupted out{observed, {}};
  if (count == 0) return out;

  CounterRng rng(seed);
  std::vector<std::int64_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);

  if (spec.strategy == CorruptionStrategy::RandomExtreme) {
    // Partial Fisher-Yates picks `count` distinct positions.
    for (std::int64_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m - i)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    order.resize(static_cast<std::size_t>(count));
    for (auto pos : order) out.values[pos] = spec.magnitude * rng.sign();
  } else {
    require(signal.size() == observed.size(), "TargetedSignFlip needs a signal with the observation's shape");
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
      return std::abs(signal[a]) > std::abs(signal[b]);
    });
    order.resize(static_cast<std::size_t>(count));
    for (auto pos : order) out.values[pos] = (signal[pos] < 0 ? 1.0 : -1.0) * spec.magnitude;
  }
  std::sort(order.begin(), order.end());
  out.mask = std::move(order);
  return out;
}

CorruptedTensor corrupt(const Tensor& observed, const CorruptionSpec& spec, const Tensor& signal,
                        std::uint64_t seed) {
  require(observed.same_shape(signal), "signal must have the observation's shape");
  auto c = corrupt(observed.values(), spec, signal.values(), seed);
  return {Tensor(observed.order(), observed.dim(), std::move(c.values)), std::move(c.mask)};
}

}  // namespace obliv
