#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "obliv/tensor.hpp"

namespace obliv {

struct BoundedUniform {
  double zeta = 1.0;  // Uniform[-zeta, zeta]
};

struct Cauchy {
  double scale = 1.0;
};

/// Uniform[-zeta, zeta] with probability alpha, N(0, heavy_sigma^2) otherwise.
struct HeavyMixture {
  double alpha = 0.5;
  double zeta = 1.0;
  double heavy_sigma = 1.0;
};

/// +-scale with equal probability.
struct RademacherScaled {
  double scale = 1.0;
};

struct ZeroOnSet;

/// Oblivious symmetric noise for a single entry. Every variant is symmetric
/// about zero.
using NoiseSpec = std::variant<BoundedUniform, Cauchy, HeavyMixture, RademacherScaled, ZeroOnSet>;

/// Entries whose index is in `indices` are exactly zero; the rest follow `inner`.
struct ZeroOnSet {
  std::vector<std::int64_t> indices;
  std::shared_ptr<const NoiseSpec> inner;
};

void validate(const NoiseSpec& spec);
std::string describe(const NoiseSpec& spec);

/// `count` independent draws, a pure function of (spec, count, seed).
Eigen::VectorXd sample_noise(const NoiseSpec& spec, std::int64_t count, std::uint64_t seed);

/// Exact P(|N| <= zeta) for one entry. For ZeroOnSet this is the mass of the
/// inner distribution, i.e. the guarantee that holds for every entry.
double alpha_at(const NoiseSpec& spec, double zeta);

enum class CorruptionStrategy { RandomExtreme, TargetedSignFlip };

struct CorruptionSpec {
  double epsilon = 0.0;
  CorruptionStrategy strategy = CorruptionStrategy::RandomExtreme;
  double magnitude = 1.0;
};

void validate(const CorruptionSpec& spec);
std::string to_string(CorruptionStrategy s);
CorruptionStrategy corruption_strategy_from_string(const std::string& s);

/// floor(epsilon * m), robust to representation error in epsilon * m.
std::int64_t corrupted_count(double epsilon, std::int64_t m);

struct Corrupted {
  Eigen::VectorXd values;
  std::vector<std::int64_t> mask;  // replaced positions, ascending
};

struct CorruptedTensor {
  Tensor tensor;
  std::vector<std::int64_t> mask;
};

/// Replace floor(eps * m) entries of `observed`. `signal` (same length) only
/// matters for TargetedSignFlip.
Corrupted corrupt(const Eigen::VectorXd& observed, const CorruptionSpec& spec, const Eigen::VectorXd& signal,
                  std::uint64_t seed);

CorruptedTensor corrupt(const Tensor& observed, const CorruptionSpec& spec, const Tensor& signal, std::uint64_t seed);

}  // namespace obliv
