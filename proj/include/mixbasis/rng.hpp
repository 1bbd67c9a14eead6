#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace mixbasis {

/// The generator used everywhere. Seeded explicitly; the seed is recorded in
/// every output so runs can be reproduced.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double
uniform01(Rng& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
inline std::size_t
uniform_index(Rng& rng, std::size_t n)
{
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Draws an index with probability proportional to `weights` (non-negative,
/// not necessarily normalized, positive total).
inline std::size_t
sample_categorical(Rng& rng, std::span<const double> weights)
{
  double total = 0.0;
  for (double w : weights)
    total += w;
  double u = uniform01(rng) * total;
  for (std::size_t s = 0; s + 1 < weights.size(); ++s) {
    if (u < weights[s])
      return s;
    u -= weights[s];
  }
  // Rounding can leave u marginally above the last weight; the last
  // positive-weight entry absorbs it.
  for (std::size_t s = weights.size(); s-- > 0;)
    if (weights[s] > 0.0)
      return s;
  return weights.size() - 1;
}

/// Converts log-weights into linear weights in place after subtracting the
/// maximum. Returns the maximum (-inf when every entry is -inf).
inline double
exp_normalize_in_place(std::span<double> log_weights)
{
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_weights)
    if (v > top)
      top = v;
  if (!std::isfinite(top))
    return top;
  for (double& v : log_weights)
    v = std::exp(v - top);
  return top;
}

/// Symmetric Dirichlet(alpha) draw of dimension `size`.
inline std::vector<double>
sample_dirichlet(Rng& rng, std::size_t size, double alpha = 1.0)
{
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> out(size);
  double total = 0.0;
  for (auto& v : out) {
    v = gamma(rng);
    total += v;
  }
  if (total <= 0.0) {
    for (auto& v : out)
      v = 1.0 / static_cast<double>(size);
    return out;
  }
  for (auto& v : out)
    v /= total;
  return out;
}

/// Beta(a, b) via the ratio of two gamma variates.
inline double
sample_beta(Rng& rng, double a, double b)
{
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

} // namespace mixbasis
