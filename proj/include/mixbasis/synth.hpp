#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "basis.hpp"
#include "data.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace mixbasis {

/// Planted model: group sizes, theta[r][j] slot weights per group and item,
/// and the basis for each item.
struct SynthSpec
{
  std::vector<std::size_t> component_sizes;
  std::vector<std::vector<std::vector<double>>> theta;
  std::vector<BasisSpec> specs;
  std::uint64_t seed = 0;

  void validate() const
  {
    if (component_sizes.empty() || theta.size() != component_sizes.size())
      throw ConfigError("synth: need one theta block per component");
    for (auto n : component_sizes)
      if (n < 1)
        throw ConfigError("synth: component sizes must be >= 1");
    for (const auto& rows : theta) {
      if (rows.size() != specs.size())
        throw ConfigError("synth: need one theta row per item");
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].size() != specs[j].size())
          throw ConfigError("synth: theta row length differs from basis size");
        double total = 0.0;
        for (double v : rows[j]) {
          if (!(v >= 0.0))
            throw ConfigError("synth: theta entries must be non-negative");
          total += v;
        }
        if (std::abs(total - 1.0) > 1e-12)
          throw ConfigError("synth: theta rows must sum to 1");
      }
    }
  }
};

struct SynthData
{
  Dataset data;
  std::vector<std::size_t> groups; // 0-based truth labels
  std::vector<Slot> slots;         // row-major N x M truth slots
};

/// Exact draw from basis function t of `spec`.
inline double
sample_basis(const BasisSpec& spec, std::size_t t, Rng& rng)
{
  const double T = static_cast<double>(spec.size());
  switch (spec.family()) {
    case Family::bernstein: {
      const double d = spec.degree();
      return sample_beta(rng, static_cast<double>(t) + 1.0, d - static_cast<double>(t) + 1.0);
    }
    case Family::gamma:
      return std::gamma_distribution<double>(static_cast<double>(t) + 1.0, 1.0 / T)(rng);
    case Family::tophat: return static_cast<double>(t) + uniform01(rng);
    case Family::gaussian: {
      const int c = spec.signed_index(t);
      return std::normal_distribution<double>(c, std::sqrt(std::abs(c) + 1.0))(rng);
    }
    case Family::trig: {
      const double peak = trig_constant(static_cast<int>(spec.size()));
      while (true) {
        const double x = uniform01(rng);
        if (uniform01(rng) * peak <= spec(t, x))
          return x;
      }
    }
    case Family::tabulated:
      throw ConfigError("synth: tabulated bases cannot be sampled");
  }
  return 0.0;
}

/// Draws every observation: group members in order, then for each item a
/// slot from theta[r][j] and a value from that slot's basis function.
inline SynthData
generate(const SynthSpec& spec)
{
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t m = spec.specs.size();
  std::size_t n = 0;
  for (auto c : spec.component_sizes)
    n += c;
  std::vector<double> x;
  x.reserve(n * m);
  std::vector<std::size_t> groups;
  std::vector<Slot> slots;
  for (std::size_t r = 0; r < spec.component_sizes.size(); ++r)
    for (std::size_t q = 0; q < spec.component_sizes[r]; ++q) {
      groups.push_back(r);
      for (std::size_t j = 0; j < m; ++j) {
        const auto t = sample_categorical(rng, spec.theta[r][j]);
        slots.push_back(static_cast<Slot>(t));
        x.push_back(sample_basis(spec.specs[j], t, rng));
      }
    }
  return {Dataset(n, m, std::move(x)), std::move(groups), std::move(slots)};
}

namespace detail {

/// Group r, item j takes the distribution of group 1 for item (j - r) mod 3.
inline SynthSpec
cyclic_cubic_spec(const std::vector<std::vector<double>>& first_group,
                  std::size_t group_size,
                  std::uint64_t seed)
{
  SynthSpec s;
  s.seed = seed;
  const std::size_t m = first_group.size();
  for (std::size_t j = 0; j < m; ++j)
    s.specs.push_back(BasisSpec::bernstein(3));
  for (std::size_t r = 0; r < m; ++r) {
    s.component_sizes.push_back(group_size);
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < m; ++j)
      rows.push_back(first_group[(j + m - r) % m]);
    s.theta.push_back(std::move(rows));
  }
  return s;
}

} // namespace detail

/// Three groups of 500, three items, cubic Bernstein: first group uses
/// Phi_0, (Phi_1 + Phi_2)/2 and Phi_3; the others are cyclic shifts.
inline SynthSpec
synth1_spec(std::uint64_t seed = 1, std::size_t group_size = 500)
{
  return detail::cyclic_cubic_spec(
    {{1, 0, 0, 0}, {0, 0.5, 0.5, 0}, {0, 0, 0, 1}}, group_size, seed);
}

/// As synth1 but the first item of the first group is the bimodal
/// (Phi_0 + Phi_3)/2, then Phi_1 and Phi_2.
inline SynthSpec
synth2_spec(std::uint64_t seed = 1, std::size_t group_size = 500)
{
  return detail::cyclic_cubic_spec(
    {{0.5, 0, 0, 0.5}, {0, 1, 0, 0}, {0, 0, 1, 0}}, group_size, seed);
}

/// synth1 parameters with three groups of 25.
inline SynthSpec
small_spec(std::uint64_t seed = 1)
{
  return synth1_spec(seed, 25);
}

} // namespace mixbasis
