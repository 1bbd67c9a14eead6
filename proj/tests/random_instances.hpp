#pragma once

#include <random>
#include <vector>

#include <mixbasis/basis.hpp>

namespace testutil {

/// Uniform data on [0,1] under Bernstein bases of the given degrees.
inline mixbasis::PhiTensor
random_bernstein_phi(std::size_t n, const std::vector<int>& degrees, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n * degrees.size());
  for (auto& v : x)
    v = u(rng);
  std::vector<mixbasis::BasisSpec> specs;
  for (int d : degrees)
    specs.push_back(mixbasis::BasisSpec::bernstein(d));
  return mixbasis::precompute_phi(x, n, specs);
}

/// Strictly positive random phi entries, any shape.
inline mixbasis::PhiTensor
random_positive_phi(std::size_t n, const std::vector<std::size_t>& sizes, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  mixbasis::PhiTensor phi(n, sizes);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < sizes.size(); ++j)
      for (auto& v : phi.at(i, j))
        v = u(rng);
  return phi;
}

} // namespace testutil
