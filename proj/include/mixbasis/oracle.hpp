#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "basis.hpp"
#include "error.hpp"
#include "sampler.hpp"

namespace mixbasis {

/// Brute-force references for small problems.
namespace oracle {

using Block = std::vector<std::size_t>;
using Partition = std::vector<Block>;

/// Streaming log(sum exp(v)).
class LogSum
{
public:
  void add(double v)
  {
    if (v == -std::numeric_limits<double>::infinity())
      return;
    if (v <= max_) {
      sum_ += std::exp(v - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - v) + 1.0;
      max_ = v;
    }
  }
  double value() const
  {
    return sum_ > 0.0 ? max_ + std::log(sum_) : -std::numeric_limits<double>::infinity();
  }

private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

inline constexpr std::size_t max_partition_n = 10;

/// Restricted growth strings a_0 = 0, a_i <= 1 + max(a_0..a_{i-1}), one per
/// set partition of {0..n-1}.
inline std::vector<std::vector<std::size_t>>
enumerate_label_vectors(std::size_t n)
{
  if (n > max_partition_n)
    throw GuardError("partition enumeration is limited to N <= " +
                     std::to_string(max_partition_n));
  std::vector<std::vector<std::size_t>> out;
  if (n == 0)
    return out;
  std::vector<std::size_t> a(n, 0), top(n, 0); // top[i] = max(a_0..a_i)
  while (true) {
    out.push_back(a);
    std::size_t i = n - 1;
    while (i > 0 && a[i] > top[i - 1])
      --i;
    if (i == 0)
      break;
    ++a[i];
    top[i] = std::max(top[i - 1], a[i]);
    for (std::size_t q = i + 1; q < n; ++q) {
      a[q] = 0;
      top[q] = top[i];
    }
  }
  return out;
}

inline Partition
blocks_of(const std::vector<std::size_t>& labels)
{
  std::size_t k = 0;
  for (auto g : labels)
    k = std::max(k, g + 1);
  Partition p(k);
  for (std::size_t i = 0; i < labels.size(); ++i)
    p[labels[i]].push_back(i);
  return p;
}

/// Every set partition of {0..n-1} into non-empty blocks.
inline std::vector<Partition>
enumerate_partitions(std::size_t n)
{
  std::vector<Partition> out;
  for (const auto& a : enumerate_label_vectors(n))
    out.push_back(blocks_of(a));
  return out;
}

struct ExactPosterior
{
  std::map<std::size_t, double> k_marginal;
  std::vector<double> coassign; // n x n
  std::size_t n = 0;
  double log_evidence = 0.0;

  double co(std::size_t a, std::size_t b) const { return coassign[a * n + b]; }
};

inline void
check_guard(const PhiTensor& phi)
{
  if (phi.n_obs() < 1 || phi.n_obs() > 7 || phi.n_items() > 3)
    throw GuardError("exact posterior is limited to 1 <= N <= 7 and M <= 3");
  for (auto t : phi.sizes())
    if (t > 4)
      throw GuardError("exact posterior is limited to T_j <= 4");
}

namespace detail {

/// Calls f(h) for every assignment h in [0,T)^len.
template <class F>
void
for_each_slot_vector(std::size_t len, std::size_t T, F&& f)
{
  std::vector<Slot> h(len, 0);
  while (true) {
    f(static_cast<const std::vector<Slot>&>(h));
    std::size_t q = 0;
    while (q < len && ++h[q] == T)
      h[q++] = 0;
    if (q == len)
      break;
  }
}

/// log sum over member slots of
/// log (T-1)! - log (n+T-1)! + sum_t log m_t! + sum_i log phi_{i j h_i}.
inline double
block_item_log_sum(const PhiTensor& phi, const Block& members, std::size_t j)
{
  const std::size_t T = phi.size(j);
  const double nb = static_cast<double>(members.size());
  LogSum acc;
  std::vector<std::size_t> counts(T);
  for_each_slot_vector(members.size(), T, [&](const std::vector<Slot>& h) {
    std::fill(counts.begin(), counts.end(), 0);
    double v = 0.0;
    for (std::size_t q = 0; q < members.size(); ++q) {
      ++counts[h[q]];
      v += std::log(phi(members[q], j)[h[q]]);
    }
    for (auto c : counts)
      v += std::lgamma(static_cast<double>(c) + 1.0);
    acc.add(v);
  });
  const double Td = static_cast<double>(T);
  return acc.value() + std::lgamma(Td) - std::lgamma(nb + Td);
}

inline ExactPosterior
normalize(std::size_t n,
          const std::vector<std::vector<std::size_t>>& label_vectors,
          const std::vector<double>& log_w)
{
  LogSum total;
  for (double v : log_w)
    total.add(v);
  ExactPosterior out;
  out.n = n;
  out.log_evidence = total.value();
  if (!std::isfinite(out.log_evidence))
    throw NumericError("every state has zero posterior weight");
  out.coassign.assign(n * n, 0.0);
  for (std::size_t p = 0; p < label_vectors.size(); ++p) {
    const double w = std::exp(log_w[p] - out.log_evidence);
    const auto& g = label_vectors[p];
    std::size_t k = 0;
    for (auto v : g)
      k = std::max(k, v + 1);
    out.k_marginal[k] += w;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (g[a] == g[b])
          out.coassign[a * n + b] += w;
  }
  for (std::size_t a = 0; a < n; ++a)
    out.coassign[a * n + a] = 1.0;
  return out;
}

} // namespace detail

/// Exact posterior over (k, g) with slots summed out. Each unlabelled
/// partition stands for k! labelled states of equal weight.
inline ExactPosterior
exact_posterior(const PhiTensor& phi, const KPrior& prior)
{
  check_guard(phi);
  const std::size_t n = phi.n_obs();
  const std::size_t m = phi.n_items();
  const auto label_vectors = enumerate_label_vectors(n);

  std::map<std::size_t, double> block_cache; // bitmask -> log weight
  const auto block_log = [&](const Block& b) {
    std::size_t mask = 0;
    for (auto i : b)
      mask |= std::size_t{1} << i;
    auto it = block_cache.find(mask);
    if (it != block_cache.end())
      return it->second;
    double v = std::lgamma(static_cast<double>(b.size()) + 1.0);
    for (std::size_t j = 0; j < m; ++j)
      v += detail::block_item_log_sum(phi, b, j);
    block_cache.emplace(mask, v);
    return v;
  };

  std::vector<double> log_w;
  log_w.reserve(label_vectors.size());
  const double nd = static_cast<double>(n);
  for (const auto& g : label_vectors) {
    const auto blocks = blocks_of(g);
    const double k = static_cast<double>(blocks.size());
    double v = prior.log_mass(blocks.size()) + std::lgamma(k) + std::lgamma(nd - k + 1.0) +
               std::lgamma(k + 1.0);
    for (const auto& b : blocks)
      v += block_log(b);
    log_w.push_back(std::isnan(v) ? -std::numeric_limits<double>::infinity() : v);
  }
  return detail::normalize(n, label_vectors, log_w);
}

/// Same quantity by scoring every (partition, h) with the sampler's
/// log_joint. Much slower; a cross-check for exact_posterior.
inline ExactPosterior
exact_posterior_full(const PhiTensor& phi, const KPrior& prior)
{
  check_guard(phi);
  const std::size_t n = phi.n_obs();
  const std::size_t m = phi.n_items();
  const auto label_vectors = enumerate_label_vectors(n);
  std::size_t T = 0;
  for (auto t : phi.sizes())
    T = std::max(T, t);
  std::vector<double> log_w;
  for (const auto& g : label_vectors) {
    std::size_t k = 0;
    for (auto v : g)
      k = std::max(k, v + 1);
    LogSum acc;
    detail::for_each_slot_vector(n * m, T, [&](const std::vector<Slot>& h) {
      for (std::size_t q = 0; q < h.size(); ++q)
        if (h[q] >= phi.size(q % m))
          return;
      const auto st = GibbsState::from_assignments(phi, g, h);
      acc.add(log_joint(st, phi, prior));
    });
    log_w.push_back(acc.value() + std::lgamma(static_cast<double>(k) + 1.0));
  }
  return detail::normalize(n, label_vectors, log_w);
}

/// Key: canonical (first-appearance) labels and slots.
using StateKey = std::pair<std::vector<std::size_t>, std::vector<Slot>>;

/// Unnormalized log weight of every unlabelled state (partition, h), from
/// one labelling scored by log_joint and multiplied by k!.
inline std::map<StateKey, double>
unlabeled_state_weights(const PhiTensor& phi, const KPrior& prior)
{
  check_guard(phi);
  const std::size_t n = phi.n_obs();
  const std::size_t m = phi.n_items();
  std::size_t T = 0;
  for (auto t : phi.sizes())
    T = std::max(T, t);
  std::map<StateKey, double> out;
  for (const auto& g : enumerate_label_vectors(n)) {
    std::size_t k = 0;
    for (auto v : g)
      k = std::max(k, v + 1);
    detail::for_each_slot_vector(n * m, T, [&](const std::vector<Slot>& h) {
      for (std::size_t q = 0; q < h.size(); ++q)
        if (h[q] >= phi.size(q % m))
          return;
      const auto st = GibbsState::from_assignments(phi, g, h);
      out[{g, h}] = log_joint(st, phi, prior) + std::lgamma(static_cast<double>(k) + 1.0);
    });
  }
  return out;
}

/// The same weights by summing log_joint over every labelled g in
/// {0..N-1}^N whose labels are exactly 0..k-1.
inline std::map<StateKey, double>
labeled_state_weights(const PhiTensor& phi, const KPrior& prior)
{
  check_guard(phi);
  const std::size_t n = phi.n_obs();
  const std::size_t m = phi.n_items();
  std::size_t T = 0;
  for (auto t : phi.sizes())
    T = std::max(T, t);
  std::map<StateKey, LogSum> acc;
  detail::for_each_slot_vector(n, n, [&](const std::vector<Slot>& gs) {
    std::vector<std::size_t> g(gs.begin(), gs.end());
    std::size_t k = 0;
    for (auto v : g)
      k = std::max(k, v + 1);
    std::vector<bool> used(k, false);
    for (auto v : g)
      used[v] = true;
    if (std::find(used.begin(), used.end(), false) != used.end())
      return;
    std::vector<std::size_t> canon(n);
    std::vector<std::size_t> remap(k, n);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (remap[g[i]] == n)
        remap[g[i]] = next++;
      canon[i] = remap[g[i]];
    }
    detail::for_each_slot_vector(n * m, T, [&](const std::vector<Slot>& h) {
      for (std::size_t q = 0; q < h.size(); ++q)
        if (h[q] >= phi.size(q % m))
          return;
      const auto st = GibbsState::from_assignments(phi, g, h);
      acc[{canon, h}].add(log_joint(st, phi, prior));
    });
  });
  std::map<StateKey, double> out;
  for (const auto& [key, v] : acc)
    out[key] = v.value();
  return out;
}

struct GridOptimum
{
  std::vector<double> theta;
  double log_objective = 0.0;
  double objective = 0.0;
};

/// sum_i log sum_t theta_t rows[i][t]
inline double
simplex_log_objective(const std::vector<std::vector<double>>& rows,
                      const std::vector<double>& theta)
{
  double v = 0.0;
  for (const auto& row : rows) {
    double s = 0.0;
    for (std::size_t t = 0; t < theta.size(); ++t)
      s += theta[t] * row[t];
    v += std::log(s);
  }
  return v;
}

/// Maximizes prod_i sum_t theta_t rows[i][t] over the simplex (T <= 3) by
/// a grid with `resolution` steps per axis, then repeated zooming around
/// the best point.
inline GridOptimum
grid_simplex_optimum(const std::vector<std::vector<double>>& rows, std::size_t resolution = 1000)
{
  if (rows.empty())
    throw ConfigError("grid optimum needs at least one row");
  const std::size_t T = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != T)
      throw ConfigError("grid optimum rows differ in length");
  if (T < 1 || T > 3)
    throw GuardError("grid optimum supports 1 <= T <= 3");
  const std::size_t points =
    T == 1 ? 1000 : (T == 2 ? resolution + 1 : (resolution + 1) * (resolution + 2) / 2);
  if (points < 1000)
    throw ConfigError("grid resolution too coarse (need at least 10^3 points)");

  GridOptimum best;
  best.log_objective = -std::numeric_limits<double>::infinity();
  const auto consider = [&](double a, double b) {
    a = std::clamp(a, 0.0, 1.0);
    std::vector<double> th;
    if (T == 1)
      th = {1.0};
    else if (T == 2)
      th = {a, 1.0 - a};
    else {
      b = std::clamp(b, 0.0, 1.0 - a);
      th = {a, b, std::max(0.0, 1.0 - a - b)};
    }
    const double v = simplex_log_objective(rows, th);
    if (v > best.log_objective) {
      best.log_objective = v;
      best.theta = std::move(th);
    }
  };

  if (T == 1) {
    consider(1.0, 0.0);
  } else {
    const double step = 1.0 / static_cast<double>(resolution);
    for (std::size_t p = 0; p <= resolution; ++p)
      for (std::size_t q = 0; q <= (T == 3 ? resolution - p : 0); ++q)
        consider(p * step, q * step);
    double half = 2.0 * step;
    constexpr int zoom_points = 20;
    while (half > 1e-13 && std::isfinite(best.log_objective)) {
      const double a0 = best.theta[0];
      const double b0 = T == 3 ? best.theta[1] : 0.0;
      for (int p = 0; p <= zoom_points; ++p)
        for (int q = 0; q <= (T == 3 ? zoom_points : 0); ++q)
          consider(a0 - half + 2.0 * half * p / zoom_points,
                   b0 - half + 2.0 * half * q / zoom_points);
      half *= 0.5;
    }
  }
  if (best.theta.empty())
    best.theta.assign(T, 1.0 / static_cast<double>(T));
  best.objective = std::exp(best.log_objective);
  return best;
}

/// Block rows phi(i, j) for i in `members`.
inline GridOptimum
grid_simplex_optimum(const PhiTensor& phi,
                     const std::vector<std::size_t>& members,
                     std::size_t j,
                     std::size_t resolution = 1000)
{
  std::vector<std::vector<double>> rows;
  for (auto i : members) {
    const auto r = phi(i, j);
    rows.emplace_back(r.begin(), r.end());
  }
  return grid_simplex_optimum(rows, resolution);
}

} // namespace oracle
} // namespace mixbasis
