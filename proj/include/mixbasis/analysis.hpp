#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "basis.hpp"
#include "data.hpp"
#include "em.hpp"
#include "error.hpp"
#include "sampler.hpp"

namespace mixbasis {

// ---------------------------------------------------------------------------
// Number of components

/// Fraction of samples carrying each k.
inline std::map<std::size_t, double>
k_histogram(const SampleSet& samples)
{
  if (samples.samples.empty())
    throw ConfigError("k_histogram: no samples");
  std::map<std::size_t, double> hist;
  for (const auto& s : samples.samples)
    hist[s.k] += 1.0;
  for (auto& [k, v] : hist)
    v /= static_cast<double>(samples.samples.size());
  return hist;
}

/// Modal k; ties go to the smaller k.
inline std::size_t
map_k(const std::map<std::size_t, double>& hist)
{
  if (hist.empty())
    throw ConfigError("map_k: empty histogram");
  std::size_t best = hist.begin()->first;
  double top = hist.begin()->second;
  for (const auto& [k, v] : hist)
    if (v > top) {
      top = v;
      best = k;
    }
  return best;
}

inline std::size_t
map_k(const SampleSet& samples)
{
  return map_k(k_histogram(samples));
}

// ---------------------------------------------------------------------------
// Consensus clustering

/// N x N co-assignment fractions.
class ConsensusMatrix
{
public:
  ConsensusMatrix() = default;
  ConsensusMatrix(std::size_t n, std::vector<double> values)
    : n_(n)
    , c_(std::move(values))
  {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return c_[i * n_ + j]; }
  std::span<const double> values() const noexcept { return c_; }

private:
  std::size_t n_ = 0;
  std::vector<double> c_;
};

/// Accumulates co-assignment counts one labelling at a time, so samples can
/// be streamed from disk instead of held in memory.
class ConsensusAccumulator
{
public:
  explicit ConsensusAccumulator(std::size_t n, std::size_t max_entries = std::size_t{1} << 27)
    : n_(n)
  {
    if (n > 0 && n > max_entries / n)
      throw GuardError("consensus matrix for N = " + std::to_string(n) +
                       " exceeds the memory budget of " + std::to_string(max_entries) +
                       " entries");
    counts_.assign(n * n, 0);
  }

  template <class Label>
  void add(std::span<const Label> g)
  {
    if (g.size() != n_)
      throw ConfigError("consensus: labelling has wrong length");
    group(g);
    for (const auto& members : groups_)
      for (std::size_t a = 0; a < members.size(); ++a) {
        const auto i = members[a];
        std::uint32_t* row = counts_.data() + i * n_;
        for (std::size_t b = a + 1; b < members.size(); ++b)
          ++row[members[b]];
      }
    ++samples_;
  }

  std::size_t samples() const noexcept { return samples_; }

  ConsensusMatrix finish() const
  {
    if (samples_ == 0)
      throw ConfigError("consensus: no samples");
    std::vector<double> c(n_ * n_, 0.0);
    const double s = static_cast<double>(samples_);
    for (std::size_t i = 0; i < n_; ++i) {
      c[i * n_ + i] = 1.0;
      for (std::size_t j = i + 1; j < n_; ++j) {
        // members are grouped in ascending order, so only i < j is filled
        const double v = counts_[i * n_ + j] / s;
        c[i * n_ + j] = v;
        c[j * n_ + i] = v;
      }
    }
    return ConsensusMatrix(n_, std::move(c));
  }

private:
  template <class Label>
  void group(std::span<const Label> g)
  {
    std::size_t k = 0;
    for (auto v : g)
      k = std::max<std::size_t>(k, static_cast<std::size_t>(v) + 1);
    if (groups_.size() < k)
      groups_.resize(k);
    for (auto& m : groups_)
      m.clear();
    for (std::size_t i = 0; i < g.size(); ++i)
      groups_[static_cast<std::size_t>(g[i])].push_back(static_cast<std::uint32_t>(i));
  }

  std::size_t n_;
  std::size_t samples_ = 0;
  std::vector<std::uint32_t> counts_;
  std::vector<std::vector<std::uint32_t>> groups_;
};

/// C_ij = fraction of samples with g_i == g_j.
inline ConsensusMatrix
consensus_matrix(const SampleSet& samples, std::size_t max_entries = std::size_t{1} << 27)
{
  if (samples.samples.empty())
    throw ConfigError("consensus: no samples");
  ConsensusAccumulator acc(samples.n_obs, max_entries);
  for (const auto& s : samples.samples)
    acc.add(std::span<const std::uint32_t>(s.g));
  return acc.finish();
}

/// Mean over unordered pairs i < j of (C^(s)_ij - C_ij)^2 for individual
/// labellings against a fixed consensus matrix.
class ConsensusScorer
{
public:
  explicit ConsensusScorer(const ConsensusMatrix& c)
    : c_(&c)
  {
    const auto n = c.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        sum_sq_ += c(i, j) * c(i, j);
    pairs_ = n * (n - 1) / 2;
  }

  template <class Label>
  double distance(std::span<const Label> g)
  {
    const auto n = c_->size();
    if (g.size() != n)
      throw ConfigError("consensus: labelling has wrong length");
    if (pairs_ == 0)
      return 0.0;
    std::size_t k = 0;
    for (auto v : g)
      k = std::max<std::size_t>(k, static_cast<std::size_t>(v) + 1);
    groups_.assign(k, {});
    for (std::size_t i = 0; i < n; ++i)
      groups_[static_cast<std::size_t>(g[i])].push_back(i);
    // sum over pairs of (d - C)^2 with d in {0,1}: sum C^2 - 2 sum_{same} C + #same
    double same = 0.0;
    double cross = 0.0;
    for (const auto& members : groups_)
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          cross += (*c_)(members[a], members[b]);
          same += 1.0;
        }
    return (sum_sq_ - 2.0 * cross + same) / static_cast<double>(pairs_);
  }

private:
  const ConsensusMatrix* c_;
  double sum_sq_ = 0.0;
  std::size_t pairs_ = 0;
  std::vector<std::vector<std::size_t>> groups_;
};

/// Index of the sample whose own co-assignment matrix is closest in mean
/// square to C; ties go to the earliest sample.
inline std::size_t
consensus_select(const SampleSet& samples, const ConsensusMatrix& c)
{
  if (samples.samples.empty())
    throw ConfigError("consensus: no samples");
  ConsensusScorer scorer(c);
  std::size_t best = 0;
  double best_d = 0.0;
  for (std::size_t s = 0; s < samples.samples.size(); ++s) {
    const double d = scorer.distance(std::span<const std::uint32_t>(samples.samples[s].g));
    if (s == 0 || d < best_d) {
      best = s;
      best_d = d;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Density parameters from samples

/// theta_rjt = m_rjt / n_r from one sampled (g, h); pi_r = n_r / N.
inline EmParams
theta_map_from_gh(const Snapshot& sample, const std::vector<std::size_t>& sizes)
{
  const std::size_t n = sample.g.size();
  const std::size_t m = sizes.size();
  EmParams p(sample.k, sizes);
  std::vector<double> n_r(sample.k, 0.0);
  std::fill(p.theta.begin(), p.theta.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = sample.g[i];
    n_r[r] += 1.0;
    for (std::size_t j = 0; j < m; ++j)
      p.theta_of(r, j)[sample.h[i * m + j]] += 1.0;
  }
  for (std::size_t r = 0; r < sample.k; ++r) {
    if (n_r[r] == 0.0)
      throw ConfigError("theta_map_from_gh: component " + std::to_string(r + 1) + " is empty");
    p.pi[r] = n_r[r] / static_cast<double>(n);
    for (std::size_t j = 0; j < m; ++j)
      for (auto& v : p.theta_of(r, j))
        v /= n_r[r];
  }
  return p;
}

struct ThetaMapOptions
{
  double tol = 1e-10;
  std::size_t max_iter = 1000000;
};

/// Result of maximizing sum_{i in r} log sum_t theta_t phi_ijt for one
/// (component, item) block.
struct BlockFit
{
  std::vector<double> theta;
  double log_objective = 0.0;
  std::size_t iters = 0;
  bool converged = false;
  std::vector<double> trace;
};

/// Log of prod_{i in members} sum_t theta_t phi_ijt.
inline double
block_log_objective(const PhiTensor& phi,
                    std::span<const std::size_t> members,
                    std::size_t j,
                    std::span<const double> theta)
{
  double total = 0.0;
  for (auto i : members) {
    const auto ph = phi(i, j);
    double s = 0.0;
    for (std::size_t t = 0; t < ph.size(); ++t)
      s += theta[t] * ph[t];
    total += std::log(s);
  }
  return total;
}

/// Fixed-point iteration theta_t <- (1/n) sum_i theta_t phi_it / sum_u theta_u phi_iu
/// from the uniform start. The objective is concave, so this reaches the
/// global optimum.
inline BlockFit
theta_map_block(const PhiTensor& phi,
                std::span<const std::size_t> members,
                std::size_t j,
                const ThetaMapOptions& opts = {},
                bool keep_trace = false)
{
  const std::size_t T = phi.size(j);
  if (members.empty())
    throw ConfigError("theta_map_from_g: empty component");
  BlockFit fit;
  fit.theta.assign(T, 1.0 / static_cast<double>(T));
  std::vector<double> next(T);
  const double inv_n = 1.0 / static_cast<double>(members.size());
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double logobj = 0.0;
    for (auto i : members) {
      const auto ph = phi(i, j);
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        s += fit.theta[t] * ph[t];
      if (!(s > 0.0))
        throw NumericError("theta_map_from_g: zero normalizer for observation " +
                           std::to_string(i + 1) + ", item " + std::to_string(j + 1));
      logobj += std::log(s);
      for (std::size_t t = 0; t < T; ++t)
        next[t] += fit.theta[t] * ph[t] / s;
    }
    if (keep_trace)
      fit.trace.push_back(logobj);
    double total = 0.0;
    for (auto& v : next) {
      v *= inv_n;
      total += v;
    }
    double change = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      next[t] /= total;
      change = std::max(change, std::abs(next[t] - fit.theta[t]));
    }
    fit.theta.swap(next);
    fit.iters = it + 1;
    if (change < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.log_objective = block_log_objective(phi, members, j, fit.theta);
  if (keep_trace)
    fit.trace.push_back(fit.log_objective);
  return fit;
}

/// MAP theta for every (component, item) given labels alone (0-based, all
/// of 0..k-1 used). pi_r = n_r / N.
inline EmParams
theta_map_from_g(std::span<const std::size_t> labels,
                 const PhiTensor& phi,
                 const ThetaMapOptions& opts = {})
{
  if (labels.size() != phi.n_obs())
    throw ConfigError("theta_map_from_g: labels do not match N");
  std::size_t k = 0;
  for (auto g : labels)
    k = std::max(k, g + 1);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < labels.size(); ++i)
    members[labels[i]].push_back(i);
  EmParams p(k, phi.sizes());
  for (std::size_t r = 0; r < k; ++r) {
    if (members[r].empty())
      throw ConfigError("theta_map_from_g: component " + std::to_string(r + 1) + " is empty");
    p.pi[r] = static_cast<double>(members[r].size()) / static_cast<double>(labels.size());
    for (std::size_t j = 0; j < phi.n_items(); ++j) {
      const auto fit = theta_map_block(phi, members[r], j, opts);
      std::copy(fit.theta.begin(), fit.theta.end(), p.theta_of(r, j).begin());
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Density reconstruction

struct DensityCurve
{
  std::vector<double> grid;
  std::vector<double> values;
  std::size_t component = 0;
  std::size_t item = 0;
};

/// values[p] = sum_t theta_t Phi_t(grid[p]).
inline DensityCurve
density_curve(std::span<const double> theta,
              const BasisSpec& spec,
              std::span<const double> grid,
              std::size_t component = 0,
              std::size_t item = 0)
{
  if (theta.size() != spec.size())
    throw ConfigError("density_curve: theta has " + std::to_string(theta.size()) +
                      " entries for a basis of size " + std::to_string(spec.size()));
  DensityCurve c;
  c.component = component;
  c.item = item;
  c.grid.assign(grid.begin(), grid.end());
  c.values.resize(grid.size());
  const auto dom = spec.domain();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (!dom.contains(grid[p]))
      throw DataError("density_curve: grid point " + detail::format_double(grid[p]) +
                      " outside " + dom.to_string());
    double v = 0.0;
    for (std::size_t t = 0; t < theta.size(); ++t)
      if (theta[t] != 0.0)
        v += theta[t] * spec(t, grid[p]);
    c.values[p] = v;
  }
  return c;
}

/// Evenly spaced points over the basis domain. Unbounded ends are replaced by
/// the data range padded by a tenth of its width.
inline std::vector<double>
density_grid(const BasisSpec& spec, std::span<const double> data, std::size_t points = 201)
{
  if (points < 2)
    throw ConfigError("density grid needs at least 2 points");
  const auto dom = spec.domain();
  double lo = dom.lo, hi = dom.hi;
  if (std::isinf(lo) || std::isinf(hi)) {
    if (data.empty())
      throw ConfigError("density grid over an unbounded domain needs data");
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
    const double pad = *mx > *mn ? 0.1 * (*mx - *mn) : 1.0;
    if (std::isinf(lo))
      lo = *mn - pad;
    if (std::isinf(hi))
      hi = *mx + pad;
    lo = std::max(lo, dom.lo);
  }
  std::vector<double> grid(points);
  for (std::size_t p = 0; p < points; ++p)
    grid[p] = lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(points - 1);
  grid.back() = hi;
  return grid;
}

/// Curves for every (component, item) of a parameter set.
inline std::vector<DensityCurve>
density_curves(const EmParams& params,
               std::span<const BasisSpec> specs,
               const Dataset& data,
               std::size_t points = 201)
{
  std::vector<DensityCurve> out;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const auto col = data.column(j);
    const auto grid = density_grid(specs[j], col, points);
    for (std::size_t r = 0; r < params.k; ++r)
      out.push_back(density_curve(params.theta_of(r, j), specs[j], grid, r, j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variable selection

/// I(r; t) in bits from a k x T count table m (row-major):
/// (1/N) sum m_rt log2(N m_rt / (n_r n_t)), 0 log 0 = 0.
inline double
mutual_information_counts(std::span<const double> m, std::size_t k, std::size_t T)
{
  std::vector<double> row(k, 0.0);
  std::vector<double> col(T, 0.0);
  double n = 0.0;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t t = 0; t < T; ++t) {
      const double v = m[r * T + t];
      row[r] += v;
      col[t] += v;
      n += v;
    }
  if (n <= 0.0)
    return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t t = 0; t < T; ++t) {
      const double v = m[r * T + t];
      if (v > 0.0)
        total += v * std::log2(n * v / (row[r] * col[t]));
    }
  return std::max(0.0, total / n);
}

/// Mutual information between component and slot for item j in one sample.
inline double
sample_mutual_information(const Snapshot& s, const std::vector<std::size_t>& sizes, std::size_t j)
{
  const std::size_t T = sizes[j];
  const std::size_t m = sizes.size();
  std::vector<double> counts(s.k * T, 0.0);
  for (std::size_t i = 0; i < s.g.size(); ++i)
    counts[s.g[i] * T + s.h[i * m + j]] += 1.0;
  return mutual_information_counts(counts, s.k, T);
}

/// Average over all samples of the component/slot mutual information for
/// item j, in bits.
inline double
mutual_information(const SampleSet& samples, std::size_t j)
{
  if (samples.samples.empty())
    throw ConfigError("mutual_information: no samples");
  if (j >= samples.n_items)
    throw ConfigError("mutual_information: item out of range");
  double total = 0.0;
  for (const auto& s : samples.samples) {
    if (s.h.size() != s.g.size() * samples.n_items)
      throw ConfigError("mutual_information: samples carry no slot assignments");
    total += sample_mutual_information(s, samples.sizes, j);
  }
  return total / static_cast<double>(samples.samples.size());
}

struct ItemInformation
{
  std::size_t item = 0;
  double bits = 0.0;
};

/// Items sorted by average mutual information, most informative first.
inline std::vector<ItemInformation>
mi_ranking(const SampleSet& samples)
{
  std::vector<ItemInformation> out;
  for (std::size_t j = 0; j < samples.n_items; ++j)
    out.push_back({j, mutual_information(samples, j)});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.bits > b.bits;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Scoring against known labels

/// Best agreement fraction over one-to-one matchings of predicted to true
/// labels. Exhaustive when there are at most 10 labels on the larger side,
/// greedy on the confusion table otherwise.
template <class A, class B>
double
permuted_accuracy(std::span<const A> predicted, std::span<const B> truth)
{
  if (predicted.size() != truth.size())
    throw ConfigError("permuted_accuracy: length mismatch");
  if (predicted.empty())
    return 1.0;
  const auto densify = [](auto labels) {
    std::map<long long, std::size_t> ids;
    std::vector<std::size_t> out;
    for (auto v : labels) {
      const auto key = static_cast<long long>(v);
      const auto it = ids.try_emplace(key, ids.size()).first;
      out.push_back(it->second);
    }
    return std::make_pair(out, ids.size());
  };
  const auto [p, kp] = densify(predicted);
  const auto [t, kt] = densify(truth);
  const std::size_t K = std::max(kp, kt);
  std::vector<double> conf(K * K, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    conf[p[i] * K + t[i]] += 1.0;

  double best = 0.0;
  if (K <= 10) {
    std::vector<std::size_t> perm(K);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do {
      double agree = 0.0;
      for (std::size_t a = 0; a < K; ++a)
        agree += conf[a * K + perm[a]];
      best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<bool> row_used(K, false), col_used(K, false);
    for (std::size_t step = 0; step < K; ++step) {
      double top = -1.0;
      std::size_t ba = 0, bb = 0;
      for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = 0; b < K; ++b)
          if (!row_used[a] && !col_used[b] && conf[a * K + b] > top) {
            top = conf[a * K + b];
            ba = a;
            bb = b;
          }
      row_used[ba] = col_used[bb] = true;
      best += top;
    }
  }
  return best / static_cast<double>(p.size());
}

template <class A, class B>
double
permuted_accuracy(const std::vector<A>& predicted, const std::vector<B>& truth)
{
  return permuted_accuracy(std::span<const A>(predicted), std::span<const B>(truth));
}

/// Predicted label -> true label under the best one-to-one matching of k
/// labels, found exhaustively.
inline std::vector<std::size_t>
best_label_matching(std::span<const std::size_t> predicted,
                    std::span<const std::size_t> truth,
                    std::size_t k)
{
  std::vector<double> conf(k * k, 0.0);
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] < k && truth[i] < k)
      conf[predicted[i] * k + truth[i]] += 1.0;
  std::vector<std::size_t> perm(k), best_perm;
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = -1.0;
  do {
    double agree = 0.0;
    for (std::size_t a = 0; a < k; ++a)
      agree += conf[a * k + perm[a]];
    if (agree > best) {
      best = agree;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best_perm;
}

} // namespace mixbasis
