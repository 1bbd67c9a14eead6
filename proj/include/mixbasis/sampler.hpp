#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "basis.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace mixbasis {

using Slot = std::uint16_t;

/// Prior P(k) over the number of components.
class KPrior
{
public:
  /// P(k) = 1/N for 1 <= k <= N.
  static KPrior uniform(std::size_t n_obs)
  {
    if (n_obs == 0)
      throw ConfigError("uniform prior needs N >= 1");
    KPrior p;
    p.uniform_ = true;
    p.n_ = n_obs;
    return p;
  }

  /// probs[k-1] = P(k). Entries must be non-negative.
  static KPrior table(std::vector<double> probs)
  {
    if (probs.empty())
      throw ConfigError("prior table is empty");
    for (double v : probs)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ConfigError("prior table entries must be finite and non-negative");
    KPrior p;
    p.uniform_ = false;
    p.n_ = probs.size();
    p.table_ = std::move(probs);
    return p;
  }

  bool is_uniform() const noexcept { return uniform_; }
  /// Largest k the prior is defined for.
  std::size_t max_k() const noexcept { return n_; }

  /// log P(k); -inf for k = 0 or beyond N under the uniform prior.
  double log_mass(std::size_t k) const
  {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    if (k == 0)
      return neg_inf;
    if (uniform_)
      return k <= n_ ? -std::log(static_cast<double>(n_)) : neg_inf;
    if (k > table_.size())
      throw ConfigError("prior table does not cover k = " + std::to_string(k));
    return std::log(table_[k - 1]);
  }

  /// Throws unless P(k) is defined for every k in 1..n.
  void check_covers(std::size_t n) const
  {
    if (!uniform_ && table_.size() < n)
      throw ConfigError("prior table covers k up to " + std::to_string(table_.size()) +
                        " but N = " + std::to_string(n));
    if (uniform_ && n_ != n)
      throw ConfigError("uniform prior built for N = " + std::to_string(n_) +
                        " used with N = " + std::to_string(n));
  }

  std::string to_string() const
  {
    return uniform_ ? "uniform" : "table:" + std::to_string(table_.size());
  }

private:
  KPrior() = default;
  bool uniform_ = true;
  std::size_t n_ = 0;
  std::vector<double> table_;
};

/// Sampler state (k, g, h). Components are stored as membership lists with
/// per-component slot counts m_rjt; labels g are implied by which list an
/// observation sits in, so relabelling a component swaps list handles.
class GibbsState
{
public:
  GibbsState() = default;

  /// Builds a state from 0-based labels g (every label in 0..k-1 used) and
  /// row-major slots h (N x M).
  static GibbsState from_assignments(const PhiTensor& phi,
                                     std::span<const std::size_t> labels,
                                     std::span<const Slot> slots)
  {
    GibbsState s(phi);
    if (labels.size() != s.n_ || slots.size() != s.n_ * s.sizes_.size())
      throw ConfigError("state dimensions do not match the phi tensor");
    std::size_t k = 0;
    for (auto g : labels)
      k = std::max(k, g + 1);
    s.k_ = k;
    s.comps_.resize(std::max<std::size_t>(s.n_, 1));
    for (auto& c : s.comps_)
      c.counts.assign(s.stride_, 0);
    for (std::size_t i = 0; i < s.n_; ++i)
      for (std::size_t j = 0; j < s.sizes_.size(); ++j) {
        const Slot t = slots[i * s.sizes_.size() + j];
        if (t >= s.sizes_[j])
          throw ConfigError("slot " + std::to_string(t) + " out of range for item " +
                            std::to_string(j + 1));
        s.h_[i * s.sizes_.size() + j] = t;
      }
    for (std::size_t i = 0; i < s.n_; ++i)
      s.insert(i, labels[i]);
    for (std::size_t r = 0; r < k; ++r)
      if (s.comps_[r].members.empty())
        throw ConfigError("component " + std::to_string(r + 1) + " is empty");
    return s;
  }

  /// Everything in one component, each slot at the argmax of phi.
  static GibbsState all_in_one(const PhiTensor& phi)
  {
    std::vector<std::size_t> g(phi.n_obs(), 0);
    return from_assignments(phi, g, argmax_slots(phi));
  }

  /// Every observation alone.
  static GibbsState singletons(const PhiTensor& phi)
  {
    std::vector<std::size_t> g(phi.n_obs());
    std::iota(g.begin(), g.end(), std::size_t{0});
    return from_assignments(phi, g, argmax_slots(phi));
  }

  /// k0 non-empty components with uniformly random membership.
  static GibbsState random(const PhiTensor& phi, std::size_t k0, Rng& rng)
  {
    const auto n = phi.n_obs();
    if (k0 < 1 || k0 > n)
      throw ConfigError("initial k must lie in 1.." + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> g(n);
    for (std::size_t q = 0; q < n; ++q)
      g[order[q]] = q < k0 ? q : uniform_index(rng, k0);
    return from_assignments(phi, g, argmax_slots(phi));
  }

  std::size_t k() const noexcept { return k_; }
  std::size_t n_obs() const noexcept { return n_; }
  std::size_t n_items() const noexcept { return sizes_.size(); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

  std::size_t size(std::size_t r) const { return comps_[r].members.size(); }
  std::span<const std::uint32_t> members(std::size_t r) const { return comps_[r].members; }
  std::span<const std::uint32_t> counts(std::size_t r, std::size_t j) const
  {
    return {comps_[r].counts.data() + offsets_[j], sizes_[j]};
  }
  Slot slot(std::size_t i, std::size_t j) const { return h_[i * sizes_.size() + j]; }
  std::span<const Slot> slots() const noexcept { return h_; }
  std::span<const Slot> slots_of(std::size_t i) const
  {
    return {h_.data() + i * sizes_.size(), sizes_.size()};
  }

  /// 0-based component label per observation, derived from the lists.
  std::vector<std::size_t> labels() const
  {
    std::vector<std::size_t> g(n_, 0);
    for (std::size_t r = 0; r < k_; ++r)
      for (auto i : comps_[r].members)
        g[i] = r;
    return g;
  }

  /// Component holding observation i (linear scan; verification only).
  std::size_t component_of(std::size_t i) const
  {
    for (std::size_t r = 0; r < k_; ++r) {
      const auto& mem = comps_[r].members;
      if (pos_[i] < mem.size() && mem[pos_[i]] == i)
        return r;
    }
    throw ConfigError("observation " + std::to_string(i) + " is detached");
  }

  /// Removes i from component r. If r empties, the component is deleted and
  /// the last component takes label r. Returns true when r was deleted.
  bool detach(std::size_t r, std::size_t i)
  {
    if (r >= k_ || i >= n_ || pos_[i] >= comps_[r].members.size() ||
        comps_[r].members[pos_[i]] != i)
      throw ConfigError("observation " + std::to_string(i) + " is not in component " +
                        std::to_string(r));
    auto& c = comps_[r];
    const auto p = pos_[i];
    const auto last = c.members.back();
    c.members[p] = last;
    pos_[last] = p;
    c.members.pop_back();
    const std::size_t m = sizes_.size();
    for (std::size_t j = 0; j < m; ++j)
      --c.counts[offsets_[j] + h_[i * m + j]];
    if (!c.members.empty())
      return false;
    std::swap(comps_[r], comps_[k_ - 1]);
    --k_;
    return true;
  }

  /// Inserts a detached observation into component s with new slots.
  /// s == k() opens a new component.
  void attach(std::size_t i, std::size_t s, std::span<const Slot> new_slots)
  {
    if (s > k_)
      throw ConfigError("attach target " + std::to_string(s) + " beyond k = " +
                        std::to_string(k_));
    const std::size_t m = sizes_.size();
    for (std::size_t j = 0; j < m; ++j)
      h_[i * m + j] = new_slots[j];
    if (s == k_)
      ++k_;
    insert(i, s);
  }

  /// Exchanges the labels of two components.
  void swap_labels(std::size_t a, std::size_t b) { std::swap(comps_[a], comps_[b]); }

  /// Recomputes every count from (g, h) and compares with the incremental
  /// structures. Throws on any mismatch.
  void check_invariants() const
  {
    std::vector<int> seen(n_, 0);
    std::size_t total = 0;
    const std::size_t m = sizes_.size();
    for (std::size_t r = 0; r < k_; ++r) {
      const auto& c = comps_[r];
      if (c.members.empty())
        throw Error("invariant: component " + std::to_string(r) + " is empty");
      std::vector<std::uint32_t> counts(stride_, 0);
      for (std::size_t p = 0; p < c.members.size(); ++p) {
        const auto i = c.members[p];
        if (i >= n_ || seen[i]++)
          throw Error("invariant: membership lists do not partition the observations");
        if (pos_[i] != p)
          throw Error("invariant: stale position index");
        for (std::size_t j = 0; j < m; ++j)
          ++counts[offsets_[j] + h_[i * m + j]];
      }
      if (counts != c.counts)
        throw Error("invariant: slot counts disagree with (g, h)");
      total += c.members.size();
    }
    if (total != n_)
      throw Error("invariant: component sizes do not sum to N");
    for (std::size_t r = k_; r < comps_.size(); ++r)
      if (!comps_[r].members.empty())
        throw Error("invariant: inactive component holds members");
  }

  /// Labels renumbered by first appearance, so states that differ only by a
  /// permutation of component labels compare equal.
  std::vector<std::size_t> canonical_labels() const
  {
    auto g = labels();
    std::vector<std::size_t> remap(k_, k_);
    std::size_t next = 0;
    for (auto& v : g) {
      if (remap[v] == k_)
        remap[v] = next++;
      v = remap[v];
    }
    return g;
  }

  bool same_labeled(const GibbsState& o) const
  {
    return k_ == o.k_ && h_ == o.h_ && labels() == o.labels();
  }

  bool same_unlabeled(const GibbsState& o) const
  {
    return k_ == o.k_ && h_ == o.h_ && canonical_labels() == o.canonical_labels();
  }

private:
  struct Component
  {
    std::vector<std::uint32_t> members;
    std::vector<std::uint32_t> counts; // m_rjt, flat over items
  };

  explicit GibbsState(const PhiTensor& phi)
    : n_(phi.n_obs())
    , sizes_(phi.sizes())
    , stride_(phi.stride())
    , pos_(phi.n_obs(), 0)
    , h_(phi.n_obs() * phi.n_items(), 0)
  {
    offsets_.push_back(0);
    for (auto t : sizes_) {
      if (t > std::numeric_limits<Slot>::max())
        throw ConfigError("basis size too large");
      offsets_.push_back(offsets_.back() + t);
    }
  }

  static std::vector<Slot> argmax_slots(const PhiTensor& phi)
  {
    std::vector<Slot> h(phi.n_obs() * phi.n_items());
    for (std::size_t i = 0; i < phi.n_obs(); ++i)
      for (std::size_t j = 0; j < phi.n_items(); ++j) {
        const auto v = phi(i, j);
        h[i * phi.n_items() + j] =
          static_cast<Slot>(std::max_element(v.begin(), v.end()) - v.begin());
      }
    return h;
  }

  void insert(std::size_t i, std::size_t s)
  {
    auto& c = comps_[s];
    pos_[i] = static_cast<std::uint32_t>(c.members.size());
    c.members.push_back(static_cast<std::uint32_t>(i));
    const std::size_t m = sizes_.size();
    for (std::size_t j = 0; j < m; ++j)
      ++c.counts[offsets_[j] + h_[i * m + j]];
  }

  std::size_t n_ = 0;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t stride_ = 0;
  std::size_t k_ = 0;
  std::vector<Component> comps_;
  std::vector<std::uint32_t> pos_;
  std::vector<Slot> h_;
};

/// log P(k, g, h | x) up to a constant:
/// log P(k) + log (k-1)! + log (N-k)!
///   + sum_r [log n_r! + sum_j (log (T_j-1)! - log (n_r+T_j-1)! + sum_t log m_rjt!)]
///   + sum_ij log phi_{i j h_ij}.
/// Returns -inf when an assigned slot has phi = 0 or P(k) = 0.
inline double
log_joint(const GibbsState& state, const PhiTensor& phi, const KPrior& prior)
{
  const double k = static_cast<double>(state.k());
  const double n = static_cast<double>(state.n_obs());
  double total = prior.log_mass(state.k()) + std::lgamma(k) + std::lgamma(n - k + 1.0);
  for (std::size_t r = 0; r < state.k(); ++r) {
    const double nr = static_cast<double>(state.size(r));
    total += std::lgamma(nr + 1.0);
    for (std::size_t j = 0; j < state.n_items(); ++j) {
      const double T = static_cast<double>(phi.size(j));
      total += std::lgamma(T) - std::lgamma(nr + T);
      for (auto c : state.counts(r, j))
        total += std::lgamma(c + 1.0);
    }
  }
  for (std::size_t i = 0; i < state.n_obs(); ++i)
    for (std::size_t j = 0; j < state.n_items(); ++j)
      total += std::log(phi(i, j)[state.slot(i, j)]);
  if (std::isnan(total))
    return -std::numeric_limits<double>::infinity();
  return total;
}

/// How a new component is weighted against existing ones.
/// `lumped` is the sampler as run: one new-component candidate of weight
/// k P(k+1) prod_j (1/T_j) sum_t phi. `labeled` splits it into k+1
/// candidates of weight k/(k+1) P(k+1) ..., the new component swapping
/// labels with candidate s; this form is exactly reversible on labelled
/// states and is used to verify detailed balance.
enum class Lumping
{
  lumped,
  labeled
};

/// One elementary move, described completely enough to compute its
/// probability: component r and member i chosen in the starting state, the
/// destination (existing label after i is detached, or a new component
/// swapped into label `target`), and the slots given to i.
struct Move
{
  std::size_t component = 0;
  std::size_t observation = 0;
  bool to_new = false;
  std::size_t target = 0;
  std::vector<Slot> slots;
};

enum class MoveClass
{
  stay,
  transfer,
  create,
  merge,
  delete_recreate
};

/// Precomputed tables plus scratch space for the Monte Carlo step.
class GibbsKernel
{
public:
  GibbsKernel(const PhiTensor& phi, KPrior prior)
    : phi_(&phi)
    , prior_(std::move(prior))
  {
    const std::size_t n = phi.n_obs();
    const std::size_t m = phi.n_items();
    prior_.check_covers(n);
    log_prior_.resize(n + 2);
    for (std::size_t k = 0; k < n + 2; ++k)
      log_prior_[k] = k > prior_.max_k() ? -std::numeric_limits<double>::infinity()
                                         : prior_.log_mass(k);
    std::size_t max_t = 1;
    for (auto t : phi.sizes())
      max_t = std::max(max_t, t);
    log_int_.resize(n + max_t + 2);
    for (std::size_t v = 0; v < log_int_.size(); ++v)
      log_int_[v] = std::log(static_cast<double>(v));
    phi_sum_.resize(n * m);
    new_log_factor_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double lf = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (double v : phi(i, j))
          s += v;
        phi_sum_[i * m + j] = s;
        lf += std::log(s / static_cast<double>(phi.size(j)));
      }
      new_log_factor_[i] = lf;
    }
    sums_.resize(n * m + m);
    log_w_.resize(2 * n + 2);
    slot_buf_.resize(m);
  }

  const PhiTensor& phi() const noexcept { return *phi_; }
  const KPrior& prior() const noexcept { return prior_; }

  /// Log-weights of the candidates for detached observation i. Existing
  /// components come first (0..k-1), then the new-component candidate(s).
  /// With k = 0 the single new candidate has log-weight 0 (a forced move).
  std::vector<double> candidate_log_weights(const GibbsState& detached,
                                            std::size_t i,
                                            Lumping lumping = Lumping::lumped)
  {
    const auto count = fill_log_weights(detached, i, lumping);
    return {log_w_.begin(), log_w_.begin() + static_cast<std::ptrdiff_t>(count)};
  }

  /// Categorical probabilities over slots of item j for detached observation
  /// i joining component s (s == k() means a new component).
  std::vector<double> slot_probs(const GibbsState& detached,
                                 std::size_t s,
                                 std::size_t i,
                                 std::size_t j) const
  {
    const auto ph = (*phi_)(i, j);
    std::vector<double> p(ph.size());
    double total = 0.0;
    if (s < detached.k()) {
      const auto m = detached.counts(s, j);
      for (std::size_t t = 0; t < p.size(); ++t)
        total += p[t] = (m[t] + 1.0) * ph[t];
    } else {
      for (std::size_t t = 0; t < p.size(); ++t)
        total += p[t] = ph[t];
    }
    if (!(total > 0.0))
      throw NumericError("slot probabilities vanish for observation " + std::to_string(i + 1) +
                         ", item " + std::to_string(j + 1));
    for (auto& v : p)
      v /= total;
    return p;
  }

  /// One Monte Carlo step: pick a component uniformly, a member uniformly,
  /// detach it (deleting an emptied component and relabelling the last one
  /// into its place), choose a destination among the k existing components
  /// and one new one, then resample the member's slots item by item.
  void step(GibbsState& state, Rng& rng)
  {
    const std::size_t r = uniform_index(rng, state.k());
    const auto mem = state.members(r);
    const std::size_t i = mem[uniform_index(rng, mem.size())];
    state.detach(r, i);

    const std::size_t k = state.k();
    const std::size_t m = phi_->n_items();
    std::size_t s = 0;
    if (k == 0) {
      s = 0;
    } else {
      fill_log_weights(state, i, Lumping::lumped);
      const std::span<double> w(log_w_.data(), k + 1);
      if (!std::isfinite(exp_normalize_in_place(w)))
        throw NumericError("every candidate has zero weight for observation " +
                           std::to_string(i + 1));
      s = sample_categorical(rng, w);
    }

    for (std::size_t j = 0; j < m; ++j) {
      const auto ph = (*phi_)(i, j);
      std::size_t t;
      if (s < k) {
        const auto cnt = state.counts(s, j);
        t = draw_linear(rng, ph.size(), sums_[s * m + j], [&](std::size_t q) {
          return (cnt[q] + 1.0) * ph[q];
        });
      } else {
        t = draw_linear(rng, ph.size(), phi_sum_[i * m + j], [&](std::size_t q) { return ph[q]; });
      }
      if (t == ph.size())
        throw NumericError("slot probabilities vanish for observation " +
                           std::to_string(i + 1) + ", item " + std::to_string(j + 1));
      slot_buf_[j] = static_cast<Slot>(t);
    }
    state.attach(i, s, slot_buf_);
  }

  /// Log probability that one step from `state` performs `move`.
  double transition_log_prob(const GibbsState& state, const Move& move, Lumping lumping)
  {
    const std::size_t k_before = state.k();
    if (move.component >= k_before)
      throw ConfigError("move: component out of range");
    const std::size_t n_r = state.size(move.component);
    GibbsState work = state;
    work.detach(move.component, move.observation);
    const std::size_t k = work.k();
    check_destination(work, move, lumping);

    double lp = -std::log(static_cast<double>(k_before)) - std::log(static_cast<double>(n_r));
    if (k > 0) {
      const auto count = fill_log_weights(work, move.observation, lumping);
      const std::span<const double> lw(log_w_.data(), count);
      const double top = *std::max_element(lw.begin(), lw.end());
      double z = 0.0;
      for (double v : lw)
        z += std::exp(v - top);
      const std::size_t chosen =
        move.to_new ? k + (lumping == Lumping::labeled ? move.target : 0) : move.target;
      lp += lw[chosen] - top - std::log(z);
    }
    const std::size_t dest = move.to_new ? k : move.target;
    for (std::size_t j = 0; j < phi_->n_items(); ++j) {
      const auto p = slot_probs(work, dest, move.observation, j);
      lp += std::log(p[move.slots[j]]);
    }
    return lp;
  }

private:
  /// Inverse-CDF draw over `n` weights summing to `total`. Returns n when
  /// the total is not positive.
  template <class Weight>
  static std::size_t draw_linear(Rng& rng, std::size_t n, double total, Weight&& weight)
  {
    if (!(total > 0.0))
      return n;
    double u = uniform01(rng) * total;
    for (std::size_t q = 0; q + 1 < n; ++q) {
      const double w = weight(q);
      if (u < w)
        return q;
      u -= w;
    }
    // rounding may push u past the final weight; take the last positive one
    for (std::size_t q = n; q-- > 0;)
      if (weight(q) > 0.0)
        return q;
    return n;
  }

  void check_destination(const GibbsState& detached, const Move& move, Lumping lumping) const
  {
    const std::size_t k = detached.k();
    if (move.slots.size() != phi_->n_items())
      throw ConfigError("move: wrong number of slots");
    for (std::size_t j = 0; j < move.slots.size(); ++j)
      if (move.slots[j] >= phi_->size(j))
        throw ConfigError("move: slot out of range");
    if (move.to_new) {
      if (lumping == Lumping::lumped ? move.target != k : move.target > k)
        throw ConfigError("move: illegal new-component target");
    } else if (move.target >= k) {
      throw ConfigError("move: illegal existing-component target");
    }
  }

  /// Writes candidate log-weights into log_w_ and the per-(s, j) slot
  /// normalizers sum_t (m_sjt + 1) phi_ijt into sums_. Returns the count.
  std::size_t fill_log_weights(const GibbsState& st, std::size_t i, Lumping lumping)
  {
    const std::size_t k = st.k();
    const std::size_t n = phi_->n_obs();
    const std::size_t m = phi_->n_items();
    if (k == 0) {
      log_w_[0] = 0.0;
      return 1;
    }
    const auto row = phi_->row(i);
    const double common = log_int_[n - k] - log_int_[k] + log_prior_[k];
    for (std::size_t s = 0; s < k; ++s) {
      const double ns = static_cast<double>(st.size(s));
      double prod = 1.0;
      double acc = common;
      for (std::size_t j = 0; j < m; ++j) {
        const auto cnt = st.counts(s, j);
        const double* ph = row.data() + phi_->offset(j);
        double sum = 0.0;
        for (std::size_t t = 0; t < cnt.size(); ++t)
          sum += (cnt[t] + 1.0) * ph[t];
        sums_[s * m + j] = sum;
        prod *= sum / (ns + static_cast<double>(cnt.size()));
        if (prod < 1e-250 || prod > 1e250) {
          acc += std::log(prod);
          prod = 1.0;
        }
      }
      log_w_[s] = acc + std::log(prod);
    }
    if (lumping == Lumping::lumped) {
      log_w_[k] = log_int_[k] + log_prior_[k + 1] + new_log_factor_[i];
      return k + 1;
    }
    const double each = log_int_[k] - log_int_[k + 1] + log_prior_[k + 1] + new_log_factor_[i];
    for (std::size_t s = 0; s <= k; ++s)
      log_w_[k + s] = each;
    return 2 * k + 1;
  }

  const PhiTensor* phi_;
  KPrior prior_;
  std::vector<double> log_prior_;
  std::vector<double> log_int_;
  std::vector<double> phi_sum_;
  std::vector<double> new_log_factor_;
  std::vector<double> sums_;
  std::vector<double> log_w_;
  std::vector<Slot> slot_buf_;
};

/// Candidate weights w_1..w_k, w_{k+1} for detached observation i,
/// exponentiated after subtracting the largest log-weight.
inline std::vector<double>
candidate_weights(const GibbsState& detached,
                  std::size_t i,
                  const PhiTensor& phi,
                  const KPrior& prior)
{
  GibbsKernel kernel(phi, prior);
  auto w = kernel.candidate_log_weights(detached, i);
  if (!std::isfinite(exp_normalize_in_place(w)))
    throw NumericError("every candidate has zero weight for observation " +
                       std::to_string(i + 1));
  return w;
}

/// Slot distribution for detached observation i joining component s
/// (s == k() for a new component).
inline std::vector<double>
slot_probs(const GibbsState& detached,
           std::size_t s,
           std::size_t i,
           std::size_t j,
           const PhiTensor& phi)
{
  GibbsKernel kernel(phi, KPrior::uniform(phi.n_obs()));
  return kernel.slot_probs(detached, s, i, j);
}

/// Convenience single step; builds the kernel tables on every call.
inline void
gibbs_step(GibbsState& state, const PhiTensor& phi, const KPrior& prior, Rng& rng)
{
  GibbsKernel kernel(phi, prior);
  kernel.step(state, rng);
}

/// Deterministic application of a move (labelled semantics; a lumped move is
/// the labelled move whose new component keeps label k).
inline GibbsState
apply_move(const GibbsState& state, const Move& move)
{
  GibbsState next = state;
  next.detach(move.component, move.observation);
  const std::size_t k = next.k();
  if (move.to_new) {
    if (move.target > k)
      throw ConfigError("move: illegal new-component target");
    next.attach(move.observation, k, move.slots);
    if (move.target != k)
      next.swap_labels(k, move.target);
  } else {
    if (move.target >= k)
      throw ConfigError("move: illegal existing-component target");
    next.attach(move.observation, move.target, move.slots);
  }
  return next;
}

inline MoveClass
classify_move(const GibbsState& state, const Move& move)
{
  const bool deletes = state.size(move.component) == 1;
  if (deletes)
    return move.to_new ? MoveClass::delete_recreate : MoveClass::merge;
  if (move.to_new)
    return MoveClass::create;
  // with no deletion, post-detach labels equal pre-move labels
  return move.target == move.component ? MoveClass::stay : MoveClass::transfer;
}

/// The move that takes apply_move(state, move) back to `state`: exactly for
/// labelled semantics, up to a permutation of labels for lumped semantics.
inline Move
reverse_move(const GibbsState& state, const Move& move, Lumping lumping)
{
  const GibbsState next = apply_move(state, move);
  const std::size_t i = move.observation;
  Move back;
  back.observation = i;
  back.component = next.component_of(i);
  const auto old_slots = state.slots_of(i);
  back.slots.assign(old_slots.begin(), old_slots.end());

  GibbsState probe = next;
  probe.detach(back.component, i);
  const std::size_t k = probe.k();
  const auto matches = [&](const GibbsState& candidate) {
    return lumping == Lumping::labeled ? candidate.same_labeled(state)
                                       : candidate.same_unlabeled(state);
  };
  for (std::size_t s = 0; s < k; ++s) {
    back.to_new = false;
    back.target = s;
    if (matches(apply_move(next, back)))
      return back;
  }
  back.to_new = true;
  for (std::size_t s = (lumping == Lumping::labeled ? 0 : k); s <= k; ++s) {
    back.target = s;
    if (matches(apply_move(next, back)))
      return back;
  }
  throw Error("no reverse move found");
}

// ---------------------------------------------------------------------------
// Chains

enum class InitKind
{
  all_in_one,
  singletons,
  random
};

struct SamplerOptions
{
  std::size_t burn_in_sweeps = 2500;
  std::size_t sample_sweeps = 25000;
  std::size_t stride = 1;
  std::uint64_t seed = 0;
  InitKind init = InitKind::all_in_one;
  std::size_t init_k = 1;
  /// Upper bound on stored labels+slots (entries) for the in-memory
  /// SampleSet overload.
  std::size_t max_stored_entries = std::size_t{1} << 28;
};

struct Snapshot
{
  std::size_t sweep = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> g; // 0-based labels
  std::vector<Slot> h;          // row-major N x M

  std::vector<std::size_t> labels() const { return {g.begin(), g.end()}; }
};

/// Recorded draws plus the run configuration that produced them.
struct SampleSet
{
  std::size_t n_obs = 0;
  std::size_t n_items = 0;
  std::vector<std::size_t> sizes;
  std::vector<Snapshot> samples;
  std::size_t burn_in = 0;
  std::size_t stride = 1;
  std::uint64_t seed = 0;
  std::string prior = "uniform";
  double steps_per_second = 0.0;
};

struct RunStats
{
  std::uint64_t steps = 0;
  double seconds = 0.0;
  double steps_per_second = 0.0;
  std::size_t recorded = 0;
};

inline Snapshot
snapshot_of(const GibbsState& state, std::size_t sweep)
{
  Snapshot s;
  s.sweep = sweep;
  s.k = state.k();
  const auto g = state.labels();
  s.g.assign(g.begin(), g.end());
  s.h.assign(state.slots().begin(), state.slots().end());
  return s;
}

inline GibbsState
initial_state(const PhiTensor& phi, const SamplerOptions& opts, Rng& rng)
{
  switch (opts.init) {
    case InitKind::all_in_one: return GibbsState::all_in_one(phi);
    case InitKind::singletons: return GibbsState::singletons(phi);
    case InitKind::random: return GibbsState::random(phi, opts.init_k, rng);
  }
  return GibbsState::all_in_one(phi);
}

/// Runs one chain: burn_in_sweeps * N discarded steps, then sample_sweeps * N
/// steps with `sink(state, sweep)` called after every `stride` sweeps.
template <class Sink>
RunStats
run_sampler(const PhiTensor& phi, const KPrior& prior, const SamplerOptions& opts, Sink&& sink)
{
  if (opts.sample_sweeps == 0)
    throw ConfigError("sample_sweeps is 0: nothing to sample");
  if (opts.stride == 0)
    throw ConfigError("stride must be positive");
  if (phi.n_obs() == 0)
    throw ConfigError("no observations");
  Rng rng(opts.seed);
  GibbsKernel kernel(phi, prior);
  GibbsState state = initial_state(phi, opts, rng);
  const std::size_t n = phi.n_obs();

  RunStats stats;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t sweep = 0; sweep < opts.burn_in_sweeps; ++sweep)
    for (std::size_t q = 0; q < n; ++q)
      kernel.step(state, rng);
  for (std::size_t sweep = 1; sweep <= opts.sample_sweeps; ++sweep) {
    for (std::size_t q = 0; q < n; ++q)
      kernel.step(state, rng);
    if (sweep % opts.stride == 0) {
      sink(static_cast<const GibbsState&>(state), opts.burn_in_sweeps + sweep);
      ++stats.recorded;
    }
  }
  const auto stop = std::chrono::steady_clock::now();
  stats.steps = static_cast<std::uint64_t>(opts.burn_in_sweeps + opts.sample_sweeps) * n;
  stats.seconds = std::chrono::duration<double>(stop - start).count();
  stats.steps_per_second =
    stats.seconds > 0.0 ? static_cast<double>(stats.steps) / stats.seconds : 0.0;
  return stats;
}

/// Runs one chain and keeps every recorded snapshot in memory.
inline SampleSet
run_sampler(const PhiTensor& phi, const KPrior& prior, const SamplerOptions& opts)
{
  const std::size_t records = opts.stride ? opts.sample_sweeps / opts.stride : 0;
  const std::size_t entries = records * phi.n_obs() * (1 + phi.n_items());
  if (entries > opts.max_stored_entries)
    throw GuardError("storing " + std::to_string(records) + " snapshots of N = " +
                     std::to_string(phi.n_obs()) +
                     " exceeds the in-memory budget; stream the samples instead");
  SampleSet set;
  set.n_obs = phi.n_obs();
  set.n_items = phi.n_items();
  set.sizes = phi.sizes();
  set.burn_in = opts.burn_in_sweeps;
  set.stride = opts.stride;
  set.seed = opts.seed;
  set.prior = prior.to_string();
  set.samples.reserve(records);
  const auto stats = run_sampler(phi, prior, opts, [&](const GibbsState& s, std::size_t sweep) {
    set.samples.push_back(snapshot_of(s, sweep));
  });
  set.steps_per_second = stats.steps_per_second;
  return set;
}

} // namespace mixbasis
