#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "basis.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace mixbasis {

/// Mixing proportions pi_r and per-(component, item) slot weights
/// theta_rjt. theta is stored flat, component-major, items laid out like a
/// PhiTensor row.
struct EmParams
{
  std::size_t k = 0;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> offsets;
  std::vector<double> pi;
  std::vector<double> theta;

  EmParams() = default;

  EmParams(std::size_t n_components, std::vector<std::size_t> item_sizes)
    : k(n_components)
    , sizes(std::move(item_sizes))
  {
    offsets.push_back(0);
    for (auto t : sizes)
      offsets.push_back(offsets.back() + t);
    pi.assign(k, k ? 1.0 / static_cast<double>(k) : 0.0);
    theta.assign(k * stride(), 0.0);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t j = 0; j < sizes.size(); ++j)
        for (auto& v : this->theta_of(r, j))
          v = 1.0 / static_cast<double>(sizes[j]);
  }

  std::size_t n_items() const noexcept { return sizes.size(); }
  std::size_t stride() const noexcept { return offsets.empty() ? 0 : offsets.back(); }

  std::span<double> theta_of(std::size_t r, std::size_t j)
  {
    return {theta.data() + r * stride() + offsets[j], sizes[j]};
  }
  std::span<const double> theta_of(std::size_t r, std::size_t j) const
  {
    return {theta.data() + r * stride() + offsets[j], sizes[j]};
  }
};

/// Component posteriors q^i_r and the slot factors
/// theta_rjt phi_ijt / sum_u theta_rju phi_iju, so that
/// q^{ij}_{rt} = factor * q^i_r.
struct Responsibilities
{
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t stride = 0;
  std::vector<std::size_t> offsets;
  std::vector<double> q_comp;      // n x k
  std::vector<double> slot_factor; // n x k x stride

  double comp(std::size_t i, std::size_t r) const { return q_comp[i * k + r]; }

  std::span<const double> factor(std::size_t i, std::size_t r, std::size_t j) const
  {
    return {slot_factor.data() + (i * k + r) * stride + offsets[j],
            offsets[j + 1] - offsets[j]};
  }

  /// q^{ij}_{rt}
  double slot(std::size_t i, std::size_t j, std::size_t r, std::size_t t) const
  {
    return factor(i, r, j)[t] * comp(i, r);
  }
};

namespace detail {

inline void
check_dims(const PhiTensor& phi, const EmParams& params)
{
  if (params.sizes != phi.sizes())
    throw ConfigError("parameter dimensions do not match the phi tensor");
  if (params.k == 0)
    throw ConfigError("need at least one component");
}

/// Per-observation log of sum_r pi_r prod_j sum_t theta phi. Fills the
/// responsibilities when `resp` is non-null. Component weights carry a
/// binary exponent whenever they leave [2^-500, 2^500] and are normalized
/// against the largest exponent.
inline double
em_expectation(const PhiTensor& phi, const EmParams& params, Responsibilities* resp)
{
  check_dims(phi, params);
  const std::size_t n = phi.n_obs();
  const std::size_t m = phi.n_items();
  const std::size_t k = params.k;
  const std::size_t stride = phi.stride();
  if (resp) {
    resp->n = n;
    resp->k = k;
    resp->stride = stride;
    resp->offsets = params.offsets;
    resp->q_comp.assign(n * k, 0.0);
    resp->slot_factor.assign(n * k * stride, 0.0);
  }
  constexpr double ln2 = 0.69314718055994530942;
  std::vector<double> mant(k);
  std::vector<long> expo(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    long top = std::numeric_limits<long>::min();
    for (std::size_t r = 0; r < k; ++r) {
      double w = params.pi[r];
      long e = 0;
      for (std::size_t j = 0; j < m && w > 0.0; ++j) {
        const auto th = params.theta_of(r, j);
        const auto ph = phi(i, j);
        double s = 0.0;
        for (std::size_t t = 0; t < th.size(); ++t)
          s += th[t] * ph[t];
        w *= s;
        if (w != 0.0 && (w < 0x1p-500 || w > 0x1p500)) {
          int ex = 0;
          w = std::frexp(w, &ex);
          e += ex;
        }
        if (resp && s > 0.0) {
          const double inv = 1.0 / s;
          double* f = resp->slot_factor.data() + (i * k + r) * stride + phi.offset(j);
          for (std::size_t t = 0; t < th.size(); ++t)
            f[t] = th[t] * ph[t] * inv;
        }
      }
      if (w > 0.0)
        top = std::max(top, e);
      mant[r] = w;
      expo[r] = e;
    }
    if (top == std::numeric_limits<long>::min())
      throw NumericError("observation " + std::to_string(i + 1) +
                         " has zero likelihood under every component");
    double z = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      if (mant[r] > 0.0 && expo[r] != top)
        mant[r] = std::ldexp(mant[r], static_cast<int>(expo[r] - top));
      z += mant[r];
    }
    total += std::log(z) + static_cast<double>(top) * ln2;
    if (resp) {
      const double inv = 1.0 / z;
      for (std::size_t r = 0; r < k; ++r)
        resp->q_comp[i * k + r] = mant[r] * inv;
    }
  }
  return total;
}

} // namespace detail

/// E-step: posterior over components and slots given (pi, theta). Computed in
/// log space with per-observation max subtraction.
inline Responsibilities
e_step(const PhiTensor& phi, const EmParams& params)
{
  Responsibilities resp;
  detail::em_expectation(phi, params, &resp);
  return resp;
}

/// log P(pi, theta | x) up to a parameter-independent constant:
/// sum_i log sum_r pi_r prod_j sum_t theta_rjt phi_ijt.
inline double
log_marginal_posterior_em(const PhiTensor& phi, const EmParams& params)
{
  return detail::em_expectation(phi, params, nullptr);
}

struct MStepResult
{
  EmParams params;
  std::vector<bool> starved;
};

/// Slot weights below this are set to zero so that slots the data never
/// uses stop decaying through subnormal values.
inline constexpr double min_theta = 1e-250;

/// M-step with starvation reporting. A component with zero total
/// responsibility keeps pi_r = 0 and gets uniform theta.
inline MStepResult
m_step_checked(const Responsibilities& resp, const PhiTensor& phi)
{
  const std::size_t n = resp.n;
  const std::size_t k = resp.k;
  const std::size_t m = phi.n_items();
  MStepResult out{EmParams(k, phi.sizes()), std::vector<bool>(k, false)};
  auto& params = out.params;

  std::vector<double> mass(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < k; ++r)
      mass[r] += resp.comp(i, r);

  double pi_total = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    params.pi[r] = mass[r] / static_cast<double>(n);
    pi_total += params.pi[r];
  }
  for (auto& p : params.pi)
    p /= pi_total;

  for (std::size_t r = 0; r < k; ++r) {
    if (!(mass[r] > 0.0)) {
      out.starved[r] = true;
      continue; // theta stays uniform from the constructor
    }
    for (std::size_t j = 0; j < m; ++j) {
      auto th = params.theta_of(r, j);
      std::fill(th.begin(), th.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double q = resp.comp(i, r);
        if (q == 0.0)
          continue;
        const auto f = resp.factor(i, r, j);
        for (std::size_t t = 0; t < th.size(); ++t)
          th[t] += q * f[t];
      }
      double s = 0.0;
      for (auto& v : th) {
        if (v < min_theta * mass[r])
          v = 0.0;
        s += v;
      }
      if (s > 0.0) {
        for (auto& v : th)
          v /= s;
      } else {
        for (auto& v : th)
          v = 1.0 / static_cast<double>(th.size());
      }
    }
  }
  return out;
}

/// M-step: pi_r = (1/N) sum_i q^i_r and
/// theta_rjt = sum_i q^{ij}_{rt} / sum_i q^i_r, renormalized.
inline EmParams
m_step(const Responsibilities& resp, const PhiTensor& phi)
{
  return m_step_checked(resp, phi).params;
}

/// Largest absolute difference over all pi and theta entries.
inline double
max_param_change(const EmParams& a, const EmParams& b)
{
  double d = 0.0;
  for (std::size_t r = 0; r < a.pi.size(); ++r)
    d = std::max(d, std::abs(a.pi[r] - b.pi[r]));
  for (std::size_t q = 0; q < a.theta.size(); ++q)
    d = std::max(d, std::abs(a.theta[q] - b.theta[q]));
  return d;
}

/// Uniform pi, theta rows from a flat Dirichlet.
inline EmParams
random_em_params(std::size_t k, const std::vector<std::size_t>& sizes, Rng& rng)
{
  EmParams p(k, sizes);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      const auto draw = sample_dirichlet(rng, sizes[j]);
      std::copy(draw.begin(), draw.end(), p.theta_of(r, j).begin());
    }
  return p;
}

struct EmOptions
{
  std::size_t max_iter = 10000;
  double tol = 1e-10;
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
};

struct EmFit
{
  EmParams params;
  Responsibilities resp;
  double log_post = 0.0;
  std::size_t iters = 0;
  bool converged = false;
  std::vector<double> trace;
  std::vector<std::string> warnings;
  std::size_t restart = 0;
};

/// Runs EM from a given starting point.
inline EmFit
run_em(const PhiTensor& phi, EmParams init, std::size_t max_iter, double tol)
{
  EmFit fit;
  fit.params = std::move(init);
  fit.log_post = detail::em_expectation(phi, fit.params, &fit.resp);
  fit.trace.push_back(fit.log_post);
  std::vector<bool> starved(fit.params.k, false);
  for (std::size_t it = 0; it < max_iter; ++it) {
    auto step = m_step_checked(fit.resp, phi);
    for (std::size_t r = 0; r < starved.size(); ++r)
      starved[r] = starved[r] || step.starved[r];
    const double change = max_param_change(fit.params, step.params);
    fit.params = std::move(step.params);
    fit.log_post = detail::em_expectation(phi, fit.params, &fit.resp);
    fit.trace.push_back(fit.log_post);
    fit.iters = it + 1;
    if (change < tol) {
      fit.converged = true;
      break;
    }
  }
  for (std::size_t r = 0; r < starved.size(); ++r)
    if (starved[r])
      fit.warnings.push_back("component " + std::to_string(r + 1) +
                             " lost all responsibility and was reset to uniform theta");
  return fit;
}

/// Best-of-restarts EM for fixed k. Restart s starts from uniform pi and
/// Dirichlet(1) theta drawn from a generator seeded with `opts.seed`.
inline EmFit
fit_em(const PhiTensor& phi, std::size_t k, const EmOptions& opts = {})
{
  if (k < 1 || k > phi.n_obs())
    throw ConfigError("k must lie in 1.." + std::to_string(phi.n_obs()) + ", got " +
                      std::to_string(k));
  if (opts.restarts < 1)
    throw ConfigError("restarts must be at least 1");
  Rng rng(opts.seed);
  EmFit best;
  for (std::size_t s = 0; s < opts.restarts; ++s) {
    auto fit = run_em(phi, random_em_params(k, phi.sizes(), rng), opts.max_iter, opts.tol);
    fit.restart = s;
    if (s == 0 || fit.log_post > best.log_post)
      best = std::move(fit);
  }
  return best;
}

/// Most probable component per observation; ties go to the lowest index.
/// Labels are 0-based.
inline std::vector<std::size_t>
hard_assign(const Responsibilities& resp)
{
  std::vector<std::size_t> out(resp.n, 0);
  for (std::size_t i = 0; i < resp.n; ++i) {
    double best = resp.comp(i, 0);
    for (std::size_t r = 1; r < resp.k; ++r)
      if (resp.comp(i, r) > best) {
        best = resp.comp(i, r);
        out[i] = r;
      }
  }
  return out;
}

} // namespace mixbasis
