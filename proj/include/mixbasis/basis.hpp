#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "data.hpp"
#include "detail/text.hpp"
#include "error.hpp"

namespace mixbasis {

// ---------------------------------------------------------------------------
// Basis families. Each function is a fixed, non-negative density normalized
// over its domain; only the mixing weights over a family are ever fitted.

/// Bernstein density (d+1) C(d,t) x^t (1-x)^(d-t) on [0,1], with 0^0 = 1.
inline double
bernstein_eval(int degree, int t, double x)
{
  if (degree < 0 || t < 0 || t > degree)
    throw DomainError("bernstein: index " + std::to_string(t) + " outside 0.." +
                      std::to_string(degree));
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError("bernstein: x = " + detail::format_double(x) + " outside [0,1]");
  const double d = degree;
  if (x == 0.0)
    return t == 0 ? d + 1.0 : 0.0;
  if (x == 1.0)
    return t == degree ? d + 1.0 : 0.0;
  const double log_coef = std::lgamma(d + 2.0) - std::lgamma(t + 1.0) - std::lgamma(d - t + 1.0);
  return std::exp(log_coef + t * std::log(x) + (d - t) * std::log1p(-x));
}

/// Gamma density (xT)^t / t! * T exp(-xT) on [0, inf): shape t+1, rate T.
inline double
gamma_eval(int size, int t, double x)
{
  if (size < 1 || t < 0 || t >= size)
    throw DomainError("gamma: index " + std::to_string(t) + " outside 0.." +
                      std::to_string(size - 1));
  if (!(x >= 0.0) || std::isinf(x))
    throw DomainError("gamma: x = " + detail::format_double(x) + " outside [0,inf)");
  const double T = size;
  if (x == 0.0)
    return t == 0 ? T : 0.0;
  return std::exp(t * std::log(x * T) - std::lgamma(t + 1.0) + std::log(T) - x * T);
}

/// Upper tail of the gamma basis function t: the integral from x to infinity.
/// Closed form for integer shape.
inline double
gamma_upper_tail(int size, int t, double x)
{
  const double z = x * size;
  double term = 1.0;
  double sum = 1.0;
  for (int s = 1; s <= t; ++s) {
    term *= z / s;
    sum += term;
  }
  return std::exp(-z) * sum;
}

/// Unit top hat on [t, t+1). The last bin of a family of `size` bins also
/// accepts x == size so the closed domain [0, size] is covered.
inline double
tophat_eval(int size, int t, double x)
{
  if (size < 1 || t < 0 || t >= size)
    throw DomainError("tophat: index " + std::to_string(t) + " outside 0.." +
                      std::to_string(size - 1));
  if (x >= t && x < t + 1.0)
    return 1.0;
  if (t == size - 1 && x == static_cast<double>(size))
    return 1.0;
  return 0.0;
}

/// Gaussian with mean t and variance |t|+1; t is the signed index
/// -(size-1)/2 .. (size-1)/2.
inline double
gaussian_eval(int size, int t, double x)
{
  if (size < 1 || size % 2 == 0)
    throw DomainError("gauss: size must be odd, got " + std::to_string(size));
  const int half = (size - 1) / 2;
  if (t < -half || t > half)
    throw DomainError("gauss: index " + std::to_string(t) + " outside " +
                      std::to_string(-half) + ".." + std::to_string(half));
  const double var = std::abs(t) + 1.0;
  const double dx = x - t;
  return std::exp(-dx * dx / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Normalizing constant T 2^(T-1) B((T+1)/2, (T+1)/2) of the circular
/// trigonometric basis.
inline double
trig_constant(int size)
{
  const double T = size;
  const double h = 0.5 * (T + 1.0);
  return std::exp(std::log(T) + (T - 1.0) * std::numbers::ln2 + 2.0 * std::lgamma(h) -
                  std::lgamma(2.0 * h));
}

/// Circular basis A cos^(T-1)[pi (x - t/T)], x taken modulo 1.
inline double
trig_eval(int size, int t, double x)
{
  if (size < 1 || size % 2 == 0)
    throw DomainError("trig: size must be odd, got " + std::to_string(size));
  if (t < 0 || t >= size)
    throw DomainError("trig: index " + std::to_string(t) + " outside 0.." +
                      std::to_string(size - 1));
  if (!std::isfinite(x))
    throw DomainError("trig: x must be finite");
  const double wrapped = x - std::floor(x);
  const double c = std::cos(std::numbers::pi * (wrapped - static_cast<double>(t) / size));
  return trig_constant(size) * std::pow(c, size - 1);
}

// ---------------------------------------------------------------------------

enum class Family
{
  bernstein,
  gamma,
  tophat,
  gaussian,
  trig,
  tabulated
};

struct Domain
{
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;

  bool contains(double x) const
  {
    if (!std::isfinite(x))
      return false;
    if (periodic)
      return true;
    return x >= lo && x <= hi;
  }

  std::string to_string() const
  {
    if (periodic)
      return "circle [" + detail::format_double(lo) + "," + detail::format_double(hi) + ")";
    const auto end = [](double v) {
      return std::isinf(v) ? std::string(v < 0 ? "-inf" : "inf") : detail::format_double(v);
    };
    return std::string(std::isinf(lo) ? "(" : "[") + end(lo) + "," + end(hi) +
           (std::isinf(hi) ? ")" : "]");
  }
};

/// A user-supplied basis: functions tabulated on a common ascending grid,
/// linearly interpolated and renormalized to unit area.
struct TabulatedBasis
{
  std::vector<double> grid;
  std::vector<std::vector<double>> functions;
  std::string source;

  double eval(std::size_t t, double x) const
  {
    const auto& f = functions[t];
    if (x <= grid.front())
      return x == grid.front() ? f.front() : 0.0;
    if (x >= grid.back())
      return x == grid.back() ? f.back() : 0.0;
    const auto hi = static_cast<std::size_t>(
      std::upper_bound(grid.begin(), grid.end(), x) - grid.begin());
    const auto lo = hi - 1;
    const double w = (x - grid[lo]) / (grid[hi] - grid[lo]);
    return (1.0 - w) * f[lo] + w * f[hi];
  }
};

/// The basis family and size used for one item.
class BasisSpec
{
public:
  static BasisSpec bernstein(int degree)
  {
    if (degree < 0)
      throw ConfigError("bernstein degree must be >= 0");
    return BasisSpec(Family::bernstein, degree + 1, degree);
  }

  static BasisSpec gamma(int size)
  {
    if (size < 1)
      throw ConfigError("gamma basis size must be >= 1");
    return BasisSpec(Family::gamma, size, 0);
  }

  static BasisSpec tophat(int size)
  {
    if (size < 1)
      throw ConfigError("tophat basis size must be >= 1");
    return BasisSpec(Family::tophat, size, 0);
  }

  static BasisSpec gaussian(int size)
  {
    if (size < 1 || size % 2 == 0)
      throw ConfigError("gauss basis size must be odd, got " + std::to_string(size));
    return BasisSpec(Family::gaussian, size, 0);
  }

  static BasisSpec trig(int size)
  {
    if (size < 1 || size % 2 == 0)
      throw ConfigError("trig basis size must be odd, got " + std::to_string(size));
    return BasisSpec(Family::trig, size, 0);
  }

  static BasisSpec tabulated(std::vector<double> grid,
                             std::vector<std::vector<double>> functions,
                             std::string source = "table")
  {
    if (grid.size() < 2)
      throw ConfigError("tabulated basis needs at least two grid points");
    if (functions.empty())
      throw ConfigError("tabulated basis needs at least one function");
    for (std::size_t p = 1; p < grid.size(); ++p)
      if (!(grid[p] > grid[p - 1]))
        throw ConfigError("tabulated basis grid must be strictly ascending");
    for (auto& f : functions) {
      if (f.size() != grid.size())
        throw ConfigError("tabulated basis column length differs from grid");
      double area = 0.0;
      for (std::size_t p = 0; p < f.size(); ++p) {
        if (!(f[p] >= 0.0) || !std::isfinite(f[p]))
          throw ConfigError("tabulated basis values must be finite and non-negative");
        if (p > 0)
          area += 0.5 * (f[p] + f[p - 1]) * (grid[p] - grid[p - 1]);
      }
      if (!(area > 0.0))
        throw ConfigError("tabulated basis function has zero area");
      for (auto& v : f)
        v /= area;
    }
    BasisSpec spec(Family::tabulated, static_cast<int>(functions.size()), 0);
    spec.table_ = std::make_shared<const TabulatedBasis>(
      TabulatedBasis{std::move(grid), std::move(functions), std::move(source)});
    return spec;
  }

  Family family() const noexcept { return family_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(size_); }
  int degree() const noexcept { return degree_; }
  const TabulatedBasis* table() const noexcept { return table_.get(); }

  Domain domain() const
  {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (family_) {
      case Family::bernstein: return {0.0, 1.0, false};
      case Family::gamma: return {0.0, inf, false};
      case Family::tophat: return {0.0, static_cast<double>(size_), false};
      case Family::gaussian: return {-inf, inf, false};
      case Family::trig: return {0.0, 1.0, true};
      case Family::tabulated: return {table_->grid.front(), table_->grid.back(), false};
    }
    return {};
  }

  /// Value of function t (0-based, uniform across families) at x.
  double operator()(std::size_t t, double x) const
  {
    const int ti = static_cast<int>(t);
    switch (family_) {
      case Family::bernstein: return bernstein_eval(degree_, ti, x);
      case Family::gamma: return gamma_eval(size_, ti, x);
      case Family::tophat: return tophat_eval(size_, ti, x);
      case Family::gaussian: return gaussian_eval(size_, ti - (size_ - 1) / 2, x);
      case Family::trig: return trig_eval(size_, ti, x);
      case Family::tabulated:
        if (t >= size())
          throw DomainError("tabulated: index out of range");
        return table_->eval(t, x);
    }
    return 0.0;
  }

  /// Signed centre index for the Gaussian family, t otherwise.
  int signed_index(std::size_t t) const
  {
    return family_ == Family::gaussian ? static_cast<int>(t) - (size_ - 1) / 2
                                       : static_cast<int>(t);
  }

  std::string to_string() const
  {
    switch (family_) {
      case Family::bernstein: return "bernstein:d=" + std::to_string(degree_);
      case Family::gamma: return "gamma:T=" + std::to_string(size_);
      case Family::tophat: return "tophat:T=" + std::to_string(size_);
      case Family::gaussian: return "gauss:T=" + std::to_string(size_);
      case Family::trig: return "trig:T=" + std::to_string(size_);
      case Family::tabulated: return "file:" + table_->source;
    }
    return {};
  }

  bool operator==(const BasisSpec& other) const
  {
    return family_ == other.family_ && size_ == other.size_ && degree_ == other.degree_ &&
           table_ == other.table_;
  }

private:
  BasisSpec(Family f, int size, int degree)
    : family_(f)
    , size_(size)
    , degree_(degree)
  {}

  Family family_;
  int size_;
  int degree_;
  std::shared_ptr<const TabulatedBasis> table_;
};

/// Reads a tabulated basis: first column is the grid, each further column one
/// function. An optional non-numeric header row is skipped.
inline BasisSpec
load_tabulated_basis(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open basis table " + path);
  std::vector<double> grid;
  std::vector<std::vector<double>> funcs;
  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#')
      continue;
    const auto cells = detail::split(body, ',');
    if (cells.size() < 2)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": need a grid column and at least one function column");
    std::vector<double> row;
    for (auto c : cells) {
      const auto v = detail::parse_double(c);
      if (!v) {
        row.clear();
        break;
      }
      row.push_back(*v);
    }
    if (row.empty()) {
      if (first_row) {
        first_row = false;
        continue;
      }
      throw ConfigError(path + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    first_row = false;
    if (funcs.empty())
      funcs.resize(row.size() - 1);
    if (row.size() - 1 != funcs.size())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": ragged row");
    grid.push_back(row[0]);
    for (std::size_t t = 0; t < funcs.size(); ++t)
      funcs[t].push_back(row[t + 1]);
  }
  return BasisSpec::tabulated(std::move(grid), std::move(funcs), path);
}

/// Parses `bernstein:d=4`, `gamma:T=5`, `tophat:T=10`, `gauss:T=7`,
/// `trig:T=5` or `file:<path>`.
inline BasisSpec
parse_basis(std::string_view text)
{
  const auto s = detail::trim(text);
  const auto colon = s.find(':');
  if (colon == std::string_view::npos)
    throw ConfigError("basis '" + std::string(s) + "' needs the form family:param=value");
  const auto family = s.substr(0, colon);
  const auto rest = s.substr(colon + 1);
  if (family == "file")
    return load_tabulated_basis(std::string(rest));

  const auto eq = rest.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("basis '" + std::string(s) + "' is missing '='");
  const auto key = detail::trim(rest.substr(0, eq));
  const auto value = detail::parse_int(rest.substr(eq + 1));
  if (!value)
    throw ConfigError("basis '" + std::string(s) + "' has a non-integer parameter");
  const int v = static_cast<int>(*value);
  if (family == "bernstein" && key == "d")
    return BasisSpec::bernstein(v);
  if (family == "gamma" && key == "T")
    return BasisSpec::gamma(v);
  if (family == "tophat" && key == "T")
    return BasisSpec::tophat(v);
  if ((family == "gauss" || family == "gaussian") && key == "T")
    return BasisSpec::gaussian(v);
  if (family == "trig" && key == "T")
    return BasisSpec::trig(v);
  throw ConfigError("unknown basis '" + std::string(s) +
                    "'; expected bernstein:d=, gamma:T=, tophat:T=, gauss:T=, trig:T= or file:");
}

// ---------------------------------------------------------------------------
// Precomputed basis values

/// phi[i][j][t] = Phi_jt(x_ij), stored row-major with the slots of every
/// item for one observation contiguous. The only input either fitter needs.
class PhiTensor
{
public:
  PhiTensor() = default;

  PhiTensor(std::size_t n_obs, std::vector<std::size_t> sizes)
    : n_(n_obs)
    , sizes_(std::move(sizes))
  {
    offsets_.assign(1, 0);
    for (auto t : sizes_) {
      if (t == 0)
        throw ConfigError("every item needs at least one basis function");
      offsets_.push_back(offsets_.back() + t);
    }
    values_.assign(n_ * stride(), 0.0);
  }

  std::size_t n_obs() const noexcept { return n_; }
  std::size_t n_items() const noexcept { return sizes_.size(); }
  std::size_t size(std::size_t j) const { return sizes_[j]; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t offset(std::size_t j) const { return offsets_[j]; }
  /// Total slots over all items.
  std::size_t stride() const noexcept { return offsets_.back(); }

  std::span<const double> operator()(std::size_t i, std::size_t j) const
  {
    return {values_.data() + i * stride() + offsets_[j], sizes_[j]};
  }
  std::span<double> at(std::size_t i, std::size_t j)
  {
    return {values_.data() + i * stride() + offsets_[j], sizes_[j]};
  }
  std::span<const double> row(std::size_t i) const
  {
    return {values_.data() + i * stride(), stride()};
  }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const PhiTensor&) const = default;

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_{0};
  std::vector<double> values_;
};

/// Evaluates every basis function at every datum of a row-major n x M block.
inline PhiTensor
precompute_phi(std::span<const double> x, std::size_t n_obs, std::span<const BasisSpec> specs)
{
  const std::size_t m = specs.size();
  if (x.size() != n_obs * m)
    throw ConfigError("data has " + std::to_string(x.size()) + " values, expected " +
                      std::to_string(n_obs) + " x " + std::to_string(m));
  std::vector<std::size_t> sizes;
  for (const auto& s : specs)
    sizes.push_back(s.size());
  PhiTensor phi(n_obs, std::move(sizes));
  for (std::size_t i = 0; i < n_obs; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double v = x[i * m + j];
      const auto dom = specs[j].domain();
      if (!dom.contains(v))
        throw DataError("observation " + std::to_string(i + 1) + ", item " +
                        std::to_string(j + 1) + ": value " + detail::format_double(v) +
                        " outside basis domain " + dom.to_string() + " of " +
                        specs[j].to_string());
      auto out = phi.at(i, j);
      for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = specs[j](t, v);
    }
  }
  return phi;
}

inline PhiTensor
precompute_phi(const Dataset& data, std::span<const BasisSpec> specs)
{
  if (specs.size() != data.n_items())
    throw ConfigError("got " + std::to_string(specs.size()) + " basis specs for " +
                      std::to_string(data.n_items()) + " items");
  return precompute_phi(data.values(), data.n_obs(), specs);
}

/// Evaluation grid covering the effective support of a basis, for plotting
/// and reconstruction.
inline std::vector<double>
default_grid(const BasisSpec& spec, std::size_t points = 201)
{
  double lo = 0.0;
  double hi = 1.0;
  switch (spec.family()) {
    case Family::bernstein:
    case Family::trig: break;
    case Family::tophat: hi = static_cast<double>(spec.size()); break;
    case Family::gamma: {
      // widest function is the last one; stop where its tail is negligible
      const int T = static_cast<int>(spec.size());
      hi = 1.0;
      while (gamma_upper_tail(T, T - 1, hi) > 1e-9)
        hi *= 1.25;
      break;
    }
    case Family::gaussian: {
      const double half = 0.5 * (static_cast<double>(spec.size()) - 1.0);
      const double sd = std::sqrt(half + 1.0);
      lo = -half - 8.0 * sd;
      hi = half + 8.0 * sd;
      break;
    }
    case Family::tabulated:
      lo = spec.table()->grid.front();
      hi = spec.table()->grid.back();
      break;
  }
  if (points < 2)
    points = 2;
  std::vector<double> grid(points);
  for (std::size_t p = 0; p < points; ++p)
    grid[p] = lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(points - 1);
  grid.back() = hi;
  return grid;
}

} // namespace mixbasis
