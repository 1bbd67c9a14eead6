#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "detail/text.hpp"
#include "error.hpp"

namespace mixbasis {

/// A complete N x M table of finite reals, row-major, one row per
/// observation and one column per item.
class Dataset
{
public:
  Dataset(std::size_t n_obs,
          std::size_t n_items,
          std::vector<double> values,
          std::vector<std::string> item_names = {})
    : n_(n_obs)
    , m_(n_items)
    , x_(std::move(values))
    , names_(std::move(item_names))
  {
    if (n_ == 0 || m_ == 0)
      throw DataError("dataset needs at least one observation and one item");
    if (x_.size() != n_ * m_)
      throw DataError("dataset values do not match " + std::to_string(n_) +
                      " x " + std::to_string(m_));
    for (std::size_t k = 0; k < x_.size(); ++k)
      if (!std::isfinite(x_[k]))
        throw DataError("non-finite value at row " + std::to_string(k / m_ + 1) +
                        ", column " + std::to_string(k % m_ + 1));
    if (names_.empty())
      for (std::size_t j = 0; j < m_; ++j)
        names_.push_back("item_" + std::to_string(j + 1));
    if (names_.size() != m_)
      throw DataError("expected " + std::to_string(m_) + " item names, got " +
                      std::to_string(names_.size()));
  }

  std::size_t n_obs() const noexcept { return n_; }
  std::size_t n_items() const noexcept { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return x_[i * m_ + j]; }
  std::span<const double> row(std::size_t i) const { return {x_.data() + i * m_, m_}; }
  std::span<const double> values() const noexcept { return x_; }
  const std::vector<std::string>& item_names() const noexcept { return names_; }

  std::vector<double> column(std::size_t j) const
  {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      out[i] = x_[i * m_ + j];
    return out;
  }

  /// Copy with column j replaced.
  Dataset with_column(std::size_t j, std::span<const double> col) const
  {
    if (col.size() != n_)
      throw DataError("replacement column has wrong length");
    auto x = x_;
    for (std::size_t i = 0; i < n_; ++i)
      x[i * m_ + j] = col[i];
    return Dataset(n_, m_, std::move(x), names_);
  }

private:
  std::size_t n_;
  std::size_t m_;
  std::vector<double> x_;
  std::vector<std::string> names_;
};

/// Parses CSV text. Lines starting with '#' and blank lines are skipped.
/// `source` is used in error messages only.
inline Dataset
parse_csv(std::istream& in, bool has_header, const std::string& source = "<csv>")
{
  std::vector<std::string> names;
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#')
      continue;
    const auto cells = detail::split(body, ',');
    if (header_pending) {
      for (auto c : cells)
        names.emplace_back(detail::unquote(c));
      width = names.size();
      header_pending = false;
      continue;
    }
    if (width == 0)
      width = cells.size();
    if (cells.size() != width)
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " columns, found " +
                      std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = detail::parse_double(cells[c]);
      if (!v)
        throw DataError(source + ":" + std::to_string(line_no) + ": row " +
                        std::to_string(rows + 1) + ", column " + std::to_string(c + 1) +
                        ": not a finite number: '" + std::string(detail::trim(cells[c])) +
                        "'");
      values.push_back(*v);
    }
    ++rows;
  }
  if (rows == 0)
    throw DataError(source + ": no data rows");
  return Dataset(rows, width, std::move(values), std::move(names));
}

inline Dataset
load_csv(const std::string& path, bool has_header)
{
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open " + path);
  return parse_csv(in, has_header, path);
}

// ---------------------------------------------------------------------------
// Column transforms

/// Empirical CDF with midranks: value i maps to (rank_i - 0.5) / N where tied
/// values share their average rank. Output lies strictly inside (0, 1).
inline std::vector<double>
cdf_transform(std::span<const double> column)
{
  const std::size_t n = column.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return column[a] < column[b];
  });
  std::vector<double> out(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t stop = start + 1;
    while (stop < n && column[order[stop]] == column[order[start]])
      ++stop;
    // 1-based ranks start+1 .. stop share their mean
    const double rank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k)
      out[order[k]] = (rank - 0.5) / static_cast<double>(n);
    start = stop;
  }
  return out;
}

/// Scales a non-negative column so its mean is exactly one half.
inline std::vector<double>
rescale_mean_half(std::span<const double> column)
{
  if (column.empty())
    throw DataError("mean_half: empty column");
  const double mean =
    std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
  if (!(mean > 0.0))
    throw DataError("mean_half: column mean must be positive for a gamma basis");
  const double factor = 0.5 / mean;
  std::vector<double> out(column.begin(), column.end());
  for (auto& v : out)
    v *= factor;
  return out;
}

/// Affine map sending the minimum to 0 and the maximum to 1.
inline std::vector<double>
linear_rescale(std::span<const double> column)
{
  if (column.empty())
    throw DataError("linear: empty column");
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  if (!(*hi > *lo))
    throw DataError("linear: constant column cannot be rescaled; use cdf or likert");
  const double span = *hi - *lo;
  std::vector<double> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i)
    out[i] = (column[i] - *lo) / span;
  return out;
}

/// Maps integer levels 1..L to interval midpoints (2v - 1) / (2L).
inline std::vector<double>
likert_map(std::span<const double> column, int levels)
{
  if (levels < 1)
    throw ConfigError("likert: levels must be at least 1");
  std::vector<double> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    const double v = column[i];
    if (v != std::round(v) || v < 1.0 || v > levels)
      throw DataError("likert: value " + detail::format_double(v) + " at row " +
                      std::to_string(i + 1) + " is not a level in 1.." +
                      std::to_string(levels));
    out[i] = (2.0 * v - 1.0) / (2.0 * levels);
  }
  return out;
}

struct Transform
{
  enum class Kind
  {
    identity,
    linear_rescale,
    cdf,
    mean_half,
    likert
  };
  Kind kind = Kind::identity;
  int levels = 0;

  std::string to_string() const
  {
    switch (kind) {
      case Kind::identity: return "identity";
      case Kind::linear_rescale: return "linear";
      case Kind::cdf: return "cdf";
      case Kind::mean_half: return "mean_half";
      case Kind::likert: return "likert:L=" + std::to_string(levels);
    }
    return "identity";
  }
};

/// One transform per item.
using TransformSpec = std::vector<Transform>;

/// Accepts identity, linear, cdf, mean_half, likert:L=<levels>.
inline Transform
parse_transform(std::string_view text)
{
  const auto s = detail::trim(text);
  using K = Transform::Kind;
  if (s == "identity" || s == "none")
    return {K::identity, 0};
  if (s == "linear" || s == "linear_rescale")
    return {K::linear_rescale, 0};
  if (s == "cdf")
    return {K::cdf, 0};
  if (s == "mean_half")
    return {K::mean_half, 0};
  if (s.starts_with("likert")) {
    auto rest = s.substr(6);
    if (rest.starts_with(":"))
      rest.remove_prefix(1);
    if (rest.starts_with("L="))
      rest.remove_prefix(2);
    const auto levels = detail::parse_int(rest);
    if (!levels || *levels < 1)
      throw ConfigError("bad likert transform '" + std::string(s) + "'; use likert:L=5");
    return {K::likert, static_cast<int>(*levels)};
  }
  throw ConfigError("unknown transform '" + std::string(s) +
                    "'; expected identity, linear, cdf, mean_half or likert:L=<n>");
}

inline std::vector<double>
apply_transform(const Transform& t, std::span<const double> column)
{
  switch (t.kind) {
    case Transform::Kind::identity: return {column.begin(), column.end()};
    case Transform::Kind::linear_rescale: return linear_rescale(column);
    case Transform::Kind::cdf: return cdf_transform(column);
    case Transform::Kind::mean_half: return rescale_mean_half(column);
    case Transform::Kind::likert: return likert_map(column, t.levels);
  }
  return {column.begin(), column.end()};
}

inline Dataset
apply_transforms(const Dataset& data, const TransformSpec& spec)
{
  if (spec.size() != data.n_items())
    throw ConfigError("transform spec has " + std::to_string(spec.size()) +
                      " entries for " + std::to_string(data.n_items()) + " items");
  std::vector<double> x(data.values().begin(), data.values().end());
  const auto m = data.n_items();
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> out;
    try {
      out = apply_transform(spec[j], data.column(j));
    } catch (const DataError& e) {
      throw DataError("item '" + data.item_names()[j] + "': " + e.what());
    }
    for (std::size_t i = 0; i < data.n_obs(); ++i)
      x[i * m + j] = out[i];
  }
  return Dataset(data.n_obs(), m, std::move(x), data.item_names());
}

} // namespace mixbasis
