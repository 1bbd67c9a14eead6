#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "data.hpp"
#include "detail/text.hpp"
#include "em.hpp"
#include "error.hpp"
#include "sampler.hpp"

namespace mixbasis {

inline constexpr const char* artifact_version = "mixbasis-1.0.0";

/// What every output file records about the run that wrote it.
struct Provenance
{
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version = artifact_version;
};

/// 16 hex digits of the FNV-1a hash of a canonical config string.
inline std::string
config_hash(std::string_view canonical)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::uint64_t h = detail::fnv1a(canonical);
  std::string out(16, '0');
  for (int q = 15; q >= 0; --q, h >>= 4)
    out[static_cast<std::size_t>(q)] = digits[h & 0xF];
  return out;
}

inline void
write_comment_header(std::ostream& os, const Provenance& prov)
{
  os << "# version: " << prov.version << '\n'
     << "# seed: " << prov.seed << '\n'
     << "# config_hash: " << prov.config_hash << '\n';
}

inline std::ofstream
open_output(const std::string& path)
{
  std::ofstream os(path);
  if (!os)
    throw ConfigError("cannot write " + path);
  os.precision(17);
  return os;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json
to_json(const EmFit& fit, const Provenance& prov)
{
  const auto& p = fit.params;
  nlohmann::json theta = nlohmann::json::array();
  for (std::size_t r = 0; r < p.k; ++r) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < p.n_items(); ++j) {
      const auto th = p.theta_of(r, j);
      rows.push_back(std::vector<double>(th.begin(), th.end()));
    }
    theta.push_back(std::move(rows));
  }
  nlohmann::json q = nlohmann::json::array();
  for (std::size_t i = 0; i < fit.resp.n; ++i) {
    std::vector<double> row(fit.resp.k);
    for (std::size_t r = 0; r < fit.resp.k; ++r)
      row[r] = fit.resp.comp(i, r);
    q.push_back(std::move(row));
  }
  return {{"k", p.k},
          {"pi", p.pi},
          {"theta", std::move(theta)},
          {"log_post", fit.log_post},
          {"iters", fit.iters},
          {"converged", fit.converged},
          {"restart", fit.restart},
          {"warnings", fit.warnings},
          {"q_comp", std::move(q)},
          {"seed", prov.seed},
          {"config_hash", prov.config_hash},
          {"version", prov.version}};
}

// ---------------------------------------------------------------------------
// Samples as JSON lines: one header object, then one object per snapshot with
// 1-based g and 0-based h as one row of slots per observation.

inline nlohmann::json
samples_header(std::size_t n_obs,
               const std::vector<std::size_t>& sizes,
               std::size_t burn_in,
               std::size_t stride,
               const std::string& prior,
               const std::vector<std::string>& items,
               const Provenance& prov)
{
  return {{"N", n_obs},
          {"M", sizes.size()},
          {"T", sizes},
          {"seed", prov.seed},
          {"burn_in", burn_in},
          {"stride", stride},
          {"prior", prior},
          {"items", items},
          {"config_hash", prov.config_hash},
          {"version", prov.version}};
}

inline void
write_sample_line(std::ostream& os, std::size_t sweep, const GibbsState& state)
{
  os << "{\"sweep\":" << sweep << ",\"k\":" << state.k() << ",\"g\":[";
  for (std::size_t i = 0; i < state.n_obs(); ++i)
    os << (i ? "," : "") << state.component_of(i) + 1;
  os << "],\"h\":[";
  const std::size_t m = state.n_items();
  for (std::size_t i = 0; i < state.n_obs(); ++i) {
    os << (i ? ",[" : "[");
    for (std::size_t j = 0; j < m; ++j)
      os << (j ? "," : "") << state.slot(i, j);
    os << ']';
  }
  os << "]}\n";
}

inline void
write_sample_line(std::ostream& os, const Snapshot& s, std::size_t n_items)
{
  os << "{\"sweep\":" << s.sweep << ",\"k\":" << s.k << ",\"g\":[";
  for (std::size_t i = 0; i < s.g.size(); ++i)
    os << (i ? "," : "") << s.g[i] + 1;
  os << "],\"h\":[";
  for (std::size_t q = 0; n_items > 0 && q + n_items <= s.h.size(); q += n_items) {
    os << (q ? ",[" : "[");
    for (std::size_t j = 0; j < n_items; ++j)
      os << (j ? "," : "") << s.h[q + j];
    os << ']';
  }
  os << "]}\n";
}

inline void
write_samples(std::ostream& os,
              const SampleSet& set,
              const std::vector<std::string>& items,
              const Provenance& prov)
{
  os << samples_header(set.n_obs, set.sizes, set.burn_in, set.stride, set.prior, items, prov)
          .dump()
     << '\n';
  for (const auto& s : set.samples)
    write_sample_line(os, s, set.n_items);
}

struct SampleFile
{
  SampleSet set;
  std::vector<std::string> items;
  Provenance provenance;
};

/// Streams a samples file: `on_header(file)` once with an empty sample list,
/// then `on_sample(snapshot)` per record. Errors name the offending line.
template <class OnHeader, class OnSample>
void
for_each_sample(std::istream& is, const std::string& source, OnHeader&& on_header,
                OnSample&& on_sample)
{
  SampleFile head;
  auto& set = head.set;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  const auto fail = [&](const std::string& what) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  std::vector<bool> used;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty())
      continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        set.n_obs = j.at("N").get<std::size_t>();
        set.sizes = j.at("T").get<std::vector<std::size_t>>();
        set.n_items = j.at("M").get<std::size_t>();
        if (set.sizes.size() != set.n_items)
          fail("header M does not match the length of T");
        set.seed = j.at("seed").get<std::uint64_t>();
        set.burn_in = j.at("burn_in").get<std::size_t>();
        set.stride = j.at("stride").get<std::size_t>();
        set.prior = j.at("prior").get<std::string>();
        if (j.contains("items"))
          head.items = j.at("items").get<std::vector<std::string>>();
        head.provenance.seed = set.seed;
        if (j.contains("config_hash"))
          head.provenance.config_hash = j.at("config_hash").get<std::string>();
        if (j.contains("version"))
          head.provenance.version = j.at("version").get<std::string>();
        have_header = true;
        on_header(static_cast<const SampleFile&>(head));
        continue;
      }
      Snapshot s;
      s.sweep = j.at("sweep").get<std::size_t>();
      s.k = j.at("k").get<std::size_t>();
      const auto g = j.at("g").get<std::vector<std::uint32_t>>();
      for (const auto& row : j.at("h")) {
        const auto r = row.get<std::vector<Slot>>();
        if (r.size() != set.n_items)
          fail("h row has " + std::to_string(r.size()) + " entries, expected " +
               std::to_string(set.n_items));
        s.h.insert(s.h.end(), r.begin(), r.end());
      }
      if (g.size() != set.n_obs)
        fail("g has " + std::to_string(g.size()) + " entries, expected " +
             std::to_string(set.n_obs));
      if (!s.h.empty() && s.h.size() != set.n_obs * set.n_items)
        fail("h has " + std::to_string(s.h.size()) + " entries, expected " +
             std::to_string(set.n_obs * set.n_items));
      used.assign(s.k, false);
      s.g.reserve(g.size());
      for (auto v : g) {
        if (v < 1 || v > s.k)
          fail("label " + std::to_string(v) + " outside 1.." + std::to_string(s.k));
        used[v - 1] = true;
        s.g.push_back(v - 1);
      }
      for (bool u : used)
        if (!u)
          fail("k = " + std::to_string(s.k) + " but some component is empty");
      for (std::size_t q = 0; q < s.h.size(); ++q)
        if (s.h[q] >= set.sizes[q % set.n_items])
          fail("slot " + std::to_string(s.h[q]) + " out of range");
      on_sample(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("bad field: ") + e.what());
    }
  }
  if (!have_header)
    throw DataError(source + ": no header line");
}

inline SampleFile
read_samples(std::istream& is, const std::string& source = "<samples>")
{
  SampleFile out;
  for_each_sample(
    is, source, [&](const SampleFile& head) { out = head; },
    [&](Snapshot&& s) { out.set.samples.push_back(std::move(s)); });
  return out;
}

inline SampleFile
read_samples(const std::string& path)
{
  std::ifstream is(path);
  if (!is)
    throw DataError("cannot open " + path);
  return read_samples(is, path);
}

// ---------------------------------------------------------------------------
// CSV

inline void
write_dataset_csv(std::ostream& os, const Dataset& data, const Provenance* prov = nullptr)
{
  if (prov)
    write_comment_header(os, *prov);
  const auto& names = data.item_names();
  for (std::size_t j = 0; j < names.size(); ++j)
    os << (j ? "," : "") << names[j];
  os << '\n';
  for (std::size_t i = 0; i < data.n_obs(); ++i) {
    for (std::size_t j = 0; j < data.n_items(); ++j)
      os << (j ? "," : "") << detail::format_double(data(i, j));
    os << '\n';
  }
}

/// index,label with both 1-based.
template <class Label>
void
write_assignments_csv(std::ostream& os, std::span<const Label> labels, const Provenance& prov)
{
  write_comment_header(os, prov);
  os << "index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    os << i + 1 << ',' << static_cast<std::size_t>(labels[i]) + 1 << '\n';
}

inline void
write_k_histogram_csv(std::ostream& os,
                      const std::map<std::size_t, double>& hist,
                      const Provenance& prov)
{
  write_comment_header(os, prov);
  os << "k,probability\n";
  for (const auto& [k, p] : hist)
    os << k << ',' << detail::format_double(p) << '\n';
}

/// Long format: component,item,x,density (component and item 1-based).
inline void
write_densities_csv(std::ostream& os,
                    const std::vector<DensityCurve>& curves,
                    const std::vector<std::string>& items,
                    const Provenance& prov)
{
  write_comment_header(os, prov);
  os << "component,item,x,density\n";
  for (const auto& c : curves)
    for (std::size_t p = 0; p < c.grid.size(); ++p)
      os << c.component + 1 << ',' << items.at(c.item) << ',' << detail::format_double(c.grid[p])
         << ',' << detail::format_double(c.values[p]) << '\n';
}

inline void
write_consensus_csv(std::ostream& os, const ConsensusMatrix& c, const Provenance& prov)
{
  write_comment_header(os, prov);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j)
      os << (j ? "," : "") << detail::format_double(c(i, j));
    os << '\n';
  }
}

inline void
write_mi_csv(std::ostream& os,
             const std::vector<ItemInformation>& ranking,
             const std::vector<std::string>& items,
             const Provenance& prov)
{
  write_comment_header(os, prov);
  os << "rank,item,mutual_information_bits\n";
  for (std::size_t q = 0; q < ranking.size(); ++q)
    os << q + 1 << ',' << items.at(ranking[q].item) << ','
       << detail::format_double(ranking[q].bits) << '\n';
}

} // namespace mixbasis
