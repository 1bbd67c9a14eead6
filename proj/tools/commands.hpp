#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <mixbasis/mixbasis.hpp>

namespace mixbasis::cli {

enum ExitCode : int
{
  exit_ok = 0,
  exit_config = 1,
  exit_data = 2,
  exit_guard = 3,
};

struct Options
{
  std::string input;
  std::string output_dir = ".";
  bool no_header = false;
  std::vector<std::string> basis;
  std::vector<std::string> transform;
  std::size_t k = 0;
  double tol = 1e-10;
  std::size_t restarts = 10;
  std::size_t max_iter = 10000;
  std::size_t burn_in = 2500;
  std::size_t sweeps = 25000;
  std::size_t stride = 1;
  std::uint64_t seed = 1;
  std::string prior = "uniform";
  bool stream_consensus = false;
  bool write_matrix = false;
  std::size_t memory_budget = std::size_t{1} << 28;
  std::size_t grid_points = 201;
  std::string which = "synth1";
  std::size_t group_size = 0;
};

namespace detail {

namespace fs = std::filesystem;

/// Splits `name=value` when the text before the first '=' has no ':'.
/// Anything else is a global setting and gets an empty name.
inline std::pair<std::string, std::string>
split_assignment(const std::string& text)
{
  const auto eq = text.find('=');
  const auto colon = text.find(':');
  if (eq == std::string::npos || (colon != std::string::npos && colon < eq))
    return {"", text};
  return {text.substr(0, eq), text.substr(eq + 1)};
}

/// One parsed value per item from a mix of global and `item=value` entries.
template <class T, class Parse>
std::vector<T>
per_item(const std::vector<std::string>& entries,
         const std::vector<std::string>& names,
         const std::string& flag,
         Parse parse,
         const std::string& fallback)
{
  std::vector<std::string> text(names.size(), fallback);
  for (const auto& e : entries) {
    const auto [name, value] = split_assignment(e);
    if (name.empty())
      std::fill(text.begin(), text.end(), value);
  }
  // item entries override the global setting regardless of order
  for (const auto& e : entries) {
    const auto [name, value] = split_assignment(e);
    if (name.empty())
      continue;
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
      throw ConfigError(flag + " names unknown item '" + name + "'");
    text[static_cast<std::size_t>(it - names.begin())] = value;
  }
  std::vector<T> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (text[j].empty())
      throw ConfigError(flag + " is required (missing for item '" + names[j] + "')");
    out.push_back(parse(text[j]));
  }
  return out;
}

inline KPrior
load_prior(const std::string& text, std::size_t n_obs)
{
  if (text == "uniform")
    return KPrior::uniform(n_obs);
  if (!text.starts_with("table:"))
    throw ConfigError("--prior must be 'uniform' or 'table:<path>', got '" + text + "'");
  const auto path = text.substr(6);
  std::ifstream is(path);
  if (!is)
    throw ConfigError("cannot open prior table " + path);
  std::vector<double> probs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto t = mixbasis::detail::trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    for (const auto& cell : mixbasis::detail::split(t, ',')) {
      const auto v = mixbasis::detail::parse_double(cell);
      if (!v)
        throw ConfigError(path + ":" + std::to_string(line_no) + ": not a number: '" +
                          std::string(cell) + "'");
      probs.push_back(*v);
    }
  }
  if (probs.size() < n_obs)
    throw ConfigError("prior table " + path + " has " + std::to_string(probs.size()) +
                      " entries but N = " + std::to_string(n_obs));
  return KPrior::table(std::move(probs));
}

inline std::string
join(const std::vector<std::string>& v)
{
  std::string out;
  for (std::size_t q = 0; q < v.size(); ++q)
    out += (q ? "|" : "") + v[q];
  return out;
}

struct Prepared
{
  Dataset data;
  std::vector<BasisSpec> specs;
  std::vector<Transform> transforms;
  PhiTensor phi;
  std::string canonical;
};

inline Dataset
load_input(const Options& o)
{
  if (o.input.empty())
    throw ConfigError("--input is required");
  return load_csv(o.input, !o.no_header);
}

inline Prepared
prepare(const Options& o, const std::string& command)
{
  auto raw = load_input(o);
  const auto& names = raw.item_names();
  auto transforms = per_item<Transform>(o.transform, names, "--transform", parse_transform,
                                        "identity");
  auto data = apply_transforms(raw, transforms);
  auto specs = per_item<BasisSpec>(o.basis, names, "--basis", parse_basis, "");
  auto phi = precompute_phi(data, specs);
  std::vector<std::string> b, t;
  for (std::size_t j = 0; j < names.size(); ++j) {
    b.push_back(names[j] + "=" + specs[j].to_string());
    t.push_back(names[j] + "=" + transforms[j].to_string());
  }
  std::string canonical = "command=" + command + ";basis=" + join(b) + ";transform=" + join(t);
  return {std::move(data), std::move(specs), std::move(transforms), std::move(phi),
          std::move(canonical)};
}

inline fs::path
output_dir(const Options& o)
{
  fs::path dir(o.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

inline std::string
num(double v)
{
  return mixbasis::detail::format_double(v);
}

/// What fit-gibbs and analyze report from a set of samples.
struct ChainSummary
{
  std::map<std::size_t, double> k_hist;
  ConsensusMatrix consensus;
  Snapshot representative;
  std::vector<ItemInformation> mi;
  std::size_t samples = 0;
};

inline ChainSummary
summarize(const SampleSet& set)
{
  ChainSummary s;
  s.k_hist = k_histogram(set);
  s.consensus = consensus_matrix(set, std::numeric_limits<std::size_t>::max());
  s.representative = set.samples[consensus_select(set, s.consensus)];
  s.mi = mi_ranking(set);
  s.samples = set.samples.size();
  return s;
}

/// Two passes over a samples file: accumulate, then score every snapshot
/// against the finished consensus matrix.
inline ChainSummary
summarize_file(const std::string& path, SampleFile* head_out = nullptr)
{
  ChainSummary s;
  SampleFile head;
  std::unique_ptr<ConsensusAccumulator> acc;
  std::map<std::size_t, std::size_t> k_counts;
  std::vector<double> mi_sum;
  {
    std::ifstream is(path);
    if (!is)
      throw DataError("cannot open " + path);
    for_each_sample(
      is, path,
      [&](const SampleFile& h) {
        head = h;
        acc = std::make_unique<ConsensusAccumulator>(h.set.n_obs,
                                                     std::numeric_limits<std::size_t>::max());
        mi_sum.assign(h.set.n_items, 0.0);
      },
      [&](Snapshot&& snap) {
        acc->add(std::span<const std::uint32_t>(snap.g));
        ++k_counts[snap.k];
        if (snap.h.size() != snap.g.size() * head.set.n_items)
          throw DataError(path + ": sample at sweep " + std::to_string(snap.sweep) +
                          " carries no slot assignments");
        for (std::size_t j = 0; j < head.set.n_items; ++j)
          mi_sum[j] += sample_mutual_information(snap, head.set.sizes, j);
        ++s.samples;
      });
  }
  if (s.samples == 0)
    throw DataError(path + ": no samples after the header");
  s.consensus = acc->finish();
  for (const auto& [k, c] : k_counts)
    s.k_hist[k] = static_cast<double>(c) / static_cast<double>(s.samples);
  for (std::size_t j = 0; j < mi_sum.size(); ++j)
    s.mi.push_back({j, mi_sum[j] / static_cast<double>(s.samples)});
  std::stable_sort(s.mi.begin(), s.mi.end(), [](const auto& a, const auto& b) {
    return a.bits > b.bits;
  });

  ConsensusScorer scorer(s.consensus);
  double best = 0.0;
  bool first = true;
  std::ifstream is(path);
  for_each_sample(
    is, path, [](const SampleFile&) {},
    [&](Snapshot&& snap) {
      const double d = scorer.distance(std::span<const std::uint32_t>(snap.g));
      if (first || d < best) {
        best = d;
        first = false;
        s.representative = std::move(snap);
      }
    });
  if (head_out)
    *head_out = std::move(head);
  return s;
}

inline std::vector<std::string>
write_summary_files(const ChainSummary& s,
                    const std::vector<std::string>& items,
                    const fs::path& dir,
                    const Provenance& prov,
                    bool write_matrix)
{
  std::vector<std::string> written;
  const auto open = [&](const char* name) {
    written.push_back((dir / name).string());
    return open_output(written.back());
  };
  {
    auto os = open("k_histogram.csv");
    write_k_histogram_csv(os, s.k_hist, prov);
  }
  {
    auto os = open("consensus_assignment.csv");
    write_assignments_csv(os, std::span<const std::uint32_t>(s.representative.g), prov);
  }
  {
    auto os = open("mi.csv");
    write_mi_csv(os, s.mi, items, prov);
  }
  if (write_matrix) {
    auto os = open("consensus_matrix.csv");
    write_consensus_csv(os, s.consensus, prov);
  }
  return written;
}

inline nlohmann::json
summary_json(const ChainSummary& s, const Provenance& prov)
{
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, p] : s.k_hist)
    hist[std::to_string(k)] = p;
  return {{"samples", s.samples},
          {"map_k", map_k(s.k_hist)},
          {"k_histogram", hist},
          {"representative_sweep", s.representative.sweep},
          {"representative_k", s.representative.k},
          {"seed", prov.seed},
          {"config_hash", prov.config_hash},
          {"version", prov.version}};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each writes its files under the output directory and reports the
// paths on `out`.

inline int
cmd_transform(const Options& o, std::ostream& out, std::ostream&)
{
  auto raw = detail::load_input(o);
  const auto transforms = detail::per_item<Transform>(o.transform, raw.item_names(),
                                                      "--transform", parse_transform,
                                                      "identity");
  const auto data = apply_transforms(raw, transforms);
  std::vector<std::string> t;
  for (std::size_t j = 0; j < transforms.size(); ++j)
    t.push_back(raw.item_names()[j] + "=" + transforms[j].to_string());
  const Provenance prov{o.seed, config_hash("command=transform;transform=" + detail::join(t))};
  const auto path = (detail::output_dir(o) / "transformed.csv").string();
  auto os = open_output(path);
  write_dataset_csv(os, data, &prov);
  out << "wrote " << path << '\n';
  return exit_ok;
}

inline int
cmd_fit_em(const Options& o, std::ostream& out, std::ostream& err)
{
  if (o.k == 0)
    throw ConfigError("fit-em needs --k");
  auto p = detail::prepare(o, "fit-em");
  EmOptions eo;
  eo.max_iter = o.max_iter;
  eo.tol = o.tol;
  eo.restarts = o.restarts;
  eo.seed = o.seed;
  const auto fit = fit_em(p.phi, o.k, eo);
  for (const auto& w : fit.warnings)
    err << "warning: " << w << '\n';
  const Provenance prov{o.seed,
                        config_hash(p.canonical + ";k=" + std::to_string(o.k) +
                                    ";tol=" + detail::num(o.tol) +
                                    ";restarts=" + std::to_string(o.restarts) +
                                    ";max_iter=" + std::to_string(o.max_iter))};
  const auto dir = detail::output_dir(o);
  {
    auto os = open_output((dir / "fit.json").string());
    os << to_json(fit, prov).dump(2) << '\n';
  }
  {
    auto os = open_output((dir / "densities.csv").string());
    write_densities_csv(os, density_curves(fit.params, p.specs, p.data, o.grid_points),
                        p.data.item_names(), prov);
  }
  {
    auto os = open_output((dir / "assignments.csv").string());
    const auto g = hard_assign(fit.resp);
    write_assignments_csv(os, std::span<const std::size_t>(g), prov);
  }
  out << "k = " << o.k << ", log posterior " << detail::num(fit.log_post) << " (restart "
      << fit.restart + 1 << " of " << o.restarts << ", " << fit.iters << " iterations"
      << (fit.converged ? "" : ", not converged") << ")\n"
      << "wrote " << (dir / "fit.json").string() << ", densities.csv, assignments.csv\n";
  return exit_ok;
}

inline int
cmd_fit_gibbs(const Options& o, std::ostream& out, std::ostream& err)
{
  auto p = detail::prepare(o, "fit-gibbs");
  const auto prior = detail::load_prior(o.prior, p.phi.n_obs());
  SamplerOptions so;
  so.burn_in_sweeps = o.burn_in;
  so.sample_sweeps = o.sweeps;
  so.stride = o.stride;
  so.seed = o.seed;
  so.max_stored_entries = o.memory_budget;
  if (so.sample_sweeps == 0)
    throw ConfigError("--sweeps is 0: nothing to sample");
  if (so.stride == 0)
    throw ConfigError("--stride must be positive");
  const Provenance prov{o.seed,
                        config_hash(p.canonical + ";prior=" + o.prior +
                                    ";burn_in=" + std::to_string(o.burn_in) +
                                    ";sweeps=" + std::to_string(o.sweeps) +
                                    ";stride=" + std::to_string(o.stride))};
  const auto dir = detail::output_dir(o);
  const auto samples_path = (dir / "samples.jsonl").string();
  const auto& items = p.data.item_names();
  const std::size_t n = p.phi.n_obs();
  const std::size_t records = o.sweeps / o.stride;

  detail::ChainSummary summary;
  double rate = 0.0;
  if (o.stream_consensus) {
    {
      auto os = open_output(samples_path);
      os << samples_header(n, p.phi.sizes(), o.burn_in, o.stride, o.prior, items, prov).dump()
         << '\n';
      rate = run_sampler(p.phi, prior, so, [&](const GibbsState& st, std::size_t sweep) {
               write_sample_line(os, sweep, st);
             }).steps_per_second;
      if (!os)
        throw ConfigError("failed writing " + samples_path);
    }
    summary = detail::summarize_file(samples_path);
  } else {
    const std::size_t entries = records * n * (1 + p.phi.n_items());
    if (entries > o.memory_budget || n > o.memory_budget / std::max<std::size_t>(n, 1))
      throw GuardError("keeping " + std::to_string(records) + " samples of N = " +
                       std::to_string(n) + " in memory exceeds the budget of " +
                       std::to_string(o.memory_budget) +
                       " entries; rerun with --stream-consensus");
    auto set = run_sampler(p.phi, prior, so);
    set.prior = o.prior;
    rate = set.steps_per_second;
    {
      auto os = open_output(samples_path);
      write_samples(os, set, items, prov);
    }
    summary = detail::summarize(set);
  }

  auto written = detail::write_summary_files(summary, items, dir, prov, o.write_matrix);
  const auto theta = theta_map_from_gh(summary.representative, p.phi.sizes());
  {
    auto os = open_output((dir / "densities.csv").string());
    write_densities_csv(os, density_curves(theta, p.specs, p.data, o.grid_points), items, prov);
  }
  {
    auto j = detail::summary_json(summary, prov);
    j["steps_per_second"] = rate;
    auto os = open_output((dir / "summary.json").string());
    os << j.dump(2) << '\n';
  }
  if (summary.k_hist.size() == 1 && records > 1)
    err << "warning: every sample has k = " << summary.k_hist.begin()->first
        << "; the chain may not be mixing\n";
  out << "map k = " << map_k(summary.k_hist) << " over " << summary.samples << " samples ("
      << static_cast<long long>(rate) << " steps/s)\n"
      << "wrote " << samples_path << ", k_histogram.csv, consensus_assignment.csv, mi.csv,"
      << " densities.csv, summary.json" << (o.write_matrix ? ", consensus_matrix.csv" : "")
      << '\n';
  return exit_ok;
}

inline int
cmd_analyze(const Options& o, std::ostream& out, std::ostream&)
{
  if (o.input.empty())
    throw ConfigError("analyze needs --input <samples.jsonl>");
  SampleFile head;
  const auto summary = detail::summarize_file(o.input, &head);
  auto items = head.items;
  if (items.size() != head.set.n_items) {
    items.clear();
    for (std::size_t j = 0; j < head.set.n_items; ++j)
      items.push_back("item_" + std::to_string(j + 1));
  }
  Provenance prov = head.provenance;
  prov.config_hash = config_hash("command=analyze;source=" + head.provenance.config_hash);
  const auto dir = detail::output_dir(o);
  detail::write_summary_files(summary, items, dir, prov, o.write_matrix);
  {
    auto os = open_output((dir / "analysis.json").string());
    os << detail::summary_json(summary, prov).dump(2) << '\n';
  }
  out << "map k = " << map_k(summary.k_hist) << " over " << summary.samples << " samples\n";
  for (const auto& m : summary.mi)
    out << "  " << items[m.item] << ": " << detail::num(m.bits) << " bits\n";
  return exit_ok;
}

inline int
cmd_synth(const Options& o, std::ostream& out, std::ostream&)
{
  SynthSpec spec;
  if (o.which == "synth1")
    spec = synth1_spec(o.seed, o.group_size ? o.group_size : 500);
  else if (o.which == "synth2")
    spec = synth2_spec(o.seed, o.group_size ? o.group_size : 500);
  else if (o.which == "small")
    spec = synth1_spec(o.seed, o.group_size ? o.group_size : 25);
  else
    throw ConfigError("--which must be synth1, synth2 or small, got '" + o.which + "'");
  const auto d = generate(spec);
  const Provenance prov{o.seed, config_hash("command=synth;which=" + o.which + ";group_size=" +
                                            std::to_string(spec.component_sizes.front()))};
  const auto dir = detail::output_dir(o);
  {
    auto os = open_output((dir / "data.csv").string());
    write_dataset_csv(os, d.data, &prov);
  }
  {
    auto os = open_output((dir / "truth.csv").string());
    write_assignments_csv(os, std::span<const std::size_t>(d.groups), prov);
  }
  out << "wrote " << d.data.n_obs() << " observations to " << (dir / "data.csv").string()
      << " and " << (dir / "truth.csv").string() << '\n';
  return exit_ok;
}

inline int
cmd_oracle(const Options& o, std::ostream& out, std::ostream&)
{
  auto p = detail::prepare(o, "oracle");
  const auto post = oracle::exact_posterior(p.phi, detail::load_prior(o.prior, p.phi.n_obs()));
  nlohmann::json km = nlohmann::json::object();
  for (const auto& [k, v] : post.k_marginal)
    km[std::to_string(k)] = v;
  nlohmann::json co = nlohmann::json::array();
  for (std::size_t a = 0; a < post.n; ++a) {
    std::vector<double> row(post.n);
    for (std::size_t b = 0; b < post.n; ++b)
      row[b] = post.co(a, b);
    co.push_back(std::move(row));
  }
  out << nlohmann::json{{"k_marginal", km},
                        {"coassign", co},
                        {"log_evidence", post.log_evidence},
                        {"seed", o.seed},
                        {"config_hash", config_hash(p.canonical + ";prior=" + o.prior)},
                        {"version", artifact_version}}
           .dump(2)
      << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------------------

inline int
exit_code_for(const std::exception& e)
{
  if (dynamic_cast<const GuardError*>(&e))
    return exit_guard;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const NumericError*>(&e))
    return exit_data;
  return exit_config;
}

/// Parses `args` (without the program name) and runs one command.
inline int
run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  Options o;
  CLI::App app{"Mixture models with fixed basis densities: EM and collapsed Gibbs fitting",
               "mixbasis"};
  app.set_version_flag("--version", std::string(artifact_version));
  app.require_subcommand(1);

  const auto input = [&](CLI::App* s, const std::string& what) {
    s->add_option("--input,-i", o.input, what)->required();
  };
  const auto output = [&](CLI::App* s) {
    s->add_option("--output-dir,-o", o.output_dir, "Directory for output files")
      ->capture_default_str();
  };
  const auto csv = [&](CLI::App* s) {
    s->add_flag("--no-header", o.no_header, "Input CSV has no header row");
    s->add_option("--transform", o.transform,
                  "identity, linear, cdf, mean_half or likert:L=<n>; global or item=spec")
      ->take_all();
  };
  const auto basis = [&](CLI::App* s) {
    s->add_option("--basis", o.basis,
                  "bernstein:d=, gamma:T=, tophat:T=, gauss:T=, trig:T= or file:<path>; "
                  "global or item=spec")
      ->take_all();
  };
  const auto seed = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  };

  auto* transform = app.add_subcommand("transform", "Rescale data columns into a basis domain");
  input(transform, "Data CSV");
  output(transform);
  csv(transform);
  seed(transform);

  auto* em = app.add_subcommand("fit-em", "Maximum-posterior fit with a fixed number of components");
  input(em, "Data CSV");
  output(em);
  csv(em);
  basis(em);
  seed(em);
  em->add_option("--k", o.k, "Number of components")->required()->check(CLI::PositiveNumber);
  em->add_option("--tol", o.tol, "Stop when no parameter moves by more than this")
    ->capture_default_str();
  em->add_option("--restarts", o.restarts, "Random starts; the best is kept")
    ->capture_default_str();
  em->add_option("--max-iter", o.max_iter, "Iteration cap per start")->capture_default_str();
  em->add_option("--grid-points", o.grid_points, "Points per density curve")
    ->capture_default_str();

  auto* gibbs = app.add_subcommand("fit-gibbs", "Sample partitions and k by collapsed Gibbs");
  input(gibbs, "Data CSV");
  output(gibbs);
  csv(gibbs);
  basis(gibbs);
  seed(gibbs);
  gibbs->add_option("--burn-in", o.burn_in, "Sweeps discarded before sampling")
    ->capture_default_str();
  gibbs->add_option("--sweeps", o.sweeps, "Sweeps after burn-in (one sweep = N steps)")
    ->capture_default_str();
  gibbs->add_option("--stride", o.stride, "Record every this many sweeps")
    ->capture_default_str();
  gibbs->add_option("--prior", o.prior, "uniform or table:<path> (one P(k) per entry)")
    ->capture_default_str();
  gibbs->add_flag("--stream-consensus", o.stream_consensus,
                  "Write samples to disk and build the consensus in two passes over the file");
  gibbs->add_option("--memory-budget", o.memory_budget,
                    "Largest number of labels and slots kept in memory")
    ->capture_default_str();
  gibbs->add_flag("--consensus-matrix", o.write_matrix, "Also write the N x N consensus matrix");
  gibbs->add_option("--grid-points", o.grid_points, "Points per density curve")
    ->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "Summaries from a stored samples file");
  input(analyze, "samples.jsonl written by fit-gibbs");
  output(analyze);
  analyze->add_flag("--consensus-matrix", o.write_matrix, "Also write the N x N consensus matrix");

  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic data set");
  output(synth);
  seed(synth);
  synth->add_option("--which", o.which, "synth1, synth2 or small")->capture_default_str();
  synth->add_option("--group-size", o.group_size, "Observations per group");

  auto* orc = app.add_subcommand("oracle", "Exact posterior by enumeration (tiny inputs)");
  orc->group("");
  input(orc, "Data CSV");
  csv(orc);
  basis(orc);
  seed(orc);
  orc->add_option("--prior", o.prior, "uniform or table:<path>");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (app.got_subcommand(transform))
      return cmd_transform(o, out, err);
    if (app.got_subcommand(em))
      return cmd_fit_em(o, out, err);
    if (app.got_subcommand(gibbs))
      return cmd_fit_gibbs(o, out, err);
    if (app.got_subcommand(analyze))
      return cmd_analyze(o, out, err);
    if (app.got_subcommand(synth))
      return cmd_synth(o, out, err);
    if (app.got_subcommand(orc))
      return cmd_oracle(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return exit_config;
}

} // namespace mixbasis::cli
