#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <commands.hpp>

#include "random_instances.hpp"

namespace fs = std::filesystem;
using namespace mixbasis;

namespace {

struct Result
{
  int code;
  std::string out;
  std::string err;
};

Result
run(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test
{
protected:
  void SetUp() override
  {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mixbasis_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const
  {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string slurp(const std::string& p)
  {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  /// Synthetic data written by the synth command; returns the data path.
  std::string synth(const std::string& which = "small", std::uint64_t seed = 2)
  {
    const auto r = run({"synth", "--which", which, "--seed", std::to_string(seed), "-o",
                        path("synth")});
    EXPECT_EQ(r.code, 0) << r.err;
    return path("synth/data.csv");
  }

  fs::path dir_;
};

std::vector<std::size_t>
read_labels(const std::string& p)
{
  std::ifstream is(p);
  std::string line;
  std::vector<std::size_t> out;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.starts_with("index"))
      continue;
    out.push_back(std::stoul(line.substr(line.find(',') + 1)));
  }
  return out;
}

void
expect_provenance(const std::string& text)
{
  EXPECT_NE(text.find("seed"), std::string::npos);
  EXPECT_NE(text.find("config_hash"), std::string::npos);
  EXPECT_NE(text.find(artifact_version), std::string::npos);
}

} // namespace

TEST_F(Cli, HelpAndUsage)
{
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"--version"}).out, std::string(artifact_version) + "\n");
  EXPECT_EQ(run({}).code, cli::exit_config);
  EXPECT_EQ(run({"fit-em", "--k", "3"}).code, cli::exit_config);
  EXPECT_EQ(run({"fit-em", "-i", "x.csv", "--k", "0"}).code, cli::exit_config);
}

TEST_F(Cli, SynthWritesDataAndTruth)
{
  const auto data = synth();
  const auto d = load_csv(data, true);
  EXPECT_EQ(d.n_obs(), 75u);
  EXPECT_EQ(d.n_items(), 3u);
  const auto truth = read_labels(path("synth/truth.csv"));
  ASSERT_EQ(truth.size(), 75u);
  EXPECT_EQ(truth.front(), 1u);
  EXPECT_EQ(truth.back(), 3u);
  const auto again = generate(small_spec(2));
  EXPECT_TRUE(std::ranges::equal(d.values(), again.data.values()));
  expect_provenance(slurp(data));
}

TEST_F(Cli, FitEmOutputsAndDeterminism)
{
  const auto data = synth();
  const std::vector<std::string> args = {"fit-em", "-i", data, "--basis", "bernstein:d=3",
                                         "--k", "3", "--restarts", "3", "--seed", "5"};
  auto a = args;
  a.insert(a.end(), {"-o", path("a")});
  auto b = args;
  b.insert(b.end(), {"-o", path("b")});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  for (const char* f : {"fit.json", "densities.csv", "assignments.csv"}) {
    const auto text = slurp(path(std::string("a/") + f));
    EXPECT_EQ(text, slurp(path(std::string("b/") + f))) << f;
    expect_provenance(text);
  }
  const auto fit = nlohmann::json::parse(slurp(path("a/fit.json")));
  EXPECT_EQ(fit["k"], 3);
  EXPECT_EQ(fit["seed"], 5);
  const auto labels = read_labels(path("a/assignments.csv"));
  const auto truth = read_labels(path("synth/truth.csv"));
  EXPECT_GE(permuted_accuracy(labels, truth), 0.8);
}

TEST_F(Cli, SingleComponentIsPooledFit)
{
  const auto data = synth();
  ASSERT_EQ(run({"fit-em", "-i", data, "--basis", "bernstein:d=3", "--k", "1", "--restarts",
                 "1", "-o", path("k1")})
              .code,
            0);
  const auto fit = nlohmann::json::parse(slurp(path("k1/fit.json")));
  const auto d = load_csv(data, true);
  const std::vector<BasisSpec> specs(3, BasisSpec::bernstein(3));
  const auto phi = precompute_phi(d, specs);
  const std::vector<std::size_t> zeros(75, 0);
  const auto pooled = theta_map_from_g(zeros, phi, {.tol = 1e-13});
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t t = 0; t < 4; ++t)
      EXPECT_NEAR(fit["theta"][0][j][t].get<double>(), pooled.theta_of(0, j)[t], 1e-6);
  const auto dens = slurp(path("k1/densities.csv"));
  EXPECT_EQ(dens.find("\n2,"), std::string::npos);
}

TEST_F(Cli, PerItemBasisOverridesGlobal)
{
  const auto data = synth();
  ASSERT_EQ(run({"fit-em", "-i", data, "--basis", "item_2=bernstein:d=1", "--basis",
                 "bernstein:d=3", "--k", "1", "--restarts", "1", "-o", path("mix")})
              .code,
            0);
  const auto fit = nlohmann::json::parse(slurp(path("mix/fit.json")));
  EXPECT_EQ(fit["theta"][0][0].size(), 4u);
  EXPECT_EQ(fit["theta"][0][1].size(), 2u);
  const auto r = run({"fit-em", "-i", data, "--basis", "bernstein:d=3", "--basis",
                      "nosuch=bernstein:d=1", "--k", "1", "-o", path("bad")});
  EXPECT_EQ(r.code, cli::exit_config);
  EXPECT_NE(r.err.find("nosuch"), std::string::npos);
}

TEST_F(Cli, GibbsOutputsStreamingAgrees)
{
  const auto data = synth();
  const std::vector<std::string> base = {"fit-gibbs", "-i", data, "--basis", "bernstein:d=3",
                                         "--burn-in", "20", "--sweeps", "60", "--seed", "4"};
  auto mem = base;
  mem.insert(mem.end(), {"-o", path("mem"), "--consensus-matrix"});
  auto str = base;
  str.insert(str.end(), {"-o", path("str"), "--stream-consensus", "--consensus-matrix"});
  ASSERT_EQ(run(mem).code, 0);
  ASSERT_EQ(run(str).code, 0);
  for (const char* f : {"samples.jsonl", "k_histogram.csv", "consensus_assignment.csv", "mi.csv",
                        "densities.csv", "consensus_matrix.csv"}) {
    const auto text = slurp(path(std::string("mem/") + f));
    EXPECT_EQ(text, slurp(path(std::string("str/") + f))) << f;
    expect_provenance(text);
  }
  const auto summary = nlohmann::json::parse(slurp(path("mem/summary.json")));
  EXPECT_EQ(summary["samples"], 60);
  EXPECT_EQ(read_samples(path("mem/samples.jsonl")).set.samples.size(), 60u);
}

TEST_F(Cli, GibbsValidation)
{
  const auto data = synth();
  auto r = run({"fit-gibbs", "-i", data, "--basis", "bernstein:d=3", "--sweeps", "0", "-o",
                path("x")});
  EXPECT_EQ(r.code, cli::exit_config);
  EXPECT_NE(r.err.find("nothing to sample"), std::string::npos);
  r = run({"fit-gibbs", "-i", data, "--basis", "bernstein:d=3", "--sweeps", "50",
           "--memory-budget", "100", "-o", path("x")});
  EXPECT_EQ(r.code, cli::exit_guard);
  EXPECT_NE(r.err.find("--stream-consensus"), std::string::npos);
  r = run({"fit-gibbs", "-i", data, "--basis", "bernstein:d=3", "--prior", "poisson", "-o",
           path("x")});
  EXPECT_EQ(r.code, cli::exit_config);
}

TEST_F(Cli, AnalyzeReproducesGibbsSummaries)
{
  const auto data = synth("synth1", 3);
  ASSERT_EQ(run({"fit-gibbs", "-i", data, "--basis", "bernstein:d=3", "--burn-in", "20",
                 "--sweeps", "40", "-o", path("g")})
              .code,
            0);
  const auto r = run({"analyze", "-i", path("g/samples.jsonl"), "-o", path("an")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto strip = [](std::string text) { return text.substr(text.find("\n", text.find("config_hash"))); };
  EXPECT_EQ(strip(slurp(path("an/mi.csv"))), strip(slurp(path("g/mi.csv"))));
  EXPECT_EQ(strip(slurp(path("an/consensus_assignment.csv"))),
            strip(slurp(path("g/consensus_assignment.csv"))));
  std::istringstream mi(slurp(path("an/mi.csv")));
  std::string line;
  int rows = 0;
  while (std::getline(mi, line)) {
    if (line.empty() || line[0] == '#' || line.starts_with("rank"))
      continue;
    EXPECT_GT(std::stod(line.substr(line.rfind(',') + 1)), 0.0) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST_F(Cli, AnalyzeSingleSampleConsensusIsBinary)
{
  const auto p = write("one.jsonl",
                       R"({"N":3,"M":1,"T":[2],"seed":1,"burn_in":0,"stride":1,"prior":"uniform"})"
                       "\n"
                       R"({"sweep":1,"k":2,"g":[1,2,1],"h":[[0],[1],[1]]})"
                       "\n");
  ASSERT_EQ(run({"analyze", "-i", p, "-o", path("an"), "--consensus-matrix"}).code, 0);
  std::istringstream is(slurp(path("an/consensus_matrix.csv")));
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    for (const auto& cell : mixbasis::detail::split(line, ','))
      EXPECT_TRUE(cell == "0" || cell == "1") << cell;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST_F(Cli, AnalyzeMalformedLineReportsLine)
{
  const auto p = write("bad.jsonl",
                       R"({"N":2,"M":1,"T":[2],"seed":1,"burn_in":0,"stride":1,"prior":"uniform"})"
                       "\n"
                       R"({"sweep":1,"k":1,"g":[1,1],"h":[[0],[1]]})"
                       "\n{oops\n");
  const auto r = run({"analyze", "-i", p, "-o", path("an")});
  EXPECT_EQ(r.code, cli::exit_data);
  EXPECT_NE(r.err.find("bad.jsonl:3:"), std::string::npos) << r.err;
}

TEST_F(Cli, TransformModes)
{
  const auto raw = write("raw.csv", "a,b\n1,10\n2,20.5\n4,30\n3,1e-3\n");
  ASSERT_EQ(run({"transform", "-i", raw, "-o", path("id")}).code, 0);
  const auto id = load_csv(path("id/transformed.csv"), true);
  EXPECT_TRUE(std::ranges::equal(id.values(), load_csv(raw, true).values()));
  EXPECT_EQ(id.item_names(), (std::vector<std::string>{"a", "b"}));

  ASSERT_EQ(run({"transform", "-i", raw, "--transform", "mean_half", "-o", path("mh")}).code, 0);
  const auto mh = load_csv(path("mh/transformed.csv"), true);
  for (std::size_t j = 0; j < 2; ++j) {
    double s = 0.0;
    for (double v : mh.column(j))
      s += v;
    EXPECT_NEAR(s / 4.0, 0.5, 1e-12);
  }

  ASSERT_EQ(run({"transform", "-i", raw, "--transform", "cdf", "-o", path("cdf")}).code, 0);
  const auto cdf = load_csv(path("cdf/transformed.csv"), true);
  for (double v : cdf.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  expect_provenance(slurp(path("cdf/transformed.csv")));
}

TEST_F(Cli, DataErrorsExitTwo)
{
  const auto na = write("na.csv", "a,b\n0.1,0.2\n0.3,NA\n");
  auto r = run({"transform", "-i", na, "-o", path("x")});
  EXPECT_EQ(r.code, cli::exit_data);
  EXPECT_NE(r.err.find("na.csv:3"), std::string::npos) << r.err;

  const auto out = write("out.csv", "a\n0.5\n1.5\n");
  r = run({"fit-em", "-i", out, "--basis", "bernstein:d=2", "--k", "1", "-o", path("x")});
  EXPECT_EQ(r.code, cli::exit_data);
  EXPECT_NE(r.err.find("observation 2"), std::string::npos) << r.err;

  r = run({"fit-em", "-i", path("missing.csv"), "--basis", "bernstein:d=2", "--k", "1"});
  EXPECT_EQ(r.code, cli::exit_data);
}

TEST_F(Cli, OracleMatchesLibrary)
{
  const auto p = write("tiny.csv", "x,y\n0.2,0.7\n0.25,0.1\n0.9,0.5\n0.6,0.6\n");
  const auto prior = write("prior.txt", "# P(k)\n0.1\n0.2\n0.3\n0.4\n");
  const auto r = run({"oracle", "-i", p, "--basis", "bernstein:d=1", "--prior",
                      "table:" + prior});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const std::vector<BasisSpec> specs(2, BasisSpec::bernstein(1));
  const auto post =
    oracle::exact_posterior(precompute_phi(load_csv(p, true), specs),
                            KPrior::table({0.1, 0.2, 0.3, 0.4}));
  for (const auto& [k, v] : post.k_marginal)
    EXPECT_DOUBLE_EQ(j["k_marginal"][std::to_string(k)].get<double>(), v);
  EXPECT_EQ(j["coassign"][1][1], 1.0);
  const auto big = write("big.csv", "x\n0.1\n0.2\n0.3\n0.4\n0.5\n0.6\n0.7\n0.8\n");
  EXPECT_EQ(run({"oracle", "-i", big, "--basis", "bernstein:d=1"}).code, cli::exit_guard);
}

TEST(CliParsing, SplitAssignment)
{
  using cli::detail::split_assignment;
  EXPECT_EQ(split_assignment("bernstein:d=4"), std::make_pair(std::string(), std::string("bernstein:d=4")));
  EXPECT_EQ(split_assignment("x1=gamma:T=5"), std::make_pair(std::string("x1"), std::string("gamma:T=5")));
  EXPECT_EQ(split_assignment("cdf"), std::make_pair(std::string(), std::string("cdf")));
  EXPECT_EQ(split_assignment("q=likert:L=5"), std::make_pair(std::string("q"), std::string("likert:L=5")));
}
