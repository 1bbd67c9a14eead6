#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include <mixbasis/data.hpp>

using namespace mixbasis;

namespace {

Dataset
parse(const std::string& text, bool header)
{
  std::istringstream in(text);
  return parse_csv(in, header, "mem.csv");
}

} // namespace

TEST(Csv, HeaderBecomesNames)
{
  const auto d = parse("a,b\n1,2\n3,4\n5,6\n", true);
  EXPECT_EQ(d.n_obs(), 3u);
  EXPECT_EQ(d.n_items(), 2u);
  EXPECT_EQ(d.item_names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(d(2, 1), 6.0);
}

TEST(Csv, DefaultNamesAndComments)
{
  const auto d = parse("# comment\n1,2,3\n\n4,5,6\n", false);
  EXPECT_EQ(d.n_obs(), 2u);
  EXPECT_EQ(d.item_names(), (std::vector<std::string>{"item_1", "item_2", "item_3"}));
}

TEST(Csv, NaCellNamesRowAndColumn)
{
  try {
    parse("a,b\n1,2\n3,NA\n", true);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("NA"), std::string::npos) << msg;
  }
}

TEST(Csv, RaggedAndEmpty)
{
  EXPECT_THROW(parse("1,2\n3\n", false), DataError);
  EXPECT_THROW(parse("a,b\n", true), DataError);
  EXPECT_THROW(parse("", false), DataError);
  EXPECT_THROW(parse("1,inf\n", false), DataError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", true), DataError);
}

TEST(Cdf, Midranks)
{
  const std::vector<double> x = {3, 1, 2};
  const auto y = cdf_transform(x);
  EXPECT_NEAR(y[0], 2.5 / 3, 1e-15);
  EXPECT_NEAR(y[1], 0.5 / 3, 1e-15);
  EXPECT_NEAR(y[2], 0.5, 1e-15);
  const std::vector<double> tie = {5, 5};
  EXPECT_EQ(cdf_transform(tie), (std::vector<double>{0.5, 0.5}));
}

TEST(Cdf, OpenIntervalOrderPreservingIdempotent)
{
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> u(0, 20);
  std::vector<double> x(200);
  for (auto& v : x)
    v = u(rng);
  const auto y = cdf_transform(x);
  EXPECT_GT(*std::min_element(y.begin(), y.end()), 0.0);
  EXPECT_LT(*std::max_element(y.begin(), y.end()), 1.0);
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = 0; b < x.size(); ++b) {
      if (x[a] < x[b]) {
        EXPECT_LT(y[a], y[b]);
      }
      if (x[a] == x[b]) {
        EXPECT_EQ(y[a], y[b]);
      }
    }
  EXPECT_EQ(cdf_transform(y), y);
}

TEST(MeanHalf, Rescales)
{
  const std::vector<double> a = {1, 3};
  EXPECT_EQ(rescale_mean_half(a), (std::vector<double>{0.25, 0.75}));
  const std::vector<double> b = {0.5, 0.5};
  EXPECT_EQ(rescale_mean_half(b), b);
  const std::vector<double> z = {0, 0};
  EXPECT_THROW(rescale_mean_half(z), DataError);
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(0.3);
  std::vector<double> x(1000);
  for (auto& v : x)
    v = e(rng);
  const auto y = rescale_mean_half(x);
  EXPECT_NEAR(std::accumulate(y.begin(), y.end(), 0.0) / y.size(), 0.5, 0.5e-12);
}

TEST(Linear, Rescales)
{
  const std::vector<double> a = {2, 4, 6};
  EXPECT_EQ(linear_rescale(a), (std::vector<double>{0, 0.5, 1}));
  const std::vector<double> b = {-1, 1};
  EXPECT_EQ(linear_rescale(b), (std::vector<double>{0, 1}));
  const std::vector<double> c = {7, 7, 7};
  try {
    linear_rescale(c);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("cdf"), std::string::npos);
  }
}

TEST(Likert, Midpoints)
{
  const std::vector<double> five = {1, 2, 3, 4, 5};
  const auto y = likert_map(five, 5);
  const std::vector<double> want = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (std::size_t q = 0; q < 5; ++q)
    EXPECT_NEAR(y[q], want[q], 1e-15);
  const std::vector<double> two = {2};
  EXPECT_DOUBLE_EQ(likert_map(two, 4)[0], 0.375);
  const std::vector<double> bad = {6};
  EXPECT_THROW(likert_map(bad, 5), DataError);
  const std::vector<double> frac = {2.5};
  EXPECT_THROW(likert_map(frac, 5), DataError);
}

TEST(Transform, ParseAndApply)
{
  EXPECT_EQ(parse_transform("cdf").kind, Transform::Kind::cdf);
  EXPECT_EQ(parse_transform("likert:L=5").levels, 5);
  EXPECT_EQ(parse_transform("likert:L=5").to_string(), "likert:L=5");
  EXPECT_THROW(parse_transform("log"), ConfigError);
  EXPECT_THROW(parse_transform("likert:L=0"), ConfigError);

  const auto d = parse("a,b\n1,10\n2,20\n3,30\n", true);
  const auto t = apply_transforms(d, {parse_transform("identity"), parse_transform("mean_half")});
  EXPECT_EQ(t.column(0), d.column(0));
  EXPECT_DOUBLE_EQ(t(1, 1), 0.5);
  EXPECT_EQ(t.item_names(), d.item_names());
  EXPECT_THROW(apply_transforms(d, {parse_transform("cdf")}), ConfigError);
}

TEST(Transform, ErrorNamesItem)
{
  const auto d = parse("a,b\n1,7\n2,7\n", true);
  try {
    apply_transforms(d, {parse_transform("linear"), parse_transform("linear")});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();
  }
}

TEST(Dataset, Validation)
{
  EXPECT_THROW(Dataset(0, 1, {}), DataError);
  EXPECT_THROW(Dataset(1, 2, {1.0}), DataError);
  EXPECT_THROW(Dataset(1, 1, {std::nan("")}), DataError);
  EXPECT_THROW(Dataset(1, 1, {1.0}, {"a", "b"}), DataError);
}
