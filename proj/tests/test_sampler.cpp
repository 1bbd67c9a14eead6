#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <mixbasis/oracle.hpp>
#include <mixbasis/sampler.hpp>

#include "moves.hpp"
#include "random_instances.hpp"

using namespace mixbasis;

namespace {

PhiTensor
phi_from_rows(const std::vector<std::vector<double>>& rows, std::size_t m)
{
  std::vector<std::size_t> sizes;
  for (std::size_t j = 0; j < m; ++j)
    sizes.push_back(rows[j].size());
  PhiTensor phi(rows.size() / m, sizes);
  for (std::size_t i = 0; i < phi.n_obs(); ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const auto& r = rows[i * m + j];
      std::copy(r.begin(), r.end(), phi.at(i, j).begin());
    }
  return phi;
}

} // namespace

TEST(KPrior, UniformAndTable)
{
  const auto u = KPrior::uniform(4);
  EXPECT_NEAR(u.log_mass(1), std::log(0.25), 1e-15);
  EXPECT_NEAR(u.log_mass(4), std::log(0.25), 1e-15);
  EXPECT_EQ(u.log_mass(0), -INFINITY);
  EXPECT_EQ(u.log_mass(5), -INFINITY);
  const auto t = KPrior::table({0.5, 0.3, 0.2});
  EXPECT_NEAR(t.log_mass(2), std::log(0.3), 1e-15);
  EXPECT_THROW(t.check_covers(4), ConfigError);
  EXPECT_NO_THROW(t.check_covers(3));
  EXPECT_THROW(KPrior::table({0.5, -0.1}), ConfigError);
  EXPECT_THROW(KPrior::uniform(0), ConfigError);
}

TEST(LogJoint, SingleObservation)
{
  const auto phi = phi_from_rows({{1.6, 0.4}}, 1);
  const std::size_t g[] = {0};
  const Slot h[] = {0};
  const auto st = GibbsState::from_assignments(phi, g, h);
  EXPECT_NEAR(log_joint(st, phi, KPrior::uniform(1)), std::log(1.6 / 2.0), 1e-14);
}

TEST(LogJoint, LabelPermutationInvariant)
{
  const auto phi = testutil::random_positive_phi(9, {3, 2}, 4);
  Rng rng(1);
  auto st = testutil::random_state(phi, 3, rng);
  const auto prior = KPrior::uniform(9);
  const double before = log_joint(st, phi, prior);
  st.swap_labels(0, 2);
  EXPECT_NEAR(log_joint(st, phi, prior), before, 1e-12);
}

TEST(LogJoint, ZeroPhiSlotIsMinusInfinity)
{
  const auto phi = phi_from_rows({{2.0, 0.0}, {1.0, 1.0}}, 1);
  const std::size_t g[] = {0, 0};
  const Slot h[] = {1, 0};
  const auto st = GibbsState::from_assignments(phi, g, h);
  EXPECT_EQ(log_joint(st, phi, KPrior::uniform(2)), -INFINITY);
}

TEST(CandidateWeights, BernsteinNewComponentWeight)
{
  const auto phi = testutil::random_bernstein_phi(10, {3, 5, 1}, 8);
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    auto st = testutil::random_state(phi, 1 + rep % 5, rng);
    const std::size_t r = 0;
    const std::size_t i = st.members(r)[0];
    st.detach(r, i);
    if (st.k() == 0)
      continue;
    GibbsKernel kernel(phi, KPrior::uniform(10));
    const auto lw = kernel.candidate_log_weights(st, i);
    ASSERT_EQ(lw.size(), st.k() + 1);
    EXPECT_NEAR(lw.back(), std::log(static_cast<double>(st.k()) * 0.1), 1e-12);
  }
}

TEST(CandidateWeights, TwoObservationHandComputation)
{
  const auto phi = phi_from_rows({{1.2, 0.8}, {0.3, 1.7}}, 1);
  const std::size_t g[] = {0, 0};
  const Slot h[] = {0, 1};
  auto st = GibbsState::from_assignments(phi, g, h);
  st.detach(0, 0);
  const auto w = candidate_weights(st, 0, phi, KPrior::uniform(2));
  // other member holds slot 1, so m = (0, 1), n_s = 1, T = 2
  const double w1 = (2.0 - 1.0) / 1.0 * 0.5 * (1.0 * 1.2 + 2.0 * 0.8) / 3.0;
  const double w2 = 1.0 * 0.5 * (1.2 + 0.8) / 2.0;
  EXPECT_NEAR(w[0] / w[1], w1 / w2, 1e-13);
}

TEST(CandidateWeights, LabeledSplitsNewWeight)
{
  const auto phi = testutil::random_positive_phi(7, {3}, 6);
  Rng rng(3);
  auto st = testutil::random_state(phi, 3, rng);
  const std::size_t i = st.members(1)[0];
  st.detach(1, i);
  GibbsKernel kernel(phi, KPrior::uniform(7));
  const auto lumped = kernel.candidate_log_weights(st, i, Lumping::lumped);
  const auto labeled = kernel.candidate_log_weights(st, i, Lumping::labeled);
  const std::size_t k = st.k();
  ASSERT_EQ(labeled.size(), 2 * k + 1);
  for (std::size_t s = 0; s < k; ++s)
    EXPECT_DOUBLE_EQ(labeled[s], lumped[s]);
  double total = 0.0;
  for (std::size_t s = k; s <= 2 * k; ++s)
    total += std::exp(labeled[s]);
  EXPECT_NEAR(total, std::exp(lumped[k]), 1e-12 * std::exp(lumped[k]));
}

TEST(SlotProbs, Examples)
{
  {
    const auto phi = phi_from_rows({{2.0, 0.0}}, 1);
    const std::size_t g[] = {0};
    const Slot h[] = {0};
    auto st = GibbsState::from_assignments(phi, g, h);
    st.detach(0, 0);
    const auto p = slot_probs(st, st.k(), 0, 0, phi);
    EXPECT_DOUBLE_EQ(p[0], 1.0);
    EXPECT_DOUBLE_EQ(p[1], 0.0);
  }
  {
    const auto phi = phi_from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}}, 1);
    const std::size_t g[] = {0, 0, 0, 0};
    const Slot h[] = {0, 0, 0, 0};
    auto st = GibbsState::from_assignments(phi, g, h);
    st.detach(0, 3);
    const auto p = slot_probs(st, 0, 3, 0, phi);
    EXPECT_DOUBLE_EQ(p[0], 0.8);
    EXPECT_DOUBLE_EQ(p[1], 0.2);
  }
  {
    const auto phi = phi_from_rows({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}}, 1);
    const std::size_t g[] = {0, 0, 0, 0};
    const Slot h[] = {0, 1, 2, 0};
    auto st = GibbsState::from_assignments(phi, g, h);
    st.detach(0, 3);
    const auto p = slot_probs(st, 0, 3, 0, phi);
    for (double v : p)
      EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  }
}

TEST(State, DeletionRelabelsLastComponent)
{
  const auto phi = testutil::random_positive_phi(5, {2}, 1);
  const std::size_t g[] = {0, 1, 1, 2, 2};
  const Slot h[] = {0, 0, 1, 1, 0};
  auto st = GibbsState::from_assignments(phi, g, h);
  EXPECT_TRUE(st.detach(0, 0));
  EXPECT_EQ(st.k(), 2u);
  EXPECT_EQ(st.component_of(3), 0u);
  EXPECT_EQ(st.component_of(4), 0u);
  EXPECT_EQ(st.component_of(1), 1u);
  st.attach(0, st.k(), std::vector<Slot>{1});
  EXPECT_EQ(st.k(), 3u);
  EXPECT_EQ(st.component_of(0), 2u);
  st.check_invariants();
}

TEST(State, RejectsBadAssignments)
{
  const auto phi = testutil::random_positive_phi(3, {2}, 1);
  const std::size_t gap[] = {0, 2, 2};
  const Slot h[] = {0, 0, 0};
  EXPECT_THROW(GibbsState::from_assignments(phi, gap, h), ConfigError);
  const std::size_t g[] = {0, 0, 0};
  const Slot bad[] = {0, 2, 0};
  EXPECT_THROW(GibbsState::from_assignments(phi, g, bad), ConfigError);
}

TEST(Step, SingleObservationForcedMoves)
{
  const auto phi = testutil::random_bernstein_phi(1, {3, 2}, 2);
  auto st = GibbsState::all_in_one(phi);
  GibbsKernel kernel(phi, KPrior::uniform(1));
  Rng rng(5);
  for (int s = 0; s < 1000; ++s) {
    kernel.step(st, rng);
    ASSERT_EQ(st.k(), 1u);
    ASSERT_EQ(st.size(0), 1u);
  }
  st.check_invariants();
}

TEST(Step, CountsStayConsistent)
{
  const auto phi = testutil::random_bernstein_phi(12, {3, 2, 4}, 3);
  auto st = GibbsState::all_in_one(phi);
  GibbsKernel kernel(phi, KPrior::uniform(12));
  Rng rng(9);
  std::size_t prev_k = st.k();
  for (int s = 0; s < 100000; ++s) {
    kernel.step(st, rng);
    ASSERT_LE(std::max(st.k(), prev_k) - std::min(st.k(), prev_k), 1u);
    ASSERT_GE(st.k(), 1u);
    prev_k = st.k();
    if (s % 997 == 0)
      st.check_invariants();
  }
  st.check_invariants();
  const auto rebuilt = GibbsState::from_assignments(phi, st.labels(), st.slots());
  for (std::size_t r = 0; r < st.k(); ++r)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_TRUE(std::ranges::equal(st.counts(r, j), rebuilt.counts(r, j)));
}

TEST(Step, VisitsEveryPartition)
{
  const auto phi = testutil::random_bernstein_phi(5, {1, 1}, 4);
  auto st = GibbsState::all_in_one(phi);
  GibbsKernel kernel(phi, KPrior::uniform(5));
  Rng rng(1);
  std::set<std::vector<std::size_t>> seen;
  for (int s = 0; s < 100000; ++s) {
    kernel.step(st, rng);
    seen.insert(st.canonical_labels());
  }
  EXPECT_EQ(seen.size(), oracle::enumerate_partitions(5).size());
}

TEST(TransitionProb, StayMoveFormula)
{
  const auto phi = testutil::random_positive_phi(6, {3, 2}, 11);
  const std::size_t g[] = {0, 0, 0, 1, 1, 2};
  const Slot h[] = {0, 1, 2, 0, 1, 1, 0, 0, 2, 1, 1, 0};
  const auto st = GibbsState::from_assignments(phi, g, h);
  const auto prior = KPrior::uniform(6);
  GibbsKernel kernel(phi, prior);
  Move mv{0, 1, false, 0, {2, 0}};
  auto work = st;
  work.detach(0, 1);
  const auto lw = kernel.candidate_log_weights(work, 1);
  double z = 0.0;
  for (double v : lw)
    z += std::exp(v);
  double want = std::log(1.0 / (3.0 * 3.0)) + lw[0] - std::log(z);
  want += std::log(slot_probs(work, 0, 1, 0, phi)[2]);
  want += std::log(slot_probs(work, 0, 1, 1, phi)[0]);
  EXPECT_NEAR(kernel.transition_log_prob(st, mv, Lumping::lumped), want, 1e-12);
}

TEST(TransitionProb, RejectsIllegalMoves)
{
  const auto phi = testutil::random_positive_phi(4, {2}, 1);
  const std::size_t g[] = {0, 0, 1, 1};
  const Slot h[] = {0, 1, 0, 1};
  const auto st = GibbsState::from_assignments(phi, g, h);
  GibbsKernel kernel(phi, KPrior::uniform(4));
  EXPECT_THROW(kernel.transition_log_prob(st, Move{0, 2, false, 0, {0}}, Lumping::lumped),
               ConfigError);
  EXPECT_THROW(kernel.transition_log_prob(st, Move{0, 0, false, 5, {0}}, Lumping::lumped),
               ConfigError);
  EXPECT_THROW(kernel.transition_log_prob(st, Move{0, 0, true, 0, {0}}, Lumping::lumped),
               ConfigError);
  EXPECT_THROW(kernel.transition_log_prob(st, Move{0, 0, false, 1, {3}}, Lumping::lumped),
               ConfigError);
}

class DetailedBalance : public ::testing::TestWithParam<Lumping>
{};

TEST_P(DetailedBalance, AllMoveClasses)
{
  const Lumping lumping = GetParam();
  const MoveClass classes[] = {MoveClass::stay, MoveClass::transfer, MoveClass::create,
                               MoveClass::merge, MoveClass::delete_recreate};
  Rng rng(21);
  int checked[5] = {0, 0, 0, 0, 0};
  for (int rep = 0; rep < 400; ++rep) {
    const std::size_t n = 2 + rep % 7;
    const auto phi = testutil::random_positive_phi(n, {3, 2}, 1000 + rep);
    GibbsKernel kernel(phi, KPrior::uniform(n));
    const auto mu = testutil::random_state(phi, 1 + uniform_index(rng, n), rng);
    const auto cls = classes[rep % 5];
    Move mv;
    if (!testutil::random_move(mu, cls, lumping, rng, mv))
      continue;
    ASSERT_EQ(classify_move(mu, mv), cls);
    const auto c = testutil::balance(kernel, mu, mv, lumping);
    ASSERT_NEAR(c.flow, c.target, 1e-9) << "rep " << rep;
    ++checked[rep % 5];
  }
  for (int q = 0; q < 5; ++q)
    EXPECT_GT(checked[q], 20) << "class " << q;
}

INSTANTIATE_TEST_SUITE_P(Sampler,
                         DetailedBalance,
                         ::testing::Values(Lumping::labeled, Lumping::lumped));

TEST(Run, DeterministicAndValidated)
{
  const auto phi = testutil::random_bernstein_phi(15, {3, 3}, 5);
  SamplerOptions opts;
  opts.burn_in_sweeps = 20;
  opts.sample_sweeps = 50;
  opts.stride = 5;
  opts.seed = 99;
  const auto a = run_sampler(phi, KPrior::uniform(15), opts);
  const auto b = run_sampler(phi, KPrior::uniform(15), opts);
  ASSERT_EQ(a.samples.size(), 10u);
  for (std::size_t s = 0; s < a.samples.size(); ++s) {
    EXPECT_EQ(a.samples[s].g, b.samples[s].g);
    EXPECT_EQ(a.samples[s].h, b.samples[s].h);
    EXPECT_EQ(a.samples[s].sweep, 20 + 5 * (s + 1));
  }
  opts.sample_sweeps = 0;
  EXPECT_THROW(run_sampler(phi, KPrior::uniform(15), opts), ConfigError);
  opts.sample_sweeps = 10;
  opts.max_stored_entries = 10;
  EXPECT_THROW(run_sampler(phi, KPrior::uniform(15), opts), GuardError);
}

TEST(Run, InitialStates)
{
  const auto phi = testutil::random_bernstein_phi(8, {2}, 5);
  Rng rng(1);
  EXPECT_EQ(GibbsState::all_in_one(phi).k(), 1u);
  EXPECT_EQ(GibbsState::singletons(phi).k(), 8u);
  const auto r = GibbsState::random(phi, 3, rng);
  EXPECT_EQ(r.k(), 3u);
  r.check_invariants();
  EXPECT_THROW(GibbsState::random(phi, 9, rng), ConfigError);
}

TEST(Run, TablePriorMustCoverN)
{
  const auto phi = testutil::random_bernstein_phi(4, {2}, 5);
  EXPECT_THROW(GibbsKernel(phi, KPrior::table({0.5, 0.5})), ConfigError);
}
