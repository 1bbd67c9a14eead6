// Plants three groups in synthetic data and checks how well both fitters
// recover them.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include <mixbasis/mixbasis.hpp>

using namespace mixbasis;

int
main(int argc, char** argv)
{
  CLI::App app{"Recover planted groups from synth1 or synth2"};
  std::string which = "synth1";
  std::uint64_t seed = 1;
  std::size_t restarts = 10, burn_in = 2500, sweeps = 25000, group_size = 500;
  app.add_option("--which", which, "synth1 or synth2")->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--group-size", group_size)->capture_default_str();
  app.add_option("--restarts", restarts)->capture_default_str();
  app.add_option("--burn-in", burn_in)->capture_default_str();
  app.add_option("--sweeps", sweeps)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto spec =
      which == "synth2" ? synth2_spec(seed, group_size) : synth1_spec(seed, group_size);
    const auto truth = generate(spec);
    const auto phi = precompute_phi(truth.data, spec.specs);
    std::printf("%s: N = %zu, M = %zu\n", which.c_str(), phi.n_obs(), phi.n_items());

    const auto fit = fit_em(phi, 3, {.restarts = restarts, .seed = seed});
    const auto em_labels = hard_assign(fit.resp);
    std::printf("EM k=3, best of %zu: log posterior %.6f, accuracy %.4f\n", restarts,
                fit.log_post, permuted_accuracy(em_labels, truth.groups));

    SamplerOptions so;
    so.burn_in_sweeps = burn_in;
    so.sample_sweeps = sweeps;
    so.seed = seed;
    so.stride = std::max<std::size_t>(1, sweeps / 1000);
    const auto set = run_sampler(phi, KPrior::uniform(phi.n_obs()), so);
    const auto hist = k_histogram(set);
    std::printf("Gibbs %zu + %zu sweeps (%.3g steps/s), P(k):\n", burn_in, sweeps,
                set.steps_per_second);
    for (const auto& [k, p] : hist)
      std::printf("  k = %2zu  %.4f\n", k, p);
    const auto c = consensus_matrix(set);
    const auto& rep = set.samples[consensus_select(set, c)];
    std::printf("map k = %zu; consensus sample has k = %zu, accuracy %.4f\n", map_k(hist), rep.k,
                permuted_accuracy(rep.labels(), truth.groups));
    for (const auto& m : mi_ranking(set))
      std::printf("  item %zu: %.4f bits\n", m.item + 1, m.bits);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
