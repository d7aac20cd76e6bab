#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "firmnet/estimation.hpp"
#include "firmnet/synthetic.hpp"

namespace firmnet {

// ---------------------------------------------------------------------------
// Measurement-error experiment: estimate once on clean growth, once on the
// same growth with classical noise added, and compare.  Theory predicts the
// location parameters shrink by the reliability ratio
//   r = var(shock) / (var(shock) + var(noise)),
// so the empirical ratios apparent/clean should hover near r.  Both runs
// share one latent panel (only the noise differs), which strips the
// generator's sampling variation out of the comparison.

struct AttenuationReport {
  StructuralParams theta_clean;     // posterior means, noise-free run
  StructuralParams theta_apparent;  // posterior means, noisy run
  ChainSummary summary_clean;
  ChainSummary summary_apparent;
  double noise_sd = 0.0;
  double r_theoretical = 0.0;
  // apparent/clean for beta_G, beta_H, beta_LG, beta_LH, gamma
  std::array<double, 5> r_empirical{};
};

inline AttenuationReport measurement_error_experiment(const GeneratorConfig& generator,
                                                      double noise_sd,
                                                      const PriorSpec& priors,
                                                      const ChainConfig& chain) {
  if (noise_sd <= 0.0)
    throw ConfigError("attenuation: noise sd must be positive");
  if (generator.params.sigma0 <= 0.0)
    throw ConfigError("attenuation: degenerate shock distribution");

  GeneratorConfig clean_cfg = generator;
  clean_cfg.noise_sd = 0.0;
  SyntheticPanel panel = generate_panel(clean_cfg);

  // overlay noise on the shared latent panel
  GrowthPanel noisy = panel.growth;
  {
    auto eng = rng::substream(generator.seed, "attenuation-noise");
    std::normal_distribution<double> dist(0.0, noise_sd);
    std::vector<std::vector<double>> y_noisy;
    for (std::size_t t = 0; t < panel.growth.years().size(); ++t) {
      std::vector<double> y = panel.growth.y_at(t);
      for (double& v : y) v += dist(eng);
      y_noisy.push_back(std::move(y));
    }
    noisy = GrowthPanel(panel.growth.firm_count(), panel.growth.years(), std::move(y_noisy));
  }

  PosteriorChain chain_clean = gibbs_sample(panel.network, panel.growth, priors, chain);
  PosteriorChain chain_noisy = gibbs_sample(panel.network, noisy, priors, chain);

  AttenuationReport report;
  report.noise_sd = noise_sd;
  auto mean_params = [](const ChainSummary& s) {
    std::array<double, 7> a{};
    for (std::size_t k = 0; k < 7; ++k) a[k] = s.rows[k].mean;
    return StructuralParams::from_array(a);
  };
  report.theta_clean = mean_params(chain_clean.summary);
  report.theta_apparent = mean_params(chain_noisy.summary);
  report.summary_clean = chain_clean.summary;
  report.summary_apparent = chain_noisy.summary;

  double shock_var = generator.params.sigma0 * generator.params.sigma0;
  report.r_theoretical = shock_var / (shock_var + noise_sd * noise_sd);
  auto a_clean = report.theta_clean.as_array();
  auto a_app = report.theta_apparent.as_array();
  for (std::size_t k = 0; k < 5; ++k)
    report.r_empirical[k] = a_clean[k] != 0.0 ? a_app[k] / a_clean[k]
                                              : std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace firmnet
