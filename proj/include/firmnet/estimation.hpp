#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "firmnet/model.hpp"
#include "firmnet/panel.hpp"
#include "firmnet/params.hpp"
#include "firmnet/rng.hpp"
#include "firmnet/spectral.hpp"

namespace firmnet {

// ---------------------------------------------------------------------------
// Priors: independent normals on the six location parameters, inverse gamma
// on the shock variance (shape/scale parameterisation, so the variance
// conditional stays conjugate).

struct NormalPrior {
  double mean = 0.0;
  double var = 1.0;
};

struct InvGammaPrior {
  double shape = 2.0;
  double scale = 0.5;
};

struct PriorSpec {
  NormalPrior beta_G, beta_H, beta_LG, beta_LH, gamma, mu0;
  InvGammaPrior sigma0_sq;

  std::array<const NormalPrior*, 6> locations() const {
    return {&beta_G, &beta_H, &beta_LG, &beta_LH, &gamma, &mu0};
  }

  void validate() const {
    for (const NormalPrior* p : locations()) {
      if (!std::isfinite(p->mean) || !std::isfinite(p->var) || p->var <= 0.0)
        throw ConfigError("prior: location priors need finite mean and positive variance");
    }
    if (sigma0_sq.shape <= 0.0 || sigma0_sq.scale <= 0.0)
      throw ConfigError("prior: inverse-gamma hyperparameters must be positive");
  }
};

struct ChainConfig {
  int iterations = 10500;
  int burn_in = 500;
  int thinning = 10;
  double step_beta = 0.02;  // random-walk sd for the (beta_G, beta_H) block
  double step_lag = 0.02;   // random-walk sd for the (beta_LG, beta_LH, gamma) block
  bool adapt = true;        // step-size tuning, burn-in only
  std::uint64_t seed = 0;
  LogdetOptions logdet;
  int neumann_terms = 30;

  int retained() const { return (iterations - burn_in) / thinning; }

  void validate() const {
    if (iterations < 1) throw ConfigError("chain: iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations)
      throw ConfigError("chain: burn-in must lie inside the iteration budget");
    if (thinning < 1) throw ConfigError("chain: thinning must be >= 1");
    if ((iterations - burn_in) % thinning != 0)
      throw ConfigError("chain: post-burn-in iterations must divide evenly by thinning");
    if (step_beta <= 0.0 || step_lag <= 0.0)
      throw ConfigError("chain: proposal step sizes must be positive");
  }
};

struct ParamSummaryRow {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct ChainSummary {
  double level = 0.99;
  std::array<ParamSummaryRow, 7> rows;  // order follows StructuralParams::names
};

struct PosteriorChain {
  std::vector<StructuralParams> samples;
  double accept_rate_beta = 0.0;  // post-burn-in acceptance, contemporaneous block
  double accept_rate_lag = 0.0;   // post-burn-in acceptance, lagged block
  double step_beta_final = 0.0;
  double step_lag_final = 0.0;
  ChainSummary summary;
};

// ---------------------------------------------------------------------------
// Chain summary: means plus equal-tailed credible intervals.  Quantiles use
// the standard linear-interpolation rule on sorted draws (type 7).

inline ChainSummary summarize_chain(const std::vector<StructuralParams>& samples,
                                    double level = 0.99) {
  if (samples.empty()) throw DataError("summarize_chain: no samples");
  if (level <= 0.0 || level >= 1.0)
    throw ConfigError("summarize_chain: credible level must lie in (0,1)");
  ChainSummary summary;
  summary.level = level;
  double q_lo = (1.0 - level) / 2.0;
  double q_hi = 1.0 - q_lo;
  std::vector<double> values(samples.size());
  for (std::size_t k = 0; k < 7; ++k) {
    double sum = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      values[s] = samples[s].as_array()[k];
      sum += values[s];
    }
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
      double pos = q * static_cast<double>(values.size() - 1);
      auto lo = static_cast<std::size_t>(pos);
      if (lo >= values.size() - 1) return values.back();
      double frac = pos - static_cast<double>(lo);
      return values[lo] + frac * (values[lo + 1] - values[lo]);
    };
    summary.rows[k] = {sum / static_cast<double>(samples.size()), quantile(q_lo),
                       quantile(q_hi)};
  }
  return summary;
}

namespace detail {

// Pooled sufficient statistics.  For each transition the shock is a fixed
// linear combination of seven precomputed basis vectors:
//   eps_t = y_t - bG*G_t y_t - bH*H_t y_t - bLG*G_{t-1} y_{t-1}
//               - bLH*H_{t-1} y_{t-1} - g*y_{t-1} - mu0*1.
// Summing the 7x7 Gram matrices of those bases over transitions makes every
// residual quantity the sampler needs an O(1) quadratic form, so proposal
// cost is dominated by the log-determinant alone.
struct GramStats {
  std::array<double, 49> q{};  // row-major 7x7, symmetric
  double n_total = 0.0;        // firms x transitions

  static std::array<double, 7> coeffs(const StructuralParams& p) {
    return {1.0, -p.beta_G, -p.beta_H, -p.beta_LG, -p.beta_LH, -p.gamma, -p.mu0};
  }

  double quad(const std::array<double, 7>& c) const {
    double s = 0.0;
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) s += c[i] * q[static_cast<std::size_t>(7 * i + j)] * c[j];
    return s;
  }

  // sum of squared centred shocks, sum(eps - mu0)^2
  double ssr(const StructuralParams& p) const { return quad(coeffs(p)); }

  // sum of raw shocks, sum(eps); drops the mu0 column
  double shock_sum(const StructuralParams& p) const {
    auto c = coeffs(p);
    c[6] = 0.0;
    double s = 0.0;
    for (int i = 0; i < 7; ++i) s += c[i] * q[static_cast<std::size_t>(7 * i + 6)];
    return s;
  }
};

inline GramStats accumulate_gram(const PanelNetwork& panel, const GrowthPanel& growth) {
  const auto& years = panel.years();
  if (years.size() < 2) throw DataError("estimation: need at least two panel years");
  FirmIndex n = panel.firm_count();
  if (growth.firm_count() != n)
    throw DimensionError("estimation: growth panel firm count mismatch");

  GramStats stats;
  std::array<std::vector<double>, 7> basis;
  for (std::size_t t = 1; t < years.size(); ++t) {
    if (years[t] != years[t - 1] + 1)
      throw DataError("estimation: panel years must be consecutive");
    const NetworkSnapshot& now = panel.snapshot_at(t);
    const NetworkSnapshot& prev = panel.snapshot_at(t - 1);
    const std::vector<double>& y = growth.y(years[t]);
    const std::vector<double>& y_prev = growth.y(years[t - 1]);

    basis[0] = y;
    basis[1] = spmv(now.G, 1.0, y);
    basis[2] = spmv(now.H, 1.0, y);
    basis[3] = spmv(prev.G, 1.0, y_prev);
    basis[4] = spmv(prev.H, 1.0, y_prev);
    basis[5] = y_prev;
    basis[6].assign(n, 1.0);

    for (int i = 0; i < 7; ++i)
      for (int j = i; j < 7; ++j) {
        double dot = 0.0;
        for (FirmIndex k = 0; k < n; ++k) dot += basis[static_cast<std::size_t>(i)][k] *
                                                 basis[static_cast<std::size_t>(j)][k];
        stats.q[static_cast<std::size_t>(7 * i + j)] += dot;
        if (i != j) stats.q[static_cast<std::size_t>(7 * j + i)] += dot;
      }
    stats.n_total += static_cast<double>(n);
  }
  return stats;
}

// Frozen-probe trace-series log-determinant for one transition year.  The
// Rademacher probes are drawn once per year from a dedicated substream, so
// the approximate likelihood is a fixed deterministic function of the betas
// across the whole chain (common random numbers).
struct YearLogdet {
  const CsrMatrix* g = nullptr;
  const CsrMatrix* h = nullptr;
  std::vector<std::vector<double>> probes;
  int terms = 30;

  double eval(double beta_g, double beta_h) const {
    FirmIndex n = g->rows();
    double total = 0.0;
    std::vector<double> v(n), next(n);
    for (const auto& z : probes) {
      v = z;
      double acc = 0.0;
      for (int k = 1; k <= terms; ++k) {
        std::fill(next.begin(), next.end(), 0.0);
        spmv_add(*g, beta_g, v, next);
        spmv_add(*h, beta_h, v, next);
        v.swap(next);
        double dot = 0.0;
        for (FirmIndex i = 0; i < n; ++i) dot += z[i] * v[i];
        acc -= dot / static_cast<double>(k);
      }
      total += acc;
    }
    return total / static_cast<double>(probes.size());
  }
};

// Identical consecutive-year snapshots (static or rarely-renewed panels)
// collapse to one representative with a multiplicity, since the determinant
// depends on topology alone.
struct LogdetEnsemble {
  std::vector<YearLogdet> years;              // trace-series path, unique snapshots
  std::vector<const NetworkSnapshot*> snaps;  // dense path, unique snapshots
  std::vector<double> weights;                // multiplicity per unique snapshot
  LogdetOptions options;

  double eval(double beta_g, double beta_h) const {
    double total = 0.0;
    if (options.method == LogdetMethod::dense) {
      for (std::size_t k = 0; k < snaps.size(); ++k)
        total += weights[k] * logdet_dense(snaps[k]->G, snaps[k]->H, beta_g, beta_h,
                                           options.dense_limit)
                                  .value;
    } else {
      for (std::size_t k = 0; k < years.size(); ++k)
        total += weights[k] * years[k].eval(beta_g, beta_h);
    }
    return total;
  }
};

inline LogdetEnsemble build_logdet_ensemble(const PanelNetwork& panel,
                                            const LogdetOptions& opts) {
  LogdetEnsemble ens;
  ens.options = opts;
  std::vector<const NetworkSnapshot*> uniques;
  for (std::size_t t = 1; t < panel.years().size(); ++t) {
    const NetworkSnapshot& snap = panel.snapshot_at(t);
    bool merged = false;
    for (std::size_t k = 0; k < uniques.size(); ++k) {
      if (uniques[k]->G == snap.G && uniques[k]->H == snap.H) {
        ens.weights[k] += 1.0;
        merged = true;
        break;
      }
    }
    if (merged) continue;
    uniques.push_back(&snap);
    ens.weights.push_back(1.0);
    if (opts.method == LogdetMethod::dense) {
      ens.snaps.push_back(&snap);
      continue;
    }
    YearLogdet yl;
    yl.g = &snap.G;
    yl.h = &snap.H;
    yl.terms = opts.trace_terms;
    FirmIndex n = snap.G.rows();
    yl.probes.resize(static_cast<std::size_t>(opts.trace_probes));
    for (int p = 0; p < opts.trace_probes; ++p) {
      auto eng = rng::substream(opts.seed, "logdet-probe",
                                (static_cast<std::uint64_t>(t) << 20) +
                                    static_cast<std::uint64_t>(p));
      auto& z = yl.probes[static_cast<std::size_t>(p)];
      z.resize(n);
      for (FirmIndex i = 0; i < n; ++i) z[i] = (eng() & 1u) ? 1.0 : -1.0;
    }
    ens.years.push_back(std::move(yl));
  }
  return ens;
}

// Spectral guard across every transition year, using the cheap row-sum
// bound first and the power-iteration estimate only when that fails.
inline bool betas_admissible(const PanelNetwork& panel, double beta_g, double beta_h) {
  for (std::size_t t = 1; t < panel.years().size(); ++t) {
    const NetworkSnapshot& snap = panel.snapshot_at(t);
    if (!spectral_guard_ok(snap.G, snap.H, beta_g, beta_h)) return false;
  }
  return true;
}

inline double normal_logpdf(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

}  // namespace detail

// Conditional updates, exposed for direct verification: both are exact
// conjugate draws given the current shocks.
inline double sample_mu0_conditional(double shock_sum, double n_total, double sigma0_sq,
                                     const NormalPrior& prior, std::mt19937_64& eng) {
  double precision = n_total / sigma0_sq + 1.0 / prior.var;
  double mean = (shock_sum / sigma0_sq + prior.mean / prior.var) / precision;
  std::normal_distribution<double> draw(mean, std::sqrt(1.0 / precision));
  return draw(eng);
}

inline double sample_sigma0_sq_conditional(double ssr, double n_total,
                                           const InvGammaPrior& prior,
                                           std::mt19937_64& eng) {
  double shape = prior.shape + 0.5 * n_total;
  double scale = prior.scale + 0.5 * ssr;
  std::gamma_distribution<double> draw(shape, 1.0);
  return scale / draw(eng);
}

// ---------------------------------------------------------------------------
// Metropolis-within-Gibbs sampler.  Blocks per sweep:
//   1. (beta_G, beta_H): random-walk MH; the only block that touches the
//      log-determinant, guarded by the spectral check.
//   2. (beta_LG, beta_LH, gamma): random-walk MH; the Jacobian term cancels,
//      so the ratio is pure residual quadratic plus priors.
//   3. mu0: exact normal conditional.
//   4. sigma0^2: exact inverse-gamma conditional.

inline PosteriorChain gibbs_sample(const PanelNetwork& panel, const GrowthPanel& growth,
                                   const PriorSpec& priors, const ChainConfig& config) {
  priors.validate();
  config.validate();

  const detail::GramStats gram = detail::accumulate_gram(panel, growth);
  LogdetOptions logdet_opts = config.logdet;
  logdet_opts.seed = config.seed;
  const detail::LogdetEnsemble logdet = detail::build_logdet_ensemble(panel, logdet_opts);

  // Initial state: prior means for locations, observed-growth sd for sigma0.
  StructuralParams cur;
  {
    auto locs = priors.locations();
    std::array<double, 7> a{};
    for (std::size_t k = 0; k < 6; ++k) a[k] = locs[k]->mean;
    double sum = 0.0, sum2 = 0.0, count = 0.0;
    for (std::size_t t = 1; t < panel.years().size(); ++t) {
      for (double v : growth.y(panel.years()[t])) {
        sum += v;
        sum2 += v * v;
        count += 1.0;
      }
    }
    double var = count > 1.0 ? (sum2 - sum * sum / count) / (count - 1.0) : 1.0;
    a[6] = std::sqrt(std::max(var, 1e-12));
    cur = StructuralParams::from_array(a);
  }
  if (!detail::betas_admissible(panel, cur.beta_G, cur.beta_H)) {
    SpectralBound sb = spectral_bound(panel.snapshot_at(1).G, panel.snapshot_at(1).H,
                                      cur.beta_G, cur.beta_H);
    throw ConvergenceError("estimation: initial betas violate the spectral guard",
                           sb.rho_estimate);
  }

  auto eng = rng::substream(config.seed, "gibbs-chain");
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double cur_ssr = gram.ssr(cur);
  double cur_logdet = logdet.eval(cur.beta_G, cur.beta_H);

  double step_beta = config.step_beta;
  double step_lag = config.step_lag;
  int beta_recent = 0, beta_recent_acc = 0;
  int lag_recent = 0, lag_recent_acc = 0;
  long beta_post = 0, beta_post_acc = 0;
  long lag_post = 0, lag_post_acc = 0;
  constexpr int kAdaptBatch = 40;
  constexpr double kTargetAccept = 0.30;

  PosteriorChain chain;
  chain.samples.reserve(static_cast<std::size_t>(config.retained()));
  auto locs = priors.locations();

  for (int iter = 0; iter < config.iterations; ++iter) {
    bool in_burn = iter < config.burn_in;

    // Block 1: contemporaneous betas (log-determinant changes).
    {
      StructuralParams prop = cur;
      prop.beta_G += step_beta * std_normal(eng);
      prop.beta_H += step_beta * std_normal(eng);
      double u = unif(eng);
      bool accepted = false;
      if (detail::betas_admissible(panel, prop.beta_G, prop.beta_H)) {
        double prop_ssr = gram.ssr(prop);
        double prop_logdet = logdet.eval(prop.beta_G, prop.beta_H);
        double sigma_sq = cur.sigma0 * cur.sigma0;
        double delta = (prop_logdet - cur_logdet) - 0.5 * (prop_ssr - cur_ssr) / sigma_sq +
                       detail::normal_logpdf(prop.beta_G, locs[0]->mean, locs[0]->var) -
                       detail::normal_logpdf(cur.beta_G, locs[0]->mean, locs[0]->var) +
                       detail::normal_logpdf(prop.beta_H, locs[1]->mean, locs[1]->var) -
                       detail::normal_logpdf(cur.beta_H, locs[1]->mean, locs[1]->var);
        if (std::log(u) < delta) {
          cur = prop;
          cur_ssr = prop_ssr;
          cur_logdet = prop_logdet;
          accepted = true;
        }
      }
      if (in_burn) {
        ++beta_recent;
        beta_recent_acc += accepted ? 1 : 0;
        if (config.adapt && beta_recent == kAdaptBatch) {
          double rate = static_cast<double>(beta_recent_acc) / kAdaptBatch;
          step_beta = std::clamp(step_beta * std::exp(0.8 * (rate - kTargetAccept)), 1e-6, 1.0);
          beta_recent = beta_recent_acc = 0;
        }
      } else {
        ++beta_post;
        beta_post_acc += accepted ? 1 : 0;
      }
    }

    // Block 2: lagged terms and persistence (log-determinant cancels).
    {
      StructuralParams prop = cur;
      prop.beta_LG += step_lag * std_normal(eng);
      prop.beta_LH += step_lag * std_normal(eng);
      prop.gamma += step_lag * std_normal(eng);
      double u = unif(eng);
      double prop_ssr = gram.ssr(prop);
      double sigma_sq = cur.sigma0 * cur.sigma0;
      double delta = -0.5 * (prop_ssr - cur_ssr) / sigma_sq +
                     detail::normal_logpdf(prop.beta_LG, locs[2]->mean, locs[2]->var) -
                     detail::normal_logpdf(cur.beta_LG, locs[2]->mean, locs[2]->var) +
                     detail::normal_logpdf(prop.beta_LH, locs[3]->mean, locs[3]->var) -
                     detail::normal_logpdf(cur.beta_LH, locs[3]->mean, locs[3]->var) +
                     detail::normal_logpdf(prop.gamma, locs[4]->mean, locs[4]->var) -
                     detail::normal_logpdf(cur.gamma, locs[4]->mean, locs[4]->var);
      bool accepted = std::log(u) < delta;
      if (accepted) {
        cur = prop;
        cur_ssr = prop_ssr;
      }
      if (in_burn) {
        ++lag_recent;
        lag_recent_acc += accepted ? 1 : 0;
        if (config.adapt && lag_recent == kAdaptBatch) {
          double rate = static_cast<double>(lag_recent_acc) / kAdaptBatch;
          step_lag = std::clamp(step_lag * std::exp(0.8 * (rate - kTargetAccept)), 1e-6, 1.0);
          lag_recent = lag_recent_acc = 0;
        }
      } else {
        ++lag_post;
        lag_post_acc += accepted ? 1 : 0;
      }
    }

    // Block 3: shock mean, exact conditional.
    {
      double sigma_sq = cur.sigma0 * cur.sigma0;
      cur.mu0 = sample_mu0_conditional(gram.shock_sum(cur), gram.n_total, sigma_sq,
                                       *locs[5], eng);
      cur_ssr = gram.ssr(cur);
    }

    // Block 4: shock variance, exact conditional.
    {
      double sigma_sq =
          sample_sigma0_sq_conditional(cur_ssr, gram.n_total, priors.sigma0_sq, eng);
      cur.sigma0 = std::sqrt(sigma_sq);
    }

    if (!in_burn && (iter - config.burn_in) % config.thinning == 0)
      chain.samples.push_back(cur);
  }

  chain.accept_rate_beta =
      beta_post > 0 ? static_cast<double>(beta_post_acc) / static_cast<double>(beta_post) : 0.0;
  chain.accept_rate_lag =
      lag_post > 0 ? static_cast<double>(lag_post_acc) / static_cast<double>(lag_post) : 0.0;
  chain.step_beta_final = step_beta;
  chain.step_lag_final = step_lag;
  chain.summary = summarize_chain(chain.samples, 0.99);
  return chain;
}

}  // namespace firmnet
