#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "firmnet/csr.hpp"
#include "firmnet/errors.hpp"
#include "firmnet/panel.hpp"
#include "firmnet/params.hpp"
#include "firmnet/rng.hpp"
#include "firmnet/spectral.hpp"

namespace firmnet {

namespace detail {

inline void check_guard(const CsrMatrix& g, const CsrMatrix& h, double bg, double bh) {
  if (spectral_guard_ok(g, h, bg, bh)) return;
  SpectralBound sb = spectral_bound(g, h, bg, bh);
  throw ConvergenceError("Neumann series does not converge for given coefficients",
                         sb.rho_estimate);
}

}  // namespace detail

struct NeumannResult {
  std::vector<double> x;
  double tail_norm = 0.0;  // infinity norm of the last added term
  int terms = 0;
};

// x = sum_{k=0}^{terms-1} M^k rhs with M = beta_G G + beta_H H.  The tail
// norm of the final term is reported as a truncation-error proxy.
inline NeumannResult neumann_solve(const CsrMatrix& g, const CsrMatrix& h, double beta_G,
                                   double beta_H, std::span<const double> rhs,
                                   int terms = 30) {
  if (terms < 1) throw ConfigError("neumann_solve: terms must be >= 1");
  if (rhs.size() != g.rows() || g.rows() != h.rows())
    throw DimensionError("neumann_solve: dimension mismatch");
  detail::check_guard(g, h, beta_G, beta_H);

  NeumannResult out;
  out.terms = terms;
  out.x.assign(rhs.begin(), rhs.end());
  std::vector<double> term(rhs.begin(), rhs.end()), next(rhs.size());
  for (int k = 1; k < terms; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    spmv_add(g, beta_G, term, next);
    spmv_add(h, beta_H, term, next);
    term.swap(next);
    double tail = 0.0;
    for (std::size_t i = 0; i < term.size(); ++i) {
      out.x[i] += term[i];
      tail = std::max(tail, std::abs(term[i]));
    }
    out.tail_norm = tail;
    if (tail == 0.0) break;  // series terminated (nilpotent case)
  }
  return out;
}

// One transition of the structural model:
//   (I - beta_G G_t - beta_H H_t) y_t =
//       (beta_LG G_{t-1} + beta_LH H_{t-1}) y_{t-1} + gamma y_{t-1} + eps_t
inline std::vector<double> simulate_step(const StructuralParams& p,
                                         const NetworkSnapshot& now,
                                         const NetworkSnapshot& prev,
                                         std::span<const double> y_prev,
                                         std::span<const double> eps,
                                         int terms = 30) {
  if (y_prev.size() != eps.size() || y_prev.size() != now.G.rows())
    throw DimensionError("simulate_step: dimension mismatch");
  std::vector<double> rhs(eps.begin(), eps.end());
  spmv_add(prev.G, p.beta_LG, y_prev, rhs);
  spmv_add(prev.H, p.beta_LH, y_prev, rhs);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += p.gamma * y_prev[i];
  return neumann_solve(now.G, now.H, p.beta_G, p.beta_H, rhs, terms).x;
}

// e_t = (I - beta_G G_t - beta_H H_t) y_t; exact, no series involved.
inline std::vector<double> extract_shocks_simple(const StructuralParams& p,
                                                 const NetworkSnapshot& now,
                                                 std::span<const double> y) {
  if (y.size() != now.G.rows()) throw DimensionError("extract_shocks: dimension mismatch");
  std::vector<double> e(y.begin(), y.end());
  spmv_add(now.G, -p.beta_G, y, e);
  spmv_add(now.H, -p.beta_H, y, e);
  return e;
}

// Full structural residual including the lagged-network and persistence terms.
inline ShockVector extract_shocks_full(const StructuralParams& p, const PanelNetwork& panel,
                                       const GrowthPanel& growth, int year) {
  std::size_t idx = panel.year_index(year);
  if (idx == 0) throw DataError("extract_shocks_full: first panel year has no predecessor");
  int prev_year = panel.years()[idx - 1];
  const auto& now = panel.snapshot_at(idx);
  const auto& prev = panel.snapshot_at(idx - 1);
  const auto& y = growth.y(year);
  const auto& y_prev = growth.y(prev_year);

  ShockVector out;
  out.year = year;
  out.e = extract_shocks_simple(p, now, y);
  spmv_add(prev.G, -p.beta_LG, y_prev, out.e);
  spmv_add(prev.H, -p.beta_LH, y_prev, out.e);
  for (std::size_t i = 0; i < out.e.size(); ++i) out.e[i] -= p.gamma * y_prev[i];
  return out;
}

// ---------------------------------------------------------------------------
// log determinant of (I - beta_G G - beta_H H)

enum class LogdetMethod { dense, trace_series };

struct LogdetOptions {
  LogdetMethod method = LogdetMethod::trace_series;
  int trace_terms = 30;       // K in -sum_k tr(M^k)/k
  int trace_probes = 32;      // Hutchinson sign probes
  std::size_t dense_limit = 2000;
  std::uint64_t seed = 0;
};

struct LogdetResult {
  double value = 0.0;
  double std_error = 0.0;  // zero for the dense method
};

inline LogdetResult logdet_dense(const CsrMatrix& g, const CsrMatrix& h, double beta_G,
                                 double beta_H, std::size_t dense_limit = 2000) {
  const std::size_t n = g.rows();
  if (n > dense_limit)
    throw ConfigError("logdet dense method refused above n = " + std::to_string(dense_limit));
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
  for (FirmIndex i = 0; i < n; ++i) {
    for (FirmIndex j : g.row(i)) m(i, j) -= beta_G;
    for (FirmIndex j : h.row(i)) m(i, j) -= beta_H;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  // det(I - M) > 0 whenever rho(M) < 1, so the absolute value is safe here
  double logdet = 0.0;
  const auto& u = lu.matrixLU();
  for (Eigen::Index i = 0; i < u.rows(); ++i) logdet += std::log(std::abs(u(i, i)));
  return {logdet, 0.0};
}

// Hutchinson estimate of log det(I - M) = -sum_k tr(M^k)/k with Rademacher
// probes.  Each probe walks the power series once; the standard error is the
// sample deviation of per-probe log-determinant contributions.
inline LogdetResult logdet_trace_series(const CsrMatrix& g, const CsrMatrix& h,
                                        double beta_G, double beta_H,
                                        const LogdetOptions& opts) {
  detail::check_guard(g, h, beta_G, beta_H);
  const std::size_t n = g.rows();
  const int m = opts.trace_probes;
  if (m < 2) throw ConfigError("trace_series needs at least 2 probes");
  std::vector<double> per_probe(m, 0.0);
  std::vector<double> z(n), v(n), next(n);
  for (int p = 0; p < m; ++p) {
    auto eng = rng::substream(opts.seed, "logdet-probe", static_cast<std::uint64_t>(p));
    for (std::size_t i = 0; i < n; ++i) z[i] = (eng() & 1u) ? 1.0 : -1.0;
    v = z;
    double acc = 0.0;
    for (int k = 1; k <= opts.trace_terms; ++k) {
      std::fill(next.begin(), next.end(), 0.0);
      spmv_add(g, beta_G, v, next);
      spmv_add(h, beta_H, v, next);
      v.swap(next);
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += z[i] * v[i];
      acc -= dot / static_cast<double>(k);
    }
    per_probe[p] = acc;
  }
  double mean = 0.0;
  for (double x : per_probe) mean += x;
  mean /= m;
  double ss = 0.0;
  for (double x : per_probe) ss += (x - mean) * (x - mean);
  double se = std::sqrt(ss / (m - 1) / m);
  return {mean, se};
}

inline LogdetResult logdet_i_minus_m(const CsrMatrix& g, const CsrMatrix& h, double beta_G,
                                     double beta_H, const LogdetOptions& opts) {
  if (opts.method == LogdetMethod::dense)
    return logdet_dense(g, h, beta_G, beta_H, opts.dense_limit);
  return logdet_trace_series(g, h, beta_G, beta_H, opts);
}

// ---------------------------------------------------------------------------
// Gaussian transition likelihood

struct GaussianLikelihood {
  std::vector<double> mean;   // mu of the multivariate normal for y_t
  double logdet_Sigma = 0.0;
  double quad_form = 0.0;
  double loglik = 0.0;
};

// y_t | y_{t-1} is N(mu, Sigma) with mu = (I-M)^{-1}(mu0 + (L + gamma I) y_{t-1})
// and Sigma = (I-M)^{-1}(I-M')^{-1} sigma0^2.  The quadratic form is evaluated
// in shock space -- ||eps_t - mu0||^2 / sigma0^2 -- which is algebraically the
// same and never inverts anything.
inline GaussianLikelihood log_likelihood(const StructuralParams& p,
                                         const PanelNetwork& panel,
                                         const GrowthPanel& growth, int year,
                                         const LogdetOptions& logdet_opts,
                                         int neumann_terms = 30) {
  p.validate();
  std::size_t idx = panel.year_index(year);
  if (idx == 0) throw DataError("log_likelihood: first panel year has no predecessor");
  const auto& now = panel.snapshot_at(idx);
  const std::size_t n = panel.firm_count();

  ShockVector eps = extract_shocks_full(p, panel, growth, year);
  double quad = 0.0;
  for (double e : eps.e) {
    double d = e - p.mu0;
    quad += d * d;
  }
  quad /= p.sigma0 * p.sigma0;

  LogdetResult ld = logdet_i_minus_m(now.G, now.H, p.beta_G, p.beta_H, logdet_opts);

  GaussianLikelihood out;
  out.quad_form = quad;
  out.logdet_Sigma = static_cast<double>(n) * std::log(p.sigma0 * p.sigma0) - 2.0 * ld.value;
  out.loglik = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) +
                       out.logdet_Sigma + out.quad_form);

  // mu0 enters as a constant vector; the mean needs one forward solve
  int prev_year = panel.years()[idx - 1];
  const auto& prev = panel.snapshot_at(idx - 1);
  const auto& y_prev = growth.y(prev_year);
  std::vector<double> rhs(n, p.mu0);
  spmv_add(prev.G, p.beta_LG, y_prev, rhs);
  spmv_add(prev.H, p.beta_LH, y_prev, rhs);
  for (std::size_t i = 0; i < n; ++i) rhs[i] += p.gamma * y_prev[i];
  out.mean = neumann_solve(now.G, now.H, p.beta_G, p.beta_H, rhs, neumann_terms).x;
  return out;
}

}  // namespace firmnet
