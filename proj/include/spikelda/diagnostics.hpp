#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "spikelda/common.hpp"
#include "spikelda/core_linalg.hpp"
#include "spikelda/rng.hpp"
#include "spikelda/simbench.hpp"
#include "spikelda/whitening.hpp"

namespace spikelda {

// Deterministic delocalized basis: d columns of the discrete cosine family
// u_k(i) = sqrt(2/p) cos(pi k (i + 1/2) / p), k = 1..d. Exactly orthonormal
// with row norms at most sqrt(2 d / p) (coherence constant sqrt(2)).
inline Matrix dct_basis(int p, int d) {
  if (d < 1 || d >= p) throw RangeError("dct_basis: need 1 <= d < p");
  Matrix u(p, d);
  for (int k = 1; k <= d; ++k)
    for (int i = 0; i < p; ++i)
      u(i, k - 1) = std::sqrt(2.0 / p) *
                    std::cos(std::numbers::pi * k * (i + 0.5) / static_cast<double>(p));
  return u;
}

// Spike pattern for the synthetic rate checks: lambda_k = spike_scale_k * p on
// a unit-variance bulk, means separated on the first `support` coordinates.
struct SpikeSpec {
  int d = 2;
  std::vector<double> spike_scale = {4.0, 1.0};
  double sigma2 = 1.0;
  double mean_shift = 1.0;
  int support = 10;

  SimModel instantiate(int p) const {
    if (static_cast<int>(spike_scale.size()) != d)
      throw ValidationError("SpikeSpec: spike_scale size must equal d");
    SimModel m;
    m.mu1 = Vector::Zero(p);
    m.mu2 = Vector::Zero(p);
    for (int j = 0; j < std::min(support, p); ++j) m.mu2(j) = mean_shift;
    m.spike_basis = dct_basis(p, d);
    m.spike_excess.resize(d);
    for (int k = 0; k < d; ++k) m.spike_excess(k) = spike_scale[static_cast<std::size_t>(k)] * p;
    std::sort(m.spike_excess.data(), m.spike_excess.data() + d, std::greater<double>());
    m.bulk = sigma2;
    return m;
  }
};

struct DiagnosticsConfig {
  std::vector<std::pair<int, int>> grid;  // (n, p), n = total sample count
  int reps = 50;
  SpikeSpec spike;
  double threshold_c = 0.5;
  double threshold_alpha = 0.3;
  double rho_model2 = 0.5;  // selection-consistency generator
  std::uint64_t seed = kDefaultSeed;
  int threads = 0;
  double inject_bias = 0.0;  // test hook: additive error bias, breaks decay rates

  static DiagnosticsConfig defaults() {
    DiagnosticsConfig c;
    c.grid = {{250, 100}, {1000, 100}, {4000, 100}, {250, 200}, {1000, 200},
              {4000, 200}, {250, 400}, {1000, 400}, {4000, 400}};
    return c;
  }
};

struct RateRow {
  int n = 0, p = 0;
  std::string metric;
  double mean = 0.0;
  double q95 = 0.0;
  double ratio_to_bound = 0.0;
};

namespace detail {

inline double quantile95(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t idx =
      static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

inline double sim_effective_rank(const SimModel& m) {
  const Index p = m.p();
  const double tr = m.spike_excess.sum() + m.bulk * static_cast<double>(p);
  const double top = (m.spike_excess.size() > 0 ? m.spike_excess.maxCoeff() : 0.0) + m.bulk;
  return tr / top;
}

}  // namespace detail

// Per-cell mean aligned two-to-infinity eigenvector error, its raw
// (unaligned) companion, and the ratio to sqrt(d^3 max{r(Sigma), ln p}/(n p)).
inline std::vector<RateRow> rate_check_theorem1(const DiagnosticsConfig& cfg) {
  std::vector<RateRow> rows;
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
  for (std::size_t cell = 0; cell < cfg.grid.size(); ++cell) {
    const auto [n, p] = cfg.grid[cell];
    const SimModel model = cfg.spike.instantiate(p);
    const Matrix& u_true = model.spike_basis;
    std::vector<double> aligned(static_cast<std::size_t>(cfg.reps)),
        raw(static_cast<std::size_t>(cfg.reps));
    detail::parallel_for(cfg.reps, threads, [&](int r) {
      Rng rng(Rng::derive(Rng::derive(cfg.seed, 101 + cell), static_cast<std::uint64_t>(r)));
      LabeledDataset data = sample_dataset(model, n / 2, n - n / 2, rng);
      PooledStats stats = pooled_covariance(data);
      EigenPairs pairs = stats.top_eigenpairs(cfg.spike.d);
      const Matrix xi = procrustes_align(pairs.vectors, u_true);
      aligned[static_cast<std::size_t>(r)] =
          two_to_inf_norm(pairs.vectors * xi - u_true) + cfg.inject_bias;
      raw[static_cast<std::size_t>(r)] = two_to_inf_norm(pairs.vectors - u_true) + cfg.inject_bias;
    });
    const double r_sigma = detail::sim_effective_rank(model);
    const double bound = std::sqrt(std::pow(cfg.spike.d, 3) *
                                   std::max(r_sigma, std::log(static_cast<double>(p))) /
                                   (static_cast<double>(n) * p));
    auto push = [&](const char* name, const std::vector<double>& v) {
      RateRow row;
      row.n = n;
      row.p = p;
      row.metric = name;
      double s = 0.0;
      for (double x : v) s += x;
      row.mean = s / static_cast<double>(v.size());
      row.q95 = detail::quantile95(v);
      row.ratio_to_bound = row.mean / bound;
      rows.push_back(row);
    };
    push("t1_aligned_2inf", aligned);
    push("t1_raw_2inf", raw);
  }
  return rows;
}

// Per-cell mean and 0.95-quantile of the sup-norm error of the estimated
// whitened direction, with the ratio to sqrt(ln p / n).
inline std::vector<RateRow> rate_check_theorem2(const DiagnosticsConfig& cfg) {
  std::vector<RateRow> rows;
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
  for (std::size_t cell = 0; cell < cfg.grid.size(); ++cell) {
    const auto [n, p] = cfg.grid[cell];
    const SimModel model = cfg.spike.instantiate(p);
    const Vector zeta_true = model.true_zeta();
    std::vector<double> errs(static_cast<std::size_t>(cfg.reps));
    detail::parallel_for(cfg.reps, threads, [&](int r) {
      Rng rng(Rng::derive(Rng::derive(cfg.seed, 202 + cell), static_cast<std::uint64_t>(r)));
      LabeledDataset data = sample_dataset(model, n / 2, n - n / 2, rng);
      PooledStats stats = pooled_covariance(data);
      WhiteningOperator w(fit_spiked(stats, cfg.spike.d));
      const Vector zeta_hat = w.apply(stats.class_means[1]) - w.apply(stats.class_means[0]);
      errs[static_cast<std::size_t>(r)] =
          (zeta_hat - zeta_true).cwiseAbs().maxCoeff() + cfg.inject_bias;
    });
    RateRow row;
    row.n = n;
    row.p = p;
    row.metric = "t2_zeta_linf";
    double s = 0.0;
    for (double x : errs) s += x;
    row.mean = s / static_cast<double>(errs.size());
    row.q95 = detail::quantile95(errs);
    row.ratio_to_bound = row.mean / std::sqrt(std::log(static_cast<double>(p)) / n);
    rows.push_back(row);
  }
  return rows;
}

struct SelectionRow {
  int n = 0, p = 0;
  double fraction = 0.0;
  int reps = 0;
};

// Fraction of replicates in which hard thresholding recovers the exact
// whitened support of the block-correlation generator.
inline std::vector<SelectionRow> selection_consistency_check(const DiagnosticsConfig& cfg) {
  std::vector<SelectionRow> rows;
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
  for (std::size_t cell = 0; cell < cfg.grid.size(); ++cell) {
    const auto [n, p] = cfg.grid[cell];
    const SimModel model = gen_model2(p, cfg.rho_model2);
    const IndexSet truth = model.true_support_zeta();
    std::vector<int> hits(static_cast<std::size_t>(cfg.reps), 0);
    detail::parallel_for(cfg.reps, threads, [&](int r) {
      Rng rng(Rng::derive(Rng::derive(cfg.seed, 303 + cell), static_cast<std::uint64_t>(r)));
      LabeledDataset data = sample_dataset(model, n / 2, n - n / 2, rng);
      PooledStats stats = pooled_covariance(data);
      WhiteningOperator w(fit_spiked(stats, 2));  // two planted spikes
      const Vector zeta_hat = w.apply(stats.class_means[1]) - w.apply(stats.class_means[0]);
      try {
        auto sel = hard_threshold(zeta_hat, n, p, cfg.threshold_c, cfg.threshold_alpha);
        hits[static_cast<std::size_t>(r)] = (sel.selected == truth) ? 1 : 0;
      } catch (const EmptySelectionError&) {
        hits[static_cast<std::size_t>(r)] = 0;
      }
    });
    SelectionRow row;
    row.n = n;
    row.p = p;
    row.reps = cfg.reps;
    int total = 0;
    for (int h : hits) total += h;
    row.fraction = static_cast<double>(total) / cfg.reps;
    rows.push_back(row);
  }
  return rows;
}

struct WhiteningIdentityResult {
  double median_deviation = 0.0;
  std::vector<double> deviations;
};

// Operator-norm deviation of W_hat Sigma W_hat from the identity, where W_hat
// is fitted from n = n_factor * p samples and Sigma is the generator
// covariance.
inline WhiteningIdentityResult whitening_identity_check(int n_factor, int p,
                                                        const SpikeSpec& spike, int reps,
                                                        std::uint64_t seed) {
  if (n_factor < 1 || p < 4 || reps < 1) throw RangeError("whitening_identity_check: bad sizes");
  const SimModel model = spike.instantiate(p);
  const Matrix sigma = model.dense_sigma().mat();
  WhiteningIdentityResult out;
  out.deviations.resize(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    Rng rng(Rng::derive(Rng::derive(seed, 404), static_cast<std::uint64_t>(r)));
    const int n = n_factor * p;
    LabeledDataset data = sample_dataset(model, n / 2, n - n / 2, rng);
    PooledStats stats = pooled_covariance(data);
    WhiteningOperator w(fit_spiked(stats, spike.d));
    const Matrix w_dense = w.apply_rows(Matrix::Identity(p, p));
    const Matrix dev = w_dense * sigma * w_dense.transpose() - Matrix::Identity(p, p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (dev + dev.transpose()),
                                             Eigen::EigenvaluesOnly);
    out.deviations[static_cast<std::size_t>(r)] =
        es.eigenvalues().cwiseAbs().maxCoeff();
  }
  std::vector<double> sorted = out.deviations;
  std::sort(sorted.begin(), sorted.end());
  out.median_deviation = sorted[sorted.size() / 2];
  return out;
}

// ---------------------------------------------------------------------------
// assertions and table output
// ---------------------------------------------------------------------------

struct DecayCheck {
  std::string metric;
  int p = 0;
  int n_small = 0, n_big = 0;
  double factor = 0.0;
  bool ok = false;
};

// For every pair of cells at the same p with n_big = 4 * n_small, the ratio
// mean(n_big) / mean(n_small) must land in [lo, hi].
inline std::vector<DecayCheck> decay_factors(const std::vector<RateRow>& rows,
                                             double lo = 0.4, double hi = 0.6) {
  std::vector<DecayCheck> checks;
  for (const auto& a : rows) {
    for (const auto& b : rows) {
      if (a.metric != b.metric || a.p != b.p || b.n != 4 * a.n) continue;
      DecayCheck c;
      c.metric = a.metric;
      c.p = a.p;
      c.n_small = a.n;
      c.n_big = b.n;
      c.factor = b.mean / a.mean;
      c.ok = c.factor >= lo && c.factor <= hi;
      checks.push_back(c);
    }
  }
  return checks;
}

// Recovery fractions must be non-decreasing in n at fixed p, within twice the
// binomial standard deviation.
inline bool selection_monotone(const std::vector<SelectionRow>& rows) {
  for (const auto& a : rows) {
    for (const auto& b : rows) {
      if (a.p != b.p || b.n <= a.n) continue;
      const double se = std::sqrt(std::max(a.fraction * (1.0 - a.fraction), 1e-12) / a.reps);
      if (b.fraction < a.fraction - 2.0 * se) return false;
    }
  }
  return true;
}

inline void write_rate_csv(const std::vector<RateRow>& rows, std::ostream& out) {
  out << "n,p,metric,mean,q95,ratio_to_bound\n";
  for (const auto& r : rows)
    out << r.n << ',' << r.p << ',' << r.metric << ',' << detail::format_g17(r.mean) << ','
        << detail::format_g17(r.q95) << ',' << detail::format_g17(r.ratio_to_bound) << '\n';
}

inline void write_selection_csv(const std::vector<SelectionRow>& rows, std::ostream& out) {
  out << "n,p,metric,mean,q95,ratio_to_bound\n";
  for (const auto& r : rows)
    out << r.n << ',' << r.p << ",t3_exact_recovery," << detail::format_g17(r.fraction)
        << ",nan,nan\n";
}

}  // namespace spikelda
