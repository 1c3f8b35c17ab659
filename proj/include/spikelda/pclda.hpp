#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "spikelda/common.hpp"
#include "spikelda/core_linalg.hpp"
#include "spikelda/dataio.hpp"
#include "spikelda/whitening.hpp"

namespace spikelda {

// ---------------------------------------------------------------------------
// coordinate selection on the whitened direction
// ---------------------------------------------------------------------------

// Indices of the s largest |zeta_j|, ties broken by lower index, returned
// sorted ascending.
inline IndexSet select_top_s(const Vector& zeta_hat, int s) {
  const int p = static_cast<int>(zeta_hat.size());
  if (s < 1 || s > p) throw RangeError("select_top_s: need 1 <= s <= p");
  IndexSet order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(zeta_hat(a)) > std::abs(zeta_hat(b));
  });
  order.resize(static_cast<std::size_t>(s));
  std::sort(order.begin(), order.end());
  return order;
}

struct ThresholdResult {
  IndexSet selected;
  double t_n = 0.0;
};

// {j : |zeta_j| > t_n} with t_n = C (ln p / n)^alpha, 0 < alpha < 1/2.
inline ThresholdResult hard_threshold(const Vector& zeta_hat, int n, int p, double c,
                                      double alpha) {
  if (n < 2 || p < 2) throw RangeError("hard_threshold: need n >= 2 and p >= 2");
  if (!(c > 0.0)) throw RangeError("hard_threshold: need C > 0");
  if (!(alpha > 0.0 && alpha < 0.5)) throw RangeError("hard_threshold: need 0 < alpha < 1/2");
  if (static_cast<int>(zeta_hat.size()) != p)
    throw ValidationError("hard_threshold: p does not match zeta length");
  ThresholdResult out;
  out.t_n = c * std::pow(std::log(static_cast<double>(p)) / n, alpha);
  for (int j = 0; j < p; ++j)
    if (std::abs(zeta_hat(j)) > out.t_n) out.selected.push_back(j);
  if (out.selected.empty())
    throw EmptySelectionError("hard_threshold: no coordinate exceeds t_n = " +
                              std::to_string(out.t_n));
  return out;
}

struct SelectionMode {
  enum class Kind { TopS, Threshold };
  Kind kind = Kind::TopS;
  int s = 1;
  double c = 0.5;
  double alpha = 0.3;
  bool fallback_top1 = false;  // threshold mode: fall back to s = 1 when empty

  static SelectionMode top_s(int s) {
    SelectionMode m;
    m.kind = Kind::TopS;
    m.s = s;
    return m;
  }
  static SelectionMode threshold(double c = 0.5, double alpha = 0.3,
                                 bool fallback_top1 = false) {
    SelectionMode m;
    m.kind = Kind::Threshold;
    m.c = c;
    m.alpha = alpha;
    m.fallback_top1 = fallback_top1;
    return m;
  }
};

namespace detail {

struct SelectionOutcome {
  IndexSet selected;
  double t_n = std::numeric_limits<double>::quiet_NaN();
};

inline SelectionOutcome apply_selection(const Vector& zeta, int n_total,
                                        const SelectionMode& mode) {
  SelectionOutcome out;
  const int p = static_cast<int>(zeta.size());
  if (mode.kind == SelectionMode::Kind::TopS) {
    if (mode.s < 1) throw EmptySelectionError("selection: s must be at least 1");
    if (mode.s > p) throw RangeError("selection: s exceeds p");
    out.selected = select_top_s(zeta, mode.s);
  } else {
    try {
      auto res = hard_threshold(zeta, n_total, p, mode.c, mode.alpha);
      out.selected = std::move(res.selected);
      out.t_n = res.t_n;
    } catch (const EmptySelectionError&) {
      if (!mode.fallback_top1) throw;
      out.selected = select_top_s(zeta, 1);
      out.t_n = mode.c * std::pow(std::log(static_cast<double>(p)) / n_total, mode.alpha);
    }
  }
  return out;
}

// Discriminant score sum_{j in sel} (zt_j - mid_j) * zeta_j, evaluated in
// ascending index order. The binary and K-class rules both score through this
// function so that the two-class reduction is bit-exact.
inline double discriminant_score(const Matrix& zt, Index row, const Vector& mid,
                                 const Vector& zeta, const IndexSet& sel) {
  double s = 0.0;
  for (int j : sel) s += (zt(row, j) - mid(j)) * zeta(j);
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// binary and K-class PCLDA
// ---------------------------------------------------------------------------

// Fitted binary rule. Class ordering is lexicographic in the label strings:
// class_labels[0] plays "class 1" of the decision rule. The decision is
// evaluated as score + ln(n2/n1) > 0 -> class 2, ties -> class 1, which is
// the two-class instance of the K-class argmax rule.
struct PCLDAModel {
  WhiteningOperator whitener;
  Vector zeta_hat;   // whitened mean difference, class 2 minus class 1
  IndexSet selected; // ascending
  Vector midpoint;   // whitened average of the class means
  double prior_offset = 0.0;  // ln(n1/n2), reported and serialized
  double score_offset = 0.0;  // ln(n2/n1), used by the decision rule
  SelectionMode selection;
  double t_n = std::numeric_limits<double>::quiet_NaN();
  std::array<std::string, 2> class_labels;
  std::array<int, 2> class_counts{0, 0};
  std::array<Vector, 2> class_means;  // raw (unwhitened) means
  Vector feature_offset;              // optional global centering, may be empty

  Index p() const { return whitener.p(); }
};

struct KClassPCLDAModel {
  WhiteningOperator whitener;
  std::vector<Vector> whitened_means;      // size K
  std::vector<Vector> zeta;                // size K; [0] empty
  std::vector<IndexSet> selected;          // size K; [0] empty
  std::vector<double> score_offsets;       // ln(n_i / n_1); [0] = 0
  std::vector<double> t_n;                 // per class; NaN outside threshold mode
  std::vector<std::string> class_labels;   // lexicographic
  std::vector<int> class_counts;
  SelectionMode selection;

  int k() const { return static_cast<int>(class_labels.size()); }
  Index p() const { return whitener.p(); }
};

struct DPolicy {
  enum class Kind { Fixed, VarianceFraction };
  Kind kind = Kind::VarianceFraction;
  int d = 1;
  double frac = 0.9;

  static DPolicy fixed(int d) {
    DPolicy p;
    p.kind = Kind::Fixed;
    p.d = d;
    return p;
  }
  static DPolicy variance_fraction(double frac = 0.9) {
    DPolicy p;
    p.kind = Kind::VarianceFraction;
    p.frac = frac;
    return p;
  }
};

namespace detail {

inline SpikedCovModel fit_whitener_model(const PooledStats& stats, const DPolicy& dp) {
  if (dp.kind == DPolicy::Kind::Fixed) return fit_spiked(stats, dp.d);
  return fit_spiked_auto(stats, dp.frac);
}

}  // namespace detail

inline KClassPCLDAModel fit_kclass(const LabeledDataset& train, const DPolicy& dp,
                                   const SelectionMode& sel,
                                   const std::vector<int>& per_class_s = {}) {
  const int k = train.n_classes();
  if (k < 2) throw ValidationError("fit_kclass: need at least 2 classes");
  if (!per_class_s.empty() && static_cast<int>(per_class_s.size()) != k - 1)
    throw ValidationError("fit_kclass: per_class_s must have K - 1 entries");
  PooledStats stats = pooled_covariance(train);
  const int n_total = stats.n();

  KClassPCLDAModel m{WhiteningOperator(detail::fit_whitener_model(stats, dp))};
  m.selection = sel;
  m.class_labels = train.class_names;
  m.class_counts = train.class_counts;
  m.whitened_means.reserve(k);
  for (int i = 0; i < k; ++i) m.whitened_means.push_back(m.whitener.apply(stats.class_means[i]));
  m.zeta.resize(k);
  m.selected.resize(k);
  m.score_offsets.assign(k, 0.0);
  m.t_n.assign(k, std::numeric_limits<double>::quiet_NaN());
  for (int i = 1; i < k; ++i) {
    m.zeta[i] = m.whitened_means[i] - m.whitened_means[0];
    SelectionMode class_sel = sel;
    if (!per_class_s.empty()) class_sel = SelectionMode::top_s(per_class_s[i - 1]);
    auto out = detail::apply_selection(m.zeta[i], n_total, class_sel);
    m.selected[i] = std::move(out.selected);
    m.t_n[i] = out.t_n;
    m.score_offsets[i] = std::log(static_cast<double>(m.class_counts[i]) /
                                  static_cast<double>(m.class_counts[0]));
  }
  return m;
}

inline PCLDAModel fit_pclda(const LabeledDataset& train, const DPolicy& dp,
                            const SelectionMode& sel) {
  if (train.n_classes() != 2) throw ValidationError("fit_pclda: need exactly 2 classes");
  KClassPCLDAModel km = fit_kclass(train, dp, sel);
  PCLDAModel m{std::move(km.whitener)};
  m.zeta_hat = std::move(km.zeta[1]);
  m.selected = std::move(km.selected[1]);
  m.midpoint = 0.5 * (km.whitened_means[0] + km.whitened_means[1]);
  m.prior_offset = std::log(static_cast<double>(km.class_counts[0]) /
                            static_cast<double>(km.class_counts[1]));
  m.score_offset = km.score_offsets[1];
  m.selection = sel;
  m.t_n = km.t_n[1];
  m.class_labels = {km.class_labels[0], km.class_labels[1]};
  m.class_counts = {km.class_counts[0], km.class_counts[1]};
  PooledStats stats = pooled_covariance(train);  // raw means for serialization
  m.class_means = {stats.class_means[0], stats.class_means[1]};
  return m;
}

inline PCLDAModel fit_pclda(const LabeledDataset& train, int d, const SelectionMode& sel) {
  return fit_pclda(train, DPolicy::fixed(d), sel);
}

// Batch ordinal predictions (0-based class index).
inline std::vector<int> predict_pclda_batch(const PCLDAModel& m, const Matrix& rows) {
  if (rows.cols() != m.p()) throw ValidationError("predict_pclda: dimension mismatch");
  Matrix zt = m.whitener.apply_rows(rows);
  std::vector<int> out(static_cast<std::size_t>(rows.rows()));
  for (Index i = 0; i < rows.rows(); ++i) {
    const double d2 =
        detail::discriminant_score(zt, i, m.midpoint, m.zeta_hat, m.selected) +
        m.score_offset;
    out[static_cast<std::size_t>(i)] = d2 > 0.0 ? 1 : 0;
  }
  return out;
}

inline int predict_pclda_ordinal(const PCLDAModel& m, const Vector& z) {
  Matrix row = z.transpose();
  return predict_pclda_batch(m, row)[0];
}

inline std::string predict_pclda(const PCLDAModel& m, const Vector& z) {
  return m.class_labels[static_cast<std::size_t>(predict_pclda_ordinal(m, z))];
}

inline std::vector<int> predict_kclass_batch(const KClassPCLDAModel& m, const Matrix& rows) {
  if (rows.cols() != m.p()) throw ValidationError("predict_kclass: dimension mismatch");
  Matrix zt = m.whitener.apply_rows(rows);
  const int k = m.k();
  std::vector<Vector> mids(static_cast<std::size_t>(k));
  for (int i = 1; i < k; ++i) mids[i] = 0.5 * (m.whitened_means[i] + m.whitened_means[0]);
  std::vector<int> out(static_cast<std::size_t>(rows.rows()));
  for (Index r = 0; r < rows.rows(); ++r) {
    int best = 0;
    double best_score = 0.0;  // D_1 = 0 by construction
    for (int i = 1; i < k; ++i) {
      const double d =
          detail::discriminant_score(zt, r, mids[i], m.zeta[i], m.selected[i]) +
          m.score_offsets[i];
      if (d > best_score) {
        best = i;
        best_score = d;
      }
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

inline int predict_kclass_ordinal(const KClassPCLDAModel& m, const Vector& z) {
  Matrix row = z.transpose();
  return predict_kclass_batch(m, row)[0];
}

inline std::string predict_kclass(const KClassPCLDAModel& m, const Vector& z) {
  return m.class_labels[static_cast<std::size_t>(predict_kclass_ordinal(m, z))];
}

// ---------------------------------------------------------------------------
// oracle Fisher rule and Bayes risk
// ---------------------------------------------------------------------------

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Fisher error rate at whitened-direction norm |zeta| and prior pi1:
//   pi1 Phi(-|z|/2 + ln((1-pi1)/pi1)/|z|) + (1-pi1) Phi(-|z|/2 - ln((1-pi1)/pi1)/|z|).
// Monotone decreasing in |zeta|; equals Phi(-|zeta|/2) at pi1 = 1/2.
inline double bayes_risk(double zeta_norm, double pi1) {
  if (!(zeta_norm > 0.0)) throw RangeError("bayes_risk: need |zeta| > 0");
  if (!(pi1 > 0.0 && pi1 < 1.0)) throw RangeError("bayes_risk: need 0 < pi1 < 1");
  const double l = std::log((1.0 - pi1) / pi1);
  return pi1 * normal_cdf(-0.5 * zeta_norm + l / zeta_norm) +
         (1.0 - pi1) * normal_cdf(-0.5 * zeta_norm - l / zeta_norm);
}

// Fisher rule with known parameters, whitened form: class 1 iff
// zeta^T (W z - whitened midpoint) <= ln(pi1 / (1 - pi1)), ties to class 1.
struct OracleRule {
  Vector zeta;
  Vector whitened_midpoint;
  double pi1 = 0.5;
  Matrix w;  // Sigma^{-1/2}

  Vector beta() const { return w * zeta; }  // Sigma^{-1} (mu2 - mu1)
  double zeta_norm() const { return zeta.norm(); }
};

inline OracleRule oracle_fisher(const Vector& mu1, const Vector& mu2,
                                const SymmetricMatrix& sigma, double pi1) {
  if (!(pi1 > 0.0 && pi1 < 1.0)) throw RangeError("oracle_fisher: need 0 < pi1 < 1");
  if (mu1.size() != sigma.dim() || mu2.size() != sigma.dim())
    throw ValidationError("oracle_fisher: mean dimension mismatch");
  DenseWhitener w = whitening_exact(sigma);
  OracleRule r;
  r.w = w.matrix();
  r.zeta = w.apply(mu2 - mu1);
  if (!(r.zeta.norm() > 0.0)) throw ValidationError("oracle_fisher: identical class means");
  r.whitened_midpoint = w.apply(0.5 * (mu1 + mu2));
  r.pi1 = pi1;
  return r;
}

inline int predict_oracle_ordinal(const OracleRule& r, const Vector& z) {
  if (z.size() != r.w.rows()) throw ValidationError("predict_oracle: dimension mismatch");
  const double score = r.zeta.dot(r.w * z - r.whitened_midpoint);
  return score <= std::log(r.pi1 / (1.0 - r.pi1)) ? 0 : 1;
}

// ---------------------------------------------------------------------------
// rotation preprocessing
// ---------------------------------------------------------------------------

struct RotatedData {
  LabeledDataset rotated;  // n x m
  Matrix basis;            // p x m, orthonormal columns
};

// Top-m eigenbasis of Sigma_hat + gamma * dmu dmu^T, applied to the raw rows.
// The rank-one term is folded in as an extra centered row so the p >> n Gram
// path stays available.
inline RotatedData rotate_preprocess(const LabeledDataset& train, double gamma, int m) {
  if (train.n_classes() != 2) throw ValidationError("rotate_preprocess: need 2 classes");
  if (gamma < 0.0) throw RangeError("rotate_preprocess: need gamma >= 0");
  PooledStats stats = pooled_covariance(train);
  const int n = stats.n();
  const Index p = stats.p();
  if (m < 1 || m > std::min<Index>(n, p))
    throw RangeError("rotate_preprocess: need 1 <= m <= min(n, p)");
  Matrix aug(n + 1, p);
  aug.topRows(n) = stats.centered;
  aug.row(n) = std::sqrt(gamma * n) * (stats.class_means[1] - stats.class_means[0]).transpose();
  EigenPairs pairs = (p > 4 * static_cast<Index>(n + 1))
                         ? top_eigenpairs_gram(aug, m)
                         : [&] {
                             Matrix s = (aug.transpose() * aug) / static_cast<double>(n);
                             return sym_eigendecomp(SymmetricMatrix(0.5 * (s + s.transpose())), m);
                           }();
  RotatedData out{LabeledDataset{}, std::move(pairs.vectors)};
  out.rotated = LabeledDataset::create(train.features * out.basis, train.labels);
  return out;
}

// Count of coordinates of basis^T beta exceeding `tol` in absolute value;
// with an exact spiked Sigma and its full rotation eigenbasis this is at most
// d + 1.
inline int rotation_sparsity_count(const Matrix& basis, const Vector& beta, double tol = 1e-8) {
  Vector t = basis.transpose() * beta;
  int nz = 0;
  for (Index i = 0; i < t.size(); ++i)
    if (std::abs(t(i)) > tol) ++nz;
  return nz;
}

// ---------------------------------------------------------------------------
// nearest shrunken centroids baseline
// ---------------------------------------------------------------------------

// Soft-thresholded class centroids with diagonal-covariance scoring. With
// delta = 0 this reduces to diagonal LDA with priors; within-class standard
// deviations are floored at median(s) * 1e-3.
struct NSCModel {
  Vector overall_centroid;
  std::vector<Vector> shrunken_centroids;  // K
  Vector s;                                // floored pooled within-class sd
  std::vector<double> log_prior;
  std::vector<std::string> class_labels;
  double delta = 0.0;

  Index p() const { return overall_centroid.size(); }
  int k() const { return static_cast<int>(class_labels.size()); }

  // Features whose shrunken centroid differs from the overall centroid for
  // at least one class.
  int model_size() const {
    int nz = 0;
    for (Index j = 0; j < p(); ++j) {
      for (int c = 0; c < k(); ++c) {
        if (shrunken_centroids[c](j) != overall_centroid(j)) {
          ++nz;
          break;
        }
      }
    }
    return nz;
  }
};

namespace detail {

inline Vector nsc_pooled_sd(const LabeledDataset& train) {
  PooledStats stats = pooled_covariance(train);
  const int n = stats.n();
  const int k = static_cast<int>(stats.counts.size());
  Vector ss = stats.centered.array().square().colwise().sum();
  Vector s = (ss / static_cast<double>(n - k)).cwiseSqrt();
  std::vector<double> sv(s.data(), s.data() + s.size());
  std::nth_element(sv.begin(), sv.begin() + sv.size() / 2, sv.end());
  double med = sv[sv.size() / 2];
  if (med <= 0.0) med = s.maxCoeff();
  if (med <= 0.0)
    throw DomainError("fit_nsc: all features have zero within-class variance");
  return s.cwiseMax(med * 1e-3);
}

}  // namespace detail

inline NSCModel fit_nsc(const LabeledDataset& train, double delta) {
  if (delta < 0.0) throw RangeError("fit_nsc: need delta >= 0");
  PooledStats stats = pooled_covariance(train);
  const int n = stats.n();
  const int k = static_cast<int>(stats.counts.size());
  NSCModel m;
  m.delta = delta;
  m.class_labels = train.class_names;
  m.s = detail::nsc_pooled_sd(train);
  m.overall_centroid = Vector::Zero(train.p());
  for (Index i = 0; i < train.n(); ++i) m.overall_centroid += train.features.row(i);
  m.overall_centroid /= static_cast<double>(n);
  m.shrunken_centroids.resize(static_cast<std::size_t>(k));
  m.log_prior.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const double mk = std::sqrt(1.0 / stats.counts[c] - 1.0 / n);
    Vector dstat = (stats.class_means[c] - m.overall_centroid).array() / (mk * m.s.array());
    Vector shrunk = dstat.array().sign() * (dstat.array().abs() - delta).max(0.0);
    m.shrunken_centroids[c] =
        m.overall_centroid.array() + mk * m.s.array() * shrunk.array();
    m.log_prior[c] = std::log(static_cast<double>(stats.counts[c]) / n);
  }
  return m;
}

// Largest |d-statistic| over classes and features; shrinkage grids span
// [0, this value].
inline double nsc_max_dstat(const LabeledDataset& train) {
  PooledStats stats = pooled_covariance(train);
  const int n = stats.n();
  Vector s = detail::nsc_pooled_sd(train);
  Vector overall = Vector::Zero(train.p());
  for (Index i = 0; i < train.n(); ++i) overall += train.features.row(i);
  overall /= static_cast<double>(n);
  double dmax = 0.0;
  for (std::size_t c = 0; c < stats.counts.size(); ++c) {
    const double mk = std::sqrt(1.0 / stats.counts[c] - 1.0 / n);
    dmax = std::max(dmax,
                    ((stats.class_means[c] - overall).array() / (mk * s.array()))
                        .abs()
                        .maxCoeff());
  }
  return dmax;
}

inline std::vector<int> predict_nsc_batch(const NSCModel& m, const Matrix& rows) {
  if (rows.cols() != m.p()) throw ValidationError("predict_nsc: dimension mismatch");
  std::vector<int> out(static_cast<std::size_t>(rows.rows()));
  const Vector inv_var = m.s.array().square().inverse();
  for (Index r = 0; r < rows.rows(); ++r) {
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int c = 0; c < m.k(); ++c) {
      const double score =
          ((rows.row(r).transpose() - m.shrunken_centroids[c]).array().square() *
           inv_var.array())
              .sum() -
          2.0 * m.log_prior[c];
      if (score < best_score) {
        best = c;
        best_score = score;
      }
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

inline int predict_nsc_ordinal(const NSCModel& m, const Vector& z) {
  Matrix row = z.transpose();
  return predict_nsc_batch(m, row)[0];
}

}  // namespace spikelda
