#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spikelda/common.hpp"
#include "spikelda/dataio.hpp"
#include "spikelda/pclda.hpp"
#include "spikelda/rng.hpp"
#include "spikelda/tuning.hpp"
#include "spikelda/whitening.hpp"

namespace spikelda {

// ---------------------------------------------------------------------------
// simulation models
// ---------------------------------------------------------------------------

enum class EntryDist { Normal, UniformPm1, StudentT5 };

struct SimSpec {
  enum class ModelKind { EqualCorr, BlockDiag, RandomCorr };
  ModelKind model = ModelKind::EqualCorr;
  double rho = 0.5;           // models 1-2
  int p = 800;
  int block = 20;             // model 2
  int rank = 10;              // model 3
  EntryDist entry_dist = EntryDist::Normal;
  int n_train_per_class = 100;
  int n_test_per_class = 100;
};

// Population model in factored form: Sigma = B diag(excess) B^T + bulk * I
// with B orthonormal. Sampling, whitening and the derived directions all run
// in O(p * d0) through this structure; dense_sigma() is for small-p checks.
struct SimModel {
  Vector mu1, mu2;
  Matrix spike_basis;   // p x d0, orthonormal columns
  Vector spike_excess;  // eigenvalue minus bulk, non-increasing, >= 0
  double bulk = 1.0;

  Index p() const { return mu1.size(); }

  SymmetricMatrix dense_sigma() const {
    Matrix s = spike_basis * spike_excess.asDiagonal() * spike_basis.transpose();
    s += bulk * Matrix::Identity(p(), p());
    return SymmetricMatrix(0.5 * (s + s.transpose()));
  }

  // f(Sigma) v for a spectral function given by its value on the bulk and on
  // each spiked eigenvalue.
  Vector spectral_apply(const Vector& v, double f_bulk, const Vector& f_spike) const {
    Vector t = spike_basis.transpose() * v;
    return f_bulk * v + spike_basis * ((f_spike.array() - f_bulk) * t.array()).matrix();
  }

  Vector true_zeta() const {
    Vector f = (spike_excess.array() + bulk).rsqrt();
    return spectral_apply(mu2 - mu1, 1.0 / std::sqrt(bulk), f);
  }

  Vector true_beta() const {
    Vector f = (spike_excess.array() + bulk).inverse();
    return spectral_apply(mu2 - mu1, 1.0 / bulk, f);
  }

  double zeta_norm() const { return true_zeta().norm(); }

  double condition_number() const {
    const double top = (spike_excess.size() > 0 ? spike_excess.maxCoeff() : 0.0) + bulk;
    return top / bulk;
  }

  IndexSet true_support_zeta(double tol = 1e-10) const {
    Vector z = true_zeta();
    IndexSet s;
    for (Index j = 0; j < z.size(); ++j)
      if (std::abs(z(j)) > tol) s.push_back(static_cast<int>(j));
    return s;
  }
};

namespace detail {

inline Vector standard_mu2(int p) {
  Vector mu2 = Vector::Zero(p);
  for (int j = 0; j < std::min(p, 10); ++j) mu2(j) = 1.0;
  return mu2;
}

// Equicorrelation blocks: each block contributes one spike 1 + (m-1)rho with
// the flat direction, on a shared bulk 1 - rho.
inline SimModel equicorr_blocks(int p, double rho, const std::vector<std::pair<int, int>>& blocks,
                                Vector mu1, Vector mu2) {
  SimModel m;
  m.mu1 = std::move(mu1);
  m.mu2 = std::move(mu2);
  m.bulk = 1.0 - rho;
  m.spike_basis = Matrix::Zero(p, static_cast<Index>(blocks.size()));
  m.spike_excess = Vector::Zero(static_cast<Index>(blocks.size()));
  std::vector<std::pair<double, const std::pair<int, int>*>> order;
  for (const auto& b : blocks) order.emplace_back((b.second - b.first) * rho, &b);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto [excess, blk] = order[k];
    const int sz = blk->second - blk->first;
    m.spike_excess(static_cast<Index>(k)) = excess;
    for (int i = blk->first; i < blk->second; ++i)
      m.spike_basis(i, static_cast<Index>(k)) = 1.0 / std::sqrt(static_cast<double>(sz));
  }
  return m;
}

inline SimModel model3_from_loading(const Matrix& loading, Vector mu1, Vector mu2) {
  const Index p = loading.rows();
  const double c = loading.rowwise().squaredNorm().minCoeff();
  if (c <= 0.0)
    throw DomainError("gen_model3: degenerate loading draw (min diagonal of LL^T is zero)");
  Eigen::JacobiSVD<Matrix> svd(loading, Eigen::ComputeThinU);
  SimModel m;
  m.mu1 = std::move(mu1);
  m.mu2 = std::move(mu2);
  m.bulk = c;
  m.spike_basis = svd.matrixU();
  m.spike_excess = svd.singularValues().array().square();
  (void)p;
  return m;
}

}  // namespace detail

// Model 1, equal correlation: Sigma = rho 11^T + (1 - rho) I.
inline SimModel gen_model1(int p, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw RangeError("gen_model1: need 0 <= rho < 1");
  if (p < 10) throw RangeError("gen_model1: need p >= 10");
  return detail::equicorr_blocks(p, rho, {{0, p}}, Vector::Zero(p), detail::standard_mu2(p));
}

// Model 2, block diagonal equal correlation with blocks of size `block` and
// p - block; the mean shift lives in the first block.
inline SimModel gen_model2(int p, double rho, int block = 20) {
  if (!(rho >= 0.0 && rho < 1.0)) throw RangeError("gen_model2: need 0 <= rho < 1");
  if (p <= block) throw RangeError("gen_model2: need p > block size");
  return detail::equicorr_blocks(p, rho, {{0, block}, {block, p}}, Vector::Zero(p),
                                 detail::standard_mu2(p));
}

// Model 3, random correlation: Sigma = L L^T + c_L I with c_L the smallest
// diagonal entry of L L^T. A fresh L is drawn per call; a degenerate draw is
// resampled once before failing.
inline SimModel gen_model3(int p, int rank, EntryDist dist, Rng& rng) {
  if (rank < 1 || rank >= p) throw RangeError("gen_model3: need 1 <= rank < p");
  auto draw = [&]() {
    Matrix l(p, rank);
    for (Index i = 0; i < l.rows(); ++i)
      for (Index j = 0; j < l.cols(); ++j) {
        switch (dist) {
          case EntryDist::Normal: l(i, j) = rng.normal(); break;
          case EntryDist::UniformPm1: l(i, j) = rng.uniform(-1.0, 1.0); break;
          case EntryDist::StudentT5: l(i, j) = rng.student_t(5); break;
        }
      }
    return l;
  };
  Matrix l = draw();
  if (l.rowwise().squaredNorm().minCoeff() <= 0.0) l = draw();
  return detail::model3_from_loading(l, Vector::Zero(p), detail::standard_mu2(p));
}

// n i.i.d. rows mu + Sigma^{1/2} eps using the factored symmetric square
// root; O(n p d0), no dense p x p factor.
inline Matrix sample_rows(const SimModel& m, const Vector& mu, int n, Rng& rng) {
  const Index p = m.p();
  Matrix g = rng.normal_matrix(n, p);
  Vector f_spike = (m.spike_excess.array() + m.bulk).sqrt();
  const double f_bulk = std::sqrt(m.bulk);
  Matrix t = g * m.spike_basis;  // n x d0
  t.array().rowwise() *= (f_spike.array() - f_bulk).transpose();
  Matrix x = f_bulk * g + t * m.spike_basis.transpose();
  x.rowwise() += mu.transpose();
  return x;
}

// Two-class training or test set with labels "1" and "2".
inline LabeledDataset sample_dataset(const SimModel& m, int n1, int n2, Rng& rng) {
  Rng r1 = rng.child(1), r2 = rng.child(2);
  Matrix x(n1 + n2, m.p());
  x.topRows(n1) = sample_rows(m, m.mu1, n1, r1);
  x.bottomRows(n2) = sample_rows(m, m.mu2, n2, r2);
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n1 + n2));
  for (int i = 0; i < n1; ++i) labels.emplace_back("1");
  for (int i = 0; i < n2; ++i) labels.emplace_back("2");
  return LabeledDataset::create(std::move(x), std::move(labels));
}

// Fisher rule with the true model parameters, evaluated through the factored
// form of Sigma^{-1/2}; agrees with oracle_fisher(dense) to machine precision.
struct StructuredOracle {
  const SimModel* model;
  Vector zeta;
  Vector whitened_midpoint;
  double pi1 = 0.5;

  static StructuredOracle make(const SimModel& m, double pi1) {
    if (!(pi1 > 0.0 && pi1 < 1.0)) throw RangeError("oracle: need 0 < pi1 < 1");
    StructuredOracle o;
    o.model = &m;
    o.zeta = m.true_zeta();
    Vector f = (m.spike_excess.array() + m.bulk).rsqrt();
    o.whitened_midpoint = m.spectral_apply(0.5 * (m.mu1 + m.mu2), 1.0 / std::sqrt(m.bulk), f);
    o.pi1 = pi1;
    return o;
  }

  std::vector<int> predict_batch(const Matrix& rows) const {
    Vector f = (model->spike_excess.array() + model->bulk).rsqrt();
    const double thr = std::log(pi1 / (1.0 - pi1));
    std::vector<int> out(static_cast<std::size_t>(rows.rows()));
    Matrix t = rows * model->spike_basis;
    t.array().rowwise() *= (f.array() - 1.0 / std::sqrt(model->bulk)).transpose();
    Matrix zt = rows / std::sqrt(model->bulk) + t * model->spike_basis.transpose();
    for (Index i = 0; i < rows.rows(); ++i) {
      const double score = zeta.dot(zt.row(i).transpose() - whitened_midpoint);
      out[static_cast<std::size_t>(i)] = score <= thr ? 0 : 1;
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

// Class ordinal 1 ("class 2") is the positive label.
struct RatesResult {
  double error = 0.0;
  double fpr = std::numeric_limits<double>::quiet_NaN();
  double fnr = std::numeric_limits<double>::quiet_NaN();
  bool fpr_defined = false;
  bool fnr_defined = false;
};

inline RatesResult metrics(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw ValidationError("metrics: prediction/truth size mismatch");
  int wrong = 0, fp = 0, fn = 0, n_neg = 0, n_pos = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] != truth[i]) ++wrong;
    if (truth[i] == 0) {
      ++n_neg;
      if (pred[i] == 1) ++fp;
    } else {
      ++n_pos;
      if (pred[i] == 0) ++fn;
    }
  }
  RatesResult r;
  r.error = static_cast<double>(wrong) / static_cast<double>(pred.size());
  if (n_neg > 0) {
    r.fpr = static_cast<double>(fp) / n_neg;
    r.fpr_defined = true;
  }
  if (n_pos > 0) {
    r.fnr = static_cast<double>(fn) / n_pos;
    r.fnr_defined = true;
  }
  return r;
}

inline std::pair<int, int> strong_weak_counts(const IndexSet& selected,
                                              const IndexSet& strong) {
  int hits = 0;
  for (int j : selected)
    if (std::binary_search(strong.begin(), strong.end(), j)) ++hits;
  return {hits, static_cast<int>(selected.size()) - hits};
}

// ---------------------------------------------------------------------------
// Monte Carlo harness
// ---------------------------------------------------------------------------

struct MethodConfig {
  enum class Kind { PCLDA, Oracle, NSC };
  Kind kind = Kind::PCLDA;

  DPolicy d_policy = DPolicy::variance_fraction(0.9);
  enum class SelectPolicy { FixedTopS, CvTopS, Threshold };
  SelectPolicy select_policy = SelectPolicy::CvTopS;
  int s = 10;
  int cv_s_max = 30;
  int cv_folds = 5;
  double threshold_c = 0.5;
  double threshold_alpha = 0.3;
  int nsc_grid_size = 30;

  // Standard benchmark protocol: d from the 90% variance rule, s by five-fold CV over
  // {1, ..., 30}.
  static MethodConfig pclda_standard() { return MethodConfig{}; }
  static MethodConfig pclda_fixed(int d, int s) {
    MethodConfig m;
    m.d_policy = DPolicy::fixed(d);
    m.select_policy = SelectPolicy::FixedTopS;
    m.s = s;
    return m;
  }
  static MethodConfig pclda_threshold(double c = 0.5, double alpha = 0.3) {
    MethodConfig m;
    m.select_policy = SelectPolicy::Threshold;
    m.threshold_c = c;
    m.threshold_alpha = alpha;
    return m;
  }
  static MethodConfig oracle() {
    MethodConfig m;
    m.kind = Kind::Oracle;
    return m;
  }
  static MethodConfig nsc() {
    MethodConfig m;
    m.kind = Kind::NSC;
    return m;
  }

  std::string name() const {
    switch (kind) {
      case Kind::Oracle: return "oracle";
      case Kind::NSC: return "nsc";
      default: return "pclda";
    }
  }
};

struct MetricsRow {
  double error_rate = 0.0;
  double fpr = std::numeric_limits<double>::quiet_NaN();
  double fnr = std::numeric_limits<double>::quiet_NaN();
  int model_size = 0;
  int strong_hits = 0;
  int weak_hits = 0;
  bool selected_equals_true = false;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error_msg;
};

struct SummaryStat {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
};

struct McResult {
  std::vector<MetricsRow> rows;
  SummaryStat error_rate, fpr, fnr, model_size, strong_hits, weak_hits,
      selected_equals_true;
  int n_failed = 0;
};

namespace detail {

inline SummaryStat summarize(const std::vector<double>& v) {
  SummaryStat s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  } else {
    s.sd = 0.0;
  }
  return s;
}

// Ordered parallel map: slot r is written by whichever thread picks r, so the
// result is independent of thread count and scheduling.
template <typename F>
void parallel_for(int count, int threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::min(threads, count);
  pool.reserve(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

inline SimModel instantiate(const SimSpec& spec, Rng& model_rng) {
  switch (spec.model) {
    case SimSpec::ModelKind::EqualCorr: return gen_model1(spec.p, spec.rho);
    case SimSpec::ModelKind::BlockDiag: return gen_model2(spec.p, spec.rho, spec.block);
    case SimSpec::ModelKind::RandomCorr:
      return gen_model3(spec.p, spec.rank, spec.entry_dist, model_rng);
  }
  throw Error("instantiate: unknown model kind");
}

}  // namespace detail

inline int default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
}

// One Monte Carlo benchmark: `reps` independent replicates, each with its own
// counter-derived seed, identical output for any thread count. Per-replicate
// failures are recorded in the row; more than 10% failures aborts.
inline McResult run_mc(const SimSpec& spec, const MethodConfig& method, int reps,
                       std::uint64_t base_seed, int threads = 0) {
  if (reps < 1) throw RangeError("run_mc: need reps >= 1");
  if (threads <= 0) threads = default_threads();
  McResult result;
  result.rows.resize(static_cast<std::size_t>(reps));

  detail::parallel_for(reps, threads, [&](int r) {
    MetricsRow& row = result.rows[static_cast<std::size_t>(r)];
    const std::uint64_t rep_seed = Rng::derive(base_seed, static_cast<std::uint64_t>(r));
    row.seed = rep_seed;
    try {
      Rng rep_rng(rep_seed);
      Rng model_rng = rep_rng.child(1);
      Rng train_rng = rep_rng.child(2);
      Rng test_rng = rep_rng.child(3);
      const std::uint64_t cv_seed = Rng::derive(rep_seed, 4);

      const SimModel model = detail::instantiate(spec, model_rng);
      LabeledDataset train =
          sample_dataset(model, spec.n_train_per_class, spec.n_train_per_class, train_rng);
      LabeledDataset test =
          sample_dataset(model, spec.n_test_per_class, spec.n_test_per_class, test_rng);

      std::vector<int> pred;
      IndexSet selected;
      int model_size = 0;
      if (method.kind == MethodConfig::Kind::Oracle) {
        StructuredOracle o = StructuredOracle::make(model, 0.5);
        pred = o.predict_batch(test.features);
        selected = model.true_support_zeta();
        model_size = static_cast<int>(selected.size());
      } else if (method.kind == MethodConfig::Kind::NSC) {
        const double dmax = nsc_max_dstat(train);
        std::vector<double> grid;
        for (int i = 0; i < method.nsc_grid_size; ++i)
          grid.push_back(dmax * i / (method.nsc_grid_size - 1.0));
        auto cv = cv_select_nsc_delta(train, grid, method.cv_folds, cv_seed);
        NSCModel nsc = fit_nsc(train, cv.delta_star);
        pred = predict_nsc_batch(nsc, test.features);
        model_size = nsc.model_size();
        for (Index j = 0; j < train.p(); ++j) {
          for (int c = 0; c < nsc.k(); ++c)
            if (nsc.shrunken_centroids[c](j) != nsc.overall_centroid(j)) {
              selected.push_back(static_cast<int>(j));
              break;
            }
        }
      } else {
        PooledStats stats = pooled_covariance(train);
        int d;
        if (method.d_policy.kind == DPolicy::Kind::Fixed) {
          d = method.d_policy.d;
        } else {
          d = choose_d(stats.eigenvalues_all(), method.d_policy.frac);
          d = std::min<int>(d, std::min<int>(stats.n(), static_cast<int>(stats.p())) - 1);
        }
        SelectionMode sel;
        if (method.select_policy == MethodConfig::SelectPolicy::FixedTopS) {
          sel = SelectionMode::top_s(method.s);
        } else if (method.select_policy == MethodConfig::SelectPolicy::Threshold) {
          sel = SelectionMode::threshold(method.threshold_c, method.threshold_alpha);
        } else {
          std::vector<int> cands;
          for (int s = 1; s <= std::min<int>(method.cv_s_max, static_cast<int>(train.p())); ++s)
            cands.push_back(s);
          auto cv = cv_select_s(train, d, cands, method.cv_folds, cv_seed);
          sel = SelectionMode::top_s(cv.s_star);
        }
        PCLDAModel m = fit_pclda(train, DPolicy::fixed(d), sel);
        pred = predict_pclda_batch(m, test.features);
        selected = m.selected;
        model_size = static_cast<int>(selected.size());
      }

      RatesResult rates = metrics(pred, test.label_ordinal);
      row.error_rate = rates.error;
      row.fpr = rates.fpr;
      row.fnr = rates.fnr;
      row.model_size = model_size;
      IndexSet strong;
      for (int j = 0; j < std::min(10, spec.p); ++j) strong.push_back(j);
      auto [sh, wh] = strong_weak_counts(selected, strong);
      row.strong_hits = sh;
      row.weak_hits = wh;
      row.selected_equals_true = (selected == model.true_support_zeta());
    } catch (const std::exception& e) {
      row.failed = true;
      row.error_msg = e.what();
    }
  });

  std::vector<double> err, fpr, fnr, sz, sh, wh, eq;
  for (const auto& row : result.rows) {
    if (row.failed) {
      result.n_failed++;
      continue;
    }
    err.push_back(row.error_rate);
    if (!std::isnan(row.fpr)) fpr.push_back(row.fpr);
    if (!std::isnan(row.fnr)) fnr.push_back(row.fnr);
    sz.push_back(row.model_size);
    sh.push_back(row.strong_hits);
    wh.push_back(row.weak_hits);
    eq.push_back(row.selected_equals_true ? 1.0 : 0.0);
  }
  if (result.n_failed * 10 > reps)
    throw RunError("run_mc: more than 10% of replicates failed (" +
                   std::to_string(result.n_failed) + "/" + std::to_string(reps) +
                   "); first error: " +
                   [&] {
                     for (const auto& row : result.rows)
                       if (row.failed) return row.error_msg;
                     return std::string();
                   }());
  result.error_rate = detail::summarize(err);
  result.fpr = detail::summarize(fpr);
  result.fnr = detail::summarize(fnr);
  result.model_size = detail::summarize(sz);
  result.strong_hits = detail::summarize(sh);
  result.weak_hits = detail::summarize(wh);
  result.selected_equals_true = detail::summarize(eq);
  return result;
}

// ---------------------------------------------------------------------------
// table output
// ---------------------------------------------------------------------------

inline void write_replicates_csv(const McResult& r, std::ostream& out) {
  out << "error_rate,fpr,fnr,model_size,strong_hits,weak_hits,selected_equals_true,seed\n";
  for (const auto& row : r.rows) {
    if (row.failed) {
      // failed replicate: undefined metrics, seed identifies it
      out << "nan,nan,nan,nan,nan,nan,nan," << row.seed << '\n';
      continue;
    }
    out << detail::format_g17(row.error_rate) << ',' << detail::format_g17(row.fpr) << ','
        << detail::format_g17(row.fnr) << ',' << row.model_size << ',' << row.strong_hits
        << ',' << row.weak_hits << ',' << (row.selected_equals_true ? 1 : 0) << ','
        << row.seed << '\n';
  }
  out << "\nstat,error_rate,fpr,fnr,model_size,strong_hits,weak_hits,selected_equals_true\n";
  auto line = [&](const char* stat, auto get) {
    out << stat << ',' << detail::format_g17(get(r.error_rate)) << ','
        << detail::format_g17(get(r.fpr)) << ',' << detail::format_g17(get(r.fnr)) << ','
        << detail::format_g17(get(r.model_size)) << ','
        << detail::format_g17(get(r.strong_hits)) << ','
        << detail::format_g17(get(r.weak_hits)) << ','
        << detail::format_g17(get(r.selected_equals_true)) << '\n';
  };
  line("mean", [](const SummaryStat& s) { return s.mean; });
  line("sd", [](const SummaryStat& s) { return s.sd; });
}

inline nlohmann::json summary_to_json(const SimSpec& spec, const MethodConfig& method,
                                      int reps, std::uint64_t base_seed,
                                      const McResult& r) {
  using nlohmann::json;
  auto stat = [](const SummaryStat& s) {
    return json{{"mean", s.mean}, {"sd", s.sd}};
  };
  const char* model_name =
      spec.model == SimSpec::ModelKind::EqualCorr
          ? "eqcorr"
          : (spec.model == SimSpec::ModelKind::BlockDiag ? "blockdiag" : "randcorr");
  return json{
      {"spec",
       {{"model", model_name},
        {"rho", spec.rho},
        {"p", spec.p},
        {"n_train_per_class", spec.n_train_per_class},
        {"n_test_per_class", spec.n_test_per_class}}},
      {"method", method.name()},
      {"reps", reps},
      {"base_seed", base_seed},
      {"failed", r.n_failed},
      {"summary",
       {{"error_rate", stat(r.error_rate)},
        {"fpr", stat(r.fpr)},
        {"fnr", stat(r.fnr)},
        {"model_size", stat(r.model_size)},
        {"strong_hits", stat(r.strong_hits)},
        {"weak_hits", stat(r.weak_hits)},
        {"selected_equals_true", stat(r.selected_equals_true)}}}};
}

// ---------------------------------------------------------------------------
// bivariate projection experiment
// ---------------------------------------------------------------------------

// In-sample error of three plug-in projections on bivariate equicorrelated
// data: the top coordinate of beta_hat, the top whitened coordinate of
// zeta_hat, and the full beta_hat direction.
struct Example1Result {
  // order: nu (raw top coordinate), nu_zeta (whitened top coordinate), beta
  std::array<RatesResult, 3> rates{};
};

inline Example1Result run_example1(int reps, int n_per_class, double rho,
                                   std::uint64_t seed) {
  if (reps < 1 || n_per_class < 2) throw RangeError("run_example1: bad sizes");
  if (!(rho > -1.0 && rho < 1.0)) throw RangeError("run_example1: need |rho| < 1");
  SimModel model;
  {
    Vector mu1 = Vector::Zero(2), mu2 = Vector::Zero(2);
    mu2(0) = 1.0;
    model = detail::equicorr_blocks(2, rho, {{0, 2}}, std::move(mu1), std::move(mu2));
  }
  std::array<double, 3> err{}, fp{}, fn{};
  for (int r = 0; r < reps; ++r) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(r)));
    LabeledDataset data = sample_dataset(model, n_per_class, n_per_class, rng);
    PooledStats stats = pooled_covariance(data);
    DenseWhitener w = whitening_exact(stats.covariance());
    const Vector dmu = stats.class_means[1] - stats.class_means[0];
    const Vector mid = 0.5 * (stats.class_means[0] + stats.class_means[1]);
    const Vector zeta_hat = w.apply(dmu);
    const Vector beta_hat = w.apply(zeta_hat);  // Sigma_hat^{-1} dmu
    Index jb = 0, jz = 0;
    beta_hat.cwiseAbs().maxCoeff(&jb);
    zeta_hat.cwiseAbs().maxCoeff(&jz);

    std::vector<int> truth = data.label_ordinal;
    std::vector<int> pred_nu(truth.size()), pred_nuz(truth.size()), pred_beta(truth.size());
    const Matrix centered_test = data.features.rowwise() - mid.transpose();
    const Matrix whitened_test = w.apply_rows(centered_test);
    for (Index i = 0; i < data.n(); ++i) {
      pred_nu[static_cast<std::size_t>(i)] =
          beta_hat(jb) * centered_test(i, jb) <= 0.0 ? 0 : 1;
      pred_nuz[static_cast<std::size_t>(i)] =
          zeta_hat(jz) * whitened_test(i, jz) <= 0.0 ? 0 : 1;
      pred_beta[static_cast<std::size_t>(i)] =
          beta_hat.dot(centered_test.row(i)) <= 0.0 ? 0 : 1;
    }
    const std::array<std::vector<int>*, 3> preds{&pred_nu, &pred_nuz, &pred_beta};
    for (int m = 0; m < 3; ++m) {
      RatesResult rr = metrics(*preds[static_cast<std::size_t>(m)], truth);
      err[static_cast<std::size_t>(m)] += rr.error;
      fp[static_cast<std::size_t>(m)] += rr.fpr;
      fn[static_cast<std::size_t>(m)] += rr.fnr;
    }
  }
  Example1Result out;
  for (int m = 0; m < 3; ++m) {
    auto& rr = out.rates[static_cast<std::size_t>(m)];
    rr.error = err[static_cast<std::size_t>(m)] / reps;
    rr.fpr = fp[static_cast<std::size_t>(m)] / reps;
    rr.fnr = fn[static_cast<std::size_t>(m)] / reps;
    rr.fpr_defined = rr.fnr_defined = true;
  }
  return out;
}

}  // namespace spikelda
