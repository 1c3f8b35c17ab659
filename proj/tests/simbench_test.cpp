#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "spikelda/rng.hpp"
#include "spikelda/simbench.hpp"

using namespace spikelda;

namespace {

// two-sample Kolmogorov-Smirnov statistic
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST(GenModel1, ClosedFormSpectrumAndDirections) {
  EXPECT_THROW(gen_model1(100, 1.0), RangeError);
  EXPECT_THROW(gen_model1(100, -0.1), RangeError);

  SimModel id = gen_model1(20, 0.0);
  EXPECT_LT((id.dense_sigma().mat() - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-12);

  const int p = 100;
  const double rho = 0.5;
  SimModel m = gen_model1(p, rho);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.dense_sigma().mat(), Eigen::EigenvaluesOnly);
  EXPECT_NEAR(es.eigenvalues().maxCoeff(), 1.0 + (p - 1) * rho, 1e-10);
  EXPECT_NEAR(es.eigenvalues().minCoeff(), 1.0 - rho, 1e-10);

  // true directions against a dense solve
  Vector beta_dense = m.dense_sigma().mat().ldlt().solve(m.mu2 - m.mu1);
  EXPECT_LT((m.true_beta() - beta_dense).cwiseAbs().maxCoeff(), 1e-10);
  DenseWhitener w = whitening_exact(m.dense_sigma());
  EXPECT_LT((m.true_zeta() - w.apply(m.mu2 - m.mu1)).cwiseAbs().maxCoeff(), 1e-10);

  // closed-form strong/faint signal values at p = 800
  SimModel big = gen_model1(800, 0.5);
  EXPECT_NEAR(big.true_beta()(0), 1.975031210986267, 1e-9);
  EXPECT_NEAR(big.true_beta()(799), -0.024968789013732832, 1e-12);
  EXPECT_NEAR(big.true_zeta()(0), 1.397160502584261, 1e-9);
  EXPECT_NEAR(big.true_zeta()(799), -0.017053059788833803, 1e-12);
  EXPECT_NEAR(big.condition_number(), 400.5 / 0.5, 1e-9);
}

TEST(GenModel2, BlockStructureAndSupport) {
  SimModel id = gen_model2(30, 0.0);
  EXPECT_LT((id.dense_sigma().mat() - Matrix::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(gen_model2(20, 0.5), RangeError);

  SimModel m = gen_model2(100, 0.5);
  const Matrix sigma = m.dense_sigma().mat();
  EXPECT_NEAR(sigma(0, 19), 0.5, 1e-12);
  EXPECT_NEAR(sigma(0, 20), 0.0, 1e-12);
  EXPECT_NEAR(sigma(25, 99), 0.5, 1e-12);

  IndexSet support = m.true_support_zeta();
  ASSERT_EQ(support.size(), 20u);
  for (int j = 0; j < 20; ++j) EXPECT_EQ(support[static_cast<std::size_t>(j)], j);

  EXPECT_NEAR(m.zeta_norm() * m.zeta_norm(), 10.476190476190476, 1e-9);
  EXPECT_NEAR(bayes_risk(m.zeta_norm(), 0.5), 0.05279389835979376, 1e-9);
}

TEST(GenModel3, StructureAndDegenerateDraw) {
  Rng rng(21);
  SimModel m = gen_model3(50, 10, EntryDist::Normal, rng);
  EXPECT_EQ(m.spike_excess.size(), 10);
  EXPECT_GT(m.spike_excess.minCoeff(), 0.0);
  EXPECT_GT(m.bulk, 0.0);

  // condition number formula against the dense spectrum
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.dense_sigma().mat(), Eigen::EigenvaluesOnly);
  EXPECT_NEAR(m.condition_number(), es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff(),
              1e-8 * m.condition_number());

  // an all-zero loading is rejected after one resample
  Matrix zero = Matrix::Zero(20, 3);
  EXPECT_THROW(detail::model3_from_loading(zero, Vector::Zero(20), Vector::Zero(20)),
               DomainError);

  EXPECT_THROW(gen_model3(10, 10, EntryDist::Normal, rng), RangeError);
}

TEST(SampleRows, DegenerateAndMomentChecks) {
  // zero covariance: every row equals mu
  SimModel deg;
  deg.mu1 = Vector::Constant(4, 2.5);
  deg.mu2 = deg.mu1;
  deg.spike_basis = Matrix::Zero(4, 0);
  deg.spike_excess = Vector::Zero(0);
  deg.bulk = 0.0;
  Rng rng(22);
  Matrix rows = sample_rows(deg, deg.mu1, 5, rng);
  EXPECT_LT((rows.rowwise() - deg.mu1.transpose()).cwiseAbs().maxCoeff(), 1e-15);

  // identity covariance: sample moments at n = 1e5
  SimModel id = gen_model1(10, 0.0);
  Matrix x = sample_rows(id, Vector::Zero(10), 100000, rng);
  Vector mean = x.colwise().mean();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 0.05);
  Matrix xc = x.rowwise() - mean.transpose();
  Matrix cov = (xc.transpose() * xc) / static_cast<double>(x.rows());
  EXPECT_LT((cov - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(SampleRows, ImplicitFactorMatchesDenseCholesky) {
  // distributional agreement on fixed one-dimensional projections
  const int p = 50, n = 4000;
  SimModel m = gen_model1(p, 0.6);
  Rng rng(23);
  Matrix a = sample_rows(m, m.mu1, n, rng);
  Eigen::LLT<Matrix> llt(m.dense_sigma().mat());
  Matrix g = rng.normal_matrix(n, p);
  Matrix b = (g * llt.matrixU()).rowwise() + m.mu1.transpose();

  Rng proj_rng(24);
  for (int rep = 0; rep < 3; ++rep) {
    Vector w = proj_rng.normal_matrix(p, 1);
    w /= w.norm();
    std::vector<double> pa(n), pb(n);
    for (int i = 0; i < n; ++i) {
      pa[static_cast<std::size_t>(i)] = a.row(i).dot(w);
      pb[static_cast<std::size_t>(i)] = b.row(i).dot(w);
    }
    const double ks = ks_statistic(pa, pb);
    const double crit = 1.628 * std::sqrt(2.0 / n);  // alpha = 0.01
    EXPECT_LT(ks, crit) << "projection " << rep;
  }
}

TEST(Metrics, HandCasesAndUndefined) {
  EXPECT_THROW(metrics({0, 1}, {0}), ValidationError);
  RatesResult all_right = metrics({0, 1, 0, 1}, {0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(all_right.error, 0.0);
  EXPECT_DOUBLE_EQ(all_right.fpr, 0.0);
  EXPECT_DOUBLE_EQ(all_right.fnr, 0.0);
  RatesResult all_wrong = metrics({1, 0, 1, 0}, {0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(all_wrong.error, 1.0);
  EXPECT_DOUBLE_EQ(all_wrong.fpr, 1.0);
  EXPECT_DOUBLE_EQ(all_wrong.fnr, 1.0);

  RatesResult no_neg = metrics({1, 1}, {1, 1});
  EXPECT_FALSE(no_neg.fpr_defined);
  EXPECT_TRUE(std::isnan(no_neg.fpr));
  EXPECT_TRUE(no_neg.fnr_defined);
}

TEST(Metrics, CountIdentityProperty) {
  Rng rng(25);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng.bounded(100));
    std::vector<int> pred(static_cast<std::size_t>(n)), truth(static_cast<std::size_t>(n));
    int n_pos = 0, n_neg = 0;
    for (int i = 0; i < n; ++i) {
      pred[static_cast<std::size_t>(i)] = static_cast<int>(rng.bounded(2));
      truth[static_cast<std::size_t>(i)] = static_cast<int>(rng.bounded(2));
      (truth[static_cast<std::size_t>(i)] == 1 ? n_pos : n_neg)++;
    }
    if (n_pos == 0 || n_neg == 0) continue;
    RatesResult r = metrics(pred, truth);
    // error * n == #false positives + #false negatives
    EXPECT_NEAR(r.error * n, r.fpr * n_neg + r.fnr * n_pos, 1e-9);
  }
}

TEST(StrongWeakCounts, HandCases) {
  IndexSet strong{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_EQ(strong_weak_counts(strong, strong), (std::pair<int, int>{10, 0}));
  EXPECT_EQ(strong_weak_counts({10}, strong), (std::pair<int, int>{0, 1}));
  EXPECT_EQ(strong_weak_counts({3, 10, 11}, strong), (std::pair<int, int>{1, 2}));
}

TEST(StructuredOracle, MatchesDenseOracleFisher) {
  const int p = 60;
  SimModel m = gen_model2(p, 0.5);
  StructuredOracle fast = StructuredOracle::make(m, 0.5);
  OracleRule dense = oracle_fisher(m.mu1, m.mu2, m.dense_sigma(), 0.5);
  Rng rng(26);
  Matrix pts = rng.normal_matrix(1000, p);
  auto fast_pred = fast.predict_batch(pts);
  for (int i = 0; i < 1000; ++i)
    EXPECT_EQ(fast_pred[static_cast<std::size_t>(i)],
              predict_oracle_ordinal(dense, pts.row(i).transpose()))
        << i;
  EXPECT_LT((fast.zeta - dense.zeta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RunMc, DeterministicAcrossCallsAndThreadCounts) {
  SimSpec spec;
  spec.model = SimSpec::ModelKind::EqualCorr;
  spec.rho = 0.5;
  spec.p = 60;
  spec.n_train_per_class = 25;
  spec.n_test_per_class = 25;
  MethodConfig method = MethodConfig::pclda_fixed(1, 5);

  McResult r1 = run_mc(spec, method, 6, 11, 1);
  McResult r2 = run_mc(spec, method, 6, 11, 2);
  McResult r3 = run_mc(spec, method, 6, 11, 1);
  ASSERT_EQ(r1.rows.size(), r2.rows.size());
  std::ostringstream csv1, csv2, csv3;
  write_replicates_csv(r1, csv1);
  write_replicates_csv(r2, csv2);
  write_replicates_csv(r3, csv3);
  EXPECT_EQ(csv1.str(), csv2.str());
  EXPECT_EQ(csv1.str(), csv3.str());
}

TEST(RunMc, SummaryEqualsRecomputedMeanAndSd) {
  SimSpec spec;
  spec.p = 50;
  spec.rho = 0.6;
  spec.n_train_per_class = 20;
  spec.n_test_per_class = 20;
  McResult r = run_mc(spec, MethodConfig::pclda_fixed(1, 4), 12, 7, 2);
  double sum = 0.0;
  for (const auto& row : r.rows) sum += row.error_rate;
  const double mean = sum / static_cast<double>(r.rows.size());
  double ss = 0.0;
  for (const auto& row : r.rows) ss += (row.error_rate - mean) * (row.error_rate - mean);
  const double sd = std::sqrt(ss / static_cast<double>(r.rows.size() - 1));
  EXPECT_DOUBLE_EQ(r.error_rate.mean, mean);
  EXPECT_DOUBLE_EQ(r.error_rate.sd, sd);
  EXPECT_EQ(r.n_failed, 0);
}

TEST(RunMc, OracleNearZeroErrorAtHighCorrelation) {
  SimSpec spec;
  spec.p = 800;
  spec.rho = 0.9;
  spec.n_train_per_class = 100;
  spec.n_test_per_class = 100;
  McResult r = run_mc(spec, MethodConfig::oracle(), 20, 99, 2);
  EXPECT_LE(r.error_rate.mean, 0.001);
  // model 1 has full support, so exact-recovery is trivially true for oracle
  EXPECT_DOUBLE_EQ(r.selected_equals_true.mean, 1.0);
}

TEST(RunMc, NscBenchmarkNearPublishedRow) {
  // equal-correlation benchmark with CV-tuned shrinkage; the centroid rule
  // ignores the correlation structure and lands near 20% error
  SimSpec spec;
  spec.p = 800;
  spec.rho = 0.5;
  spec.n_train_per_class = 100;
  spec.n_test_per_class = 100;
  McResult r = run_mc(spec, MethodConfig::nsc(), 60, 31, 2);
  EXPECT_NEAR(r.error_rate.mean, 0.2038, 0.03);
  EXPECT_EQ(r.n_failed, 0);
}

TEST(RunMc, FailurePolicy) {
  SimSpec spec;
  spec.p = 40;
  spec.n_train_per_class = 10;
  spec.n_test_per_class = 10;
  // d beyond min(n, p) fails in every replicate
  EXPECT_THROW(run_mc(spec, MethodConfig::pclda_fixed(50, 2), 5, 1, 1), RunError);
  EXPECT_THROW(run_mc(spec, MethodConfig::oracle(), 0, 1, 1), RangeError);
}

TEST(Example1, QuickReplicationNearAnchors) {
  Example1Result r = run_example1(60, 500, 0.9, 424242);
  EXPECT_NEAR(r.rates[0].error, 0.3085, 0.03);  // Phi(-1/2)
  EXPECT_NEAR(r.rates[1].error, 0.1655, 0.03);  // Phi(-w11/2)
  EXPECT_NEAR(r.rates[2].error, 0.1257, 0.03);  // Phi(-|zeta|/2)
  // the three rates are ordered: raw top coordinate loses the most
  EXPECT_GT(r.rates[0].error, r.rates[1].error);
  EXPECT_GT(r.rates[1].error, r.rates[2].error);
}

TEST(WriteCsv, SchemaAndSummaryBlock) {
  SimSpec spec;
  spec.p = 40;
  spec.n_train_per_class = 15;
  spec.n_test_per_class = 15;
  McResult r = run_mc(spec, MethodConfig::pclda_fixed(1, 3), 3, 5, 1);
  std::ostringstream os;
  write_replicates_csv(r, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line,
            "error_rate,fpr,fnr,model_size,strong_hits,weak_hits,selected_equals_true,seed");
  int data_rows = 0;
  bool saw_summary_header = false, saw_mean = false, saw_sd = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("stat,", 0) == 0) {
      saw_summary_header = true;
    } else if (line.rfind("mean,", 0) == 0) {
      saw_mean = true;
    } else if (line.rfind("sd,", 0) == 0) {
      saw_sd = true;
    } else {
      ++data_rows;
    }
  }
  EXPECT_EQ(data_rows, 3);
  EXPECT_TRUE(saw_summary_header);
  EXPECT_TRUE(saw_mean);
  EXPECT_TRUE(saw_sd);

  nlohmann::json j = summary_to_json(spec, MethodConfig::pclda_fixed(1, 3), 3, 5, r);
  EXPECT_EQ(j.at("reps"), 3);
  EXPECT_TRUE(j.at("summary").contains("error_rate"));
}
