#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spikelda/common.hpp"
#include "spikelda/core_linalg.hpp"
#include "spikelda/dataio.hpp"

namespace spikelda {

// Class means plus the class-mean-centered data matrix behind the pooled
// covariance Sigma_hat = (1/n) Xc^T Xc (divisor n, not n - K). The matrix
// itself is materialized only on request; the fitting paths work from the
// centered rows so that p >> n cases never allocate p x p.
struct PooledStats {
  std::vector<Vector> class_means;
  std::vector<int> counts;
  Matrix centered;  // n x p, rows centered by their own class mean

  int n() const { return static_cast<int>(centered.rows()); }
  Index p() const { return centered.cols(); }

  double trace() const { return centered.squaredNorm() / static_cast<double>(n()); }

  SymmetricMatrix covariance() const {
    Matrix s = (centered.transpose() * centered) / static_cast<double>(n());
    return SymmetricMatrix(0.5 * (s + s.transpose()));
  }

  bool use_gram_path() const { return p() > 4 * static_cast<Index>(n()); }

  // Top-k eigenpairs of the pooled covariance; Gram path when p > 4n.
  EigenPairs top_eigenpairs(Index k) const {
    if (k < 1 || k > std::min<Index>(n(), p()))
      throw RangeError("top_eigenpairs: k must be in [1, min(n, p)]");
    if (use_gram_path()) return top_eigenpairs_gram(centered, k);
    return sym_eigendecomp(covariance(), k);
  }

  // Full computable spectrum, non-increasing. On the Gram path these are the
  // n eigenvalues of the n x n Gram matrix (all nonzero eigenvalues of
  // Sigma_hat, summing to its trace); otherwise all p eigenvalues.
  Vector eigenvalues_all() const {
    if (use_gram_path()) {
      Matrix gram = (centered * centered.transpose()) / static_cast<double>(n());
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gram + gram.transpose()),
                                               Eigen::EigenvaluesOnly);
      return es.eigenvalues().reverse().cwiseMax(0.0);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(covariance().mat(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().reverse();
  }
};

inline PooledStats pooled_covariance(const LabeledDataset& data) {
  if (data.n_classes() < 2)
    throw InsufficientDataError("pooled_covariance: need at least 2 classes");
  for (int c = 0; c < data.n_classes(); ++c)
    if (data.class_counts[c] < 2)
      throw InsufficientDataError("pooled_covariance: class '" + data.class_names[c] +
                                  "' has fewer than 2 samples");
  PooledStats st;
  st.counts = data.class_counts;
  st.class_means.assign(data.n_classes(), Vector::Zero(data.p()));
  for (Index i = 0; i < data.n(); ++i)
    st.class_means[data.label_ordinal[static_cast<std::size_t>(i)]] += data.features.row(i);
  for (int c = 0; c < data.n_classes(); ++c) st.class_means[c] /= st.counts[c];
  st.centered = data.features;
  for (Index i = 0; i < data.n(); ++i)
    st.centered.row(i) -= st.class_means[data.label_ordinal[static_cast<std::size_t>(i)]];
  return st;
}

// Estimated spiked covariance: top-d sample eigenpairs plus the bulk variance
// sigma2_hat = (tr(Sigma_hat) - sum(lambda_hat)) / (p - d).
struct SpikedCovModel {
  int d = 0;
  Matrix u_hat;       // p x d, column-orthonormal
  Vector lambda_hat;  // non-increasing, > 0
  double sigma2_hat = 0.0;

  Index p() const { return u_hat.rows(); }
};

namespace detail {

inline SpikedCovModel make_spiked(EigenPairs pairs, double total_trace, Index p, int d) {
  if (pairs.values(d - 1) <= 0.0)
    throw DegenerateSpectrumError("fit_spiked: eigenvalue " + std::to_string(d) +
                                  " is not positive");
  const double sigma2 =
      (total_trace - pairs.values.sum()) / static_cast<double>(p - d);
  if (sigma2 <= 0.0)
    throw DegenerateSpectrumError(
        "fit_spiked: residual trace is not positive (d too large for the spectrum)");
  SpikedCovModel m;
  m.d = d;
  m.u_hat = std::move(pairs.vectors);
  m.lambda_hat = std::move(pairs.values);
  m.sigma2_hat = sigma2;
  return m;
}

}  // namespace detail

inline SpikedCovModel fit_spiked(const PooledStats& stats, int d) {
  const Index cap = std::min<Index>(stats.n(), stats.p());
  if (d < 1 || d >= cap) throw RangeError("fit_spiked: need 1 <= d < min(n, p)");
  return detail::make_spiked(stats.top_eigenpairs(d), stats.trace(), stats.p(), d);
}

// Direct covariance-matrix path, for fitting from a known or reconstructed
// Sigma rather than from data.
inline SpikedCovModel fit_spiked(const SymmetricMatrix& sigma_hat, int d) {
  if (d < 1 || d >= sigma_hat.dim()) throw RangeError("fit_spiked: need 1 <= d < p");
  return detail::make_spiked(sym_eigendecomp(sigma_hat, d), sigma_hat.trace(),
                             sigma_hat.dim(), d);
}

// Smallest d whose leading eigenvalues account for at least `frac` of the
// total of the given spectrum. The caller caps d at min(n, p) - 1.
inline int choose_d(const Vector& eigenvalues_desc, double frac) {
  if (!(frac > 0.0 && frac < 1.0)) throw RangeError("choose_d: frac must be in (0, 1)");
  if (eigenvalues_desc.size() == 0) throw ValidationError("choose_d: empty spectrum");
  if (eigenvalues_desc.minCoeff() < -1e-10 * std::max(1.0, std::abs(eigenvalues_desc(0))))
    throw ValidationError("choose_d: negative eigenvalue in spectrum");
  const double total = eigenvalues_desc.sum();
  if (total <= 0.0) throw ValidationError("choose_d: spectrum sums to zero");
  double cum = 0.0;
  for (Index i = 0; i < eigenvalues_desc.size(); ++i) {
    cum += eigenvalues_desc(i);
    if (cum / total >= frac) return static_cast<int>(i + 1);
  }
  return static_cast<int>(eigenvalues_desc.size());
}

// Variance-fraction fit: one decomposition serves both the d selection and
// the model. d is capped at min(n, p) - 1.
inline SpikedCovModel fit_spiked_auto(const PooledStats& stats, double frac) {
  const Vector spectrum = stats.eigenvalues_all();
  int d = choose_d(spectrum, frac);
  d = std::min<int>(d, static_cast<int>(std::min<Index>(stats.n(), stats.p())) - 1);
  return fit_spiked(stats, d);
}

// Implicit map v -> U_hat diag(eta) U_hat^T v + sigma_hat^{-1} (v - U_hat U_hat^T v)
// with eta_k = (lambda_hat_k + sigma2_hat)^{-1/2}. Never materializes p x p.
class WhiteningOperator {
 public:
  explicit WhiteningOperator(SpikedCovModel model) : model_(std::move(model)) {
    inv_sigma_ = 1.0 / std::sqrt(model_.sigma2_hat);
    eta_ = (model_.lambda_hat.array() + model_.sigma2_hat).rsqrt();
  }

  Index p() const { return model_.p(); }
  const SpikedCovModel& model() const { return model_; }
  const Vector& eta_hat() const { return eta_; }
  double inv_sigma_hat() const { return inv_sigma_; }

  Vector apply(const Vector& v) const {
    if (v.size() != p()) throw ValidationError("whiten: dimension mismatch");
    Vector t = model_.u_hat.transpose() * v;  // d
    return inv_sigma_ * v +
           model_.u_hat * ((eta_.array() - inv_sigma_) * t.array()).matrix();
  }

  // Row-wise batch application.
  Matrix apply_rows(const Matrix& x) const {
    if (x.cols() != p()) throw ValidationError("whiten: dimension mismatch");
    Matrix t = x * model_.u_hat;  // n x d
    t.array().rowwise() *= (eta_.array() - inv_sigma_).transpose();
    return inv_sigma_ * x + t * model_.u_hat.transpose();
  }

 private:
  SpikedCovModel model_;
  Vector eta_;
  double inv_sigma_ = 0.0;
};

// Dense symmetric inverse square root W = Sigma^{-1/2}; W Sigma W = I.
class DenseWhitener {
 public:
  explicit DenseWhitener(Matrix w) : w_(std::move(w)) {}
  const Matrix& matrix() const { return w_; }
  Vector apply(const Vector& v) const {
    if (v.size() != w_.rows()) throw ValidationError("whitening_exact: dimension mismatch");
    return w_ * v;
  }
  Matrix apply_rows(const Matrix& x) const { return x * w_; }

 private:
  Matrix w_;
};

inline DenseWhitener whitening_exact(const SymmetricMatrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma.mat());
  if (es.info() != Eigen::Success) throw Error("whitening_exact: solver failed");
  const Vector& vals = es.eigenvalues();
  const double lmax = vals.maxCoeff();
  if (vals.minCoeff() <= 1e-12 * std::max(1.0, lmax))
    throw DomainError("whitening_exact: matrix is not positive definite");
  Matrix w = es.eigenvectors() * vals.array().rsqrt().matrix().asDiagonal() *
             es.eigenvectors().transpose();
  return DenseWhitener(0.5 * (w + w.transpose()));
}

}  // namespace spikelda
