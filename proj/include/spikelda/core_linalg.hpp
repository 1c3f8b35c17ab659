#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <string>

#include "spikelda/common.hpp"

namespace spikelda {

// Dense symmetric matrix. The constructor checks that the two triangles agree
// to a relative tolerance and then symmetrizes exactly, so downstream code can
// rely on m(i,j) == m(j,i).
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(Matrix m, double rel_tol = 1e-12) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw ValidationError("SymmetricMatrix: input must be square, p >= 1");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > rel_tol * scale)
      throw ValidationError("SymmetricMatrix: input not symmetric (max |A-A^T| = " +
                            std::to_string(asym) + ")");
    m_ = 0.5 * (m + m.transpose());
  }

  Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double trace() const { return m_.trace(); }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct EigenPairs {
  Vector values;   // non-increasing
  Matrix vectors;  // p x k, column-orthonormal, sign-normalized
};

namespace detail {

// Sign convention: flip each column so its largest-magnitude entry is
// positive; ties resolved by lowest row index. Makes decompositions
// deterministic up to eigenvalue ties.
inline void sign_normalize_columns(Matrix& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index idx = 0;
    v.col(j).cwiseAbs().maxCoeff(&idx);
    if (v(idx, j) < 0.0) v.col(j) = -v.col(j);
  }
}

inline void check_orthonormal(const Matrix& u, const char* what) {
  const Matrix g = u.transpose() * u;
  const double dev = (g - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-6)
    throw ValidationError(std::string(what) + ": columns not orthonormal (dev = " +
                          std::to_string(dev) + ")");
}

}  // namespace detail

// Top-k eigenpairs of a symmetric matrix, eigenvalues non-increasing.
inline EigenPairs sym_eigendecomp(const SymmetricMatrix& a, Index k) {
  const Index p = a.dim();
  if (k < 1 || k > p) throw RangeError("sym_eigendecomp: k must be in [1, p]");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat());
  if (es.info() != Eigen::Success) throw Error("sym_eigendecomp: solver failed");
  EigenPairs out;
  out.values = es.eigenvalues().reverse().head(k);
  out.vectors = es.eigenvectors().rowwise().reverse().leftCols(k);
  detail::sign_normalize_columns(out.vectors);
  return out;
}

// Top-k eigenpairs of (1/n) Xc^T Xc computed through the n x n Gram matrix.
// Intended for p >> n; rows of `centered` must already be centered by the
// caller. Eigenvalues are clamped at zero (the product is PSD by
// construction).
inline EigenPairs top_eigenpairs_gram(const Matrix& centered, Index k) {
  const Index n = centered.rows();
  const Index p = centered.cols();
  if (k < 1 || k > std::min(n, p))
    throw RangeError("top_eigenpairs_gram: k must be in [1, min(n, p)]");
  Matrix gram = (centered * centered.transpose()) / static_cast<double>(n);
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw Error("top_eigenpairs_gram: solver failed");

  EigenPairs out;
  out.values = es.eigenvalues().reverse().head(k).cwiseMax(0.0);
  out.vectors.resize(p, k);
  const Matrix u = es.eigenvectors().rowwise().reverse().leftCols(k);
  for (Index j = 0; j < k; ++j) {
    Vector v = centered.transpose() * u.col(j);
    const double nrm = v.norm();
    if (nrm > 1e-300) {
      out.vectors.col(j) = v / nrm;
    } else {
      // Zero eigenvalue: the data does not determine this direction. Fill
      // with a deterministic unit vector orthogonal to the previous columns.
      Vector e = Vector::Zero(p);
      for (Index c = 0; c < p; ++c) {
        e.setZero();
        e(c) = 1.0;
        for (Index q = 0; q < j; ++q) e -= out.vectors.col(q).dot(e) * out.vectors.col(q);
        if (e.norm() > 0.5) break;
      }
      out.vectors.col(j) = e / e.norm();
    }
  }
  detail::sign_normalize_columns(out.vectors);
  return out;
}

// max over rows of the row l2 norm; equals sup_{|x|_2 = 1} |Mx|_inf.
inline double two_to_inf_norm(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return m.rowwise().norm().maxCoeff();
}

// Orthogonal matrix Xi minimizing |Uhat Xi - U|_F (polar factor of Uhat^T U),
// so Uhat Xi is the best orthogonal alignment of Uhat onto U.
inline Matrix procrustes_align(const Matrix& u_hat, const Matrix& u) {
  if (u_hat.rows() != u.rows() || u_hat.cols() != u.cols())
    throw ValidationError("procrustes_align: shape mismatch");
  detail::check_orthonormal(u_hat, "procrustes_align(u_hat)");
  detail::check_orthonormal(u, "procrustes_align(u)");
  const Matrix m = u_hat.transpose() * u;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().minCoeff() <= 1e-12)
    throw DegenerateAlignmentError("procrustes_align: subspaces nearly orthogonal, alignment undefined");
  return svd.matrixU() * svd.matrixV().transpose();
}

// Spectral sin-Theta distance |Uhat^T U_perp|_2 = sqrt(1 - sigma_min(Uhat^T U)^2).
inline double sin_theta_dist(const Matrix& u_hat, const Matrix& u) {
  if (u_hat.rows() != u.rows() || u_hat.cols() != u.cols())
    throw ValidationError("sin_theta_dist: shape mismatch");
  detail::check_orthonormal(u_hat, "sin_theta_dist(u_hat)");
  detail::check_orthonormal(u, "sin_theta_dist(u)");
  Eigen::JacobiSVD<Matrix> svd(u_hat.transpose() * u);
  double smin = svd.singularValues().minCoeff();
  smin = std::min(smin, 1.0);
  return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

// tr(A) / |A|_2 for PSD A; in [1, p].
inline double effective_rank(const SymmetricMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat(), Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (lmax <= 0.0) throw DomainError("effective_rank: matrix is zero or not PSD");
  if (lmin < -1e-10 * lmax) throw DomainError("effective_rank: matrix not PSD");
  return a.trace() / lmax;
}

}  // namespace spikelda
