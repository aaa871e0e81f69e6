#include "dompole/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "dompole/errors.hpp"

namespace dompole {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::SingularShift: return "SingularShift";
    case ErrorCode::SingularPencil: return "SingularPencil";
    case ErrorCode::DegenerateEigenvector: return "DegenerateEigenvector";
    case ErrorCode::UnboundedError: return "UnboundedError";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InitFailure: return "InitFailure";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// SparseLU keeps the diagonal of U inside the supernodal L storage; this
// subclass reads it back to judge numerical singularity.
class PivotInspectingLU
    : public Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> {
 public:
  std::pair<double, double> pivot_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Index j = 0; j < this->cols(); ++j) {
      double pivot = 0.0;
      for (SCMatrix::InnerIterator it(m_Lstore, j); it; ++it) {
        if (it.index() == j) {
          pivot = std::abs(it.value());
          break;
        }
      }
      lo = std::min(lo, pivot);
      hi = std::max(hi, pivot);
    }
    return {lo, hi};
  }
};

bool pivots_singular(double lo, double hi, Index n) {
  if (!(hi > 0.0) || !std::isfinite(lo) || !std::isfinite(hi)) return true;
  return lo <= static_cast<double>(n) * kEps * hi;
}

}  // namespace

struct ShiftedFactorization::Impl {
  bool dense = false;
  Eigen::PartialPivLU<CMatrix> dense_lu;
  mutable PivotInspectingLU sparse_lu;
};

ShiftedFactorization::ShiftedFactorization(const SparseMatrix& A,
                                           const SparseMatrix& E,
                                           Complex shift,
                                           OpCounters* counters,
                                           Index dense_threshold)
    : shift_(shift), n_(A.rows()), counters_(counters) {
  if (A.rows() != A.cols() || E.rows() != E.cols() || A.rows() != E.rows()) {
    throw DimensionMismatch("shifted factorization: A and E must be square and of equal size");
  }
  auto impl = std::make_shared<Impl>();
  SparseMatrix M = A - shift * E;
  M.makeCompressed();
  if (n_ <= dense_threshold) {
    impl->dense = true;
    impl->dense_lu.compute(CMatrix(M));
    const auto diag = impl->dense_lu.matrixLU().diagonal().cwiseAbs();
    const double lo = n_ > 0 ? diag.minCoeff() : 1.0;
    const double hi = n_ > 0 ? diag.maxCoeff() : 1.0;
    if (n_ > 0 && pivots_singular(lo, hi, n_)) {
      throw SingularShift("A - mu*E is numerically singular at mu = (" +
                          std::to_string(shift.real()) + ", " +
                          std::to_string(shift.imag()) + ")");
    }
  } else {
    impl->sparse_lu.analyzePattern(M);
    impl->sparse_lu.factorize(M);
    bool singular = impl->sparse_lu.info() != Eigen::Success;
    if (!singular) {
      const auto [lo, hi] = impl->sparse_lu.pivot_range();
      singular = pivots_singular(lo, hi, n_);
    }
    if (singular) {
      throw SingularShift("A - mu*E is numerically singular at mu = (" +
                          std::to_string(shift.real()) + ", " +
                          std::to_string(shift.imag()) + ")");
    }
  }
  impl_ = std::move(impl);
  if (counters_ != nullptr) ++counters_->lu;
}

bool ShiftedFactorization::is_dense() const noexcept { return impl_->dense; }

CMatrix ShiftedFactorization::solve(const CMatrix& rhs) const {
  if (rhs.rows() != n_) throw DimensionMismatch("solve: right-hand side has wrong row count");
  if (counters_ != nullptr) counters_->solves += rhs.cols();
  if (impl_->dense) return impl_->dense_lu.solve(rhs);
  return impl_->sparse_lu.solve(rhs);
}

CMatrix ShiftedFactorization::solve_adjoint(const CMatrix& rhs) const {
  if (rhs.rows() != n_) throw DimensionMismatch("solve_adjoint: right-hand side has wrong row count");
  if (counters_ != nullptr) counters_->solves += rhs.cols();
  if (impl_->dense) return impl_->dense_lu.adjoint().solve(rhs);
  return impl_->sparse_lu.adjoint().solve(rhs);
}

std::vector<Index> SmallEigenDecomposition::finite_indices() const {
  std::vector<Index> out;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    if (eigenvalues[k].finite) out.push_back(static_cast<Index>(k));
  }
  return out;
}

namespace {

void check_pencil_shape(Index ar, Index ac, Index er, Index ec) {
  if (ar != ac || er != ec || ar != er) {
    throw DimensionMismatch("generalized eigenproblem: pencil matrices must be square and of equal size");
  }
}

// Shared post-processing: classification, singular-pencil detection and
// w^* E v = 1 scaling.
void finish_decomposition(SmallEigenDecomposition& out, const CMatrix& A,
                          const CMatrix& E) {
  const Index d = out.pencil_dim;
  const double a_norm = d > 0 ? A.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
  const double e_norm = d > 0 ? E.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
  const double singular_tol = 10.0 * static_cast<double>(std::max<Index>(d, 1)) * kEps;
  for (Index k = 0; k < d; ++k) {
    auto& ev = out.eigenvalues[k];
    const double abs_a = std::abs(ev.alpha);
    const double abs_b = std::abs(ev.beta);
    if (abs_a <= singular_tol * std::max(a_norm, kEps) &&
        abs_b <= singular_tol * std::max(e_norm, kEps)) {
      throw SingularPencil("projected pencil is singular (alpha and beta both vanish)");
    }
    ev.finite = abs_b > kInfiniteEigTol * (abs_a + abs_b);
    out.right_vectors.col(k).normalize();
    out.left_vectors.col(k).normalize();
    if (!ev.finite) continue;
    const Complex c = out.left_vectors.col(k).dot(E * out.right_vectors.col(k));
    const double tol_norm = 1e-12 * e_norm;
    if (std::abs(c) > tol_norm) out.right_vectors.col(k) /= c;
  }
}

}  // namespace

SmallEigenDecomposition small_generalized_eig(const CMatrix& A_r,
                                              const CMatrix& E_r) {
  check_pencil_shape(A_r.rows(), A_r.cols(), E_r.rows(), E_r.cols());
  const Index d = A_r.rows();
  SmallEigenDecomposition out;
  out.pencil_dim = d;
  out.eigenvalues.resize(static_cast<std::size_t>(d));
  out.right_vectors.resize(d, d);
  out.left_vectors.resize(d, d);
  if (d == 0) return out;

  CMatrix a = A_r;
  CMatrix b = E_r;
  CVector alpha(d), beta(d);
  const auto n = static_cast<lapack_int>(d);
  const lapack_int info = LAPACKE_zggev(
      LAPACK_COL_MAJOR, 'V', 'V', n, a.data(), n, b.data(), n, alpha.data(),
      beta.data(), out.left_vectors.data(), n, out.right_vectors.data(), n);
  if (info < 0) throw Error(ErrorCode::Internal, "zggev: illegal argument");
  if (info > 0) throw SingularPencil("QZ iteration failed to converge on the projected pencil");
  for (Index k = 0; k < d; ++k) {
    out.eigenvalues[k] = HomogeneousEigenvalue{alpha(k), beta(k), true};
  }
  finish_decomposition(out, A_r, E_r);
  return out;
}

SmallEigenDecomposition small_generalized_eig(const RMatrix& A_r,
                                              const RMatrix& E_r) {
  check_pencil_shape(A_r.rows(), A_r.cols(), E_r.rows(), E_r.cols());
  const Index d = A_r.rows();
  SmallEigenDecomposition out;
  out.pencil_dim = d;
  out.eigenvalues.resize(static_cast<std::size_t>(d));
  out.right_vectors.resize(d, d);
  out.left_vectors.resize(d, d);
  if (d == 0) return out;

  RMatrix a = A_r;
  RMatrix b = E_r;
  Eigen::VectorXd alphar(d), alphai(d), beta(d);
  RMatrix vl(d, d), vr(d, d);
  const auto n = static_cast<lapack_int>(d);
  const lapack_int info =
      LAPACKE_dggev(LAPACK_COL_MAJOR, 'V', 'V', n, a.data(), n, b.data(), n,
                    alphar.data(), alphai.data(), beta.data(), vl.data(), n,
                    vr.data(), n);
  if (info < 0) throw Error(ErrorCode::Internal, "dggev: illegal argument");
  if (info > 0) throw SingularPencil("QZ iteration failed to converge on the pencil");

  // dggev packs a conjugate pair (k, k+1) as columns re, im.
  for (Index k = 0; k < d; ++k) {
    out.eigenvalues[k] = HomogeneousEigenvalue{Complex(alphar(k), alphai(k)),
                                               Complex(beta(k), 0.0), true};
    if (alphai(k) == 0.0) {
      out.right_vectors.col(k) = vr.col(k).cast<Complex>();
      out.left_vectors.col(k) = vl.col(k).cast<Complex>();
    } else if (alphai(k) > 0.0 && k + 1 < d) {
      const Complex i(0.0, 1.0);
      out.right_vectors.col(k) = vr.col(k).cast<Complex>() + i * vr.col(k + 1).cast<Complex>();
      out.right_vectors.col(k + 1) = out.right_vectors.col(k).conjugate();
      out.left_vectors.col(k) = vl.col(k).cast<Complex>() + i * vl.col(k + 1).cast<Complex>();
      out.left_vectors.col(k + 1) = out.left_vectors.col(k).conjugate();
      out.eigenvalues[k + 1] = HomogeneousEigenvalue{
          Complex(alphar(k + 1), alphai(k + 1)), Complex(beta(k + 1), 0.0), true};
      ++k;
    }
  }
  finish_decomposition(out, A_r.cast<Complex>(), E_r.cast<Complex>());
  return out;
}

OrthonormalBasis OrthonormalBasis::from_columns(const CMatrix& cols) {
  return extend_basis(OrthonormalBasis(cols.rows()), cols);
}

double OrthonormalBasis::orthonormality_defect() const {
  const Index d = dim();
  if (d == 0) return 0.0;
  return (columns_.adjoint() * columns_ - CMatrix::Identity(d, d)).norm();
}

namespace {

// Two passes of classical Gram-Schmidt of x against Q.
void cgs2(const Eigen::Ref<const CMatrix>& Q, Eigen::Ref<CVector> x) {
  if (Q.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) x -= Q * (Q.adjoint() * x);
}

}  // namespace

OrthonormalBasis extend_basis(const OrthonormalBasis& basis,
                              const CMatrix& new_cols) {
  if (new_cols.rows() != basis.rows()) {
    throw DimensionMismatch("extend_basis: new columns have wrong row count");
  }
  const Index d = basis.dim();
  CMatrix Q(basis.rows(), d + new_cols.cols());
  Q.leftCols(d) = basis.columns();
  Index used = d;
  for (Index k = 0; k < new_cols.cols(); ++k) {
    CVector x = new_cols.col(k);
    const double incoming = x.norm();
    if (!(incoming > 0.0) || !std::isfinite(incoming)) continue;
    cgs2(Q.leftCols(used), x);
    const double remaining = x.norm();
    if (remaining <= kRankTol * incoming) continue;
    Q.col(used++) = x / remaining;
  }
  OrthonormalBasis out;
  out.columns_ = Q.leftCols(used);
  return out;
}

Index extend_basis_pair(OrthonormalBasis& V, OrthonormalBasis& W,
                        const CMatrix& V_new, const CMatrix& W_new) {
  if (V_new.rows() != V.rows() || W_new.rows() != W.rows()) {
    throw DimensionMismatch("extend_basis_pair: new columns have wrong row count");
  }
  if (V_new.cols() != W_new.cols() || V.dim() != W.dim()) {
    throw DimensionMismatch("extend_basis_pair: paired blocks must have equal column counts");
  }
  const Index d = V.dim();
  const Index k_max = V_new.cols();
  CMatrix QV(V.rows(), d + k_max), QW(W.rows(), d + k_max);
  QV.leftCols(d) = V.columns();
  QW.leftCols(d) = W.columns();
  Index used = d;
  // Orthogonalizes `x` against Q[:, :used]; true if it survives the guard.
  auto reduce = [&](const CMatrix& Q, CVector& x) {
    const double x0 = x.norm();
    if (!(x0 > 0.0) || !std::isfinite(x0)) return false;
    cgs2(Q.leftCols(used), x);
    return x.norm() > kRankTol * x0;
  };
  for (Index k = 0; k < k_max; ++k) {
    CVector x = V_new.col(k);
    CVector y = W_new.col(k);
    bool ok_x = reduce(QV, x);
    bool ok_y = reduce(QW, y);
    // One-sided fallback: a side with nothing new borrows the other side's
    // candidate so that both bases still grow by one.
    if (ok_x && !ok_y) {
      y = V_new.col(k);
      ok_y = reduce(QW, y);
    } else if (!ok_x && ok_y) {
      x = W_new.col(k);
      ok_x = reduce(QV, x);
    }
    if (!ok_x || !ok_y) continue;
    QV.col(used) = x.normalized();
    QW.col(used) = y.normalized();
    ++used;
  }
  V.columns_ = QV.leftCols(used);
  W.columns_ = QW.leftCols(used);
  return used - d;
}

double sigma_max(const CMatrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(M);
  return svd.singularValues()(0);
}

CMatrix to_dense(const SparseMatrix& M) { return CMatrix(M); }

double norm1(const SparseMatrix& M) {
  double best = 0.0;
  for (Index j = 0; j < M.outerSize(); ++j) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) sum += std::abs(it.value());
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace dompole
