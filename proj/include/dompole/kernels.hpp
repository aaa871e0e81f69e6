#pragma once

// Linear-algebra primitives used by the dominant-pole solver: shifted
// factorizations of A - mu*E, the small dense generalized eigensolver for
// projected pencils, orthonormal basis extension and sigma_max.

#include <atomic>
#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dompole {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

/// Event counters for factorizations and right-hand-side solves. One
/// "solve" is a forward plus back substitution for a single column.
struct OpCounters {
  std::atomic<long> lu{0};
  std::atomic<long> solves{0};

  void reset() {
    lu = 0;
    solves = 0;
  }
};

/// Systems up to this order are factored densely.
inline constexpr Index kDenseFactorThreshold = 64;

/// LU factorization of (A - shift*E), reusable for any number of solves with
/// the matrix or its conjugate transpose. Immutable after construction.
class ShiftedFactorization {
 public:
  /// Throws SingularShift when a pivot falls below n*eps*max|pivot|, i.e.
  /// when `shift` is numerically an eigenvalue of the pencil.
  ShiftedFactorization(const SparseMatrix& A, const SparseMatrix& E,
                       Complex shift, OpCounters* counters = nullptr,
                       Index dense_threshold = kDenseFactorThreshold);

  Complex shift() const noexcept { return shift_; }
  Index dimension() const noexcept { return n_; }
  bool is_dense() const noexcept;

  /// Solves (A - shift*E) X = rhs.
  CMatrix solve(const CMatrix& rhs) const;
  /// Solves (A - shift*E)^* X = rhs.
  CMatrix solve_adjoint(const CMatrix& rhs) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  Complex shift_;
  Index n_ = 0;
  OpCounters* counters_ = nullptr;
};

/// Eigenvalue of a pencil in homogeneous form lambda = alpha / beta.
struct HomogeneousEigenvalue {
  Complex alpha;
  Complex beta;
  bool finite = true;

  Complex value() const { return alpha / beta; }
};

/// Result of small_generalized_eig. Columns of right_vectors/left_vectors
/// correspond to entries of `eigenvalues`; infinite entries carry vectors too
/// but are not poles.
struct SmallEigenDecomposition {
  std::vector<HomogeneousEigenvalue> eigenvalues;
  CMatrix right_vectors;
  CMatrix left_vectors;
  Index pencil_dim = 0;

  std::vector<Index> finite_indices() const;
};

inline constexpr double kInfiniteEigTol = 1e-12;
inline constexpr double kRankTol = 1e-10;

/// All eigenvalues of the dense pencil (A_r, E_r) with right vectors
/// (A_r v = lambda E_r v) and left vectors (w^* A_r = lambda w^* E_r), via QZ.
/// Each finite pair is rescaled so that w^* E_r v = 1 when that product is
/// not negligible; otherwise vectors are left unit-normalized.
SmallEigenDecomposition small_generalized_eig(const CMatrix& A_r,
                                              const CMatrix& E_r);

/// Same contract for real pencils, using real QZ so that complex eigenvalues
/// come in exact conjugate pairs and real eigenvalues are exactly real.
SmallEigenDecomposition small_generalized_eig(const RMatrix& A_r,
                                              const RMatrix& E_r);

/// n x d matrix with orthonormal columns.
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;
  explicit OrthonormalBasis(Index rows) : columns_(rows, 0) {}

  /// Orthonormalizes `cols` (rank-guarded) into a fresh basis.
  static OrthonormalBasis from_columns(const CMatrix& cols);

  const CMatrix& columns() const noexcept { return columns_; }
  Index rows() const noexcept { return columns_.rows(); }
  Index dim() const noexcept { return columns_.cols(); }

  /// ||Q^* Q - I||_F
  double orthonormality_defect() const;

 private:
  friend OrthonormalBasis extend_basis(const OrthonormalBasis&, const CMatrix&);
  friend Index extend_basis_pair(OrthonormalBasis&, OrthonormalBasis&,
                                 const CMatrix&, const CMatrix&);
  CMatrix columns_;
};

/// Returns a basis spanning span(basis) + span(new_cols). New columns are
/// orthogonalized against the basis twice (classical Gram-Schmidt) and then
/// against each other; a column whose remaining norm is below
/// kRankTol * (its incoming norm) is dropped.
OrthonormalBasis extend_basis(const OrthonormalBasis& basis,
                              const CMatrix& new_cols);

/// Extends V with V_new and W with W_new in lockstep so that dim(V) and
/// dim(W) stay equal. Column k is dropped from both bases when it is
/// dependent on both sides. When only one side is dependent, that side is
/// extended with the other side's column k instead (if that is independent
/// there), otherwise the pair is dropped. Returns the number of directions
/// added to each basis.
Index extend_basis_pair(OrthonormalBasis& V, OrthonormalBasis& W,
                        const CMatrix& V_new, const CMatrix& W_new);

/// Largest singular value; 0 for an empty matrix.
double sigma_max(const CMatrix& M);

/// Dense copy of a sparse matrix.
CMatrix to_dense(const SparseMatrix& M);

/// Max column sum.
double norm1(const SparseMatrix& M);

}  // namespace dompole
