#include <doctest.h>

#include <random>
#include <thread>

#include "dompole/errors.hpp"
#include "dompole/kernels.hpp"
#include "dompole/system.hpp"
#include "oracle.hpp"

using namespace dompole;

namespace {

CMatrix random_matrix(Index rows, Index cols, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMatrix M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = Complex(u(gen), u(gen));
  return M;
}

SparseMatrix sparse_diag(std::initializer_list<double> d) {
  CMatrix M = CMatrix::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
  Index k = 0;
  for (double x : d) M(k, k) = x, ++k;
  return M.sparseView();
}

SparseMatrix sparse_identity(Index n) {
  SparseMatrix I(n, n);
  I.setIdentity();
  return I;
}

// Coefficients of det(A - s E) by sampling on a circle and an inverse DFT;
// its roots come from the companion matrix.
std::vector<Complex> charpoly_roots(const CMatrix& A, const CMatrix& E, double radius) {
  const Index d = A.rows();
  const Index N = d + 1;
  std::vector<Complex> samples(static_cast<std::size_t>(N));
  const double pi = std::acos(-1.0);
  for (Index j = 0; j < N; ++j) {
    const Complex z = radius * std::polar(1.0, 2.0 * pi * static_cast<double>(j) / static_cast<double>(N));
    samples[static_cast<std::size_t>(j)] = (A - z * E).determinant();
  }
  CVector coef(N);
  for (Index k = 0; k < N; ++k) {
    Complex acc = 0.0;
    for (Index j = 0; j < N; ++j) {
      acc += samples[static_cast<std::size_t>(j)] *
             std::polar(1.0, -2.0 * pi * static_cast<double>(j * k) / static_cast<double>(N));
    }
    coef(k) = acc / static_cast<double>(N) / std::pow(radius, static_cast<double>(k));
  }
  CMatrix companion = CMatrix::Zero(d, d);
  for (Index i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
  for (Index i = 0; i < d; ++i) companion(i, d - 1) = -coef(i) / coef(d);
  Eigen::ComplexEigenSolver<CMatrix> es(companion);
  std::vector<Complex> roots(es.eigenvalues().data(), es.eigenvalues().data() + d);
  // Newton polish on det(A - sE) using d/ds log det = -tr((A - sE)^{-1} E).
  for (Complex& r : roots) {
    for (int it = 0; it < 3; ++it) {
      const CMatrix K = A - r * E;
      const auto lu = K.fullPivLu();
      if (!lu.isInvertible()) break;
      const Complex g = -lu.solve(E).trace();
      if (std::abs(g) == 0.0) break;
      r -= 1.0 / g;
    }
  }
  return roots;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("shifted factorization of a diagonal pencil") {
  const SparseMatrix A = sparse_diag({-1.0, -2.0});
  const SparseMatrix E = sparse_identity(2);
  OpCounters counters;
  ShiftedFactorization F(A, E, 0.0, &counters);
  const CMatrix x = F.solve(CVector::Ones(2));
  CHECK(std::abs(x(0) - Complex(-1.0)) < 1e-15);
  CHECK(std::abs(x(1) - Complex(-0.5)) < 1e-15);
  CHECK(counters.lu == 1);
  CHECK(counters.solves == 1);
  F.solve(CMatrix::Ones(2, 3));
  F.solve_adjoint(CMatrix::Ones(2, 2));
  CHECK(counters.lu == 1);
  CHECK(counters.solves == 6);
}

TEST_CASE("shift at an eigenvalue is singular") {
  const SparseMatrix A = sparse_diag({-1.0, -2.0});
  CHECK_THROWS_AS(ShiftedFactorization(A, sparse_identity(2), -1.0), SingularShift);
  CHECK_THROWS_AS(ShiftedFactorization(A, sparse_identity(2), -1.0, nullptr, 0), SingularShift);
}

TEST_CASE("sparse and dense solves meet the residual bound") {
  const DescriptorSystem sys = generate_random_system(50, 1, 1, 11);
  const Complex mu(1.0, 2.0);
  const CMatrix K = oracle::dense(sys.A) - mu * oracle::dense(sys.E);
  std::mt19937_64 gen(3);
  const CMatrix b = random_matrix(50, 4, gen);
  for (Index threshold : {Index(0), Index(100)}) {
    ShiftedFactorization F(sys.A, sys.E, mu, nullptr, threshold);
    CHECK(F.is_dense() == (threshold >= 50));
    const CMatrix x = F.solve(b);
    const CMatrix y = F.solve_adjoint(b);
    for (Index j = 0; j < b.cols(); ++j) {
      CHECK((K * x.col(j) - b.col(j)).norm() / b.col(j).norm() < 1e-10);
      CHECK((K.adjoint() * y.col(j) - b.col(j)).norm() / b.col(j).norm() < 1e-10);
    }
  }
}

TEST_CASE("adjoint consistency <K x, y> = <x, K^* y>") {
  const DescriptorSystem sys = generate_random_system(120, 1, 1, 5);
  const Complex mu(0.3, -0.7);
  ShiftedFactorization F(sys.A, sys.E, mu);
  std::mt19937_64 gen(9);
  const CVector b1 = random_matrix(120, 1, gen), b2 = random_matrix(120, 1, gen);
  // x = K^{-1} b1, y = K^{-*} b2: <b1, y> = <x, b2>.
  const CVector x = F.solve(b1), y = F.solve_adjoint(b2);
  const Complex lhs = b1.dot(y), rhs = x.dot(b2);
  CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
}

TEST_CASE("small eigensolver: diagonal pencil") {
  const CMatrix A = Eigen::Vector2cd(-1.0, -2.0).asDiagonal();
  const auto dec = small_generalized_eig(A, CMatrix(CMatrix::Identity(2, 2)));
  REQUIRE(dec.finite_indices().size() == 2);
  for (Index k : dec.finite_indices()) {
    const Complex lambda = dec.eigenvalues[static_cast<std::size_t>(k)].value();
    const Index e = std::abs(lambda + 1.0) < 1e-14 ? 0 : 1;
    CHECK(std::abs(lambda - A(e, e)) < 1e-14);
    // v, w are multiples of e_j with w^* v = 1.
    const CVector v = dec.right_vectors.col(k), w = dec.left_vectors.col(k);
    CHECK(std::abs(v(1 - e)) < 1e-14);
    CHECK(std::abs(w(1 - e)) < 1e-14);
    CHECK(std::abs(w.dot(v) - 1.0) < 1e-14);
  }
}

TEST_CASE("small eigensolver: one infinite eigenvalue") {
  const CMatrix A = Eigen::Vector2cd(-1.0, 1.0).asDiagonal();
  const CMatrix E = Eigen::Vector2cd(1.0, 0.0).asDiagonal();
  const auto dec = small_generalized_eig(A, E);
  const auto finite = dec.finite_indices();
  REQUIRE(finite.size() == 1);
  CHECK(std::abs(dec.eigenvalues[static_cast<std::size_t>(finite[0])].value() + 1.0) < 1e-14);
  CHECK(dec.eigenvalues.size() == 2);
  const RMatrix Ar = A.real(), Er = E.real();
  CHECK(small_generalized_eig(Ar, Er).finite_indices().size() == 1);
}

TEST_CASE("small eigensolver agrees with characteristic polynomial roots") {
  std::mt19937_64 gen(21);
  const CMatrix A = random_matrix(8, 8, gen);
  const CMatrix E = CMatrix::Identity(8, 8) + 0.2 * random_matrix(8, 8, gen);
  const auto dec = small_generalized_eig(A, E);
  REQUIRE(dec.finite_indices().size() == 8);
  double radius = 0.0;
  for (const auto& ev : dec.eigenvalues) radius = std::max(radius, std::abs(ev.value()));
  const auto roots = charpoly_roots(A, E, std::max(1.0, radius));
  for (Index k : dec.finite_indices()) {
    const Complex lambda = dec.eigenvalues[static_cast<std::size_t>(k)].value();
    double best = 1e300;
    for (Complex r : roots) best = std::min(best, std::abs(r - lambda));
    CHECK(best < 1e-8 * (1.0 + std::abs(lambda)));
    // Eigen-residual invariant with etol = 1e-10.
    const CVector v = dec.right_vectors.col(k), w = dec.left_vectors.col(k);
    const double scale = A.norm() + std::abs(lambda) * E.norm();
    CHECK((A * v - lambda * E * v).norm() <= 1e-10 * scale * v.norm());
    CHECK((A.adjoint() * w - std::conj(lambda) * E.adjoint() * w).norm() <= 1e-10 * scale * w.norm());
    CHECK(std::abs(w.dot(E * v) - 1.0) < 1e-10);
  }
}

TEST_CASE("real eigensolver returns exact conjugate pairs") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RMatrix A(10, 10), E = RMatrix::Identity(10, 10);
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j) A(i, j) = u(gen);
  const auto dec = small_generalized_eig(A, E);
  int pairs = 0;
  for (Index k : dec.finite_indices()) {
    const Complex lambda = dec.eigenvalues[static_cast<std::size_t>(k)].value();
    if (lambda.imag() == 0.0) continue;
    bool found = false;
    for (Index l : dec.finite_indices()) {
      if (dec.eigenvalues[static_cast<std::size_t>(l)].value() == std::conj(lambda)) found = true;
    }
    CHECK(found);
    ++pairs;
  }
  CHECK(pairs > 0);
}

TEST_CASE("extend_basis: independent, dependent and random columns") {
  OrthonormalBasis e1 = OrthonormalBasis::from_columns(CMatrix::Identity(4, 1));
  CMatrix e2 = CMatrix::Zero(4, 1);
  e2(1) = 1.0;
  const OrthonormalBasis two = extend_basis(e1, e2);
  CHECK(two.dim() == 2);
  CHECK(std::abs(std::abs(two.columns()(1, 1)) - 1.0) < 1e-15);

  const OrthonormalBasis same = extend_basis(e1, 2.0 * CMatrix::Identity(4, 1));
  CHECK(same.dim() == 1);

  std::mt19937_64 gen(8);
  const OrthonormalBasis Q5 = OrthonormalBasis::from_columns(random_matrix(100, 5, gen));
  REQUIRE(Q5.dim() == 5);
  const OrthonormalBasis Q8 = extend_basis(Q5, random_matrix(100, 3, gen));
  CHECK(Q8.dim() == 8);
  const CMatrix Q = Q8.columns();
  CHECK((Q.adjoint() * Q - CMatrix::Identity(8, 8)).norm() < 1e-12 * 8);
  CHECK(Q8.orthonormality_defect() < 1e-12 * 8);
  // The old span is kept.
  CHECK((Q * (Q.adjoint() * Q5.columns()) - Q5.columns()).norm() < 1e-12);
}

TEST_CASE("extend_basis drops nearly dependent columns") {
  std::mt19937_64 gen(12);
  const OrthonormalBasis Q = OrthonormalBasis::from_columns(random_matrix(30, 4, gen));
  const CMatrix inside = Q.columns() * random_matrix(4, 2, gen);
  const CMatrix almost = inside + 1e-13 * random_matrix(30, 2, gen);
  CHECK(extend_basis(Q, almost).dim() == 4);
  CHECK(extend_basis(Q, inside + 1e-6 * random_matrix(30, 2, gen)).dim() == 6);
}

TEST_CASE("extend_basis_pair keeps equal dimensions") {
  std::mt19937_64 gen(13);
  OrthonormalBasis V(20), W(20);
  CHECK(extend_basis_pair(V, W, random_matrix(20, 3, gen), random_matrix(20, 3, gen)) == 3);
  // Dependent on both sides: dropped from both.
  const CMatrix dv = V.columns() * random_matrix(3, 1, gen);
  const CMatrix dw = W.columns() * random_matrix(3, 1, gen);
  CHECK(extend_basis_pair(V, W, dv, dw) == 0);
  CHECK(V.dim() == W.dim());
  // Dependent on one side only: that side borrows the other side's column.
  CHECK(extend_basis_pair(V, W, random_matrix(20, 1, gen), dw) == 1);
  CHECK(V.dim() == 4);
  CHECK(W.dim() == 4);
  CHECK(V.orthonormality_defect() < 1e-12 * 4);
  CHECK(W.orthonormality_defect() < 1e-12 * 4);
}

TEST_CASE("sigma_max") {
  CHECK(sigma_max(CMatrix::Constant(1, 1, 3.0)) == doctest::Approx(3.0));
  CHECK(sigma_max(CMatrix(Eigen::Vector2cd(1.0, 2.0).asDiagonal())) == doctest::Approx(2.0));
  CHECK(sigma_max(CMatrix(0, 0)) == 0.0);
  std::mt19937_64 gen(17);
  const CMatrix M = random_matrix(4, 3, gen);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(M.adjoint() * M);
  CHECK(std::abs(sigma_max(M) - std::sqrt(es.eigenvalues().maxCoeff())) < 1e-12 * sigma_max(M));
}

TEST_CASE("counters are thread safe") {
  const DescriptorSystem sys = generate_random_system(40, 1, 1, 2);
  OpCounters counters;
  ShiftedFactorization F(sys.A, sys.E, Complex(0.1, 0.2), &counters);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int k = 0; k < 25; ++k) F.solve(CVector::Ones(40));
    });
  }
  for (auto& t : threads) t.join();
  CHECK(counters.solves == 100);
  CHECK(counters.lu == 1);
}

}  // TEST_SUITE
