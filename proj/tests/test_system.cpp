#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "dompole/errors.hpp"
#include "dompole/matrix_market.hpp"
#include "dompole/system.hpp"
#include "oracle.hpp"

using namespace dompole;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dompole_test_system_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

bool bit_equal(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (a(i, j).real() != b(i, j).real() || a(i, j).imag() != b(i, j).imag()) return false;
  return true;
}

// Reference xoshiro256** seeded by splitmix64.
struct ReferenceRng {
  std::uint64_t s[4];
  explicit ReferenceRng(std::uint64_t seed) {
    for (auto& x : s) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      x = z ^ (z >> 31);
    }
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t r = rotl(s[1] * 5, 7) * 9, t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return r;
  }
};

}  // namespace

TEST_SUITE("system") {

TEST_CASE("make_system validates shapes and derives is_real") {
  SparseMatrix I(3, 3);
  I.setIdentity();
  const CMatrix B = CMatrix::Ones(3, 1), C = CMatrix::Ones(1, 3), D = CMatrix::Zero(1, 1);
  CHECK(make_system(I, I, B, C, D).is_real);
  CMatrix Bc = B;
  Bc(1, 0) = Complex(0.0, 1e-300);
  CHECK_FALSE(make_system(I, I, Bc, C, D).is_real);
  CHECK_THROWS_AS(make_system(I, I, CMatrix::Ones(4, 1), C, D), DimensionMismatch);
  CHECK_THROWS_AS(make_system(I, I, B, CMatrix::Ones(1, 2), D), DimensionMismatch);
  CHECK_THROWS_AS(make_system(I, I, B, C, CMatrix::Zero(2, 1)), DimensionMismatch);
  CHECK_THROWS_AS(make_system(I, I, CMatrix::Ones(3, 4), C, CMatrix::Zero(1, 4)), DimensionMismatch);
  SparseMatrix I2(2, 2);
  I2.setIdentity();
  CHECK_THROWS_AS(make_system(I, I2, B, C, D), DimensionMismatch);
}

TEST_CASE("Matrix Market round trip is bit exact") {
  const fs::path dir = scratch("roundtrip");
  std::mt19937_64 gen(1);
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix real(7, 5), cplx(6, 6);
  for (Index j = 0; j < real.cols(); ++j)
    for (Index i = 0; i < real.rows(); ++i) real(i, j) = g(gen) * std::pow(10.0, g(gen) * 5);
  for (Index j = 0; j < cplx.cols(); ++j)
    for (Index i = 0; i < cplx.rows(); ++i) cplx(i, j) = Complex(g(gen), g(gen) / 3.0);
  real(0, 0) = 0.1;
  real(1, 1) = 1.0 / 3.0;

  mm::write_dense(dir / "real.mtx", real);
  CHECK(bit_equal(mm::read_dense(dir / "real.mtx"), real));
  mm::write_dense(dir / "cplx.mtx", cplx);
  CHECK(bit_equal(mm::read_dense(dir / "cplx.mtx"), cplx));

  const SparseMatrix sp = CMatrix(cplx.unaryExpr([](Complex z) { return std::abs(z) > 1.0 ? z : Complex(0.0); })).sparseView();
  mm::write_sparse(dir / "sp.mtx", sp);
  CHECK(bit_equal(CMatrix(mm::read_sparse(dir / "sp.mtx")), CMatrix(sp)));
  mm::write_sparse(dir / "rsp.mtx", SparseMatrix(real.sparseView()));
  CHECK(bit_equal(CMatrix(mm::read_sparse(dir / "rsp.mtx")), real));
}

TEST_CASE("Matrix Market variants") {
  const fs::path dir = scratch("variants");
  write_text(dir / "sym.mtx",
             "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2\n2 1 -1\n3 3 4\n");
  const CMatrix S = mm::read_sparse(dir / "sym.mtx");
  CHECK(S(0, 1) == Complex(-1.0));
  CHECK(S(1, 0) == Complex(-1.0));
  CHECK(S(2, 2) == Complex(4.0));

  write_text(dir / "skew.mtx", "%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 3\n");
  const CMatrix K = mm::read_sparse(dir / "skew.mtx");
  CHECK(K(1, 0) == Complex(3.0));
  CHECK(K(0, 1) == Complex(-3.0));

  write_text(dir / "herm.mtx", "%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 1 0\n2 1 2 3\n");
  const CMatrix H = mm::read_sparse(dir / "herm.mtx");
  CHECK(H(1, 0) == Complex(2.0, 3.0));
  CHECK(H(0, 1) == Complex(2.0, -3.0));

  write_text(dir / "pat.mtx", "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 2\n");
  CHECK(CMatrix(mm::read_sparse(dir / "pat.mtx"))(0, 1) == Complex(1.0));

  write_text(dir / "int.mtx", "%%MatrixMarket matrix array integer general\n2 1\n7\n-2\n");
  const CMatrix I = mm::read_dense(dir / "int.mtx");
  CHECK(I(0, 0) == Complex(7.0));
  CHECK(I(1, 0) == Complex(-2.0));

  // Coordinate files are accepted where dense data is expected.
  CHECK(mm::read_dense(dir / "sym.mtx")(1, 0) == Complex(-1.0));
}

TEST_CASE("malformed Matrix Market files raise FormatError") {
  const fs::path dir = scratch("bad");
  write_text(dir / "nohdr.mtx", "3 3 1\n1 1 1\n");
  CHECK_THROWS_AS(mm::read_sparse(dir / "nohdr.mtx"), FormatError);
  write_text(dir / "short.mtx", "%%MatrixMarket matrix coordinate real general\n3 3 2\n1 1 1\n");
  CHECK_THROWS_AS(mm::read_sparse(dir / "short.mtx"), FormatError);
  write_text(dir / "range.mtx", "%%MatrixMarket matrix coordinate real general\n3 3 1\n4 1 1\n");
  CHECK_THROWS_AS(mm::read_sparse(dir / "range.mtx"), FormatError);
  write_text(dir / "text.mtx", "%%MatrixMarket matrix coordinate real general\n3 3 1\n1 1 abc\n");
  CHECK_THROWS_AS(mm::read_sparse(dir / "text.mtx"), FormatError);
  CHECK_THROWS_AS(mm::read_sparse(dir / "missing.mtx"), IoError);
}

TEST_CASE("load_system defaults") {
  const fs::path dir = scratch("defaults");
  CMatrix A = CMatrix::Zero(10, 10);
  for (Index i = 0; i < 10; ++i) A(i, i) = -1.0 - static_cast<double>(i);
  mm::write_sparse(dir / "A.mtx", SparseMatrix(A.sparseView()));
  const DescriptorSystem sys = load_system({dir / "A.mtx", {}, {}, {}, {}});
  CHECK(sys.n() == 10);
  CHECK(bit_equal(CMatrix(sys.E), CMatrix::Identity(10, 10)));
  CHECK(bit_equal(sys.B, CMatrix::Ones(10, 1)));
  CHECK(bit_equal(sys.C, CMatrix::Ones(1, 10)));
  CHECK(bit_equal(sys.D, CMatrix::Zero(1, 1)));
  CHECK(sys.is_real);
}

TEST_CASE("load_system rejects inconsistent files") {
  const fs::path dir = scratch("mismatch");
  SparseMatrix A(270, 270);
  A.setIdentity();
  mm::write_sparse(dir / "A.mtx", A);
  mm::write_dense(dir / "B.mtx", CMatrix::Ones(271, 3));
  CHECK_THROWS_AS(load_system({dir / "A.mtx", {}, dir / "B.mtx", {}, {}}), DimensionMismatch);
  mm::write_dense(dir / "B3.mtx", CMatrix::Ones(270, 3));
  mm::write_dense(dir / "C3.mtx", CMatrix::Ones(3, 270));
  const DescriptorSystem sys = load_system({dir / "A.mtx", {}, dir / "B3.mtx", dir / "C3.mtx", {}});
  CHECK(sys.m() == 3);
  CHECK(sys.p() == 3);
  CHECK(sys.D.rows() == 3);
  CHECK(sys.D.cols() == 3);
}

TEST_CASE("save_system and load_system round trip") {
  const fs::path dir = scratch("save");
  const DescriptorSystem sys = generate_random_system(40, 2, 3, 99);
  save_system(sys, dir, "rt");
  const DescriptorSystem back =
      load_system({dir / "A.mtx", dir / "E.mtx", dir / "B.mtx", dir / "C.mtx", dir / "D.mtx"});
  CHECK(bit_equal(CMatrix(back.A), CMatrix(sys.A)));
  CHECK(bit_equal(CMatrix(back.E), CMatrix(sys.E)));
  CHECK(bit_equal(back.B, sys.B));
  CHECK(bit_equal(back.C, sys.C));
  CHECK(bit_equal(back.D, sys.D));
  std::ifstream in(dir / "system.json");
  const auto meta = nlohmann::json::parse(in);
  CHECK(meta["name"] == "rt");
  CHECK(meta["n"] == 40);
  CHECK(meta["m"] == 2);
  CHECK(meta["p"] == 3);
  CHECK(meta["nnz_A"] == sys.A.nonZeros());
}

TEST_CASE("describe counts match the matrices") {
  const DescriptorSystem sys = generate_random_system(30, 1, 2, 4);
  const SystemMetadata meta = describe(sys, "x", {"a"});
  CHECK(meta.n == 30);
  CHECK(meta.m == 1);
  CHECK(meta.p == 2);
  CHECK(meta.nnz_A == sys.A.nonZeros());
  CHECK(meta.nnz_E == sys.E.nonZeros());
  CHECK(meta.source_paths.size() == 1);
}

TEST_CASE("two-pole recipe gives exactly the planted system") {
  const GeneratorSpec spec = parse_generator_spec("poles=-1+5i,dominant=0,coupling=0,io=ones");
  CHECK(spec.n == 2);
  const DescriptorSystem sys = generate_random_system(spec);
  CHECK(bit_equal(CMatrix(sys.E), CMatrix::Identity(2, 2)));
  CHECK(bit_equal(sys.B, CMatrix::Ones(2, 1)));
  CHECK(bit_equal(sys.C, CMatrix::Ones(1, 2)));
  Eigen::ComplexEigenSolver<CMatrix> es(CMatrix(sys.A));
  std::vector<Complex> ev(es.eigenvalues().data(), es.eigenvalues().data() + 2);
  std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) { return a.imag() < b.imag(); });
  CHECK(std::abs(ev[0] - Complex(-1.0, -5.0)) < 1e-14);
  CHECK(std::abs(ev[1] - Complex(-1.0, 5.0)) < 1e-14);
}

TEST_CASE("generated spectrum matches the recipe") {
  const DescriptorSystem sys = generate_random_system(200, 2, 2, 7);
  CHECK(sys.is_real);
  const std::vector<Complex> planted = planted_poles(200, 2, 2, 7);
  REQUIRE(planted.size() == 200);
  const auto eig = oracle::poles(sys);
  std::vector<bool> used(eig.size(), false);
  for (Complex z : planted) {
    double best = 1e300;
    std::size_t at = 0;
    for (std::size_t k = 0; k < eig.size(); ++k) {
      if (!used[k] && std::abs(eig[k].lambda - z) < best) best = std::abs(eig[k].lambda - z), at = k;
    }
    used[at] = true;
    CHECK(best <= 1e-10 * (1.0 + std::abs(z)));
    CHECK(z.real() < 0.0);
  }
}

TEST_CASE("infinite blocks make E singular and keep the finite spectrum") {
  SpectrumRecipe r;
  r.infinite = 5;
  const DescriptorSystem sys = generate_random_system(60, 1, 1, 3, r);
  CHECK(CMatrix(sys.E).fullPivLu().rank() == 55);
  CHECK(planted_poles(60, 1, 1, 3, r).size() == 55);
}

TEST_CASE("generator is deterministic") {
  const DescriptorSystem a = generate_random_system(120, 2, 1, 42);
  const DescriptorSystem b = generate_random_system(120, 2, 1, 42);
  const DescriptorSystem c = generate_random_system(120, 2, 1, 43);
  CHECK(bit_equal(CMatrix(a.A), CMatrix(b.A)));
  CHECK(bit_equal(CMatrix(a.E), CMatrix(b.E)));
  CHECK(bit_equal(a.B, b.B));
  CHECK(bit_equal(a.C, b.C));
  CHECK_FALSE(bit_equal(CMatrix(a.A), CMatrix(c.A)));
}

TEST_CASE("generator rejects impossible specs") {
  CHECK_THROWS_AS(generate_random_system(1, 2, 1, 0), InvalidSpec);
  CHECK_THROWS_AS(generate_random_system(parse_generator_spec("n=1,m=2")), InvalidSpec);
  CHECK_THROWS_AS(generate_random_system(parse_generator_spec("n=3,poles=-1+1i;-2+1i")), InvalidSpec);
  CHECK_THROWS_AS(parse_generator_spec("n=10,bogus=1"), InvalidSpec);
  CHECK_THROWS_AS(parse_recipe("freq_lo=-1"), InvalidSpec);
  CHECK_THROWS_AS(parse_generator_spec("n=10,poles=1+1i"), InvalidSpec);
}

TEST_CASE("portable RNG matches the reference stream") {
  for (std::uint64_t seed : {0ULL, 1ULL, 123456789ULL}) {
    PortableRng rng(seed);
    ReferenceRng ref(seed);
    for (int k = 0; k < 100; ++k) CHECK(rng.next() == ref.next());
  }
  PortableRng u(5);
  for (int k = 0; k < 1000; ++k) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("parse_complex") {
  CHECK(parse_complex("-1+5i") == Complex(-1.0, 5.0));
  CHECK(parse_complex("-1-5i") == Complex(-1.0, -5.0));
  CHECK(parse_complex("3") == Complex(3.0, 0.0));
  CHECK(parse_complex("2i") == Complex(0.0, 2.0));
  CHECK(parse_complex("-i") == Complex(0.0, -1.0));
  CHECK(parse_complex("1e-3-2.5e1i") == Complex(1e-3, -25.0));
  CHECK_THROWS_AS(parse_complex("abc"), InvalidSpec);
}

}  // TEST_SUITE
