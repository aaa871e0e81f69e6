#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dompole/kernels.hpp"

namespace dompole {

/// E x' = A x + B u,  y = C x + D u.
///
/// Construct through make_system() so that dimensions are validated and
/// is_real is derived from the stored entries.
struct DescriptorSystem {
  SparseMatrix A;
  SparseMatrix E;
  CMatrix B;
  CMatrix C;
  CMatrix D;
  bool is_real = true;

  Index n() const noexcept { return A.rows(); }
  Index m() const noexcept { return B.cols(); }
  Index p() const noexcept { return C.rows(); }
};

/// Validates shapes (A, E square n x n; B n x m; C p x n; D p x m; n >= m,
/// n >= p) and derives is_real. Throws DimensionMismatch.
DescriptorSystem make_system(SparseMatrix A, SparseMatrix E, CMatrix B,
                             CMatrix C, CMatrix D);

/// LU of (A - mu*E) for this system.
ShiftedFactorization factor_shifted(const DescriptorSystem& sys, Complex mu,
                                    OpCounters* counters = nullptr);

struct SystemMetadata {
  std::string name;
  Index n = 0, m = 0, p = 0;
  Index nnz_A = 0, nnz_E = 0;
  std::vector<std::string> source_paths;
};

SystemMetadata describe(const DescriptorSystem& sys, std::string name,
                        std::vector<std::string> source_paths = {});

/// Per-matrix Matrix Market paths. A is required; absent E defaults to the
/// identity, absent D to zero, absent B to ones(n,1) and absent C to
/// ones(1,n).
struct SystemPaths {
  std::filesystem::path A;
  std::optional<std::filesystem::path> E, B, C, D;
};

DescriptorSystem load_system(const SystemPaths& paths);

/// Writes A.mtx, E.mtx, B.mtx, C.mtx, D.mtx and system.json into `dir`.
void save_system(const DescriptorSystem& sys, const std::filesystem::path& dir,
                 const std::string& name);

void write_metadata_json(const SystemMetadata& meta,
                         const std::filesystem::path& path);

/// Controls the spectrum of generate_random_system().
///
/// The finite part of the pencil is a real block-diagonal matrix holding
/// 2x2 rotation blocks [[a, b], [-b, a]] (poles a +- bi) and 1x1 real poles;
/// `infinite` extra unit blocks paired with zero rows of E give an index-one
/// infinite eigenvalue. The block pencil is then mixed as
/// (L A0 U, L E0 U) with unit bidiagonal L, U whose off-diagonals are
/// uniform in [-coupling, coupling]; this keeps the eigenvalues exactly
/// while making A and E genuinely sparse non-normal matrices.
struct SpectrumRecipe {
  /// Explicit poles; a non-real entry also plants its conjugate.
  std::vector<Complex> poles;
  /// Lightly damped pairs with relative damping in [dominant_damping_lo,
  /// dominant_damping_hi]; these are the intended dominant poles.
  int dominant = 6;
  int infinite = 0;
  double coupling = 0.5;
  double freq_lo = 0.5;
  double freq_hi = 50.0;
  double dominant_damping_lo = 0.005;
  double dominant_damping_hi = 0.03;
  double bulk_damping_lo = 0.1;
  double bulk_damping_hi = 1.0;
  double real_pole_lo = 0.5;
  double real_pole_hi = 100.0;
  /// Fraction of the remaining slots filled with real poles.
  double real_fraction = 0.3;
  /// When true, B = ones(n, m) and C = ones(p, n); otherwise uniform [-1, 1].
  bool unit_io = false;
};

/// Parses "key=value,key=value" recipes. Keys: dominant, infinite, coupling,
/// freq_lo, freq_hi, damp_lo, damp_hi, bulk_lo, bulk_hi, real_lo, real_hi,
/// real_fraction, io (ones|random), poles ("-1+5i;-3"). Throws InvalidSpec.
SpectrumRecipe parse_recipe(const std::string& text);

/// Full generator request: dimensions, seed and spectrum recipe.
struct GeneratorSpec {
  Index n = 0, m = 1, p = 1;
  std::uint64_t seed = 0;
  SpectrumRecipe recipe;
};

/// Parses "n=200,m=2,p=2,seed=7,<recipe keys>".
GeneratorSpec parse_generator_spec(const std::string& text);

/// Real, sparse, asymptotically stable system with simple finite
/// eigenvalues placed per `recipe`. Deterministic in `seed` across
/// platforms. Throws InvalidSpec.
DescriptorSystem generate_random_system(Index n, Index m, Index p,
                                        std::uint64_t seed,
                                        const SpectrumRecipe& recipe = {});

inline DescriptorSystem generate_random_system(const GeneratorSpec& spec) {
  return generate_random_system(spec.n, spec.m, spec.p, spec.seed, spec.recipe);
}

/// The finite poles planted by generate_random_system for the same
/// arguments, in block order (conjugates included).
std::vector<Complex> planted_poles(Index n, Index m, Index p, std::uint64_t seed,
                                   const SpectrumRecipe& recipe = {});

/// Portable generator: splitmix64 seeding of xoshiro256**, with doubles
/// built from the top 53 bits. Identical streams on every platform.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Log-uniform in [lo, hi], lo > 0.
  double log_uniform(double lo, double hi);

 private:
  std::uint64_t s_[4];
};

/// Parses "re", "re+imi", "re-imi", "imi" (e.g. "-1+5i").
Complex parse_complex(const std::string& text);

}  // namespace dompole
