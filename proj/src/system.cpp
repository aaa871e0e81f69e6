#include "dompole/system.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dompole/errors.hpp"
#include "dompole/matrix_market.hpp"

namespace dompole {

namespace {

bool all_real(const SparseMatrix& M) {
  for (Index j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      if (it.value().imag() != 0.0) return false;
    }
  }
  return true;
}

bool all_real(const CMatrix& M) {
  return M.size() == 0 || M.imag().cwiseAbs().maxCoeff() == 0.0;
}

std::string shape(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

DescriptorSystem make_system(SparseMatrix A, SparseMatrix E, CMatrix B,
                             CMatrix C, CMatrix D) {
  const Index n = A.rows();
  if (A.cols() != n) throw DimensionMismatch("A must be square, got " + shape(A.rows(), A.cols()));
  if (E.rows() != n || E.cols() != n) {
    throw DimensionMismatch("E is " + shape(E.rows(), E.cols()) + " but A is " + shape(n, n));
  }
  if (B.rows() != n) throw DimensionMismatch("B has " + std::to_string(B.rows()) + " rows, expected " + std::to_string(n));
  if (C.cols() != n) throw DimensionMismatch("C has " + std::to_string(C.cols()) + " columns, expected " + std::to_string(n));
  if (D.rows() != C.rows() || D.cols() != B.cols()) {
    throw DimensionMismatch("D is " + shape(D.rows(), D.cols()) + ", expected " +
                            shape(C.rows(), B.cols()));
  }
  if (B.cols() < 1 || C.rows() < 1) throw DimensionMismatch("system needs at least one input and one output");
  if (n < B.cols() || n < C.rows()) throw DimensionMismatch("order n must be at least m and p");

  DescriptorSystem sys;
  sys.A = std::move(A);
  sys.E = std::move(E);
  sys.A.makeCompressed();
  sys.E.makeCompressed();
  sys.B = std::move(B);
  sys.C = std::move(C);
  sys.D = std::move(D);
  sys.is_real = all_real(sys.A) && all_real(sys.E) && all_real(sys.B) &&
                all_real(sys.C) && all_real(sys.D);
  return sys;
}

ShiftedFactorization factor_shifted(const DescriptorSystem& sys, Complex mu,
                                    OpCounters* counters) {
  return ShiftedFactorization(sys.A, sys.E, mu, counters);
}

SystemMetadata describe(const DescriptorSystem& sys, std::string name,
                        std::vector<std::string> source_paths) {
  SystemMetadata meta;
  meta.name = std::move(name);
  meta.n = sys.n();
  meta.m = sys.m();
  meta.p = sys.p();
  meta.nnz_A = sys.A.nonZeros();
  meta.nnz_E = sys.E.nonZeros();
  meta.source_paths = std::move(source_paths);
  return meta;
}

DescriptorSystem load_system(const SystemPaths& paths) {
  SparseMatrix A = mm::read_sparse(paths.A);
  const Index n = A.rows();
  if (A.cols() != n) throw DimensionMismatch("A must be square, got " + shape(A.rows(), A.cols()));

  SparseMatrix E;
  if (paths.E) {
    E = mm::read_sparse(*paths.E);
  } else {
    E.resize(n, n);
    E.setIdentity();
  }
  CMatrix B = paths.B ? mm::read_dense(*paths.B) : CMatrix::Ones(n, 1);
  CMatrix C = paths.C ? mm::read_dense(*paths.C) : CMatrix::Ones(1, n);
  if (B.rows() != n) throw DimensionMismatch("B has " + std::to_string(B.rows()) + " rows, expected " + std::to_string(n));
  if (C.cols() != n) throw DimensionMismatch("C has " + std::to_string(C.cols()) + " columns, expected " + std::to_string(n));
  CMatrix D = paths.D ? mm::read_dense(*paths.D) : CMatrix::Zero(C.rows(), B.cols());
  return make_system(std::move(A), std::move(E), std::move(B), std::move(C), std::move(D));
}

void write_metadata_json(const SystemMetadata& meta,
                         const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["name"] = meta.name;
  j["n"] = meta.n;
  j["m"] = meta.m;
  j["p"] = meta.p;
  j["nnz_A"] = meta.nnz_A;
  j["nnz_E"] = meta.nnz_E;
  j["source_paths"] = meta.source_paths;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void save_system(const DescriptorSystem& sys, const std::filesystem::path& dir,
                 const std::string& name) {
  std::filesystem::create_directories(dir);
  mm::write_sparse(dir / "A.mtx", sys.A);
  mm::write_sparse(dir / "E.mtx", sys.E);
  mm::write_dense(dir / "B.mtx", sys.B);
  mm::write_dense(dir / "C.mtx", sys.C);
  mm::write_dense(dir / "D.mtx", sys.D);
  write_metadata_json(describe(sys, name, {"A.mtx", "E.mtx", "B.mtx", "C.mtx", "D.mtx"}),
                      dir / "system.json");
}

// ---------------------------------------------------------------------------
// Portable RNG

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

PortableRng::PortableRng(std::uint64_t seed) {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t PortableRng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double PortableRng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double PortableRng::log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

// ---------------------------------------------------------------------------
// Recipes

Complex parse_complex(const std::string& raw) {
  std::string text;
  for (char c : raw) {
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  }
  auto number = [&](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw InvalidSpec("malformed complex number '" + raw + "'");
    return v;
  };
  if (text.empty()) throw InvalidSpec("empty complex number");
  const char last = text.back();
  if (last != 'i' && last != 'j') return {number(text), 0.0};
  text.pop_back();
  // Split at the last sign that is not an exponent sign or the leading sign.
  std::size_t split = std::string::npos;
  for (std::size_t k = text.size(); k-- > 1;) {
    if ((text[k] == '+' || text[k] == '-') && text[k - 1] != 'e' && text[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string::npos) return {0.0, number(text)};
  return {number(text.substr(0, split)), number(text.substr(split))};
}

namespace {

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0') throw InvalidSpec("recipe key '" + key + "' expects a number, got '" + value + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != std::floor(v)) throw InvalidSpec("recipe key '" + key + "' expects an integer");
  return static_cast<long long>(v);
}

std::vector<std::pair<std::string, std::string>> split_pairs(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidSpec("recipe entry '" + item + "' is not key=value");
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

bool apply_recipe_key(SpectrumRecipe& r, const std::string& key, const std::string& value) {
  if (key == "dominant") r.dominant = static_cast<int>(to_int(key, value));
  else if (key == "infinite") r.infinite = static_cast<int>(to_int(key, value));
  else if (key == "coupling") r.coupling = to_double(key, value);
  else if (key == "freq_lo") r.freq_lo = to_double(key, value);
  else if (key == "freq_hi") r.freq_hi = to_double(key, value);
  else if (key == "damp_lo") r.dominant_damping_lo = to_double(key, value);
  else if (key == "damp_hi") r.dominant_damping_hi = to_double(key, value);
  else if (key == "bulk_lo") r.bulk_damping_lo = to_double(key, value);
  else if (key == "bulk_hi") r.bulk_damping_hi = to_double(key, value);
  else if (key == "real_lo") r.real_pole_lo = to_double(key, value);
  else if (key == "real_hi") r.real_pole_hi = to_double(key, value);
  else if (key == "real_fraction") r.real_fraction = to_double(key, value);
  else if (key == "io") {
    if (value == "ones") r.unit_io = true;
    else if (value == "random") r.unit_io = false;
    else throw InvalidSpec("recipe key 'io' expects ones|random");
  } else if (key == "poles") {
    std::stringstream ss(value);
    for (std::string tok; std::getline(ss, tok, ';');) {
      if (!tok.empty()) r.poles.push_back(parse_complex(tok));
    }
  } else {
    return false;
  }
  return true;
}

void validate_recipe(const SpectrumRecipe& r) {
  if (r.dominant < 0 || r.infinite < 0) throw InvalidSpec("recipe counts must be nonnegative");
  if (!(r.freq_lo > 0.0) || !(r.freq_hi >= r.freq_lo)) throw InvalidSpec("recipe needs 0 < freq_lo <= freq_hi");
  if (!(r.dominant_damping_lo > 0.0) || !(r.dominant_damping_hi >= r.dominant_damping_lo)) {
    throw InvalidSpec("recipe needs 0 < damp_lo <= damp_hi");
  }
  if (!(r.bulk_damping_lo > 0.0) || !(r.bulk_damping_hi >= r.bulk_damping_lo)) {
    throw InvalidSpec("recipe needs 0 < bulk_lo <= bulk_hi");
  }
  if (!(r.real_pole_lo > 0.0) || !(r.real_pole_hi >= r.real_pole_lo)) {
    throw InvalidSpec("recipe needs 0 < real_lo <= real_hi");
  }
  if (r.real_fraction < 0.0 || r.real_fraction > 1.0) throw InvalidSpec("real_fraction must lie in [0, 1]");
  if (r.coupling < 0.0) throw InvalidSpec("coupling must be nonnegative");
  for (const Complex& z : r.poles) {
    if (!(z.real() < 0.0)) throw InvalidSpec("planted poles must lie in the open left half-plane");
  }
}

}  // namespace

SpectrumRecipe parse_recipe(const std::string& text) {
  SpectrumRecipe r;
  for (const auto& [key, value] : split_pairs(text)) {
    if (!apply_recipe_key(r, key, value)) throw InvalidSpec("unknown recipe key '" + key + "'");
  }
  validate_recipe(r);
  return r;
}

GeneratorSpec parse_generator_spec(const std::string& text) {
  GeneratorSpec spec;
  bool have_n = false;
  for (const auto& [key, value] : split_pairs(text)) {
    if (key == "n") {
      spec.n = static_cast<Index>(to_int(key, value));
      have_n = true;
    } else if (key == "m") {
      spec.m = static_cast<Index>(to_int(key, value));
    } else if (key == "p") {
      spec.p = static_cast<Index>(to_int(key, value));
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (!apply_recipe_key(spec.recipe, key, value)) {
      throw InvalidSpec("unknown generator key '" + key + "'");
    }
  }
  if (!have_n) {
    // Without n, size the system to hold exactly the planted poles.
    Index slots = spec.recipe.infinite;
    for (const Complex& z : spec.recipe.poles) slots += z.imag() != 0.0 ? 2 : 1;
    if (slots == 0) throw InvalidSpec("generator spec needs n or poles");
    spec.n = slots;
    spec.recipe.dominant = 0;
  }
  validate_recipe(spec.recipe);
  return spec;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

struct Block {
  Complex pole;  // for 2x2 blocks the member with positive imaginary part
  int size;      // 1 or 2; 0 marks an infinite (index-one) block
};

std::vector<Block> draw_blocks(Index n, Index m, Index p, PortableRng& rng,
                               const SpectrumRecipe& r) {
  if (m < 1 || p < 1 || n < std::max(m, p)) {
    throw InvalidSpec("generator needs n >= max(m, p) >= 1 (got n=" + std::to_string(n) +
                      ", m=" + std::to_string(m) + ", p=" + std::to_string(p) + ")");
  }
  validate_recipe(r);
  std::vector<Block> blocks;
  Index slots = n - r.infinite;
  if (slots < 0) throw InvalidSpec("recipe asks for more infinite eigenvalues than n");
  for (const Complex& z : r.poles) {
    const int size = z.imag() != 0.0 ? 2 : 1;
    if (slots < size) throw InvalidSpec("recipe plants more poles than the system order allows");
    blocks.push_back({Complex(z.real(), std::abs(z.imag())), size});
    slots -= size;
  }
  const Index dominant = std::min<Index>(r.dominant, slots / 2);
  for (Index k = 0; k < dominant; ++k) {
    const double omega = rng.log_uniform(r.freq_lo, r.freq_hi);
    const double zeta = rng.log_uniform(r.dominant_damping_lo, r.dominant_damping_hi);
    blocks.push_back({Complex(-zeta * omega, omega), 2});
    slots -= 2;
  }
  while (slots > 0) {
    const bool real_pole = slots == 1 || rng.uniform() < r.real_fraction;
    if (real_pole) {
      blocks.push_back({Complex(-rng.log_uniform(r.real_pole_lo, r.real_pole_hi), 0.0), 1});
      slots -= 1;
    } else {
      const double omega = rng.log_uniform(0.1 * r.freq_lo, 4.0 * r.freq_hi);
      const double zeta = rng.log_uniform(r.bulk_damping_lo, r.bulk_damping_hi);
      blocks.push_back({Complex(-zeta * omega, omega), 2});
      slots -= 2;
    }
  }
  for (int k = 0; k < r.infinite; ++k) blocks.push_back({Complex(0.0, 0.0), 0});

  // Fisher-Yates with the portable stream.
  for (std::size_t k = blocks.size(); k > 1; --k) {
    const auto j = static_cast<std::size_t>(rng.next() % k);
    std::swap(blocks[k - 1], blocks[j]);
  }
  return blocks;
}

}  // namespace

std::vector<Complex> planted_poles(Index n, Index m, Index p, std::uint64_t seed,
                                   const SpectrumRecipe& recipe) {
  PortableRng rng(seed);
  std::vector<Complex> out;
  for (const Block& b : draw_blocks(n, m, p, rng, recipe)) {
    if (b.size == 1) out.push_back(b.pole);
    if (b.size == 2) {
      out.push_back(b.pole);
      out.push_back(std::conj(b.pole));
    }
  }
  return out;
}

DescriptorSystem generate_random_system(Index n, Index m, Index p,
                                        std::uint64_t seed,
                                        const SpectrumRecipe& recipe) {
  PortableRng rng(seed);
  const std::vector<Block> blocks = draw_blocks(n, m, p, rng, recipe);

  using Triplet = Eigen::Triplet<Complex>;
  std::vector<Triplet> a_entries, e_entries;
  Index at = 0;
  for (const Block& b : blocks) {
    if (b.size == 0) {
      a_entries.emplace_back(at, at, 1.0);
      at += 1;
    } else if (b.size == 1) {
      a_entries.emplace_back(at, at, b.pole.real());
      e_entries.emplace_back(at, at, 1.0);
      at += 1;
    } else {
      const double re = b.pole.real();
      const double im = b.pole.imag();
      a_entries.emplace_back(at, at, re);
      a_entries.emplace_back(at, at + 1, im);
      a_entries.emplace_back(at + 1, at, -im);
      a_entries.emplace_back(at + 1, at + 1, re);
      e_entries.emplace_back(at, at, 1.0);
      e_entries.emplace_back(at + 1, at + 1, 1.0);
      at += 2;
    }
  }
  SparseMatrix A0(n, n), E0(n, n);
  A0.setFromTriplets(a_entries.begin(), a_entries.end());
  E0.setFromTriplets(e_entries.begin(), e_entries.end());

  std::vector<Triplet> l_entries, u_entries;
  for (Index k = 0; k < n; ++k) {
    l_entries.emplace_back(k, k, 1.0);
    u_entries.emplace_back(k, k, 1.0);
  }
  for (Index k = 0; k + 1 < n; ++k) {
    if (recipe.coupling > 0.0) {
      l_entries.emplace_back(k + 1, k, rng.uniform(-recipe.coupling, recipe.coupling));
      u_entries.emplace_back(k, k + 1, rng.uniform(-recipe.coupling, recipe.coupling));
    }
  }
  SparseMatrix L(n, n), U(n, n);
  L.setFromTriplets(l_entries.begin(), l_entries.end());
  U.setFromTriplets(u_entries.begin(), u_entries.end());

  SparseMatrix A = (L * A0 * U).pruned();
  SparseMatrix E = (L * E0 * U).pruned();

  CMatrix B(n, m), C(p, n);
  if (recipe.unit_io) {
    B.setOnes();
    C.setOnes();
  } else {
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i) B(i, j) = rng.uniform(-1.0, 1.0);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < p; ++i) C(i, j) = rng.uniform(-1.0, 1.0);
  }
  return make_system(std::move(A), std::move(E), std::move(B), std::move(C),
                     CMatrix::Zero(p, m));
}

}  // namespace dompole
