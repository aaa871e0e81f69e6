#include "dompole/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dompole/errors.hpp"

namespace dompole::mm {
namespace {

enum class Layout { Coordinate, Array };
enum class Field { Real, Integer, Pattern, Complex };
enum class Symmetry { General, Symmetric, SkewSymmetric, Hermitian };

struct Parsed {
  Index rows = 0;
  Index cols = 0;
  std::vector<Eigen::Triplet<Complex>> entries;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line,
                       const std::string& msg) {
  throw FormatError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& token, const std::filesystem::path& path,
                    std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') fail(path, line, "malformed number '" + token + "'");
  return v;
}

Parsed parse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) fail(path, 1, "empty file");
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, layout_s, field_s, symmetry_s;
  header >> banner >> object >> layout_s >> field_s >> symmetry_s;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") {
    fail(path, lineno, "missing '%%MatrixMarket matrix' banner");
  }
  Layout layout;
  if (lower(layout_s) == "coordinate") layout = Layout::Coordinate;
  else if (lower(layout_s) == "array") layout = Layout::Array;
  else fail(path, lineno, "unknown layout '" + layout_s + "'");

  Field field;
  const std::string f = lower(field_s);
  if (f == "real" || f == "double") field = Field::Real;
  else if (f == "integer") field = Field::Integer;
  else if (f == "pattern") field = Field::Pattern;
  else if (f == "complex") field = Field::Complex;
  else fail(path, lineno, "unknown field '" + field_s + "'");

  Symmetry symmetry;
  const std::string sy = lower(symmetry_s);
  if (sy == "general") symmetry = Symmetry::General;
  else if (sy == "symmetric") symmetry = Symmetry::Symmetric;
  else if (sy == "skew-symmetric") symmetry = Symmetry::SkewSymmetric;
  else if (sy == "hermitian") symmetry = Symmetry::Hermitian;
  else fail(path, lineno, "unknown symmetry '" + symmetry_s + "'");

  if (layout == Layout::Array && field == Field::Pattern) {
    fail(path, lineno, "pattern field is not valid for array layout");
  }

  // Size line, skipping comments.
  bool have_size = false;
  Parsed out;
  long long nnz = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream sizes(line);
    long long r = -1, c = -1;
    sizes >> r >> c;
    if (layout == Layout::Coordinate) sizes >> nnz;
    if (sizes.fail() || r < 0 || c < 0 || nnz < 0) fail(path, lineno, "malformed size line");
    out.rows = r;
    out.cols = c;
    have_size = true;
    break;
  }
  if (!have_size) fail(path, lineno, "missing size line");
  if (symmetry != Symmetry::General && out.rows != out.cols) {
    fail(path, lineno, "symmetric storage requires a square matrix");
  }

  auto add = [&](Index i, Index j, Complex v) {
    out.entries.emplace_back(i, j, v);
    if (i == j) return;
    switch (symmetry) {
      case Symmetry::General: break;
      case Symmetry::Symmetric: out.entries.emplace_back(j, i, v); break;
      case Symmetry::SkewSymmetric: out.entries.emplace_back(j, i, -v); break;
      case Symmetry::Hermitian: out.entries.emplace_back(j, i, std::conj(v)); break;
    }
  };

  const int values_per_entry = field == Field::Complex ? 2 : (field == Field::Pattern ? 0 : 1);
  long long expected = 0;
  if (layout == Layout::Coordinate) {
    expected = nnz;
  } else if (symmetry == Symmetry::General) {
    expected = static_cast<long long>(out.rows) * out.cols;
  } else if (symmetry == Symmetry::SkewSymmetric) {
    expected = static_cast<long long>(out.rows) * (out.rows - 1) / 2;
  } else {
    expected = static_cast<long long>(out.rows) * (out.rows + 1) / 2;
  }

  long long seen = 0;
  Index arr_i = 0, arr_j = 0;
  if (layout == Layout::Array && symmetry == Symmetry::SkewSymmetric) arr_i = 1;
  std::vector<std::string> tokens;
  while (seen < expected && std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    tokens.clear();
    std::istringstream ls(line);
    for (std::string t; ls >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;

    Index i = 0, j = 0;
    std::size_t pos = 0;
    if (layout == Layout::Coordinate) {
      if (tokens.size() != static_cast<std::size_t>(2 + values_per_entry)) {
        fail(path, lineno, "wrong number of fields in entry");
      }
      const long long ii = static_cast<long long>(parse_number(tokens[0], path, lineno));
      const long long jj = static_cast<long long>(parse_number(tokens[1], path, lineno));
      if (ii < 1 || ii > out.rows || jj < 1 || jj > out.cols) fail(path, lineno, "index out of range");
      i = static_cast<Index>(ii - 1);
      j = static_cast<Index>(jj - 1);
      pos = 2;
    } else {
      if (tokens.size() != static_cast<std::size_t>(values_per_entry)) {
        fail(path, lineno, "wrong number of fields in entry");
      }
      i = arr_i;
      j = arr_j;
    }
    Complex v(1.0, 0.0);
    if (field == Field::Real || field == Field::Integer) {
      v = Complex(parse_number(tokens[pos], path, lineno), 0.0);
    } else if (field == Field::Complex) {
      v = Complex(parse_number(tokens[pos], path, lineno),
                  parse_number(tokens[pos + 1], path, lineno));
    }
    add(i, j, v);
    ++seen;

    if (layout == Layout::Array) {
      ++arr_i;
      if (arr_i >= out.rows) {
        ++arr_j;
        arr_i = symmetry == Symmetry::General ? 0
                : symmetry == Symmetry::SkewSymmetric ? arr_j + 1
                                                      : arr_j;
      }
    }
  }
  if (seen < expected) {
    fail(path, lineno, "expected " + std::to_string(expected) + " entries, found " +
                           std::to_string(seen));
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '%') continue;
    fail(path, lineno, "trailing data after the declared entries");
  }
  return out;
}

void write_value(std::FILE* f, Complex v, bool complex_field) {
  if (complex_field) std::fprintf(f, "%.17g %.17g", v.real(), v.imag());
  else std::fprintf(f, "%.17g", v.real());
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

SparseMatrix read_sparse(const std::filesystem::path& path) {
  Parsed p = parse(path);
  SparseMatrix M(p.rows, p.cols);
  M.setFromTriplets(p.entries.begin(), p.entries.end());
  M.makeCompressed();
  return M;
}

CMatrix read_dense(const std::filesystem::path& path) {
  Parsed p = parse(path);
  CMatrix M = CMatrix::Zero(p.rows, p.cols);
  for (const auto& t : p.entries) M(t.row(), t.col()) += t.value();
  return M;
}

void write_sparse(const std::filesystem::path& path, const SparseMatrix& M) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.string().c_str(), "w"));
  if (!f) throw IoError("cannot write " + path.string());
  bool complex_field = false;
  long long nnz = 0;
  for (Index j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      complex_field = complex_field || it.value().imag() != 0.0;
      ++nnz;
    }
  }
  std::fprintf(f.get(), "%%%%MatrixMarket matrix coordinate %s general\n",
               complex_field ? "complex" : "real");
  std::fprintf(f.get(), "%lld %lld %lld\n", static_cast<long long>(M.rows()),
               static_cast<long long>(M.cols()), nnz);
  for (Index j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      std::fprintf(f.get(), "%lld %lld ", static_cast<long long>(it.row() + 1),
                   static_cast<long long>(it.col() + 1));
      write_value(f.get(), it.value(), complex_field);
      std::fputc('\n', f.get());
    }
  }
}

void write_dense(const std::filesystem::path& path, const CMatrix& M) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.string().c_str(), "w"));
  if (!f) throw IoError("cannot write " + path.string());
  const bool complex_field = M.size() > 0 && M.imag().cwiseAbs().maxCoeff() != 0.0;
  std::fprintf(f.get(), "%%%%MatrixMarket matrix array %s general\n",
               complex_field ? "complex" : "real");
  std::fprintf(f.get(), "%lld %lld\n", static_cast<long long>(M.rows()),
               static_cast<long long>(M.cols()));
  for (Index j = 0; j < M.cols(); ++j) {
    for (Index i = 0; i < M.rows(); ++i) {
      write_value(f.get(), M(i, j), complex_field);
      std::fputc('\n', f.get());
    }
  }
}

}  // namespace dompole::mm
