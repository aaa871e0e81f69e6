#include "dompole/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include "dompole/errors.hpp"

namespace dompole {

CMatrix eval_transfer(const DescriptorSystem& sys, Complex s,
                      OpCounters* counters) {
  const ShiftedFactorization lu = factor_shifted(sys, s, counters);
  // C (sE - A)^{-1} B = -C (A - sE)^{-1} B
  return sys.D - sys.C * lu.solve(sys.B);
}

CMatrix eval_transfer_derivative(const DescriptorSystem& sys, Complex s, int j,
                                 OpCounters* counters) {
  if (j < 1) throw InvalidArgument("derivative order must be at least 1");
  const ShiftedFactorization lu = factor_shifted(sys, s, counters);
  CMatrix X = lu.solve(sys.B);
  double factorial = 1.0;
  for (int r = 1; r <= j; ++r) {
    X = lu.solve(sys.E * X);
    factorial *= r;
  }
  return -factorial * (sys.C * X);
}

PoleData make_pole_data(Complex lambda, const CVector& v, const CVector& w,
                        const CVector& Ev, const CMatrix& B, const CMatrix& C,
                        double e_norm1) {
  const Complex c = w.dot(Ev);
  const double tol_norm = 1e-12 * v.norm() * e_norm1 * w.norm();
  if (!(std::abs(c) > tol_norm)) {
    throw DegenerateEigenvector("|w^* E v| is negligible; the eigenvalue is infinite or defective");
  }
  PoleData pd;
  pd.lambda = lambda;
  pd.v = v / c;
  pd.w = w;
  pd.c_factor = C * pd.v;
  pd.b_factor = w.adjoint() * B;
  pd.residue_norm_product = pd.c_factor.norm() * pd.b_factor.norm();
  const double re = std::abs(lambda.real());
  pd.dominance = re == 0.0 ? std::numeric_limits<double>::infinity()
                           : pd.residue_norm_product / re;
  return pd;
}

PoleData pole_data_from_eigentriple(const DescriptorSystem& sys, Complex lambda,
                                    const CVector& v, const CVector& w) {
  if (v.size() != sys.n() || w.size() != sys.n()) {
    throw DimensionMismatch("eigentriple vectors must have length n");
  }
  return make_pole_data(lambda, v, w, sys.E * v, sys.B, sys.C, norm1(sys.E));
}

bool dominates(Complex la, double da, Complex lb, double db) {
  if (da != db) return da > db;
  const double ra = std::abs(la.real()), rb = std::abs(lb.real());
  if (ra != rb) return ra < rb;
  const double ma = std::abs(la), mb = std::abs(lb);
  if (ma != mb) return ma < mb;
  if (la.real() != lb.real()) return la.real() < lb.real();
  return la.imag() < lb.imag();
}

bool dominates(const PoleData& a, const PoleData& b) {
  return dominates(a.lambda, a.dominance, b.lambda, b.dominance);
}

std::vector<PoleData> dominance_sort(std::vector<PoleData> poles) {
  std::sort(poles.begin(), poles.end(),
            [](const PoleData& a, const PoleData& b) { return dominates(a, b); });
  return poles;
}

CMatrix ModalModel::evaluate(Complex s) const {
  CMatrix H = constant;
  for (const PoleData& pd : poles) H += pd.residue() / (s - pd.lambda);
  return H;
}

ModalModel modal_reduce(std::vector<PoleData> poles, CMatrix constant) {
  for (const PoleData& pd : poles) {
    if (pd.c_factor.size() != constant.rows() || pd.b_factor.size() != constant.cols()) {
      throw DimensionMismatch("modal model: residue factors do not match the constant term");
    }
  }
  return ModalModel{std::move(poles), std::move(constant)};
}

double modal_error_bound(const std::vector<PoleData>& tail) {
  double bound = 0.0;
  for (const PoleData& pd : tail) {
    if (pd.lambda.real() == 0.0) {
      throw UnboundedError("tail pole on the imaginary axis; the modal error is unbounded");
    }
    bound += pd.dominance;
  }
  return bound;
}

PoleData conjugate_pole(const PoleData& pole) {
  PoleData out = pole;
  out.lambda = std::conj(pole.lambda);
  out.v = pole.v.conjugate();
  out.w = pole.w.conjugate();
  out.c_factor = pole.c_factor.conjugate();
  out.b_factor = pole.b_factor.conjugate();
  return out;
}

std::vector<double> log_grid(double lo, double hi, Index count, bool prepend_zero) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw InvalidArgument("log grid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<double> out;
  if (prepend_zero) out.push_back(0.0);
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (Index k = 0; k < count; ++k) {
    out.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1)));
  }
  return out;
}

std::vector<double> lin_grid(double lo, double hi, Index count) {
  if (!(hi >= lo) || count < 1) throw InvalidArgument("linear grid needs lo <= hi and count >= 1");
  std::vector<double> out;
  if (count == 1) return {lo};
  for (Index k = 0; k < count; ++k) {
    out.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  return out;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
  if (parts.size() != 4) throw InvalidArgument("grid must be lo:hi:count:log|lin, got '" + spec + "'");
  char* end = nullptr;
  const double lo = std::strtod(parts[0].c_str(), &end);
  if (*end != '\0' || parts[0].empty()) throw InvalidArgument("bad grid lower bound");
  const double hi = std::strtod(parts[1].c_str(), &end);
  if (*end != '\0' || parts[1].empty()) throw InvalidArgument("bad grid upper bound");
  const long count = std::strtol(parts[2].c_str(), &end, 10);
  if (*end != '\0' || parts[2].empty()) throw InvalidArgument("bad grid count");
  if (parts[3] == "log") return log_grid(lo, hi, count);
  if (parts[3] == "lin") return lin_grid(lo, hi, count);
  throw InvalidArgument("grid spacing must be 'log' or 'lin'");
}

FrequencySweep frequency_sweep(const DescriptorSystem& sys,
                               const std::vector<double>& omegas,
                               OpCounters* counters) {
  FrequencySweep sweep;
  sweep.omegas = omegas;
  sweep.values.reserve(omegas.size());
  for (double w : omegas) {
    try {
      sweep.values.emplace_back(sigma_max(eval_transfer(sys, Complex(0.0, w), counters)));
    } catch (const SingularShift&) {
      sweep.values.emplace_back(std::nullopt);
    }
  }
  return sweep;
}

FrequencySweep frequency_sweep(const ModalModel& model,
                               const std::vector<double>& omegas) {
  FrequencySweep sweep;
  sweep.omegas = omegas;
  for (double w : omegas) {
    const Complex s(0.0, w);
    const bool on_pole = std::any_of(model.poles.begin(), model.poles.end(),
                                     [&](const PoleData& pd) { return pd.lambda == s; });
    if (on_pole) sweep.values.emplace_back(std::nullopt);
    else sweep.values.emplace_back(sigma_max(model.evaluate(s)));
  }
  return sweep;
}

void write_sweep_csv(const FrequencySweep& sweep, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.string().c_str(), "w"), &std::fclose);
  if (!f) throw IoError("cannot write " + path.string());
  std::fprintf(f.get(), "omega,sigma_max\n");
  for (std::size_t k = 0; k < sweep.omegas.size(); ++k) {
    std::fprintf(f.get(), "%.12g,", sweep.omegas[k]);
    if (sweep.values[k]) std::fprintf(f.get(), "%.12g", *sweep.values[k]);
    std::fputc('\n', f.get());
  }
}

std::vector<std::size_t> sweep_peaks(const FrequencySweep& sweep) {
  const auto& v = sweep.values;
  const std::size_t n = v.size();
  std::vector<std::size_t> peaks;
  auto val = [&](std::size_t k) { return v[k] ? *v[k] : -1.0; };
  for (std::size_t k = 0; k < n; ++k) {
    if (!v[k]) continue;
    const bool left_ok = k == 0 || val(k) > val(k - 1);
    const bool right_ok = k + 1 == n || val(k) >= val(k + 1);
    if (n == 1 || (left_ok && right_ok)) peaks.push_back(k);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::size_t a, std::size_t b) { return val(a) > val(b); });
  return peaks;
}

double eval_f(const DescriptorSystem& sys, Complex s) {
  return 1.0 / eval_transfer(sys, s).squaredNorm();
}

}  // namespace dompole
