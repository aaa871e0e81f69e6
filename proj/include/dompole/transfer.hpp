#pragma once

// Quantities defined directly on the transfer function
// H(s) = C (sE - A)^{-1} B + D: evaluation and derivatives, pole residues and
// dominance, modal truncation with its error bound, sigma_max sweeps and
// the diagnostic f(s) = 1 / ||H(s)||_F^2.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dompole/kernels.hpp"
#include "dompole/system.hpp"

namespace dompole {

/// H(s) via one factorization of (A - sE) and m solves.
CMatrix eval_transfer(const DescriptorSystem& sys, Complex s,
                      OpCounters* counters = nullptr);

/// j-th derivative, H^{(j)}(s) = -j! C [(A - sE)^{-1} E]^j (A - sE)^{-1} B.
CMatrix eval_transfer_derivative(const DescriptorSystem& sys, Complex s, int j,
                                 OpCounters* counters = nullptr);

/// A simple pole with its eigentriple normalized so that w^* E v = 1.
struct PoleData {
  Complex lambda;
  CVector v;
  CVector w;
  /// C v (length p) and w^* B (length m); the residue is c_factor * b_factor.
  CVector c_factor;
  Eigen::RowVectorXcd b_factor;
  double residue_norm_product = 0.0;
  /// residue_norm_product / |Re lambda|; +inf when Re lambda == 0.
  double dominance = 0.0;

  CMatrix residue() const { return c_factor * b_factor; }
};

/// Builds PoleData from raw matrices: `Ev` is E*v for the pencil the triple
/// belongs to, `e_norm1` is ||E||_1. Throws DegenerateEigenvector when
/// |w^* E v| <= 1e-12 ||v|| ||E||_1 ||w||.
PoleData make_pole_data(Complex lambda, const CVector& v, const CVector& w,
                        const CVector& Ev, const CMatrix& B, const CMatrix& C,
                        double e_norm1);

PoleData pole_data_from_eigentriple(const DescriptorSystem& sys, Complex lambda,
                                    const CVector& v, const CVector& w);

/// Strict weak (total) order: larger dominance first, then smaller |Re|,
/// smaller |lambda|, then lexicographic (Re, Im).
bool dominates(const PoleData& a, const PoleData& b);
bool dominates(Complex la, double da, Complex lb, double db);

std::vector<PoleData> dominance_sort(std::vector<PoleData> poles);

/// Truncated partial-fraction model sum_j R_j / (s - lambda_j) + constant.
struct ModalModel {
  std::vector<PoleData> poles;
  CMatrix constant;

  Index r() const noexcept { return static_cast<Index>(poles.size()); }
  CMatrix evaluate(Complex s) const;
};

ModalModel modal_reduce(std::vector<PoleData> poles, CMatrix constant);

/// Sum of the tail's dominance metrics; bounds ||H - H_red||_Hinf for
/// asymptotically stable systems. Throws UnboundedError if a tail pole has
/// Re lambda == 0.
double modal_error_bound(const std::vector<PoleData>& tail);

/// For real systems: the conjugate partner (conj lambda, conj v, conj w).
PoleData conjugate_pole(const PoleData& pole);

struct FrequencySweep {
  std::vector<double> omegas;
  /// Missing where i*omega is numerically a pole.
  std::vector<std::optional<double>> values;
};

/// Grid "lo:hi:count:log|lin". A log grid has `count` points in [lo, hi]
/// with omega = 0 prepended.
std::vector<double> parse_grid(const std::string& spec);
std::vector<double> log_grid(double lo, double hi, Index count, bool prepend_zero = true);
std::vector<double> lin_grid(double lo, double hi, Index count);

FrequencySweep frequency_sweep(const DescriptorSystem& sys,
                               const std::vector<double>& omegas,
                               OpCounters* counters = nullptr);
FrequencySweep frequency_sweep(const ModalModel& model,
                               const std::vector<double>& omegas);

/// "omega,sigma_max" header; 12 significant digits; empty field if missing.
void write_sweep_csv(const FrequencySweep& sweep, const std::filesystem::path& path);

/// Indices of local maxima of the sweep (endpoints count when they exceed
/// their single neighbour), largest value first.
std::vector<std::size_t> sweep_peaks(const FrequencySweep& sweep);

/// f(s) = 1 / ||H(s)||_F^2 (D included).
double eval_f(const DescriptorSystem& sys, Complex s);

}  // namespace dompole
