#pragma once

// Interpolatory Petrov-Galerkin subspace iteration for the kappa most
// dominant poles of a descriptor system, plus a dense oracle and
// convergence diagnostics.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dompole/kernels.hpp"
#include "dompole/system.hpp"
#include "dompole/transfer.hpp"

namespace dompole {

enum class RealMode { Auto, On, Off };

struct SolverConfig {
  int kappa = 5;
  int q = 1;
  double tol = 1e-7;
  int max_iter = 30;
  /// Interpolation points for V0, W0. Empty selects the sweep bootstrap.
  /// In real mode points with Im > 0 are replaced by their conjugates.
  std::vector<Complex> init_points;
  /// Number of dominant seed-model poles used as initial points.
  int init_count = 10;
  /// Number of sigma_max peaks used for the seed model.
  int seed_count = 10;
  /// Bootstrap sweep grid; empty selects a log grid scaled by ||A||_1/||E||_1.
  std::vector<double> init_grid;
  Index max_subspace_dim = 600;
  RealMode real_mode = RealMode::Auto;
  /// Enforce q >= 2 on rectangular systems instead of warning.
  bool strict_q = false;
  /// In real mode, expand with [Re X, Im X] so that bases, and hence the
  /// projected pencil, are real.
  bool split_real = false;
  Index dense_limit = 2000;

  /// Throws InvalidArgument on kappa < 1, tol <= 0, q < 1, negative counts,
  /// and (strict_q) q < 2 on rectangular systems.
  void validate(Index m, Index p) const;
};

bool resolve_real_mode(RealMode mode, const DescriptorSystem& sys);

struct ProjectionPair {
  OrthonormalBasis V;
  OrthonormalBasis W;

  Index dim() const noexcept { return V.dim(); }
};

/// W^* A V, W^* E V, W^* B, C V, D.
struct ReducedSystem {
  CMatrix A_r, E_r, B_r, C_r, D;

  Index dim() const noexcept { return A_r.rows(); }
  static ReducedSystem project(const DescriptorSystem& sys, const ProjectionPair& basis);
  /// True when every entry has zero imaginary part.
  bool is_real() const;
};

CMatrix eval_transfer(const ReducedSystem& red, Complex s);
CMatrix eval_transfer_derivative(const ReducedSystem& red, Complex s, int j);
double eval_f(const ReducedSystem& red, Complex s);
FrequencySweep frequency_sweep(const ReducedSystem& red, const std::vector<double>& omegas);

/// Columns to add at one interpolation point; one LU, (q+1)*min(m,p) solves
/// per side.
struct ExpansionBlock {
  CMatrix V_new;
  CMatrix W_new;
  /// Shift actually factored (differs from the request after a retry).
  Complex shift;
  /// P_R (m x k0) and P_L (p x k0) with k0 = min(m, p).
  CMatrix P_R, P_L;
};

ExpansionBlock expansion_block(const DescriptorSystem& sys, Complex mu, int q,
                               OpCounters* counters = nullptr);

struct HistoryEntry {
  int iteration = 0;
  Complex lambda;
  double residual = 0.0;
};

struct PoleEstimate {
  Complex lambda;
  double dominance = 0.0;
  double residue_norm_product = 0.0;
  CVector v_reduced;  // unit 2-norm
  CVector w_reduced;
  CVector v_lifted;   // V * v_reduced
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<HistoryEntry> history;
};

/// All finite poles of the reduced system, dominance-sorted; in real mode
/// only Im lambda <= 1e-8 (1 + |lambda|) is kept. Returns the top kappa.
std::vector<PoleEstimate> reduced_dominant_poles(const ReducedSystem& red, int kappa,
                                                 bool real_mode);

/// ||(A - lambda E) v||_inf.
double pole_residual(const DescriptorSystem& sys, Complex lambda, const CVector& v);

struct InitResult {
  ProjectionPair basis;
  std::vector<Complex> points;
  /// Bootstrap only: sweep peaks used for the seed model.
  std::vector<Complex> seed_points;
  std::vector<std::string> warnings;
};

/// Builds V0, W0 by Hermite interpolation at config.init_points or at the
/// dominant poles of a seed model interpolating sigma_max peaks. LU/solve
/// events of the sweep and seed phase go to `bootstrap`, those of V0, W0 to
/// `init`.
InitResult initialize(const DescriptorSystem& sys, const SolverConfig& config,
                      OpCounters* init = nullptr, OpCounters* bootstrap = nullptr);

enum class SolveStatus { Converged, MaxIterations, SubspaceLimit, Stagnated };
const char* solve_status_name(SolveStatus status);

struct IterationRecord {
  int iteration = 0;
  Index subspace_dim = 0;
  std::vector<Complex> lambdas;
  std::vector<double> residuals;
  std::vector<double> dominances;
  int expanded = 0;
  long lu = 0;
  long solves = 0;
};

struct RunReport {
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  /// Initial interpolation plus iterations; the bootstrap is separate.
  long lu_count = 0;
  long solve_count = 0;
  long init_lu_count = 0;
  long init_solve_count = 0;
  long bootstrap_lu_count = 0;
  long bootstrap_solve_count = 0;
  Index initial_subspace_dim = 0;
  Index final_subspace_dim = 0;
  int q = 1;
  bool real_mode = false;
  std::vector<Complex> init_points;
  std::vector<Complex> seed_points;
  std::vector<IterationRecord> per_iteration;
  std::vector<std::string> warnings;
  double init_time = 0.0;
  double solve_time = 0.0;

  bool converged() const noexcept { return status == SolveStatus::Converged; }
};

struct SolveResult {
  std::vector<PoleEstimate> poles;
  RunReport report;
  /// Final projection; kept for diagnostics (reduced sweeps, invariants).
  ProjectionPair basis;
};

/// Runs the subspace iteration. Non-convergence is reported through
/// report.status, not thrown.
SolveResult solve(const DescriptorSystem& sys, const SolverConfig& config);

/// Every finite pole from a dense QZ of (A, E), dominance-sorted.
std::vector<PoleData> oracle_all_poles(const DescriptorSystem& sys,
                                       Index dense_limit = 2000);

/// Top kappa of oracle_all_poles (Im <= 0 only in real mode). Throws
/// TooLarge when n > dense_limit.
std::vector<PoleData> oracle_dominant_poles(const DescriptorSystem& sys, int kappa,
                                            bool real_mode, Index dense_limit = 2000);

struct RateEntry {
  double error = 0.0;
  /// error_{l+1} / error_l^2
  double ratio = 0.0;
};

/// Errors |lambda_l - lambda_star| and successive quadratic ratios; the last
/// history entry carries no ratio and is omitted.
std::vector<RateEntry> convergence_rate_report(const std::vector<Complex>& history,
                                               Complex lambda_star);

struct PoleMatch {
  Complex reference;
  double reference_dominance = 0.0;
  std::optional<Complex> estimate;
  double distance = std::numeric_limits<double>::infinity();
  bool matched = false;
};

struct VerifyReport {
  std::vector<PoleMatch> matches;
  bool all_matched = false;
};

inline constexpr double kMatchTol = 1e-6;

/// One-to-one nearest matching of the computed poles against the reference
/// list within kMatchTol (1 + |lambda|).
VerifyReport match_poles(const std::vector<PoleEstimate>& computed,
                         const std::vector<PoleData>& reference,
                         double rel_tol = kMatchTol);

}  // namespace dompole
