#include "dompole/framework.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <tuple>

#include "dompole/errors.hpp"

namespace dompole {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kRealModeImagTol = 1e-8;
constexpr double kDuplicateTol = 1e-8;

std::string format_complex(Complex z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6g%+.6gi", z.real(), z.imag());
  return buf;
}

double dense_norm1(const CMatrix& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().colwise().sum().maxCoeff();
}

Eigen::PartialPivLU<CMatrix> reduced_lu(const ReducedSystem& red, Complex s) {
  Eigen::PartialPivLU<CMatrix> lu(red.A_r - s * red.E_r);
  const Index d = red.dim();
  if (d > 0) {
    const auto diag = lu.matrixLU().diagonal().cwiseAbs();
    const double hi = diag.maxCoeff();
    if (!(hi > 0.0) || diag.minCoeff() <= static_cast<double>(d) * kEps * hi) {
      throw SingularShift("reduced pencil is singular at s = " + format_complex(s));
    }
  }
  return lu;
}

CMatrix split_real_columns(const CMatrix& X) {
  CMatrix out(X.rows(), 2 * X.cols());
  out.leftCols(X.cols()) = X.real().cast<Complex>();
  out.rightCols(X.cols()) = X.imag().cast<Complex>();
  return out;
}

ExpansionBlock block_with_retry(const DescriptorSystem& sys, Complex mu, int q,
                                OpCounters* counters, std::vector<std::string>& warnings) {
  try {
    return expansion_block(sys, mu, q, counters);
  } catch (const SingularShift&) {
    const Complex perturbed = mu + 1e-8 * (1.0 + std::abs(mu)) * Complex(1.0, 1.0);
    warnings.push_back("singular shift at " + format_complex(mu) + "; retried at " +
                       format_complex(perturbed));
    return expansion_block(sys, perturbed, q, counters);
  }
}

Index absorb(ProjectionPair& basis, const ExpansionBlock& block, bool split) {
  if (split) {
    return extend_basis_pair(basis.V, basis.W, split_real_columns(block.V_new),
                             split_real_columns(block.W_new));
  }
  return extend_basis_pair(basis.V, basis.W, block.V_new, block.W_new);
}

std::vector<double> default_init_grid(const DescriptorSystem& sys) {
  const double a = norm1(sys.A);
  const double e = norm1(sys.E);
  double scale = e > 0.0 ? a / e : a;
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  return log_grid(1e-3 * scale, 10.0 * scale, 300);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Greedy nearest-neighbour transfer of histories from the previous
// iteration's estimates.
void carry_history(std::vector<PoleEstimate>& current,
                   const std::vector<PoleEstimate>& previous) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < current.size(); ++i) {
    for (std::size_t j = 0; j < previous.size(); ++j) {
      pairs.emplace_back(std::abs(current[i].lambda - previous[j].lambda), i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> cur_used(current.size(), false), prev_used(previous.size(), false);
  for (const auto& [dist, i, j] : pairs) {
    if (cur_used[i] || prev_used[j]) continue;
    cur_used[i] = prev_used[j] = true;
    current[i].history = previous[j].history;
  }
}

}  // namespace

void SolverConfig::validate(Index m, Index p) const {
  if (kappa < 1) throw InvalidArgument("kappa must be at least 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (q < 1) throw InvalidArgument("q must be at least 1");
  if (strict_q && m != p && q < 2) {
    throw InvalidArgument("q must be at least 2 when m != p (strict mode)");
  }
  if (max_iter < 0) throw InvalidArgument("max_iter must be non-negative");
  if (init_count < 1) throw InvalidArgument("init_count must be at least 1");
  if (seed_count < 1) throw InvalidArgument("seed_count must be at least 1");
  if (max_subspace_dim < 1) throw InvalidArgument("max_subspace_dim must be positive");
  if (dense_limit < 0) throw InvalidArgument("dense_limit must be non-negative");
}

bool resolve_real_mode(RealMode mode, const DescriptorSystem& sys) {
  switch (mode) {
    case RealMode::Auto: return sys.is_real;
    case RealMode::Off: return false;
    case RealMode::On:
      if (!sys.is_real) throw InvalidArgument("real mode requires a system with real data");
      return true;
  }
  return false;
}

ReducedSystem ReducedSystem::project(const DescriptorSystem& sys, const ProjectionPair& basis) {
  const CMatrix& V = basis.V.columns();
  const CMatrix& W = basis.W.columns();
  if (V.cols() != W.cols()) throw DimensionMismatch("projection bases must have equal dimension");
  if (V.rows() != sys.n() || W.rows() != sys.n()) {
    throw DimensionMismatch("projection bases must have n rows");
  }
  ReducedSystem red;
  const CMatrix AV = sys.A * V;
  const CMatrix EV = sys.E * V;
  red.A_r = W.adjoint() * AV;
  red.E_r = W.adjoint() * EV;
  red.B_r = W.adjoint() * sys.B;
  red.C_r = sys.C * V;
  red.D = sys.D;
  return red;
}

bool ReducedSystem::is_real() const {
  auto real = [](const CMatrix& M) { return M.size() == 0 || M.imag().cwiseAbs().maxCoeff() == 0.0; };
  return real(A_r) && real(E_r) && real(B_r) && real(C_r) && real(D);
}

CMatrix eval_transfer(const ReducedSystem& red, Complex s) {
  const auto lu = reduced_lu(red, s);
  return red.D - red.C_r * lu.solve(red.B_r);
}

CMatrix eval_transfer_derivative(const ReducedSystem& red, Complex s, int j) {
  if (j < 1) throw InvalidArgument("derivative order must be at least 1");
  const auto lu = reduced_lu(red, s);
  CMatrix X = lu.solve(red.B_r);
  double factorial = 1.0;
  for (int r = 1; r <= j; ++r) {
    X = lu.solve(red.E_r * X);
    factorial *= r;
  }
  return -factorial * (red.C_r * X);
}

double eval_f(const ReducedSystem& red, Complex s) {
  return 1.0 / eval_transfer(red, s).squaredNorm();
}

FrequencySweep frequency_sweep(const ReducedSystem& red, const std::vector<double>& omegas) {
  FrequencySweep sweep;
  sweep.omegas = omegas;
  for (double w : omegas) {
    try {
      sweep.values.emplace_back(sigma_max(eval_transfer(red, Complex(0.0, w))));
    } catch (const SingularShift&) {
      sweep.values.emplace_back(std::nullopt);
    }
  }
  return sweep;
}

ExpansionBlock expansion_block(const DescriptorSystem& sys, Complex mu, int q,
                               OpCounters* counters) {
  if (q < 0) throw InvalidArgument("q must be non-negative");
  const ShiftedFactorization F = factor_shifted(sys, mu, counters);
  const Index m = sys.m(), p = sys.p(), k0 = std::min(m, p);
  ExpansionBlock out;
  out.shift = mu;
  CMatrix X, Z;
  if (m <= p) {
    X = F.solve(sys.B);
    out.P_R = CMatrix::Identity(m, m);
    if (p > m) {
      out.P_L = sys.D - sys.C * X;  // H(mu)
      Z = F.solve_adjoint(sys.C.adjoint() * out.P_L);
    } else {
      out.P_L = CMatrix::Identity(p, p);
      Z = F.solve_adjoint(sys.C.adjoint());
    }
  } else {
    Z = F.solve_adjoint(sys.C.adjoint());
    out.P_L = CMatrix::Identity(p, p);
    out.P_R = (sys.D - Z.adjoint() * sys.B).adjoint();  // H(mu)^*
    X = F.solve(sys.B * out.P_R);
  }
  out.V_new.resize(sys.n(), (q + 1) * k0);
  out.W_new.resize(sys.n(), (q + 1) * k0);
  out.V_new.leftCols(k0) = X;
  out.W_new.leftCols(k0) = Z;
  for (int r = 1; r <= q; ++r) {
    X = F.solve(sys.E * X);
    Z = F.solve_adjoint(sys.E.adjoint() * Z);
    out.V_new.middleCols(r * k0, k0) = X;
    out.W_new.middleCols(r * k0, k0) = Z;
  }
  return out;
}

std::vector<PoleEstimate> reduced_dominant_poles(const ReducedSystem& red, int kappa,
                                                 bool real_mode) {
  if (kappa < 0) throw InvalidArgument("kappa must be non-negative");
  const SmallEigenDecomposition dec =
      red.is_real() ? small_generalized_eig(RMatrix(red.A_r.real()), RMatrix(red.E_r.real()))
                    : small_generalized_eig(red.A_r, red.E_r);
  const double e_norm = dense_norm1(red.E_r);
  std::vector<PoleData> poles;
  for (Index k : dec.finite_indices()) {
    const Complex lambda = dec.eigenvalues[static_cast<std::size_t>(k)].value();
    if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) continue;
    if (real_mode && lambda.imag() > kRealModeImagTol * (1.0 + std::abs(lambda))) continue;
    const CVector v = dec.right_vectors.col(k);
    const CVector w = dec.left_vectors.col(k);
    try {
      poles.push_back(make_pole_data(lambda, v, w, red.E_r * v, red.B_r, red.C_r, e_norm));
    } catch (const DegenerateEigenvector&) {
    }
  }
  poles = dominance_sort(std::move(poles));
  if (poles.size() > static_cast<std::size_t>(kappa)) poles.resize(static_cast<std::size_t>(kappa));
  std::vector<PoleEstimate> out;
  out.reserve(poles.size());
  for (PoleData& pd : poles) {
    PoleEstimate e;
    e.lambda = pd.lambda;
    e.dominance = pd.dominance;
    e.residue_norm_product = pd.residue_norm_product;
    e.v_reduced = pd.v.normalized();
    e.w_reduced = std::move(pd.w);
    out.push_back(std::move(e));
  }
  return out;
}

double pole_residual(const DescriptorSystem& sys, Complex lambda, const CVector& v) {
  const CVector r = sys.A * v - lambda * (sys.E * v);
  return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

InitResult initialize(const DescriptorSystem& sys, const SolverConfig& config,
                      OpCounters* init, OpCounters* bootstrap) {
  const bool real = resolve_real_mode(config.real_mode, sys);
  const bool split = real && config.split_real;
  InitResult out;
  if (!config.init_points.empty()) {
    out.points = config.init_points;
    if (real) {
      // Equivalent for real data; keeps the interpolation on the tracked side.
      for (Complex& z : out.points) {
        if (z.imag() > 0.0) z = std::conj(z);
      }
    }
  } else {
    const std::vector<double> grid =
        config.init_grid.empty() ? default_init_grid(sys) : config.init_grid;
    const FrequencySweep sweep = frequency_sweep(sys, grid, bootstrap);
    const std::vector<std::size_t> peaks = sweep_peaks(sweep);
    if (peaks.empty()) throw InitFailure("sigma_max sweep produced no usable samples");
    ProjectionPair seed{OrthonormalBasis(sys.n()), OrthonormalBasis(sys.n())};
    const std::size_t count = std::min<std::size_t>(peaks.size(), static_cast<std::size_t>(config.seed_count));
    for (std::size_t k = 0; k < count; ++k) {
      // Poles tracked in real mode lie in the lower half plane.
      const double w = sweep.omegas[peaks[k]];
      const Complex point(0.0, real ? -w : w);
      out.seed_points.push_back(point);
      absorb(seed, block_with_retry(sys, point, config.q, bootstrap, out.warnings), split);
    }
    std::vector<PoleEstimate> seed_poles;
    try {
      seed_poles = reduced_dominant_poles(ReducedSystem::project(sys, seed), config.init_count, real);
    } catch (const SingularPencil& e) {
      throw InitFailure(std::string("seed reduced pencil is singular: ") + e.what());
    }
    if (seed_poles.empty()) throw InitFailure("seed reduced system has no finite poles");
    for (const PoleEstimate& e : seed_poles) out.points.push_back(e.lambda);
  }
  out.basis = ProjectionPair{OrthonormalBasis(sys.n()), OrthonormalBasis(sys.n())};
  for (const Complex& point : out.points) {
    absorb(out.basis, block_with_retry(sys, point, config.q, init, out.warnings), split);
  }
  if (out.basis.dim() == 0) throw InitFailure("initial subspaces are empty");
  return out;
}

const char* solve_status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::SubspaceLimit: return "subspace_limit";
    case SolveStatus::Stagnated: return "stagnated";
  }
  return "unknown";
}

SolveResult solve(const DescriptorSystem& sys, const SolverConfig& config) {
  config.validate(sys.m(), sys.p());
  const bool real = resolve_real_mode(config.real_mode, sys);
  const bool split = real && config.split_real;

  SolveResult result;
  RunReport& report = result.report;
  report.q = config.q;
  report.real_mode = real;
  if (sys.m() != sys.p() && config.q < 2) {
    report.warnings.push_back("q < 2 on a rectangular system; the quadratic rate is not guaranteed");
  }

  OpCounters init_counters, boot_counters, iter_counters;
  const auto t_init = std::chrono::steady_clock::now();
  InitResult init = initialize(sys, config, &init_counters, &boot_counters);
  report.init_time = seconds_since(t_init);
  report.init_points = init.points;
  report.seed_points = init.seed_points;
  report.warnings.insert(report.warnings.end(), init.warnings.begin(), init.warnings.end());
  report.init_lu_count = init_counters.lu;
  report.init_solve_count = init_counters.solves;
  report.bootstrap_lu_count = boot_counters.lu;
  report.bootstrap_solve_count = boot_counters.solves;
  report.initial_subspace_dim = init.basis.dim();

  ProjectionPair basis = std::move(init.basis);
  std::vector<PoleEstimate> estimates;
  const auto t_solve = std::chrono::steady_clock::now();
  report.status = SolveStatus::MaxIterations;

  for (int ell = 1; ell <= config.max_iter; ++ell) {
    // Dominant poles of the current reduced system, lifted.
    std::vector<PoleEstimate> current =
        reduced_dominant_poles(ReducedSystem::project(sys, basis), config.kappa, real);
    if (current.empty()) throw SingularPencil("reduced system has no finite poles");
    for (PoleEstimate& e : current) {
      e.v_lifted = basis.V.columns() * e.v_reduced;
      e.residual = pole_residual(sys, e.lambda, e.v_lifted);
      e.converged = e.residual < config.tol;
    }
    carry_history(current, estimates);
    for (PoleEstimate& e : current) e.history.push_back({ell, e.lambda, e.residual});
    for (std::size_t i = 0; i < current.size(); ++i) {
      for (std::size_t j = i + 1; j < current.size(); ++j) {
        const double gap = std::abs(current[i].lambda - current[j].lambda);
        if (gap < kDuplicateTol * (1.0 + std::abs(current[i].lambda))) {
          report.warnings.push_back("iteration " + std::to_string(ell) +
                                    ": duplicate estimates near " +
                                    format_complex(current[i].lambda));
        }
      }
    }

    IterationRecord rec;
    rec.iteration = ell;
    rec.subspace_dim = basis.dim();
    for (const PoleEstimate& e : current) {
      rec.lambdas.push_back(e.lambda);
      rec.residuals.push_back(e.residual);
      rec.dominances.push_back(e.dominance);
    }
    estimates = std::move(current);
    report.iterations = ell;

    // Terminate on convergence.
    const bool all_converged =
        estimates.size() == static_cast<std::size_t>(config.kappa) &&
        std::all_of(estimates.begin(), estimates.end(), [](const PoleEstimate& e) { return e.converged; });
    if (all_converged) {
      report.status = SolveStatus::Converged;
      report.per_iteration.push_back(std::move(rec));
      break;
    }
    if (ell == config.max_iter) {
      report.per_iteration.push_back(std::move(rec));
      break;
    }
    if (basis.dim() >= config.max_subspace_dim) {
      report.status = SolveStatus::SubspaceLimit;
      report.warnings.push_back("subspace dimension cap reached");
      report.per_iteration.push_back(std::move(rec));
      break;
    }

    // Expand at every estimate that has not converged.
    const long lu0 = iter_counters.lu, solves0 = iter_counters.solves;
    Index added = 0;
    for (const PoleEstimate& e : estimates) {
      if (e.converged) continue;
      added += absorb(basis, block_with_retry(sys, e.lambda, config.q, &iter_counters, report.warnings), split);
      ++rec.expanded;
    }
    rec.lu = iter_counters.lu - lu0;
    rec.solves = iter_counters.solves - solves0;
    report.per_iteration.push_back(std::move(rec));
    if (added == 0) {
      report.status = SolveStatus::Stagnated;
      report.warnings.push_back("expansion added no new directions");
      break;
    }
  }

  report.solve_time = seconds_since(t_solve);
  report.lu_count = report.init_lu_count + iter_counters.lu;
  report.solve_count = report.init_solve_count + iter_counters.solves;
  report.final_subspace_dim = basis.dim();
  for (const PoleEstimate& e : estimates) {
    if (std::isinf(e.dominance)) {
      report.warnings.push_back("pole " + format_complex(e.lambda) +
                                " lies on the imaginary axis (infinite dominance)");
    }
  }
  result.poles = std::move(estimates);
  result.basis = std::move(basis);
  return result;
}

std::vector<PoleData> oracle_all_poles(const DescriptorSystem& sys, Index dense_limit) {
  if (sys.n() > dense_limit) {
    throw TooLarge("n = " + std::to_string(sys.n()) + " exceeds the dense oracle limit " +
                   std::to_string(dense_limit));
  }
  const CMatrix A = to_dense(sys.A);
  const CMatrix E = to_dense(sys.E);
  const SmallEigenDecomposition dec =
      sys.is_real ? small_generalized_eig(RMatrix(A.real()), RMatrix(E.real()))
                  : small_generalized_eig(A, E);
  const double e_norm = norm1(sys.E);
  std::vector<PoleData> poles;
  for (Index k : dec.finite_indices()) {
    const Complex lambda = dec.eigenvalues[static_cast<std::size_t>(k)].value();
    if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) continue;
    const CVector v = dec.right_vectors.col(k);
    const CVector w = dec.left_vectors.col(k);
    try {
      poles.push_back(make_pole_data(lambda, v, w, sys.E * v, sys.B, sys.C, e_norm));
    } catch (const DegenerateEigenvector&) {
    }
  }
  return dominance_sort(std::move(poles));
}

std::vector<PoleData> oracle_dominant_poles(const DescriptorSystem& sys, int kappa,
                                            bool real_mode, Index dense_limit) {
  if (kappa < 0) throw InvalidArgument("kappa must be non-negative");
  std::vector<PoleData> out;
  for (PoleData& pd : oracle_all_poles(sys, dense_limit)) {
    if (out.size() == static_cast<std::size_t>(kappa)) break;
    if (real_mode && pd.lambda.imag() > 0.0) continue;
    out.push_back(std::move(pd));
  }
  return out;
}

std::vector<RateEntry> convergence_rate_report(const std::vector<Complex>& history,
                                               Complex lambda_star) {
  std::vector<RateEntry> out;
  for (std::size_t l = 0; l + 1 < history.size(); ++l) {
    const double e0 = std::abs(history[l] - lambda_star);
    const double e1 = std::abs(history[l + 1] - lambda_star);
    double ratio;
    if (e0 > 0.0) ratio = e1 / (e0 * e0);
    else ratio = e1 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    out.push_back({e0, ratio});
  }
  return out;
}

VerifyReport match_poles(const std::vector<PoleEstimate>& computed,
                         const std::vector<PoleData>& reference, double rel_tol) {
  VerifyReport out;
  std::vector<bool> used(computed.size(), false);
  bool all = computed.size() == reference.size();
  for (const PoleData& ref : reference) {
    PoleMatch m;
    m.reference = ref.lambda;
    m.reference_dominance = ref.dominance;
    std::size_t best = computed.size();
    for (std::size_t i = 0; i < computed.size(); ++i) {
      if (used[i]) continue;
      const double d = std::abs(computed[i].lambda - ref.lambda);
      if (d < m.distance) {
        m.distance = d;
        best = i;
      }
    }
    if (best < computed.size()) {
      m.estimate = computed[best].lambda;
      m.matched = m.distance <= rel_tol * (1.0 + std::abs(ref.lambda));
      if (m.matched) used[best] = true;
    }
    all = all && m.matched;
    out.matches.push_back(m);
  }
  out.all_matched = all;
  return out;
}

}  // namespace dompole
