// dompole command-line front end.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dompole/dompole.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitMismatch = 3;

struct HardError {
  std::string message;
};

void check(int rc, const char* what) {
  if (rc != DP_OK) throw HardError{std::string(what) + ": " + dp_error_name(rc) + ": " + dp_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using SystemPtr = std::unique_ptr<dp_system, Deleter<dp_system, dp_system_free>>;
using ConfigPtr = std::unique_ptr<dp_config, Deleter<dp_config, dp_config_free>>;
using ResultPtr = std::unique_ptr<dp_result, Deleter<dp_result, dp_result_free>>;
using PolesPtr = std::unique_ptr<dp_poles, Deleter<dp_poles, dp_poles_free>>;
using VerifyPtr = std::unique_ptr<dp_verification, Deleter<dp_verification, dp_verify_free>>;

struct SystemOptions {
  std::string dir;
  std::string a, e, b, c, d;
  std::string generate;
  std::optional<long> seed;
  std::string name;
};

struct SolverOptions {
  std::optional<int> kappa, q, max_iter, init_count, seed_count;
  std::optional<double> tol;
  std::optional<long> max_subspace_dim;
  std::string init_points, real_mode, init_grid;
  bool strict_q = false, split_real = false;
};

void add_system_options(CLI::App* cmd, SystemOptions& o) {
  auto* group = cmd->add_option_group("system", "exactly one system source");
  auto* sys = group->add_option("--system", o.dir, "directory with A.mtx [E.mtx B.mtx C.mtx D.mtx]");
  auto* a = group->add_option("--A", o.a, "Matrix Market file for A");
  auto* gen = group->add_option("--generate", o.generate, "generator spec, e.g. n=200,m=2,p=2,seed=7");
  group->require_option(1);
  for (auto [flag, slot] : {std::pair{"--E", &o.e}, {"--B", &o.b}, {"--C", &o.c}, {"--D", &o.d}}) {
    cmd->add_option(flag, *slot, std::string("Matrix Market file for ") + (flag + 2))->needs(a);
  }
  cmd->add_option("--seed", o.seed, "generator seed (overrides seed= in the spec)")->needs(gen);
  cmd->add_option("--name", o.name, "system name recorded in reports");
  (void)sys;
}

void add_solver_options(CLI::App* cmd, SolverOptions& o) {
  cmd->add_option("--kappa", o.kappa, "number of dominant poles (default 5)");
  cmd->add_option("--q", o.q, "derivative order per expansion point (default 1)");
  cmd->add_option("--tol", o.tol, "residual tolerance (default 1e-7)");
  cmd->add_option("--max-iter", o.max_iter, "maximum subspace iterations (default 30)");
  cmd->add_option("--init-points", o.init_points, "file of 're im' interpolation points");
  cmd->add_option("--init-count", o.init_count, "interpolation points taken from the seed model");
  cmd->add_option("--seed-count", o.seed_count, "sigma-max peaks used as seed points");
  cmd->add_option("--init-grid", o.init_grid, "bootstrap grid lo:hi:count:log|lin");
  cmd->add_option("--max-subspace-dim", o.max_subspace_dim, "subspace dimension cap");
  cmd->add_option("--real-mode", o.real_mode, "auto|on|off")->check(CLI::IsMember({"auto", "on", "off"}));
  cmd->add_flag("--strict-q", o.strict_q, "require q >= 2 on rectangular systems");
  cmd->add_flag("--split-real", o.split_real, "expand with real and imaginary parts separately");
}

SystemPtr load(const SystemOptions& o) {
  dp_system* raw = nullptr;
  if (!o.dir.empty()) {
    check(dp_system_load_dir(o.dir.c_str(), &raw), "load");
  } else if (!o.a.empty()) {
    auto opt = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
    check(dp_system_load(o.a.c_str(), opt(o.e), opt(o.b), opt(o.c), opt(o.d), &raw), "load");
  } else {
    std::string spec = o.generate;
    if (o.seed) spec += ",seed=" + std::to_string(*o.seed);
    check(dp_system_generate(spec.c_str(), &raw), "generate");
  }
  SystemPtr sys(raw);
  if (!o.name.empty()) check(dp_system_set_name(sys.get(), o.name.c_str()), "name");
  return sys;
}

ConfigPtr make_config(const SolverOptions& o) {
  dp_config* raw = nullptr;
  check(dp_config_create(&raw), "config");
  ConfigPtr cfg(raw);
  auto set = [&](const char* key, const std::string& value) {
    check(dp_config_set(cfg.get(), key, value.c_str()), key);
  };
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  if (o.kappa) set("kappa", std::to_string(*o.kappa));
  if (o.q) set("q", std::to_string(*o.q));
  if (o.tol) set("tol", num(*o.tol));
  if (o.max_iter) set("max_iter", std::to_string(*o.max_iter));
  if (o.init_count) set("init_count", std::to_string(*o.init_count));
  if (o.seed_count) set("seed_count", std::to_string(*o.seed_count));
  if (o.max_subspace_dim) set("max_subspace_dim", std::to_string(*o.max_subspace_dim));
  if (!o.real_mode.empty()) set("real_mode", o.real_mode);
  if (!o.init_grid.empty()) set("init_grid", o.init_grid);
  if (o.strict_q) set("strict_q", "1");
  if (o.split_real) set("split_real", "1");
  if (!o.init_points.empty()) check(dp_config_load_init_points(cfg.get(), o.init_points.c_str()), "init points");
  return cfg;
}

std::string format_complex(double re, double im) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.6e %c %.6ei", re, im < 0 ? '-' : '+', std::abs(im));
  return buf;
}

// Returns the raw dp_solve code (DP_OK or DP_ERR_NOT_CONVERGED).
int run_solve(const dp_system* sys, const dp_config* cfg, ResultPtr& out) {
  dp_result* raw = nullptr;
  const int rc = dp_solve(sys, cfg, &raw);
  if (rc != DP_OK && rc != DP_ERR_NOT_CONVERGED) check(rc, "solve");
  out.reset(raw);
  for (size_t i = 0; i < dp_result_warning_count(raw); ++i) {
    std::fprintf(stderr, "warning: %s\n", dp_result_warning(raw, i));
  }
  return rc;
}

void print_result(const dp_result* res) {
  std::printf("%-34s %-14s %s\n", "pole", "dominance", "residual");
  for (size_t i = 0; i < dp_result_pole_count(res); ++i) {
    double re, im, dom, resid;
    int conv;
    dp_result_pole(res, i, &re, &im, &dom, &resid, &conv);
    std::printf("%-34s %-14.6e %.3e%s\n", format_complex(re, im).c_str(), dom, resid, conv ? "" : " (not converged)");
  }
  long iters, lu, solves, sdim;
  double init_time;
  dp_result_counters(res, &iters, &lu, &solves, &sdim, &init_time);
  std::printf("#LU %ld  #lin sol %ld  sdim %ld  init time %.3fs\n", lu, solves, sdim, init_time);
  std::printf("status %s  iterations %ld\n", dp_result_status(res), iters);
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

int cmd_solve(const SystemOptions& so, const SolverOptions& vo, const std::string& out_dir) {
  auto sys = load(so);
  auto cfg = make_config(vo);
  const fs::path out = ensure_dir(out_dir);
  ResultPtr res;
  const int rc = run_solve(sys.get(), cfg.get(), res);
  check(dp_result_write(res.get(), out.c_str()), "write");
  print_result(res.get());
  if (rc == DP_ERR_NOT_CONVERGED) {
    std::fprintf(stderr, "not converged: status %s\n", dp_result_status(res.get()));
    return kExitNotConverged;
  }
  return kExitOk;
}

PolesPtr run_oracle(const dp_system* sys, int kappa, const std::string& real_mode) {
  const int mode = real_mode == "on" ? DP_REAL_ON : real_mode == "off" ? DP_REAL_OFF : DP_REAL_AUTO;
  dp_poles* raw = nullptr;
  check(dp_oracle(sys, kappa, mode, 0, &raw), "oracle");
  return PolesPtr(raw);
}

int cmd_oracle(const SystemOptions& so, const SolverOptions& vo, const std::string& out_dir) {
  auto sys = load(so);
  const fs::path out = ensure_dir(out_dir);
  auto poles = run_oracle(sys.get(), vo.kappa.value_or(5), vo.real_mode);
  check(dp_poles_write(poles.get(), (out / "oracle.csv").c_str(), (out / "oracle.json").c_str()), "write");
  std::printf("%-34s %s\n", "pole", "dominance");
  for (size_t i = 0; i < dp_poles_count(poles.get()); ++i) {
    double re, im, dom;
    dp_poles_get(poles.get(), i, &re, &im, &dom, nullptr);
    std::printf("%-34s %.6e\n", format_complex(re, im).c_str(), dom);
  }
  return kExitOk;
}

int cmd_verify(const SystemOptions& so, const SolverOptions& vo, const std::string& out_dir) {
  auto sys = load(so);
  auto cfg = make_config(vo);
  const fs::path out = ensure_dir(out_dir);
  ResultPtr res;
  run_solve(sys.get(), cfg.get(), res);
  check(dp_result_write(res.get(), out.c_str()), "write");
  auto ref = run_oracle(sys.get(), vo.kappa.value_or(5), vo.real_mode);
  dp_verification* raw = nullptr;
  check(dp_verify(res.get(), ref.get(), 0.0, &raw), "verify");
  VerifyPtr ver(raw);
  check(dp_verify_write(ver.get(), (out / "verify.csv").c_str()), "write");
  std::printf("%-34s %-34s %-11s %s\n", "reference", "computed", "distance", "match");
  for (size_t i = 0; i < dp_verify_count(ver.get()); ++i) {
    double rr, ri, er, ei, dist;
    int ok;
    dp_verify_entry(ver.get(), i, &rr, &ri, &er, &ei, &dist, &ok);
    const std::string est = std::isnan(er) ? std::string("-") : format_complex(er, ei);
    std::printf("%-34s %-34s %-11.3e %s\n", format_complex(rr, ri).c_str(), est.c_str(), dist, ok ? "yes" : "NO");
  }
  const bool all = dp_verify_all_matched(ver.get()) == 1;
  std::printf("%s\n", all ? "all poles matched" : "pole sets differ");
  return all ? kExitOk : kExitMismatch;
}

int cmd_sweep(const SystemOptions& so, const SolverOptions& vo, const std::string& out_dir,
              const std::string& grid, bool full_only) {
  auto sys = load(so);
  const fs::path out = ensure_dir(out_dir);
  check(dp_sweep(sys.get(), grid.c_str(), (out / "sweep.csv").c_str()), "sweep");
  if (full_only) return kExitOk;
  auto cfg = make_config(vo);
  ResultPtr res;
  const int rc = run_solve(sys.get(), cfg.get(), res);
  check(dp_result_sweep_reduced(res.get(), grid.c_str(), (out / "sweep_red.csv").c_str()), "sweep");
  check(dp_result_write_marks(res.get(), (out / "marks.csv").c_str()), "marks");
  return rc == DP_OK ? kExitOk : kExitNotConverged;
}

int cmd_reduce(const SystemOptions& so, const SolverOptions& vo, const std::string& out_dir, int r) {
  auto sys = load(so);
  const fs::path out = ensure_dir(out_dir);
  SolverOptions opts = vo;
  if (!opts.kappa) opts.kappa = std::max(r, 1);
  if (r > *opts.kappa) throw HardError{"--r must not exceed --kappa"};
  ResultPtr res;
  if (r > 0) {
    auto cfg = make_config(opts);
    if (run_solve(sys.get(), cfg.get(), res) != DP_OK) {
      std::fprintf(stderr, "not converged: status %s\n", dp_result_status(res.get()));
      return kExitNotConverged;
    }
    check(dp_result_write(res.get(), out.c_str()), "write");
  }
  double bound = 0.0;
  int available = 0;
  check(dp_reduce(sys.get(), res.get(), r, 0, (out / "model.json").c_str(), &bound, &available), "reduce");
  if (available) std::printf("modal model r=%d  error bound %.12g\n", r, bound);
  else std::printf("modal model r=%d  error bound unavailable (system exceeds dense limit)\n", r);
  return kExitOk;
}

int cmd_generate(const SystemOptions& so, const std::string& out_dir) {
  auto sys = load(so);
  check(dp_system_save(sys.get(), out_dir.c_str(), so.name.empty() ? nullptr : so.name.c_str()), "save");
  long n, m, p;
  dp_system_info(sys.get(), &n, &m, &p, nullptr, nullptr, nullptr);
  std::printf("wrote n=%ld m=%ld p=%ld system to %s\n", n, m, p, out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dominant poles of descriptor systems by subspace-accelerated interpolation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dp_version());

  SystemOptions so;
  SolverOptions vo;
  std::string out_dir = "out";
  std::string grid = "0.01:100:1000:log";
  int r = 0;
  bool full_only = false;

  auto* solve = app.add_subcommand("solve", "compute dominant poles");
  auto* oracle = app.add_subcommand("oracle", "dense QZ dominant poles");
  auto* verify = app.add_subcommand("verify", "solve and compare with the dense oracle");
  auto* sweep = app.add_subcommand("sweep", "sigma-max frequency response data");
  auto* reduce = app.add_subcommand("reduce", "modal reduced model and error bound");
  auto* generate = app.add_subcommand("generate", "write a system to Matrix Market files");
  for (auto* cmd : {solve, oracle, verify, sweep, reduce, generate}) {
    add_system_options(cmd, so);
    cmd->add_option("--out", out_dir, "output directory (created if absent)")->capture_default_str();
  }
  for (auto* cmd : {solve, oracle, verify, sweep, reduce}) add_solver_options(cmd, vo);
  sweep->add_option("--grid", grid, "frequency grid lo:hi:count:log|lin")->capture_default_str();
  sweep->add_flag("--full-only", full_only, "skip the solver; write sweep.csv only");
  reduce->add_option("--r", r, "number of computed poles kept")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*solve) return cmd_solve(so, vo, out_dir);
    if (*oracle) return cmd_oracle(so, vo, out_dir);
    if (*verify) return cmd_verify(so, vo, out_dir);
    if (*sweep) return cmd_sweep(so, vo, out_dir, grid, full_only);
    if (*reduce) return cmd_reduce(so, vo, out_dir, r);
    if (*generate) return cmd_generate(so, out_dir);
  } catch (const HardError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
