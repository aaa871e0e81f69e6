#include "dompole/dompole.h"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dompole/errors.hpp"
#include "dompole/framework.hpp"
#include "dompole/report_io.hpp"
#include "dompole/system.hpp"
#include "dompole/transfer.hpp"

using namespace dompole;

struct dp_system {
  DescriptorSystem sys;
  SystemMetadata meta;
};

struct dp_config {
  SolverConfig cfg;
};

struct dp_result {
  SolveResult result;
  SolverConfig cfg;
  SystemMetadata meta;
  ReducedSystem reduced;
};

struct dp_poles {
  std::vector<PoleData> poles;
};

struct dp_verification {
  VerifyReport report;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Runs `body`, mapping exceptions to error codes.
template <class F>
int guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DP_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DP_ERR_INTERNAL, e.what());
  }
}

#define DP_REQUIRE(cond, msg) \
  if (!(cond)) return fail(DP_ERR_INVALID_ARGUMENT, msg)

long parse_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (value.empty() || *end != '\0') throw InvalidArgument("'" + key + "' expects an integer, got '" + value + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0') throw InvalidArgument("'" + key + "' expects a number, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw InvalidArgument("'" + key + "' expects 0 or 1, got '" + value + "'");
}

Index resolve_dense_limit(long requested) {
  return requested > 0 ? static_cast<Index>(requested) : static_cast<Index>(dp_default_dense_limit());
}

dp_system* wrap(DescriptorSystem sys, std::string name, std::vector<std::string> paths) {
  auto* h = new dp_system{std::move(sys), {}};
  h->meta = describe(h->sys, std::move(name), std::move(paths));
  return h;
}

std::optional<std::filesystem::path> opt_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

}  // namespace

extern "C" {

const char* dp_version(void) { return "0.1.0"; }

const char* dp_error_name(int code) {
  if (code < 0 || code > DP_ERR_INTERNAL) return "Unknown";
  return error_code_name(static_cast<ErrorCode>(code));
}

const char* dp_last_error(void) { return g_last_error.c_str(); }

long dp_default_dense_limit(void) {
  if (const char* env = std::getenv("DOMPOLE_DENSE_LIMIT")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*env != '\0' && *end == '\0' && v > 0) return v;
  }
  return 2000;
}

int dp_system_load(const char* a, const char* e, const char* b, const char* c, const char* d,
                   dp_system** out) {
  DP_REQUIRE(a != nullptr && out != nullptr, "A path and output handle are required");
  *out = nullptr;
  return guarded([&]() -> int {
    SystemPaths paths{a, opt_path(e), opt_path(b), opt_path(c), opt_path(d)};
    std::vector<std::string> sources{a};
    for (const char* s : {e, b, c, d}) {
      if (s != nullptr && *s != '\0') sources.emplace_back(s);
    }
    *out = wrap(load_system(paths), std::filesystem::path(a).parent_path().filename().string(),
                std::move(sources));
    return DP_OK;
  });
}

int dp_system_load_dir(const char* dir, dp_system** out) {
  DP_REQUIRE(dir != nullptr && out != nullptr, "directory and output handle are required");
  *out = nullptr;
  return guarded([&]() -> int {
    const std::filesystem::path root(dir);
    SystemPaths paths{root / "A.mtx", {}, {}, {}, {}};
    std::vector<std::string> sources{paths.A.string()};
    auto maybe = [&](const char* file, std::optional<std::filesystem::path>& slot) {
      const auto p = root / file;
      if (std::filesystem::exists(p)) {
        slot = p;
        sources.push_back(p.string());
      }
    };
    maybe("E.mtx", paths.E);
    maybe("B.mtx", paths.B);
    maybe("C.mtx", paths.C);
    maybe("D.mtx", paths.D);
    *out = wrap(load_system(paths), root.filename().string(), std::move(sources));
    return DP_OK;
  });
}

int dp_system_generate(const char* spec, dp_system** out) {
  DP_REQUIRE(spec != nullptr && out != nullptr, "spec and output handle are required");
  *out = nullptr;
  return guarded([&]() -> int {
    *out = wrap(generate_random_system(parse_generator_spec(spec)), std::string("generated:") + spec, {});
    return DP_OK;
  });
}

int dp_system_from_dense(long n, long m, long p, const double* a, const double* e,
                         const double* b, const double* c, const double* d, dp_system** out) {
  DP_REQUIRE(out != nullptr, "output handle is required");
  *out = nullptr;
  DP_REQUIRE(n > 0 && m > 0 && p > 0, "dimensions must be positive");
  DP_REQUIRE(a != nullptr && b != nullptr && c != nullptr, "A, B and C are required");
  return guarded([&]() -> int {
    auto map = [](const double* data, long rows, long cols) {
      return Eigen::Map<const RMatrix>(data, rows, cols).cast<Complex>().eval();
    };
    const CMatrix A = map(a, n, n);
    const CMatrix E = e != nullptr ? map(e, n, n) : CMatrix::Identity(n, n);
    const CMatrix D = d != nullptr ? map(d, p, m) : CMatrix::Zero(p, m);
    SparseMatrix As = A.sparseView(), Es = E.sparseView();
    *out = wrap(make_system(std::move(As), std::move(Es), map(b, n, m), map(c, p, n), D), "dense", {});
    return DP_OK;
  });
}

int dp_system_save(const dp_system* sys, const char* dir, const char* name) {
  DP_REQUIRE(sys != nullptr && dir != nullptr, "system and directory are required");
  return guarded([&]() -> int {
    save_system(sys->sys, dir, name != nullptr ? name : sys->meta.name);
    return DP_OK;
  });
}

int dp_system_set_name(dp_system* sys, const char* name) {
  DP_REQUIRE(sys != nullptr && name != nullptr, "system and name are required");
  sys->meta.name = name;
  return DP_OK;
}

int dp_system_info(const dp_system* sys, long* n, long* m, long* p, long* nnz_a, long* nnz_e,
                   int* is_real) {
  DP_REQUIRE(sys != nullptr, "system is required");
  if (n) *n = static_cast<long>(sys->meta.n);
  if (m) *m = static_cast<long>(sys->meta.m);
  if (p) *p = static_cast<long>(sys->meta.p);
  if (nnz_a) *nnz_a = static_cast<long>(sys->meta.nnz_A);
  if (nnz_e) *nnz_e = static_cast<long>(sys->meta.nnz_E);
  if (is_real) *is_real = sys->sys.is_real ? 1 : 0;
  return DP_OK;
}

int dp_system_transfer(const dp_system* sys, double s_re, double s_im, double* out_re,
                       double* out_im) {
  DP_REQUIRE(sys != nullptr && out_re != nullptr && out_im != nullptr, "system and outputs are required");
  return guarded([&]() -> int {
    const CMatrix H = eval_transfer(sys->sys, Complex(s_re, s_im));
    for (Index j = 0; j < H.cols(); ++j) {
      for (Index i = 0; i < H.rows(); ++i) {
        out_re[i + j * H.rows()] = H(i, j).real();
        out_im[i + j * H.rows()] = H(i, j).imag();
      }
    }
    return DP_OK;
  });
}

void dp_system_free(dp_system* sys) { delete sys; }

int dp_config_create(dp_config** out) {
  DP_REQUIRE(out != nullptr, "output handle is required");
  *out = new dp_config{};
  (*out)->cfg.dense_limit = dp_default_dense_limit();
  return DP_OK;
}

int dp_config_set(dp_config* cfg, const char* key, const char* value) {
  DP_REQUIRE(cfg != nullptr && key != nullptr && value != nullptr, "config, key and value are required");
  return guarded([&]() -> int {
    const std::string k(key), v(value);
    SolverConfig& c = cfg->cfg;
    if (k == "kappa") c.kappa = static_cast<int>(parse_long(k, v));
    else if (k == "q") c.q = static_cast<int>(parse_long(k, v));
    else if (k == "tol") c.tol = parse_double(k, v);
    else if (k == "max_iter") c.max_iter = static_cast<int>(parse_long(k, v));
    else if (k == "init_count") c.init_count = static_cast<int>(parse_long(k, v));
    else if (k == "seed_count") c.seed_count = static_cast<int>(parse_long(k, v));
    else if (k == "max_subspace_dim") c.max_subspace_dim = parse_long(k, v);
    else if (k == "dense_limit") c.dense_limit = parse_long(k, v);
    else if (k == "strict_q") c.strict_q = parse_bool(k, v);
    else if (k == "split_real") c.split_real = parse_bool(k, v);
    else if (k == "init_grid") c.init_grid = parse_grid(v);
    else if (k == "real_mode") {
      if (v == "auto") c.real_mode = RealMode::Auto;
      else if (v == "on" || v == "1" || v == "true") c.real_mode = RealMode::On;
      else if (v == "off" || v == "0" || v == "false") c.real_mode = RealMode::Off;
      else throw InvalidArgument("real_mode must be auto, on or off");
    } else {
      throw InvalidArgument("unknown configuration key '" + k + "'");
    }
    return DP_OK;
  });
}

int dp_config_set_init_points(dp_config* cfg, const double* re, const double* im, size_t count) {
  DP_REQUIRE(cfg != nullptr, "config is required");
  DP_REQUIRE(count == 0 || (re != nullptr && im != nullptr), "point arrays are required");
  cfg->cfg.init_points.clear();
  for (size_t k = 0; k < count; ++k) cfg->cfg.init_points.emplace_back(re[k], im[k]);
  return DP_OK;
}

int dp_config_load_init_points(dp_config* cfg, const char* path) {
  DP_REQUIRE(cfg != nullptr && path != nullptr, "config and path are required");
  return guarded([&]() -> int {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + path);
    std::vector<Complex> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double re = 0.0, im = 0.0;
      if (!(ls >> re)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw FormatError(std::string(path) + ":" + std::to_string(lineno) + ": expected 're im'");
      }
      if (!(ls >> im)) throw FormatError(std::string(path) + ":" + std::to_string(lineno) + ": expected 're im'");
      std::string extra;
      if (ls >> extra) throw FormatError(std::string(path) + ":" + std::to_string(lineno) + ": trailing data");
      points.emplace_back(re, im);
    }
    if (points.empty()) throw FormatError(std::string(path) + ": no interpolation points");
    cfg->cfg.init_points = std::move(points);
    return DP_OK;
  });
}

void dp_config_free(dp_config* cfg) { delete cfg; }

int dp_solve(const dp_system* sys, const dp_config* cfg, dp_result** out) {
  DP_REQUIRE(sys != nullptr && out != nullptr, "system and output handle are required");
  *out = nullptr;
  return guarded([&]() -> int {
    SolverConfig config = cfg != nullptr ? cfg->cfg : SolverConfig{};
    if (cfg == nullptr) config.dense_limit = dp_default_dense_limit();
    auto* h = new dp_result{solve(sys->sys, config), config, sys->meta, {}};
    h->reduced = ReducedSystem::project(sys->sys, h->result.basis);
    *out = h;
    if (!h->result.report.converged()) {
      return fail(DP_ERR_NOT_CONVERGED, std::string("solver stopped: ") +
                                            solve_status_name(h->result.report.status));
    }
    return DP_OK;
  });
}

int dp_result_converged(const dp_result* res) {
  return res != nullptr && res->result.report.converged() ? 1 : 0;
}

const char* dp_result_status(const dp_result* res) {
  return res != nullptr ? solve_status_name(res->result.report.status) : "";
}

size_t dp_result_pole_count(const dp_result* res) {
  return res != nullptr ? res->result.poles.size() : 0;
}

int dp_result_pole(const dp_result* res, size_t i, double* re, double* im, double* dominance,
                   double* residual, int* converged) {
  DP_REQUIRE(res != nullptr && i < res->result.poles.size(), "pole index out of range");
  const PoleEstimate& e = res->result.poles[i];
  if (re) *re = e.lambda.real();
  if (im) *im = e.lambda.imag();
  if (dominance) *dominance = e.dominance;
  if (residual) *residual = e.residual;
  if (converged) *converged = e.converged ? 1 : 0;
  return DP_OK;
}

int dp_result_counters(const dp_result* res, long* iterations, long* lu_count, long* solve_count,
                       long* subspace_dim, double* init_time) {
  DP_REQUIRE(res != nullptr, "result is required");
  const RunReport& r = res->result.report;
  if (iterations) *iterations = r.iterations;
  if (lu_count) *lu_count = r.lu_count;
  if (solve_count) *solve_count = r.solve_count;
  if (subspace_dim) *subspace_dim = static_cast<long>(r.final_subspace_dim);
  if (init_time) *init_time = r.init_time;
  return DP_OK;
}

int dp_result_bootstrap_counters(const dp_result* res, long* lu_count, long* solve_count) {
  DP_REQUIRE(res != nullptr, "result is required");
  if (lu_count) *lu_count = res->result.report.bootstrap_lu_count;
  if (solve_count) *solve_count = res->result.report.bootstrap_solve_count;
  return DP_OK;
}

size_t dp_result_warning_count(const dp_result* res) {
  return res != nullptr ? res->result.report.warnings.size() : 0;
}

const char* dp_result_warning(const dp_result* res, size_t i) {
  if (res == nullptr || i >= res->result.report.warnings.size()) return "";
  return res->result.report.warnings[i].c_str();
}

int dp_result_write(const dp_result* res, const char* dir) {
  DP_REQUIRE(res != nullptr && dir != nullptr, "result and directory are required");
  return guarded([&]() -> int {
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    io::write_poles_csv(res->result.poles, root / "poles.csv");
    io::write_poles_json(res->result.poles, root / "poles.json");
    io::write_report_json(res->result.report, res->cfg, res->meta, root / "report.json");
    io::write_timing_json(res->result.report, root / "timing.json");
    return DP_OK;
  });
}

int dp_result_sweep_reduced(const dp_result* res, const char* grid, const char* path) {
  DP_REQUIRE(res != nullptr && grid != nullptr && path != nullptr, "result, grid and path are required");
  return guarded([&]() -> int {
    const std::vector<double> omegas = parse_grid(grid);
    FrequencySweep sweep;
    if (res->result.report.real_mode) {
      std::vector<double> mirrored(omegas.size());
      std::transform(omegas.begin(), omegas.end(), mirrored.begin(), [](double w) { return -w; });
      sweep = frequency_sweep(res->reduced, mirrored);
      sweep.omegas = omegas;
    } else {
      sweep = frequency_sweep(res->reduced, omegas);
    }
    write_sweep_csv(sweep, path);
    return DP_OK;
  });
}

int dp_result_write_marks(const dp_result* res, const char* path) {
  DP_REQUIRE(res != nullptr && path != nullptr, "result and path are required");
  return guarded([&]() -> int {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(std::string("cannot write ") + path);
    out << "omega\n";
    for (const PoleEstimate& e : res->result.poles) out << io::format12(std::abs(e.lambda.imag())) << '\n';
    return DP_OK;
  });
}

void dp_result_free(dp_result* res) { delete res; }

int dp_oracle(const dp_system* sys, int kappa, int real_mode, long dense_limit, dp_poles** out) {
  DP_REQUIRE(sys != nullptr && out != nullptr, "system and output handle are required");
  *out = nullptr;
  return guarded([&]() -> int {
    const RealMode mode = real_mode < 0 ? RealMode::Auto : (real_mode > 0 ? RealMode::On : RealMode::Off);
    const bool real = resolve_real_mode(mode, sys->sys);
    *out = new dp_poles{oracle_dominant_poles(sys->sys, kappa, real, resolve_dense_limit(dense_limit))};
    return DP_OK;
  });
}

size_t dp_poles_count(const dp_poles* poles) { return poles != nullptr ? poles->poles.size() : 0; }

int dp_poles_get(const dp_poles* poles, size_t i, double* re, double* im, double* dominance,
                 double* residue_norm_product) {
  DP_REQUIRE(poles != nullptr && i < poles->poles.size(), "pole index out of range");
  const PoleData& pd = poles->poles[i];
  if (re) *re = pd.lambda.real();
  if (im) *im = pd.lambda.imag();
  if (dominance) *dominance = pd.dominance;
  if (residue_norm_product) *residue_norm_product = pd.residue_norm_product;
  return DP_OK;
}

int dp_poles_write(const dp_poles* poles, const char* csv_path, const char* json_path) {
  DP_REQUIRE(poles != nullptr, "pole list is required");
  return guarded([&]() -> int {
    if (csv_path != nullptr) io::write_pole_data_csv(poles->poles, csv_path);
    if (json_path != nullptr) io::write_pole_data_json(poles->poles, json_path);
    return DP_OK;
  });
}

void dp_poles_free(dp_poles* poles) { delete poles; }

int dp_verify(const dp_result* res, const dp_poles* reference, double rel_tol, dp_verification** out) {
  DP_REQUIRE(res != nullptr && reference != nullptr && out != nullptr,
             "result, reference and output handle are required");
  *out = nullptr;
  return guarded([&]() -> int {
    *out = new dp_verification{match_poles(res->result.poles, reference->poles, rel_tol > 0.0 ? rel_tol : kMatchTol)};
    return DP_OK;
  });
}

int dp_verify_all_matched(const dp_verification* v) { return v != nullptr && v->report.all_matched ? 1 : 0; }

size_t dp_verify_count(const dp_verification* v) { return v != nullptr ? v->report.matches.size() : 0; }

int dp_verify_entry(const dp_verification* v, size_t i, double* ref_re, double* ref_im, double* est_re,
                    double* est_im, double* distance, int* matched) {
  DP_REQUIRE(v != nullptr && i < v->report.matches.size(), "entry index out of range");
  const PoleMatch& m = v->report.matches[i];
  if (ref_re) *ref_re = m.reference.real();
  if (ref_im) *ref_im = m.reference.imag();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (est_re) *est_re = m.estimate ? m.estimate->real() : nan;
  if (est_im) *est_im = m.estimate ? m.estimate->imag() : nan;
  if (distance) *distance = m.distance;
  if (matched) *matched = m.matched ? 1 : 0;
  return DP_OK;
}

int dp_verify_write(const dp_verification* v, const char* path) {
  DP_REQUIRE(v != nullptr && path != nullptr, "report and path are required");
  return guarded([&]() -> int {
    io::write_verify_csv(v->report, path);
    return DP_OK;
  });
}

void dp_verify_free(dp_verification* v) { delete v; }

int dp_sweep(const dp_system* sys, const char* grid, const char* path) {
  DP_REQUIRE(sys != nullptr && grid != nullptr && path != nullptr, "system, grid and path are required");
  return guarded([&]() -> int {
    write_sweep_csv(frequency_sweep(sys->sys, parse_grid(grid)), path);
    return DP_OK;
  });
}

int dp_reduce(const dp_system* sys, const dp_result* res, int r, long dense_limit,
              const char* path, double* bound, int* bound_available) {
  DP_REQUIRE(sys != nullptr && path != nullptr, "system and path are required");
  DP_REQUIRE(r >= 0, "r must be non-negative");
  DP_REQUIRE(r == 0 || res != nullptr, "a solve result is required for r > 0");
  return guarded([&]() -> int {
    if (r > 0 && static_cast<size_t>(r) > res->result.poles.size()) {
      throw InvalidArgument("r exceeds the number of computed poles");
    }
    std::vector<PoleData> kept;
    for (int k = 0; k < r; ++k) {
      const PoleEstimate& e = res->result.poles[static_cast<size_t>(k)];
      const CVector w = res->result.basis.W.columns() * e.w_reduced;
      PoleData pd = pole_data_from_eigentriple(sys->sys, e.lambda, e.v_lifted, w);
      const bool add_conjugate = res->result.report.real_mode && pd.lambda.imag() < 0.0;
      kept.push_back(pd);
      if (add_conjugate) kept.push_back(conjugate_pole(pd));
    }
    ModalModel model = modal_reduce(kept, sys->sys.D);

    std::optional<double> value;
    const Index limit = resolve_dense_limit(dense_limit);
    if (sys->sys.n() <= limit) {
      std::vector<PoleData> all = oracle_all_poles(sys->sys, limit);
      std::vector<bool> used(kept.size(), false);
      std::vector<PoleData> tail;
      for (PoleData& pd : all) {
        bool retained = false;
        for (size_t i = 0; i < kept.size() && !retained; ++i) {
          if (!used[i] && std::abs(kept[i].lambda - pd.lambda) <= kMatchTol * (1.0 + std::abs(pd.lambda))) {
            used[i] = retained = true;
          }
        }
        if (!retained) tail.push_back(std::move(pd));
      }
      value = modal_error_bound(tail);
    }
    io::write_modal_model_json(model, value, path);
    if (bound) *bound = value.value_or(std::numeric_limits<double>::quiet_NaN());
    if (bound_available) *bound_available = value ? 1 : 0;
    return DP_OK;
  });
}

}  // extern "C"
