#include "dompole/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "dompole/errors.hpp"

namespace dompole::io {
namespace {

using nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void dump(const ordered_json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// JSON has no infinity; non-finite values become null.
ordered_json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

ordered_json complex_json(Complex z) { return ordered_json{{"re", z.real()}, {"im", z.imag()}}; }

ordered_json complex_list(const std::vector<Complex>& zs) {
  ordered_json arr = ordered_json::array();
  for (Complex z : zs) arr.push_back(complex_json(z));
  return arr;
}

ordered_json matrix_json(const CMatrix& M) {
  ordered_json rows = ordered_json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(complex_json(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class Vec>
ordered_json vector_json(const Vec& v) {
  ordered_json arr = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(complex_json(v(i)));
  return arr;
}

const char* real_mode_name(RealMode mode) {
  switch (mode) {
    case RealMode::Auto: return "auto";
    case RealMode::On: return "on";
    case RealMode::Off: return "off";
  }
  return "auto";
}

}  // namespace

std::string format12(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void write_poles_csv(const std::vector<PoleEstimate>& poles, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "re,im,dominance,residual,converged\n";
  for (const PoleEstimate& e : poles) {
    out << format12(e.lambda.real()) << ',' << format12(e.lambda.imag()) << ','
        << format12(e.dominance) << ',' << format12(e.residual) << ','
        << (e.converged ? "true" : "false") << '\n';
  }
}

void write_poles_json(const std::vector<PoleEstimate>& poles, const std::filesystem::path& path) {
  ordered_json arr = ordered_json::array();
  for (const PoleEstimate& e : poles) {
    ordered_json history = ordered_json::array();
    for (const HistoryEntry& h : e.history) {
      history.push_back({{"iteration", h.iteration},
                         {"re", h.lambda.real()},
                         {"im", h.lambda.imag()},
                         {"residual", number(h.residual)}});
    }
    arr.push_back({{"re", e.lambda.real()},
                   {"im", e.lambda.imag()},
                   {"dominance", number(e.dominance)},
                   {"residue_norm_product", number(e.residue_norm_product)},
                   {"residual", number(e.residual)},
                   {"converged", e.converged},
                   {"history", std::move(history)}});
  }
  dump(ordered_json{{"poles", std::move(arr)}}, path);
}

void write_report_json(const RunReport& report, const SolverConfig& config,
                       const SystemMetadata& meta, const std::filesystem::path& path) {
  ordered_json iters = ordered_json::array();
  for (const IterationRecord& rec : report.per_iteration) {
    ordered_json residuals = ordered_json::array(), dominances = ordered_json::array();
    for (double r : rec.residuals) residuals.push_back(number(r));
    for (double d : rec.dominances) dominances.push_back(number(d));
    iters.push_back({{"iteration", rec.iteration},
                     {"subspace_dim", rec.subspace_dim},
                     {"poles", complex_list(rec.lambdas)},
                     {"residuals", std::move(residuals)},
                     {"dominances", std::move(dominances)},
                     {"expanded", rec.expanded},
                     {"lu", rec.lu},
                     {"solves", rec.solves}});
  }
  ordered_json grid = ordered_json::array();
  for (double w : config.init_grid) grid.push_back(w);
  ordered_json j{
      {"system",
       {{"name", meta.name},
        {"n", meta.n},
        {"m", meta.m},
        {"p", meta.p},
        {"nnz_A", meta.nnz_A},
        {"nnz_E", meta.nnz_E},
        {"source_paths", meta.source_paths}}},
      {"config",
       {{"kappa", config.kappa},
        {"q", config.q},
        {"tol", config.tol},
        {"max_iter", config.max_iter},
        {"init_points", complex_list(config.init_points)},
        {"init_count", config.init_count},
        {"seed_count", config.seed_count},
        {"init_grid", std::move(grid)},
        {"max_subspace_dim", config.max_subspace_dim},
        {"real_mode", real_mode_name(config.real_mode)},
        {"strict_q", config.strict_q},
        {"split_real", config.split_real}}},
      {"status", solve_status_name(report.status)},
      {"converged", report.converged()},
      {"iterations", report.iterations},
      {"lu_count", report.lu_count},
      {"solve_count", report.solve_count},
      {"init_lu_count", report.init_lu_count},
      {"init_solve_count", report.init_solve_count},
      {"bootstrap_lu_count", report.bootstrap_lu_count},
      {"bootstrap_solve_count", report.bootstrap_solve_count},
      {"initial_subspace_dim", report.initial_subspace_dim},
      {"final_subspace_dim", report.final_subspace_dim},
      {"real_mode", report.real_mode},
      {"init_points", complex_list(report.init_points)},
      {"seed_points", complex_list(report.seed_points)},
      {"per_iteration", std::move(iters)},
      {"warnings", report.warnings}};
  dump(j, path);
}

void write_timing_json(const RunReport& report, const std::filesystem::path& path) {
  dump(ordered_json{{"init_time", report.init_time}, {"solve_time", report.solve_time}}, path);
}

void write_pole_data_csv(const std::vector<PoleData>& poles, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "re,im,dominance,residue_norm_product\n";
  for (const PoleData& pd : poles) {
    out << format12(pd.lambda.real()) << ',' << format12(pd.lambda.imag()) << ','
        << format12(pd.dominance) << ',' << format12(pd.residue_norm_product) << '\n';
  }
}

void write_pole_data_json(const std::vector<PoleData>& poles, const std::filesystem::path& path) {
  ordered_json arr = ordered_json::array();
  for (const PoleData& pd : poles) {
    arr.push_back({{"re", pd.lambda.real()},
                   {"im", pd.lambda.imag()},
                   {"dominance", number(pd.dominance)},
                   {"residue_norm_product", number(pd.residue_norm_product)}});
  }
  dump(ordered_json{{"poles", std::move(arr)}}, path);
}

void write_modal_model_json(const ModalModel& model, std::optional<double> error_bound,
                            const std::filesystem::path& path) {
  ordered_json poles = ordered_json::array();
  for (const PoleData& pd : model.poles) {
    poles.push_back({{"re", pd.lambda.real()},
                     {"im", pd.lambda.imag()},
                     {"dominance", number(pd.dominance)},
                     {"c_factor", vector_json(pd.c_factor)},
                     {"b_factor", vector_json(pd.b_factor)}});
  }
  ordered_json j{{"r", model.r()},
                 {"poles", std::move(poles)},
                 {"constant", matrix_json(model.constant)},
                 {"error_bound", error_bound ? number(*error_bound) : ordered_json(nullptr)}};
  dump(j, path);
}

void write_verify_csv(const VerifyReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "ref_re,ref_im,ref_dominance,est_re,est_im,distance,matched\n";
  for (const PoleMatch& m : report.matches) {
    out << format12(m.reference.real()) << ',' << format12(m.reference.imag()) << ','
        << format12(m.reference_dominance) << ',';
    if (m.estimate) out << format12(m.estimate->real()) << ',' << format12(m.estimate->imag());
    else out << ',';
    out << ',' << format12(m.distance) << ',' << (m.matched ? "true" : "false") << '\n';
  }
}

}  // namespace dompole::io
