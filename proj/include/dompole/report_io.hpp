#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dompole/framework.hpp"

namespace dompole::io {

/// "re,im,dominance,residual,converged", 12 significant digits.
void write_poles_csv(const std::vector<PoleEstimate>& poles, const std::filesystem::path& path);
void write_poles_json(const std::vector<PoleEstimate>& poles, const std::filesystem::path& path);

/// Counters, per-iteration tables, warnings and the echoed configuration.
/// Wall-clock timings are excluded so the file is reproducible; see
/// write_timing_json.
void write_report_json(const RunReport& report, const SolverConfig& config,
                       const SystemMetadata& meta, const std::filesystem::path& path);
void write_timing_json(const RunReport& report, const std::filesystem::path& path);

/// "re,im,dominance,residue_norm_product".
void write_pole_data_csv(const std::vector<PoleData>& poles, const std::filesystem::path& path);
void write_pole_data_json(const std::vector<PoleData>& poles, const std::filesystem::path& path);

/// Poles with residue factors C v and w^* B, the constant term, and the
/// error bound (null when unavailable).
void write_modal_model_json(const ModalModel& model, std::optional<double> error_bound,
                            const std::filesystem::path& path);

void write_verify_csv(const VerifyReport& report, const std::filesystem::path& path);

/// "%.12g".
std::string format12(double value);

}  // namespace dompole::io
