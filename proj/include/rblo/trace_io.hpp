#pragma once

#include <filesystem>

#include <json.hpp>

#include "rblo/bilevel.hpp"

namespace rblo::trace_io {

// Inner CSV columns: outer_idx,inner_idx,phase,s_u_k,s_l_k,ll_value,ul_value,view
// Outer CSV columns: outer_idx,ul_value,ul_dval,ll_final_value,ll_residual,
//                    hypergrad_norm,x_orthonormality,y_orthonormality_max,wall_time_ms
// Reals are written with 17 significant digits; an absent ul_dval is an empty field.

void write_inner_csv(const RunTrace& trace, const std::filesystem::path& path);
void write_outer_csv(const RunTrace& trace, const std::filesystem::path& path);
/// Fills trace.inner / trace.outer respectively; throws FormatError naming the offending column.
void read_inner_csv(const std::filesystem::path& path, RunTrace& trace);
void read_outer_csv(const std::filesystem::path& path, RunTrace& trace);

void write_json(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Checks the run-summary schema (required keys and their types). Returns an
/// empty string when valid, otherwise a description of the first problem.
std::string validate_summary(const nlohmann::json& summary);

/// "%.17g" formatting.
std::string format_real(double v);

}  // namespace rblo::trace_io
