#pragma once

// Serialized forms of trial reports: a CSV with one row per
// method x alpha x stratum and an aligned text table per alpha.

#include "ordinal_conformal/eval.hpp"

#include <span>
#include <string>

namespace ocp {

/// Columns: method,alpha,stratification,stratum,coverage_mean,coverage_std,
/// size_mean,size_std,count. The unstratified row uses stratification
/// "overall" and stratum "all". Standard deviations use the population
/// convention.
[[nodiscard]] std::string format_report_csv(std::span<const TrialReport> reports);

/// Human-readable tables, one block per alpha and stratification, rows =
/// stratum x method followed by the per-method Total.
[[nodiscard]] std::string format_report_table(std::span<const TrialReport> reports, std::size_t n_trials);

}  // namespace ocp
