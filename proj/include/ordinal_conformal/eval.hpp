#pragma once

// Evaluation harness: coverage and set-size statistics, stratified breakdowns,
// repeated random calibration/evaluation trials, per-patient uncertainty
// ranking and Fisher's exact test for 2x2 tables.

#include "ordinal_conformal/calibrate.hpp"
#include "ordinal_conformal/core.hpp"
#include "ordinal_conformal/data.hpp"
#include "ordinal_conformal/methods.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ocp {

/// Fraction of i with labels[i] in sets[i].
[[nodiscard]] double empirical_coverage(std::span<const PredictionSet> sets, std::span<const Label> labels);
[[nodiscard]] double mean_set_size(std::span<const PredictionSet> sets);

struct Stratification {
    enum class Kind { TrueClass, SetSize, Group };
    Kind kind = Kind::TrueClass;
    std::string tag;  // group column for Kind::Group

    [[nodiscard]] static Stratification true_class() { return {Kind::TrueClass, {}}; }
    [[nodiscard]] static Stratification set_size() { return {Kind::SetSize, {}}; }
    [[nodiscard]] static Stratification group(std::string tag) { return {Kind::Group, std::move(tag)}; }

    /// "true_class", "set_size" or the group tag.
    [[nodiscard]] std::string name() const;
};

struct StratumStats {
    double coverage = 0.0;
    double mean_size = 0.0;
    std::size_t count = 0;
};

struct Stratum {
    std::string key;
    StratumStats stats;
};

/// Partitions records by the stratum key and summarizes each non-empty cell.
/// Numeric keys (class, size) are ordered numerically, group keys
/// lexicographically. Throws DataError if a record lacks the group tag.
[[nodiscard]] std::vector<Stratum> stratified_report(std::span<const PredictionSet> sets,
                                                     std::span<const GradingRecord> records,
                                                     const Stratification& strata);

/// Mean and population standard deviation (divide by n).
struct Summary {
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
};

[[nodiscard]] Summary summarize(std::span<const double> values);

/// One stratum aggregated across trials; only trials where the cell was
/// non-empty contribute to the summaries. `count` is summed over trials.
struct StratumAggregate {
    std::string stratification;
    std::string key;
    Summary coverage;
    Summary size;
    std::size_t count = 0;
    std::size_t trials_present = 0;
};

struct TrialReport {
    MethodKind method = MethodKind::OrdinalApsGreedy;
    Alpha alpha{0.1};
    std::vector<double> coverage;   // per trial
    std::vector<double> mean_size;  // per trial
    std::vector<Lambda> lambda_hat; // per trial
    std::size_t evaluated = 0;      // gradings evaluated, summed over trials
    Summary coverage_summary;
    Summary size_summary;
    std::vector<StratumAggregate> strata;
};

/// Default error-rate grid {0.2, 0.15, 0.1, 0.05, 0.01}.
[[nodiscard]] std::vector<Alpha> default_alpha_grid();

struct TrialOptions {
    std::size_t n_trials = 100;
    double cal_fraction = 0.05;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::vector<Stratification> strata;
};

/// Seed of trial `index`: splitmix64(splitmix64(master) ^ index).
[[nodiscard]] std::uint64_t trial_seed(std::uint64_t master, std::size_t index) noexcept;

/// Runs `n_trials` patient-level splits. Each split is shared by every method
/// and alpha, so comparisons are paired. Reports come back method-major in the
/// order given (methods[0] x alphas..., methods[1] x alphas..., ...).
/// Results are identical for any thread count.
[[nodiscard]] std::vector<TrialReport> run_trials(const Dataset& ds, std::span<const MethodKind> methods,
                                                  std::span<const Alpha> alphas, const TrialOptions& options);

struct PatientUncertainty {
    std::string patient_id;
    double mean_set_size = 0.0;
    std::size_t n_gradings = 0;
};

/// Per-patient average set size, sorted descending (ties by id ascending).
[[nodiscard]] std::vector<PatientUncertainty> patient_uncertainty(std::span<const PredictionSet> sets,
                                                                  std::span<const GradingRecord> records);

/// First k patient ids of the ranking. Throws std::invalid_argument if k exceeds
/// the population.
[[nodiscard]] std::vector<std::string> flag_top_k(std::span<const PatientUncertainty> ranking, std::size_t k);

/// Two-sided Fisher exact p-value for [[a, b], [c, d]]: total probability of all
/// tables with the observed margins whose point probability does not exceed the
/// observed one.
[[nodiscard]] double fisher_exact_2x2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);

}  // namespace ocp
