#pragma once

// Grading-record datasets: CSV ingestion and export, a synthetic generator with
// known true conditionals, and patient-level calibration/evaluation splits.

#include "ordinal_conformal/core.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ocp {

struct Dataset {
    int num_classes = 0;
    std::vector<GradingRecord> records;
    std::vector<std::string> group_columns;  // in file order
    std::string provenance;
};

/// Parses `patient_id,label,p0..p{K-1}[,group columns...]` CSV text. Column
/// positions come from the header; K is the number of consecutive p<i> columns.
/// Every row error names its 1-based line number within `source`.
[[nodiscard]] Dataset parse_records(std::string_view text, std::string_view source = "<memory>");
[[nodiscard]] Dataset load_records(const std::string& path);

/// Inverse of parse_records; probabilities use 17 significant digits.
[[nodiscard]] std::string format_records(const Dataset& ds);
void save_records(const Dataset& ds, const std::string& path);

struct SyntheticSpec {
    int num_classes = 4;
    std::size_t n_patients = 100;
    std::size_t gradings_per_patient = 18;
    std::vector<double> concentration{2.0, 1.0, 1.0, 0.5};
    std::optional<double> temperature;  // unset: scores equal the true conditional
    bool shared_per_patient = false;    // one conditional per patient instead of per grading
    std::uint64_t seed = 0;
};

void validate(const SyntheticSpec& spec);

struct SyntheticData {
    Dataset dataset;
    std::vector<Eigen::VectorXd> true_conditionals;  // aligned with dataset.records
};

/// Per grading: pi ~ Dirichlet(concentration), label ~ Categorical(pi), scores
/// = pi, or pi^(1/t) renormalized under a temperature. Records carry
/// disc_level (T12-L1..L5-S1) and task (central, left-foraminal,
/// right-foraminal) tags cycled over the grading index. Deterministic in seed
/// via std::mt19937_64.
[[nodiscard]] SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Sidecar CSV `row,patient_id,pi0..pi{K-1}` holding the hidden conditionals.
[[nodiscard]] std::string format_truth(const SyntheticData& data);

/// Applies pi^(1/t) and renormalizes.
[[nodiscard]] Eigen::VectorXd temper(const Eigen::Ref<const Eigen::VectorXd>& pi, double temperature);

/// Record indices on each side of a patient-level split.
struct PatientSplit {
    std::vector<std::size_t> calibration;
    std::vector<std::size_t> evaluation;
    std::vector<std::string> calibration_patients;
};

/// Distinct patients in order of first appearance.
[[nodiscard]] std::vector<std::string> patient_ids(const Dataset& ds);

/// Shuffles the distinct patients with mt19937_64(seed) and sends the first
/// ceil(cal_fraction * n) of them (capped at n - 1) to calibration.
[[nodiscard]] PatientSplit split_by_patient(const Dataset& ds, double cal_fraction, std::uint64_t seed);

/// Number of calibration patients split_by_patient takes out of `n_patients`.
[[nodiscard]] std::size_t calibration_patient_count(std::size_t n_patients, double cal_fraction);

}  // namespace ocp
