#pragma once

// Domain types shared by every part of the library: ordinal labels, validated
// probability vectors, prediction sets and the error/threshold value types.

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ocp {

/// Ordinal severity index in 0..K-1.
using Label = int;

/// Raised when input data violates a documented invariant (bad rows, mixed K,
/// empty calibration sets, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tolerance on |sum(p) - 1| accepted before renormalizing.
inline constexpr double kSumTolerance = 1e-6;

/// Probability vector over K >= 2 ordinal classes.
///
/// Entries are non-negative and finite. Vectors whose sum is within
/// kSumTolerance of one are renormalized on construction; anything else is
/// rejected with DataError.
class ScoreVector {
public:
    explicit ScoreVector(const Eigen::Ref<const Eigen::VectorXd>& probs);
    explicit ScoreVector(std::span<const double> probs);
    ScoreVector(std::initializer_list<double> probs);

    [[nodiscard]] int num_classes() const noexcept { return static_cast<int>(probs_.size()); }
    [[nodiscard]] double operator[](Label y) const { return probs_[y]; }
    [[nodiscard]] const Eigen::VectorXd& probs() const noexcept { return probs_; }

private:
    Eigen::VectorXd probs_;
};

/// Contiguous label range [lo, hi].
struct LabelInterval {
    Label lo = 0;
    Label hi = 0;

    [[nodiscard]] bool contains(Label y) const noexcept { return lo <= y && y <= hi; }
    [[nodiscard]] int size() const noexcept { return hi - lo + 1; }

    friend bool operator==(const LabelInterval&, const LabelInterval&) = default;
};

/// Arbitrary label set, members kept sorted and unique.
struct LabelSubset {
    std::vector<Label> members;

    [[nodiscard]] bool contains(Label y) const noexcept;
    [[nodiscard]] int size() const noexcept { return static_cast<int>(members.size()); }
    [[nodiscard]] bool empty() const noexcept { return members.empty(); }

    friend bool operator==(const LabelSubset&, const LabelSubset&) = default;
};

/// Output of a calibrated predictor: an interval for the ordinal methods, a
/// subset for LAC.
using PredictionSet = std::variant<LabelInterval, LabelSubset>;

[[nodiscard]] bool contains(const PredictionSet& set, Label y) noexcept;
[[nodiscard]] int set_size(const PredictionSet& set) noexcept;
[[nodiscard]] std::vector<Label> members(const PredictionSet& set);

/// One labeled grading: scores, ground truth, patient and optional group tags
/// such as disc_level or task.
struct GradingRecord {
    ScoreVector scores;
    Label label = 0;
    std::string patient_id;
    std::map<std::string, std::string> group;
};

/// Validates label range and non-empty patient id against the score vector.
void validate(const GradingRecord& record);

/// Target error rate, strictly inside (0, 1).
class Alpha {
public:
    explicit Alpha(double value);
    [[nodiscard]] double value() const noexcept { return value_; }
    friend auto operator<=>(const Alpha&, const Alpha&) = default;

private:
    double value_;
};

/// Rounding headroom above 1 accepted for finite thresholds.
inline constexpr double kLambdaSlack = 1e-9;

/// Set-family threshold in [0, 1], or the FULL sentinel that always emits every
/// label. FULL orders above every finite threshold.
class Lambda {
public:
    [[nodiscard]] static Lambda at(double value);
    [[nodiscard]] static Lambda full() noexcept { return Lambda{}; }

    [[nodiscard]] bool is_full() const noexcept { return full_; }
    /// Finite threshold; +infinity when FULL.
    [[nodiscard]] double value() const noexcept;

    friend std::partial_ordering operator<=>(const Lambda& a, const Lambda& b) noexcept {
        return a.value() <=> b.value();
    }
    friend bool operator==(const Lambda& a, const Lambda& b) noexcept {
        return a.full_ == b.full_ && (a.full_ || a.value_ == b.value_);
    }

private:
    Lambda() = default;
    double value_ = 0.0;
    bool full_ = true;
};

/// Smallest label attaining the maximum probability.
[[nodiscard]] Label argmax_label(const ScoreVector& f) noexcept;

}  // namespace ocp
