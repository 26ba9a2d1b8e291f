#pragma once

// Nested prediction-set families over ordinal labels and their conformal
// scores. Every family follows the same convention: a label y belongs to the
// set at threshold lambda exactly when score(f, y) <= lambda, so a single
// quantile routine calibrates all of them.

#include "ordinal_conformal/core.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ocp {

enum class MethodKind {
    OrdinalApsGreedy,
    OrdinalApsExact,  // diagnostic only, never calibrated
    Lac,
    OrdinalCdf,
};

/// Short CLI/file name: aps, aps-exact, lac, cdf.
[[nodiscard]] std::string_view to_string(MethodKind method) noexcept;
/// Inverse of to_string. Throws std::invalid_argument on unknown names.
[[nodiscard]] MethodKind parse_method(std::string_view name);

/// Full run of the greedy outward growth from the argmax.
///
/// `order` lists labels in inclusion order; `cum_mass_before[y]` is the mass
/// already in the set when y is added (0 for the argmax). Every prefix of
/// `order` is a contiguous interval.
struct GreedyTrace {
    std::vector<Label> order;
    Eigen::VectorXd cum_mass_before;
};

[[nodiscard]] GreedyTrace greedy_trace(const ScoreVector& f);

/// Greedy ordinal APS set. Starts at the argmax with running mass f[argmax] and
/// keeps adding the more probable neighbour (lower label on ties) while the
/// running mass is <= lambda.
[[nodiscard]] LabelInterval greedy_interval(const ScoreVector& f, Lambda lambda);

/// Smallest lambda whose greedy set contains y.
[[nodiscard]] double aps_score(const ScoreVector& f, Label y);

/// Narrowest contiguous interval with mass >= lambda, by enumeration of all
/// (lo, hi) pairs. Ties on width go to larger mass, then lower `lo`.
[[nodiscard]] LabelInterval exact_interval(const ScoreVector& f, Lambda lambda);

/// 1 - f[y].
[[nodiscard]] double lac_score(const ScoreVector& f, Label y);

/// { y : 1 - f[y] <= lambda }. May be empty or non-contiguous.
[[nodiscard]] LabelSubset lac_set(const ScoreVector& f, Lambda lambda);

/// Cumulative-mass distance from the argmax's CDF span [F(m-1), F(m)] to the
/// span of y: max(F(m-1) - F(y-1), F(y) - F(m), 0).
[[nodiscard]] double cdf_score(const ScoreVector& f, Label y);

/// { y : cdf_score(f, y) <= lambda }, always a contiguous interval around the
/// argmax.
[[nodiscard]] LabelInterval cdf_interval(const ScoreVector& f, Lambda lambda);

/// Conformal score of `y` under a calibratable method.
[[nodiscard]] double conformal_score(MethodKind method, const ScoreVector& f, Label y);

/// Raw set at `lambda` for any method (LAC may come back empty here).
[[nodiscard]] PredictionSet prediction_set(MethodKind method, const ScoreVector& f, Lambda lambda);

}  // namespace ocp
