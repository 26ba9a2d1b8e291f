#pragma once

// Split-conformal calibration: pick the threshold of a nested set family from
// held-out scores so that new sets cover the truth with probability >= 1 - alpha.

#include "ordinal_conformal/core.hpp"
#include "ordinal_conformal/methods.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace ocp {

struct CalibratedPredictor {
    MethodKind method = MethodKind::OrdinalApsGreedy;
    Lambda lambda_hat = Lambda::full();
    Alpha alpha{0.1};
    std::size_t n_cal = 0;
    int num_classes = 0;
};

/// Rank ceil((n + 1)(1 - alpha)) used by the finite-sample quantile.
[[nodiscard]] std::size_t conformal_rank(std::size_t n, Alpha alpha) noexcept;

/// k-th smallest score with k = conformal_rank(n, alpha), or FULL when k > n.
/// Throws DataError on an empty score list.
[[nodiscard]] Lambda conformal_quantile(std::span<const double> scores, Alpha alpha);

/// Scores every record with `method` and takes the conformal quantile.
/// Rejects OrdinalApsExact, empty input and mixed class counts.
[[nodiscard]] CalibratedPredictor calibrate(MethodKind method, std::span<const GradingRecord> cal,
                                            Alpha alpha);

/// Prediction set at the calibrated threshold. An empty LAC set falls back to
/// the argmax singleton.
[[nodiscard]] PredictionSet predict(const CalibratedPredictor& p, const ScoreVector& f);

/// Text form, one `key value` pair per line in fixed order:
/// method, lambda (17 significant digits or FULL), alpha, n_cal, num_classes.
[[nodiscard]] std::string to_text(const CalibratedPredictor& p);
[[nodiscard]] CalibratedPredictor parse_predictor(std::string_view text);

void save_predictor(const CalibratedPredictor& p, const std::string& path);
[[nodiscard]] CalibratedPredictor load_predictor(const std::string& path);

}  // namespace ocp
