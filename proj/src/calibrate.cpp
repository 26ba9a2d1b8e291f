#include "ordinal_conformal/calibrate.hpp"

#include "ordinal_conformal/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace ocp {

std::size_t conformal_rank(std::size_t n, Alpha alpha) noexcept {
    // The product is an integer in exact arithmetic for many grid values
    // (e.g. 10 * 0.9); shave rounding noise before taking the ceiling.
    const double target = static_cast<double>(n + 1) * (1.0 - alpha.value());
    return static_cast<std::size_t>(std::ceil(target - 1e-9));
}

Lambda conformal_quantile(std::span<const double> scores, Alpha alpha) {
    if (scores.empty()) throw DataError("empty calibration set");
    const std::size_t k = conformal_rank(scores.size(), alpha);
    if (k > scores.size()) return Lambda::full();
    std::vector<double> sorted(scores.begin(), scores.end());
    const auto kth = sorted.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(sorted.begin(), kth, sorted.end());
    return Lambda::at(*kth);
}

CalibratedPredictor calibrate(MethodKind method, std::span<const GradingRecord> cal, Alpha alpha) {
    if (method == MethodKind::OrdinalApsExact) {
        throw std::invalid_argument("exact variant is diagnostic-only");
    }
    if (cal.empty()) throw DataError("empty calibration set");
    const int k = cal.front().scores.num_classes();
    std::vector<double> scores;
    scores.reserve(cal.size());
    for (const auto& rec : cal) {
        if (rec.scores.num_classes() != k) {
            throw DataError("calibration records mix class counts " + std::to_string(k) + " and " +
                            std::to_string(rec.scores.num_classes()));
        }
        scores.push_back(conformal_score(method, rec.scores, rec.label));
    }
    return {method, conformal_quantile(scores, alpha), alpha, cal.size(), k};
}

PredictionSet predict(const CalibratedPredictor& p, const ScoreVector& f) {
    if (f.num_classes() != p.num_classes) {
        throw DataError("score vector has " + std::to_string(f.num_classes()) +
                        " classes, predictor was calibrated on " + std::to_string(p.num_classes));
    }
    PredictionSet set = prediction_set(p.method, f, p.lambda_hat);
    if (auto* subset = std::get_if<LabelSubset>(&set); subset && subset->empty()) {
        subset->members.push_back(argmax_label(f));
    }
    return set;
}

std::string to_text(const CalibratedPredictor& p) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "method " << to_string(p.method) << '\n';
    out << "lambda ";
    if (p.lambda_hat.is_full()) out << "FULL";
    else out << p.lambda_hat.value();
    out << '\n';
    out << "alpha " << p.alpha.value() << '\n';
    out << "n_cal " << p.n_cal << '\n';
    out << "num_classes " << p.num_classes << '\n';
    return out.str();
}

CalibratedPredictor parse_predictor(std::string_view text) {
    std::istringstream in{std::string(text)};
    const char* keys[] = {"method", "lambda", "alpha", "n_cal", "num_classes"};
    std::string values[5];
    std::string line;
    for (int i = 0; i < 5; ++i) {
        if (!std::getline(in, line)) {
            throw DataError("predictor file truncated before '" + std::string(keys[i]) + "'");
        }
        std::istringstream fields(line);
        std::string key;
        fields >> key >> values[i];
        if (key != keys[i] || values[i].empty()) {
            throw DataError("predictor line " + std::to_string(i + 1) + ": expected '" + keys[i] +
                            " <value>', got '" + line + "'");
        }
    }
    CalibratedPredictor p;
    p.method = parse_method(values[0]);
    p.lambda_hat = values[1] == "FULL" ? Lambda::full() : Lambda::at(parse_double(values[1]));
    p.alpha = Alpha(parse_double(values[2]));
    p.n_cal = static_cast<std::size_t>(parse_int(values[3]));
    p.num_classes = static_cast<int>(parse_int(values[4]));
    if (p.num_classes < 2) throw DataError("predictor num_classes must be >= 2");
    return p;
}

void save_predictor(const CalibratedPredictor& p, const std::string& path) {
    write_file_atomically(path, to_text(p));
}

CalibratedPredictor load_predictor(const std::string& path) {
    return parse_predictor(read_file(path));
}

}  // namespace ocp
