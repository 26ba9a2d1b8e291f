#include "ordinal_conformal/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ocp {

namespace {

Eigen::VectorXd normalized(Eigen::VectorXd p) {
    if (p.size() < 2) {
        throw DataError("score vector needs at least 2 classes, got " + std::to_string(p.size()));
    }
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i]) || p[i] < 0.0) {
            std::ostringstream msg;
            msg << "probability p" << i << " = " << p[i] << " is negative or not finite";
            throw DataError(msg.str());
        }
    }
    const double total = p.sum();
    if (std::abs(total - 1.0) > kSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "probabilities sum to " << total << ", expected 1 within " << kSumTolerance;
        throw DataError(msg.str());
    }
    // Vectors already normalized up to summation rounding are kept bit-exact so
    // that save/load round-trips do not drift.
    const double rounding = static_cast<double>(p.size()) * std::numeric_limits<double>::epsilon();
    if (std::abs(total - 1.0) > rounding) p /= total;
    return p;
}

}  // namespace

ScoreVector::ScoreVector(const Eigen::Ref<const Eigen::VectorXd>& probs)
    : probs_(normalized(probs)) {}

ScoreVector::ScoreVector(std::span<const double> probs)
    : probs_(normalized(Eigen::Map<const Eigen::VectorXd>(probs.data(),
                                                          static_cast<Eigen::Index>(probs.size())))) {}

ScoreVector::ScoreVector(std::initializer_list<double> probs)
    : ScoreVector(std::span<const double>(probs.begin(), probs.size())) {}

bool LabelSubset::contains(Label y) const noexcept {
    return std::binary_search(members.begin(), members.end(), y);
}

bool contains(const PredictionSet& set, Label y) noexcept {
    return std::visit([y](const auto& s) { return s.contains(y); }, set);
}

int set_size(const PredictionSet& set) noexcept {
    return std::visit([](const auto& s) { return s.size(); }, set);
}

std::vector<Label> members(const PredictionSet& set) {
    if (const auto* subset = std::get_if<LabelSubset>(&set)) return subset->members;
    const auto& iv = std::get<LabelInterval>(set);
    std::vector<Label> out;
    for (Label y = iv.lo; y <= iv.hi; ++y) out.push_back(y);
    return out;
}

void validate(const GradingRecord& record) {
    if (record.label < 0 || record.label >= record.scores.num_classes()) {
        throw DataError("label " + std::to_string(record.label) + " outside 0.." +
                        std::to_string(record.scores.num_classes() - 1));
    }
    if (record.patient_id.empty()) throw DataError("missing patient_id");
}

Alpha::Alpha(double value) : value_(value) {
    if (!(value > 0.0 && value < 1.0)) {
        throw std::invalid_argument("alpha must lie strictly between 0 and 1, got " + std::to_string(value));
    }
}

Lambda Lambda::at(double value) {
    // Cumulative-mass scores can overshoot 1 by a few ulps.
    if (!(value >= 0.0 && value <= 1.0 + kLambdaSlack)) {
        throw std::invalid_argument("lambda must lie in [0, 1], got " + std::to_string(value));
    }
    Lambda out;
    out.value_ = value;
    out.full_ = false;
    return out;
}

double Lambda::value() const noexcept {
    return full_ ? std::numeric_limits<double>::infinity() : value_;
}

Label argmax_label(const ScoreVector& f) noexcept {
    const auto& p = f.probs();
    Label best = 0;
    for (Eigen::Index y = 1; y < p.size(); ++y) {
        if (p[y] > p[best]) best = static_cast<Label>(y);
    }
    return best;
}

}  // namespace ocp
