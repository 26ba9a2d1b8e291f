#include "ordinal_conformal/methods.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ocp {

namespace {

LabelInterval full_interval(const ScoreVector& f) { return {0, f.num_classes() - 1}; }

void check_label(const ScoreVector& f, Label y) {
    if (y < 0 || y >= f.num_classes()) {
        throw std::invalid_argument("label " + std::to_string(y) + " outside 0.." +
                                    std::to_string(f.num_classes() - 1));
    }
}

// Next label the greedy growth of [lo, hi] takes; the caller guarantees the
// interval is not yet full.
Label next_neighbour(const ScoreVector& f, const LabelInterval& iv) {
    const Label below = iv.lo - 1;
    const Label above = iv.hi + 1;
    if (below < 0) return above;
    if (above >= f.num_classes()) return below;
    return f[above] > f[below] ? above : below;
}

void grow(LabelInterval& iv, Label y) {
    if (y < iv.lo) iv.lo = y;
    else iv.hi = y;
}

}  // namespace

std::string_view to_string(MethodKind method) noexcept {
    switch (method) {
        case MethodKind::OrdinalApsGreedy: return "aps";
        case MethodKind::OrdinalApsExact: return "aps-exact";
        case MethodKind::Lac: return "lac";
        case MethodKind::OrdinalCdf: return "cdf";
    }
    return "unknown";
}

MethodKind parse_method(std::string_view name) {
    if (name == "aps") return MethodKind::OrdinalApsGreedy;
    if (name == "aps-exact") return MethodKind::OrdinalApsExact;
    if (name == "lac") return MethodKind::Lac;
    if (name == "cdf") return MethodKind::OrdinalCdf;
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

GreedyTrace greedy_trace(const ScoreVector& f) {
    const int k = f.num_classes();
    GreedyTrace trace;
    trace.order.reserve(static_cast<std::size_t>(k));
    trace.cum_mass_before = Eigen::VectorXd::Zero(k);

    const Label top = argmax_label(f);
    LabelInterval iv{top, top};
    trace.order.push_back(top);
    double q = f[top];
    while (iv.size() < k) {
        const Label y = next_neighbour(f, iv);
        trace.cum_mass_before[y] = q;
        trace.order.push_back(y);
        q += f[y];
        grow(iv, y);
    }
    return trace;
}

LabelInterval greedy_interval(const ScoreVector& f, Lambda lambda) {
    if (lambda.is_full()) return full_interval(f);
    const Label top = argmax_label(f);
    LabelInterval iv{top, top};
    // Same accumulation order as greedy_trace, so membership agrees bit for bit
    // with aps_score.
    double q = f[top];
    while (q <= lambda.value() && iv.size() < f.num_classes()) {
        const Label y = next_neighbour(f, iv);
        q += f[y];
        grow(iv, y);
    }
    return iv;
}

double aps_score(const ScoreVector& f, Label y) {
    check_label(f, y);
    return greedy_trace(f).cum_mass_before[y];
}

LabelInterval exact_interval(const ScoreVector& f, Lambda lambda) {
    const int k = f.num_classes();
    if (lambda.is_full()) return full_interval(f);
    for (int width = 1; width <= k; ++width) {
        bool found = false;
        LabelInterval best{};
        double best_mass = 0.0;
        for (Label lo = 0; lo + width <= k; ++lo) {
            double mass = 0.0;
            for (Label y = lo; y < lo + width; ++y) mass += f[y];
            if (mass >= lambda.value() && (!found || mass > best_mass)) {
                found = true;
                best = {lo, lo + width - 1};
                best_mass = mass;
            }
        }
        if (found) return best;
    }
    // Only reachable when lambda exceeds the rounded total mass.
    return full_interval(f);
}

double lac_score(const ScoreVector& f, Label y) {
    check_label(f, y);
    return 1.0 - f[y];
}

LabelSubset lac_set(const ScoreVector& f, Lambda lambda) {
    LabelSubset out;
    for (Label y = 0; y < f.num_classes(); ++y) {
        if (lambda.is_full() || 1.0 - f[y] <= lambda.value()) out.members.push_back(y);
    }
    return out;
}

namespace {

// cdf[y + 1] = F(y); cdf[0] = F(-1) = 0.
Eigen::VectorXd cumulative(const ScoreVector& f) {
    Eigen::VectorXd cdf(f.num_classes() + 1);
    cdf[0] = 0.0;
    for (Label y = 0; y < f.num_classes(); ++y) cdf[y + 1] = cdf[y] + f[y];
    return cdf;
}

double cdf_score_from(const Eigen::VectorXd& cdf, Label top, Label y) {
    const double below = cdf[top] - cdf[y];       // F(m-1) - F(y-1)
    const double above = cdf[y + 1] - cdf[top + 1];  // F(y) - F(m)
    return std::max({below, above, 0.0});
}

}  // namespace

double cdf_score(const ScoreVector& f, Label y) {
    check_label(f, y);
    return cdf_score_from(cumulative(f), argmax_label(f), y);
}

LabelInterval cdf_interval(const ScoreVector& f, Lambda lambda) {
    if (lambda.is_full()) return full_interval(f);
    const Eigen::VectorXd cdf = cumulative(f);
    const Label top = argmax_label(f);
    LabelInterval iv{top, top};
    while (iv.lo > 0 && cdf_score_from(cdf, top, iv.lo - 1) <= lambda.value()) --iv.lo;
    while (iv.hi + 1 < f.num_classes() && cdf_score_from(cdf, top, iv.hi + 1) <= lambda.value()) ++iv.hi;
    return iv;
}

double conformal_score(MethodKind method, const ScoreVector& f, Label y) {
    switch (method) {
        case MethodKind::OrdinalApsGreedy: return aps_score(f, y);
        case MethodKind::Lac: return lac_score(f, y);
        case MethodKind::OrdinalCdf: return cdf_score(f, y);
        case MethodKind::OrdinalApsExact: break;
    }
    throw std::invalid_argument("exact variant is diagnostic-only");
}

PredictionSet prediction_set(MethodKind method, const ScoreVector& f, Lambda lambda) {
    switch (method) {
        case MethodKind::OrdinalApsGreedy: return greedy_interval(f, lambda);
        case MethodKind::OrdinalApsExact: return exact_interval(f, lambda);
        case MethodKind::Lac: return lac_set(f, lambda);
        case MethodKind::OrdinalCdf: return cdf_interval(f, lambda);
    }
    throw std::invalid_argument("unknown method");
}

}  // namespace ocp
