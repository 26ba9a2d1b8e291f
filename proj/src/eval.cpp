#include "ordinal_conformal/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace ocp {

namespace {

void check_aligned(std::size_t sets, std::size_t other, const char* what) {
    if (sets != other) {
        throw std::invalid_argument(std::string("got ") + std::to_string(sets) + " prediction sets but " +
                                    std::to_string(other) + " " + what);
    }
    if (sets == 0) throw std::invalid_argument("no prediction sets to evaluate");
}

bool numeric_keys(const Stratification& s) { return s.kind != Stratification::Kind::Group; }

struct KeyLess {
    bool numeric;
    bool operator()(const std::string& a, const std::string& b) const {
        if (numeric && a.size() != b.size()) return a.size() < b.size();
        return a < b;
    }
};

std::string stratum_key(const Stratification& s, const PredictionSet& set, const GradingRecord& rec) {
    switch (s.kind) {
        case Stratification::Kind::TrueClass: return std::to_string(rec.label);
        case Stratification::Kind::SetSize: return std::to_string(set_size(set));
        case Stratification::Kind::Group: break;
    }
    const auto it = rec.group.find(s.tag);
    if (it == rec.group.end()) {
        throw DataError("unknown group tag '" + s.tag + "' for patient " + rec.patient_id);
    }
    return it->second;
}

}  // namespace

double empirical_coverage(std::span<const PredictionSet> sets, std::span<const Label> labels) {
    check_aligned(sets.size(), labels.size(), "labels");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) covered += contains(sets[i], labels[i]) ? 1 : 0;
    return static_cast<double>(covered) / static_cast<double>(sets.size());
}

double mean_set_size(std::span<const PredictionSet> sets) {
    if (sets.empty()) throw std::invalid_argument("no prediction sets to evaluate");
    std::size_t total = 0;
    for (const auto& s : sets) total += static_cast<std::size_t>(set_size(s));
    return static_cast<double>(total) / static_cast<double>(sets.size());
}

std::string Stratification::name() const {
    switch (kind) {
        case Kind::TrueClass: return "true_class";
        case Kind::SetSize: return "set_size";
        case Kind::Group: break;
    }
    return tag;
}

std::vector<Stratum> stratified_report(std::span<const PredictionSet> sets, std::span<const GradingRecord> records,
                                       const Stratification& strata) {
    check_aligned(sets.size(), records.size(), "records");
    struct Cell {
        std::size_t covered = 0;
        std::size_t size_total = 0;
        std::size_t count = 0;
    };
    std::map<std::string, Cell, KeyLess> cells(KeyLess{numeric_keys(strata)});
    for (std::size_t i = 0; i < sets.size(); ++i) {
        auto& cell = cells[stratum_key(strata, sets[i], records[i])];
        cell.covered += contains(sets[i], records[i].label) ? 1 : 0;
        cell.size_total += static_cast<std::size_t>(set_size(sets[i]));
        ++cell.count;
    }
    std::vector<Stratum> out;
    out.reserve(cells.size());
    for (const auto& [key, cell] : cells) {
        const auto n = static_cast<double>(cell.count);
        out.push_back({key, {static_cast<double>(cell.covered) / n, static_cast<double>(cell.size_total) / n,
                             cell.count}});
    }
    return out;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    const auto n = static_cast<double>(values.size());
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / n);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    // Rounding in the mean can step just outside [min, max] for constant input.
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

std::vector<Alpha> default_alpha_grid() {
    return {Alpha(0.2), Alpha(0.15), Alpha(0.1), Alpha(0.05), Alpha(0.01)};
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, std::size_t index) noexcept {
    // Mixing the master first keeps nearby masters from sharing trial seeds.
    return splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(index));
}

namespace {

struct CellResult {
    double coverage = 0.0;
    double mean_size = 0.0;
    Lambda lambda_hat = Lambda::full();
    std::size_t evaluated = 0;
    std::vector<std::vector<Stratum>> strata;  // one per requested stratification
};

std::vector<CellResult> run_one_trial(const Dataset& ds, std::span<const MethodKind> methods,
                                      std::span<const Alpha> alphas, const TrialOptions& options,
                                      std::size_t trial) {
    const std::uint64_t seed = trial_seed(options.seed, trial);
    const PatientSplit split = split_by_patient(ds, options.cal_fraction, seed);
    if (split.calibration.empty() || split.evaluation.empty()) {
        throw DataError("trial " + std::to_string(trial) + " (seed " + std::to_string(seed) +
                        "): empty calibration or evaluation split");
    }
    std::vector<GradingRecord> cal;
    cal.reserve(split.calibration.size());
    for (auto i : split.calibration) cal.push_back(ds.records[i]);
    std::vector<GradingRecord> test;
    test.reserve(split.evaluation.size());
    for (auto i : split.evaluation) test.push_back(ds.records[i]);
    std::vector<Label> labels;
    labels.reserve(test.size());
    for (const auto& r : test) labels.push_back(r.label);

    std::vector<CellResult> out;
    out.reserve(methods.size() * alphas.size());
    std::vector<PredictionSet> sets(test.size());
    for (MethodKind method : methods) {
        for (Alpha alpha : alphas) {
            const CalibratedPredictor predictor = calibrate(method, cal, alpha);
            for (std::size_t i = 0; i < test.size(); ++i) sets[i] = predict(predictor, test[i].scores);
            CellResult cell;
            cell.coverage = empirical_coverage(sets, labels);
            cell.mean_size = mean_set_size(sets);
            cell.lambda_hat = predictor.lambda_hat;
            cell.evaluated = test.size();
            for (const auto& s : options.strata) cell.strata.push_back(stratified_report(sets, test, s));
            out.push_back(std::move(cell));
        }
    }
    return out;
}

void aggregate_strata(TrialReport& report, const std::vector<std::vector<CellResult>>& trials, std::size_t cell,
                      const std::vector<Stratification>& strata) {
    for (std::size_t s = 0; s < strata.size(); ++s) {
        struct Acc {
            std::vector<double> coverage, size;
            std::size_t count = 0;
        };
        std::map<std::string, Acc, KeyLess> acc(KeyLess{numeric_keys(strata[s])});
        for (const auto& trial : trials) {
            for (const auto& st : trial[cell].strata[s]) {
                auto& a = acc[st.key];
                a.coverage.push_back(st.stats.coverage);
                a.size.push_back(st.stats.mean_size);
                a.count += st.stats.count;
            }
        }
        for (const auto& [key, a] : acc) {
            report.strata.push_back({strata[s].name(), key, summarize(a.coverage), summarize(a.size), a.count,
                                     a.coverage.size()});
        }
    }
}

}  // namespace

std::vector<TrialReport> run_trials(const Dataset& ds, std::span<const MethodKind> methods,
                                    std::span<const Alpha> alphas, const TrialOptions& options) {
    if (options.n_trials < 1) throw std::invalid_argument("need at least one trial");
    if (!(options.cal_fraction > 0.0 && options.cal_fraction < 1.0)) {
        throw std::invalid_argument("cal_fraction must lie strictly between 0 and 1");
    }
    if (ds.records.empty()) throw DataError("dataset has no records");
    if (methods.empty() || alphas.empty()) throw std::invalid_argument("need at least one method and one alpha");

    std::vector<std::vector<CellResult>> trials(options.n_trials);
    std::vector<std::exception_ptr> errors(options.n_trials);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < options.n_trials; t = next++) {
            try {
                trials[t] = run_one_trial(ds, methods, alphas, options, t);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(options.threads, 1, options.n_trials);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<TrialReport> reports;
    reports.reserve(methods.size() * alphas.size());
    std::size_t cell = 0;
    for (MethodKind method : methods) {
        for (Alpha alpha : alphas) {
            TrialReport report{method, alpha, {}, {}, {}, 0, {}, {}, {}};
            for (const auto& trial : trials) {
                report.coverage.push_back(trial[cell].coverage);
                report.mean_size.push_back(trial[cell].mean_size);
                report.lambda_hat.push_back(trial[cell].lambda_hat);
                report.evaluated += trial[cell].evaluated;
            }
            report.coverage_summary = summarize(report.coverage);
            report.size_summary = summarize(report.mean_size);
            aggregate_strata(report, trials, cell, options.strata);
            reports.push_back(std::move(report));
            ++cell;
        }
    }
    return reports;
}

std::vector<PatientUncertainty> patient_uncertainty(std::span<const PredictionSet> sets,
                                                    std::span<const GradingRecord> records) {
    check_aligned(sets.size(), records.size(), "records");
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<PatientUncertainty> out;
    std::vector<std::size_t> size_total;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto [it, inserted] = slot.emplace(records[i].patient_id, out.size());
        if (inserted) {
            out.push_back({records[i].patient_id, 0.0, 0});
            size_total.push_back(0);
        }
        size_total[it->second] += static_cast<std::size_t>(set_size(sets[i]));
        ++out[it->second].n_gradings;
    }
    for (std::size_t p = 0; p < out.size(); ++p) {
        out[p].mean_set_size = static_cast<double>(size_total[p]) / static_cast<double>(out[p].n_gradings);
    }
    std::sort(out.begin(), out.end(), [](const PatientUncertainty& a, const PatientUncertainty& b) {
        if (a.mean_set_size != b.mean_set_size) return a.mean_set_size > b.mean_set_size;
        return a.patient_id < b.patient_id;
    });
    return out;
}

std::vector<std::string> flag_top_k(std::span<const PatientUncertainty> ranking, std::size_t k) {
    if (k > ranking.size()) {
        throw std::invalid_argument("cannot flag " + std::to_string(k) + " of " + std::to_string(ranking.size()) +
                                    " patients");
    }
    std::vector<std::string> ids;
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) ids.push_back(ranking[i].patient_id);
    return ids;
}

namespace {

long double log_choose(std::uint64_t n, std::uint64_t k) {
    return std::lgamma(static_cast<long double>(n) + 1) - std::lgamma(static_cast<long double>(k) + 1) -
           std::lgamma(static_cast<long double>(n - k) + 1);
}

}  // namespace

double fisher_exact_2x2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    const std::uint64_t row1 = a + b;
    const std::uint64_t row2 = c + d;
    const std::uint64_t col1 = a + c;
    const std::uint64_t n = row1 + row2;
    if (n == 0) throw std::invalid_argument("Fisher exact test on an all-zero table");

    // Tables sharing the margins are indexed by their top-left cell x.
    const std::uint64_t lo = col1 > row2 ? col1 - row2 : 0;
    const std::uint64_t hi = std::min(row1, col1);
    std::vector<long double> log_p;
    log_p.reserve(hi - lo + 1);
    for (std::uint64_t x = lo; x <= hi; ++x) log_p.push_back(log_choose(row1, x) + log_choose(row2, col1 - x));
    const long double peak = *std::max_element(log_p.begin(), log_p.end());
    const long double observed = std::exp(log_p[a - lo] - peak);

    long double total = 0.0L;
    long double extreme = 0.0L;
    for (long double lp : log_p) {
        const long double p = std::exp(lp - peak);
        total += p;
        if (p <= observed * (1.0L + 1e-12L)) extreme += p;
    }
    if (extreme >= total) return 1.0;
    return static_cast<double>(extreme / total);
}

}  // namespace ocp
