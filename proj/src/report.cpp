#include "ordinal_conformal/report.hpp"

#include "ordinal_conformal/io.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

namespace ocp {

namespace {

std::string row(std::string_view method, double alpha, std::string_view strat, std::string_view key,
                const Summary& cov, const Summary& size, std::size_t count) {
    std::string out(method);
    out += ',' + format_double(alpha);
    out += ',';
    out += strat;
    out += ',';
    out += key;
    out += ',' + format_double(cov.mean) + ',' + format_double(cov.std);
    out += ',' + format_double(size.mean) + ',' + format_double(size.std);
    out += ',' + std::to_string(count) + '\n';
    return out;
}

std::string pm(const Summary& s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f ± %.3f", s.mean, s.std);
    return buf;
}

std::string line(std::string_view stratum, std::string_view method, const Summary& cov, const Summary& size) {
    char buf[160];
    // "±" is two bytes in UTF-8; pad one extra byte so columns line up.
    std::snprintf(buf, sizeof buf, "%-16s %-6s %-18s %-18s\n", std::string(stratum).c_str(),
                  std::string(method).c_str(), pm(cov).c_str(), pm(size).c_str());
    return buf;
}

}  // namespace

std::string format_report_csv(std::span<const TrialReport> reports) {
    std::string out = "method,alpha,stratification,stratum,coverage_mean,coverage_std,size_mean,size_std,count\n";
    for (const auto& r : reports) {
        const auto method = to_string(r.method);
        out += row(method, r.alpha.value(), "overall", "all", r.coverage_summary, r.size_summary, r.evaluated);
        for (const auto& s : r.strata) {
            out += row(method, r.alpha.value(), s.stratification, s.key, s.coverage, s.size, s.count);
        }
    }
    return out;
}

std::string format_report_table(std::span<const TrialReport> reports, std::size_t n_trials) {
    // Group reports by alpha, keeping first-seen order.
    std::vector<double> alphas;
    for (const auto& r : reports) {
        bool seen = false;
        for (double a : alphas) seen = seen || a == r.alpha.value();
        if (!seen) alphas.push_back(r.alpha.value());
    }
    std::string out;
    for (double alpha : alphas) {
        std::vector<const TrialReport*> block;
        for (const auto& r : reports) {
            if (r.alpha.value() == alpha) block.push_back(&r);
        }
        std::vector<std::string> strat_names;
        for (const auto& s : block.front()->strata) {
            bool seen = false;
            for (const auto& n : strat_names) seen = seen || n == s.stratification;
            if (!seen) strat_names.push_back(s.stratification);
        }
        if (strat_names.empty()) strat_names.emplace_back();

        for (const auto& strat : strat_names) {
            char head[160];
            std::snprintf(head, sizeof head, "alpha = %g, %zu trials, mean ± std (population)%s%s\n", alpha,
                          n_trials, strat.empty() ? "" : ", by ", strat.c_str());
            out += head;
            char cols[160];
            std::snprintf(cols, sizeof cols, "%-16s %-6s %-17s %-17s\n", strat.empty() ? "stratum" : strat.c_str(),
                          "method", "coverage", "set size");
            out += cols;
            // Union of keys over methods; set-size cells differ between methods.
            const bool numeric = strat == "true_class" || strat == "set_size";
            auto less = [numeric](const std::string& a, const std::string& b) {
                if (numeric && a.size() != b.size()) return a.size() < b.size();
                return a < b;
            };
            std::vector<std::string> keys;
            for (const auto* r : block) {
                for (const auto& s : r->strata) {
                    if (s.stratification == strat && std::find(keys.begin(), keys.end(), s.key) == keys.end()) {
                        keys.push_back(s.key);
                    }
                }
            }
            std::sort(keys.begin(), keys.end(), less);
            for (const auto& key : keys) {
                for (const auto* r : block) {
                    for (const auto& s : r->strata) {
                        if (s.stratification == strat && s.key == key) {
                            out += line(key, to_string(r->method), s.coverage, s.size);
                        }
                    }
                }
            }
            for (const auto* r : block) out += line("Total", to_string(r->method), r->coverage_summary, r->size_summary);
            out += '\n';
        }
    }
    return out;
}

}  // namespace ocp
