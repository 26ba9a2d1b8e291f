#include "ordinal_conformal/data.hpp"

#include "ordinal_conformal/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ocp {

namespace {

constexpr std::array<std::string_view, 6> kDiscLevels{"T12-L1", "L1-L2", "L2-L3", "L3-L4", "L4-L5", "L5-S1"};
constexpr std::array<std::string_view, 3> kTasks{"central", "left-foraminal", "right-foraminal"};

[[noreturn]] void fail_at(std::string_view source, std::size_t line, const std::string& what) {
    throw DataError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

struct Layout {
    std::size_t patient = 0;
    std::size_t label = 0;
    std::vector<std::size_t> probs;
    std::vector<std::pair<std::string, std::size_t>> groups;
    std::size_t n_columns = 0;
};

Layout parse_header(const std::vector<std::string>& header, std::string_view source) {
    Layout layout;
    layout.n_columns = header.size();
    std::optional<std::size_t> patient, label;
    std::unordered_map<std::string, std::size_t> prob_at;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto& name = header[i];
        if (name == "patient_id") patient = i;
        else if (name == "label") label = i;
        else if (name.size() > 1 && name[0] == 'p' &&
                 std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; }))
            prob_at[name] = i;
        else layout.groups.emplace_back(name, i);
    }
    if (!patient) fail_at(source, 1, "header lacks a patient_id column");
    if (!label) fail_at(source, 1, "header lacks a label column");
    for (std::size_t k = 0;; ++k) {
        auto it = prob_at.find("p" + std::to_string(k));
        if (it == prob_at.end()) break;
        layout.probs.push_back(it->second);
    }
    if (layout.probs.size() != prob_at.size()) {
        fail_at(source, 1, "probability columns must be p0..p{K-1} without gaps");
    }
    if (layout.probs.size() < 2) fail_at(source, 1, "need at least two probability columns p0, p1");
    layout.patient = *patient;
    layout.label = *label;
    return layout;
}

}  // namespace

Dataset parse_records(std::string_view text, std::string_view source) {
    Dataset ds;
    ds.provenance = "file:" + std::string(source);
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    std::optional<Layout> layout;
    std::vector<double> probs;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (!layout) {
            layout = parse_header(fields, source);
            ds.num_classes = static_cast<int>(layout->probs.size());
            for (const auto& [name, col] : layout->groups) ds.group_columns.push_back(name);
            continue;
        }
        if (fields.size() != layout->n_columns) {
            fail_at(source, line_no, "expected " + std::to_string(layout->n_columns) + " fields, got " +
                                         std::to_string(fields.size()));
        }
        try {
            probs.clear();
            for (std::size_t col : layout->probs) probs.push_back(parse_double(fields[col]));
            GradingRecord rec{ScoreVector(std::span<const double>(probs)), 0, fields[layout->patient], {}};
            const auto label = parse_int(fields[layout->label]);
            if (label < 0 || label >= ds.num_classes) {
                throw DataError("label " + std::to_string(label) + " outside 0.." +
                                std::to_string(ds.num_classes - 1));
            }
            rec.label = static_cast<Label>(label);
            for (const auto& [name, col] : layout->groups) rec.group.emplace(name, fields[col]);
            validate(rec);
            ds.records.push_back(std::move(rec));
        } catch (const DataError& e) {
            fail_at(source, line_no, e.what());
        }
    }
    if (!layout) throw DataError(std::string(source) + ": missing header row");
    return ds;
}

Dataset load_records(const std::string& path) {
    return parse_records(read_file(path), path);
}

std::string format_records(const Dataset& ds) {
    std::string out = "patient_id,label";
    for (int k = 0; k < ds.num_classes; ++k) out += ",p" + std::to_string(k);
    for (const auto& g : ds.group_columns) out += "," + g;
    out += '\n';
    for (const auto& rec : ds.records) {
        out += rec.patient_id;
        out += ',' + std::to_string(rec.label);
        for (int k = 0; k < ds.num_classes; ++k) out += ',' + format_double(rec.scores[k]);
        for (const auto& g : ds.group_columns) {
            auto it = rec.group.find(g);
            out += ',';
            if (it != rec.group.end()) out += it->second;
        }
        out += '\n';
    }
    return out;
}

void save_records(const Dataset& ds, const std::string& path) {
    write_file_atomically(path, format_records(ds));
}

void validate(const SyntheticSpec& spec) {
    if (spec.num_classes < 2) throw std::invalid_argument("synthetic K must be >= 2");
    if (spec.n_patients < 1) throw std::invalid_argument("synthetic data needs at least one patient");
    if (spec.gradings_per_patient < 1) throw std::invalid_argument("gradings_per_patient must be >= 1");
    if (spec.concentration.size() != static_cast<std::size_t>(spec.num_classes)) {
        throw std::invalid_argument("concentration needs " + std::to_string(spec.num_classes) + " entries");
    }
    for (double c : spec.concentration) {
        if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("concentration entries must be > 0");
    }
    if (spec.temperature && !(*spec.temperature > 0.0 && std::isfinite(*spec.temperature))) {
        throw std::invalid_argument("temperature must be > 0");
    }
}

Eigen::VectorXd temper(const Eigen::Ref<const Eigen::VectorXd>& pi, double temperature) {
    Eigen::VectorXd out = pi.array().pow(1.0 / temperature).matrix();
    return out / out.sum();
}

namespace {

Eigen::VectorXd draw_dirichlet(std::mt19937_64& rng, const std::vector<double>& concentration) {
    Eigen::VectorXd pi(static_cast<Eigen::Index>(concentration.size()));
    // A gamma draw can underflow to zero for small shapes; redraw in that case.
    do {
        for (std::size_t k = 0; k < concentration.size(); ++k) {
            std::gamma_distribution<double> gamma(concentration[k], 1.0);
            pi[static_cast<Eigen::Index>(k)] = gamma(rng);
        }
    } while (!(pi.sum() > 0.0));
    return pi / pi.sum();
}

Label draw_label(std::mt19937_64& rng, const Eigen::VectorXd& pi) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cum = 0.0;
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
        cum += pi[k];
        if (u < cum) return static_cast<Label>(k);
    }
    // u landed in the rounding gap above the last partial sum.
    Eigen::Index last = pi.size() - 1;
    while (last > 0 && pi[last] == 0.0) --last;
    return static_cast<Label>(last);
}

std::string patient_name(std::size_t index, std::size_t n_patients) {
    const auto width = std::to_string(n_patients).size();
    std::string digits = std::to_string(index + 1);
    return "P" + std::string(width - digits.size(), '0') + digits;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    SyntheticData out;
    auto& ds = out.dataset;
    ds.num_classes = spec.num_classes;
    ds.group_columns = {"disc_level", "task"};
    std::ostringstream prov;
    prov << "synthetic:seed=" << spec.seed;
    ds.provenance = prov.str();

    std::mt19937_64 rng(spec.seed);
    const std::size_t total = spec.n_patients * spec.gradings_per_patient;
    ds.records.reserve(total);
    out.true_conditionals.reserve(total);
    for (std::size_t p = 0; p < spec.n_patients; ++p) {
        const std::string id = patient_name(p, spec.n_patients);
        Eigen::VectorXd shared;
        if (spec.shared_per_patient) shared = draw_dirichlet(rng, spec.concentration);
        for (std::size_t g = 0; g < spec.gradings_per_patient; ++g) {
            Eigen::VectorXd pi = spec.shared_per_patient ? shared : draw_dirichlet(rng, spec.concentration);
            const Label label = draw_label(rng, pi);
            Eigen::VectorXd scores = spec.temperature ? temper(pi, *spec.temperature) : pi;
            GradingRecord rec{ScoreVector(scores), label, id, {}};
            rec.group.emplace("disc_level", kDiscLevels[g % kDiscLevels.size()]);
            rec.group.emplace("task", kTasks[(g / kDiscLevels.size()) % kTasks.size()]);
            ds.records.push_back(std::move(rec));
            out.true_conditionals.push_back(std::move(pi));
        }
    }
    return out;
}

std::string format_truth(const SyntheticData& data) {
    const auto& ds = data.dataset;
    std::string out = "row,patient_id";
    for (int k = 0; k < ds.num_classes; ++k) out += ",pi" + std::to_string(k);
    out += '\n';
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        out += std::to_string(i) + ',' + ds.records[i].patient_id;
        for (int k = 0; k < ds.num_classes; ++k) out += ',' + format_double(data.true_conditionals[i][k]);
        out += '\n';
    }
    return out;
}

std::vector<std::string> patient_ids(const Dataset& ds) {
    std::vector<std::string> ids;
    std::unordered_map<std::string_view, bool> seen;
    for (const auto& rec : ds.records) {
        if (seen.emplace(rec.patient_id, true).second) ids.push_back(rec.patient_id);
    }
    return ids;
}

std::size_t calibration_patient_count(std::size_t n_patients, double cal_fraction) {
    const auto wanted = static_cast<std::size_t>(std::ceil(cal_fraction * static_cast<double>(n_patients) - 1e-9));
    return std::clamp<std::size_t>(wanted, 1, n_patients - 1);
}

PatientSplit split_by_patient(const Dataset& ds, double cal_fraction, std::uint64_t seed) {
    if (!(cal_fraction > 0.0 && cal_fraction < 1.0)) {
        throw std::invalid_argument("cal_fraction must lie strictly between 0 and 1");
    }
    auto ids = patient_ids(ds);
    if (ids.size() < 2) throw DataError("patient-level split needs at least 2 patients, got " +
                                        std::to_string(ids.size()));
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::size_t n_cal = calibration_patient_count(ids.size(), cal_fraction);

    std::unordered_map<std::string_view, bool> is_cal;
    for (std::size_t i = 0; i < ids.size(); ++i) is_cal.emplace(ids[i], i < n_cal);
    PatientSplit split;
    split.calibration_patients.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_cal));
    for (std::size_t r = 0; r < ds.records.size(); ++r) {
        (is_cal.at(ds.records[r].patient_id) ? split.calibration : split.evaluation).push_back(r);
    }
    return split;
}

}  // namespace ocp
