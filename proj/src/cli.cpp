#include "ordinal_conformal/cli.hpp"

#include "ordinal_conformal/calibrate.hpp"
#include "ordinal_conformal/data.hpp"
#include "ordinal_conformal/eval.hpp"
#include "ordinal_conformal/io.hpp"
#include "ordinal_conformal/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>

namespace ocp::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<MethodKind> methods_for(const std::string& name, bool allow_all) {
    if (name == "all") {
        if (!allow_all) throw UsageError("--method all is only valid for evaluate");
        return {MethodKind::OrdinalApsGreedy, MethodKind::Lac, MethodKind::OrdinalCdf};
    }
    if (name != "aps" && name != "lac" && name != "cdf") {
        throw UsageError("--method must be one of aps, lac, cdf" + std::string(allow_all ? ", all" : ""));
    }
    return {parse_method(name)};
}

Alpha alpha_flag(double value) {
    if (!(value > 0.0 && value < 1.0)) throw UsageError("alpha must lie strictly between 0 and 1");
    return Alpha(value);
}

std::vector<Alpha> alpha_grid_flag(const std::vector<double>& values) {
    if (values.empty()) return default_alpha_grid();
    std::set<double> seen;
    std::vector<Alpha> grid;
    for (double v : values) {
        if (!seen.insert(v).second) throw UsageError("--alpha-grid entries must be distinct");
        grid.push_back(alpha_flag(v));
    }
    return grid;
}

std::vector<Stratification> strata_flag(const std::vector<std::string>& names, const Dataset& ds) {
    std::vector<Stratification> out;
    if (names.empty()) {
        out.push_back(Stratification::true_class());
        out.push_back(Stratification::set_size());
        for (const auto& g : ds.group_columns) out.push_back(Stratification::group(g));
        return out;
    }
    for (const auto& n : names) {
        if (n == "none") continue;
        if (n == "true_class") out.push_back(Stratification::true_class());
        else if (n == "set_size") out.push_back(Stratification::set_size());
        else out.push_back(Stratification::group(n));
    }
    return out;
}

std::string join(const std::vector<Label>& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(labels[i]);
    }
    return out;
}

std::string format_predictions(const Dataset& ds, const CalibratedPredictor& predictor) {
    std::string out = "row,patient_id,label,lo,hi,size,covered,members\n";
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& rec = ds.records[i];
        const PredictionSet set = predict(predictor, rec.scores);
        const auto labels = members(set);
        out += std::to_string(i) + ',' + rec.patient_id + ',' + std::to_string(rec.label);
        out += ',' + std::to_string(labels.front()) + ',' + std::to_string(labels.back());
        out += ',' + std::to_string(set_size(set));
        out += contains(set, rec.label) ? ",1," : ",0,";
        out += join(labels) + '\n';
    }
    return out;
}

std::string format_ranking(const std::vector<PatientUncertainty>& ranking, std::size_t k) {
    std::string out = "rank,patient_id,mean_set_size,n_gradings,flagged\n";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto& p = ranking[i];
        out += std::to_string(i + 1) + ',' + p.patient_id + ',' + format_double(p.mean_set_size) + ',' +
               std::to_string(p.n_gradings) + (i < k ? ",1\n" : ",0\n");
    }
    return out;
}

void require_distinct_outputs(const std::vector<std::string>& paths) {
    std::set<std::string> seen;
    for (const auto& p : paths) {
        if (!seen.insert(p).second) throw UsageError("output path '" + p + "' given twice");
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ordinal conformal prediction sets: calibration, prediction and evaluation", "ordinal-conformal"};
    app.require_subcommand(1);

    std::string input, output, predictor_path, method = "aps";
    double alpha = 0.1;
    std::vector<double> alpha_grid;
    std::size_t trials = 100, threads = 1, k = 70;
    double cal_fraction = 0.05;
    std::uint64_t seed = 0;
    std::vector<std::string> strata;

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Calibrate a predictor on a dataset");
    calibrate_cmd->add_option("--input", input, "Grading-record CSV")->required();
    calibrate_cmd->add_option("--output", output, "Predictor file to write")->required();
    calibrate_cmd->add_option("--method", method, "aps | lac | cdf");
    calibrate_cmd->add_option("--alpha", alpha, "Target error rate");

    auto* predict_cmd = app.add_subcommand("predict", "Emit prediction sets for every row of a dataset");
    predict_cmd->add_option("--predictor", predictor_path, "Calibrated predictor file")->required();
    predict_cmd->add_option("--input", input, "Grading-record CSV")->required();
    predict_cmd->add_option("--output", output, "Prediction CSV (stdout if omitted)");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Repeated split-conformal trials over an alpha grid");
    evaluate_cmd->add_option("--input", input, "Grading-record CSV")->required();
    evaluate_cmd->add_option("--output", output, "Report prefix; writes <prefix>.csv and <prefix>.txt")->required();
    std::string eval_method = "all";
    evaluate_cmd->add_option("--method", eval_method, "aps | lac | cdf | all");
    evaluate_cmd->add_option("--alpha-grid", alpha_grid, "Error rates (default 0.2 0.15 0.1 0.05 0.01)")
        ->delimiter(',');
    evaluate_cmd->add_option("--alpha", alpha_grid, "Single error rate (alias of a one-entry grid)");
    evaluate_cmd->add_option("--trials", trials, "Number of random splits")->check(CLI::PositiveNumber);
    evaluate_cmd->add_option("--cal-fraction", cal_fraction, "Fraction of patients used for calibration");
    evaluate_cmd->add_option("--seed", seed, "Master seed");
    evaluate_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    evaluate_cmd->add_option("--strata", strata,
                             "Stratifications: true_class, set_size, a group column, or none "
                             "(default: all)")
        ->delimiter(',');

    auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic grading dataset");
    SyntheticSpec spec;
    std::vector<double> concentration;
    std::optional<double> temperature;
    bool shared = false;
    simulate_cmd->add_option("--output", output, "Dataset CSV; truth goes to <output>.truth.csv")->required();
    simulate_cmd->add_option("--classes", spec.num_classes, "Number of ordinal classes K");
    simulate_cmd->add_option("--patients", spec.n_patients, "Number of patients");
    simulate_cmd->add_option("--gradings", spec.gradings_per_patient, "Gradings per patient");
    simulate_cmd->add_option("--concentration", concentration, "Dirichlet concentration, K entries")
        ->delimiter(',');
    simulate_cmd->add_option("--temperature", temperature, "Score temperature t (scores ∝ pi^(1/t))");
    simulate_cmd->add_flag("--shared-patient", shared, "Draw one conditional per patient");
    simulate_cmd->add_option("--seed", seed, "Generator seed");

    auto* flag_cmd = app.add_subcommand("flag", "Rank patients by average set size and flag the top k");
    flag_cmd->add_option("--input", input, "Grading-record CSV")->required();
    flag_cmd->add_option("--predictor", predictor_path, "Calibrated predictor file")->required();
    flag_cmd->add_option("--k", k, "Number of patients to flag");
    flag_cmd->add_option("--output", output, "Ranking CSV");

    auto* fisher_cmd = app.add_subcommand("fisher", "Two-sided Fisher exact test on a 2x2 table");
    std::vector<std::uint64_t> counts;
    fisher_cmd->add_option("counts", counts, "a b c d")->expected(4)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (calibrate_cmd->parsed()) {
            const auto kind = methods_for(method, false).front();
            const Alpha a = alpha_flag(alpha);
            const Dataset ds = load_records(input);
            save_predictor(calibrate(kind, ds.records, a), output);
        } else if (predict_cmd->parsed()) {
            const CalibratedPredictor p = load_predictor(predictor_path);
            const Dataset ds = load_records(input);
            const std::string text = format_predictions(ds, p);
            if (output.empty()) out << text;
            else write_file_atomically(output, text);
        } else if (evaluate_cmd->parsed()) {
            const auto kinds = methods_for(eval_method, true);
            const auto grid = alpha_grid_flag(alpha_grid);
            if (!(cal_fraction > 0.0 && cal_fraction < 1.0)) {
                throw UsageError("--cal-fraction must lie strictly between 0 and 1");
            }
            const Dataset ds = load_records(input);
            TrialOptions options{trials, cal_fraction, seed, threads, strata_flag(strata, ds)};
            const auto reports = run_trials(ds, kinds, grid, options);
            const std::string csv = format_report_csv(reports);
            const std::string table = format_report_table(reports, trials);
            write_file_atomically(output + ".csv", csv);
            write_file_atomically(output + ".txt", table);
        } else if (simulate_cmd->parsed()) {
            if (!concentration.empty()) spec.concentration = concentration;
            else if (spec.num_classes != 4) spec.concentration.assign(static_cast<std::size_t>(spec.num_classes), 1.0);
            spec.temperature = temperature;
            spec.shared_per_patient = shared;
            spec.seed = seed;
            try {
                validate(spec);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const SyntheticData data = generate_synthetic(spec);
            const std::string truth_path = output + ".truth.csv";
            require_distinct_outputs({output, truth_path});
            write_file_atomically(output, format_records(data.dataset));
            write_file_atomically(truth_path, format_truth(data));
        } else if (flag_cmd->parsed()) {
            const CalibratedPredictor p = load_predictor(predictor_path);
            const Dataset ds = load_records(input);
            std::vector<PredictionSet> sets;
            sets.reserve(ds.records.size());
            for (const auto& rec : ds.records) sets.push_back(predict(p, rec.scores));
            const auto ranking = patient_uncertainty(sets, ds.records);
            if (k > ranking.size()) {
                throw UsageError("--k " + std::to_string(k) + " exceeds the " + std::to_string(ranking.size()) +
                                 " patients in the dataset");
            }
            const auto flagged = flag_top_k(ranking, k);
            if (!output.empty()) write_file_atomically(output, format_ranking(ranking, k));
            for (const auto& id : flagged) out << id << '\n';
        } else if (fisher_cmd->parsed()) {
            out << format_double(fisher_exact_2x2(counts[0], counts[1], counts[2], counts[3])) << '\n';
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

}  // namespace ocp::cli
