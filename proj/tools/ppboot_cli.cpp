// ppboot: command-line front end.
//
//   ppboot infer --labeled L.csv --unlabeled U.csv --schema S.json --estimand mean ...
//   ppboot study --config study.json --out DIR --seed 1
//
// Exit codes: 0 success, 2 bad arguments, 3 bad data, 4 inference failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <ppboot/all.hpp>

#ifndef PPBOOT_VERSION
#define PPBOOT_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using ppboot::ArgumentError;

namespace {

struct InferOptions {
    std::string labeled;
    std::string unlabeled;
    std::string schema;
    std::string estimand;
    double q = 0.5;
    std::size_t target_index = 0;
    bool no_intercept = false;
    std::size_t exposure_column = 0;
    std::size_t feature_column = 0;
    std::string report_transform;
    double alpha = 0.1;
    std::size_t B = 1000;
    std::optional<std::uint64_t> seed;
    bool tune = false;
    std::optional<double> lambda;
    std::optional<std::size_t> tuning_B;
    bool clip_lambda = false;
    std::string method = "ppboot";
    std::optional<std::size_t> crossfit;
    std::string learner = "linear";
    std::size_t k = 5;
    unsigned threads = 1;
};

struct StudyOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

ppboot::EstimandSpec make_estimand(const InferOptions& o) {
    ppboot::EstimandSpec spec;
    if (o.estimand == "mean") {
        spec = ppboot::EstimandSpec::mean();
    } else if (o.estimand == "quantile") {
        spec = ppboot::EstimandSpec::quantile(o.q);
    } else if (o.estimand == "ols_coef") {
        spec = ppboot::EstimandSpec::ols_coef(o.target_index, !o.no_intercept);
    } else if (o.estimand == "logistic_coef") {
        spec = ppboot::EstimandSpec::logistic_coef(o.target_index, !o.no_intercept);
    } else if (o.estimand == "log_odds_ratio") {
        spec = ppboot::EstimandSpec::log_odds_ratio(o.exposure_column);
    } else if (o.estimand == "pearson_corr") {
        spec = ppboot::EstimandSpec::pearson_corr(o.feature_column);
    } else {
        throw ArgumentError("unknown estimand '" + o.estimand + "'");
    }
    if (!o.report_transform.empty()) spec.transform = ppboot::parse_transform(o.report_transform);
    return spec;
}

ppboot::LearnerSpec make_learner_spec(const InferOptions& o) {
    if (o.learner == "linear") return ppboot::LinearLearnerSpec{};
    if (o.learner == "logistic") return ppboot::LogisticLearnerSpec{};
    if (o.learner == "knn") return ppboot::KnnLearnerSpec{o.k};
    throw ArgumentError("unknown learner '" + o.learner + "'");
}

std::string require_path(const std::string& value, const char* flag) {
    if (value.empty()) throw ArgumentError(std::string("missing required flag ") + flag);
    return value;
}

int cmd_infer(const InferOptions& o) {
    require_path(o.labeled, "--labeled");
    require_path(o.schema, "--schema");
    if (o.estimand.empty()) throw ArgumentError("missing required flag --estimand");
    if (o.tune && o.lambda) throw ArgumentError("--tune and --lambda are mutually exclusive");
    if (o.method != "ppboot" && o.method != "classical" && o.method != "imputed" && o.method != "ppi-mean") {
        throw ArgumentError("unknown method '" + o.method + "'");
    }
    if (o.crossfit && o.method != "ppboot") throw ArgumentError("--crossfit applies to --method ppboot only");
    if (o.method != "classical") require_path(o.unlabeled, "--unlabeled");

    const ppboot::EstimandSpec spec = make_estimand(o);
    if (o.method == "ppi-mean" && !spec.is_mean()) throw ArgumentError("ppi-mean supports the mean estimand only");

    ppboot::BootstrapConfig cfg;
    cfg.B = o.B;
    cfg.alpha = o.alpha;
    cfg.tuning_B = o.tuning_B;
    cfg.clip_lambda = o.clip_lambda;
    cfg.threads = o.threads;
    if (o.tune) cfg.lambda_mode = ppboot::TunedLambda{};
    if (o.lambda) cfg.lambda_mode = ppboot::FixedLambda{*o.lambda};
    cfg.validate();
    std::unique_ptr<ppboot::Learner> learner;
    if (o.crossfit) learner = ppboot::make_learner(make_learner_spec(o));

    const std::uint64_t seed = o.seed.value_or(0);
    cfg.master_seed = seed;
    const ppboot::RngStream stream(seed);

    const ppboot::Schema schema = ppboot::Schema::from_file(o.schema);
    const ppboot::CsvTable labeled_table = ppboot::read_csv_file(o.labeled);
    std::optional<ppboot::CsvTable> unlabeled_table;
    if (!o.unlabeled.empty()) unlabeled_table = ppboot::read_csv_file(o.unlabeled);

    std::string method = o.method;
    ppboot::ConfidenceInterval ci;
    if (o.crossfit) {
        method = "cross-ppboot";
        const auto lab = ppboot::load_features_outcomes(labeled_table, schema);
        const ppboot::Matrix unl = ppboot::feature_matrix(*unlabeled_table, schema.features);
        ci = ppboot::cross_ppboot_interval(lab.features, lab.outcomes, unl, spec, cfg, *o.crossfit, *learner, stream);
    } else if (o.method == "classical") {
        auto lab = ppboot::load_features_outcomes(labeled_table, schema);
        std::vector<double> unused = lab.outcomes;
        const ppboot::LabeledDataset labeled(std::move(lab.features), std::move(lab.outcomes), std::move(unused));
        ci = ppboot::classical_bootstrap_interval(labeled, spec, cfg, stream);
    } else {
        const ppboot::LabeledDataset labeled = ppboot::load_labeled(labeled_table, schema);
        const ppboot::UnlabeledDataset unlabeled = ppboot::load_unlabeled(*unlabeled_table, schema.without_outcome());
        ppboot::require_matching_dims(labeled, unlabeled);
        if (o.method == "ppboot") {
            ci = ppboot::ppboot_interval(labeled, unlabeled, spec, cfg, stream);
        } else if (o.method == "imputed") {
            ci = ppboot::imputed_interval(unlabeled, spec, cfg, stream);
        } else {
            ci = ppboot::ppi_mean_interval(labeled, unlabeled, cfg.alpha);
        }
    }
    ci = ppboot::to_report_scale(ci, spec);

    nlohmann::ordered_json out;
    out["method"] = method;
    out["estimand"] = spec.name();
    out["lower"] = ci.lower;
    out["upper"] = ci.upper;
    out["point"] = ci.point_estimate;
    out["lambda_used"] = ci.lambda_used;
    out["B"] = cfg.B;
    out["alpha"] = cfg.alpha;
    out["seed"] = seed;
    out["degenerate_iterations"] = ci.degenerate_iterations;
    if (!o.seed) std::cerr << "warning: no --seed given, using seed 0\n";
    std::cout << out.dump(2) << '\n';
    return 0;
}

// Writes every file under a temporary name first, then renames them all, so
// a failure leaves no report files behind.
void write_all(const std::vector<std::pair<fs::path, std::string>>& files) {
    std::vector<fs::path> written;
    auto cleanup = [&] {
        std::error_code ignored;
        for (const auto& p : written) fs::remove(p, ignored);
    };
    for (const auto& [target, content] : files) {
        const fs::path tmp = target.string() + ".tmp";
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (f) written.push_back(tmp);
        if (f) f << content;
        if (!f) {
            cleanup();
            throw ArgumentError("cannot write '" + tmp.string() + "'");
        }
    }
    for (const auto& [target, content] : files) fs::rename(target.string() + ".tmp", target);
}

int cmd_study(const StudyOptions& o) {
    require_path(o.config, "--config");
    require_path(o.out, "--out");
    if (!o.seed) throw ArgumentError("study mode requires --seed");

    std::ifstream in(o.config);
    if (!in) throw ArgumentError("cannot open config file '" + o.config + "'");
    nlohmann::ordered_json echo;
    try {
        echo = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError("config file '" + o.config + "' is not valid JSON: " + e.what());
    }
    ppboot::StudySetup setup =
        ppboot::parse_study_config(nlohmann::json::parse(echo.dump()), fs::path(o.config).parent_path());
    setup.trial.master_seed = *o.seed;
    setup.trial.threads = o.threads;

    const ppboot::LabeledDataset data = ppboot::load_study_data(setup.data, *o.seed);
    const ppboot::TrialSummary summary = ppboot::run_coverage_study(data, setup.trial);
    const ppboot::ReportTables tables = ppboot::summarize_to_tables(summary);

    nlohmann::ordered_json manifest;
    manifest["version"] = PPBOOT_VERSION;
    manifest["seed"] = *o.seed;
    manifest["config"] = echo;
    manifest["outputs"] = {"aggregate.csv", "displayed.csv", "report.json"};

    const std::string aggregate = ppboot::aggregate_csv(tables.aggregate);
    const std::string displayed = ppboot::displayed_csv(tables.displayed);
    const std::string report = ppboot::tables_to_json(tables).dump(2) + "\n";
    const std::string manifest_text = manifest.dump(2) + "\n";

    const fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ArgumentError("cannot create output directory '" + o.out + "': " + ec.message());
    write_all({{dir / "aggregate.csv", aggregate},
               {dir / "displayed.csv", displayed},
               {dir / "report.json", report},
               {dir / "manifest.json", manifest_text}});
    return 0;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ppboot::ArgumentError*>(&e)) return 2;
    if (dynamic_cast<const ppboot::DataError*>(&e)) return 3;
    if (dynamic_cast<const ppboot::InferenceError*>(&e)) return 4;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
    return 4;
}

std::string one_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prediction-powered bootstrap inference"};
    app.set_version_flag("--version", PPBOOT_VERSION);
    app.require_subcommand(1);

    InferOptions io;
    auto* infer = app.add_subcommand("infer", "Confidence interval for one dataset");
    infer->add_option("--labeled", io.labeled, "Labeled CSV (outcome, features, prediction)");
    infer->add_option("--unlabeled", io.unlabeled, "Unlabeled CSV (features, prediction)");
    infer->add_option("--schema", io.schema, "Schema JSON mapping columns to roles");
    infer->add_option("--estimand", io.estimand,
                      "mean|quantile|ols_coef|logistic_coef|log_odds_ratio|pearson_corr");
    infer->add_option("--q", io.q, "Quantile level");
    infer->add_option("--target-index", io.target_index, "Coefficient index (regression estimands)");
    infer->add_flag("--no-intercept", io.no_intercept, "Fit regressions without an intercept");
    infer->add_option("--exposure-column", io.exposure_column, "Exposure feature index (log_odds_ratio)");
    infer->add_option("--feature-column", io.feature_column, "Feature index (pearson_corr)");
    infer->add_option("--report-transform", io.report_transform, "identity|exp|fisher_z_inverse");
    infer->add_option("--alpha", io.alpha, "Error level");
    infer->add_option("--B", io.B, "Bootstrap iterations");
    infer->add_option("--seed", io.seed, "Master seed (default 0)");
    infer->add_flag("--tune", io.tune, "Power-tune lambda");
    infer->add_option("--lambda", io.lambda, "Fixed lambda");
    infer->add_option("--tuning-B", io.tuning_B, "Pilot bootstrap iterations for --tune");
    infer->add_flag("--clip-lambda", io.clip_lambda, "Clamp a tuned lambda to [0, 1]");
    infer->add_option("--method", io.method, "ppboot|classical|imputed|ppi-mean");
    infer->add_option("--crossfit", io.crossfit, "Cross-fit predictions with K folds");
    infer->add_option("--learner", io.learner, "linear|logistic|knn");
    infer->add_option("--k", io.k, "Neighbours for the knn learner");
    infer->add_option("--threads", io.threads, "Worker threads");

    StudyOptions so;
    auto* study = app.add_subcommand("study", "Monte Carlo coverage study from a config file");
    study->add_option("--config", so.config, "Study config JSON");
    study->add_option("--out", so.out, "Output directory");
    study->add_option("--seed", so.seed, "Master seed");
    study->add_option("--threads", so.threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        if (io.threads == 0 || so.threads == 0) throw ArgumentError("--threads must be at least 1");
        if (infer->parsed()) return cmd_infer(io);
        return cmd_study(so);
    } catch (const std::exception& e) {
        std::cerr << "error: " << one_line(e.what()) << '\n';
        return exit_code_for(e);
    }
}
