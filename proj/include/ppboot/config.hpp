#pragma once

// JSON study configuration. See docs/study-config.md for the schema.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossfit.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "estimand.hpp"
#include "experiments.hpp"
#include "ppboot.hpp"

namespace ppboot {

struct CsvSource {
    std::string path;
    Schema schema;
};

using DataSource = std::variant<SyntheticSpec, CsvSource>;

struct StudySetup {
    DataSource data;
    TrialConfig trial;
};

namespace config_detail {

using nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ArgumentError(std::string("config field '") + key + "' has the wrong type");
    }
}

template <class T>
T require(const json& j, const char* key) {
    if (!j.contains(key)) throw ArgumentError(std::string("config is missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ArgumentError(std::string("config field '") + key + "' has the wrong type");
    }
}

inline Dgp parse_dgp(const json& j) {
    const auto kind = require<std::string>(j, "kind");
    if (kind == "gaussian_linear") {
        return GaussianLinearDgp{require<std::vector<double>>(j, "coef"), get_or(j, "noise_sd", 1.0),
                                 get_or(j, "intercept", 0.0)};
    }
    if (kind == "bernoulli_mean") return BernoulliMeanDgp{require<double>(j, "p")};
    if (kind == "binary_pair") {
        return BinaryPairDgp{require<double>(j, "p11"), require<double>(j, "p10"), require<double>(j, "p01"),
                             require<double>(j, "p00")};
    }
    if (kind == "logistic") return LogisticDgp{require<std::vector<double>>(j, "coef"), get_or(j, "intercept", 0.0)};
    throw ArgumentError("unknown dgp kind '" + kind + "'");
}

inline PredictionModel parse_prediction_model(const json& j) {
    const auto kind = require<std::string>(j, "kind");
    if (kind == "oracle") return OraclePredictions{};
    if (kind == "noisy_truth") return NoisyTruthPredictions{require<double>(j, "rho")};
    if (kind == "biased") return BiasedPredictions{require<double>(j, "offset"), get_or(j, "noise_sd", 0.0)};
    if (kind == "pure_noise") return PureNoisePredictions{};
    throw ArgumentError("unknown prediction model '" + kind + "'");
}

} // namespace config_detail

inline EstimandSpec parse_estimand(const nlohmann::json& j) {
    using namespace config_detail;
    const auto kind = require<std::string>(j, "kind");
    EstimandSpec spec;
    if (kind == "mean") {
        spec = EstimandSpec::mean();
    } else if (kind == "quantile") {
        spec = EstimandSpec::quantile(require<double>(j, "q"));
    } else if (kind == "ols_coef") {
        spec = EstimandSpec::ols_coef(get_or<std::size_t>(j, "target_index", 0), get_or(j, "intercept", true));
    } else if (kind == "logistic_coef") {
        spec = EstimandSpec::logistic_coef(get_or<std::size_t>(j, "target_index", 0), get_or(j, "intercept", true));
    } else if (kind == "log_odds_ratio") {
        spec = EstimandSpec::log_odds_ratio(get_or<std::size_t>(j, "exposure_column", 0));
    } else if (kind == "pearson_corr") {
        spec = EstimandSpec::pearson_corr(get_or<std::size_t>(j, "feature_column", 0));
    } else {
        throw ArgumentError("unknown estimand kind '" + kind + "'");
    }
    if (j.contains("report_transform")) spec.transform = parse_transform(require<std::string>(j, "report_transform"));
    return spec;
}

inline LearnerSpec parse_learner(const nlohmann::json& j) {
    using namespace config_detail;
    const auto kind = require<std::string>(j, "kind");
    if (kind == "linear") return LinearLearnerSpec{get_or(j, "intercept", true)};
    if (kind == "logistic") return LogisticLearnerSpec{get_or(j, "intercept", true), get_or(j, "output_labels", false)};
    if (kind == "knn") return KnnLearnerSpec{get_or<std::size_t>(j, "k", 5)};
    throw ArgumentError("unknown learner kind '" + kind + "'");
}

inline BootstrapConfig parse_bootstrap(const nlohmann::json& j) {
    using namespace config_detail;
    BootstrapConfig cfg;
    cfg.B = get_or<std::size_t>(j, "B", cfg.B);
    cfg.alpha = get_or(j, "alpha", cfg.alpha);
    if (j.contains("tuning_B")) cfg.tuning_B = require<std::size_t>(j, "tuning_B");
    cfg.max_degenerate_retries = get_or(j, "max_degenerate_retries", cfg.max_degenerate_retries);
    cfg.clip_lambda = get_or(j, "clip_lambda", cfg.clip_lambda);
    if (j.contains("lambda")) {
        const auto& l = j.at("lambda");
        if (l.is_number()) {
            cfg.lambda_mode = FixedLambda{l.get<double>()};
        } else if (l == "tuned") {
            cfg.lambda_mode = TunedLambda{};
        } else if (l == "untuned") {
            cfg.lambda_mode = UntunedLambda{};
        } else {
            throw ArgumentError("bootstrap.lambda must be a number, \"tuned\" or \"untuned\"");
        }
    }
    cfg.validate();
    return cfg;
}

namespace config_detail {

inline StudySetup parse_study(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ArgumentError("study config must be a JSON object");
    StudySetup setup;

    const json& data = j.contains("data") ? j.at("data") : throw ArgumentError("config is missing field 'data'");
    if (data.contains("synthetic")) {
        const json& s = data.at("synthetic");
        SyntheticSpec spec;
        spec.dgp = parse_dgp(s.at("dgp"));
        spec.predictions = parse_prediction_model(s.at("predictions"));
        spec.total_rows = require<std::size_t>(s, "total_rows");
        spec.validate();
        setup.data = spec;
    } else if (data.contains("csv")) {
        const json& c = data.at("csv");
        std::filesystem::path path = require<std::string>(c, "path");
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        setup.data = CsvSource{path.string(), Schema::from_json(c.at("schema"))};
    } else {
        throw ArgumentError("config data must contain 'synthetic' or 'csv'");
    }

    TrialConfig& t = setup.trial;
    t.estimand = parse_estimand(j.at("estimand"));
    t.n_grid = require<std::vector<std::size_t>>(j, "n_grid");
    t.trials = get_or<std::size_t>(j, "trials", 100);
    for (const auto& name : require<std::vector<std::string>>(j, "methods")) t.methods.push_back(parse_method(name));
    if (j.contains("bootstrap")) t.bootstrap = parse_bootstrap(j.at("bootstrap"));
    if (j.contains("crossfit")) {
        const json& c = j.at("crossfit");
        t.crossfit.K = get_or<std::size_t>(c, "K", t.crossfit.K);
        if (c.contains("learner")) t.crossfit.learner = parse_learner(c.at("learner"));
        t.crossfit.train_fraction = get_or(c, "train_fraction", t.crossfit.train_fraction);
    }
    t.displayed_trials = get_or<std::size_t>(j, "displayed_trials", t.displayed_trials);
    if (j.contains("display_n")) t.display_n = require<std::size_t>(j, "display_n");
    return setup;
}

} // namespace config_detail

// Relative CSV paths are resolved against `base_dir`.
inline StudySetup parse_study_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    try {
        return config_detail::parse_study(j, base_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("malformed study config: ") + e.what());
    }
}

inline StudySetup load_study_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_study_config(j, std::filesystem::path(path).parent_path());
}

// Materializes the study's full dataset.
inline LabeledDataset load_study_data(const DataSource& source, std::uint64_t master_seed) {
    if (const auto* s = std::get_if<SyntheticSpec>(&source)) return generate_synthetic(*s, RngStream(master_seed));
    const auto& c = std::get<CsvSource>(source);
    return load_labeled(read_csv_file(c.path), c.schema);
}

} // namespace ppboot
