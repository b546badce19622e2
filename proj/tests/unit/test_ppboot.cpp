#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <ppboot/baselines.hpp>
#include <ppboot/ppboot.hpp>

#include "reference_oracle.hpp"

using namespace ppboot;

namespace {

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

Matrix column(const std::vector<double>& v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

struct Problem {
    LabeledDataset labeled;
    UnlabeledDataset unlabeled;
};

// Two features (binary exposure, Gaussian covariate), binary or continuous
// outcome, predictions correlated with the outcome.
Problem make_problem(std::size_t n, std::size_t N, bool binary, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d;
    std::bernoulli_distribution coin(0.5);
    auto draw = [&](std::size_t rows, Matrix& x, std::vector<double>& y, std::vector<double>& f) {
        x.resize(static_cast<Eigen::Index>(rows), 2);
        y.resize(rows);
        f.resize(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            x(r, 0) = coin(gen);
            x(r, 1) = d(gen);
            const double latent = 0.8 * x(r, 1) + 0.7 * x(r, 0) - 0.3 + d(gen);
            y[i] = binary ? (latent > 0 ? 1.0 : 0.0) : latent;
            const double noisy = latent + 0.5 * d(gen);
            f[i] = binary ? (noisy > 0 ? 1.0 : 0.0) : noisy;
        }
    };
    Matrix xl;
    Matrix xu;
    std::vector<double> y;
    std::vector<double> f;
    std::vector<double> yu;
    std::vector<double> fu;
    draw(n, xl, y, f);
    draw(N, xu, yu, fu);
    return {LabeledDataset(xl, y, f), UnlabeledDataset(xu, fu)};
}

std::vector<EstimandSpec> all_estimands() {
    return {EstimandSpec::mean(),      EstimandSpec::quantile(0.5),     EstimandSpec::ols_coef(1),
            EstimandSpec::logistic_coef(1), EstimandSpec::log_odds_ratio(0), EstimandSpec::pearson_corr(1)};
}

bool binary_estimand(const EstimandSpec& s) {
    return std::holds_alternative<LogisticCoefEstimand>(s.kind) || std::holds_alternative<LogOddsRatioEstimand>(s.kind);
}

} // namespace

TEST(PointEstimate, Examples) {
    const Matrix xl = column({0, 0});
    const Matrix xu = column({0, 0, 0, 0});
    const LabeledDataset lab(xl, {0, 1}, {1, 1});
    const UnlabeledDataset unl(xu, {1, 1, 1, 1});
    EXPECT_EQ(ppboot_point_estimate(lab, unl, EstimandSpec::mean(), 1.0), 0.5);
    EXPECT_EQ(ppboot_point_estimate(lab, unl, EstimandSpec::mean(), 0.0), 0.5);

    const LabeledDataset exact(column({1, 2, 3}), {1, 4, 2}, {1, 4, 2});
    const UnlabeledDataset other(column({1, 2, 3, 4}), {3, 3, 5, 7});
    EXPECT_EQ(ppboot_point_estimate(exact, other, EstimandSpec::mean(), 1.0), 4.5);
    EXPECT_EQ(ppboot_point_estimate(exact, other, EstimandSpec::mean(), 0.0), 7.0 / 3.0);
}

TEST(PpbootInterval, LambdaZeroIsClassicalBootstrapForEveryEstimand) {
    for (const auto& spec : all_estimands()) {
        const auto p = make_problem(80, 300, binary_estimand(spec), 17);
        BootstrapConfig cfg;
        cfg.B = 300;
        cfg.lambda_mode = FixedLambda{0.0};
        const RngStream stream(123);
        const auto pp = ppboot_interval(p.labeled, p.unlabeled, spec, cfg, stream);
        const auto cl = classical_bootstrap_interval(p.labeled, spec, cfg, stream);
        EXPECT_EQ(bits(pp.lower), bits(cl.lower)) << spec.name();
        EXPECT_EQ(bits(pp.upper), bits(cl.upper)) << spec.name();
        EXPECT_EQ(bits(pp.point_estimate), bits(cl.point_estimate)) << spec.name();
        EXPECT_EQ(pp.degenerate_iterations, cl.degenerate_iterations) << spec.name();
    }
}

TEST(PpbootInterval, PerfectPredictionsCollapseToUnlabeledBootstrap) {
    for (const auto& spec : all_estimands()) {
        auto p = make_problem(60, 200, binary_estimand(spec), 5);
        const LabeledDataset oracle = p.labeled.with_predictions(
            std::vector<double>(p.labeled.outcomes().begin(), p.labeled.outcomes().end()));
        BootstrapConfig cfg;
        cfg.B = 200;
        const RngStream stream(9);
        const auto draws = ppboot_draws(oracle, p.unlabeled, spec, 1.0, cfg, stream);
        // The same resamples, evaluated on the unlabeled predictions only.
        std::vector<double> expected;
        for (std::size_t b = 0; b < cfg.B; ++b) {
            for (int attempt = 0; attempt <= cfg.max_degenerate_retries; ++attempt) {
                const RngStream s = stream.child(Phase::main).child(b).child(static_cast<std::uint64_t>(attempt));
                const auto r = draw_resample(oracle.size(), p.unlabeled.size(), s);
                const auto y = evaluate(spec, SampleRef{oracle.features(), oracle.outcomes(), r.labeled_idx});
                const auto u = evaluate(spec, SampleRef{p.unlabeled.features(), p.unlabeled.predictions(), r.unlabeled_idx});
                if (y.usable() && u.usable()) {
                    expected.push_back(u.value);
                    break;
                }
            }
        }
        auto got = draws.values;
        std::sort(got.begin(), got.end());
        std::sort(expected.begin(), expected.end());
        ASSERT_EQ(got.size(), expected.size()) << spec.name();
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(bits(got[i]), bits(expected[i])) << spec.name();
    }
}

TEST(PpbootInterval, MatchesReferenceImplementation) {
    const Matrix xl = column({0, 1, 2, 3});
    const Matrix xu = column({0, 1, 2, 3, 4, 5, 6, 7});
    const std::vector<double> y{1.2, -0.4, 2.5, 0.7};
    const std::vector<double> f{1.0, 0.1, 2.0, 0.9};
    const std::vector<double> fu{0.3, 1.7, -0.2, 0.8, 1.1, 2.4, 0.0, 0.6};
    const LabeledDataset lab(xl, y, f);
    const UnlabeledDataset unl(xu, fu);
    BootstrapConfig cfg;
    cfg.B = 1000;
    cfg.alpha = 0.1;
    const RngStream stream(42);
    const auto ci = ppboot_interval(lab, unl, EstimandSpec::mean(), cfg, stream);
    const auto ref = oracle::ppboot(y, f, fu, 1.0, cfg.B, cfg.alpha, stream, oracle::mean);
    EXPECT_NEAR(ci.lower, ref.lower, 1e-12);
    EXPECT_NEAR(ci.upper, ref.upper, 1e-12);

    const auto median = ppboot_interval(lab, unl, EstimandSpec::quantile(0.5), cfg, stream);
    const auto ref_median = oracle::ppboot(y, f, fu, 1.0, cfg.B, cfg.alpha, stream,
                                           [](const std::vector<double>& v) { return oracle::nearest_rank(v, 0.5); });
    EXPECT_NEAR(median.lower, ref_median.lower, 1e-12);
    EXPECT_NEAR(median.upper, ref_median.upper, 1e-12);
}

TEST(PpbootInterval, EndpointsAreRetainedDraws) {
    const auto p = make_problem(50, 200, false, 3);
    BootstrapConfig cfg;
    cfg.B = 401;
    const RngStream stream(8);
    for (const auto& spec : {EstimandSpec::mean(), EstimandSpec::pearson_corr(1)}) {
        const auto ci = ppboot_interval(p.labeled, p.unlabeled, spec, cfg, stream);
        const auto draws = ppboot_draws(p.labeled, p.unlabeled, spec, 1.0, cfg, stream);
        EXPECT_LE(ci.lower, ci.upper);
        EXPECT_NE(std::find(draws.values.begin(), draws.values.end(), ci.lower), draws.values.end());
        EXPECT_NE(std::find(draws.values.begin(), draws.values.end(), ci.upper), draws.values.end());
    }
}

TEST(PpbootInterval, IndependentOfThreadCount) {
    for (const auto& spec : all_estimands()) {
        const auto p = make_problem(70, 250, binary_estimand(spec), 21);
        BootstrapConfig cfg;
        cfg.B = 200;
        cfg.lambda_mode = TunedLambda{};
        const auto one = ppboot_interval(p.labeled, p.unlabeled, spec, cfg, RngStream(4));
        cfg.threads = 4;
        const auto four = ppboot_interval(p.labeled, p.unlabeled, spec, cfg, RngStream(4));
        EXPECT_EQ(bits(one.lower), bits(four.lower)) << spec.name();
        EXPECT_EQ(bits(one.upper), bits(four.upper)) << spec.name();
        EXPECT_EQ(bits(one.lambda_used), bits(four.lambda_used)) << spec.name();
    }
}

TEST(PpbootInterval, ShiftEquivariantForMean) {
    const auto p = make_problem(40, 160, false, 2);
    auto shift = [](std::span<const double> v, double c) {
        std::vector<double> out(v.begin(), v.end());
        for (auto& x : out) x += c;
        return out;
    };
    const LabeledDataset lab(p.labeled.features(), shift(p.labeled.outcomes(), 10.0), shift(p.labeled.predictions(), 10.0));
    const UnlabeledDataset unl(p.unlabeled.features(), shift(p.unlabeled.predictions(), 10.0));
    BootstrapConfig cfg;
    cfg.B = 300;
    const auto base = ppboot_interval(p.labeled, p.unlabeled, EstimandSpec::mean(), cfg, RngStream(6));
    const auto moved = ppboot_interval(lab, unl, EstimandSpec::mean(), cfg, RngStream(6));
    EXPECT_NEAR(moved.lower, base.lower + 10.0, 1e-12);
    EXPECT_NEAR(moved.upper, base.upper + 10.0, 1e-12);
}

TEST(PpbootInterval, DegenerateResamplesAreRetried) {
    // One exposed row in six: about a third of the resamples have a constant
    // feature column and no correlation.
    const Matrix x = column({0, 0, 0, 0, 0, 1});
    const LabeledDataset lab(x, {1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 7});
    const UnlabeledDataset unl(column({0, 1, 0, 1, 0, 1, 1, 0}), {1, 2, 3, 4, 5, 6, 7, 8});
    BootstrapConfig cfg;
    cfg.B = 200;
    cfg.max_degenerate_retries = 0;
    const auto no_retry = ppboot_draws(lab, unl, EstimandSpec::pearson_corr(0), 1.0, cfg, RngStream(1));
    cfg.max_degenerate_retries = 10;
    const auto retry = ppboot_draws(lab, unl, EstimandSpec::pearson_corr(0), 1.0, cfg, RngStream(1));
    EXPECT_GT(no_retry.degenerate_iterations, 30u);
    EXPECT_EQ(no_retry.values.size() + no_retry.degenerate_iterations, 200u);
    EXPECT_LT(retry.degenerate_iterations, 3u);
}

TEST(PpbootInterval, TooFewUsableDrawsIsBootstrapFailure) {
    BootstrapDraws draws;
    draws.values = {1, 2, 3};
    draws.degenerate_iterations = 7;
    EXPECT_THROW(detail::percentile_interval(draws, 10, 0.1), BootstrapFailure);
    draws.values = {1, 2, 3, 4, 5};
    EXPECT_NO_THROW(detail::percentile_interval(draws, 10, 0.1));
}

TEST(PpbootInterval, DegenerateOriginalDataThrows) {
    const LabeledDataset lab(column({1, 1, 1}), {1, 2, 3}, {1, 2, 3});
    const UnlabeledDataset unl(column({1, 2, 3}), {1, 2, 3});
    EXPECT_THROW(ppboot_interval(lab, unl, EstimandSpec::pearson_corr(0), BootstrapConfig{}, RngStream(0)),
                 DegenerateError);
}

TEST(BootstrapConfig, Validation) {
    BootstrapConfig cfg;
    cfg.B = 1;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg.B = 10;
    cfg.alpha = 1.0;
    EXPECT_THROW(cfg.validate(), ArgumentError);
    cfg.alpha = 0.1;
    cfg.tuning_B = 1;
    EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(TuneLambda, PureNoisePredictionsGiveSmallLambda) {
    std::mt19937_64 gen(100);
    std::bernoulli_distribution y_dist(0.3);
    std::normal_distribution<double> noise;
    const std::size_t n = 200;
    const std::size_t N = 2000;
    std::vector<double> y(n);
    std::vector<double> f(n);
    std::vector<double> fu(N);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = y_dist(gen);
        f[i] = noise(gen);
    }
    for (auto& v : fu) v = noise(gen);
    const LabeledDataset lab(Matrix::Zero(static_cast<Eigen::Index>(n), 1), y, f);
    const UnlabeledDataset unl(Matrix::Zero(static_cast<Eigen::Index>(N), 1), fu);
    const double lambda = tune_lambda(lab, unl, EstimandSpec::mean(), 500, RngStream(1));
    EXPECT_LT(std::fabs(lambda), 0.15);
}

TEST(TuneLambda, PerfectPredictionsWithLargeUnlabeledSetGiveLambdaNearOne) {
    std::mt19937_64 gen(7);
    std::bernoulli_distribution y_dist(0.3);
    const std::size_t n = 50;
    const std::size_t N = 5000;
    std::vector<double> y(n);
    std::vector<double> fu(N);
    for (auto& v : y) v = y_dist(gen);
    for (auto& v : fu) v = y_dist(gen);
    const LabeledDataset lab(Matrix::Zero(static_cast<Eigen::Index>(n), 1), y, y);
    const UnlabeledDataset unl(Matrix::Zero(static_cast<Eigen::Index>(N), 1), fu);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const double lambda = tune_lambda(lab, unl, EstimandSpec::mean(), 1000, RngStream(seed));
        EXPECT_GE(lambda, 0.9);
        EXPECT_LE(lambda, 1.0);
    }
}

TEST(TuneLambda, ConstantPredictionsGiveZero) {
    const LabeledDataset lab(column({1, 2, 3, 4}), {0.5, 1.5, -1.0, 2.0}, {3, 3, 3, 3});
    const UnlabeledDataset unl(column({1, 2, 3, 4, 5}), {3, 3, 3, 3, 3});
    EXPECT_EQ(tune_lambda(lab, unl, EstimandSpec::mean(), 100, RngStream(2)), 0.0);
}

TEST(TuneLambda, TunedIntervalRecordsLambdaAndClips) {
    const auto p = make_problem(60, 120, false, 11);
    BootstrapConfig cfg;
    cfg.B = 200;
    cfg.lambda_mode = TunedLambda{};
    const auto ci = ppboot_interval(p.labeled, p.unlabeled, EstimandSpec::mean(), cfg, RngStream(3));
    EXPECT_EQ(ci.lambda_used, tune_lambda(p.labeled, p.unlabeled, EstimandSpec::mean(), 200, RngStream(3)));

    // Predictions anti-aligned with the outcome push lambda below zero.
    std::vector<double> flipped(p.labeled.predictions().begin(), p.labeled.predictions().end());
    for (auto& v : flipped) v = -v;
    std::vector<double> flipped_u(p.unlabeled.predictions().begin(), p.unlabeled.predictions().end());
    for (auto& v : flipped_u) v = -v;
    const auto lab = p.labeled.with_predictions(flipped);
    const auto unl = p.unlabeled.with_predictions(flipped_u);
    EXPECT_LT(tune_lambda(lab, unl, EstimandSpec::mean(), 200, RngStream(3)), 0.0);
    cfg.clip_lambda = true;
    EXPECT_EQ(resolve_lambda(lab, unl, EstimandSpec::mean(), cfg, RngStream(3)), 0.0);
}

TEST(ReportScale, TransformsAndClips) {
    ConfidenceInterval ci;
    ci.lower = 0.0;
    ci.upper = std::log(2.0);
    ci.point_estimate = 0.0;
    const auto odds = to_report_scale(ci, EstimandSpec::log_odds_ratio(0));
    EXPECT_EQ(odds.lower, 1.0);
    EXPECT_NEAR(odds.upper, 2.0, 1e-15);
    ci.lower = -1.2;
    ci.upper = 1.05;
    const auto corr = to_report_scale(ci, EstimandSpec::pearson_corr(0));
    EXPECT_EQ(corr.lower, -1.0);
    EXPECT_EQ(corr.upper, 1.0);
}
