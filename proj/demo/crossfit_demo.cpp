// Cross-fitting versus data splitting when no pre-trained model exists.
// A linear learner is fitted on the labeled rows; the estimand is the mean
// outcome of a Gaussian linear model.
//
//   crossfit_demo [seed] [trials]

#include <cstdio>
#include <cstdlib>

#include <ppboot/all.hpp>

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
    const std::size_t trials = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 30;

    ppboot::SyntheticSpec spec;
    spec.dgp = ppboot::GaussianLinearDgp{{1.0, -0.5, 0.25}, 1.0, 0.0};
    spec.predictions = ppboot::PureNoisePredictions{};
    spec.total_rows = 5000;
    const ppboot::LabeledDataset data = ppboot::generate_synthetic(spec, ppboot::RngStream(seed));

    ppboot::TrialConfig cfg;
    cfg.n_grid = {100, 200, 400};
    cfg.trials = trials;
    cfg.methods = {ppboot::Method::classical_bootstrap, ppboot::Method::cross_ppboot, ppboot::Method::split_ppboot};
    cfg.estimand = ppboot::EstimandSpec::mean();
    cfg.crossfit.K = 10;
    cfg.crossfit.learner = ppboot::LinearLearnerSpec{};
    cfg.master_seed = seed;
    cfg.threads = ppboot::default_thread_count();

    const ppboot::TrialSummary summary = ppboot::run_coverage_study(data, cfg);
    std::printf("true mean: %.4f\n\n", summary.ground_truth);
    std::printf("%-13s %5s %9s %11s\n", "method", "n", "coverage", "mean width");
    for (const auto& c : summary.cells) {
        std::printf("%-13s %5zu %9.3f %11.4f\n", c.method.c_str(), c.n, c.coverage, c.mean_width);
    }
    return 0;
}
