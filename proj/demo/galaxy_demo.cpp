// Coverage and width of several methods on a galaxy-like binary mean
// problem: 10000 objects, about a quarter of them spiral, and a classifier
// whose labels agree with the truth at correlation 0.9.
//
//   galaxy_demo [seed] [trials]

#include <cstdio>
#include <cstdlib>

#include <ppboot/all.hpp>

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2024;
    const std::size_t trials = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 50;

    ppboot::SyntheticSpec spec;
    spec.dgp = ppboot::BernoulliMeanDgp{0.26};
    spec.predictions = ppboot::NoisyTruthPredictions{0.9};
    spec.total_rows = 10000;
    const ppboot::LabeledDataset data = ppboot::generate_synthetic(spec, ppboot::RngStream(seed));

    ppboot::TrialConfig cfg;
    cfg.n_grid = {100, 200, 400};
    cfg.trials = trials;
    cfg.methods = {ppboot::Method::classical_bootstrap, ppboot::Method::imputed, ppboot::Method::ppboot,
                   ppboot::Method::ppi_mean};
    cfg.estimand = ppboot::EstimandSpec::mean();
    cfg.master_seed = seed;
    cfg.threads = ppboot::default_thread_count();

    const ppboot::TrialSummary summary = ppboot::run_coverage_study(data, cfg);
    std::printf("fraction of spiral galaxies: %.4f\n\n", summary.ground_truth);
    std::printf("%-10s %5s %9s %11s\n", "method", "n", "coverage", "mean width");
    for (const auto& c : summary.cells) {
        std::printf("%-10s %5zu %9.3f %11.4f\n", c.method.c_str(), c.n, c.coverage, c.mean_width);
    }
    return 0;
}
