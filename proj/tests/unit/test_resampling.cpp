#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <ppboot/normal.hpp>
#include <ppboot/resampling.hpp>

using namespace ppboot;

TEST(DrawResample, SingleRowEachSide) {
    const auto r = draw_resample(1, 1, RngStream(3));
    EXPECT_EQ(r.labeled_idx, std::vector<std::size_t>{0});
    EXPECT_EQ(r.unlabeled_idx, std::vector<std::size_t>{0});
}

TEST(DrawResample, DeterministicAndInBounds) {
    const auto a = draw_resample(13, 29, RngStream(4, {1, 2}));
    const auto b = draw_resample(13, 29, RngStream(4, {1, 2}));
    EXPECT_EQ(a.labeled_idx, b.labeled_idx);
    EXPECT_EQ(a.unlabeled_idx, b.unlabeled_idx);
    EXPECT_EQ(a.labeled_idx.size(), 13u);
    EXPECT_EQ(a.unlabeled_idx.size(), 29u);
    EXPECT_LT(*std::max_element(a.labeled_idx.begin(), a.labeled_idx.end()), 13u);
    EXPECT_LT(*std::max_element(a.unlabeled_idx.begin(), a.unlabeled_idx.end()), 29u);
}

TEST(DrawResample, LabeledSideIsIndependentOfUnlabeledSize) {
    EXPECT_EQ(draw_resample(8, 3, RngStream(1, {5})).labeled_idx, draw_resample(8, 300, RngStream(1, {5})).labeled_idx);
}

TEST(DrawResample, LabeledIndicesAreUniform) {
    const int draws = 10000;
    std::vector<int> counts(5);
    for (int b = 0; b < draws; ++b) {
        const auto r = draw_resample(5, 7, RngStream(77, {static_cast<std::uint64_t>(b)}));
        ++counts[r.labeled_idx[0]];
    }
    const double p = 0.2;
    const double se = std::sqrt(draws * p * (1 - p));
    for (int c : counts) EXPECT_LT(std::fabs(c - draws * p), 3 * se);
}

TEST(EmpiricalQuantile, Examples) {
    EXPECT_EQ(empirical_quantile(std::vector<double>{4, 4, 4, 4}, 0.01), 4.0);
    EXPECT_EQ(empirical_quantile(std::vector<double>{4, 4, 4, 4}, 0.99), 4.0);
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(10.0 * i);
    std::reverse(v.begin(), v.end());
    EXPECT_EQ(empirical_quantile(v, 0.05), 50.0);
    EXPECT_EQ(empirical_quantile(std::vector<double>{3, 1, 2}, 0.5), 2.0);
}

TEST(EmpiricalQuantile, NearIntegerRankIsNotRoundedUp) {
    // 0.07 * 100 evaluates to 7.000000000000001; the rank is still 7.
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    EXPECT_EQ(empirical_quantile(v, 0.07), 7.0);
    EXPECT_EQ(empirical_quantile(v, 0.071), 8.0);
}

TEST(EmpiricalQuantile, RejectsBadInput) {
    EXPECT_THROW(empirical_quantile(std::vector<double>{}, 0.5), ArgumentError);
    EXPECT_THROW(empirical_quantile(std::vector<double>{1}, 0.0), ArgumentError);
}

// Reference values from scipy.stats.norm.ppf.
TEST(NormalQuantile, MatchesReference) {
    EXPECT_NEAR(normal_quantile(0.75), 0.6744897501960817, 1e-14);
    EXPECT_NEAR(normal_quantile(0.9), 1.2815515655446004, 1e-14);
    EXPECT_NEAR(normal_quantile(0.95), 1.6448536269514722, 1e-14);
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
    EXPECT_NEAR(normal_quantile(0.995), 2.5758293035489004, 1e-14);
    EXPECT_NEAR(normal_quantile(0.3), -0.5244005127080409, 1e-14);
    EXPECT_NEAR(normal_quantile(0.02425), -1.972961051311885, 1e-13);
    EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-12);
    EXPECT_NEAR(normal_quantile(1 - 1e-12), 7.0344869100478356, 1e-8);
    EXPECT_EQ(normal_quantile(0.5), 0.0);
}

TEST(NormalQuantile, InvertsCdf) {
    for (double p = 0.01; p < 1.0; p += 0.01) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14);
}
