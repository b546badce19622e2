#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <ppboot/csv.hpp>
#include <ppboot/dataset.hpp>

using namespace ppboot;

namespace {

const std::string fixtures = PPBOOT_FIXTURES;

LabeledDataset counting_dataset(std::size_t total) {
    Matrix x(static_cast<Eigen::Index>(total), 1);
    std::vector<double> y(total);
    for (std::size_t i = 0; i < total; ++i) {
        x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
        y[i] = static_cast<double>(i);
    }
    return LabeledDataset(x, y, y);
}

} // namespace

TEST(Csv, LoadsThreeRowLabeledFile) {
    const auto schema = Schema::from_file(fixtures + "/schema_small.json");
    const auto data = load_labeled(read_csv_file(fixtures + "/labeled_small.csv"), schema);
    EXPECT_EQ(data.size(), 3u);
    EXPECT_EQ(data.dims(), 1u);
    EXPECT_EQ(data.outcomes()[1], 3.5);
    EXPECT_EQ(data.predictions()[2], 5.2);
    EXPECT_EQ(data.features()(0, 0), 1.0);
}

TEST(Csv, BadCellNamesRow) {
    const auto schema = Schema::from_file(fixtures + "/schema_small.json");
    const auto table = read_csv_file(fixtures + "/labeled_bad_cell.csv");
    try {
        load_labeled(table, schema);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
    }
}

TEST(Csv, LoadsUnlabeledFile) {
    const auto schema = Schema::from_file(fixtures + "/schema_unlabeled.json");
    const auto loaded = load_csv(fixtures + "/unlabeled_small.csv", schema);
    ASSERT_TRUE(std::holds_alternative<UnlabeledDataset>(loaded));
    const auto& data = std::get<UnlabeledDataset>(loaded);
    EXPECT_EQ(data.size(), 5u);
    EXPECT_EQ(data.dims(), 2u);
    EXPECT_EQ(data.features()(4, 1), 0.6);
}

TEST(Csv, QuotingBomAndCrlf) {
    const auto t = parse_csv("\xEF\xBB\xBF" "a,\"b, c\"\r\n1,\"say \"\"hi\"\"\"\r\n2,3\r\n");
    ASSERT_EQ(t.header.size(), 2u);
    EXPECT_EQ(t.header[1], "b, c");
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][1], "say \"hi\"");
    EXPECT_EQ(t.rows[1][0], "2");
}

TEST(Csv, RaggedRowIsParseError) { EXPECT_THROW(parse_csv("a,b\n1,2\n3\n"), ParseError); }

TEST(Csv, NonFiniteValueIsValidationError) {
    const auto t = parse_csv("x,y,fhat\n1,nan,1\n2,1,1\n");
    EXPECT_THROW(load_labeled(t, Schema{"y", "fhat", {"x"}}), ValidationError);
}

TEST(Csv, SchemaProblems) {
    EXPECT_THROW(Schema::from_json(nlohmann::json{{"outcome", "y"}, {"bogus", 1}}), SchemaError);
    EXPECT_THROW(Schema::from_json(nlohmann::json{{"features", "x"}}), SchemaError);
    const auto t = parse_csv("x,y\n1,2\n3,4\n");
    EXPECT_THROW(load_labeled(t, Schema{"y", "fhat", {"x"}}), SchemaError);
    EXPECT_THROW(load_labeled(t, Schema{std::nullopt, "y", {"x"}}), SchemaError);
}

TEST(Dataset, ValidatesShapes) {
    Matrix x(3, 1);
    x << 1, 2, 3;
    EXPECT_THROW(LabeledDataset(x, {1, 2}, {1, 2, 3}), ValidationError);
    Matrix one(1, 1);
    one << 1;
    EXPECT_THROW(LabeledDataset(one, {1}, {1}), ValidationError);
    EXPECT_THROW(LabeledDataset(x, {1, std::numeric_limits<double>::infinity(), 3}, {1, 2, 3}), ValidationError);
    EXPECT_THROW(UnlabeledDataset(x, {1, 2}), ValidationError);
    const LabeledDataset ok(x, {1, 2, 3}, {1, 2, 3});
    Matrix two(3, 2);
    two.setZero();
    EXPECT_THROW(require_matching_dims(ok, UnlabeledDataset(two, {0, 0, 0})), ValidationError);
}

TEST(SplitTrial, PartitionsRows) {
    const auto full = counting_dataset(10);
    const auto split = split_trial(full, 4, RngStream(1, {0}));
    EXPECT_EQ(split.labeled.size(), 4u);
    EXPECT_EQ(split.unlabeled.size(), 6u);
    std::vector<std::size_t> all = split.labeled_rows;
    all.insert(all.end(), split.unlabeled_rows.begin(), split.unlabeled_rows.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(10);
    std::iota(expected.begin(), expected.end(), std::size_t{0});
    EXPECT_EQ(all, expected);
    EXPECT_TRUE(std::is_sorted(split.labeled_rows.begin(), split.labeled_rows.end()));
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(split.labeled.outcomes()[i], static_cast<double>(split.labeled_rows[i]));
    }
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(split.unlabeled.predictions()[i], static_cast<double>(split.unlabeled_rows[i]));
    }
}

TEST(SplitTrial, Deterministic) {
    const auto full = counting_dataset(50);
    const auto a = split_trial(full, 20, RngStream(9, {3}));
    const auto b = split_trial(full, 20, RngStream(9, {3}));
    const auto c = split_trial(full, 20, RngStream(9, {4}));
    EXPECT_EQ(a.labeled_rows, b.labeled_rows);
    EXPECT_NE(a.labeled_rows, c.labeled_rows);
}

TEST(SplitTrial, TooFewUnlabeledRowsIsArgumentError) {
    const auto full = counting_dataset(10);
    EXPECT_THROW(split_trial(full, 9, RngStream(0)), ArgumentError);
    EXPECT_THROW(split_trial(full, 1, RngStream(0)), ArgumentError);
    EXPECT_NO_THROW(split_trial(full, 8, RngStream(0)));
}

TEST(SplitTrial, EveryRowEquallyLikely) {
    const std::size_t total = 20;
    const std::size_t n = 5;
    const int reps = 4000;
    const auto full = counting_dataset(total);
    std::vector<int> hits(total);
    for (int r = 0; r < reps; ++r) {
        for (std::size_t row : split_trial(full, n, RngStream(2, {static_cast<std::uint64_t>(r)})).labeled_rows) {
            ++hits[row];
        }
    }
    const double p = static_cast<double>(n) / total;
    const double se = std::sqrt(reps * p * (1 - p));
    for (int h : hits) EXPECT_LT(std::fabs(h - reps * p), 3.5 * se);
}
