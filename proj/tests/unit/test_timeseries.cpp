#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "causalad.hpp"

using namespace causalad;

namespace {

TimeSeriesMatrix parse(const std::string& text, CsvOptions opt = {}) {
    std::istringstream in(text);
    return parse_csv(in, opt);
}

}  // namespace

TEST(Csv, ParsesHeaderAndRows) {
    const auto m = parse("a,b\n1,2\n3,4\n5,6\n");
    ASSERT_EQ(m.rows(), 3u);
    ASSERT_EQ(m.cols(), 2u);
    EXPECT_EQ(m.names(), (std::vector<std::string>{"a", "b"}));
    EXPECT_DOUBLE_EQ(m(2, 1), 6.0);
}

TEST(Csv, DropRowPolicyRemovesNaNRows) {
    const auto m = parse("a,b\n1,2\n1,NaN\n5,6\n");
    ASSERT_EQ(m.rows(), 2u);
    EXPECT_DOUBLE_EQ(m(1, 0), 5.0);
}

TEST(Csv, ForwardFillCarriesLastValue) {
    CsvOptions opt;
    opt.nan_policy = NanPolicy::forward_fill;
    const auto m = parse("a,b\n1,2\n3,\n5,6\n", opt);
    ASSERT_EQ(m.rows(), 3u);
    EXPECT_DOUBLE_EQ(m(1, 1), 2.0);
}

TEST(Csv, DuplicateHeaderIsSchemaError) { EXPECT_THROW(parse("a,a\n1,2\n"), SchemaError); }

TEST(Csv, EmptyInputIsSchemaError) { EXPECT_THROW(parse(""), SchemaError); }

TEST(Csv, MalformedCellNamesLocation) {
    try {
        parse("a,b\n1,2\n3,x7\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("b"), std::string::npos) << msg;
    }
}

TEST(Csv, RaggedRowIsParseError) { EXPECT_THROW(parse("a,b\n1,2,3\n"), ParseError); }

TEST(Csv, TimestampColumnDroppedWithWarning) {
    std::vector<std::string> warnings;
    ScopedWarningSink sink([&](std::string_view m) { warnings.emplace_back(m); });
    const auto m = parse("timestamp,a\n2020-01-01,1\n2020-01-02,2\n");
    EXPECT_EQ(m.names(), std::vector<std::string>{"a"});
    EXPECT_FALSE(warnings.empty());
}

TEST(Csv, SameBytesSameMatrix) {
    const std::string text = "a,b\n1.5,2\n-3e2,4\n";
    EXPECT_TRUE(parse(text) == parse(text));
}

TEST(Csv, WriteThenParseRoundTrips) {
    Rng rng(3);
    std::normal_distribution<double> z;
    Eigen::MatrixXd x(20, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = z(rng);
    const TimeSeriesMatrix m(x, {"p", "q", "r"});
    std::stringstream buf;
    write_csv(buf, m);
    const auto back = parse_csv(buf);
    EXPECT_EQ(back.names(), m.names());
    EXPECT_EQ(back.values(), m.values());
}

TEST(Normalizer, ConstantColumnClampsScale) {
    Eigen::MatrixXd x(3, 1);
    x << 2, 2, 2;
    const TimeSeriesMatrix m(x, {"c"});
    const auto n = Normalizer::fit(m, NormalizationMode::zscore);
    EXPECT_DOUBLE_EQ(n.center[0], 2.0);
    EXPECT_DOUBLE_EQ(n.scale[0], 1e-12);
    const auto out = n.apply(m);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(out(t, 0), 0.0);
}

TEST(Normalizer, MinMaxMapsEndpoints) {
    Eigen::MatrixXd x(2, 1);
    x << 0, 10;
    const TimeSeriesMatrix m(x, {"c"});
    const auto out = Normalizer::fit(m, NormalizationMode::minmax).apply(m);
    EXPECT_DOUBLE_EQ(out(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(out(1, 0), 1.0);
}

TEST(Normalizer, ZscoreMomentsAndRoundTrip) {
    Rng rng(5);
    std::normal_distribution<double> z(3.0, 7.0);
    Eigen::MatrixXd x(100, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = z(rng);
    const TimeSeriesMatrix m(x, {"a", "b", "c", "d", "e"});
    const auto n = Normalizer::fit(m, NormalizationMode::zscore);
    const auto out = n.apply(m);
    for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_NEAR(stats::mean(out.column(j)), 0.0, 1e-9);
        EXPECT_NEAR(stats::stdev(out.column(j)), 1.0, 1e-9);
    }
    const auto back = n.invert(out);
    const double rel = (back.values() - x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff();
    EXPECT_LT(rel, 1e-9);
}

TEST(Split, HalfOfTwentyThousand) {
    const TimeSeriesMatrix m(Eigen::MatrixXd::Zero(20000, 1), {"a"});
    const auto [train, test] = train_test_split(m, 0.5);
    EXPECT_EQ(train.rows(), 10000u);
    EXPECT_EQ(test.rows(), 10000u);
}

TEST(Split, FloorsTheBoundary) {
    Eigen::MatrixXd x(10, 1);
    for (int i = 0; i < 10; ++i) x(i, 0) = i;
    const TimeSeriesMatrix m(x, {"a"});
    const auto [train, test] = train_test_split(m, 0.7);
    EXPECT_EQ(train.rows(), 7u);
    EXPECT_EQ(test.rows(), 3u);
    EXPECT_EQ(test.start_index(), 7);
    Eigen::MatrixXd joined(10, 1);
    joined << train.values(), test.values();
    EXPECT_EQ(joined, x);
}

TEST(Split, EmptyHalfIsArgumentError) {
    const TimeSeriesMatrix m(Eigen::MatrixXd::Zero(1, 1), {"a"});
    EXPECT_THROW(train_test_split(m, 0.5), ArgumentError);
}

TEST(Matrix, RejectsNonFiniteAndBadNames) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 2);
    EXPECT_THROW(TimeSeriesMatrix(x, {"a", ""}), SchemaError);
    EXPECT_THROW(TimeSeriesMatrix(x, {"a"}), SchemaError);
    x(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(TimeSeriesMatrix(x, {"a", "b"}), SchemaError);
}
