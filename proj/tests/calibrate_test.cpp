#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ordinal_conformal/calibrate.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <random>

using namespace ocp;

namespace {

// Ten-class record whose greedy APS score is `score` (>= 0.1): the argmax is
// label 0 with mass `score`, and label 1 enters right after it. A zero score
// is the argmax itself.
GradingRecord aps_record(double score) {
    const double top = score == 0.0 ? 0.5 : score;
    Eigen::VectorXd p = Eigen::VectorXd::Constant(10, (1.0 - top) / 9.0);
    p[0] = top;
    return {ScoreVector(p), score == 0.0 ? 0 : 1, "P", {}};
}

}  // namespace

TEST_CASE("conformal_quantile worked examples") {
    const std::vector<double> nine{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    CHECK(conformal_quantile(nine, Alpha(0.1)) == Lambda::at(0.9));
    const std::vector<double> four{0.3, 0.1, 0.5, 0.2};
    CHECK(conformal_quantile(four, Alpha(0.2)) == Lambda::at(0.5));
    const std::vector<double> three{0.1, 0.2, 0.3};
    CHECK(conformal_quantile(three, Alpha(0.1)).is_full());
    CHECK_THROWS_AS((void)conformal_quantile(std::vector<double>{}, Alpha(0.1)), DataError);
}

TEST_CASE("conformal_rank handles grid products that are exact integers") {
    CHECK(conformal_rank(9, Alpha(0.1)) == 9);
    CHECK(conformal_rank(4, Alpha(0.2)) == 4);
    CHECK(conformal_rank(19, Alpha(0.05)) == 19);
    CHECK(conformal_rank(99, Alpha(0.01)) == 99);
    CHECK(conformal_rank(19, Alpha(0.15)) == 17);
    CHECK(conformal_rank(1800, Alpha(0.01)) == 1783);
}

TEST_CASE("calibrate") {
    SUBCASE("greedy APS on nine records") {
        std::vector<GradingRecord> cal;
        for (double s : {0.1, 0.3, 0.8}) CHECK(aps_score(aps_record(s).scores, 1) == doctest::Approx(s));
        for (double s : {0.0, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8}) cal.push_back(aps_record(s));
        const auto p = calibrate(MethodKind::OrdinalApsGreedy, cal, Alpha(0.1));
        CHECK(p.lambda_hat.value() == doctest::Approx(0.8));
        CHECK(p.n_cal == 9);
        CHECK(p.num_classes == 10);
    }
    SUBCASE("perfect classifier under LAC") {
        std::vector<GradingRecord> cal(5, GradingRecord{ScoreVector{0.0, 1.0, 0.0, 0.0}, 1, "P", {}});
        CHECK(calibrate(MethodKind::Lac, cal, Alpha(0.2)).lambda_hat == Lambda::at(0.0));
    }
    SUBCASE("too few records force the full set") {
        std::vector<GradingRecord> cal(3, GradingRecord{ScoreVector{0.1, 0.5, 0.3, 0.1}, 2, "P", {}});
        CHECK(calibrate(MethodKind::OrdinalCdf, cal, Alpha(0.05)).lambda_hat.is_full());
    }
    SUBCASE("errors") {
        std::vector<GradingRecord> mixed{{ScoreVector{0.5, 0.5}, 0, "P", {}}, {ScoreVector{0.2, 0.3, 0.5}, 0, "Q", {}}};
        CHECK_THROWS_AS((void)calibrate(MethodKind::Lac, mixed, Alpha(0.1)), DataError);
        CHECK_THROWS_AS((void)calibrate(MethodKind::Lac, std::vector<GradingRecord>{}, Alpha(0.1)), DataError);
        CHECK_THROWS_WITH_AS((void)calibrate(MethodKind::OrdinalApsExact, mixed, Alpha(0.1)),
                             "exact variant is diagnostic-only", std::invalid_argument);
    }
}

TEST_CASE("predict") {
    const ScoreVector f{0.1, 0.5, 0.3, 0.1};
    CalibratedPredictor p{MethodKind::OrdinalApsGreedy, Lambda::at(0.8), Alpha(0.1), 9, 4};
    CHECK(std::get<LabelInterval>(predict(p, f)) == LabelInterval{0, 2});

    for (auto m : {MethodKind::OrdinalApsGreedy, MethodKind::Lac, MethodKind::OrdinalCdf}) {
        CalibratedPredictor full{m, Lambda::full(), Alpha(0.1), 3, 4};
        CHECK(members(predict(full, f)) == std::vector<Label>{0, 1, 2, 3});
    }

    CalibratedPredictor lac{MethodKind::Lac, Lambda::at(0.55), Alpha(0.1), 20, 4};
    CHECK(std::get<LabelSubset>(predict(lac, ScoreVector{0.45, 0.05, 0.45, 0.05})) == LabelSubset{{0, 2}});

    SUBCASE("empty LAC set falls back to the argmax") {
        CalibratedPredictor strict{MethodKind::Lac, Lambda::at(0.1), Alpha(0.1), 20, 4};
        CHECK(std::get<LabelSubset>(predict(strict, f)) == LabelSubset{{1}});
    }
    SUBCASE("class count mismatch") {
        CHECK_THROWS_AS((void)predict(p, ScoreVector{0.5, 0.5}), DataError);
    }
}

TEST_CASE("predictor text round-trip") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const double lam = ocp::testing::uniform01(rng);
        CalibratedPredictor p{MethodKind::OrdinalCdf, i % 10 == 0 ? Lambda::full() : Lambda::at(lam),
                              Alpha(0.01 + 0.98 * ocp::testing::uniform01(rng)), static_cast<std::size_t>(i), 4};
        const auto back = parse_predictor(to_text(p));
        CHECK(back.method == p.method);
        CHECK(back.lambda_hat == p.lambda_hat);
        CHECK(back.alpha.value() == p.alpha.value());
        CHECK(back.n_cal == p.n_cal);
        CHECK(back.num_classes == p.num_classes);
    }
    CHECK(to_text({MethodKind::Lac, Lambda::full(), Alpha(0.1), 3, 4}) ==
          "method lac\nlambda FULL\nalpha 0.10000000000000001\nn_cal 3\nnum_classes 4\n");
    CHECK_THROWS_AS((void)parse_predictor("method lac\nlambda 0.5\n"), DataError);
    CHECK_THROWS_AS((void)parse_predictor("method lac\nalpha 0.1\nlambda 0.5\nn_cal 3\nnum_classes 4\n"), DataError);
}

TEST_CASE("calibration invariants") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 60)(rng);
        std::vector<GradingRecord> cal;
        for (int i = 0; i < n; ++i) {
            const auto f = ocp::testing::random_scores(rng, 4);
            cal.push_back({f, std::uniform_int_distribution<int>(0, 3)(rng), "P", {}});
        }
        for (auto m : {MethodKind::OrdinalApsGreedy, MethodKind::Lac, MethodKind::OrdinalCdf}) {
            const auto base = calibrate(m, cal, Alpha(0.1));
            auto shuffled = cal;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            REQUIRE(calibrate(m, shuffled, Alpha(0.1)).lambda_hat == base.lambda_hat);

            Lambda previous = Lambda::full();
            for (double a : {0.01, 0.05, 0.1, 0.15, 0.2, 0.5}) {
                const auto lam = calibrate(m, cal, Alpha(a)).lambda_hat;
                REQUIRE(lam <= previous);
                previous = lam;
            }
        }
    }
}
