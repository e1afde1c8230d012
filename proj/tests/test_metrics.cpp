#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "medaug/errors.hpp"
#include "medaug/metrics.hpp"
#include "medaug/rng.hpp"
#include "reference_metrics.hpp"

using namespace medaug;
using namespace refmetrics;

TEST_CASE("auroc hand-checkable values") {
    // positives at 0.35 / 0.8, negatives at 0.1 / 0.4
    ScoredPredictions p{{0.35, 0.8, 0.1, 0.4}, {1, 1, 0, 0}};
    CHECK(auroc(p) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(auroc(p) == doctest::Approx(ref_auroc(p)).epsilon(1e-12));

    ScoredPredictions separated{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}};
    CHECK(auroc(separated) == 1.0);

    ScoredPredictions ties{{0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}};
    CHECK(auroc(ties) == 0.5);
}

TEST_CASE("auprc hand-checkable values") {
    ScoredPredictions p{{0.9, 0.8, 0.7}, {1, 0, 1}};
    // thresholds 0.9 / 0.8 / 0.7: steps 0.5*1 + 0 + 0.5*(2/3)
    CHECK(auprc(p) == doctest::Approx(0.5 + 0.5 * (2.0 / 3.0)).epsilon(1e-12));
    CHECK(auprc(p) == doctest::Approx(ref_ap(p)).epsilon(1e-12));

    ScoredPredictions perfect{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}};
    CHECK(auprc(perfect) == 1.0);
}

TEST_CASE("auprc of random scores is near prevalence") {
    Rng rng(21);
    ScoredPredictions p;
    for (std::size_t i = 0; i < 1000; ++i) {
        p.scores.push_back(rng.uniform());
        p.labels.push_back(rng.bernoulli(0.2) ? 1 : 0);
    }
    CHECK(auprc(p) == doctest::Approx(0.2).epsilon(0.25));
}

TEST_CASE("recall_at_precision hand-checkable values") {
    ScoredPredictions p{{0.9, 0.8, 0.7, 0.6}, {1, 1, 0, 1}};
    // threshold 0.8: precision 1, recall 2/3; threshold 0.6: precision 0.75
    CHECK(rp80(p) == 2.0 / 3.0);

    ScoredPredictions perfect{{0.9, 0.8, 0.2}, {1, 1, 0}};
    CHECK(rp80(perfect) == 1.0);

    // precision is 0.75 at every threshold that predicts anything positive
    ScoredPredictions capped{{0.9, 0.9, 0.9, 0.9}, {1, 1, 1, 0}};
    CHECK(rp80(capped) == 0.0);

    // exact-boundary precision 4/5 must qualify; the lower threshold dilutes to 5/8
    ScoredPredictions boundary{{0.9, 0.9, 0.9, 0.9, 0.9, 0.1, 0.1, 0.1},
                               {1, 1, 1, 1, 0, 1, 0, 0}};
    CHECK(recall_at_precision(boundary, 0.80) == 0.8);
}

TEST_CASE("metrics match brute-force references on random instances") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        ScoredPredictions p = random_instance(rng, 100);
        CAPTURE(trial);
        CHECK(auroc(p) == doctest::Approx(ref_auroc(p)).epsilon(1e-12));
        CHECK(auprc(p) == doctest::Approx(ref_ap(p)).epsilon(1e-12));
        CHECK(rp80(p) == ref_recall_at_precision(p, 0.80));
        double floor = 0.05 + 0.9 * rng.uniform();
        CHECK(recall_at_precision(p, floor) == ref_recall_at_precision(p, floor));
    }
}

TEST_CASE("auroc is invariant under strictly increasing score transforms") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        ScoredPredictions p = random_instance(rng, 60);
        ScoredPredictions q = p;
        for (double& s : q.scores) s = std::exp(s) + s * s * s;
        CHECK(auroc(p) == auroc(q));  // same ranks, bitwise same result
    }
}

TEST_CASE("auroc complement identity without ties") {
    Rng rng(13);
    ScoredPredictions p;
    for (std::size_t i = 0; i < 50; ++i) {
        p.scores.push_back((static_cast<double>(i) + rng.uniform()) / 51.0);
        p.labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
    }
    p.labels[0] = 1;
    p.labels[1] = 0;
    ScoredPredictions flipped = p;
    for (double& s : flipped.scores) s = 1.0 - s;
    CHECK(auroc(p) + auroc(flipped) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("prediction validation errors") {
    CHECK_THROWS_AS(auroc({{}, {}}), ValidationError);
    CHECK_THROWS_AS(auroc({{0.5}, {1, 0}}), ValidationError);
    CHECK_THROWS_AS(auroc({{0.1, 0.2}, {1, 1}}), ValidationError);   // one class
    CHECK_THROWS_AS(auroc({{0.1, 0.2}, {1, 2}}), ValidationError);   // non-binary
    double nan = std::nan("");
    CHECK_THROWS_AS(auroc({{nan, 0.2}, {1, 0}}), ValidationError);
    CHECK_THROWS_AS(recall_at_precision({{0.1, 0.2}, {1, 0}}, 0.0), ValidationError);
    CHECK_THROWS_AS(recall_at_precision({{0.1, 0.2}, {1, 0}}, 1.5), ValidationError);
}

TEST_CASE("roc curve endpoints and trapezoid consistency") {
    ScoredPredictions two{{0.8, 0.2}, {1, 0}};
    auto curve = roc_curve(two);
    REQUIRE(curve.size() >= 3);
    CHECK(std::isinf(curve.front().threshold));
    CHECK(curve.front().threshold > 0);
    CHECK(curve.front().x == 0.0);
    CHECK(curve.front().y == 0.0);
    CHECK(std::isinf(curve.back().threshold));
    CHECK(curve.back().threshold < 0);
    CHECK(curve.back().x == 1.0);
    CHECK(curve.back().y == 1.0);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].x >= curve[i - 1].x);
        CHECK(curve[i].y >= curve[i - 1].y);
        CHECK(curve[i].x >= 0.0);
        CHECK(curve[i].x <= 1.0);
    }

    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        ScoredPredictions p = random_instance(rng, 80);
        CHECK(trapezoid_area(roc_curve(p)) == doctest::Approx(auroc(p)).epsilon(1e-9));
    }
}

TEST_CASE("pr curve endpoints") {
    ScoredPredictions p{{0.9, 0.8, 0.7}, {1, 0, 1}};
    auto curve = pr_curve(p);
    REQUIRE(curve.size() >= 3);
    CHECK(std::isinf(curve.front().threshold));
    CHECK(curve.front().x == 0.0);  // recall 0 at the +inf sentinel
    CHECK(curve.front().y == 1.0);
    CHECK(std::isinf(curve.back().threshold));
    CHECK(curve.back().threshold < 0);
    CHECK(curve.back().x == 1.0);  // recall 1 at the -inf sentinel
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].x >= curve[i - 1].x);
}

TEST_CASE("curve csv export") {
    ScoredPredictions p{{0.9, 0.1}, {1, 0}};
    std::string path = "curve_test.csv";
    write_curve_csv(path, roc_curve(p));
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "threshold,x,y");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.find(',') != std::string::npos);
    }
    CHECK(rows == roc_curve(p).size());
    std::remove(path.c_str());
}

TEST_CASE("evaluate_all bundles the three metrics") {
    ScoredPredictions p{{0.9, 0.8, 0.7, 0.6}, {1, 1, 0, 1}};
    MetricsSummary s = evaluate_all(p);
    CHECK(s.auroc == auroc(p));
    CHECK(s.auprc == auprc(p));
    CHECK(s.rp80 == rp80(p));
    CHECK(s.n_pos == 3);
    CHECK(s.n_neg == 1);
}
