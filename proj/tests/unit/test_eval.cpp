#include <gtest/gtest.h>

#include <random>

#include "semgap/corpus.hpp"
#include "semgap/error.hpp"
#include "semgap/eval.hpp"

using namespace semgap;

namespace {

constexpr std::size_t PER = 0, LOC = 1, ORG = 2, MISC = 3, O = 4;

Prediction pred(std::size_t predicted, std::size_t gold, double conf = 1.0) { return {"", predicted, gold, conf}; }

}  // namespace

TEST(Accuracy, Basics) {
    EXPECT_EQ(accuracy(std::vector<Prediction>{pred(1, 1), pred(0, 0)}), 1.0);
    EXPECT_EQ(accuracy(std::vector<Prediction>{pred(1, 1), pred(0, 1)}), 0.5);
    EXPECT_THROW(accuracy(std::vector<Prediction>{}), InvalidArgument);
}

TEST(Accuracy, CountedFixture) {
    std::vector<Prediction> v;
    for (int i = 0; i < 1400; ++i) v.push_back(pred(1, i < 910 ? 1 : 0));
    EXPECT_EQ(accuracy(v), 0.65);
}

TEST(Accuracy, ShardingInvariance) {
    std::mt19937_64 rng(3);
    std::bernoulli_distribution hit(0.6);
    std::vector<Prediction> all;
    std::vector<std::vector<Prediction>> shards(7);
    for (int i = 0; i < 700; ++i) {
        const auto p = pred(1, hit(rng) ? 1 : 0);
        all.push_back(p);
        shards[static_cast<std::size_t>(i * i + 3) % 7].push_back(p);
    }
    double weighted = 0.0;
    for (const auto& s : shards) {
        if (s.empty()) continue;
        weighted += accuracy(s) * static_cast<double>(s.size());
    }
    EXPECT_NEAR(weighted / 700.0, accuracy(all), 1e-12);
}

TEST(NerPrf, Perfect) {
    const std::vector<Prediction> v = {pred(PER, PER), pred(O, O), pred(LOC, LOC), pred(MISC, MISC)};
    const auto s = ner_prf(v);
    EXPECT_EQ(s.precision, 1.0);
    EXPECT_EQ(s.recall, 1.0);
    EXPECT_EQ(s.f1, 1.0);
}

TEST(NerPrf, EverythingIsAnEntity) {
    // 2 gold entities among 10 tokens; every token predicted as an entity.
    std::vector<Prediction> v = {pred(ORG, ORG), pred(PER, PER)};
    for (int i = 0; i < 8; ++i) v.push_back(pred(LOC, O));
    const auto s = ner_prf(v);
    EXPECT_DOUBLE_EQ(s.precision, 0.2);
    EXPECT_DOUBLE_EQ(s.recall, 1.0);
    EXPECT_DOUBLE_EQ(s.f1, 1.0 / 3.0);
    EXPECT_EQ(s.true_positives, 2u);
    EXPECT_EQ(s.false_positives, 8u);
    EXPECT_EQ(s.false_negatives, 0u);
}

TEST(NerPrf, MixedErrors) {
    // 4 gold entities: 2 correct, 1 wrong class, 1 predicted O; O tokens untouched.
    const std::vector<Prediction> v = {pred(PER, PER), pred(LOC, LOC), pred(ORG, MISC), pred(O, PER),
                                       pred(O, O),     pred(O, O)};
    const auto s = ner_prf(v);
    EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.recall, 0.5);
    EXPECT_DOUBLE_EQ(s.f1, 4.0 / 7.0);
    EXPECT_NEAR(s.f1, 0.571, 5e-4);
}

TEST(NerPrf, NoOCandidateRegimeHasFullRecall) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> tag(0, 4);
    std::vector<Prediction> v;
    for (int i = 0; i < 300; ++i) {
        const std::size_t gold = tag(rng);
        // query path: never predicts O and never confuses entity classes
        v.push_back(pred(gold == O ? LOC : gold, gold));
    }
    EXPECT_EQ(ner_prf(v).recall, 1.0);
}

TEST(NerPrf, ZeroWhenNothingRight) {
    const auto s = ner_prf(std::vector<Prediction>{pred(O, PER), pred(LOC, O)});
    EXPECT_EQ(s.f1, 0.0);
    EXPECT_THROW(ner_prf(std::vector<Prediction>{}), InvalidArgument);
    EXPECT_THROW(ner_prf(std::vector<Prediction>{pred(7, 0)}), InvalidArgument);
}

TEST(Confusion, CountsGoldByPredicted) {
    const auto m = confusion_matrix(std::vector<Prediction>{pred(1, 0), pred(1, 0), pred(0, 0)}, 2);
    EXPECT_EQ(m[0][1], 2u);
    EXPECT_EQ(m[0][0], 1u);
    EXPECT_EQ(m[1][1], 0u);
}

TEST(Calibration, PerfectConfidentPredictions) {
    std::vector<Prediction> v(20, pred(1, 1, 1.0));
    const auto r = calibration(v);
    EXPECT_EQ(r.ece, 0.0);
    EXPECT_EQ(r.bins.size(), 10u);
    EXPECT_EQ(r.bins[9].count, 20u);
}

TEST(Calibration, SingleBinHandComputed) {
    std::vector<Prediction> v;
    for (int i = 0; i < 10; ++i) v.push_back(pred(1, i < 6 ? 1 : 0, 0.8));
    const auto r = calibration(v);
    EXPECT_DOUBLE_EQ(r.ece, 0.2);
    EXPECT_EQ(r.bins[8].count, 10u);
    EXPECT_DOUBLE_EQ(r.bins[8].accuracy, 0.6);
    EXPECT_DOUBLE_EQ(r.bins[8].mean_confidence, 0.8);
}

TEST(Calibration, FixedPointHasZeroEce) {
    std::vector<Prediction> v;
    auto add = [&](double conf, int n, int correct) {
        for (int i = 0; i < n; ++i) v.push_back(pred(1, i < correct ? 1 : 0, conf));
    };
    add(0.25, 4, 1);
    add(0.5, 2, 1);
    add(0.75, 4, 3);
    add(1.0, 3, 3);
    EXPECT_EQ(calibration(v).ece, 0.0);
}

TEST(Calibration, BinEdges) {
    for (int b = 0; b < 10; ++b) {
        const double conf = b == 0 ? 0.05 : b / 10.0;
        const auto r = calibration(std::vector<Prediction>{pred(0, 0, conf)});
        EXPECT_EQ(r.bins[static_cast<std::size_t>(b)].count, 1u) << conf;
        EXPECT_DOUBLE_EQ(r.bins[static_cast<std::size_t>(b)].lower, b / 10.0);
    }
}

TEST(Calibration, CountsSumAndEceBounded) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> conf(0.01, 1.0);
    std::bernoulli_distribution hit(0.3);
    std::vector<Prediction> v;
    for (int i = 0; i < 1000; ++i) v.push_back(pred(0, hit(rng) ? 0 : 1, conf(rng)));
    const auto r = calibration(v);
    std::size_t total = 0;
    for (const auto& b : r.bins) total += b.count;
    EXPECT_EQ(total, 1000u);
    EXPECT_GE(r.ece, 0.0);
    EXPECT_LE(r.ece, 1.0);
}

TEST(Calibration, Errors) {
    EXPECT_THROW(calibration(std::vector<Prediction>{}), InvalidArgument);
    EXPECT_THROW(calibration(std::vector<Prediction>{pred(0, 0, 0.0)}), InvalidArgument);
    EXPECT_THROW(calibration(std::vector<Prediction>{pred(0, 0, 1.5)}), InvalidArgument);
}

TEST(Calibration, CsvLayout) {
    const auto csv = calibration_csv(calibration(std::vector<Prediction>{pred(0, 0, 0.8)}));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "bin_lower,bin_upper,count,mean_confidence,accuracy");
    EXPECT_NE(csv.find("\n0.80000000000000004,0.90000000000000002,1,0.80000000000000004,1\n"), std::string::npos) << csv;
}

TEST(AnalogyGroups, Argmax) {
    const std::vector<std::vector<double>> g = {{0.1, 0.7, 0.15, 0.05}};
    EXPECT_EQ(analogy_group_accuracy(g, std::vector<std::size_t>{1}), 1.0);
}

TEST(AnalogyGroups, UniformTiesPickFirst) {
    const std::vector<std::vector<double>> g(4, std::vector<double>(4, 0.25));
    EXPECT_EQ(analogy_group_accuracy(g, std::vector<std::size_t>{0, 1, 0, 3}), 0.5);
}

TEST(AnalogyGroups, MatchesBruteForceOracle) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    std::uniform_int_distribution<std::size_t> pick(0, 3);
    std::vector<std::vector<double>> groups;
    std::vector<std::size_t> gold;
    std::size_t oracle_correct = 0;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> g(4);
        for (auto& x : g) x = u(rng);
        const std::size_t planted = pick(rng);
        g[planted] = 0.9;
        groups.push_back(g);
        gold.push_back(pick(rng));
        // brute force: the index no other entry beats
        std::size_t best = 0;
        for (std::size_t a = 0; a < 4; ++a) {
            bool top = true;
            for (std::size_t b = 0; b < 4; ++b) top = top && g[a] >= g[b];
            if (top) {
                best = a;
                break;
            }
        }
        EXPECT_EQ(best, planted);
        oracle_correct += best == gold.back();
    }
    EXPECT_EQ(analogy_group_accuracy(groups, gold), static_cast<double>(oracle_correct) / 100.0);
}

TEST(AnalogyGroups, WrongGroupSize) {
    const std::vector<std::vector<double>> g = {{0.1, 0.2, 0.3}};
    EXPECT_THROW(analogy_group_accuracy(g, std::vector<std::size_t>{0}), InvalidArgument);
}

TEST(AnalogyGroups, ConfidenceIsShareOfGroup) {
    const auto c = choose_in_group(std::vector<double>{0.1, 0.6, 0.2, 0.1});
    EXPECT_EQ(c.choice, 1u);
    EXPECT_DOUBLE_EQ(c.confidence, 0.6);
}

TEST(EvalReportJson, RoundTrip) {
    EvalReport r;
    r.task = Task::Ner;
    r.method = Method::Query;
    r.model_id = "bert-base";
    r.count = 10;
    r.accuracy = 0.2;
    r.ner = PrfScores{0.2, 1.0, 1.0 / 3.0, 2, 8, 0};
    r.confusion = ConfusionMatrix(5, std::vector<std::size_t>(5, 1));
    r.selected_template = "ner-1";
    r.per_template = {{"ner-1", 1.0 / 3.0}};
    r.calibration = calibration(std::vector<Prediction>{pred(0, 0, 0.8)});
    const auto back = eval_report_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(back.task, r.task);
    EXPECT_EQ(back.method, r.method);
    EXPECT_EQ(back.model_id, r.model_id);
    EXPECT_EQ(back.accuracy, r.accuracy);
    ASSERT_TRUE(back.ner);
    EXPECT_EQ(back.ner->f1, r.ner->f1);
    EXPECT_EQ(back.selected_template, r.selected_template);
    ASSERT_EQ(back.per_template.size(), 1u);
    EXPECT_EQ(back.per_template[0].accuracy, 1.0 / 3.0);
    EXPECT_EQ(back.calibration.ece, r.calibration.ece);
    EXPECT_EQ(back.confusion, r.confusion);
}
