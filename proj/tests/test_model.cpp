#include "doctest.h"

#include <cmath>
#include <numeric>
#include <set>

#include "checks.hpp"
#include "dynprop/errors.hpp"
#include "dynprop/model.hpp"
#include "json.hpp"

using namespace dynprop;

namespace {

Classifier hand_classifier() {
    Classifier c(2, 2, 0);
    c.w1 = Matrix(2, 2);
    c.w1(0, 0) = 1.0;
    c.w1(1, 1) = 1.0;
    c.b1 = {0.0, 0.0};
    c.w2 = Matrix(2, 2);
    c.w2(0, 0) = 1.0;
    c.w2(1, 1) = 2.0;
    c.b2 = {0.5, -0.5};
    return c;
}

// Two clusters of `half` nodes each, linked only inside the cluster, with
// features drawn around +mu (Real) and -mu (Fake).
struct Clusters {
    Matrix x;
    PropagationMatrix p;
    std::vector<int> labels;
};

Clusters clusters(std::uint64_t seed, std::size_t half, double mu) {
    Rng rng(seed);
    const std::size_t n = 2 * half;
    oracle::Edges edges;
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < half; ++i) {
            for (std::size_t j = i + 1; j < half; ++j) {
                if (rng.uniform() < 0.2) edges.emplace_back(c * half + i, c * half + j);
            }
        }
    }
    Clusters out;
    out.p = full_propagation(column_normalize(oracle::sparse_adjacency(n, edges)), {0.5, 1e-10});
    out.x = Matrix(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i < half ? 1 : 0;
        out.labels.push_back(label);
        for (std::size_t f = 0; f < 4; ++f) out.x(i, f) = (label ? mu : -mu) + rng.normal();
    }
    return out;
}

}  // namespace

TEST_CASE("forward computes relu(x W1 + b1) W2 + b2") {
    const auto c = hand_classifier();
    Matrix x(2, 2);
    x(0, 0) = 1.0;
    x(0, 1) = -1.0;
    x(1, 0) = 2.0;
    x(1, 1) = 3.0;
    const auto z = forward(c, x);
    CHECK(z(0, 0) == 1.5);
    CHECK(z(0, 1) == -0.5);
    CHECK(z(1, 0) == 2.5);
    CHECK(z(1, 1) == 5.5);
    CHECK_THROWS_AS(forward(c, Matrix(1, 3)), std::invalid_argument);
}

TEST_CASE("Classifier initialisation") {
    const Classifier a(8, 16, 3), b(8, 16, 3), c(8, 16, 4);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    const double bound = std::sqrt(6.0 / 24.0);
    for (double w : a.w1.data()) CHECK(std::abs(w) <= bound);
    CHECK(a.b1 == std::vector<double>(16, 0.0));
    CHECK(a.b2 == std::vector<double>(2, 0.0));
}

TEST_CASE("predict") {
    Matrix logits(2, 2);
    logits(0, 0) = 0.0;
    logits(0, 1) = std::log(3.0);
    logits(1, 0) = 1.0;
    logits(1, 1) = 1.0;

    SUBCASE("identity propagation is a row softmax") {
        const auto q = predict(PropagationMatrix::identity(2, all_seeds(2), 0.5, Scheme::OneHop), logits);
        CHECK(q(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(q(0, 1) == doctest::Approx(0.75).epsilon(1e-15));
        CHECK(q(1, 0) == 0.5);
        CHECK(q(1, 1) == 0.5);
    }
    SUBCASE("rows mix logits before the softmax") {
        PropagationMatrix p(2, {1}, 0.5, Scheme::OneHop);
        p.row(0)[0] = 0.5;
        p.row(0)[1] = 0.5;
        const auto q = predict(p, logits);
        CHECK(q.rows() == 1);
        // z = [0.5, 0.5 + log(3) / 2]; q1 = sqrt(3) / (1 + sqrt(3)).
        CHECK(q(0, 1) == doctest::Approx(std::sqrt(3.0) / (1.0 + std::sqrt(3.0))).epsilon(1e-14));
        CHECK(q(0, 0) + q(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("large logits stay finite") {
        Matrix big(1, 2);
        big(0, 0) = 1000.0;
        big(0, 1) = -1000.0;
        const auto q = predict(PropagationMatrix::identity(1, {0}, 0.5, Scheme::OneHop), big);
        CHECK(q(0, 0) == 1.0);
        CHECK(q(0, 1) == 0.0);
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(predict(PropagationMatrix::identity(3, all_seeds(3), 0.5, Scheme::OneHop), logits),
                        std::invalid_argument);
    }
}

TEST_CASE("loss matches the cross-entropy of predict") {
    auto g = checks::gradient_instance(11);
    const auto q = predict(g.p, forward(g.c, g.x));
    double expect = 0.0;
    for (std::size_t k = 0; k < g.s.rows.size(); ++k) {
        const double t = g.s.targets[k];
        expect -= (1 - t) * std::log(q(g.s.rows[k], 0)) + t * std::log(q(g.s.rows[k], 1));
    }
    expect /= static_cast<double>(g.s.rows.size());
    CHECK(loss_and_gradients(g.c, g.x, g.p, g.s, nullptr) == doctest::Approx(expect).epsilon(1e-12));

    Supervision empty;
    CHECK_THROWS_AS(loss_and_gradients(g.c, g.x, g.p, empty, nullptr), std::invalid_argument);
}

TEST_CASE("analytic gradients agree with central differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(seed);
        CHECK(checks::gradient_relative_error(checks::gradient_instance(seed)) <= 1e-4);
    }
}

TEST_CASE("gradients with soft targets") {
    auto g = checks::gradient_instance(77);
    for (auto& t : g.s.targets) t = 0.3;
    CHECK(checks::gradient_relative_error(g) <= 1e-4);
}

TEST_CASE("TrainConfig validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.patience = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.folds = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.hidden = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.learning_rate = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.learning_rate = std::nan("");
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.max_epochs = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("fit stops after patience epochs without improvement") {
    const auto g = checks::gradient_instance(5);
    TrainConfig cfg;
    cfg.hidden = 4;
    cfg.learning_rate = 0.0;
    cfg.patience = 10;
    const auto r = fit(g.x, g.p, g.s, cfg, 1);
    // The first epoch sets the best loss; ten flat epochs follow.
    CHECK(r.history.loss.size() == 11);
    CHECK(r.history.stopped_early);
    CHECK(r.history.epoch_seconds.size() == 11);

    cfg.max_epochs = 5;
    const auto capped = fit(g.x, g.p, g.s, cfg, 1);
    CHECK(capped.history.loss.size() == 5);
    CHECK_FALSE(capped.history.stopped_early);
}

TEST_CASE("fit is deterministic and lowers the loss") {
    const auto g = checks::gradient_instance(9);
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.learning_rate = 0.1;
    cfg.max_epochs = 200;
    const auto a = fit(g.x, g.p, g.s, cfg, 42);
    const auto b = fit(g.x, g.p, g.s, cfg, 42);
    CHECK(a.classifier == b.classifier);
    CHECK(a.history.loss == b.history.loss);
    CHECK(a.history.loss.back() < a.history.loss.front());

    Supervision none;
    CHECK_THROWS_AS(fit(g.x, g.p, none, cfg, 1), std::invalid_argument);
}

TEST_CASE("fit reports a diverging loss") {
    auto g = checks::gradient_instance(3);
    for (auto& v : g.x.data()) v *= 1e150;
    TrainConfig cfg;
    cfg.hidden = 4;
    cfg.learning_rate = 1e10;
    CHECK_THROWS_AS(fit(g.x, g.p, g.s, cfg, 1), ConvergenceError);
}

TEST_CASE("fit separates clustered data") {
    const auto data = clusters(21, 40, 1.0);
    Supervision s;
    std::vector<Index> held_out;
    for (Index i = 0; i < data.labels.size(); ++i) {
        if (i % 2 == 0) {
            s.rows.push_back(i);
            s.targets.push_back(data.labels[i]);
        } else {
            held_out.push_back(i);
        }
    }
    TrainConfig cfg;
    cfg.hidden = 16;
    cfg.learning_rate = 0.1;
    cfg.max_epochs = 500;
    const auto r = fit(data.x, data.p, s, cfg, 7);
    const auto q = predict(data.p, forward(r.classifier, data.x));
    std::vector<double> scores;
    std::vector<int> labels;
    for (auto i : held_out) {
        scores.push_back(q(i, 1));
        labels.push_back(data.labels[i]);
    }
    CHECK(evaluate(scores, labels).accuracy >= 0.95);
}

TEST_CASE("kfold_split") {
    SUBCASE("even split") {
        const auto f = kfold_split(12, 4, 1);
        CHECK(checks::fold_law_holds(f, 12, 4));
        for (const auto& fold : f) CHECK(fold.size() == 3);
    }
    SUBCASE("uneven split puts larger folds first") {
        const auto f = kfold_split(13, 4, 1);
        CHECK(f[0].size() == 4);
        CHECK(f[1].size() == 3);
        CHECK(f[2].size() == 3);
        CHECK(f[3].size() == 3);
        CHECK(checks::fold_law_holds(f, 13, 4));
    }
    SUBCASE("one item per fold") {
        const auto f = kfold_split(4, 4, 9);
        std::set<Index> all;
        for (const auto& fold : f) {
            REQUIRE(fold.size() == 1);
            all.insert(fold[0]);
        }
        CHECK(all == std::set<Index>{0, 1, 2, 3});
    }
    SUBCASE("too many folds") {
        CHECK_THROWS_AS(kfold_split(3, 4, 0), std::invalid_argument);
        CHECK_THROWS_AS(kfold_split(3, 0, 0), std::invalid_argument);
    }
    SUBCASE("seeded") {
        CHECK(kfold_split(30, 5, 3) == kfold_split(30, 5, 3));
        CHECK(kfold_split(30, 5, 3) != kfold_split(30, 5, 4));
    }
    SUBCASE("law holds for every k <= n <= 30") {
        for (std::size_t n = 1; n <= 30; ++n) {
            for (std::size_t k = 1; k <= n; ++k) CHECK(checks::fold_law_holds(kfold_split(n, k, n * 31 + k), n, k));
        }
    }
}

TEST_CASE("evaluate") {
    SUBCASE("half right") {
        const std::vector<double> s{1, 1, 0, 0};
        const std::vector<int> y{1, 0, 0, 1};
        const auto r = evaluate(s, y);
        CHECK(r.accuracy == 0.5);
        CHECK(r.precision == 0.5);
        CHECK(r.recall == 0.5);
        CHECK(r.f1 == 0.5);
        CHECK(r.auc == 0.5);
    }
    SUBCASE("perfect ranking") {
        const std::vector<double> s{0.9, 0.8, 0.3, 0.1};
        const std::vector<int> y{1, 1, 0, 0};
        const auto r = evaluate(s, y);
        CHECK(r.accuracy == 1.0);
        CHECK(r.auc == 1.0);
    }
    SUBCASE("threshold is inclusive") {
        const std::vector<double> s{0.5};
        const std::vector<int> y{1};
        CHECK(evaluate(s, y).recall == 1.0);
    }
    SUBCASE("single class") {
        const std::vector<double> s{0.9, 0.2};
        const std::vector<int> y{1, 1};
        const auto r = evaluate(s, y);
        CHECK(r.accuracy == 0.5);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 0.5);
        CHECK(r.auc == 0.5);
        const std::vector<int> neg{0, 0};
        const auto n = evaluate(s, neg);
        CHECK(n.precision == 0.0);
        CHECK(n.recall == 0.0);
        CHECK(n.f1 == 0.0);
    }
    SUBCASE("bad input") {
        const std::vector<double> s{0.1, 0.2};
        const std::vector<int> y{1};
        CHECK_THROWS_AS(evaluate(s, y), std::invalid_argument);
        CHECK_THROWS_AS(evaluate({}, {}), std::invalid_argument);
        const std::vector<int> two{2, 0};
        CHECK_THROWS_AS(evaluate(s, two), std::invalid_argument);
    }
}

TEST_CASE("evaluate matches brute force on random sets") {
    Rng rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(200);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse scores so ties are common.
            s[i] = static_cast<double>(rng.below(11)) / 10.0;
            y[i] = static_cast<int>(rng.below(2));
        }
        const auto r = evaluate(s, y);
        const auto c = checks::brute_force_confusion(s, y);
        CHECK(r.auc == checks::brute_force_auc(s, y));
        CHECK(r.accuracy == c.accuracy);
        CHECK(r.precision == c.precision);
        CHECK(r.recall == c.recall);
        CHECK(r.f1 == c.f1);
    }
}

TEST_CASE("reports") {
    MetricsReport a;
    a.accuracy = 1.0;
    a.auc = 0.5;
    a.fold = 0;
    MetricsReport b;
    b.accuracy = 0.5;
    b.auc = 1.0;
    b.train_seconds = 2.0;
    b.fold = 1;
    const std::vector<MetricsReport> both{a, b};
    const auto m = mean_report(both);
    CHECK(m.accuracy == 0.75);
    CHECK(m.auc == 0.75);
    CHECK(m.train_seconds == 1.0);
    CHECK(m.fold == -1);

    CHECK(m.to_key_value() ==
          "fold=mean accuracy=0.75 precision=0 recall=0 f1=0 auc=0.75 train_seconds=1");
    const auto j = nlohmann::json::parse(a.to_json());
    CHECK(j["fold"] == 0);
    CHECK(j["accuracy"] == 1.0);
    CHECK(nlohmann::json::parse(m.to_json())["fold"] == "mean");
}
