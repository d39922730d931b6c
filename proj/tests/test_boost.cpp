#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "antiphish/meta_boost.hpp"
#include "antiphish/rng.hpp"

using namespace antiphish;

TEST_CASE("grad_hess of logistic loss") {
    Vec g, h;
    grad_hess({1}, {0.0}, g, h);
    CHECK(g[0] == Catch::Approx(-0.5).epsilon(1e-15));
    CHECK(h[0] == Catch::Approx(0.25).epsilon(1e-15));

    // saturation: y=0, raw large positive
    grad_hess({0}, {40.0}, g, h);
    CHECK(g[0] == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(h[0] >= 1e-16);
    CHECK(h[0] < 1e-10);

    // p == y exactly means zero gradient
    grad_hess({1}, {700.0}, g, h);
    CHECK(g[0] == 0.0);
}

TEST_CASE("depth-0 tree is the closed-form leaf") {
    Matrix X(2, 1);
    X(0, 0) = 0.0;
    X(1, 0) = 1.0;
    BoostParams p;
    p.max_depth = 0;
    p.lambda = 1.0;
    RegressionTree t = build_tree(X, {1.0, -2.0}, {1.0, 1.0}, p);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].weight == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("single split gain matches the hand-derived value") {
    Matrix X(2, 1);
    X(0, 0) = 0.0;
    X(1, 0) = 1.0;
    Vec g = {1.0, -2.0}, h = {1.0, 1.0};
    BoostParams p;
    p.max_depth = 1;
    p.lambda = 1.0;
    p.gamma = 0.0;
    p.min_child_hessian = 0.0;
    auto split = detail::best_boost_split(X, g, h, {0, 1}, p);
    REQUIRE(split.found);
    CHECK(split.gain == Catch::Approx(0.5 * (0.5 + 2.0 - 1.0 / 3.0)).epsilon(1e-12));
    CHECK(split.threshold == 0.5);

    // gamma larger than any achievable gain collapses to a single leaf
    BoostParams heavy = p;
    heavy.gamma = 100.0;
    RegressionTree t = build_tree(X, g, h, heavy);
    CHECK(t.nodes.size() == 1);
}

// exhaustive oracle: every (feature, threshold midpoint) partition
namespace oracle {

struct Best {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double term(double G, double H, double lambda) { return G * G / (H + lambda); }

Best best_split(const Matrix& X, const Vec& g, const Vec& h,
                const std::vector<size_t>& rows, const BoostParams& p) {
    double G = 0, H = 0;
    for (size_t r : rows) {
        G += g[r];
        H += h[r];
    }
    Best best;
    for (size_t f = 0; f < X.cols; ++f) {
        std::set<double> values;
        for (size_t r : rows) values.insert(X(r, f));
        std::vector<double> sorted(values.begin(), values.end());
        for (size_t i = 1; i < sorted.size(); ++i) {
            double thr = sorted[i - 1] + 0.5 * (sorted[i] - sorted[i - 1]);
            double GL = 0, HL = 0;
            for (size_t r : rows)
                if (X(r, f) < thr) {
                    GL += g[r];
                    HL += h[r];
                }
            double GR = G - GL, HR = H - HL;
            if (HL < p.min_child_hessian || HR < p.min_child_hessian) continue;
            double gain =
                0.5 * (term(GL, HL, p.lambda) + term(GR, HR, p.lambda) - term(G, H, p.lambda)) -
                p.gamma;
            // tie rule: lowest feature id, then lowest threshold
            if (gain > best.gain) best = {true, static_cast<int>(f), thr, gain};
        }
    }
    return best;
}

void check_tree_node(const RegressionTree& t, int node, const Matrix& X, const Vec& g,
                     const Vec& h, std::vector<size_t> rows, int depth,
                     const BoostParams& p) {
    const auto& nd = t.nodes[node];
    double G = 0, H = 0;
    for (size_t r : rows) {
        G += g[r];
        H += h[r];
    }
    if (nd.feature < 0) {
        CHECK(std::abs(nd.weight - (-G / (H + p.lambda))) <= 1e-12);
        if (depth < p.max_depth) {
            Best b = best_split(X, g, h, rows, p);
            CHECK((!b.found || b.gain <= 0.0));
        }
        return;
    }
    Best b = best_split(X, g, h, rows, p);
    REQUIRE(b.found);
    CHECK(nd.feature == b.feature);
    CHECK(nd.threshold == b.threshold);
    std::vector<size_t> left, right;
    for (size_t r : rows) (X(r, nd.feature) < nd.threshold ? left : right).push_back(r);
    check_tree_node(t, nd.left, X, g, h, left, depth + 1, p);
    check_tree_node(t, nd.right, X, g, h, right, depth + 1, p);
}

}  // namespace oracle

TEST_CASE("greedy splits match exhaustive enumeration on random instances") {
    Rng rng(404);
    for (int trial = 0; trial < 60; ++trial) {
        size_t n = 2 + rng.below(19);
        size_t cols = 1 + rng.below(3);
        Matrix X(n, cols);
        Vec g(n), h(n);
        for (size_t r = 0; r < n; ++r) {
            for (size_t c = 0; c < cols; ++c)
                X(r, c) = static_cast<double>(rng.below(8)) / 7.0;  // ties likely
            g[r] = rng.uniform(-2.0, 2.0);
            h[r] = rng.uniform(0.05, 1.0);
        }
        BoostParams p;
        p.max_depth = 1 + static_cast<int>(rng.below(2));
        p.lambda = rng.uniform(0.0, 2.0);
        p.gamma = rng.bernoulli(0.3) ? rng.uniform(0.0, 0.5) : 0.0;
        p.min_child_hessian = rng.bernoulli(0.5) ? 0.0 : 0.1;
        RegressionTree t = build_tree(X, g, h, p);
        std::vector<size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        oracle::check_tree_node(t, 0, X, g, h, rows, 0, p);
    }
}

TEST_CASE("leaf optimality: perturbing a fitted leaf weight raises the objective") {
    Rng rng(11);
    Matrix X(12, 2);
    Vec g(12), h(12);
    for (size_t r = 0; r < 12; ++r) {
        X(r, 0) = rng.uniform();
        X(r, 1) = rng.uniform();
        g[r] = rng.uniform(-1.0, 1.0);
        h[r] = rng.uniform(0.1, 1.0);
    }
    BoostParams p;
    p.max_depth = 2;
    RegressionTree t = build_tree(X, g, h, p);
    // objective restricted to a leaf: G w + 0.5 (H + lambda) w^2
    for (size_t node = 0; node < t.nodes.size(); ++node) {
        if (t.nodes[node].feature >= 0) continue;
        double G = 0, H = 0;
        for (size_t r = 0; r < X.rows; ++r) {
            // route r to its leaf
            int id = 0;
            while (t.nodes[id].feature >= 0)
                id = X(r, t.nodes[id].feature) < t.nodes[id].threshold ? t.nodes[id].left
                                                                       : t.nodes[id].right;
            if (id == static_cast<int>(node)) {
                G += g[r];
                H += h[r];
            }
        }
        auto obj = [&](double w) { return G * w + 0.5 * (H + p.lambda) * w * w; };
        double w = t.nodes[node].weight;
        CHECK(obj(w + 1e-3) > obj(w));
        CHECK(obj(w - 1e-3) > obj(w));
    }
}

TEST_CASE("boost_fit at a balanced prior stays put") {
    Matrix X(4, 1);
    for (size_t r = 0; r < 4; ++r) X(r, 0) = static_cast<double>(r);
    BoostParams p;
    p.rounds = 1;
    p.max_depth = 0;
    p.lambda = 0.0;
    p.learning_rate = 1.0;
    BoostedEnsemble e = boost_fit(X, {0, 1, 0, 1}, p);
    CHECK(e.base_score == 0.0);
    REQUIRE(e.trees.size() == 1);
    CHECK(e.trees[0].nodes[0].weight == 0.0);
    FinalPrediction out = final_predict(e, X);
    for (double prob : out.probability) CHECK(prob == 0.5);
}

TEST_CASE("a separable meta feature trains to 100%") {
    Matrix X(10, 1);
    std::vector<int> y(10);
    for (size_t r = 0; r < 10; ++r) {
        X(r, 0) = static_cast<double>(r) / 10.0;
        y[r] = r >= 5 ? 1 : 0;
    }
    BoostParams p;
    p.rounds = 10;
    p.max_depth = 1;
    p.min_child_hessian = 0.0;
    BoostedEnsemble e = boost_fit(X, y, p);
    FinalPrediction out = final_predict(e, X);
    for (size_t r = 0; r < 10; ++r) CHECK(out.label[r] == y[r]);
}

TEST_CASE("eta 0 is rejected, eta epsilon behaves like no-op updates") {
    Matrix X(4, 1);
    std::vector<int> y = {0, 1, 0, 1};
    BoostParams p;
    p.learning_rate = 0.0;
    CHECK_THROWS_AS(boost_fit(X, y, p), ConfigError);
}

TEST_CASE("training loss is non-increasing over 100 rounds at eta 0.1") {
    Rng rng(77);
    const size_t n = 60;
    Matrix X(n, 3);
    std::vector<int> y(n);
    for (size_t r = 0; r < n; ++r) {
        for (size_t c = 0; c < 3; ++c) X(r, c) = rng.uniform();
        y[r] = rng.bernoulli(X(r, 0) > 0.5 ? 0.8 : 0.2) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    BoostParams p;
    p.rounds = 100;
    p.learning_rate = 0.1;
    p.gamma = 0.0;
    BoostedEnsemble full = boost_fit(X, y, p);

    // replay the stagewise fit and watch the loss
    Vec raw(n, full.base_score);
    double prev = total_logistic_loss(y, raw);
    for (const auto& tree : full.trees) {
        for (size_t r = 0; r < n; ++r)
            raw[r] += p.learning_rate * tree.predict_one(X.row(r));
        double now = total_logistic_loss(y, raw);
        CHECK(now <= prev + 1e-12);
        prev = now;
    }
}

TEST_CASE("final_predict closed forms") {
    BoostedEnsemble e;
    e.base_score = 0.3;
    e.params.learning_rate = 1.0;
    Matrix X(1, 1);
    CHECK(final_predict(e, X).probability[0] ==
          Catch::Approx(1.0 / (1.0 + std::exp(-0.3))).epsilon(1e-15));

    e.base_score = 0.0;
    RegressionTree t;
    t.nodes.emplace_back();
    t.nodes[0].weight = std::log(3.0);
    e.trees.push_back(t);
    CHECK(final_predict(e, X).probability[0] == Catch::Approx(0.75).epsilon(1e-12));

    // adding an all-positive-leaf tree never lowers any probability
    Matrix X2(5, 1);
    for (size_t r = 0; r < 5; ++r) X2(r, 0) = static_cast<double>(r);
    FinalPrediction before = final_predict(e, X2);
    RegressionTree pos;
    pos.nodes.emplace_back();
    pos.nodes[0].weight = 0.4;
    e.trees.push_back(pos);
    FinalPrediction after = final_predict(e, X2);
    for (size_t r = 0; r < 5; ++r) CHECK(after.probability[r] >= before.probability[r]);
}

TEST_CASE("missing values route to the heavier-hessian child") {
    Matrix X(4, 1);
    X(0, 0) = 0.0;
    X(1, 0) = 0.1;
    X(2, 0) = 0.9;
    X(3, 0) = 1.0;
    Vec g = {-1.0, -1.0, 1.0, 1.0};
    Vec h = {2.0, 2.0, 0.5, 0.5};  // left is heavier
    BoostParams p;
    p.max_depth = 1;
    p.min_child_hessian = 0.0;
    RegressionTree t = build_tree(X, g, h, p);
    REQUIRE(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].default_left);
    double missing = std::nan("");
    CHECK(t.predict_one(&missing) == t.nodes[t.nodes[0].left].weight);
}

TEST_CASE("assemble_meta_features concatenates by schema") {
    Vec mean = {0.8, 0.2};
    std::vector<std::string> schema;
    Matrix X = assemble_meta_features(mean, {{"premier", {0.9, 0.1}}}, &schema);
    REQUIRE(schema == std::vector<std::string>{"mean", "premier"});
    CHECK(X(0, 0) == 0.8);
    CHECK(X(0, 1) == 0.9);
    CHECK(X(1, 0) == 0.2);
    CHECK(X(1, 1) == 0.1);

    Matrix wide = assemble_meta_features(
        mean, {{"a", {1, 1}}, {"b", {1, 1}}, {"c", {1, 1}}, {"d", {1, 1}}, {"e", {1, 1}},
               {"f", {1, 1}}, {"premier", {0, 0}}});
    CHECK(wide.cols == 8);

    CHECK_THROWS_AS(assemble_meta_features(mean, {{"bad", {0.1}}}), LengthMismatch);
}

TEST_CASE("ensembles round-trip through the node-per-line format") {
    Rng rng(5);
    Matrix X(30, 2);
    std::vector<int> y(30);
    for (size_t r = 0; r < 30; ++r) {
        X(r, 0) = rng.uniform();
        X(r, 1) = rng.uniform();
        y[r] = rng.bernoulli(0.5) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    BoostParams p;
    p.rounds = 7;
    p.max_depth = 2;
    p.min_child_hessian = 0.1;
    BoostedEnsemble e = boost_fit(X, y, p, {"mean", "premier"});
    std::ostringstream out;
    save_ensemble(e, out);
    std::istringstream in(out.str());
    BoostedEnsemble back = load_ensemble(in);
    CHECK(back.schema == e.schema);
    CHECK(back.base_score == e.base_score);
    REQUIRE(back.trees.size() == e.trees.size());
    FinalPrediction p1 = final_predict(e, X);
    FinalPrediction p2 = final_predict(back, X);
    CHECK(p1.probability == p2.probability);
}
