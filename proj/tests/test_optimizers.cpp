#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "antiphish/optimizers.hpp"

using namespace antiphish;

TEST_CASE("sgd step") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::SGD;
    cfg.learning_rate = 0.1;
    Vec theta = {1.0};
    OptimizerState st;
    optimizer_step(cfg, theta, {0.2}, st, 1);
    CHECK(theta[0] == Catch::Approx(0.98).epsilon(1e-15));
}

TEST_CASE("adam first-step identity") {
    // bias correction makes step 1 equal lr * g / (|g| + eps)
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::Adam;
    cfg.learning_rate = 0.001;
    Vec theta = {0.0};
    OptimizerState st;
    optimizer_step(cfg, theta, {0.5}, st, 1);
    double expect = -0.001 * 0.5 / (0.5 + 1e-8);
    CHECK(std::abs(theta[0] - expect) <= 1e-9);
    CHECK(theta[0] < -0.000999);
}

TEST_CASE("adagrad first-step identity") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::AdaGrad;
    cfg.learning_rate = 0.1;
    Vec theta = {0.0};
    OptimizerState st;
    optimizer_step(cfg, theta, {2.0}, st, 1);
    double expect = -0.1 * 2.0 / std::sqrt(4.0 + 1e-8);
    CHECK(std::abs(theta[0] - expect) <= 1e-9);
}

TEST_CASE("rmsprop accumulates mean square") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::RMSprop;
    cfg.learning_rate = 0.01;
    Vec theta = {0.0};
    OptimizerState st;
    optimizer_step(cfg, theta, {1.0}, st, 1);
    // v = 0.1, step = lr / (sqrt(0.1) + eps)
    CHECK(theta[0] == Catch::Approx(-0.01 / (std::sqrt(0.1) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adadelta starts tiny and stays finite") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::AdaDelta;
    Vec theta = {1.0};
    OptimizerState st;
    optimizer_step(cfg, theta, {1.0}, st, 1);
    // first update magnitude = sqrt(eps)/sqrt(0.05 * 1 + eps)
    double expect = std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
    CHECK(theta[0] == Catch::Approx(1.0 - expect).epsilon(1e-9));
}

TEST_CASE("every optimizer monotonically decreases a convex quadratic") {
    // f(x) = 0.5 * sum a_i x_i^2, gradient a_i x_i; start far from the optimum
    const Vec a = {1.0, 0.25, 4.0};
    for (OptimizerKind kind : {OptimizerKind::AdaDelta, OptimizerKind::Adam,
                               OptimizerKind::RMSprop, OptimizerKind::AdaGrad,
                               OptimizerKind::SGD}) {
        OptimizerConfig cfg;
        cfg.kind = kind;  // default learning rate per kind
        Vec theta = {5.0, -4.0, 3.0};
        OptimizerState st;
        auto loss = [&] {
            double s = 0.0;
            for (size_t i = 0; i < theta.size(); ++i) s += 0.5 * a[i] * theta[i] * theta[i];
            return s;
        };
        double prev = loss();
        for (long t = 1; t <= 100; ++t) {
            Vec g(theta.size());
            for (size_t i = 0; i < theta.size(); ++i) g[i] = a[i] * theta[i];
            optimizer_step(cfg, theta, g, st, t);
            double now = loss();
            INFO(optimizer_name(kind) << " step " << t);
            CHECK(now <= prev);
            prev = now;
        }
    }
}

TEST_CASE("state resizes lazily and validates") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::Adam;
    Vec theta = {0.0, 0.0};
    OptimizerState st;
    CHECK_THROWS_AS(optimizer_step(cfg, theta, {1.0}, st, 1), ShapeMismatch);
    CHECK_THROWS_AS(optimizer_step(cfg, theta, {1.0, 1.0}, st, 0), ConfigError);

    OptimizerConfig bad;
    bad.learning_rate = 2.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("non-finite updates are rejected") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::SGD;
    cfg.learning_rate = 1.0;
    Vec theta = {0.0};
    OptimizerState st;
    CHECK_THROWS_AS(optimizer_step(cfg, theta, {std::numeric_limits<double>::infinity()},
                                   st, 1),
                    NonFiniteUpdate);
}

TEST_CASE("reference epoch schedule per optimizer") {
    auto epochs = [](OptimizerKind k) {
        OptimizerConfig c;
        c.kind = k;
        return c.effective_epochs();
    };
    CHECK(epochs(OptimizerKind::AdaDelta) == 200);
    CHECK(epochs(OptimizerKind::Adam) == 100);
    CHECK(epochs(OptimizerKind::RMSprop) == 150);
    CHECK(epochs(OptimizerKind::AdaGrad) == 200);
    CHECK(epochs(OptimizerKind::SGD) == 250);
}
