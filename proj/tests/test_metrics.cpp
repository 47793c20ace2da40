#include <doctest.h>

#include <cmath>

#include "xfmr/metrics.hpp"
#include "xfmr/rng.hpp"

using namespace xfmr;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("perfect predictions give exactly 1") {
    const std::vector<double> t{1, 2, 3, 4, 5, 6};
    const auto rep = r_squared(t, t, 3, 2);
    CHECK(rep.per_dim[0] == 1.0);
    CHECK(rep.per_dim[1] == 1.0);
    CHECK(rep.mean == 1.0);
}

TEST_CASE("mean predictor gives exactly 0") {
    const std::vector<double> targets{0, 10, 2, 20, 4, 30};
    std::vector<double> preds(6);
    preds[0] = preds[2] = preds[4] = 2.0;   // column-0 mean
    preds[1] = preds[3] = preds[5] = 20.0;  // column-1 mean
    const auto rep = r_squared(preds, targets, 3, 2);
    CHECK(rep.per_dim[0] == 0.0);
    CHECK(rep.per_dim[1] == 0.0);
    CHECK(rep.mean == 0.0);
}

TEST_CASE("single-dimension hand value") {
    const std::vector<double> targets{0, 1, 2};
    const std::vector<double> preds{0, 1, 1};
    const auto rep = r_squared(preds, targets, 3, 1);
    CHECK(std::fabs(rep.mean - 0.5) < 1e-12);
}

TEST_CASE("zero-variance column is an error naming the column") {
    const std::vector<double> targets{1, 0, 1, 1, 1, 2};
    const std::vector<double> preds{0, 0, 0, 0, 0, 0};
    CHECK_THROWS_WITH_AS(r_squared(preds, targets, 3, 2),
                         "r_squared: zero-variance target column 0", std::invalid_argument);
}

TEST_CASE("relative improvement basics") {
    CHECK(*relative_improvement(0.9, 0.6) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(*relative_improvement(0.7, 0.7) == 0.0);
    CHECK(*relative_improvement(0.55, 0.5) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_FALSE(relative_improvement(0.5, 0.0).has_value());
    CHECK_FALSE(relative_improvement(0.5, -0.2).has_value());
}

TEST_CASE("affine invariance per dimension") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 16 + rng.below(40);
        const std::size_t k = 1 + rng.below(4);
        std::vector<double> t(n * k), p(n * k);
        for (auto& v : t) v = rng.uniform(-5, 5);
        for (std::size_t i = 0; i < n * k; ++i) p[i] = t[i] + rng.uniform(-1, 1);
        const auto base = r_squared(p, t, n, k);

        std::vector<double> a(k), b(k);
        for (std::size_t j = 0; j < k; ++j) {
            a[j] = rng.uniform(0.1, 3.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            b[j] = rng.uniform(-10, 10);
        }
        std::vector<double> t2(n * k), p2(n * k);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                t2[i * k + j] = a[j] * t[i * k + j] + b[j];
                p2[i * k + j] = a[j] * p[i * k + j] + b[j];
            }
        const auto mapped = r_squared(p2, t2, n, k);
        for (std::size_t j = 0; j < k; ++j)
            CHECK(std::fabs(mapped.per_dim[j] - base.per_dim[j]) < 1e-9);
    }
}

TEST_CASE("dimension permutation permutes per-dim values, mean unchanged") {
    Rng rng(11);
    const std::size_t n = 32, k = 3;
    std::vector<double> t(n * k), p(n * k);
    for (auto& v : t) v = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < n * k; ++i) p[i] = t[i] + rng.uniform(-0.5, 0.5);
    const auto base = r_squared(p, t, n, k);

    // rotate dimensions by one
    std::vector<double> t2(n * k), p2(n * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            t2[i * k + (j + 1) % k] = t[i * k + j];
            p2[i * k + (j + 1) % k] = p[i * k + j];
        }
    const auto rot = r_squared(p2, t2, n, k);
    CHECK(rot.per_dim[1] == base.per_dim[0]);
    CHECK(rot.per_dim[2] == base.per_dim[1]);
    CHECK(rot.per_dim[0] == base.per_dim[2]);
    CHECK(rot.mean == doctest::Approx(base.mean).epsilon(1e-14));
}

TEST_CASE("r2 never exceeds 1") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 8 + rng.below(30);
        std::vector<double> t(n), p(n);
        for (auto& v : t) v = rng.uniform(-3, 3);
        for (auto& v : p) v = rng.uniform(-3, 3);
        const auto rep = r_squared(p, t, n, 1);
        CHECK(rep.mean <= 1.0);
    }
}

TEST_CASE("report text round-trips key values") {
    const std::vector<double> t{0, 1, 2};
    const std::vector<double> p{0, 1, 1};
    auto rep = r_squared(p, t, 3, 1);
    rep.split = "test";
    const std::string text = rep.to_text();
    CHECK(text.find("split = test") != std::string::npos);
    CHECK(text.find("r2_mean = 0.5") != std::string::npos);
    CHECK(text.find("n = 3") != std::string::npos);
}

TEST_SUITE_END();
