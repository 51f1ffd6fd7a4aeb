#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "bsee/brownian.hpp"
#include "bsee/linalg.hpp"
#include "bsee/parallel.hpp"
#include "bsee/statistics.hpp"

using namespace bsee;

TEST_CASE("counter-based draws are pure functions of (seed, path, counter)") {
    std::uint64_t k1 = path_key(42, 7);
    REQUIRE(k1 == path_key(42, 7));
    REQUIRE(k1 != path_key(42, 8));
    REQUIRE(k1 != path_key(43, 7));
    REQUIRE(standard_normal(k1, 5) == standard_normal(k1, 5));
    REQUIRE(standard_normal(k1, 5) != standard_normal(k1, 6));
    double u = uniform01(k1, 11);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
}

TEST_CASE("gaussian sampler moments") {
    const int n = 200000;
    std::uint64_t key = path_key(2026, 0);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = standard_normal(key, static_cast<std::uint64_t>(i));
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
        s4 += z * z * z * z;
    }
    // 5 standard errors of the respective moment estimators
    REQUIRE(std::abs(s1 / n) < 5.0 / std::sqrt(double(n)));
    REQUIRE(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    REQUIRE(std::abs(s3 / n) < 5.0 * std::sqrt(15.0 / n));
    REQUIRE(std::abs(s4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));
}

TEST_CASE("brownian bundle: increments integrate to values, variance matches dt") {
    TimeGrid grid(0.0, 1.0, 32);
    BrownianBundle noise(grid, 4000, 2, 99);
    REQUIRE(noise.value(17, 0, 1) == 0.0);
    double acc = 0.0;
    for (int k = 0; k < 32; ++k) acc += noise.increment(17, k, 1);
    REQUIRE(acc == Catch::Approx(noise.value(17, 32, 1)).margin(1e-14));

    std::vector<double> incs;
    for (int p = 0; p < 4000; ++p) incs.push_back(noise.increment(p, 9, 0));
    REQUIRE(std::abs(mean(incs)) < 5.0 * std::sqrt(grid.dt() / 4000.0));
    double v = sample_stddev(incs);
    REQUIRE(v * v == Catch::Approx(grid.dt()).epsilon(0.15));

    // components and paths are decorrelated
    double cross = 0.0, auto_lag = 0.0;
    for (int p = 0; p < 4000; ++p) {
        cross += noise.increment(p, 9, 0) * noise.increment(p, 9, 1);
        auto_lag += noise.increment(p, 9, 0) * noise.increment(p, 10, 0);
    }
    REQUIRE(std::abs(cross / 4000.0) < 5.0 * grid.dt() / std::sqrt(4000.0));
    REQUIRE(std::abs(auto_lag / 4000.0) < 5.0 * grid.dt() / std::sqrt(4000.0));

    REQUIRE_THROWS_AS(noise.increment(0, 32, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(noise.value(4000, 0, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(noise.increment(0, 0, 2), std::invalid_argument);
}

TEST_CASE("path draws do not depend on bundle size") {
    TimeGrid grid(0.0, 1.0, 16);
    BrownianBundle small(grid, 3, 1, 7);
    BrownianBundle large(grid, 64, 1, 7);
    for (int p = 0; p < 3; ++p)
        for (int k = 0; k <= 16; ++k) REQUIRE(small.value(p, k, 0) == large.value(p, k, 0));
}

TEST_CASE("tail resampling preserves the past and changes the future") {
    TimeGrid grid(0.0, 1.0, 16);
    BrownianBundle noise(grid, 8, 1, 5);
    BrownianBundle tail = noise.with_tail_resampled(8, 1234);
    for (int p = 0; p < 8; ++p) {
        for (int k = 0; k <= 8; ++k) REQUIRE(tail.value(p, k, 0) == noise.value(p, k, 0));
        REQUIRE(tail.increment(p, 12, 0) != noise.increment(p, 12, 0));
    }
}

TEST_CASE("time grid arithmetic and validation") {
    TimeGrid g(0.5, 2.5, 8);
    REQUIRE(g.dt() == Catch::Approx(0.25).margin(1e-15));
    REQUIRE(g.node(0) == 0.5);
    REQUIRE(g.node(8) == 2.5);
    REQUIRE(g.refined(4).n_steps() == 32);
    REQUIRE(g.refined(2).node(6) == g.node(3)); // shared nodes are bit-exact
    REQUIRE(g.steps_per_block(4) == 2);
    REQUIRE(g.block_of_step(5, 4) == 2);
    REQUIRE(g.block_start_step(3, 4) == 6);
    REQUIRE_THROWS_AS(g.steps_per_block(3), std::invalid_argument);
    REQUIRE_THROWS_AS(g.node(9), std::invalid_argument);
    REQUIRE_THROWS_AS(g.check_step(8), std::invalid_argument);
    REQUIRE_THROWS_AS(TimeGrid(1.0, 1.0, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(TimeGrid(0.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("worker partition covers every path exactly once") {
    for (int workers : {1, 2, 3, 7}) {
        std::vector<int> hits(23, 0);
        for_each_path_range(23, workers, [&](int lo, int hi) {
            for (int p = lo; p < hi; ++p) hits[p] += 1;
        });
        REQUIRE(std::accumulate(hits.begin(), hits.end(), 0) == 23);
        REQUIRE(*std::min_element(hits.begin(), hits.end()) == 1);
    }
    for_each_path_range(0, 4, [](int lo, int hi) { REQUIRE(lo == hi); });
    REQUIRE_THROWS_AS(for_each_path_range(4, 0, [](int, int) {}), std::invalid_argument);
}

TEST_CASE("sample statistics on frozen data") {
    std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    REQUIRE(mean(xs) == 2.5);
    REQUIRE(sample_stddev(xs) == Catch::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-14));
    REQUIRE(standard_error(xs) == Catch::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-14));
    REQUIRE_THROWS_AS(mean({}), std::invalid_argument);
}

TEST_CASE("log-log slope fitting") {
    std::vector<double> x{1.0, 0.5, 0.25, 0.125};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v * v);
    REQUIRE(fit_loglog_slope(x, y) == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(std::isinf(fit_loglog_slope(x, {1e-16, 1e-17, 1e-16, 1e-18})));
    REQUIRE_THROWS_AS(fit_loglog_slope({1.0}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_loglog_slope({1.0, -1.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("kronecker product and row-major vectorization") {
    Matrix A(2, 2), B(2, 2);
    A << 1, 2, 3, 4;
    B << 0, 5, 6, 7;
    Matrix K = kron(A, B);
    REQUIRE(K.rows() == 4);
    REQUIRE(K(0, 1) == 5.0);   // A(0,0) B(0,1)
    REQUIRE(K(1, 0) == 6.0);   // A(0,0) B(1,0)
    REQUIRE(K(0, 3) == 10.0);  // A(0,1) B(0,1)
    REQUIRE(K(3, 2) == 4.0 * 6.0);

    Matrix M(2, 3);
    M << 1, 2, 3, 4, 5, 6;
    Vector v = vec_row(M);
    REQUIRE(v[1] == 2.0);
    REQUIRE(v[3] == 4.0);
    REQUIRE((unvec_row(v, 2, 3) - M).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE_THROWS_AS(unvec_row(v, 3, 3), std::invalid_argument);

    // the lifting identity used to vectorize operator equations
    Matrix P(3, 3), Q(3, 3), O(3, 3);
    std::uint64_t key = path_key(1, 1);
    std::uint64_t c = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            P(i, j) = standard_normal(key, c++);
            Q(i, j) = standard_normal(key, c++);
            O(i, j) = standard_normal(key, c++);
        }
    Vector lhs = vec_row(P * O * Q.transpose());
    Vector rhs = kron(P, Q) * vec_row(O);
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tensor product map and direction frames") {
    Vector a(2), b(3);
    a << 1.0, 2.0;
    b << 4.0, 5.0, 6.0;
    Matrix T = tensor_outer(a, b); // x -> <x,a> b
    REQUIRE(T.rows() == 3);
    REQUIRE(T.cols() == 2);
    Vector x(2);
    x << -1.0, 3.0;
    REQUIRE((T * x - a.dot(x) * b).cwiseAbs().maxCoeff() < 1e-14);

    REQUIRE(direction_frame(4, 0).isIdentity(0.0));
    Matrix F = direction_frame(4, 3);
    REQUIRE((F.transpose() * F - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(!F.isIdentity(1e-3));
    REQUIRE((direction_frame(4, 3) - F).cwiseAbs().maxCoeff() == 0.0);
}
