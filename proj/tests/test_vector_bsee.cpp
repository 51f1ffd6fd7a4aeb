#include <catch2/catch_amalgamated.hpp>

#include "bsee/vector_bsee.hpp"

using namespace bsee;

namespace {

SemigroupPtr scalar_semigroup(double a) { return make_semigroup(build_generator("scalar", 1, {a})); }

double sup_abs_error(const VectorProcess& y, const std::function<double(int, int)>& oracle) {
    double e = 0.0;
    for (int p = 0; p < y.n_paths(); ++p)
        for (int k = y.start_step(); k <= y.grid().n_steps(); ++k)
            e = std::max(e, std::abs(y.at(p, k)[0] - oracle(p, k)));
    return e;
}

} // namespace

TEST_CASE("step regression recovers exact affine responses") {
    TimeGrid grid(0.0, 1.0, 4);
    BrownianBundle noise(grid, 200, 1, 6);
    VectorProcess state = VectorProcess::brownian_values(noise);
    Basis basis = affine_basis(1);
    Matrix Phi = design_matrix(state, basis, 2);
    REQUIRE(Phi.rows() == 200);
    REQUIRE(Phi.cols() == 2);

    Matrix targets(200, 1);
    for (int p = 0; p < 200; ++p) targets(p, 0) = 2.0 + 3.0 * noise.value(p, 2, 0);
    StepRegressor reg(Phi, 1e-10, true);
    Matrix c = reg.solve(targets);
    REQUIRE(c(0, 0) == Catch::Approx(2.0).margin(1e-10));
    REQUIRE(c(1, 0) == Catch::Approx(3.0).margin(1e-10));
    REQUIRE(reg.rank() == 2);
    REQUIRE(reg.condition() >= 1.0);
}

TEST_CASE("rank-deficient designs are dropped or rejected") {
    Basis degenerate{3, "degenerate", [](const Vector& s) {
                         Vector f(3);
                         f << 1.0, s[0], s[0]; // duplicated feature
                         return f;
                     }};
    TimeGrid grid(0.0, 1.0, 4);
    BrownianBundle noise(grid, 100, 1, 6);
    VectorProcess state = VectorProcess::brownian_values(noise);
    Matrix Phi = design_matrix(state, degenerate, 1);
    REQUIRE_THROWS_AS(StepRegressor(Phi, 1e-10, true), std::runtime_error);
    StepRegressor tolerant(Phi, 1e-10, false);
    REQUIRE(tolerant.rank() == 2);
    // fitted values still reproduce targets in the span
    Matrix targets(100, 1);
    for (int p = 0; p < 100; ++p) targets(p, 0) = 1.0 - 2.0 * noise.value(p, 1, 0);
    Matrix fitted = Phi * tolerant.solve(targets);
    REQUIRE((fitted - targets).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("quadratic basis layout") {
    Basis q = quadratic_basis(2);
    REQUIRE(q.size == 6);
    Vector s(2);
    s << 2.0, 3.0;
    Vector f = q.eval(s);
    REQUIRE(f[0] == 1.0);
    REQUIRE(f[2] == 3.0);
    REQUIRE(f[3] == 4.0); // x0^2
    REQUIRE(f[4] == 6.0); // x0 x1
    REQUIRE(f[5] == 9.0); // x1^2
}

TEST_CASE("constant driver on a null generator is integrated exactly by both solvers") {
    const int N = 48;
    const double c = 0.8, T = 1.0;
    TimeGrid grid(0.0, T, N);
    BrownianBundle noise(grid, 128, 1, 31);
    VectorProcess state = VectorProcess::brownian_values(noise);
    BseeData data;
    data.S = scalar_semigroup(0.0);
    data.f = [c](int, int, const Vector&, const std::vector<Vector>&) { return Vector(Vector::Constant(1, c)); };
    data.terminal = constant_initial(Vector::Zero(1));

    BseeSolution reg = solve_backward_regression(data, grid, noise, state, constant_basis());
    BseeSolution tra = transposition_solve(data, grid, noise, state, constant_basis());
    auto oracle = [&](int, int k) { return -c * (T - grid.node(k)); };
    REQUIRE(sup_abs_error(reg.y, oracle) < 1e-12);
    REQUIRE(sup_abs_error(tra.y, oracle) < 1e-12);
    for (int p = 0; p < 128; ++p)
        for (int k = 0; k < N; ++k) {
            REQUIRE(std::abs(reg.Y[0].at(p, k)[0]) < 1e-12);
            REQUIRE(std::abs(tra.Y[0].at(p, k)[0]) < 1e-12);
        }
    REQUIRE(tra.picard_iterations <= 3);
}

TEST_CASE("y-coupled driver converges to the shared discrete fixed point") {
    // f = -y, terminal 1: both sweeps give y_k = (1+dt)^{N-k}, close to e^{T-t}
    const int N = 64;
    TimeGrid grid(0.0, 1.0, N);
    BrownianBundle noise(grid, 64, 1, 8);
    VectorProcess state = VectorProcess::brownian_values(noise);
    BseeData data;
    data.S = scalar_semigroup(0.0);
    data.f = [](int, int, const Vector& y, const std::vector<Vector>&) { return Vector(-y); };
    data.terminal = constant_initial(Vector::Constant(1, 1.0));
    data.lipschitz = 1.0;

    BseeSolution reg = solve_backward_regression(data, grid, noise, state, constant_basis());
    BseeSolution tra = transposition_solve(data, grid, noise, state, constant_basis());
    const double dt = grid.dt();
    auto discrete = [&](int, int k) { return std::pow(1.0 + dt, N - k); };
    REQUIRE(sup_abs_error(reg.y, discrete) < 1e-10);
    REQUIRE(sup_abs_error(tra.y, discrete) < 1e-10);
    REQUIRE(tra.picard_iterations >= 2);
    REQUIRE(std::abs(tra.y.at(0, 0)[0] - std::exp(1.0)) < 3.0 * dt * std::exp(1.0));
}

TEST_CASE("Y-coupled driver identifies the closed-form pair") {
    // dy = -Y dt + Y dW, y_T = W_T  =>  y(t) = W(t) + (T - t), Y = 1
    const int N = 32, n = 4096;
    TimeGrid grid(0.0, 1.0, N);
    BrownianBundle noise(grid, n, 1, 17);
    VectorProcess state = VectorProcess::brownian_values(noise);
    BseeData data;
    data.S = scalar_semigroup(0.0);
    data.f = [](int, int, const Vector&, const std::vector<Vector>& Y) { return Vector(-Y[0]); };
    data.terminal = [&noise, N](int p) { return Vector(Vector::Constant(1, noise.value(p, N, 0))); };
    data.lipschitz = 1.0;

    const double tol = 5.0 * (std::sqrt(grid.dt()) + 1.0 / std::sqrt(double(n)));
    for (bool use_transposition : {false, true}) {
        BseeSolution sol = use_transposition
                               ? transposition_solve(data, grid, noise, state, affine_basis(1))
                               : solve_backward_regression(data, grid, noise, state, affine_basis(1));
        double ey = 0.0, eY = 0.0;
        for (int k = 0; k < N; ++k) {
            double sy = 0.0, sY = 0.0;
            for (int p = 0; p < n; ++p) {
                sy += std::pow(sol.y.at(p, k)[0] - (noise.value(p, k, 0) + 1.0 - grid.node(k)), 2);
                sY += std::pow(sol.Y[0].at(p, k)[0] - 1.0, 2);
            }
            ey = std::max(ey, std::sqrt(sy / n));
            eY = std::max(eY, std::sqrt(sY / n));
        }
        INFO((use_transposition ? "transposition" : "regression"));
        REQUIRE(ey < tol);
        REQUIRE(eY < tol);
    }
}

TEST_CASE("duality residual vanishes for the solved pair and sees corruption") {
    const int N = 32, n = 2048;
    const double lambda = 0.5;
    TimeGrid grid(0.0, 1.0, N);
    BrownianBundle noise(grid, n, 1, 23);
    VectorProcess state = VectorProcess::brownian_values(noise);
    BseeData data;
    data.S = scalar_semigroup(-lambda);
    data.terminal = [&noise, N](int p) { return Vector(Vector::Constant(1, noise.value(p, N, 0))); };

    BseeSolution sol = transposition_solve(data, grid, noise, state, affine_basis(1));
    TestTriple t;
    t.start_step = N / 4;
    t.eta = [&noise, &t](int p) { return Vector(Vector::Constant(1, 1.0 + noise.value(p, t.start_step, 0))); };
    t.psi1 = constant_field(Vector::Constant(1, 0.7));
    t.psi2 = constant_noise_field(Vector::Constant(1, -1.3));

    DualityResidual r = duality_residual(data, grid, noise, sol.y, sol.Y, t);
    double tol = 5.0 * (grid.dt() + 1.0 / std::sqrt(double(n)));
    REQUIRE(std::abs(r.normalized) < tol);
    REQUIRE(r.residual == Catch::Approx(r.terminal_term - r.driver_term - r.eta_term - r.psi1_term -
                                        r.psi2_term).margin(1e-15));

    BseeSolution bad = sol;
    for (int p = 0; p < n; ++p)
        for (int k = 0; k <= N; ++k) bad.y.at(p, k).array() += 2.0;
    REQUIRE(std::abs(duality_residual(data, grid, noise, bad.y, sol.Y, t).normalized) > 0.1);
}

TEST_CASE("restriction to a later start reproduces the same values") {
    const int N = 32;
    TimeGrid grid(0.0, 1.0, N);
    BrownianBundle noise(grid, 512, 1, 29);
    VectorProcess state = VectorProcess::brownian_values(noise);
    BseeData data;
    data.S = scalar_semigroup(-0.4);
    data.f = [](int, int, const Vector& y, const std::vector<Vector>&) { return Vector(-0.5 * y); };
    data.terminal = [&noise, N](int p) { return Vector(Vector::Constant(1, std::tanh(noise.value(p, N, 0)))); };
    data.lipschitz = 0.5;

    TimeConsistencyReport rep = time_consistency_check(data, grid, noise, state, affine_basis(1), N / 4, N / 2);
    REQUIRE(rep.y_relative < 1e-12);
    REQUIRE(rep.Y_discrepancy < 1e-12);
}

TEST_CASE("a-priori bound holds with a moderate constant") {
    const int N = 32, n = 1024;
    TimeGrid grid(0.0, 1.0, N);
    BrownianBundle noise(grid, n, 1, 37);
    VectorProcess state = VectorProcess::brownian_values(noise);
    BseeData data;
    data.S = scalar_semigroup(-0.5);
    data.terminal = [&noise, N](int p) { return Vector(Vector::Constant(1, noise.value(p, N, 0))); };

    BseeSolution sol = transposition_solve(data, grid, noise, state, affine_basis(1));
    for (double p : {2.0, 8.0}) {
        WellposednessReport wp = wellposedness_bound_check(data, grid, noise, sol, p);
        REQUIRE(wp.rhs > 0.0);
        REQUIRE(wp.ratio < 10.0);
        REQUIRE(wp.lhs_y > 0.0);
    }
}

TEST_CASE("test-family variations leave the transposition solution unchanged") {
    const int N = 16, n = 1024;
    TimeGrid grid(0.0, 1.0, N);
    BrownianBundle noise(grid, n, 1, 41);
    VectorProcess state = VectorProcess::brownian_values(noise);
    BseeData data;
    data.S = scalar_semigroup(-0.3);
    data.terminal = [&noise, N](int p) { return Vector(Vector::Constant(1, noise.value(p, N, 0))); };

    BseeSolution base = transposition_solve(data, grid, noise, state, affine_basis(1));
    for (int variant = 1; variant <= 2; ++variant) {
        BseeSolveOptions opts;
        opts.direction_seed = static_cast<unsigned>(variant);
        opts.basis_variant = variant;
        BseeSolution other = transposition_solve(data, grid, noise, state, affine_basis(1), opts);
        double gap = 0.0;
        for (int p = 0; p < n; ++p)
            for (int k = 0; k <= N; ++k)
                gap = std::max(gap, (base.y.at(p, k) - other.y.at(p, k)).cwiseAbs().maxCoeff());
        REQUIRE(gap < 1e-8);
    }
}

TEST_CASE("solver input validation and driver guards") {
    TimeGrid grid(0.0, 1.0, 8);
    BrownianBundle noise(grid, 16, 1, 2);
    VectorProcess state = VectorProcess::brownian_values(noise);
    BseeData data;
    data.S = scalar_semigroup(0.0);
    REQUIRE_THROWS_AS(solve_backward_regression(data, grid, noise, state, constant_basis()),
                      std::invalid_argument); // missing terminal
    data.terminal = constant_initial(Vector::Zero(1));
    data.d = 2;
    REQUIRE_THROWS_AS(solve_backward_regression(data, grid, noise, state, constant_basis()),
                      std::invalid_argument); // noise dimension mismatch
    data.d = 1;
    data.f = [](int, int, const Vector&, const std::vector<Vector>&) {
        return Vector(Vector::Constant(1, 1e9));
    };
    REQUIRE_THROWS_AS(solve_backward_regression(data, grid, noise, state, constant_basis()),
                      std::runtime_error); // driver magnitude guard
    data.f = nullptr;
    REQUIRE_THROWS_AS(transposition_solve(data, grid, noise, state, constant_basis(), {}, 8),
                      std::invalid_argument); // empty window
}
