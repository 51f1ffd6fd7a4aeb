#include <catch2/catch_amalgamated.hpp>

#include "bsee/maximum_principle.hpp"

using namespace bsee;

namespace {

Vector vec1(double a) { return Vector::Constant(1, a); }

Matrix mat1(double a) { return Matrix::Constant(1, 1, a); }

SemigroupPtr null_semigroup(int m) {
    return make_semigroup(build_generator("diagonal_spectrum", m, std::vector<double>(m, 0.0)));
}

//No dynamics, quadratic control cost: x stays at x0 and the optimality gap
//of any constant candidate is |u|^2 - |ubar|^2 exactly.
ControlProblem control_cost_only_problem() {
    ControlProblem pr;
    pr.S = make_semigroup(build_generator("scalar", 1, {0.0}));
    pr.d = 1;
    pr.control_dim = 1;
    pr.x0 = vec1(1.0);
    pr.a = [](double, const Vector&, const Vector&) { return Vector(Vector::Zero(1)); };
    pr.b = [](double, const Vector&, const Vector&, int) { return Vector(Vector::Zero(1)); };
    pr.g = [](double, const Vector&, const Vector& u) { return u[0] * u[0]; };
    pr.h = [](const Vector&) { return 0.0; };
    pr.a_x = [](double, const Vector&, const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    pr.b_x = [](double, const Vector&, const Vector&, int) { return Matrix(Matrix::Zero(1, 1)); };
    pr.g_x = [](double, const Vector&, const Vector&) { return Vector(Vector::Zero(1)); };
    pr.h_x = [](const Vector&) { return Vector(Vector::Zero(1)); };
    pr.a_xx = [](double, const Vector&, const Vector&, int) { return Matrix(Matrix::Zero(1, 1)); };
    pr.b_xx = [](double, const Vector&, const Vector&, int, int) { return Matrix(Matrix::Zero(1, 1)); };
    pr.g_xx = [](double, const Vector&, const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    pr.h_xx = [](const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    return pr;
}

ControlRule constant_rule(double value) {
    return [value](int, int, const Vector&) { return vec1(value); };
}

} // namespace

TEST_CASE("scalar riccati equation has the known closed form") {
    TimeGrid grid(0.0, 1.0, 8);
    Matrix Z = Matrix::Zero(1, 1);
    auto ref = riccati_reference(Z, mat1(1.0), {Z}, {Z}, Z, mat1(1.0), mat1(1.0), grid, vec1(2.0), 64);
    const double T = 1.0;
    for (int k = 0; k <= grid.n_steps(); ++k) {
        double want = 1.0 / (1.0 + T - grid.node(k));
        REQUIRE(ref.R[k](0, 0) == Catch::Approx(want).margin(1e-9));
        REQUIRE(ref.L[k](0, 0) == Catch::Approx(1.0).margin(1e-12)); // no quadratic correction
        REQUIRE(ref.feedback[k](0, 0) == Catch::Approx(ref.R[k](0, 0)).margin(1e-12));
    }
    REQUIRE(ref.value == Catch::Approx(0.5 * 4.0 * 0.5).margin(1e-8));
    REQUIRE_THROWS_AS(riccati_reference(Z, mat1(1.0), {Z, Z}, {Z}, Z, mat1(1.0), mat1(1.0), grid, vec1(1.0)),
                      std::invalid_argument);
}

TEST_CASE("linear-quadratic problems wire their data and derivatives") {
    Matrix Abar(2, 2), B(2, 1), C0(2, 2), D0(2, 1);
    Abar << 0.2, -0.1, 0.3, 0.0;
    B << 1.0, 0.5;
    C0 = 0.3 * Matrix::Identity(2, 2);
    D0 << 0.4, 0.2;
    Matrix M = Matrix::Identity(2, 2), G = Matrix::Identity(2, 2);
    Matrix N = mat1(2.0);
    Vector x0(2);
    x0 << 1.0, -1.0;
    ControlProblem pr = make_lq_problem(null_semigroup(2), Abar, B, {C0}, {D0}, M, N, G, x0);

    Vector x(2), u(1);
    x << 0.7, -0.4;
    u << 1.3;
    REQUIRE((pr.a(0.1, x, u) - (Abar * x + B * u)).lpNorm<Eigen::Infinity>() < 1e-14);
    REQUIRE((pr.b(0.1, x, u, 0) - (C0 * x + D0 * u)).lpNorm<Eigen::Infinity>() < 1e-14);
    REQUIRE(pr.g(0.1, x, u) == Catch::Approx(0.5 * (x.dot(M * x) + u.dot(N * u))).margin(1e-14));
    REQUIRE(pr.h(x) == Catch::Approx(0.5 * x.dot(G * x)).margin(1e-14));
    REQUIRE((pr.g_xx(0.1, x, u) - M).lpNorm<Eigen::Infinity>() < 1e-14);

    DerivativeReport rep = check_derivatives(pr);
    REQUIRE(rep.max_err < 1e-7);

    ControlProblem broken = pr;
    broken.g_x = [M](double, const Vector& x_, const Vector&) { return Vector(0.9 * M * x_); };
    REQUIRE(check_derivatives(broken).g_x_err > 0.05);

    ControlProblem incomplete = pr;
    incomplete.h_xx = nullptr;
    REQUIRE_THROWS_AS(check_derivatives(incomplete), std::invalid_argument);
}

TEST_CASE("hamiltonian combines drift, diffusion and running cost") {
    ControlProblem pr = control_cost_only_problem();
    pr.a = [](double, const Vector& x, const Vector& u) { return Vector(x + 2.0 * u); };
    pr.b = [](double, const Vector&, const Vector& u, int) { return Vector(0.5 * u); };
    pr.g = [](double, const Vector& x, const Vector& u) { return x[0] * u[0]; };
    Vector x = vec1(1.5), u = vec1(-2.0), y = vec1(2.0);
    std::vector<Vector> Y{vec1(3.0)};
    // H = <y, x + 2u> + <Y, 0.5 u> - x u = 2(1.5 - 4) + 3(-1) - (-3)
    REQUIRE(hamiltonian(pr, 0.0, x, u, y, Y) == Catch::Approx(-5.0 - 3.0 + 3.0).margin(1e-14));
}

TEST_CASE("spiked rules replay the stored control outside the window") {
    TimeGrid grid(0.0, 1.0, 8);
    VectorProcess base(grid, 2, 1);
    for (int p = 0; p < 2; ++p)
        for (int k = 0; k <= 8; ++k) base.at(p, k) = vec1(10.0 * p + k);
    SpikeWindow w{3, 2};
    ControlRule rule = spiked_rule(base, w, vec1(9.0));
    for (int p = 0; p < 2; ++p)
        for (int k = 0; k < 8; ++k) {
            double want = (k == 3 || k == 4) ? 9.0 : 10.0 * p + k;
            REQUIRE(rule(p, k, Vector())[0] == Catch::Approx(want).margin(1e-14));
        }
    REQUIRE_THROWS_AS(check_spike(grid, SpikeWindow{-1, 2}), std::invalid_argument);
    REQUIRE_THROWS_AS(check_spike(grid, SpikeWindow{0, 0}), std::invalid_argument);
    REQUIRE_THROWS_AS(check_spike(grid, SpikeWindow{7, 2}), std::invalid_argument);
}

TEST_CASE("first variation integrates the diffusion jump over the window") {
    //a = 0 and b = u: the first variation is v * (W(t ^ win_end) - W(t ^ win_start))
    //and the second variation vanishes identically.
    ControlProblem pr = control_cost_only_problem();
    pr.b = [](double, const Vector&, const Vector& u, int) { return u; };
    pr.x0 = vec1(0.0);

    TimeGrid grid(0.0, 1.0, 16);
    BrownianBundle noise(grid, 8, 1, 21);
    ControlledPath xbar = simulate_problem(pr, grid, noise, constant_rule(0.0));
    SpikeWindow w{4, 4};
    Vector v = vec1(3.0);
    VectorProcess x2 = first_variation(pr, grid, noise, xbar, w, v);
    for (int p = 0; p < 8; ++p)
        for (int k = 0; k <= 16; ++k) {
            int hi = std::min(k, 8), lo = std::min(k, 4);
            double want = 3.0 * (noise.value(p, hi, 0) - noise.value(p, lo, 0));
            REQUIRE(x2.at(p, k)[0] == Catch::Approx(want).margin(1e-12));
        }

    VectorProcess x3 = second_variation(pr, grid, noise, xbar, x2, w, v);
    REQUIRE(sup_rms(x3) < 1e-14);
}

TEST_CASE("variation norms scale like sqrt(eps) and eps") {
    Matrix Abar = mat1(0.3), B = mat1(1.0), M = mat1(1.0), N = mat1(1.0), G = mat1(1.0);
    ControlProblem pr = make_lq_problem(make_semigroup(build_generator("scalar", 1, {0.0})), Abar, B,
                                        {mat1(0.5)}, {mat1(0.8)}, M, N, G, vec1(1.0));
    TimeGrid grid(0.0, 1.0, 64);
    BrownianBundle noise(grid, 512, 1, 22);
    ControlledPath xbar = simulate_problem(pr, grid, noise, constant_rule(0.5));
    VariationOrders orders = variation_orders(pr, grid, noise, xbar, 16, vec1(2.0), {16, 8, 4, 2});
    REQUIRE(orders.x2_slope > 0.3);
    REQUIRE(orders.x2_slope < 0.7);
    REQUIRE(orders.x3_slope > 0.75);
    REQUIRE(orders.x3_slope < 1.25);
}

TEST_CASE("adjoint pair signs follow the terminal costs") {
    //h = x^2 at a constant state x = 1: y = -h_x = -2 and P = -h_xx = -2,
    //both constant in time; the diffusion parts vanish.
    ControlProblem pr = control_cost_only_problem();
    pr.g = [](double, const Vector&, const Vector&) { return 0.0; };
    pr.h = [](const Vector& x) { return x[0] * x[0]; };
    pr.h_x = [](const Vector& x) { return Vector(2.0 * x); };
    pr.h_xx = [](const Vector&) { return Matrix(mat1(2.0)); };

    TimeGrid grid(0.0, 1.0, 8);
    BrownianBundle noise(grid, 32, 1, 23);
    ControlledPath xbar = simulate_problem(pr, grid, noise, constant_rule(0.0));
    BseeSolution first = adjoint_first(pr, grid, noise, xbar, constant_basis());
    OperatorBseeSolution second = adjoint_second(pr, grid, noise, xbar, first, constant_basis());
    for (int p = 0; p < 32; ++p)
        for (int k = 0; k <= 8; ++k) {
            REQUIRE(first.y.at(p, k)[0] == Catch::Approx(-2.0).margin(1e-12));
            REQUIRE(std::abs(first.Y[0].at(p, k)[0]) < 1e-12);
            REQUIRE(second.P.at(p, k)(0, 0) == Catch::Approx(-2.0).margin(1e-12));
            REQUIRE(std::abs(second.Q[0].at(p, k)(0, 0)) < 1e-12);
        }
}

TEST_CASE("verdict gap is exact when the adjoints vanish") {
    ControlProblem pr = control_cost_only_problem();
    TimeGrid grid(0.0, 1.0, 8);
    BrownianBundle noise(grid, 16, 1, 24);
    ControlSet controls = ControlSet::list({vec1(-1.0), vec1(0.5)});

    ControlledPath good = simulate_problem(pr, grid, noise, constant_rule(0.0));
    BseeSolution first = adjoint_first(pr, grid, noise, good, constant_basis());
    OperatorBseeSolution second = adjoint_second(pr, grid, noise, good, first, constant_basis());
    VerdictReport rep = mp_verdict(pr, grid, noise, good, first, second, controls);
    REQUIRE(rep.min_mean == Catch::Approx(0.25).margin(1e-12));
    REQUIRE(rep.min_pointwise == Catch::Approx(0.25).margin(1e-12));
    REQUIRE(rep.se_at_min < 1e-15);
    REQUIRE(rep.argmin_control == 1);
    REQUIRE(rep.scale == Catch::Approx(0.625).margin(1e-12));
    REQUIRE(rep.violation_fraction == 0.0);

    ControlledPath bad = simulate_problem(pr, grid, noise, constant_rule(2.0));
    BseeSolution bfirst = adjoint_first(pr, grid, noise, bad, constant_basis());
    OperatorBseeSolution bsecond = adjoint_second(pr, grid, noise, bad, bfirst, constant_basis());
    VerdictReport brep = mp_verdict(pr, grid, noise, bad, bfirst, bsecond, controls);
    REQUIRE(brep.min_mean == Catch::Approx(-3.75).margin(1e-12));
    REQUIRE(brep.violation_fraction == 1.0);

    REQUIRE_THROWS_AS(mp_verdict(pr, grid, noise, good, first, second, ControlSet{}), std::invalid_argument);
}

TEST_CASE("spike expansion is exact without state dynamics") {
    //delta_cost = eps v^2 and the adjoint prediction matches it term for term.
    ControlProblem pr = control_cost_only_problem();
    TimeGrid grid(0.0, 1.0, 16);
    BrownianBundle noise(grid, 16, 1, 25);
    ControlledPath xbar = simulate_problem(pr, grid, noise, constant_rule(0.0));
    BseeSolution first = adjoint_first(pr, grid, noise, xbar, constant_basis());
    OperatorBseeSolution second = adjoint_second(pr, grid, noise, xbar, first, constant_basis());
    ExpansionReport rep = cost_expansion_check(pr, grid, noise, xbar, first, second, 2, vec1(2.0), {4, 2, 1});
    REQUIRE(rep.points.size() == 3);
    for (const auto& pt : rep.points) {
        REQUIRE(pt.delta_cost == Catch::Approx(4.0 * pt.eps).margin(1e-13));
        REQUIRE(pt.remainder < 1e-14);
    }
    REQUIRE(std::isinf(rep.remainder_slope)); // remainders sit at the noise floor
}

TEST_CASE("feedback replay reproduces the riccati value") {
    Matrix Abar = mat1(0.2), B = mat1(1.0), M = mat1(1.0), N = mat1(1.0), G = mat1(1.0);
    std::vector<Matrix> C{mat1(0.3)}, D{mat1(0.5)};
    Vector x0 = vec1(1.0);
    SemigroupPtr S = make_semigroup(build_generator("scalar", 1, {0.0}));
    ControlProblem pr = make_lq_problem(S, Abar, B, C, D, M, N, G, x0);

    TimeGrid grid(0.0, 1.0, 32);
    BrownianBundle noise(grid, 4096, 1, 26);
    auto ref = riccati_reference(Abar, B, C, D, M, N, G, grid, x0, 16);
    ControlRule rule = lq_feedback(ref);
    ControlledPath xbar = simulate_problem(pr, grid, noise, rule);
    double cost = evaluate_cost(pr, grid, xbar);
    double tol = 5.0 * (grid.dt() + 1.0 / std::sqrt(4096.0));
    REQUIRE(std::abs(cost - ref.value) / std::abs(ref.value) < tol);

    //the first adjoint tracks -R xbar along the optimal pair
    BseeSolution first = adjoint_first(pr, grid, noise, xbar, affine_basis(1));
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= grid.n_steps(); ++k) {
        double e = 0.0, s = 0.0;
        for (int p = 0; p < noise.n_paths(); ++p) {
            double want = -(ref.R[k] * xbar.x.at(p, k))(0);
            double diff = first.y.at(p, k)[0] - want;
            e += diff * diff;
            s += want * want;
        }
        num = std::max(num, std::sqrt(e / noise.n_paths()));
        den = std::max(den, std::sqrt(s / noise.n_paths()));
    }
    REQUIRE(num / den < 0.2);
}

TEST_CASE("control lattices enumerate the box") {
    ControlSet latt = ControlSet::lattice(vec1(-2.0), vec1(2.0), 5);
    REQUIRE(latt.points.size() == 5);
    for (int i = 0; i < 5; ++i) REQUIRE(latt.points[i][0] == Catch::Approx(-2.0 + i).margin(1e-14));
    REQUIRE_THROWS_AS(ControlSet::lattice(vec1(0.0), vec1(1.0), 1), std::invalid_argument);
}
