#pragma once

#include "control_problem.hpp"
#include "operator_bsee.hpp"
#include "statistics.hpp"

namespace bsee {

//Spike perturbation window [start, start + len) in grid steps.
struct SpikeWindow {
    int start_step = 0;
    int len_steps = 1;
    bool covers(int k) const { return k >= start_step && k < start_step + len_steps; }
};

inline void check_spike(const TimeGrid& grid, const SpikeWindow& w) {
    if (w.len_steps < 1 || w.start_step < 0 || w.start_step + w.len_steps > grid.n_steps())
        throw std::invalid_argument("spike window must be a nonempty aligned subinterval of the grid");
}

//Open-loop replay of a stored control with the window overridden by value.
inline ControlRule spiked_rule(const VectorProcess& u_base, const SpikeWindow& w, const Vector& value) {
    return [&u_base, w, value](int p, int k, const Vector&) {
        return w.covers(k) ? value : Vector(u_base.at(p, k));
    };
}

//First-order state variation: linearized dynamics along (xbar, ubar) driven
//by the diffusion jump chi (b(v) - b(ubar)) dW; scales like sqrt(eps).
inline VectorProcess first_variation(const ControlProblem& pr, const TimeGrid& grid, const BrownianBundle& noise,
                                     const ControlledPath& xbar, const SpikeWindow& w, const Vector& v,
                                     int n_workers = 1) {
    check_spike(grid, w);
    MatrixField J = [&pr, &grid, &xbar](int p, int k) {
        return pr.a_x(grid.node(k), xbar.x.at(p, k), xbar.u.at(p, k));
    };
    NoiseMatrixField K = [&pr, &grid, &xbar](int p, int k, int i) {
        return pr.b_x(grid.node(k), xbar.x.at(p, k), xbar.u.at(p, k), i);
    };
    NoiseField vf = [&pr, &grid, &xbar, w, v](int p, int k, int i) {
        if (!w.covers(k)) return Vector(Vector::Zero(xbar.x.dim()));
        double t = grid.node(k);
        return Vector(pr.b(t, xbar.x.at(p, k), v, i) - pr.b(t, xbar.x.at(p, k), xbar.u.at(p, k), i));
    };
    auto zero = constant_initial(Vector::Zero(pr.S->dim()));
    return simulate_linear(*pr.S, grid, noise, 0, zero, J, K, nullptr, vf, n_workers);
}

//Second-order variation: same linearization forced by the drift jump, the
//diffusion-gradient jump acting on x2, and the Hessian quadratic in x2;
//scales like eps.
inline VectorProcess second_variation(const ControlProblem& pr, const TimeGrid& grid, const BrownianBundle& noise,
                                      const ControlledPath& xbar, const VectorProcess& x2, const SpikeWindow& w,
                                      const Vector& v, int n_workers = 1) {
    check_spike(grid, w);
    const int m = pr.S->dim();
    MatrixField J = [&pr, &grid, &xbar](int p, int k) {
        return pr.a_x(grid.node(k), xbar.x.at(p, k), xbar.u.at(p, k));
    };
    NoiseMatrixField K = [&pr, &grid, &xbar](int p, int k, int i) {
        return pr.b_x(grid.node(k), xbar.x.at(p, k), xbar.u.at(p, k), i);
    };
    VectorField uf = [&pr, &grid, &xbar, &x2, w, v, m](int p, int k) {
        double t = grid.node(k);
        const auto x = xbar.x.at(p, k);
        const auto u = xbar.u.at(p, k);
        const auto e2 = x2.at(p, k);
        Vector out = Vector::Zero(m);
        for (int c = 0; c < m; ++c) out[c] = 0.5 * e2.dot(pr.a_xx(t, x, u, c) * e2);
        if (w.covers(k)) out += pr.a(t, x, v) - pr.a(t, x, u) + (pr.a_x(t, x, v) - pr.a_x(t, x, u)) * e2;
        return out;
    };
    NoiseField vf = [&pr, &grid, &xbar, &x2, w, v, m](int p, int k, int i) {
        double t = grid.node(k);
        const auto x = xbar.x.at(p, k);
        const auto u = xbar.u.at(p, k);
        const auto e2 = x2.at(p, k);
        Vector out(m);
        for (int c = 0; c < m; ++c) out[c] = 0.5 * e2.dot(pr.b_xx(t, x, u, i, c) * e2);
        if (w.covers(k)) out += (pr.b_x(t, x, v, i) - pr.b_x(t, x, u, i)) * e2;
        return out;
    };
    auto zero = constant_initial(Vector::Zero(m));
    return simulate_linear(*pr.S, grid, noise, 0, zero, J, K, uf, vf, n_workers);
}

//First adjoint pair (y, Y): terminal -h_x(xbar_T), driver
//-a_x* y - sum_i b_{i,x}* Y_i + g_x along the optimal pair.
inline BseeSolution adjoint_first(const ControlProblem& pr, const TimeGrid& grid, const BrownianBundle& noise,
                                  const ControlledPath& xbar, const Basis& basis,
                                  const BseeSolveOptions& opts = {}) {
    check_control_problem(pr);
    BseeData data;
    data.S = pr.S;
    data.d = pr.d;
    data.terminal = [&pr, &xbar, &grid](int p) { return Vector(-pr.h_x(xbar.x.at(p, grid.n_steps()))); };
    data.f = [&pr, &grid, &xbar](int k, int p, const Vector& y, const std::vector<Vector>& Y) {
        double t = grid.node(k);
        const auto x = xbar.x.at(p, k);
        const auto u = xbar.u.at(p, k);
        Vector out = pr.g_x(t, x, u) - pr.a_x(t, x, u).transpose() * y;
        for (int i = 0; i < pr.d; ++i) out -= pr.b_x(t, x, u, i).transpose() * Y[i];
        return out;
    };
    return solve_backward_regression(data, grid, noise, xbar.x, basis, opts);
}

//Second adjoint (P, Q): terminal -h_xx(xbar_T), linear operator equation with
//J = a_x, K_i = b_{i,x} and driver offset F = g_xx - sum_c y_c a_xx^c
//- sum_{i,c} Y_{i,c} b_{i,xx}^c, i.e. minus the state Hessian of H.
inline OperatorBseeSolution adjoint_second(const ControlProblem& pr, const TimeGrid& grid,
                                           const BrownianBundle& noise, const ControlledPath& xbar,
                                           const BseeSolution& first, const Basis& basis,
                                           const BseeSolveOptions& opts = {},
                                           BackwardMethod method = BackwardMethod::Regression) {
    check_control_problem(pr);
    const int m = pr.S->dim();
    OperatorBseeData data;
    data.S = pr.S;
    data.d = pr.d;
    data.terminal = [&pr, &xbar, &grid](int p) { return Matrix(-pr.h_xx(xbar.x.at(p, grid.n_steps()))); };
    data.J = [&pr, &grid, &xbar](int p, int k) {
        return pr.a_x(grid.node(k), xbar.x.at(p, k), xbar.u.at(p, k));
    };
    data.K = [&pr, &grid, &xbar](int p, int k, int i) {
        return pr.b_x(grid.node(k), xbar.x.at(p, k), xbar.u.at(p, k), i);
    };
    data.F = [&pr, &grid, &xbar, &first, m](int p, int k) {
        double t = grid.node(k);
        const auto x = xbar.x.at(p, k);
        const auto u = xbar.u.at(p, k);
        Matrix F = pr.g_xx(t, x, u);
        const auto y = first.y.at(p, k);
        for (int c = 0; c < m; ++c) {
            F -= y[c] * pr.a_xx(t, x, u, c);
            for (int i = 0; i < pr.d; ++i) F -= first.Y[i].at(p, k)[c] * pr.b_xx(t, x, u, i, c);
        }
        return F;
    };
    return solve_operator_bsee(data, grid, noise, xbar.x, basis, opts, method);
}

struct VariationOrders {
    std::vector<double> eps;
    std::vector<double> x2_norm; // sup_t RMS of the first variation
    std::vector<double> x3_norm;
    double x2_slope;
    double x3_slope;
};

//Scaling audit: sup-RMS of the two variations against the spike length.
inline VariationOrders variation_orders(const ControlProblem& pr, const TimeGrid& grid,
                                        const BrownianBundle& noise, const ControlledPath& xbar, int tau_step,
                                        const Vector& v, const std::vector<int>& eps_steps, int n_workers = 1) {
    VariationOrders out{};
    for (int len : eps_steps) {
        SpikeWindow w{tau_step, len};
        VectorProcess x2 = first_variation(pr, grid, noise, xbar, w, v, n_workers);
        VectorProcess x3 = second_variation(pr, grid, noise, xbar, x2, w, v, n_workers);
        out.eps.push_back(len * grid.dt());
        out.x2_norm.push_back(sup_rms(x2));
        out.x3_norm.push_back(sup_rms(x3));
    }
    out.x2_slope = fit_loglog_slope(out.eps, out.x2_norm);
    out.x3_slope = fit_loglog_slope(out.eps, out.x3_norm);
    return out;
}

struct ExpansionPoint {
    double eps;
    double delta_cost;  // J(u_eps) - J(ubar), common noise
    double predicted;   // E int_window [dg - <y, da> - sum <Y_i, db_i> - 1/2 sum <P db_i, db_i>]
    double remainder;   // |delta_cost - predicted|
};

struct ExpansionReport {
    std::vector<ExpansionPoint> points;
    double remainder_slope;
};

//Validates the spike expansion of the cost: the adjoint-based leading term
//is compared with the directly simulated cost difference at several spike
//lengths; the remainder must vanish faster than eps.
inline ExpansionReport cost_expansion_check(const ControlProblem& pr, const TimeGrid& grid,
                                            const BrownianBundle& noise, const ControlledPath& xbar,
                                            const BseeSolution& first, const OperatorBseeSolution& second,
                                            int tau_step, const Vector& v, const std::vector<int>& eps_steps,
                                            int n_workers = 1) {
    const double base_cost = evaluate_cost(pr, grid, xbar);
    const int n = noise.n_paths();
    const double dt = grid.dt();
    ExpansionReport out{};
    for (int len : eps_steps) {
        SpikeWindow w{tau_step, len};
        check_spike(grid, w);
        ControlledPath spiked = simulate_problem(pr, grid, noise, spiked_rule(xbar.u, w, v), n_workers);
        ExpansionPoint pt{};
        pt.eps = len * dt;
        pt.delta_cost = evaluate_cost(pr, grid, spiked) - base_cost;
        double acc = 0.0;
        for (int p = 0; p < n; ++p)
            for (int k = w.start_step; k < w.start_step + w.len_steps; ++k) {
                double t = grid.node(k);
                const auto x = xbar.x.at(p, k);
                const auto u = xbar.u.at(p, k);
                double term = pr.g(t, x, v) - pr.g(t, x, u) - first.y.at(p, k).dot(pr.a(t, x, v) - pr.a(t, x, u));
                for (int i = 0; i < pr.d; ++i) {
                    Vector db = pr.b(t, x, v, i) - pr.b(t, x, u, i);
                    term -= first.Y[i].at(p, k).dot(db);
                    term -= 0.5 * (second.P.at(p, k) * db).dot(db);
                }
                acc += term * dt;
            }
        pt.predicted = acc / n;
        pt.remainder = std::abs(pt.delta_cost - pt.predicted);
        out.points.push_back(pt);
    }
    std::vector<double> eps, rem;
    for (const auto& pt : out.points) {
        eps.push_back(pt.eps);
        rem.push_back(pt.remainder);
    }
    out.remainder_slope = fit_loglog_slope(eps, rem);
    return out;
}

struct VerdictReport {
    double min_mean;           // min over (step, u) of the path-mean gap
    double se_at_min;          // standard error of that mean
    int argmin_step;
    int argmin_control;
    double min_pointwise;      // min over (step, path, u)
    double scale;              // mean |gap| over everything probed
    double violation_fraction; // fraction of (step, path, u) with gap < -violation_level
    double violation_level;    // violation_rel * scale
};

//Pointwise optimality gap of a candidate pair: for each probe control u,
//  gap = H(t, x, ubar, y, Y) - H(t, x, u, y, Y)
//        - 1/2 sum_i <P (b_i(u) - b_i(ubar)), b_i(u) - b_i(ubar)>.
//Nonnegative (up to discretization and regression error) iff the candidate
//satisfies the second-order necessary condition on the probe set.  The
//violation count uses a level relative to the mean gap magnitude, so it is
//invariant under cost rescaling.
inline VerdictReport mp_verdict(const ControlProblem& pr, const TimeGrid& grid, const BrownianBundle& noise,
                                const ControlledPath& xbar, const BseeSolution& first,
                                const OperatorBseeSolution& second, const ControlSet& controls,
                                double violation_rel = 0.1) {
    check_control_problem(pr);
    if (controls.points.empty()) throw std::invalid_argument("mp_verdict: empty control set");
    const int n = noise.n_paths();
    const int N = grid.n_steps();
    const int nc = static_cast<int>(controls.points.size());
    VerdictReport rep{};
    rep.min_mean = std::numeric_limits<double>::infinity();
    rep.min_pointwise = std::numeric_limits<double>::infinity();
    double abs_acc = 0.0;
    std::vector<double> gaps;
    gaps.reserve(static_cast<size_t>(N) * nc * n);
    std::vector<Vector> Yrow(pr.d);
    for (int k = 0; k < N; ++k) {
        double t = grid.node(k);
        for (int c = 0; c < nc; ++c) {
            const Vector& u = controls.points[c];
            double mean = 0.0, sq = 0.0;
            for (int p = 0; p < n; ++p) {
                const Vector x = xbar.x.at(p, k);
                const Vector ub = xbar.u.at(p, k);
                const Vector y = first.y.at(p, k);
                for (int i = 0; i < pr.d; ++i) Yrow[i] = first.Y[i].at(p, k);
                double gap = hamiltonian(pr, t, x, ub, y, Yrow) - hamiltonian(pr, t, x, u, y, Yrow);
                for (int i = 0; i < pr.d; ++i) {
                    Vector db = pr.b(t, x, u, i) - pr.b(t, x, ub, i);
                    gap -= 0.5 * (second.P.at(p, k) * db).dot(db);
                }
                mean += gap;
                sq += gap * gap;
                abs_acc += std::abs(gap);
                gaps.push_back(gap);
                rep.min_pointwise = std::min(rep.min_pointwise, gap);
            }
            mean /= n;
            if (mean < rep.min_mean) {
                rep.min_mean = mean;
                rep.se_at_min = std::sqrt(std::max(0.0, sq / n - mean * mean) / n);
                rep.argmin_step = k;
                rep.argmin_control = c;
            }
        }
    }
    rep.scale = abs_acc / static_cast<double>(gaps.size());
    rep.violation_level = violation_rel * rep.scale;
    long violations = 0;
    for (double g : gaps)
        if (g < -rep.violation_level) ++violations;
    rep.violation_fraction = static_cast<double>(violations) / static_cast<double>(gaps.size());
    return rep;
}

// ---- linear-quadratic reference -----------------------------------------

//Backward matrix Riccati solution and its Lyapunov companion on the grid
//nodes, integrated by classical RK4 with substeps per grid step.
//  -R' = Ahat' R + R Ahat + sum_i C_i' R C_i + M
//        - (R B + sum_i C_i' R D_i) (N + sum_i D_i' R D_i)^{-1} (B' R + sum_i D_i' R C_i)
//  -L' = Ahat' L + L Ahat + sum_i C_i' L C_i + M
//with R(T) = L(T) = G; Ahat is the full drift matrix.
struct RiccatiReference {
    std::vector<Matrix> R;        // per grid node
    std::vector<Matrix> L;        // companion (no quadratic correction)
    std::vector<Matrix> feedback; // (N + sum D'RD)^{-1} (B'R + sum D'RC), per node
    double value;                 // 1/2 <R(0) x0, x0>
};

inline RiccatiReference riccati_reference(const Matrix& Ahat, const Matrix& B, const std::vector<Matrix>& C,
                                          const std::vector<Matrix>& D, const Matrix& M, const Matrix& N,
                                          const Matrix& G, const TimeGrid& grid, const Vector& x0,
                                          int substeps = 16) {
    const int m = static_cast<int>(Ahat.rows());
    const int d = static_cast<int>(C.size());
    if (static_cast<int>(D.size()) != d) throw std::invalid_argument("riccati_reference: C/D count mismatch");
    auto feedback_of = [&](const Matrix& R) {
        Matrix lhs = N, rhs = B.transpose() * R;
        for (int i = 0; i < d; ++i) {
            lhs += D[i].transpose() * R * D[i];
            rhs += D[i].transpose() * R * C[i];
        }
        return Matrix(lhs.ldlt().solve(rhs));
    };
    auto dR = [&](const Matrix& R) {
        Matrix rhs = Ahat.transpose() * R + R * Ahat + M;
        for (int i = 0; i < d; ++i) rhs += C[i].transpose() * R * C[i];
        Matrix lin = B.transpose() * R;
        for (int i = 0; i < d; ++i) lin += D[i].transpose() * R * C[i];
        rhs -= lin.transpose() * feedback_of(R);
        return Matrix(-rhs);
    };
    auto dL = [&](const Matrix& L) {
        Matrix rhs = Ahat.transpose() * L + L * Ahat + M;
        for (int i = 0; i < d; ++i) rhs += C[i].transpose() * L * C[i];
        return Matrix(-rhs);
    };

    RiccatiReference out;
    out.R.assign(grid.n_steps() + 1, Matrix::Zero(m, m));
    out.L = out.R;
    out.feedback.assign(grid.n_steps() + 1, Matrix());
    out.R[grid.n_steps()] = G;
    out.L[grid.n_steps()] = G;
    const double h = -grid.dt() / substeps;
    Matrix R = G, L = G;
    for (int k = grid.n_steps(); k-- > 0;) {
        for (int s = 0; s < substeps; ++s) {
            Matrix k1 = dR(R), k2 = dR(R + 0.5 * h * k1), k3 = dR(R + 0.5 * h * k2), k4 = dR(R + h * k3);
            R += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
            Matrix l1 = dL(L), l2 = dL(L + 0.5 * h * l1), l3 = dL(L + 0.5 * h * l2), l4 = dL(L + h * l3);
            L += (h / 6.0) * (l1 + 2 * l2 + 2 * l3 + l4);
        }
        out.R[k] = R;
        out.L[k] = L;
    }
    for (int k = 0; k <= grid.n_steps(); ++k) out.feedback[k] = feedback_of(out.R[k]);
    out.value = 0.5 * x0.dot(out.R[0] * x0);
    return out;
}

inline ControlRule lq_feedback(const RiccatiReference& ref) {
    return [&ref](int, int k, const Vector& x) { return Vector(-ref.feedback[k] * x); };
}

//Linear dynamics dx = (A x + Abar x + B u) dt + sum_i (C_i x + D_i u) dW^i
//with quadratic costs; Abar is the bounded drift part, A generates S.
inline ControlProblem make_lq_problem(SemigroupPtr S, const Matrix& Abar, const Matrix& B,
                                      const std::vector<Matrix>& C, const std::vector<Matrix>& D,
                                      const Matrix& M, const Matrix& N, const Matrix& G, const Vector& x0) {
    const int m = S->dim();
    const int cd = static_cast<int>(B.cols());
    const int d = static_cast<int>(C.size());
    ControlProblem pr;
    pr.S = std::move(S);
    pr.d = d;
    pr.control_dim = cd;
    pr.x0 = x0;
    pr.a = [Abar, B](double, const Vector& x, const Vector& u) { return Vector(Abar * x + B * u); };
    pr.b = [C, D](double, const Vector& x, const Vector& u, int i) { return Vector(C[i] * x + D[i] * u); };
    pr.g = [M, N](double, const Vector& x, const Vector& u) {
        return 0.5 * (x.dot(M * x) + u.dot(N * u));
    };
    pr.h = [G](const Vector& x) { return 0.5 * x.dot(G * x); };
    pr.a_x = [Abar](double, const Vector&, const Vector&) { return Abar; };
    pr.b_x = [C](double, const Vector&, const Vector&, int i) { return C[i]; };
    pr.g_x = [M](double, const Vector& x, const Vector&) { return Vector(M * x); };
    pr.h_x = [G](const Vector& x) { return Vector(G * x); };
    pr.a_xx = [m](double, const Vector&, const Vector&, int) { return Matrix(Matrix::Zero(m, m)); };
    pr.b_xx = [m](double, const Vector&, const Vector&, int, int) { return Matrix(Matrix::Zero(m, m)); };
    pr.g_xx = [M](double, const Vector&, const Vector&) { return M; };
    pr.h_xx = [G](const Vector&) { return G; };
    return pr;
}

} // namespace bsee
