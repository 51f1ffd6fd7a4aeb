#pragma once

#include "forward_see.hpp"

namespace bsee {

//Controlled state dx = (A x + a(t, x, u)) dt + sum_i b_i(t, x, u) dW^i with
//running cost g and terminal cost h; a, b carry the bounded part of the
//drift, A lives in the semigroup.  Derivatives are supplied analytically and
//cross-checked against finite differences by check_derivatives.
struct ControlProblem {
    SemigroupPtr S;
    int d = 1;
    int control_dim = 1;
    Vector x0;

    std::function<Vector(double t, const Vector& x, const Vector& u)> a;
    std::function<Vector(double t, const Vector& x, const Vector& u, int comp)> b;
    std::function<double(double t, const Vector& x, const Vector& u)> g;
    std::function<double(const Vector& x)> h;

    // first derivatives in x; Jacobians are (output, state)
    std::function<Matrix(double t, const Vector& x, const Vector& u)> a_x;
    std::function<Matrix(double t, const Vector& x, const Vector& u, int comp)> b_x;
    std::function<Vector(double t, const Vector& x, const Vector& u)> g_x;
    std::function<Vector(const Vector& x)> h_x;

    // second derivatives in x; vector-valued maps give one Hessian per output component
    std::function<Matrix(double t, const Vector& x, const Vector& u, int out)> a_xx;
    std::function<Matrix(double t, const Vector& x, const Vector& u, int comp, int out)> b_xx;
    std::function<Matrix(double t, const Vector& x, const Vector& u)> g_xx;
    std::function<Matrix(const Vector& x)> h_xx;
};

inline void check_control_problem(const ControlProblem& pr) {
    if (!pr.S) throw std::invalid_argument("control problem: missing semigroup");
    if (pr.d < 1 || pr.control_dim < 1) throw std::invalid_argument("control problem: bad dimensions");
    if (pr.x0.size() != pr.S->dim()) throw std::invalid_argument("control problem: x0 dimension mismatch");
    if (!pr.a || !pr.b || !pr.g || !pr.h) throw std::invalid_argument("control problem: missing dynamics or cost");
    if (!pr.a_x || !pr.b_x || !pr.g_x || !pr.h_x || !pr.a_xx || !pr.b_xx || !pr.g_xx || !pr.h_xx)
        throw std::invalid_argument("control problem: missing derivatives");
}

//Admissible control values probed by the optimality checks.
struct ControlSet {
    std::vector<Vector> points;

    static ControlSet list(std::vector<Vector> pts) { return ControlSet{std::move(pts)}; }

    //Uniform lattice with per_axis points per coordinate of [lo, hi].
    static ControlSet lattice(const Vector& lo, const Vector& hi, int per_axis) {
        if (lo.size() != hi.size() || per_axis < 2) throw std::invalid_argument("ControlSet::lattice: bad arguments");
        const int dim = static_cast<int>(lo.size());
        ControlSet out;
        int total = 1;
        for (int i = 0; i < dim; ++i) total *= per_axis;
        for (int idx = 0; idx < total; ++idx) {
            Vector u(dim);
            int rest = idx;
            for (int i = 0; i < dim; ++i) {
                int pos = rest % per_axis;
                rest /= per_axis;
                u[i] = lo[i] + (hi[i] - lo[i]) * pos / (per_axis - 1);
            }
            out.points.push_back(u);
        }
        return out;
    }
};

//H(t, x, u, y, Y) = <y, a> + sum_i <Y_i, b_i> - g.
inline double hamiltonian(const ControlProblem& pr, double t, const Vector& x, const Vector& u,
                          const Vector& y, const std::vector<Vector>& Y) {
    double H = y.dot(pr.a(t, x, u)) - pr.g(t, x, u);
    for (int i = 0; i < pr.d; ++i) H += Y[i].dot(pr.b(t, x, u, i));
    return H;
}

//E[ sum_k g(t_k, x_k, u_k) dt + h(x_N) ].
inline double evaluate_cost(const ControlProblem& pr, const TimeGrid& grid, const ControlledPath& path) {
    const int n = path.x.n_paths();
    double acc = 0.0;
    for (int p = 0; p < n; ++p) {
        for (int k = 0; k < grid.n_steps(); ++k)
            acc += pr.g(grid.node(k), path.x.at(p, k), path.u.at(p, k)) * grid.dt();
        acc += pr.h(path.x.at(p, grid.n_steps()));
    }
    return acc / n;
}

inline ControlledPath simulate_problem(const ControlProblem& pr, const TimeGrid& grid,
                                       const BrownianBundle& noise, const ControlRule& control,
                                       int n_workers = 1) {
    check_control_problem(pr);
    StateDrift a = [&pr, &grid](int k, const Vector& x, const Vector& u) { return pr.a(grid.node(k), x, u); };
    StateDiffusion b = [&pr, &grid](int k, const Vector& x, const Vector& u, int i) {
        return pr.b(grid.node(k), x, u, i);
    };
    return simulate_controlled(*pr.S, grid, noise, pr.x0, pr.control_dim, a, b, control, n_workers);
}

struct DerivativeReport {
    double a_x_err, b_x_err, g_x_err, h_x_err;
    double a_xx_err, b_xx_err, g_xx_err, h_xx_err;
    double max_err;
};

namespace detail {

//Relative error between an analytic directional derivative and a central
//difference; scale guards the zero-derivative case.
inline double rel_fd_gap(double analytic, double fd, double scale) {
    return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), scale});
}

} // namespace detail

//Central-difference audit of all supplied derivatives at randomized probe
//points.  Second derivatives are differenced from the supplied first
//derivatives, so a wrong gradient shows up in both layers.
inline DerivativeReport check_derivatives(const ControlProblem& pr, int n_probes = 8,
                                          std::uint64_t seed = 2026) {
    check_control_problem(pr);
    const int m = pr.S->dim();
    const int cd = pr.control_dim;
    const double h = 1e-5, scale = 1.0;
    DerivativeReport rep{};
    const std::uint64_t key = path_key(seed, 77);
    std::uint64_t ctr = 0;
    auto draw = [&](int size) {
        Vector v(size);
        for (int i = 0; i < size; ++i) v[i] = standard_normal(key, ctr++);
        return v;
    };

    for (int probe = 0; probe < n_probes; ++probe) {
        double t = 0.5 * (1.0 + std::tanh(standard_normal(key, ctr++)));
        Vector x = draw(m), u = draw(cd);
        for (int j = 0; j < m; ++j) {
            Vector xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;

            Vector fd_a = (pr.a(t, xp, u) - pr.a(t, xm, u)) / (2 * h);
            Matrix Ja = pr.a_x(t, x, u);
            for (int i = 0; i < m; ++i) rep.a_x_err = std::max(rep.a_x_err, detail::rel_fd_gap(Ja(i, j), fd_a[i], scale));

            double fd_g = (pr.g(t, xp, u) - pr.g(t, xm, u)) / (2 * h);
            rep.g_x_err = std::max(rep.g_x_err, detail::rel_fd_gap(pr.g_x(t, x, u)[j], fd_g, scale));

            double fd_h = (pr.h(xp) - pr.h(xm)) / (2 * h);
            rep.h_x_err = std::max(rep.h_x_err, detail::rel_fd_gap(pr.h_x(x)[j], fd_h, scale));

            Vector fd_gx = (pr.g_x(t, xp, u) - pr.g_x(t, xm, u)) / (2 * h);
            Matrix Hg = pr.g_xx(t, x, u);
            for (int i = 0; i < m; ++i) rep.g_xx_err = std::max(rep.g_xx_err, detail::rel_fd_gap(Hg(i, j), fd_gx[i], scale));

            Vector fd_hx = (pr.h_x(xp) - pr.h_x(xm)) / (2 * h);
            Matrix Hh = pr.h_xx(x);
            for (int i = 0; i < m; ++i) rep.h_xx_err = std::max(rep.h_xx_err, detail::rel_fd_gap(Hh(i, j), fd_hx[i], scale));

            Matrix fd_ax = (pr.a_x(t, xp, u) - pr.a_x(t, xm, u)) / (2 * h);
            for (int out = 0; out < m; ++out) {
                Matrix Ha = pr.a_xx(t, x, u, out);
                for (int i = 0; i < m; ++i)
                    rep.a_xx_err = std::max(rep.a_xx_err, detail::rel_fd_gap(Ha(i, j), fd_ax(out, i), scale));
            }

            for (int c = 0; c < pr.d; ++c) {
                Vector fd_b = (pr.b(t, xp, u, c) - pr.b(t, xm, u, c)) / (2 * h);
                Matrix Jb = pr.b_x(t, x, u, c);
                for (int i = 0; i < m; ++i) rep.b_x_err = std::max(rep.b_x_err, detail::rel_fd_gap(Jb(i, j), fd_b[i], scale));

                Matrix fd_bx = (pr.b_x(t, xp, u, c) - pr.b_x(t, xm, u, c)) / (2 * h);
                for (int out = 0; out < m; ++out) {
                    Matrix Hb = pr.b_xx(t, x, u, c, out);
                    for (int i = 0; i < m; ++i)
                        rep.b_xx_err = std::max(rep.b_xx_err, detail::rel_fd_gap(Hb(i, j), fd_bx(out, i), scale));
                }
            }
        }
    }
    rep.max_err = std::max({rep.a_x_err, rep.b_x_err, rep.g_x_err, rep.h_x_err, rep.a_xx_err, rep.b_xx_err,
                            rep.g_xx_err, rep.h_xx_err});
    return rep;
}

} // namespace bsee
