#pragma once

#include <functional>
#include <optional>

#include "forward_see.hpp"
#include "regression.hpp"

namespace bsee {

//Driver f(t, y, Y) evaluated pathwise; Y carries one vector per noise component.
using BseeDriver = std::function<Vector(int step, int path, const Vector& y, const std::vector<Vector>& Y)>;

//Backward equation dy = -A* y dt + f(t, y, Y) dt + Y dW, y(T) = terminal.
struct BseeData {
    SemigroupPtr S;
    int d = 1;                 // noise components
    BseeDriver f;              // null means f == 0
    InitialValue terminal;     // y_T per path (F_T-measurable)
    double lipschitz = 0.0;    // declared driver Lipschitz constant (diagnostic)
};

struct BseeSolveOptions {
    int n_workers = 1;
    bool strict_rank = false;
    double pivot_tol = 1e-10;
    int picard_max = 20;
    double picard_tol = 1e-6;
    unsigned direction_seed = 0; // test-family direction frame (transposition solver)
    int basis_variant = 0;       // invertible basis remap (transposition solver)
};

struct BseeSolution {
    VectorProcess y;
    std::vector<VectorProcess> Y;
    double max_condition = 0.0;
    int picard_iterations = 0;
    double picard_residual = 0.0;
};

namespace detail {

inline void check_bsee_inputs(const BseeData& data, const TimeGrid& grid, const BrownianBundle& noise) {
    if (!data.S) throw std::invalid_argument("bsee: missing semigroup");
    if (!data.terminal) throw std::invalid_argument("bsee: missing terminal value");
    if (data.d != noise.dim_noise()) throw std::invalid_argument("bsee: noise dimension mismatch");
    if (grid.n_steps() != noise.grid().n_steps()) throw std::invalid_argument("bsee: grid/noise mismatch");
}

inline Vector eval_driver(const BseeData& data, int step, int path, const Vector& y,
                          const std::vector<Vector>& Y) {
    if (!data.f) return Vector::Zero(y.size());
    Vector fv = data.f(step, path, y, Y);
    if (fv.size() != y.size()) throw std::invalid_argument("bsee: driver dimension mismatch");
    double scale = 1.0 + y.norm();
    for (const auto& Yi : Y) scale += Yi.norm();
    if (!fv.allFinite() || fv.norm() > 1e6 * scale)
        throw std::runtime_error("bsee: driver magnitude exceeds 1e6 * solution scale");
    return fv;
}

//Invertible feature remap used to vary the transposition test family without
//changing its span.
inline Matrix basis_remap(int B, int variant) {
    Matrix M = Matrix::Identity(B, B);
    if (variant == 0) return M;
    for (int i = 0; i < B; ++i)
        for (int j = i + 1; j < B; ++j) M(i, j) = 0.5 / static_cast<double>(variant + j - i);
    return M;
}

} // namespace detail

//Backward regression sweep (dynamic-programming form).  One step:
//  m_k   = S*(dt) y_{k+1}
//  y^p_k = E[m_k | F_k]                       (regression on basis(state_k))
//  Y_i,k = E[(m_k - y^p_k) dW^i_k | F_k] / dt (centered; same conditional
//          expectation as E[m_k dW]/dt, far lower Monte Carlo noise)
//  y_k   = y^p_k - dt f(t_k, y^p_k, Y_k)
inline BseeSolution solve_backward_regression(const BseeData& data, const TimeGrid& grid,
                                              const BrownianBundle& noise, const VectorProcess& state,
                                              const Basis& basis, const BseeSolveOptions& opts = {}) {
    detail::check_bsee_inputs(data, grid, noise);
    const int m = data.S->dim();
    const int N = grid.n_steps();
    const int n = noise.n_paths();
    const int d = data.d;
    const double dt = grid.dt();
    const Matrix SdtT = data.S->matrix(dt).transpose();

    BseeSolution sol{VectorProcess(grid, n, m), {}, 0.0, 1, 0.0};
    sol.Y.assign(d, VectorProcess(grid, n, m));

    for (int p = 0; p < n; ++p) {
        Vector yT = data.terminal(p);
        if (yT.size() != m) throw std::invalid_argument("bsee: terminal dimension mismatch");
        if (!yT.allFinite()) throw std::invalid_argument("bsee: non-finite terminal value");
        sol.y.at(p, N) = yT;
    }

    Matrix targets(n, m);
    std::vector<Vector> Yrow(d, Vector::Zero(m));
    for (int k = N - 1; k >= 0; --k) {
        for_each_path_range(n, opts.n_workers, [&](int lo, int hi) {
            for (int p = lo; p < hi; ++p) targets.row(p) = (SdtT * sol.y.at(p, k + 1)).transpose();
        });
        Matrix Phi = design_matrix(state, basis, k);
        StepRegressor reg(Phi, opts.pivot_tol, opts.strict_rank);
        sol.max_condition = std::max(sol.max_condition, reg.condition());

        Matrix ypred = Phi * reg.solve(targets); // n x m fitted E[m_k | F_k]
        Matrix resid = targets - ypred;
        Matrix ytargets(n, d * m);
        for (int p = 0; p < n; ++p)
            for (int i = 0; i < d; ++i)
                ytargets.row(p).segment(static_cast<Eigen::Index>(i) * m, m) =
                    resid.row(p) * (noise.increment(p, k, i) / dt);
        Matrix Yfit = Phi * reg.solve(ytargets);

        for (int p = 0; p < n; ++p) {
            for (int i = 0; i < d; ++i) {
                Yrow[i] = Yfit.row(p).segment(static_cast<Eigen::Index>(i) * m, m).transpose();
                sol.Y[i].at(p, k) = Yrow[i];
            }
            Vector yp = ypred.row(p).transpose();
            sol.y.at(p, k) = yp - dt * detail::eval_driver(data, k, p, yp, Yrow);
        }
    }
    return sol;
}

//Transposition solver.  Unknowns are basis-coefficient processes for y and Y;
//for each step k the duality identity against the family of single-block test
//processes (indicator of [t_k, t_{k+1}) times a feature times a direction)
//reduces to the least-squares system  Gram_k C_k = E[phi s_k^T], where
//  s_k = S*(T-t_k) y_T - sum_{l>k} dt S*(t_l - t_k) f(t_l, y_l, Y_l)
//aggregates the simulated dual test states.  dW-weighted blocks give the
//Y equations from the centered residual.  The driver is frozen per Picard
//sweep; the loop stops when coefficients settle.
inline BseeSolution transposition_solve(const BseeData& data, const TimeGrid& grid,
                                        const BrownianBundle& noise, const VectorProcess& state,
                                        const Basis& basis, const BseeSolveOptions& opts = {},
                                        int start_step = 0) {
    detail::check_bsee_inputs(data, grid, noise);
    grid.check_node(start_step);
    if (start_step >= grid.n_steps()) throw std::invalid_argument("transposition_solve: empty window");
    const int m = data.S->dim();
    const int N = grid.n_steps();
    const int n = noise.n_paths();
    const int d = data.d;
    const int B = basis.size;
    const double dt = grid.dt();
    const Matrix SdtT = data.S->matrix(dt).transpose();
    const Matrix R = direction_frame(m, opts.direction_seed);
    const Matrix V = detail::basis_remap(B, opts.basis_variant);

    BseeSolution sol{VectorProcess(grid, n, m, start_step), {}, 0.0, 0, 0.0};
    sol.Y.assign(d, VectorProcess(grid, n, m, start_step));
    for (int p = 0; p < n; ++p) {
        Vector yT = data.terminal(p);
        if (yT.size() != m || !yT.allFinite()) throw std::invalid_argument("bsee: bad terminal value");
        sol.y.at(p, N) = yT;
    }

    std::vector<StepRegressor> regs;
    std::vector<Matrix> designs;
    regs.reserve(N - start_step);
    designs.reserve(N - start_step);
    for (int k = start_step; k < N; ++k) {
        designs.push_back(design_matrix(state, basis, k) * V);
        regs.emplace_back(designs.back(), opts.pivot_tol, opts.strict_rank);
        sol.max_condition = std::max(sol.max_condition, regs.back().condition());
    }

    Matrix s(n, m);
    std::vector<Vector> Yrow(d, Vector::Zero(m));
    double change = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= opts.picard_max; ++iter) {
        sol.picard_iterations = iter;
        change = 0.0;
        for (int p = 0; p < n; ++p) s.row(p) = sol.y.at(p, N).transpose();
        for (int k = N - 1; k >= start_step; --k) {
            if (data.f) {
                // fold f(t_{k+1}) into the dual state: right-rectangle sum of
                // the driver integral, with the terminal y and Y == 0 at
                // k+1 == N.  Both sweeps then integrate f over all N slabs,
                // and agree exactly for time-constant drivers when S == I.
                for (int p = 0; p < n; ++p) {
                    for (int i = 0; i < d; ++i) Yrow[i] = sol.Y[i].at(p, k + 1);
                    Vector fv = detail::eval_driver(data, k + 1, p, sol.y.at(p, k + 1), Yrow);
                    s.row(p) -= dt * fv.transpose();
                }
            }
            for (int p = 0; p < n; ++p) s.row(p) = (SdtT * s.row(p).transpose()).transpose();

            const Matrix& Phi = designs[k - start_step];
            const StepRegressor& reg = regs[k - start_step];
            Matrix ypred = Phi * reg.solve(s * R); // fitted in rotated directions
            ypred = ypred * R.transpose();
            Matrix resid = s - ypred;
            Matrix ytargets(n, d * m);
            for (int p = 0; p < n; ++p)
                for (int i = 0; i < d; ++i)
                    ytargets.row(p).segment(static_cast<Eigen::Index>(i) * m, m) =
                        resid.row(p) * R * (noise.increment(p, k, i) / dt);
            Matrix Yfit = (Phi * reg.solve(ytargets));
            for (int p = 0; p < n; ++p) {
                Vector ynew = ypred.row(p).transpose();
                change = std::max(change, (ynew - sol.y.at(p, k)).lpNorm<Eigen::Infinity>() /
                                              (1.0 + ynew.lpNorm<Eigen::Infinity>()));
                sol.y.at(p, k) = ynew;
                for (int i = 0; i < d; ++i) {
                    Vector Ynew = (Yfit.row(p).segment(static_cast<Eigen::Index>(i) * m, m) * R.transpose()).transpose();
                    change = std::max(change, (Ynew - sol.Y[i].at(p, k)).lpNorm<Eigen::Infinity>() /
                                                  (1.0 + Ynew.lpNorm<Eigen::Infinity>()));
                    sol.Y[i].at(p, k) = Ynew;
                }
            }
        }
        sol.picard_residual = change;
        if (change <= opts.picard_tol) return sol;
        if (!data.f) return sol; // no driver: one sweep is exact
    }
    throw std::runtime_error("transposition_solve: Picard iteration did not contract (residual " +
                             std::to_string(change) + " after " + std::to_string(opts.picard_max) +
                             " sweeps; driver Lipschitz constant too large for this horizon)");
}

struct TestTriple {
    int start_step = 0;
    InitialValue eta;   // F_{t_start}-measurable initial pairing vector
    VectorField psi1;   // drift test process (may be null)
    NoiseField psi2;    // diffusion test process (may be null)
};

struct DualityResidual {
    double terminal_term;   // E<z(T), y_T>
    double driver_term;     // E int <z, f(t,y,Y)> dt
    double eta_term;        // E<eta, y(t_start)>
    double psi1_term;       // E int <psi1, y> dt
    double psi2_term;       // E int <psi2, Y> dt
    double residual;        // terminal - driver - eta - psi1 - psi2
    double normalized;      // residual / sum of term magnitudes (0 if all vanish)
};

//Evaluates the defining duality identity for a candidate (y, Y) against one
//test triple; z is simulated with the mild forward scheme on the same noise.
inline DualityResidual duality_residual(const BseeData& data, const TimeGrid& grid,
                                        const BrownianBundle& noise, const VectorProcess& y,
                                        const std::vector<VectorProcess>& Y, const TestTriple& test,
                                        int n_workers = 1) {
    detail::check_bsee_inputs(data, grid, noise);
    const int N = grid.n_steps();
    const int n = noise.n_paths();
    const int d = data.d;
    const double dt = grid.dt();
    const int t0 = test.start_step;
    grid.check_node(t0);
    InitialValue eta = test.eta ? test.eta : constant_initial(Vector::Zero(data.S->dim()));

    VectorProcess z = simulate_mild(*data.S, grid, noise, t0, eta, test.psi1, test.psi2, n_workers);

    DualityResidual out{};
    std::vector<Vector> Yrow(d);
    for (int p = 0; p < n; ++p) {
        out.terminal_term += z.at(p, N).dot(data.terminal(p));
        out.eta_term += eta(p).dot(y.at(p, t0));
        for (int k = t0; k < N; ++k) {
            for (int i = 0; i < d; ++i) Yrow[i] = Y[i].at(p, k);
            Vector fv = detail::eval_driver(data, k, p, y.at(p, k), Yrow);
            out.driver_term += z.at(p, k).dot(fv) * dt;
            if (test.psi1) out.psi1_term += test.psi1(p, k).dot(y.at(p, k)) * dt;
            if (test.psi2)
                for (int i = 0; i < d; ++i) out.psi2_term += test.psi2(p, k, i).dot(Yrow[i]) * dt;
        }
    }
    out.terminal_term /= n;
    out.driver_term /= n;
    out.eta_term /= n;
    out.psi1_term /= n;
    out.psi2_term /= n;
    out.residual = out.terminal_term - out.driver_term - out.eta_term - out.psi1_term - out.psi2_term;
    double denom = std::abs(out.terminal_term) + std::abs(out.driver_term) + std::abs(out.eta_term) +
                   std::abs(out.psi1_term) + std::abs(out.psi2_term);
    out.normalized = denom > 0.0 ? out.residual / denom : 0.0;
    return out;
}

struct TimeConsistencyReport {
    double y_discrepancy;   // L2(omega x [t2,T]) distance between the two y's
    double Y_discrepancy;
    double y_relative;
};

//Solves on [t1,T] and on [t2,T] (t1 <= t2) and compares on the overlap.
inline TimeConsistencyReport time_consistency_check(const BseeData& data, const TimeGrid& grid,
                                                    const BrownianBundle& noise, const VectorProcess& state,
                                                    const Basis& basis, int t1_step, int t2_step,
                                                    const BseeSolveOptions& opts = {}) {
    if (t1_step > t2_step) throw std::invalid_argument("time_consistency_check: need t1 <= t2");
    BseeSolution a = transposition_solve(data, grid, noise, state, basis, opts, t1_step);
    BseeSolution b = transposition_solve(data, grid, noise, state, basis, opts, t2_step);
    const int n = noise.n_paths();
    const int N = grid.n_steps();
    const double dt = grid.dt();
    double dy = 0.0, dY = 0.0, ny = 0.0;
    for (int p = 0; p < n; ++p)
        for (int k = t2_step; k < N; ++k) {
            dy += (a.y.at(p, k) - b.y.at(p, k)).squaredNorm() * dt;
            ny += b.y.at(p, k).squaredNorm() * dt;
            for (int i = 0; i < data.d; ++i) dY += (a.Y[i].at(p, k) - b.Y[i].at(p, k)).squaredNorm() * dt;
        }
    TimeConsistencyReport rep{};
    rep.y_discrepancy = std::sqrt(dy / n);
    rep.Y_discrepancy = std::sqrt(dY / n);
    rep.y_relative = rep.y_discrepancy / (std::sqrt(ny / n) + 1e-300);
    return rep;
}

struct WellposednessReport {
    double lhs_y;    // (E sup_t |y|^p)^{1/p}
    double lhs_Y;    // (E (int |Y|^2 dt)^{p/2})^{1/p}
    double rhs;      // |y_T|_{L^p} + int (E|f(t,0,0)|^p)^{1/p} dt
    double ratio;    // (lhs_y + lhs_Y) / rhs, 0 when both sides vanish
};

inline WellposednessReport wellposedness_bound_check(const BseeData& data, const TimeGrid& grid,
                                                     const BrownianBundle& noise, const BseeSolution& sol,
                                                     double p) {
    const int n = noise.n_paths();
    const int N = grid.n_steps();
    const double dt = grid.dt();
    WellposednessReport rep{};
    rep.lhs_y = lp_norm(sol.y, p, NormMode::SupInTime);
    rep.lhs_Y = lp_norm(sol.Y, p, NormMode::IntegralInTime);
    double term = 0.0;
    for (int q = 0; q < n; ++q) term += std::pow(data.terminal(q).norm(), p);
    rep.rhs = std::pow(term / n, 1.0 / p);
    if (data.f) {
        const int m = data.S->dim();
        std::vector<Vector> zeroY(data.d, Vector::Zero(m));
        Vector zero = Vector::Zero(m);
        for (int k = sol.y.start_step(); k < N; ++k) {
            double acc = 0.0;
            for (int q = 0; q < n; ++q) acc += std::pow(data.f(k, q, zero, zeroY).norm(), p);
            rep.rhs += std::pow(acc / n, 1.0 / p) * dt;
        }
    }
    double lhs = rep.lhs_y + rep.lhs_Y;
    rep.ratio = rep.rhs > 0.0 ? lhs / rep.rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return rep;
}

} // namespace bsee
