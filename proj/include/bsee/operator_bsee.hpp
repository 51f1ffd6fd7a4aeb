#pragma once

#include "vector_bsee.hpp"

namespace bsee {

//Operator-valued backward equation
//  dP = -(A* + J*) P dt - P (A + J) dt - sum_i K_i* P K_i dt
//       - sum_i (K_i* Q_i + Q_i K_i) dt + F dt + sum_i Q_i dW^i,   P(T) = terminal.
struct OperatorBseeData {
    SemigroupPtr S;                          // state-space semigroup, dim m
    int d = 1;
    MatrixField J;                           // null = 0
    NoiseMatrixField K;                      // null = 0
    MatrixField F;                           // null = 0
    std::function<Matrix(int path)> terminal;
};

struct OperatorBseeSolution {
    OperatorProcess P;
    std::vector<OperatorProcess> Q;
    double max_condition = 0.0;
    int picard_iterations = 0;
};

//Generator of the lifted semigroup T(t)O = S(t) O S(t)* under row-major vec:
//vec_row(A O + O A^T) = (A kron I + I kron A) vec_row(O).
inline Matrix lift_generator(const Matrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("lift_generator: square matrix required");
    Matrix I = Matrix::Identity(A.rows(), A.cols());
    return kron(A, I) + kron(I, A);
}

enum class BackwardMethod { Regression, Transposition };

//Vectorizes the operator equation (row-major) and delegates to the vector
//solvers; the lifted driver carries the J, K coupling and the F term.
inline OperatorBseeSolution solve_operator_bsee(const OperatorBseeData& data, const TimeGrid& grid,
                                                const BrownianBundle& noise, const VectorProcess& state,
                                                const Basis& basis, const BseeSolveOptions& opts = {},
                                                BackwardMethod method = BackwardMethod::Regression) {
    if (!data.S) throw std::invalid_argument("solve_operator_bsee: missing semigroup");
    if (!data.terminal) throw std::invalid_argument("solve_operator_bsee: missing terminal value");
    const int m = data.S->dim();
    const int d = data.d;

    BseeData lifted;
    lifted.S = make_semigroup(lift_generator(data.S->generator()));
    lifted.d = d;
    lifted.terminal = [&data, m](int p) {
        Matrix PT = data.terminal(p);
        if (PT.rows() != m || PT.cols() != m)
            throw std::invalid_argument("solve_operator_bsee: terminal dimension mismatch");
        return vec_row(PT);
    };
    const MatrixField& J = data.J;
    const NoiseMatrixField& K = data.K;
    const MatrixField& F = data.F;
    if (J || K || F) {
        lifted.f = [J, K, F, m, d](int k, int p, const Vector& yhat, const std::vector<Vector>& Yhat) {
            Matrix P = unvec_row(yhat, m, m);
            Matrix G = Matrix::Zero(m, m);
            if (F) G += F(p, k);
            if (J) {
                Matrix Jk = J(p, k);
                G -= Jk.transpose() * P + P * Jk;
            }
            if (K)
                for (int i = 0; i < d; ++i) {
                    Matrix Ki = K(p, k, i);
                    Matrix Qi = unvec_row(Yhat[i], m, m);
                    G -= Ki.transpose() * P * Ki + Ki.transpose() * Qi + Qi * Ki;
                }
            return vec_row(G);
        };
    }

    BseeSolution vecsol = (method == BackwardMethod::Regression)
                              ? solve_backward_regression(lifted, grid, noise, state, basis, opts)
                              : transposition_solve(lifted, grid, noise, state, basis, opts);

    OperatorBseeSolution out{OperatorProcess(grid, noise.n_paths(), m), {}, vecsol.max_condition,
                             vecsol.picard_iterations};
    out.Q.assign(d, OperatorProcess(grid, noise.n_paths(), m));
    for (int p = 0; p < noise.n_paths(); ++p)
        for (int k = 0; k <= grid.n_steps(); ++k) {
            out.P.at(p, k) = unvec_row(vecsol.y.at(p, k), m, m);
            for (int i = 0; i < d; ++i) out.Q[i].at(p, k) = unvec_row(vecsol.Y[i].at(p, k), m, m);
        }
    return out;
}

//Forward test pair for the operator duality identity: two controlled states
//driven on common noise from node start_step.
struct OperatorTestPair {
    int start_step = 0;
    InitialValue xi1, xi2;
    VectorField u1, u2; // may be null
    NoiseField v1, v2;  // may be null
};

struct OperatorDualityResidual {
    double terminal_term;   // E<P_T x1(T), x2(T)>
    double F_term;          // E int <F x1, x2>
    double P_initial_term;  // E<P(t) xi1, xi2>
    double P_u1_term;       // E int <P u1, x2>
    double P_u2_term;       // E int <P x1, u2>
    double P_Kx1_v2_term;   // E int sum_i <P K_i x1, v2_i>
    double P_v1_term;       // E int sum_i <P v1_i, K_i x2 + v2_i>
    double Q_v1_term;       // E int sum_i <Q_i v1_i, x2>
    double Q_v2_term;       // E int sum_i <x1, Q_i* v2_i>
    double residual;        // (terminal - F) - sum of right-hand terms
    double normalized;
};

inline OperatorDualityResidual transposition_residual_operator(const OperatorBseeData& data,
                                                               const TimeGrid& grid,
                                                               const BrownianBundle& noise,
                                                               const OperatorBseeSolution& sol,
                                                               const OperatorTestPair& test,
                                                               int n_workers = 1) {
    const int N = grid.n_steps();
    const int n = noise.n_paths();
    const int d = data.d;
    const double dt = grid.dt();
    const int t0 = test.start_step;
    grid.check_node(t0);

    VectorProcess x1 = simulate_linear(*data.S, grid, noise, t0, test.xi1, data.J, data.K, test.u1, test.v1, n_workers);
    VectorProcess x2 = simulate_linear(*data.S, grid, noise, t0, test.xi2, data.J, data.K, test.u2, test.v2, n_workers);

    OperatorDualityResidual out{};
    for (int p = 0; p < n; ++p) {
        out.terminal_term += (data.terminal(p) * x1.at(p, N)).dot(x2.at(p, N));
        out.P_initial_term += (sol.P.at(p, t0) * test.xi1(p)).dot(test.xi2(p));
        for (int k = t0; k < N; ++k) {
            const auto P = sol.P.at(p, k);
            if (data.F) out.F_term += (data.F(p, k) * x1.at(p, k)).dot(x2.at(p, k)) * dt;
            if (test.u1) out.P_u1_term += (P * test.u1(p, k)).dot(x2.at(p, k)) * dt;
            if (test.u2) out.P_u2_term += (P * x1.at(p, k)).dot(test.u2(p, k)) * dt;
            for (int i = 0; i < d; ++i) {
                Vector v1i = test.v1 ? test.v1(p, k, i) : Vector();
                Vector v2i = test.v2 ? test.v2(p, k, i) : Vector();
                Matrix Ki = data.K ? data.K(p, k, i) : Matrix();
                if (v2i.size() && data.K) out.P_Kx1_v2_term += (P * (Ki * x1.at(p, k))).dot(v2i) * dt;
                if (v1i.size()) {
                    Vector rhs = v2i.size() ? v2i : Vector::Zero(x2.dim());
                    if (data.K) rhs += Ki * x2.at(p, k);
                    out.P_v1_term += (P * v1i).dot(rhs) * dt;
                    out.Q_v1_term += (sol.Q[i].at(p, k) * v1i).dot(x2.at(p, k)) * dt;
                }
                if (v2i.size())
                    out.Q_v2_term += x1.at(p, k).dot(sol.Q[i].at(p, k).transpose() * v2i) * dt;
            }
        }
    }
    for (double* t : {&out.terminal_term, &out.F_term, &out.P_initial_term, &out.P_u1_term, &out.P_u2_term,
                      &out.P_Kx1_v2_term, &out.P_v1_term, &out.Q_v1_term, &out.Q_v2_term})
        *t /= n;
    out.residual = out.terminal_term - out.F_term -
                   (out.P_initial_term + out.P_u1_term + out.P_u2_term + out.P_Kx1_v2_term +
                    out.P_v1_term + out.Q_v1_term + out.Q_v2_term);
    double denom = std::abs(out.terminal_term) + std::abs(out.F_term) + std::abs(out.P_initial_term) +
                   std::abs(out.P_u1_term) + std::abs(out.P_u2_term) + std::abs(out.P_Kx1_v2_term) +
                   std::abs(out.P_v1_term) + std::abs(out.Q_v1_term) + std::abs(out.Q_v2_term);
    out.normalized = denom > 0.0 ? out.residual / denom : 0.0;
    return out;
}

enum class QDirection { Forward, Adjoint };

//Finite-dimensional realization of the relaxed Q-operators: the image of a
//forward triple (xi, u, v) is s -> Q_i(s) x(s) (Forward) or Q_i(s)* x(s)
//(Adjoint), with x the mild solution driven by the full triple from node
//start_step on common noise.
inline std::vector<VectorProcess> apply_Q_relaxed(const OperatorBseeData& data,
                                                  const OperatorBseeSolution& sol, const TimeGrid& grid,
                                                  const BrownianBundle& noise, QDirection which,
                                                  int start_step, const InitialValue& xi,
                                                  const VectorField& u, const NoiseField& v,
                                                  int n_workers = 1) {
    const int d = data.d;
    VectorProcess x = simulate_linear(*data.S, grid, noise, start_step, xi, data.J, data.K, u, v, n_workers);
    std::vector<VectorProcess> out(d, VectorProcess(grid, noise.n_paths(), data.S->dim(), start_step));
    for (int p = 0; p < noise.n_paths(); ++p)
        for (int k = start_step; k <= grid.n_steps(); ++k)
            for (int i = 0; i < d; ++i)
                out[i].at(p, k) = which == QDirection::Forward ? Vector(sol.Q[i].at(p, k) * x.at(p, k))
                                                               : Vector(sol.Q[i].at(p, k).transpose() * x.at(p, k));
    return out;
}

struct GalerkinStage {
    int rank;
    double error;   // sup_t (E |P_rank(t) - P_full(t)|_F^2)^{1/2}
    double q_error; // same for Q
};

//Re-solves with data compressed to the leading ranks (terminal and F only,
//the equation itself is untouched) and reports errors against the full solve.
inline std::vector<GalerkinStage> galerkin_sequence(const OperatorBseeData& data, const TimeGrid& grid,
                                                    const BrownianBundle& noise, const VectorProcess& state,
                                                    const Basis& basis, const std::vector<int>& ranks,
                                                    const BseeSolveOptions& opts = {},
                                                    BackwardMethod method = BackwardMethod::Regression) {
    OperatorBseeSolution full = solve_operator_bsee(data, grid, noise, state, basis, opts, method);
    const int n = noise.n_paths();
    const int N = grid.n_steps();
    std::vector<GalerkinStage> stages;
    for (int rank : ranks) {
        OperatorBseeData trunc = data;
        trunc.terminal = [&data, rank](int p) { return project(Matrix(data.terminal(p)), rank); };
        if (data.F) {
            MatrixField F = data.F;
            trunc.F = [F, rank](int p, int k) { return project(Matrix(F(p, k)), rank); };
        }
        OperatorBseeSolution s = solve_operator_bsee(trunc, grid, noise, state, basis, opts, method);
        double err = 0.0, qerr = 0.0;
        for (int k = 0; k <= N; ++k) {
            double e = 0.0, qe = 0.0;
            for (int p = 0; p < n; ++p) {
                e += (s.P.at(p, k) - full.P.at(p, k)).squaredNorm();
                for (int i = 0; i < data.d; ++i) qe += (s.Q[i].at(p, k) - full.Q[i].at(p, k)).squaredNorm();
            }
            err = std::max(err, std::sqrt(e / n));
            qerr = std::max(qerr, std::sqrt(qe / n));
        }
        stages.push_back(GalerkinStage{rank, err, qerr});
    }
    return stages;
}

// ---- flowed step-process (partition) machinery -------------------------

//Element of the flowed step-process class on n_blocks equal blocks: on block
//b it equals U(., t_b) h_b with U the homogeneous (J, K)-flow and h_b an
//F_{t_b}-measurable slice.
struct StepElement {
    int n_blocks = 1;
    std::vector<InitialValue> h;
};

//Evaluates the element as a process on the grid: flows each block's slice
//from the block start; the final node carries the last block's flow value.
inline VectorProcess materialize_step_element(const OperatorBseeData& data, const TimeGrid& grid,
                                              const BrownianBundle& noise, const StepElement& elem,
                                              int n_workers = 1) {
    if (static_cast<int>(elem.h.size()) != elem.n_blocks)
        throw std::invalid_argument("materialize_step_element: block count mismatch");
    const int spb = grid.steps_per_block(elem.n_blocks);
    const int m = data.S->dim();
    VectorProcess out(grid, noise.n_paths(), m);
    for (int b = 0; b < elem.n_blocks; ++b) {
        int lo = b * spb;
        int hi = (b + 1 == elem.n_blocks) ? grid.n_steps() : (b + 1) * spb - 1;
        VectorProcess flow = flow_operator(*data.S, grid, noise, data.J, data.K, lo, elem.h[b], n_workers);
        for (int p = 0; p < noise.n_paths(); ++p)
            for (int k = lo; k <= hi; ++k) out.at(p, k) = flow.at(p, k);
    }
    return out;
}

//The unflowed step process: constant h_b on each block.
inline VectorProcess step_element_values(const TimeGrid& grid, const BrownianBundle& noise, int dim,
                                         const StepElement& elem) {
    const int spb = grid.steps_per_block(elem.n_blocks);
    VectorProcess out(grid, noise.n_paths(), dim);
    for (int p = 0; p < noise.n_paths(); ++p)
        for (int b = 0; b < elem.n_blocks; ++b) {
            Vector hb = elem.h[b](p);
            int hi = (b + 1 == elem.n_blocks) ? grid.n_steps() : (b + 1) * spb - 1;
            for (int k = b * spb; k <= hi; ++k) out.at(p, k) = hb;
        }
    return out;
}

struct PartitionProjection {
    StepElement element;
    VectorProcess flowed;
    double l2_distance; // L2(omega x [0,T]) between the input and the flowed element
};

//Projects a step process (piecewise constant on a coarser aligned partition)
//onto the flowed class with n_blocks blocks: block slices are the input's
//values at block starts, so refining reuses the coarse slices on every fine
//block inside a coarse one.
inline PartitionProjection partition_project(const OperatorBseeData& data, const TimeGrid& grid,
                                             const BrownianBundle& noise, const VectorProcess& v,
                                             int n_blocks, int n_workers = 1) {
    const int spb = grid.steps_per_block(n_blocks);
    StepElement elem;
    elem.n_blocks = n_blocks;
    for (int b = 0; b < n_blocks; ++b) {
        int start = b * spb;
        Matrix slice(v.dim(), v.n_paths());
        for (int p = 0; p < v.n_paths(); ++p) slice.col(p) = v.at(p, start);
        elem.h.push_back([slice](int p) { return Vector(slice.col(p)); });
    }
    PartitionProjection out{elem, materialize_step_element(data, grid, noise, elem, n_workers), 0.0};
    double acc = 0.0;
    for (int p = 0; p < v.n_paths(); ++p)
        for (int k = 0; k < grid.n_steps(); ++k)
            acc += (v.at(p, k) - out.flowed.at(p, k)).squaredNorm() * grid.dt();
    out.l2_distance = std::sqrt(acc / v.n_paths());
    return out;
}

struct QnResult {
    std::vector<VectorProcess> Qn; // (Q^n v)_i(t) = Q_i(t) U(t, t_b) h_b
    VectorProcess flowed;
    double value_norm;   // |Q^n v| in L^2(t; L^{4/3}(omega))
    double input_norm;   // |v~| (unflowed step values) in L^2(t; L^4(omega))
};

//Discrete partition operator from the solved Q: on each block the flowed
//slice is multiplied pointwise by Q (or Q* for the adjoint direction).  The
//norms realize the boundedness estimate's two sides for p = 2.
inline QnResult build_Qn(const OperatorBseeData& data, const OperatorBseeSolution& sol, const TimeGrid& grid,
                         const BrownianBundle& noise, const StepElement& elem,
                         QDirection which = QDirection::Forward, int n_workers = 1) {
    const int d = data.d;
    const int m = data.S->dim();
    QnResult out{{}, materialize_step_element(data, grid, noise, elem, n_workers), 0.0, 0.0};
    out.Qn.assign(d, VectorProcess(grid, noise.n_paths(), m));
    for (int p = 0; p < noise.n_paths(); ++p)
        for (int k = 0; k <= grid.n_steps(); ++k)
            for (int i = 0; i < d; ++i)
                out.Qn[i].at(p, k) = which == QDirection::Forward
                                         ? Vector(sol.Q[i].at(p, k) * out.flowed.at(p, k))
                                         : Vector(sol.Q[i].at(p, k).transpose() * out.flowed.at(p, k));

    // mixed norms: H^d-valued, so aggregate components before the omega-norm
    const int n = noise.n_paths();
    const double dt = grid.dt();
    double accQ = 0.0, accV = 0.0;
    VectorProcess vals = step_element_values(grid, noise, m, elem);
    for (int k = 0; k < grid.n_steps(); ++k) {
        double mq = 0.0, mv = 0.0;
        for (int p = 0; p < n; ++p) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += out.Qn[i].at(p, k).squaredNorm();
            mq += std::pow(std::sqrt(s), 4.0 / 3.0);
            mv += std::pow(vals.at(p, k).norm(), 4.0);
        }
        accQ += std::pow(mq / n, 2.0 / (4.0 / 3.0)) * dt;
        accV += std::pow(mv / n, 2.0 / 4.0) * dt;
    }
    out.value_norm = std::sqrt(accQ);
    out.input_norm = std::sqrt(accV);
    return out;
}

} // namespace bsee
