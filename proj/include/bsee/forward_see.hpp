#pragma once

#include <functional>

#include "brownian.hpp"
#include "model_space.hpp"
#include "parallel.hpp"
#include "process.hpp"

namespace bsee {

//Pathwise coefficient fields.  A null function means "identically zero".
using VectorField = std::function<Vector(int path, int step)>;
using NoiseField = std::function<Vector(int path, int step, int comp)>;
using MatrixField = std::function<Matrix(int path, int step)>;
using NoiseMatrixField = std::function<Matrix(int path, int step, int comp)>;
using InitialValue = std::function<Vector(int path)>;

inline VectorField constant_field(const Vector& v) {
    return [v](int, int) { return v; };
}
inline NoiseField constant_noise_field(const Vector& v) {
    return [v](int, int, int) { return v; };
}
inline MatrixField constant_matrix_field(const Matrix& M) {
    return [M](int, int) { return M; };
}
inline NoiseMatrixField constant_noise_matrix_field(const Matrix& M) {
    return [M](int, int, int) { return M; };
}
inline InitialValue constant_initial(const Vector& v) {
    return [v](int) { return v; };
}

//Exponential-Euler step for the mild equation dz = (A z + psi1) dt + psi2 dW:
//z_{k+1} = S(dt) (z_k + psi1(t_k) dt + sum_i psi2_i(t_k) dW^i_k).
inline VectorProcess simulate_mild(const Semigroup& S, const TimeGrid& grid, const BrownianBundle& noise,
                                   int start_step, const InitialValue& eta,
                                   const VectorField& psi1 = nullptr, const NoiseField& psi2 = nullptr,
                                   int n_workers = 1) {
    if (grid.n_steps() != noise.grid().n_steps())
        throw std::invalid_argument("simulate_mild: grid/noise mismatch");
    const int m = S.dim();
    const int N = grid.n_steps();
    const int d = noise.dim_noise();
    const double dt = grid.dt();
    const Matrix& Sdt = S.matrix(dt);
    VectorProcess out(grid, noise.n_paths(), m, start_step);
    for_each_path_range(noise.n_paths(), n_workers, [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            Vector z = eta(p);
            if (z.size() != m) throw std::invalid_argument("simulate_mild: initial value dimension mismatch");
            if (!z.allFinite()) throw std::invalid_argument("simulate_mild: non-finite initial value");
            out.at(p, start_step) = z;
            for (int k = start_step; k < N; ++k) {
                Vector acc = z;
                if (psi1) acc += psi1(p, k) * dt;
                if (psi2)
                    for (int i = 0; i < d; ++i) acc += psi2(p, k, i) * noise.increment(p, k, i);
                z = Sdt * acc;
                if (!z.allFinite()) throw std::runtime_error("simulate_mild: state blew up");
                out.at(p, k + 1) = z;
            }
        }
    });
    return out;
}

//Exponential-Euler step for dx = ((A + J) x + u) dt + sum_i (K_i x + v_i) dW^i.
inline VectorProcess simulate_linear(const Semigroup& S, const TimeGrid& grid, const BrownianBundle& noise,
                                     int start_step, const InitialValue& xi,
                                     const MatrixField& J = nullptr, const NoiseMatrixField& K = nullptr,
                                     const VectorField& u = nullptr, const NoiseField& v = nullptr,
                                     int n_workers = 1) {
    if (grid.n_steps() != noise.grid().n_steps())
        throw std::invalid_argument("simulate_linear: grid/noise mismatch");
    const int m = S.dim();
    const int N = grid.n_steps();
    const int d = noise.dim_noise();
    const double dt = grid.dt();
    const Matrix& Sdt = S.matrix(dt);
    VectorProcess out(grid, noise.n_paths(), m, start_step);
    for_each_path_range(noise.n_paths(), n_workers, [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            Vector x = xi(p);
            if (x.size() != m) throw std::invalid_argument("simulate_linear: initial value dimension mismatch");
            out.at(p, start_step) = x;
            for (int k = start_step; k < N; ++k) {
                Vector acc = x;
                if (J) acc += (J(p, k) * x) * dt;
                if (u) acc += u(p, k) * dt;
                for (int i = 0; i < d; ++i) {
                    double dw = noise.increment(p, k, i);
                    if (K) acc += (K(p, k, i) * x) * dw;
                    if (v) acc += v(p, k, i) * dw;
                }
                x = Sdt * acc;
                if (!x.allFinite()) throw std::runtime_error("simulate_linear: state blew up");
                out.at(p, k + 1) = x;
            }
        }
    });
    return out;
}

//Flow map of the homogeneous linear equation: column h evolved from node `from_step`.
inline VectorProcess flow_operator(const Semigroup& S, const TimeGrid& grid, const BrownianBundle& noise,
                                   const MatrixField& J, const NoiseMatrixField& K,
                                   int from_step, const InitialValue& h, int n_workers = 1) {
    return simulate_linear(S, grid, noise, from_step, h, J, K, nullptr, nullptr, n_workers);
}

using StateDrift = std::function<Vector(int step, const Vector& x, const Vector& u)>;
using StateDiffusion = std::function<Vector(int step, const Vector& x, const Vector& u, int comp)>;
using ControlRule = std::function<Vector(int path, int step, const Vector& x)>;

struct ControlledPath {
    VectorProcess x;
    VectorProcess u; // control values used at left endpoints; last node repeats step N-1
};

//Closed-loop simulation of dx = (A x + a(t,x,u)) dt + sum_i b_i(t,x,u) dW^i.
inline ControlledPath simulate_controlled(const Semigroup& S, const TimeGrid& grid, const BrownianBundle& noise,
                                          const Vector& x0, int control_dim,
                                          const StateDrift& a, const StateDiffusion& b,
                                          const ControlRule& control, int n_workers = 1) {
    if (grid.n_steps() != noise.grid().n_steps())
        throw std::invalid_argument("simulate_controlled: grid/noise mismatch");
    if (x0.size() != S.dim()) throw std::invalid_argument("simulate_controlled: x0 dimension mismatch");
    const int N = grid.n_steps();
    const int d = noise.dim_noise();
    const double dt = grid.dt();
    const Matrix& Sdt = S.matrix(dt);
    ControlledPath out{VectorProcess(grid, noise.n_paths(), S.dim()),
                       VectorProcess(grid, noise.n_paths(), control_dim)};
    for_each_path_range(noise.n_paths(), n_workers, [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            Vector x = x0;
            out.x.at(p, 0) = x;
            for (int k = 0; k < N; ++k) {
                Vector uk = control(p, k, x);
                if (uk.size() != control_dim)
                    throw std::invalid_argument("simulate_controlled: control dimension mismatch");
                out.u.at(p, k) = uk;
                Vector acc = x + a(k, x, uk) * dt;
                for (int i = 0; i < d; ++i) acc += b(k, x, uk, i) * noise.increment(p, k, i);
                x = Sdt * acc;
                if (!x.allFinite()) throw std::runtime_error("simulate_controlled: state blew up");
                out.x.at(p, k + 1) = x;
            }
            out.u.at(p, N) = out.u.at(p, N - 1);
        }
    });
    return out;
}

//One forcing channel of the tensor equation: initial slice plus (u, v) forcings.
struct ForcedFactor {
    InitialValue xi;
    VectorField u; // may be null
    NoiseField v;  // may be null
};

struct TensorResult {
    OperatorProcess O;
    VectorProcess x1;
    VectorProcess x2;
};

//Integrates the operator-valued product equation
//  dO = (lifted A) O ds + u ds + v dW,   O(start) = xi1 (x) xi2,
//with u = J O + O J* + u1 (x) x2 + x1 (x) u2 + sum_i (K_i O K_i* + (K_i x1) (x) v2_i
//        + v1_i (x) (K_i x2) + v1_i (x) v2_i)
//and v_i = K_i O + O K_i* + v1_i (x) x2 + x1 (x) v2_i,
//where (a (x) b) x = <x,a> b.  The lifted semigroup acts as O -> S O S^T.
//The step adds the product-structure corrections sigma1_i (x) sigma2_j (dW_i dW_j
//- delta_ij dt) and a1 (x) a2 dt^2 (conditionally centered Ito-Taylor terms built
//from the factor paths); they raise the strong order against the pointwise
//product to one and keep the deterministic case exact at nodes.
inline TensorResult simulate_tensor(const Semigroup& S, const TimeGrid& grid, const BrownianBundle& noise,
                                    int start_step, const MatrixField& J, const NoiseMatrixField& K,
                                    const ForcedFactor& f1, const ForcedFactor& f2, int n_workers = 1) {
    const int m = S.dim();
    const int N = grid.n_steps();
    const int d = noise.dim_noise();
    const double dt = grid.dt();
    const Matrix& Sdt = S.matrix(dt);

    VectorProcess x1 = simulate_linear(S, grid, noise, start_step, f1.xi, J, K, f1.u, f1.v, n_workers);
    VectorProcess x2 = simulate_linear(S, grid, noise, start_step, f2.xi, J, K, f2.u, f2.v, n_workers);

    OperatorProcess O(grid, noise.n_paths(), m, start_step);
    for_each_path_range(noise.n_paths(), n_workers, [&](int lo, int hi) {
        std::vector<Vector> sig1(d), sig2(d);
        for (int p = lo; p < hi; ++p) {
            Matrix Op = tensor_outer(f1.xi(p), f2.xi(p));
            O.at(p, start_step) = Op;
            for (int k = start_step; k < N; ++k) {
                const Vector x1k = x1.at(p, k);
                const Vector x2k = x2.at(p, k);
                Vector u1k = f1.u ? f1.u(p, k) : Vector::Zero(m);
                Vector u2k = f2.u ? f2.u(p, k) : Vector::Zero(m);
                Matrix Jk = J ? J(p, k) : Matrix();
                Vector a1 = u1k, a2 = u2k;
                if (J) { a1 += Jk * x1k; a2 += Jk * x2k; }

                Matrix acc = Op;
                Matrix drift = tensor_outer(u1k, x2k) + tensor_outer(x1k, u2k);
                if (J) drift += Jk * Op + Op * Jk.transpose();
                for (int i = 0; i < d; ++i) {
                    Vector v1i = f1.v ? f1.v(p, k, i) : Vector::Zero(m);
                    Vector v2i = f2.v ? f2.v(p, k, i) : Vector::Zero(m);
                    Matrix noise_i = tensor_outer(v1i, x2k) + tensor_outer(x1k, v2i);
                    sig1[i] = v1i;
                    sig2[i] = v2i;
                    if (K) {
                        Matrix Ki = K(p, k, i);
                        drift += Ki * Op * Ki.transpose() + tensor_outer(Ki * x1k, v2i) + tensor_outer(v1i, Ki * x2k);
                        noise_i += Ki * Op + Op * Ki.transpose();
                        sig1[i] += Ki * x1k;
                        sig2[i] += Ki * x2k;
                    }
                    drift += tensor_outer(v1i, v2i);
                    acc += noise_i * noise.increment(p, k, i);
                }
                acc += drift * dt;
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) {
                        double q = noise.increment(p, k, i) * noise.increment(p, k, j) - (i == j ? dt : 0.0);
                        acc += tensor_outer(sig1[i], sig2[j]) * q;
                    }
                acc += tensor_outer(a1, a2) * (dt * dt);
                Op = Sdt * acc * Sdt.transpose();
                if (!Op.allFinite()) throw std::runtime_error("simulate_tensor: state blew up");
                O.at(p, k + 1) = Op;
            }
        }
    });
    return TensorResult{std::move(O), std::move(x1), std::move(x2)};
}

} // namespace bsee
