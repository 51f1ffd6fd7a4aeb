#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "brownian.hpp"
#include "linalg.hpp"
#include "time_grid.hpp"

namespace bsee {

enum class NormMode {
    SupInTime,      // (E sup_t |x(t)|^p)^{1/p}
    IntegralInTime  // (E (int |x(t)|^2 dt)^{p/2})^{1/p}, left-endpoint quadrature
};

//Adapted R^dim-valued process sampled at grid nodes.  Values at nodes before
//start_step are identically zero (the process is defined on [node(start), T]).
class VectorProcess {
public:
    VectorProcess(const TimeGrid& grid, int n_paths, int dim, int start_step = 0)
        : grid_(grid), dim_(dim), start_(start_step) {
        if (n_paths < 1) throw std::invalid_argument("VectorProcess: need >= 1 path");
        if (dim < 1) throw std::invalid_argument("VectorProcess: need dim >= 1");
        grid.check_node(start_step);
        paths_.assign(n_paths, Matrix::Zero(dim, grid.n_steps() + 1));
    }

    const TimeGrid& grid() const { return grid_; }
    int n_paths() const { return static_cast<int>(paths_.size()); }
    int dim() const { return dim_; }
    int start_step() const { return start_; }

    Eigen::Ref<const Vector> at(int path, int node) const {
        check(path, node);
        return paths_[path].col(node);
    }
    Eigen::Ref<Vector> at(int path, int node) {
        check(path, node);
        return paths_[path].col(node);
    }

    //Brownian node values as a process (dim = number of noise components).
    static VectorProcess brownian_values(const BrownianBundle& noise) {
        VectorProcess out(noise.grid(), noise.n_paths(), noise.dim_noise());
        for (int p = 0; p < noise.n_paths(); ++p)
            for (int k = 0; k <= noise.grid().n_steps(); ++k)
                for (int i = 0; i < noise.dim_noise(); ++i)
                    out.at(p, k)(i) = noise.value(p, k, i);
        return out;
    }

private:
    void check(int path, int node) const {
        if (path < 0 || path >= n_paths()) throw std::invalid_argument("VectorProcess: path out of range");
        grid_.check_node(node);
    }

    TimeGrid grid_;
    int dim_, start_;
    std::vector<Matrix> paths_;
};

//Adapted operator-valued (dim x dim matrix) process sampled at grid nodes.
class OperatorProcess {
public:
    OperatorProcess(const TimeGrid& grid, int n_paths, int dim, int start_step = 0)
        : grid_(grid), dim_(dim), start_(start_step) {
        if (n_paths < 1) throw std::invalid_argument("OperatorProcess: need >= 1 path");
        if (dim < 1) throw std::invalid_argument("OperatorProcess: need dim >= 1");
        grid.check_node(start_step);
        paths_.assign(n_paths, Matrix::Zero(dim, static_cast<Eigen::Index>(dim) * (grid.n_steps() + 1)));
    }

    const TimeGrid& grid() const { return grid_; }
    int n_paths() const { return static_cast<int>(paths_.size()); }
    int dim() const { return dim_; }
    int start_step() const { return start_; }

    Eigen::Ref<const Matrix> at(int path, int node) const {
        check(path, node);
        return paths_[path].block(0, static_cast<Eigen::Index>(node) * dim_, dim_, dim_);
    }
    Eigen::Ref<Matrix> at(int path, int node) {
        check(path, node);
        return paths_[path].block(0, static_cast<Eigen::Index>(node) * dim_, dim_, dim_);
    }

private:
    void check(int path, int node) const {
        if (path < 0 || path >= n_paths()) throw std::invalid_argument("OperatorProcess: path out of range");
        grid_.check_node(node);
    }

    TimeGrid grid_;
    int dim_, start_;
    std::vector<Matrix> paths_;
};

// ---- norms and pairings ------------------------------------------------

inline double lp_norm(const VectorProcess& x, double p, NormMode mode) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: need p >= 1");
    const int n = x.n_paths();
    const int N = x.grid().n_steps();
    const double dt = x.grid().dt();
    double acc = 0.0;
    for (int path = 0; path < n; ++path) {
        double inner = 0.0;
        if (mode == NormMode::SupInTime) {
            for (int k = x.start_step(); k <= N; ++k)
                inner = std::max(inner, x.at(path, k).norm());
            acc += std::pow(inner, p);
        } else {
            for (int k = x.start_step(); k < N; ++k)
                inner += x.at(path, k).squaredNorm() * dt;
            acc += std::pow(inner, p / 2.0);
        }
    }
    return std::pow(acc / n, 1.0 / p);
}

//Norm of a d-tuple (noise-indexed) process, |Y(t)|^2 = sum_i |Y_i(t)|^2.
inline double lp_norm(const std::vector<VectorProcess>& Y, double p, NormMode mode) {
    if (Y.empty()) throw std::invalid_argument("lp_norm: empty tuple");
    const int n = Y[0].n_paths();
    const int N = Y[0].grid().n_steps();
    const double dt = Y[0].grid().dt();
    double acc = 0.0;
    for (int path = 0; path < n; ++path) {
        double inner = 0.0;
        if (mode == NormMode::SupInTime) {
            for (int k = Y[0].start_step(); k <= N; ++k) {
                double s = 0.0;
                for (const auto& Yi : Y) s += Yi.at(path, k).squaredNorm();
                inner = std::max(inner, std::sqrt(s));
            }
            acc += std::pow(inner, p);
        } else {
            for (int k = Y[0].start_step(); k < N; ++k) {
                double s = 0.0;
                for (const auto& Yi : Y) s += Yi.at(path, k).squaredNorm();
                inner += s * dt;
            }
            acc += std::pow(inner, p / 2.0);
        }
    }
    return std::pow(acc / n, 1.0 / p);
}

//sup_t (E |x(t)|^2)^{1/2} over nodes.
inline double sup_rms(const VectorProcess& x) {
    const int n = x.n_paths();
    double best = 0.0;
    for (int k = x.start_step(); k <= x.grid().n_steps(); ++k) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += x.at(p, k).squaredNorm();
        best = std::max(best, std::sqrt(s / n));
    }
    return best;
}

inline double sup_rms_frobenius(const OperatorProcess& X) {
    const int n = X.n_paths();
    double best = 0.0;
    for (int k = X.start_step(); k <= X.grid().n_steps(); ++k) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += X.at(p, k).squaredNorm();
        best = std::max(best, std::sqrt(s / n));
    }
    return best;
}

//L^2(t; L^r(omega)) mixed norm over [node(start), T): ( int (E|x|^r)^{2/r} dt )^{1/2}.
inline double mixed_time_omega_norm(const VectorProcess& x, double r) {
    if (!(r >= 1.0)) throw std::invalid_argument("mixed_time_omega_norm: need r >= 1");
    const int n = x.n_paths();
    const double dt = x.grid().dt();
    double acc = 0.0;
    for (int k = x.start_step(); k < x.grid().n_steps(); ++k) {
        double m = 0.0;
        for (int p = 0; p < n; ++p) m += std::pow(x.at(p, k).norm(), r);
        acc += std::pow(m / n, 2.0 / r) * dt;
    }
    return std::sqrt(acc);
}

//E int <a(t), b(t)> dt with left-endpoint quadrature, from the later of the
//two start nodes.
inline double pairing(const VectorProcess& a, const VectorProcess& b) {
    if (a.n_paths() != b.n_paths() || a.dim() != b.dim() ||
        a.grid().n_steps() != b.grid().n_steps())
        throw std::invalid_argument("pairing: incompatible processes");
    const int n = a.n_paths();
    const int start = std::max(a.start_step(), b.start_step());
    const double dt = a.grid().dt();
    double acc = 0.0;
    for (int p = 0; p < n; ++p)
        for (int k = start; k < a.grid().n_steps(); ++k)
            acc += a.at(p, k).dot(b.at(p, k)) * dt;
    return acc / n;
}

inline double pairing(const std::vector<VectorProcess>& a, const std::vector<VectorProcess>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("pairing: tuple size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += pairing(a[i], b[i]);
    return acc;
}

//E <a(T), b(T)>.
inline double terminal_pairing(const VectorProcess& a, const VectorProcess& b) {
    if (a.n_paths() != b.n_paths() || a.dim() != b.dim())
        throw std::invalid_argument("terminal_pairing: incompatible processes");
    const int n = a.n_paths();
    const int N = a.grid().n_steps();
    double acc = 0.0;
    for (int p = 0; p < n; ++p) acc += a.at(p, N).dot(b.at(p, N));
    return acc / n;
}

} // namespace bsee
