#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "linalg.hpp"

namespace bsee {

inline constexpr int kMaxDim = 16 * 16; // vectorized operator problems reach dim^2

//Finite section of the state space: everything downstream works in R^dim.
struct ModelSpace {
    int dim;
    explicit ModelSpace(int m) : dim(m) {
        if (m < 1 || m > kMaxDim) throw std::invalid_argument("ModelSpace: dim out of range [1," + std::to_string(kMaxDim) + "]");
    }
};

//Matrix together with the role it plays in an equation; the tag is metadata
//used by reports and validation messages, not by the numerics.
struct LinearOperator {
    Matrix mat;
    std::string role{"coefficient"};

    LinearOperator() = default;
    LinearOperator(Matrix m, std::string r) : mat(std::move(m)), role(std::move(r)) {
        if (mat.rows() != mat.cols()) throw std::invalid_argument("LinearOperator: matrix must be square");
        if (!mat.allFinite()) throw std::invalid_argument("LinearOperator: entries must be finite");
    }
};

/// Builds the generator matrix for one of the supported model families.
///  - "scalar": dim 1, params = {a}
///  - "diagonal_spectrum": params = the dim eigenvalues
///  - "dirichlet_laplacian_1d": tridiagonal (1,-2,1)/h^2 with h = 1/(dim+1), no params
///  - "custom": params = dim*dim entries, row-major
inline Matrix build_generator(const std::string& kind, int dim, const std::vector<double>& params = {}) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("build_generator: dim out of range");
    for (double p : params)
        if (!std::isfinite(p)) throw std::invalid_argument("build_generator: non-finite parameter");

    if (kind == "scalar") {
        if (dim != 1) throw std::invalid_argument("build_generator: scalar kind requires dim == 1");
        if (params.size() != 1) throw std::invalid_argument("build_generator: scalar kind takes one parameter");
        Matrix A(1, 1);
        A(0, 0) = params[0];
        return A;
    }
    if (kind == "diagonal_spectrum") {
        if (static_cast<int>(params.size()) != dim)
            throw std::invalid_argument("build_generator: diagonal_spectrum needs dim eigenvalues");
        Matrix A = Matrix::Zero(dim, dim);
        for (int j = 0; j < dim; ++j) A(j, j) = params[j];
        return A;
    }
    if (kind == "dirichlet_laplacian_1d") {
        if (!params.empty()) throw std::invalid_argument("build_generator: dirichlet_laplacian_1d takes no parameters");
        double h = 1.0 / static_cast<double>(dim + 1);
        double s = 1.0 / (h * h);
        Matrix A = Matrix::Zero(dim, dim);
        for (int j = 0; j < dim; ++j) {
            A(j, j) = -2.0 * s;
            if (j > 0) A(j, j - 1) = s;
            if (j + 1 < dim) A(j, j + 1) = s;
        }
        return A;
    }
    if (kind == "custom") {
        if (static_cast<int>(params.size()) != dim * dim)
            throw std::invalid_argument("build_generator: custom kind needs dim*dim entries");
        Matrix A(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) A(i, j) = params[i * dim + j];
        return A;
    }
    throw std::invalid_argument("build_generator: unknown kind '" + kind + "'");
}

//Matrix semigroup S(t) = exp(tA) with a per-instance evaluation cache.
//The cache is mutex-protected so shared instances can be used from worker threads.
class Semigroup {
public:
    explicit Semigroup(Matrix A) : A_(std::move(A)) {
        if (A_.rows() != A_.cols()) throw std::invalid_argument("Semigroup: generator must be square");
        if (!A_.allFinite()) throw std::invalid_argument("Semigroup: generator must be finite");
    }

    int dim() const { return static_cast<int>(A_.rows()); }
    const Matrix& generator() const { return A_; }

    const Matrix& matrix(double t) const {
        if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("Semigroup: t must be finite and >= 0");
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(t);
        if (it != cache_.end()) return it->second;
        Matrix e = (t * A_).exp();
        auto res = cache_.emplace(t, std::move(e));
        return res.first->second;
    }

    Vector apply(double t, const Vector& v) const {
        if (v.size() != A_.rows()) throw std::invalid_argument("Semigroup: vector dimension mismatch");
        return matrix(t) * v;
    }

    //Action of the dual semigroup S(t)^* (real transpose here).
    Vector apply_dual(double t, const Vector& v) const {
        if (v.size() != A_.rows()) throw std::invalid_argument("Semigroup: vector dimension mismatch");
        return matrix(t).transpose() * v;
    }

private:
    Matrix A_;
    mutable std::mutex mu_;
    mutable std::map<double, Matrix> cache_;
};

using SemigroupPtr = std::shared_ptr<const Semigroup>;

inline SemigroupPtr make_semigroup(const Matrix& A) { return std::make_shared<Semigroup>(A); }

//Compression to the leading `rank` coordinates: zeroes rows/columns past rank.
inline Matrix project(const Matrix& M, int rank) {
    if (rank < 0 || rank > M.rows() || M.rows() != M.cols())
        throw std::invalid_argument("project: rank out of range");
    Matrix out = Matrix::Zero(M.rows(), M.cols());
    out.topLeftCorner(rank, rank) = M.topLeftCorner(rank, rank);
    return out;
}

inline Vector project(const Vector& v, int rank) {
    if (rank < 0 || rank > v.size()) throw std::invalid_argument("project: rank out of range");
    Vector out = Vector::Zero(v.size());
    out.head(rank) = v.head(rank);
    return out;
}

} // namespace bsee
