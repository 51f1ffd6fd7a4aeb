#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace bsee {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

//Kronecker product, (A kron B)[i*p+k, j*q+l] = A(i,j) B(k,l).
inline Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

//Row-major vectorization: vec_row(M)[i*cols+j] = M(i,j).
//With this convention vec_row(A M B^T) = (A kron B) vec_row(M).
inline Vector vec_row(const Matrix& M) {
    Vector v(M.rows() * M.cols());
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            v(i * M.cols() + j) = M(i, j);
    return v;
}

inline Matrix unvec_row(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) throw std::invalid_argument("unvec_row: size mismatch");
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            M(i, j) = v(i * cols + j);
    return M;
}

//Rank-one tensor of two vectors, the map x -> <x,a> b.  As a matrix: b a^T.
inline Matrix tensor_outer(const Vector& a, const Vector& b) {
    return b * a.transpose();
}

//Deterministic orthonormal frame from a seeded rotation; identity when seed == 0.
//Used to vary test-family directions without changing the spanned space.
inline Matrix direction_frame(int dim, unsigned seed) {
    if (seed == 0) return Matrix::Identity(dim, dim);
    Matrix G(dim, dim);
    unsigned long long s = 0x9E3779B97F4A7C15ull * (seed + 1);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            G(i, j) = static_cast<double>(static_cast<long long>(s >> 11)) / 9.007199254740992e15 - 0.5;
        }
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    return Q;
}

} // namespace bsee
