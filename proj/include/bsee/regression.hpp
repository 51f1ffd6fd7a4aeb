#pragma once

#include <functional>
#include <limits>
#include <string>

#include "process.hpp"

namespace bsee {

//Feature map for conditional-expectation regression on a scenario's state.
struct Basis {
    int size = 0;
    std::string name;
    std::function<Vector(const Vector& state)> eval;
};

inline Basis constant_basis() {
    return Basis{1, "constant", [](const Vector&) {
                     Vector f(1);
                     f(0) = 1.0;
                     return f;
                 }};
}

inline Basis affine_basis(int state_dim) {
    return Basis{1 + state_dim, "affine", [state_dim](const Vector& s) {
                     if (s.size() != state_dim) throw std::invalid_argument("affine_basis: state dim mismatch");
                     Vector f(1 + state_dim);
                     f(0) = 1.0;
                     f.tail(state_dim) = s;
                     return f;
                 }};
}

//1, x_i, x_i x_j (i <= j).
inline Basis quadratic_basis(int state_dim) {
    int sz = 1 + state_dim + state_dim * (state_dim + 1) / 2;
    return Basis{sz, "quadratic", [state_dim, sz](const Vector& s) {
                     if (s.size() != state_dim) throw std::invalid_argument("quadratic_basis: state dim mismatch");
                     Vector f(sz);
                     f(0) = 1.0;
                     f.segment(1, state_dim) = s;
                     int idx = 1 + state_dim;
                     for (int i = 0; i < state_dim; ++i)
                         for (int j = i; j < state_dim; ++j) f(idx++) = s(i) * s(j);
                     return f;
                 }};
}

//Rows = feature vectors of the state at one node.
inline Matrix design_matrix(const VectorProcess& state, const Basis& basis, int node) {
    Matrix Phi(state.n_paths(), basis.size);
    for (int p = 0; p < state.n_paths(); ++p) {
        Vector f = basis.eval(state.at(p, node));
        if (f.size() != basis.size) throw std::invalid_argument("design_matrix: basis size mismatch");
        Phi.row(p) = f.transpose();
    }
    return Phi;
}

struct LeastSquaresFit {
    Matrix coeff;      // B x q
    double condition;  // of the kept, column-scaled design
    int rank;          // columns kept by pivoting
};

//Column-scaled, pivoted least squares.  Collinear columns are dropped by the
//pivot threshold (their coefficients are zero); `strict` turns rank loss into
//an error that reports the condition number.
class StepRegressor {
public:
    StepRegressor(const Matrix& Phi, double pivot_tol = 1e-10, bool strict = false) {
        if (Phi.rows() < 1 || Phi.cols() < 1) throw std::invalid_argument("StepRegressor: empty design");
        scale_ = Vector::Ones(Phi.cols());
        Matrix scaled = Phi;
        for (Eigen::Index j = 0; j < Phi.cols(); ++j) {
            double s = Phi.col(j).norm() / std::sqrt(static_cast<double>(Phi.rows()));
            if (s > 0.0 && std::isfinite(s)) {
                scale_(j) = 1.0 / s;
                scaled.col(j) *= scale_(j);
            }
        }
        if (!scaled.allFinite()) throw std::invalid_argument("StepRegressor: non-finite design");
        qr_.setThreshold(pivot_tol);
        qr_.compute(scaled);
        rank_ = static_cast<int>(qr_.rank());
        const auto& R = qr_.matrixR();
        double rmax = std::abs(R(0, 0));
        double rmin = rank_ > 0 ? std::abs(R(rank_ - 1, rank_ - 1)) : 0.0;
        condition_ = rmin > 0.0 ? rmax / rmin : std::numeric_limits<double>::infinity();
        if (strict && rank_ < Phi.cols())
            throw std::runtime_error("StepRegressor: rank-deficient design (rank " + std::to_string(rank_) +
                                     " of " + std::to_string(Phi.cols()) + ", condition " +
                                     std::to_string(condition_) + ")");
    }

    //Least-squares coefficients for targets (n x q), in the original column
    //scaling.  The triangular solve is truncated at the thresholded rank (the
    //decomposition's own solve truncates at exact zeros only, so a nearly
    //collinear column would be divided by its ~eps pivot and poison the fit).
    Matrix solve(const Matrix& targets) const {
        Matrix c = Matrix::Zero(scale_.size(), targets.cols());
        if (rank_ > 0) {
            Matrix qtb = targets;
            qtb.applyOnTheLeft(qr_.householderQ().setLength(rank_).adjoint());
            qr_.matrixR()
                .topLeftCorner(rank_, rank_)
                .triangularView<Eigen::Upper>()
                .solveInPlace(qtb.topRows(rank_));
            for (int i = 0; i < rank_; ++i) c.row(qr_.colsPermutation().indices()(i)) = qtb.row(i);
        }
        return scale_.asDiagonal() * c;
    }

    double condition() const { return condition_; }
    int rank() const { return rank_; }

private:
    Eigen::ColPivHouseholderQR<Matrix> qr_;
    Vector scale_;
    double condition_ = 0.0;
    int rank_ = 0;
};

} // namespace bsee
