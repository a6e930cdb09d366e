#pragma once

#include <vector>

#include "exsim/vec.hpp"

namespace exsim {

/// Small square dense matrix of 64-bit reals, row-major. Sized for the
/// reduced Krylov matrices (dimension cap plus the phi augmentation).
class DenseRealMatrix {
public:
    DenseRealMatrix() = default;
    explicit DenseRealMatrix(int n) : n_(n), values_(static_cast<std::size_t>(n) * n, 0.0) {}

    static DenseRealMatrix identity(int n);

    int size() const noexcept { return n_; }
    double& at(int r, int c) { return values_[static_cast<std::size_t>(r) * n_ + c]; }
    double at(int r, int c) const { return values_[static_cast<std::size_t>(r) * n_ + c]; }
    const std::vector<double>& values() const noexcept { return values_; }

    double norm1() const;       // max column sum
    double norm_frobenius() const;

private:
    int n_ = 0;
    std::vector<double> values_;
};

DenseRealMatrix multiply(const DenseRealMatrix& a, const DenseRealMatrix& b);
Vec multiply(const DenseRealMatrix& a, const Vec& x);
DenseRealMatrix add_scaled(const DenseRealMatrix& a, double beta, const DenseRealMatrix& b);

/// Solve A X = B by partial-pivot LU; B overwritten with X.
/// cond1 (optional) receives ||A||_1 * ||A^{-1}||_1.
DenseRealMatrix dense_solve(const DenseRealMatrix& a, const DenseRealMatrix& b,
                            double* cond1 = nullptr);
DenseRealMatrix dense_inverse(const DenseRealMatrix& a, double* cond1 = nullptr);

/// e^M by scaling-and-squaring with diagonal Pade approximants
/// (degrees 3/5/7/9/13, 1-norm driven degree and scale selection).
DenseRealMatrix dense_expm(const DenseRealMatrix& m);

/// phi_k(M), k in {1, 2}, with phi_1(z) = (e^z - 1)/z and
/// phi_2(z) = (e^z - 1)/z^2 - 1/z. Each column is obtained by
/// exponentiating an (n+k)-sized augmentation of M (M embedded with a
/// unit super-diagonal tail), so no inversion of M is ever formed.
DenseRealMatrix dense_phi(int k, const DenseRealMatrix& m);

}  // namespace exsim
