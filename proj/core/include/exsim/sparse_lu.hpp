#pragma once

#include <cstdint>
#include <vector>

#include "exsim/sparse_matrix.hpp"
#include "exsim/vec.hpp"

namespace exsim {

/// Reusable direct factorization P*A*Q = L*U.
///
/// row_perm[k] / col_perm[k] give the original row / column placed at
/// elimination position k. L carries an explicit unit diagonal, so
/// fill_nnz() == nnz(L) + nnz(U).
class Factorization {
public:
    const SparseRealMatrix& lower() const noexcept { return lower_; }
    const SparseRealMatrix& upper() const noexcept { return upper_; }
    const std::vector<int>& row_perm() const noexcept { return row_perm_; }
    const std::vector<int>& col_perm() const noexcept { return col_perm_; }

    int dimension() const noexcept { return lower_.n_rows(); }
    int source_nnz() const noexcept { return source_nnz_; }
    int fill_nnz() const noexcept { return lower_.nnz() + upper_.nnz(); }

    /// Forward/backward substitution; never refactorizes.
    Vec solve(const Vec& b) const;

    /// Multiplies by the factored matrix, reconstructed as P^T L U Q^T.
    /// Lets residual checks form A*v from the factors alone.
    Vec apply(const Vec& x) const;

private:
    friend Factorization lu_factor(const SparseRealMatrix&, double);

    SparseRealMatrix lower_;
    SparseRealMatrix upper_;
    std::vector<int> row_perm_;
    std::vector<int> col_perm_;
    int source_nnz_ = 0;
};

/// Sparse LU with threshold partial pivoting (default pivot tolerance 0.1)
/// and a deterministic minimum-degree column preordering on the pattern of
/// A + A^T. Throws SingularMatrixError when no acceptable pivot exists
/// (candidate magnitude below 1e-14 * max|A|).
///
/// Every call increments a process-wide counter so integrators and the
/// bench harness can audit factorization totals.
Factorization lu_factor(const SparseRealMatrix& A, double pivot_tol = 0.1);

Vec lu_solve(const Factorization& f, const Vec& b);

std::uint64_t lu_factor_count();
void reset_lu_factor_count();

}  // namespace exsim
