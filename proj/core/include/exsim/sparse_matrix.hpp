#pragma once

#include <iosfwd>
#include <vector>

#include "exsim/errors.hpp"
#include "exsim/vec.hpp"

namespace exsim {

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Compressed-sparse-row matrix of 64-bit reals.
///
/// Invariants after construction: row offsets are nondecreasing, column
/// indices within each row are strictly increasing, and no explicitly
/// stored zeros remain (duplicates are summed, exact zeros pruned).
class SparseRealMatrix {
public:
    SparseRealMatrix() = default;

    /// Build from (row, col, value) entries. Duplicate coordinates are
    /// accumulated; entries that sum to exactly zero are dropped.
    static SparseRealMatrix from_triplets(int n_rows, int n_cols,
                                          std::vector<Triplet> entries);

    static SparseRealMatrix identity(int n);
    static SparseRealMatrix zero(int n_rows, int n_cols);

    int n_rows() const noexcept { return n_rows_; }
    int n_cols() const noexcept { return n_cols_; }
    int nnz() const noexcept { return static_cast<int>(values_.size()); }

    const std::vector<int>& row_offsets() const noexcept { return row_offsets_; }
    const std::vector<int>& col_indices() const noexcept { return col_indices_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Stored value at (r, c), zero when the coordinate is absent.
    double value_at(int r, int c) const;

    bool empty_row(int r) const;

private:
    int n_rows_ = 0;
    int n_cols_ = 0;
    std::vector<int> row_offsets_{0};
    std::vector<int> col_indices_;
    std::vector<double> values_;
};

/// y = A * x. Accumulation over stored entries in 64-bit reals.
Vec spmv(const SparseRealMatrix& A, const Vec& x);

/// alpha * A + beta * B with identical shapes.
SparseRealMatrix combine(double alpha, const SparseRealMatrix& A,
                         double beta, const SparseRealMatrix& B);

/// Matrix Market coordinate dump, 1-based indices,
/// "%%MatrixMarket matrix coordinate real general" header.
void write_matrix_market(std::ostream& os, const SparseRealMatrix& A);

}  // namespace exsim
