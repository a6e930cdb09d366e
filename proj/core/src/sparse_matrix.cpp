#include "exsim/sparse_matrix.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "exsim/errors.hpp"

namespace exsim {

SparseRealMatrix SparseRealMatrix::from_triplets(int n_rows, int n_cols,
                                                 std::vector<Triplet> entries) {
    if (n_rows < 0 || n_cols < 0) throw ContractError("negative matrix dimension");
    for (const Triplet& t : entries) {
        if (t.row < 0 || t.row >= n_rows || t.col < 0 || t.col >= n_cols)
            throw ContractError("triplet coordinate out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseRealMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.row_offsets_.assign(static_cast<std::size_t>(n_rows) + 1, 0);

    std::size_t i = 0;
    for (int r = 0; r < n_rows; ++r) {
        while (i < entries.size() && entries[i].row == r) {
            int c = entries[i].col;
            double v = 0.0;
            while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
                v += entries[i].value;
                ++i;
            }
            if (v != 0.0) {
                m.col_indices_.push_back(c);
                m.values_.push_back(v);
            }
        }
        m.row_offsets_[static_cast<std::size_t>(r) + 1] = static_cast<int>(m.values_.size());
    }
    return m;
}

SparseRealMatrix SparseRealMatrix::identity(int n) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
}

SparseRealMatrix SparseRealMatrix::zero(int n_rows, int n_cols) {
    return from_triplets(n_rows, n_cols, {});
}

double SparseRealMatrix::value_at(int r, int c) const {
    if (r < 0 || r >= n_rows_ || c < 0 || c >= n_cols_)
        throw ContractError("value_at coordinate out of range");
    for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        if (col_indices_[k] == c) return values_[k];
    return 0.0;
}

bool SparseRealMatrix::empty_row(int r) const {
    return row_offsets_[r] == row_offsets_[r + 1];
}

Vec spmv(const SparseRealMatrix& A, const Vec& x) {
    if (static_cast<int>(x.size()) != A.n_cols())
        throw ContractError("spmv: vector length does not match matrix columns");
    Vec y(static_cast<std::size_t>(A.n_rows()), 0.0);
    const auto& off = A.row_offsets();
    const auto& col = A.col_indices();
    const auto& val = A.values();
    for (int r = 0; r < A.n_rows(); ++r) {
        double s = 0.0;
        for (int k = off[r]; k < off[r + 1]; ++k) s += val[k] * x[col[k]];
        y[r] = s;
    }
    return y;
}

SparseRealMatrix combine(double alpha, const SparseRealMatrix& A,
                         double beta, const SparseRealMatrix& B) {
    if (A.n_rows() != B.n_rows() || A.n_cols() != B.n_cols())
        throw ContractError("combine: shape mismatch");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(A.nnz() + B.nnz()));
    for (int r = 0; r < A.n_rows(); ++r) {
        for (int k = A.row_offsets()[r]; k < A.row_offsets()[r + 1]; ++k)
            t.push_back({r, A.col_indices()[k], alpha * A.values()[k]});
        for (int k = B.row_offsets()[r]; k < B.row_offsets()[r + 1]; ++k)
            t.push_back({r, B.col_indices()[k], beta * B.values()[k]});
    }
    return SparseRealMatrix::from_triplets(A.n_rows(), A.n_cols(), std::move(t));
}

void write_matrix_market(std::ostream& os, const SparseRealMatrix& A) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << A.n_rows() << " " << A.n_cols() << " " << A.nnz() << "\n";
    char buf[64];
    for (int r = 0; r < A.n_rows(); ++r) {
        for (int k = A.row_offsets()[r]; k < A.row_offsets()[r + 1]; ++k) {
            std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", r + 1,
                          A.col_indices()[k] + 1, A.values()[k]);
            os << buf;
        }
    }
}

}  // namespace exsim
