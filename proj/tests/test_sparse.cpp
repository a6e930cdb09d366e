#include <random>
#include <sstream>

#include "doctest.h"
#include "exsim/errors.hpp"
#include "exsim/sparse_lu.hpp"
#include "exsim/sparse_matrix.hpp"

using namespace exsim;

namespace {

// dense triple-loop reference for A*x
Vec dense_spmv_oracle(const SparseRealMatrix& A, const Vec& x) {
    std::vector<std::vector<double>> d(A.n_rows(), std::vector<double>(A.n_cols(), 0.0));
    for (int r = 0; r < A.n_rows(); ++r)
        for (int k = A.row_offsets()[r]; k < A.row_offsets()[r + 1]; ++k)
            d[r][A.col_indices()[k]] = A.values()[k];
    Vec y(A.n_rows(), 0.0);
    for (int r = 0; r < A.n_rows(); ++r)
        for (int c = 0; c < A.n_cols(); ++c) y[r] += d[r][c] * x[c];
    return y;
}

SparseRealMatrix random_dd_matrix(int n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    std::vector<Triplet> t;
    std::vector<double> rowsum(n, 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (r == c || p(rng) > density) continue;
            double v = u(rng);
            t.push_back({r, c, v});
            rowsum[r] += std::abs(v);
        }
    for (int r = 0; r < n; ++r) t.push_back({r, r, rowsum[r] + 1.0});
    return SparseRealMatrix::from_triplets(n, n, std::move(t));
}

}  // namespace

TEST_CASE("spmv basics") {
    auto ident = SparseRealMatrix::identity(3);
    CHECK(spmv(ident, {1, 2, 3}) == Vec{1, 2, 3});

    auto zero = SparseRealMatrix::zero(2, 2);
    CHECK(spmv(zero, {5, 7}) == Vec{0, 0});

    auto a = SparseRealMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 1, 2}, {1, 1, 3}});
    Vec expect = dense_spmv_oracle(a, {1, 1});
    CHECK(expect == Vec{3, 3});
    CHECK(spmv(a, {1, 1}) == expect);

    CHECK_THROWS_AS(spmv(a, {1, 2, 3}), ContractError);
}

TEST_CASE("spmv agrees with dense oracle on random sparse matrices") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 3 + static_cast<int>(rng() % 30);
        SparseRealMatrix a = random_dd_matrix(n, 0.3, rng);
        Vec x(n);
        for (double& v : x) v = u(rng);
        Vec got = spmv(a, x);
        Vec want = dense_spmv_oracle(a, x);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(got[i] - want[i]) <= 1e-13 * (1.0 + std::abs(want[i])));
    }
}

TEST_CASE("triplet construction sums duplicates and prunes zeros") {
    auto a = SparseRealMatrix::from_triplets(
        2, 2, {{0, 0, 1.0}, {0, 0, 2.0}, {1, 0, 5.0}, {1, 0, -5.0}, {1, 1, 4.0}});
    CHECK(a.nnz() == 2);
    CHECK(a.value_at(0, 0) == 3.0);
    CHECK(a.value_at(1, 0) == 0.0);
    CHECK(a.value_at(1, 1) == 4.0);
    // column indices strictly increasing inside each row
    for (int r = 0; r < a.n_rows(); ++r)
        for (int k = a.row_offsets()[r] + 1; k < a.row_offsets()[r + 1]; ++k)
            CHECK(a.col_indices()[k] > a.col_indices()[k - 1]);
    CHECK(a.row_offsets().back() == a.nnz());
}

TEST_CASE("lu_factor identity has no fill") {
    auto f = lu_factor(SparseRealMatrix::identity(4));
    CHECK(f.fill_nnz() == 8);  // unit L diagonal + U diagonal
    CHECK(f.source_nnz() == 4);
    CHECK(lu_solve(f, {4, 5, 6, 7}) == Vec{4, 5, 6, 7});
}

TEST_CASE("lu_factor 2x2 closed form") {
    // [[2,1],[1,2]] b=[3,3] -> x=[1,1] (closed-form inverse oracle:
    // x = 1/(2*2-1*1) * [[2,-1],[-1,2]] b)
    auto a = SparseRealMatrix::from_triplets(2, 2, {{0, 0, 2}, {0, 1, 1}, {1, 0, 1}, {1, 1, 2}});
    auto f = lu_factor(a);
    Vec x = lu_solve(f, {3, 3});
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("lu_factor detects singular matrix") {
    auto a = SparseRealMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
    CHECK_THROWS_AS(lu_factor(a), SingularMatrixError);

    auto diag = SparseRealMatrix::from_triplets(2, 2, {{0, 0, 2}, {1, 1, 4}});
    CHECK(lu_solve(lu_factor(diag), {2, 4}) == Vec{1, 1});
}

TEST_CASE("lu_solve residual contract on random matrices") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 5 + static_cast<int>(rng() % 40);
        SparseRealMatrix a = random_dd_matrix(n, 0.25, rng);
        Vec b(n);
        for (double& v : b) v = u(rng);
        Factorization f = lu_factor(a);
        CHECK(f.fill_nnz() == f.lower().nnz() + f.upper().nnz());
        Vec x = f.solve(b);
        Vec r = spmv(a, x);
        axpy(-1.0, b, r);
        CHECK(norm_inf(r) <= 1e-10 * (1.0 + norm_inf(b)));
        // apply() reconstructs A*v from the factors
        Vec av = f.apply(x);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(av[i] - b[i]) <= 1e-9 * (1.0 + std::abs(b[i])));
    }
}

TEST_CASE("factor counter increments") {
    reset_lu_factor_count();
    lu_factor(SparseRealMatrix::identity(3));
    lu_factor(SparseRealMatrix::identity(5));
    CHECK(lu_factor_count() == 2);
}

TEST_CASE("matrix market dump") {
    auto a = SparseRealMatrix::from_triplets(2, 3, {{0, 0, 1.5}, {1, 2, -2.0}});
    std::ostringstream os;
    write_matrix_market(os, a);
    std::istringstream in(os.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "%%MatrixMarket matrix coordinate real general");
    int nr, nc, nz;
    in >> nr >> nc >> nz;
    CHECK(nr == 2);
    CHECK(nc == 3);
    CHECK(nz == 2);
    int r, c;
    double v;
    in >> r >> c >> v;
    CHECK(r == 1);  // 1-based
    CHECK(c == 1);
    CHECK(v == 1.5);
    in >> r >> c >> v;
    CHECK(r == 2);
    CHECK(c == 3);
    CHECK(v == -2.0);
}

TEST_CASE("combine forms C/h + G") {
    auto c = SparseRealMatrix::from_triplets(2, 2, {{0, 0, 2.0}});
    auto g = SparseRealMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 3.0}});
    auto j = combine(10.0, c, 1.0, g);
    CHECK(j.value_at(0, 0) == 21.0);
    CHECK(j.value_at(1, 1) == 3.0);
}
