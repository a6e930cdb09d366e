#include "exsim/sparse_lu.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "exsim/errors.hpp"

namespace exsim {

namespace {

std::atomic<std::uint64_t> g_lu_count{0};

struct Csc {
    int n = 0;
    std::vector<int> col_ptr;
    std::vector<int> row_idx;
    std::vector<double> val;
};

Csc to_csc(const SparseRealMatrix& A) {
    Csc c;
    c.n = A.n_cols();
    c.col_ptr.assign(static_cast<std::size_t>(c.n) + 1, 0);
    for (int k = 0; k < A.nnz(); ++k) c.col_ptr[A.col_indices()[k] + 1]++;
    for (int j = 0; j < c.n; ++j) c.col_ptr[j + 1] += c.col_ptr[j];
    c.row_idx.resize(A.nnz());
    c.val.resize(A.nnz());
    std::vector<int> next(c.col_ptr.begin(), c.col_ptr.end() - 1);
    for (int r = 0; r < A.n_rows(); ++r) {
        for (int k = A.row_offsets()[r]; k < A.row_offsets()[r + 1]; ++k) {
            int j = A.col_indices()[k];
            int p = next[j]++;
            c.row_idx[p] = r;
            c.val[p] = A.values()[k];
        }
    }
    return c;
}

// Minimum-degree ordering on the symmetric pattern of A + A^T,
// smallest-index tie break. Elimination merges the pivot's neighborhood
// into a clique, which is exact (not approximate) degree tracking; fine
// at the circuit sizes this library targets.
std::vector<int> min_degree_order(const SparseRealMatrix& A) {
    const int n = A.n_rows();
    std::vector<std::vector<int>> adj(n);
    for (int r = 0; r < n; ++r) {
        for (int k = A.row_offsets()[r]; k < A.row_offsets()[r + 1]; ++k) {
            int c = A.col_indices()[k];
            if (c == r) continue;
            adj[r].push_back(c);
            adj[c].push_back(r);
        }
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }

    std::vector<char> eliminated(n, 0);
    std::vector<int> order;
    order.reserve(n);
    for (int step = 0; step < n; ++step) {
        int best = -1, best_deg = std::numeric_limits<int>::max();
        for (int v = 0; v < n; ++v) {
            if (eliminated[v]) continue;
            int deg = static_cast<int>(adj[v].size());
            if (deg < best_deg) {
                best_deg = deg;
                best = v;
            }
        }
        order.push_back(best);
        eliminated[best] = 1;
        // connect remaining neighbors pairwise
        std::vector<int> nbr;
        nbr.reserve(adj[best].size());
        for (int u : adj[best])
            if (!eliminated[u]) nbr.push_back(u);
        for (int u : nbr) {
            auto& au = adj[u];
            au.erase(std::remove(au.begin(), au.end(), best), au.end());
            for (int w : nbr) {
                if (w == u) continue;
                if (!std::binary_search(au.begin(), au.end(), w)) {
                    au.insert(std::lower_bound(au.begin(), au.end(), w), w);
                }
            }
        }
    }
    return order;
}

// Depth-first reach of the rhs pattern through the partially built L,
// producing a topological order for the sparse triangular solve.
void reach(int start, const std::vector<std::vector<int>>& l_rows,
           const std::vector<int>& pivot_pos, std::vector<char>& mark,
           std::vector<int>& topo, std::vector<int>& stack,
           std::vector<std::size_t>& child) {
    stack.clear();
    stack.push_back(start);
    child.assign(1, 0);
    mark[start] = 1;
    while (!stack.empty()) {
        int r = stack.back();
        int pp = pivot_pos[r];
        bool descended = false;
        if (pp >= 0) {
            const auto& rows = l_rows[pp];
            while (child.back() < rows.size()) {
                int nr = rows[child.back()++];
                if (!mark[nr]) {
                    mark[nr] = 1;
                    stack.push_back(nr);
                    child.push_back(0);
                    descended = true;
                    break;
                }
            }
        }
        if (!descended) {
            topo.push_back(r);
            stack.pop_back();
            child.pop_back();
        }
    }
}

}  // namespace

Factorization lu_factor(const SparseRealMatrix& A, double pivot_tol) {
    if (A.n_rows() != A.n_cols()) throw ContractError("lu_factor: matrix not square");
    const int n = A.n_rows();
    g_lu_count.fetch_add(1, std::memory_order_relaxed);

    double max_abs = 0.0;
    for (double v : A.values()) max_abs = std::max(max_abs, std::abs(v));
    const double sing_tol = 1e-14 * max_abs;

    const Csc a = to_csc(A);
    const std::vector<int> col_order = min_degree_order(A);

    // Columns of L (below-diagonal, by pivot position) and U.
    std::vector<std::vector<int>> l_rows(n);        // original row ids per L column
    std::vector<std::vector<double>> l_vals(n);
    std::vector<std::vector<int>> u_pos(n);         // pivot positions per U column
    std::vector<std::vector<double>> u_vals(n);
    std::vector<double> u_diag(n);

    std::vector<int> pivot_pos(n, -1);   // original row -> elimination position
    std::vector<int> row_perm(n, -1);    // elimination position -> original row

    std::vector<double> x(n, 0.0);
    std::vector<char> mark(n, 0);
    std::vector<int> topo, stack;
    std::vector<std::size_t> child;

    for (int j = 0; j < n; ++j) {
        const int cj = col_order[j];
        topo.clear();
        // symbolic: pattern of L^{-1} * A(:, cj)
        for (int p = a.col_ptr[cj]; p < a.col_ptr[cj + 1]; ++p) {
            int r = a.row_idx[p];
            if (!mark[r]) reach(r, l_rows, pivot_pos, mark, topo, stack, child);
        }
        // the reach pushes dependencies after dependents; process in reverse
        for (int p = a.col_ptr[cj]; p < a.col_ptr[cj + 1]; ++p)
            x[a.row_idx[p]] = a.val[p];
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            int r = *it;
            int pp = pivot_pos[r];
            if (pp < 0) continue;
            double xr = x[r];
            if (xr == 0.0) continue;
            const auto& rows = l_rows[pp];
            const auto& vals = l_vals[pp];
            for (std::size_t k = 0; k < rows.size(); ++k) x[rows[k]] -= vals[k] * xr;
        }

        // threshold partial pivoting over not-yet-pivoted rows; prefer the
        // natural diagonal row when it passes the threshold
        double xmax = 0.0;
        for (int r : topo)
            if (pivot_pos[r] < 0) xmax = std::max(xmax, std::abs(x[r]));
        int pivot_row = -1;
        if (xmax > sing_tol && xmax > 0.0) {
            if (pivot_pos[cj] < 0 && mark[cj] && std::abs(x[cj]) >= pivot_tol * xmax) {
                pivot_row = cj;
            } else {
                double best = -1.0;
                for (int r : topo) {
                    if (pivot_pos[r] >= 0) continue;
                    double m = std::abs(x[r]);
                    if (m > best || (m == best && (pivot_row < 0 || r < pivot_row))) {
                        best = m;
                        pivot_row = r;
                    }
                }
            }
        }
        if (pivot_row < 0) {
            throw SingularMatrixError(
                "lu_factor: singular matrix at elimination step " + std::to_string(j) +
                    " (column " + std::to_string(cj) + ")",
                j);
        }

        const double pv = x[pivot_row];
        for (int r : topo) {
            double xr = x[r];
            if (r == pivot_row) continue;
            if (pivot_pos[r] >= 0) {
                if (xr != 0.0) {
                    u_pos[j].push_back(pivot_pos[r]);
                    u_vals[j].push_back(xr);
                }
            } else if (xr != 0.0) {
                l_rows[j].push_back(r);
                l_vals[j].push_back(xr / pv);
            }
        }
        u_diag[j] = pv;
        pivot_pos[pivot_row] = j;
        row_perm[j] = pivot_row;

        for (int r : topo) {
            x[r] = 0.0;
            mark[r] = 0;
        }
    }

    // Assemble CSR factors in pivot coordinates.
    std::vector<Triplet> lt, ut;
    for (int j = 0; j < n; ++j) {
        lt.push_back({j, j, 1.0});
        for (std::size_t k = 0; k < l_rows[j].size(); ++k)
            lt.push_back({pivot_pos[l_rows[j][k]], j, l_vals[j][k]});
        ut.push_back({j, j, u_diag[j]});
        for (std::size_t k = 0; k < u_pos[j].size(); ++k)
            ut.push_back({u_pos[j][k], j, u_vals[j][k]});
    }

    Factorization f;
    f.lower_ = SparseRealMatrix::from_triplets(n, n, std::move(lt));
    f.upper_ = SparseRealMatrix::from_triplets(n, n, std::move(ut));
    f.row_perm_ = std::move(row_perm);
    f.col_perm_ = col_order;
    f.source_nnz_ = A.nnz();
    return f;
}

Vec Factorization::solve(const Vec& b) const {
    const int n = dimension();
    if (static_cast<int>(b.size()) != n)
        throw ContractError("lu_solve: vector length does not match factorization");

    Vec z(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) z[k] = b[row_perm_[k]];

    // L z' = z, unit lower triangular in CSR
    const auto& lo = lower_;
    for (int r = 0; r < n; ++r) {
        double s = z[r];
        for (int k = lo.row_offsets()[r]; k < lo.row_offsets()[r + 1]; ++k) {
            int c = lo.col_indices()[k];
            if (c < r) s -= lo.values()[k] * z[c];
        }
        z[r] = s;
    }
    // U y = z'
    const auto& up = upper_;
    for (int r = n - 1; r >= 0; --r) {
        double s = z[r];
        double diag = 0.0;
        for (int k = up.row_offsets()[r]; k < up.row_offsets()[r + 1]; ++k) {
            int c = up.col_indices()[k];
            if (c == r)
                diag = up.values()[k];
            else if (c > r)
                s -= up.values()[k] * z[c];
        }
        z[r] = s / diag;
    }

    Vec out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[col_perm_[k]] = z[k];
    return out;
}

Vec Factorization::apply(const Vec& x) const {
    const int n = dimension();
    if (static_cast<int>(x.size()) != n)
        throw ContractError("apply: vector length does not match factorization");
    Vec w(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) w[j] = x[col_perm_[j]];
    Vec z = spmv(upper_, w);
    Vec y = spmv(lower_, z);
    Vec out(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out[row_perm_[k]] = y[k];
    return out;
}

Vec lu_solve(const Factorization& f, const Vec& b) { return f.solve(b); }

std::uint64_t lu_factor_count() { return g_lu_count.load(std::memory_order_relaxed); }

void reset_lu_factor_count() { g_lu_count.store(0, std::memory_order_relaxed); }

}  // namespace exsim
