#include "exsim/dense_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "exsim/errors.hpp"

namespace exsim {

DenseRealMatrix DenseRealMatrix::identity(int n) {
    DenseRealMatrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

double DenseRealMatrix::norm1() const {
    double best = 0.0;
    for (int c = 0; c < n_; ++c) {
        double s = 0.0;
        for (int r = 0; r < n_; ++r) s += std::abs(at(r, c));
        best = std::max(best, s);
    }
    return best;
}

double DenseRealMatrix::norm_frobenius() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

DenseRealMatrix multiply(const DenseRealMatrix& a, const DenseRealMatrix& b) {
    if (a.size() != b.size()) throw ContractError("dense multiply: size mismatch");
    const int n = a.size();
    DenseRealMatrix c(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < n; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    }
    return c;
}

Vec multiply(const DenseRealMatrix& a, const Vec& x) {
    if (a.size() != static_cast<int>(x.size()))
        throw ContractError("dense multiply: vector size mismatch");
    const int n = a.size();
    Vec y(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += a.at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

DenseRealMatrix add_scaled(const DenseRealMatrix& a, double beta, const DenseRealMatrix& b) {
    if (a.size() != b.size()) throw ContractError("dense add: size mismatch");
    const int n = a.size();
    DenseRealMatrix c(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c.at(i, j) = a.at(i, j) + beta * b.at(i, j);
    return c;
}

DenseRealMatrix dense_solve(const DenseRealMatrix& a, const DenseRealMatrix& b,
                            double* cond1) {
    if (a.size() != b.size()) throw ContractError("dense_solve: size mismatch");
    const int n = a.size();
    DenseRealMatrix lu = a;
    DenseRealMatrix x = b;
    std::vector<int> piv(n);

    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(lu.at(k, k));
        for (int r = k + 1; r < n; ++r) {
            double m = std::abs(lu.at(r, k));
            if (m > best) {
                best = m;
                p = r;
            }
        }
        if (best == 0.0)
            throw SingularMatrixError("dense_solve: singular matrix", k);
        piv[k] = p;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(lu.at(k, j), lu.at(p, j));
            for (int j = 0; j < n; ++j) std::swap(x.at(k, j), x.at(p, j));
        }
        double d = lu.at(k, k);
        for (int r = k + 1; r < n; ++r) {
            double f = lu.at(r, k) / d;
            lu.at(r, k) = f;
            if (f == 0.0) continue;
            for (int j = k + 1; j < n; ++j) lu.at(r, j) -= f * lu.at(k, j);
            for (int j = 0; j < n; ++j) x.at(r, j) -= f * x.at(k, j);
        }
    }
    // back substitution
    for (int k = n - 1; k >= 0; --k) {
        double d = lu.at(k, k);
        for (int j = 0; j < n; ++j) {
            double s = x.at(k, j);
            for (int c = k + 1; c < n; ++c) s -= lu.at(k, c) * x.at(c, j);
            x.at(k, j) = s / d;
        }
    }

    if (cond1) {
        DenseRealMatrix inv = dense_solve(a, DenseRealMatrix::identity(n), nullptr);
        *cond1 = a.norm1() * inv.norm1();
    }
    return x;
}

DenseRealMatrix dense_inverse(const DenseRealMatrix& a, double* cond1) {
    DenseRealMatrix inv = dense_solve(a, DenseRealMatrix::identity(a.size()), nullptr);
    if (cond1) *cond1 = a.norm1() * inv.norm1();
    return inv;
}

namespace {

DenseRealMatrix scaled_matrix(const DenseRealMatrix& a, double f) {
    const int n = a.size();
    DenseRealMatrix c(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c.at(i, j) = f * a.at(i, j);
    return c;
}

// Diagonal Pade approximant of e^A for the given coefficient table.
DenseRealMatrix pade_expm(const DenseRealMatrix& a, const double* b, int degree) {
    const int n = a.size();
    const DenseRealMatrix ident = DenseRealMatrix::identity(n);
    const DenseRealMatrix a2 = multiply(a, a);

    DenseRealMatrix u(n), v(n);
    if (degree <= 9) {
        // U = A * (sum over odd coefficients of A^2 powers), V = even sum
        DenseRealMatrix usum(n), vsum(n);
        DenseRealMatrix pow = ident;  // (A^2)^0
        for (int k = 0; k <= degree; k += 2) {
            vsum = add_scaled(vsum, b[k], pow);
            usum = add_scaled(usum, b[k + 1], pow);
            if (k + 2 <= degree) pow = multiply(pow, a2);
        }
        u = multiply(a, usum);
        v = vsum;
    } else {
        // degree-13 evaluation split
        const DenseRealMatrix a4 = multiply(a2, a2);
        const DenseRealMatrix a6 = multiply(a4, a2);
        DenseRealMatrix u1 = add_scaled(
            add_scaled(scaled_matrix(a6, b[13]), 1.0, scaled_matrix(a4, b[11])), 1.0,
            scaled_matrix(a2, b[9]));
        u1 = multiply(a6, u1);
        DenseRealMatrix u2 = add_scaled(
            add_scaled(scaled_matrix(a6, b[7]), 1.0, scaled_matrix(a4, b[5])), 1.0,
            scaled_matrix(a2, b[3]));
        u2 = add_scaled(u2, b[1], ident);
        u = multiply(a, add_scaled(u1, 1.0, u2));
        DenseRealMatrix v1 = add_scaled(
            add_scaled(scaled_matrix(a6, b[12]), 1.0, scaled_matrix(a4, b[10])), 1.0,
            scaled_matrix(a2, b[8]));
        v1 = multiply(a6, v1);
        DenseRealMatrix v2 = add_scaled(
            add_scaled(scaled_matrix(a6, b[6]), 1.0, scaled_matrix(a4, b[4])), 1.0,
            scaled_matrix(a2, b[2]));
        v2 = add_scaled(v2, b[0], ident);
        v = add_scaled(v1, 1.0, v2);
    }
    // (V - U) X = (V + U)
    DenseRealMatrix num = add_scaled(v, 1.0, u);
    DenseRealMatrix den = add_scaled(v, -1.0, u);
    return dense_solve(den, num, nullptr);
}

}  // namespace

DenseRealMatrix dense_expm(const DenseRealMatrix& m) {
    for (double v : m.values())
        if (!std::isfinite(v)) throw NonFiniteError("dense_expm: non-finite entry");

    static const double b3[] = {120, 60, 12, 1};
    static const double b5[] = {30240, 15120, 3360, 420, 30, 1};
    static const double b7[] = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
    static const double b9[] = {17643225600., 8821612800., 2075673600., 302702400.,
                                30270240.,    2162160.,    110880.,     3960.,
                                90.,           1.};
    static const double b13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                                 1187353796428800.,  129060195264000.,   10559470521600.,
                                 670442572800.,      33522128640.,       1323241920.,
                                 40840800.,          960960.,            16380.,
                                 182.,               1.};
    static const double theta3 = 1.495585217958292e-2;
    static const double theta5 = 2.539398330063230e-1;
    static const double theta7 = 9.504178996162932e-1;
    static const double theta9 = 2.097847961257068e0;
    static const double theta13 = 5.371920351148152e0;

    const double nrm = m.norm1();
    if (nrm <= theta3) return pade_expm(m, b3, 3);
    if (nrm <= theta5) return pade_expm(m, b5, 5);
    if (nrm <= theta7) return pade_expm(m, b7, 7);
    if (nrm <= theta9) return pade_expm(m, b9, 9);

    int s = 0;
    double scaled_nrm = nrm;
    while (scaled_nrm > theta13) {
        scaled_nrm *= 0.5;
        ++s;
    }
    DenseRealMatrix a(m.size());
    const double f = std::ldexp(1.0, -s);
    for (int i = 0; i < m.size(); ++i)
        for (int j = 0; j < m.size(); ++j) a.at(i, j) = m.at(i, j) * f;
    DenseRealMatrix e = pade_expm(a, b13, 13);
    for (int k = 0; k < s; ++k) e = multiply(e, e);
    return e;
}

DenseRealMatrix dense_phi(int k, const DenseRealMatrix& m) {
    if (k != 1 && k != 2) throw ContractError("dense_phi: order must be 1 or 2");
    for (double v : m.values())
        if (!std::isfinite(v)) throw NonFiniteError("dense_phi: non-finite entry");

    const int n = m.size();
    DenseRealMatrix out(n);
    // Column i of phi_k(M) is the top block of the last column of
    // exp(W_i) with W_i = [[M, e_i, 0], [0, 0, 1], [0, 0, 0]] (k tail rows).
    for (int i = 0; i < n; ++i) {
        DenseRealMatrix w(n + k);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) w.at(r, c) = m.at(r, c);
        w.at(i, n) = 1.0;
        for (int t = 0; t + 1 < k; ++t) w.at(n + t, n + t + 1) = 1.0;
        DenseRealMatrix e = dense_expm(w);
        for (int r = 0; r < n; ++r) out.at(r, i) = e.at(r, n + k - 1);
    }
    return out;
}

}  // namespace exsim
