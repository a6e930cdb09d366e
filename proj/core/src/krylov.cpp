#include "exsim/krylov.hpp"

#include <cmath>
#include <ostream>

#include "exsim/errors.hpp"

namespace exsim {

namespace {

constexpr double kCondLimit = 1e12;
constexpr double kReorthFactor = 0.70710678118654752;  // 1/sqrt(2)

DenseRealMatrix reduced_from_cols(const std::vector<Vec>& hbar_cols, int m) {
    DenseRealMatrix h(m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i <= j + 1 && i < m; ++i) h.at(i, j) = hbar_cols[j][i];
    return h;
}

/// Reduced-space exponential at step h: e^{h H^{-1}} for the invert
/// subspace, e^{h H} for the standard one.
DenseRealMatrix reduced_exp(const KrylovBasis& basis, double h) {
    DenseRealMatrix scaled(basis.m);
    const DenseRealMatrix& op = basis.invert ? basis.h_inv : basis.h_m;
    for (int i = 0; i < basis.m; ++i)
        for (int j = 0; j < basis.m; ++j) scaled.at(i, j) = h * op.at(i, j);
    return dense_expm(scaled);
}

Vec basis_combination(const KrylovBasis& basis, const Vec& coeffs) {
    Vec out(basis.V.front().size(), 0.0);
    for (int j = 0; j < basis.m; ++j) axpy(basis.beta * coeffs[j], basis.V[j], out);
    return out;
}

struct ArnoldiStep {
    double pre_norm = 0.0;   // ||w|| before orthogonalization
    double h_next = 0.0;     // h_{j+1,j}
    bool happy = false;
};

/// Modified Gram-Schmidt with one reorthogonalization pass when the norm
/// drops by more than 1/sqrt(2).
ArnoldiStep orthogonalize(std::vector<Vec>& V, std::vector<Vec>& hbar_cols, Vec w,
                          double breakdown_tol) {
    const int j = static_cast<int>(hbar_cols.size());  // 0-based column being built
    ArnoldiStep step;
    step.pre_norm = norm2(w);

    Vec hcol(static_cast<std::size_t>(j) + 2, 0.0);
    for (int i = 0; i <= j; ++i) {
        double hij = dot(w, V[i]);
        axpy(-hij, V[i], w);
        hcol[i] = hij;
    }
    double post = norm2(w);
    if (post < kReorthFactor * step.pre_norm) {
        for (int i = 0; i <= j; ++i) {
            double s = dot(w, V[i]);
            axpy(-s, V[i], w);
            hcol[i] += s;
        }
        post = norm2(w);
    }
    step.h_next = post;
    hcol[static_cast<std::size_t>(j) + 1] = post;
    hbar_cols.push_back(std::move(hcol));

    if (post <= breakdown_tol * step.pre_norm) {
        step.happy = true;
    } else {
        scale(w, 1.0 / post);
        V.push_back(std::move(w));
    }
    return step;
}

/// Inverts H_m, falling back to a tiny stabilizing left shift when H_m is
/// numerically singular. The shift is the DAE limit: directions the
/// operator cannot propagate (algebraic null components that leak into
/// the subspace) acquire an infinitely fast decay rate, so e^{h H^{-1}}
/// sends them to zero instead of producing garbage.
bool invert_reduced(const DenseRealMatrix& h_m, DenseRealMatrix& h_inv) {
    const double scale = std::max(h_m.norm1(), 1e-300);
    for (double delta : {0.0, 1e-12 * scale, 1e-9 * scale}) {
        DenseRealMatrix shifted = h_m;
        for (int i = 0; i < shifted.size(); ++i) shifted.at(i, i) -= delta;
        try {
            double cond = 0.0;
            DenseRealMatrix inv = dense_inverse(shifted, &cond);
            if (cond < kCondLimit) {
                h_inv = std::move(inv);
                return true;
            }
        } catch (const SingularMatrixError&) {
        }
    }
    return false;
}

MevpResult arnoldi_mevp(const Factorization& fact, const SparseRealMatrix& mat,
                        const Vec& v, const MevpConfig& cfg, double h, bool invert) {
    const double beta = norm2(v);
    if (beta == 0.0) throw ZeroStartVectorError("mevp: zero start vector");
    if (cfg.m_max < 1) throw ContractError("mevp: m_max must be >= 1");
    if (h < 0.0) throw ContractError("mevp: negative step size");

    KrylovBasis basis;
    basis.beta = beta;
    basis.invert = invert;
    basis.V.push_back(scaled(v, 1.0 / beta));

    double last_residual = std::numeric_limits<double>::infinity();
    bool converged = false;

    for (int j = 1; j <= cfg.m_max && !converged; ++j) {
        // operator application: w = -G^{-1}(C v_j) or -C^{-1}(G v_j)
        Vec w = fact.solve(spmv(mat, basis.V.back()));
        scale(w, -1.0);

        ArnoldiStep step = orthogonalize(basis.V, basis.hbar_cols, std::move(w),
                                         cfg.breakdown_tol);
        basis.m = j;
        basis.h_next = step.happy ? 0.0 : step.h_next;
        basis.happy = step.happy;

        DenseRealMatrix h_m = reduced_from_cols(basis.hbar_cols, j);
        DenseRealMatrix h_inv;
        const bool invertible = !invert || invert_reduced(h_m, h_inv);

        if (step.happy) {
            if (invert && !invertible)
                throw SingularReducedMatrixError(
                    "mevp: invariant subspace with singular reduced matrix");
            basis.h_m = std::move(h_m);
            basis.h_inv = std::move(h_inv);
            last_residual = 0.0;
            converged = true;
            break;
        }

        const bool check = (j % cfg.check_stride == 0) || j == cfg.m_max;
        if (!check) continue;
        if (invert && !invertible) continue;  // cannot evaluate the test yet

        basis.h_m = h_m;
        basis.h_inv = h_inv;
        const DenseRealMatrix e_red = reduced_exp(basis, h);
        double s = 0.0;
        if (invert) {
            for (int i = 0; i < j; ++i) s += basis.h_inv.at(j - 1, i) * e_red.at(i, 0);
        } else {
            s = e_red.at(j - 1, 0);
        }
        const double weight = norm2(fact.apply(basis.V.back()));
        last_residual = std::abs(beta * step.h_next * s) * weight;

        if (cfg.trace)
            *cfg.trace << j << "," << h << "," << last_residual << "," << step.h_next << "\n";
        if (last_residual < cfg.eps) converged = true;
    }

    if (!converged)
        throw NoConvergenceError("mevp: dimension cap reached, last residual " +
                                     std::to_string(last_residual),
                                 last_residual);

    basis.h_sub = h;
    basis.m_evp = eval_at_scaled_h(basis, h);
    return {basis.m_evp, std::move(basis)};
}

}  // namespace

MevpResult mevp_iks(const Factorization& G_fact, const SparseRealMatrix& C, const Vec& v,
                    const MevpConfig& cfg, double h) {
    if (static_cast<int>(v.size()) != C.n_rows())
        throw ContractError("mevp_iks: vector length does not match C");
    return arnoldi_mevp(G_fact, C, v, cfg, h, /*invert=*/true);
}

MevpResult mevp_standard(const Factorization& C_fact, const SparseRealMatrix& G, const Vec& v,
                         const MevpConfig& cfg, double h) {
    if (static_cast<int>(v.size()) != G.n_rows())
        throw ContractError("mevp_standard: vector length does not match G");
    return arnoldi_mevp(C_fact, G, v, cfg, h, /*invert=*/false);
}

double mevp_residual(const KrylovBasis& basis, const SparseRealMatrix& G, double h) {
    if (basis.m < 1) throw ContractError("mevp_residual: empty basis");
    if (basis.happy || basis.h_next == 0.0) return 0.0;

    const DenseRealMatrix e_red = reduced_exp(basis, h);
    double s = 0.0;
    if (basis.invert) {
        for (int i = 0; i < basis.m; ++i)
            s += basis.h_inv.at(basis.m - 1, i) * e_red.at(i, 0);
    } else {
        s = e_red.at(basis.m - 1, 0);
    }
    const Vec& v_next = basis.V[static_cast<std::size_t>(basis.m)];
    return std::abs(basis.beta * basis.h_next * s) * norm2(spmv(G, v_next));
}

Vec eval_at_scaled_h(const KrylovBasis& basis, double h_new) {
    if (basis.m < 1) throw ContractError("eval_at_scaled_h: empty basis");
    if (h_new < 0.0 || h_new > basis.h_sub)
        throw ContractError("eval_at_scaled_h: h outside [0, h_sub]");
    const DenseRealMatrix e_red = reduced_exp(basis, h_new);
    Vec coeffs(static_cast<std::size_t>(basis.m));
    for (int i = 0; i < basis.m; ++i) coeffs[i] = e_red.at(i, 0);
    return basis_combination(basis, coeffs);
}

namespace {

/// h * ||H_m^{-1}||_1 estimates ||h J|| on the subspace. Below this the
/// divided differences of e^{hJ}v - v cancel catastrophically and the
/// series limits phi_1 -> I, phi_2 -> I/2 are the accurate evaluation.
constexpr double kPhiSeriesThreshold = 1e-8;

}  // namespace

Vec phi1_apply(const Factorization& G_fact, const SparseRealMatrix& C, const Vec& v,
               const MevpConfig& cfg, double h) {
    if (norm2(v) == 0.0) return Vec(v.size(), 0.0);
    if (h == 0.0) return v;
    MevpResult r = mevp_iks(G_fact, C, v, cfg, h);
    if (h * r.basis.h_inv.norm1() <= kPhiSeriesThreshold) return v;
    Vec diff = sub(r.value, v);
    Vec w = G_fact.solve(spmv(C, diff));
    scale(w, -1.0 / h);
    return w;
}

Vec phi2_apply(const Factorization& G_fact, const SparseRealMatrix& C, const Vec& v,
               const MevpConfig& cfg, double h) {
    if (norm2(v) == 0.0) return Vec(v.size(), 0.0);
    if (h == 0.0) return scaled(v, 0.5);
    MevpResult r = mevp_iks(G_fact, C, v, cfg, h);
    if (h * r.basis.h_inv.norm1() <= kPhiSeriesThreshold) return scaled(v, 0.5);
    Vec diff = sub(r.value, v);
    Vec t1 = G_fact.solve(spmv(C, diff));
    t1 = G_fact.solve(spmv(C, t1));  // (G^{-1}C)^2 (m_evp - v)
    Vec t2 = G_fact.solve(spmv(C, v));
    Vec out(v.size(), 0.0);
    axpy(1.0 / (h * h), t1, out);
    axpy(1.0 / h, t2, out);
    return out;
}

}  // namespace exsim
