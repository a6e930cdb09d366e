#pragma once

#include <iosfwd>
#include <vector>

#include "exsim/dense_matrix.hpp"
#include "exsim/sparse_lu.hpp"
#include "exsim/sparse_matrix.hpp"
#include "exsim/vec.hpp"

namespace exsim {

struct MevpConfig {
    double eps = 1e-7;            // residual tolerance
    int m_max = 100;              // dimension cap
    double breakdown_tol = 1e-12; // relative to the pre-orthogonalization norm
    int check_stride = 1;         // residual test every this many iterations
    std::ostream* trace = nullptr;  // optional per-iteration CSV "j,h,residual,h_next"
};

/// Orthonormal Krylov data reusable across step-size changes.
///
/// V holds m+1 columns (m on happy breakdown), Hbar the extended
/// Hessenberg stored by columns (column j carries h_{1..j+1, j}).
/// For the invert subspace the reduced operator is H_m^{-1}; h_inv caches
/// its explicit inverse for the repeated small exponentials.
struct KrylovBasis {
    std::vector<Vec> V;
    std::vector<Vec> hbar_cols;
    int m = 0;
    double beta = 0.0;
    double h_sub = 0.0;         // h at which convergence was declared
    bool happy = false;
    bool invert = true;         // built on J^{-1} = -G^{-1} C (vs J directly)
    DenseRealMatrix h_m;        // H_m
    DenseRealMatrix h_inv;      // H_m^{-1} (invert subspace only)
    double h_next = 0.0;        // h_{m+1,m}
    Vec m_evp;                  // cached result at h_sub
};

struct MevpResult {
    Vec value;
    KrylovBasis basis;
};

/// Invert-Krylov matrix-exponential-vector product: approximates
/// e^{hJ} v with J = -C^{-1} G by Arnoldi on w <- -G^{-1}(C w), stopping
/// at the first iteration whose residual (mevp_residual) drops below
/// cfg.eps or at happy breakdown. C may be singular. G is only touched
/// through the factorization.
MevpResult mevp_iks(const Factorization& G_fact, const SparseRealMatrix& C, const Vec& v,
                    const MevpConfig& cfg, double h);

/// KCL-consistency residual of the basis at step size h:
///   ||r_m(h)|| = |beta * h_{m+1,m} * e_m^T H_m^{-1} e^{h H_m^{-1}} e_1| * ||G v_{m+1}||_2
/// (for a standard basis the reduced exponential is e^{h H_m} and the
/// weight matrix is C). Zero on happy breakdown.
double mevp_residual(const KrylovBasis& basis, const SparseRealMatrix& G, double h);

/// beta * V_m e^{h_new H_m^{-1}} e_1 from cached data only: no operator
/// applications, no factorizations. Requires 0 <= h_new <= h_sub; callers
/// must re-check mevp_residual at h_new.
Vec eval_at_scaled_h(const KrylovBasis& basis, double h_new);

/// phi_1(hJ) v = -(1/h) G^{-1} C (e^{hJ}v - v), one extra spmv + solve
/// on top of the MEVP. Returns v for h == 0.
Vec phi1_apply(const Factorization& G_fact, const SparseRealMatrix& C, const Vec& v,
               const MevpConfig& cfg, double h);

/// phi_2(hJ) v = (1/h^2)(G^{-1}C)^2 (e^{hJ}v - v) + (1/h) G^{-1}C v.
/// Returns v/2 for h == 0.
Vec phi2_apply(const Factorization& G_fact, const SparseRealMatrix& C, const Vec& v,
               const MevpConfig& cfg, double h);

/// Standard-subspace variant (Arnoldi on w <- -C^{-1}(G w), result
/// beta V_m e^{h H_m} e_1). Requires nonsingular C; exists for the bench
/// comparison against the invert subspace.
MevpResult mevp_standard(const Factorization& C_fact, const SparseRealMatrix& G, const Vec& v,
                         const MevpConfig& cfg, double h);

}  // namespace exsim
