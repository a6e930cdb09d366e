#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "exsim/devices.hpp"
#include "exsim/krylov.hpp"
#include "exsim/mna.hpp"
#include "exsim/sparse_lu.hpp"
#include "exsim/vec.hpp"

namespace exsim {

enum class Method { Benr, Er, Erc };

std::string method_name(Method m);

/// gamma-scaled phi_2 correction of the accepted solution (ER-C).
struct CorrectionSpec {
    double gamma = 0.1;
    bool enabled = false;
};

struct StepControl {
    double err_budget = 1e-4;   // acceptance test ||e_rr||_inf <= err_budget
    double alpha = 0.5;         // shrink factor on rejection
    double beta = 2.0;          // growth factor
    int grow_threshold = 5;     // literal Algorithm reading: grow when rejects < 5
    bool grow_only_on_clean = true;  // default: grow only on reject-free steps
    double eps = 1e-7;          // Krylov residual tolerance
    int m_max = 100;
    int max_rejects = 40;
    double h_init = 0.0;        // 0: derived from the TRAN hint
    double hmin = 0.0;          // 0: derived from t_stop
    double hmax = std::numeric_limits<double>::infinity();
    double nr_reltol = 1e-3;
    double nr_abstol = 1e-6;    // volts
    int nr_max_iters = 50;
    bool benr_half_g_jacobian = false;  // (C/h + G/2) iteration matrix variant
    bool fixed_step = false;    // no error control, no growth (order studies)
    CorrectionSpec correction;
    std::ostream* krylov_trace = nullptr;  // per-iteration MEVP convergence CSV
};

struct SimState {
    double t = 0.0;
    Vec x;
    double h = 0.0;
    long k = 0;
};

/// Per-step instrumentation. lu_count tallies every factorization the
/// step performed (audited via the global counter), krylov_dims the
/// accepted dimension of every fresh MEVP basis built during the step.
struct StepRecord {
    double t = 0.0;
    double h_accepted = 0.0;
    int lu_count = 0;
    std::vector<int> krylov_dims;
    int nr_iters = 0;
    int rejects = 0;
    double err_norm = 0.0;
};

struct ErrorEstimate {
    Vec e_rr;
    double norm_inf = 0.0;
};

struct Waveform {
    std::vector<std::string> columns;  // recorded unknown names
    std::vector<double> times;
    std::vector<Vec> samples;          // one row per time, columns order
};

/// DC operating point: solves f(x) = B u(0) by damped Newton iteration
/// with gmin stepping as the fallback.
Vec dc_solve(const MnaSystem& sys);

struct BenrStepResult {
    Vec x_next;
    StepRecord rec;
};

/// One adaptive backward-Euler step from state.t with initial trial size
/// state.h: Newton solve at h, step-doubling error probe, shrink-and-retry
/// until the doubling difference meets ctl.err_budget.
BenrStepResult benr_step(const MnaSystem& sys, const SimState& state, const StepControl& ctl);

/// Reusable quantities of one exponential Rosenbrock-Euler step. Valid for
/// any trial size h <= h_built inside the same source segment: the start
/// vector and G^{-1} B (du/dt) term do not depend on h there.
struct ErWorkspace {
    Vec start;                          // v1 + v2
    Vec gb_slope;                       // G^{-1} B du/dt
    double h_built = 0.0;
    std::optional<KrylovBasis> basis;   // converged basis for `start`
};

struct ErStepResult {
    Vec x_next;
    ErWorkspace workspace;
    StepRecord rec;
};

/// One exponential Rosenbrock-Euler evaluation at state.h:
///   x_next = x_k + (e^{hJ} - I)(v1 + v2) + h G^{-1} B du/dt
/// with v1 = x_k - G^{-1}(F(x_k) + B u(t_k)), v2 = G^{-1} C G^{-1} B du/dt.
/// The step must lie inside one source segment; G_fact is the single
/// factorization of G_k for this step.
ErStepResult er_step(const MnaSystem& sys, const Linearization& lin,
                     const Factorization& G_fact, const SimState& state,
                     const StepControl& ctl);

/// Nonlinear local error e_rr = -(e^{hJ} - I) G^{-1} (F(x_next) - F(x_k)),
/// evaluated with one MEVP on w = G^{-1} Delta F (skipped when Delta F = 0).
ErrorEstimate nonlinear_error(const MnaSystem& sys, const Linearization& lin,
                              const Factorization& G_fact, const Vec& x_k, const Vec& x_next,
                              const StepControl& ctl, double h);

/// Correction D = gamma * h * phi_2(hJ) C^{-1} Delta F, computed as
/// gamma * ((e^{hJ}u - u)/h + w) with w = G^{-1} Delta F, u = G^{-1} C w.
Vec correction_term(const MnaSystem& sys, const Linearization& lin,
                    const Factorization& G_fact, const Vec& deltaF, const StepControl& ctl,
                    double h, const CorrectionSpec& spec);

struct TransientResult {
    Waveform waveform;
    std::vector<StepRecord> records;
};

/// Full transient from the DC point to t_stop. record_nodes empty = all
/// unknowns. Steps are clamped to source breakpoints so every step lies
/// within one piecewise-linear source segment.
TransientResult transient(const MnaSystem& sys, Method method, const StepControl& ctl,
                          double t_stop, const std::vector<std::string>& record_nodes = {});

struct CostSummary {
    long steps = 0;
    long lu_total = 0;
    double m_avg = 0.0;
    double nr_avg = 0.0;
    long rejects = 0;
};

CostSummary cost_report(const std::vector<StepRecord>& records);

/// StepControl seeded from the deck's .OPTIONS values.
StepControl step_control_from(const MnaSystem& sys);

}  // namespace exsim
