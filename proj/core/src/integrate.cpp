#include "exsim/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "exsim/errors.hpp"

namespace exsim {

std::string method_name(Method m) {
    switch (m) {
        case Method::Benr: return "BENR";
        case Method::Er: return "ER";
        case Method::Erc: return "ERC";
    }
    return "?";
}

StepControl step_control_from(const MnaSystem& sys) {
    StepControl ctl;
    ctl.err_budget = sys.options.err_budget;
    ctl.eps = sys.options.krylov_eps;
    ctl.m_max = sys.options.m_max;
    if (sys.options.hmin) ctl.hmin = *sys.options.hmin;
    if (sys.options.hmax) ctl.hmax = *sys.options.hmax;
    return ctl;
}

namespace {

MevpConfig mevp_config(const StepControl& ctl) {
    MevpConfig cfg;
    cfg.eps = ctl.eps;
    cfg.m_max = ctl.m_max;
    cfg.trace = ctl.krylov_trace;
    return cfg;
}

/// Affine-model constant currents of the frozen linearization:
/// f(x) ~ G_k x + ieq near the (possibly limited) reference voltages.
Vec equivalent_current(const Linearization& lin) {
    Vec ieq(lin.x_ref.size(), 0.0);
    for (const DeviceOperatingPoint& op : lin.op) {
        if (op.kind == DeviceKind::Diode) {
            const double c = op.i0 - op.g0 * op.v_used;
            if (op.nodes[0] >= 0) ieq[op.nodes[0]] += c;
            if (op.nodes[1] >= 0) ieq[op.nodes[1]] -= c;
        } else {
            const double c = op.id_ref - op.gm * op.vgs_ref - op.gds * op.vds_ref;
            if (op.nodes[0] >= 0) ieq[op.nodes[0]] += c;
            if (op.nodes[2] >= 0) ieq[op.nodes[2]] -= c;
        }
    }
    return ieq;
}

SparseRealMatrix with_node_gmin(const SparseRealMatrix& G, const MnaSystem& sys,
                                double gmin_extra) {
    if (gmin_extra <= 0.0) return G;
    std::vector<Triplet> t;
    const int n_nodes = static_cast<int>(sys.node_index.size());
    for (int i = 0; i < n_nodes; ++i) t.push_back({i, i, gmin_extra});
    return combine(1.0, G, 1.0, SparseRealMatrix::from_triplets(sys.n, sys.n, std::move(t)));
}

/// Newton iteration for the static system f(x) = B u0. Returns true on
/// convergence; x is updated in place.
bool newton_static(const MnaSystem& sys, Vec& x, const Vec& bu0, double gmin_extra,
                   const StepControl& ctl) {
    if (sys.nonlinear_devices.empty()) {
        Linearization lin = evaluate(sys, x);
        Factorization f = lu_factor(with_node_gmin(lin.G_k, sys, gmin_extra));
        x = f.solve(bu0);
        return true;
    }
    Vec x_prev = x;
    for (int iter = 1; iter <= ctl.nr_max_iters; ++iter) {
        Linearization lin = evaluate(sys, x, &x_prev);
        Vec rhs = sub(bu0, equivalent_current(lin));
        Factorization f = lu_factor(with_node_gmin(lin.G_k, sys, gmin_extra));
        Vec x_new = f.solve(rhs);
        const double dx = norm_inf(sub(x_new, x));
        x_prev = x;
        x = x_new;
        if (dx <= 1e-9 * (1.0 + norm_inf(x))) return true;
    }
    return false;
}

}  // namespace

Vec dc_solve(const MnaSystem& sys) {
    StepControl ctl;
    const Vec u0 = eval_sources(sys, 0.0);
    const Vec bu0 = spmv(sys.B, u0);

    Vec x(static_cast<std::size_t>(sys.n), 0.0);
    try {
        Vec attempt = x;
        if (newton_static(sys, attempt, bu0, 0.0, ctl)) return attempt;
    } catch (const SingularMatrixError&) {
        // fall through to gmin stepping
    }

    // gmin stepping: relax toward the target in decades
    Vec x_stage(static_cast<std::size_t>(sys.n), 0.0);
    for (double g = 1e-3; g >= 0.99e-12; g *= 0.1) {
        if (!newton_static(sys, x_stage, bu0, g, ctl))
            throw NoDcConvergenceError("dc_solve: gmin stepping stalled at gmin=" +
                                       std::to_string(g));
    }
    if (!newton_static(sys, x_stage, bu0, 0.0, ctl))
        throw NoDcConvergenceError("dc_solve: no convergence after gmin stepping");
    return x_stage;
}

namespace {

/// One backward-Euler Newton solve targeting time t_target = t_k + h.
/// Returns the converged solution; iters receives the Newton count.
Vec benr_nr_solve(const MnaSystem& sys, const Vec& x_prev, double t_target, double h,
                  const StepControl& ctl, int& iters) {
    const Vec u = eval_sources(sys, t_target);
    const Vec bu = spmv(sys.B, u);

    if (sys.nonlinear_devices.empty()) {
        Linearization lin = evaluate(sys, x_prev);
        SparseRealMatrix J = combine(1.0 / h, lin.C_k, 1.0, lin.G_k);
        Vec rhs = add(spmv(lin.C_k, scaled(x_prev, 1.0 / h)), bu);
        Factorization f = lu_factor(J);
        iters = 1;
        return f.solve(rhs);
    }

    Vec x = x_prev;
    Vec x_iter_prev = x_prev;
    const double g_scale = ctl.benr_half_g_jacobian ? 0.5 : 1.0;
    for (int iter = 1; iter <= ctl.nr_max_iters; ++iter) {
        Linearization lin = evaluate(sys, x, &x_iter_prev);
        // T(x) = C (x - x_prev)/h + f(x) - B u, with f in the affine model
        Vec t_res = spmv(lin.C_k, scaled(sub(x, x_prev), 1.0 / h));
        axpy(1.0, spmv(lin.G_k, x), t_res);
        axpy(1.0, equivalent_current(lin), t_res);
        axpy(-1.0, bu, t_res);

        SparseRealMatrix J = combine(1.0 / h, lin.C_k, g_scale, lin.G_k);
        Factorization f = lu_factor(J);
        Vec dx = f.solve(t_res);
        x_iter_prev = x;
        axpy(-1.0, dx, x);
        iters = iter;
        if (norm_inf(dx) <= ctl.nr_reltol * norm_inf(x) + ctl.nr_abstol) return x;
    }
    throw NoConvergenceError("benr: Newton did not converge in " +
                                 std::to_string(ctl.nr_max_iters) + " iterations",
                             0.0);
}

}  // namespace

BenrStepResult benr_step(const MnaSystem& sys, const SimState& state, const StepControl& ctl) {
    double h = state.h;
    const std::uint64_t lu0 = lu_factor_count();
    int rejects = 0;
    const double hmin = ctl.hmin > 0.0 ? ctl.hmin : 0.0;

    while (true) {
        bool nr_failed = false;
        int it_full = 0;
        Vec x_full;
        double lte = 0.0;
        try {
            x_full = benr_nr_solve(sys, state.x, state.t + h, h, ctl, it_full);
            if (!ctl.fixed_step) {
                int it_a = 0, it_b = 0;
                Vec x_half = benr_nr_solve(sys, state.x, state.t + 0.5 * h, 0.5 * h, ctl, it_a);
                Vec x_two = benr_nr_solve(sys, x_half, state.t + h, 0.5 * h, ctl, it_b);
                lte = norm_inf(sub(x_full, x_two));
            }
        } catch (const NoConvergenceError&) {
            nr_failed = true;
        }

        if (!nr_failed && (ctl.fixed_step || lte <= ctl.err_budget)) {
            StepRecord rec;
            rec.t = state.t + h;
            rec.h_accepted = h;
            rec.lu_count = static_cast<int>(lu_factor_count() - lu0);
            rec.nr_iters = it_full;
            rec.rejects = rejects;
            rec.err_norm = lte;
            return {std::move(x_full), std::move(rec)};
        }

        ++rejects;
        if (rejects > ctl.max_rejects)
            throw StepFailureError("benr: too many rejections at t=" + std::to_string(state.t));
        h *= ctl.alpha;
        if (h < hmin || h <= 0.0)
            throw StepFailureError("benr: step size below HMIN at t=" + std::to_string(state.t));
    }
}

namespace {

struct ErInstrumentation {
    std::vector<int>* dims = nullptr;
    void record(const KrylovBasis& b) {
        if (dims) dims->push_back(b.m);
    }
};

ErWorkspace er_begin(const MnaSystem& sys, const Linearization& lin,
                     const Factorization& G_fact, const Vec& x_k, double t, double h) {
    ErWorkspace ws;
    ws.h_built = h;

    const Vec u_k = eval_sources(sys, t);
    const Vec u_k1 = eval_sources(sys, t + h);
    Vec slope = sub(u_k1, u_k);
    scale(slope, 1.0 / h);

    // v1 = x_k - G^{-1}(F(x_k) + B u(t_k))
    Vec rhs = add(residual_F(lin, x_k), spmv(sys.B, u_k));
    Vec v1 = sub(x_k, G_fact.solve(rhs));

    // v2 = G^{-1} C G^{-1} B du/dt ; invariant under h changes in-segment
    ws.gb_slope = G_fact.solve(spmv(sys.B, slope));
    Vec v2 = G_fact.solve(spmv(lin.C_k, ws.gb_slope));

    ws.start = add(v1, v2);
    return ws;
}

/// Evaluate the ER update at h_try from the workspace, reusing the cached
/// basis when it covers h_try and its residual still passes, otherwise
/// building a fresh basis (no factorization either way).
Vec er_eval(const Linearization& lin, const Factorization& G_fact,
            const Vec& x_k, ErWorkspace& ws, double h_try, const StepControl& ctl,
            ErInstrumentation inst) {
    Vec x_next = add(x_k, scaled(ws.gb_slope, h_try));
    // at equilibrium the start vector is pure Newton residual noise with no
    // transient content worth propagating
    if (norm2(ws.start) <= 1e-9 * (1.0 + norm_inf(x_k))) return x_next;

    const MevpConfig cfg = mevp_config(ctl);
    Vec value;
    bool need_fresh = true;
    if (ws.basis && h_try <= ws.basis->h_sub) {
        // mandatory residual re-check at the rescaled h
        if (mevp_residual(*ws.basis, lin.G_k, h_try) < ctl.eps) {
            value = eval_at_scaled_h(*ws.basis, h_try);
            need_fresh = false;
        }
    }
    if (need_fresh) {
        MevpResult r = mevp_iks(G_fact, lin.C_k, ws.start, cfg, h_try);
        inst.record(r.basis);
        ws.basis = std::move(r.basis);
        value = std::move(r.value);
    }
    axpy(1.0, value, x_next);
    axpy(-1.0, ws.start, x_next);
    return x_next;
}

ErrorEstimate error_from_deltaF(const Linearization& lin, const Factorization& G_fact,
                                const Vec& deltaF, const StepControl& ctl, double h,
                                ErInstrumentation inst) {
    ErrorEstimate est;
    est.e_rr.assign(deltaF.size(), 0.0);
    if (norm_inf(deltaF) == 0.0) return est;
    Vec w = G_fact.solve(deltaF);
    if (norm2(w) == 0.0) return est;
    MevpResult r = mevp_iks(G_fact, lin.C_k, w, mevp_config(ctl), h);
    inst.record(r.basis);
    est.e_rr = sub(w, r.value);  // -(e^{hJ} w - w)
    est.norm_inf = norm_inf(est.e_rr);
    return est;
}

Vec correction_from_deltaF(const Linearization& lin, const Factorization& G_fact,
                           const Vec& deltaF, const StepControl& ctl, double h,
                           const CorrectionSpec& spec, ErInstrumentation inst) {
    Vec zero(deltaF.size(), 0.0);
    if (!spec.enabled || spec.gamma == 0.0) return zero;
    if (norm_inf(deltaF) == 0.0) return zero;
    Vec w = G_fact.solve(deltaF);
    Vec u = G_fact.solve(spmv(lin.C_k, w));
    Vec d = w;
    if (norm2(u) > 0.0) {
        MevpResult r = mevp_iks(G_fact, lin.C_k, u, mevp_config(ctl), h);
        inst.record(r.basis);
        axpy(1.0 / h, sub(r.value, u), d);
    }
    scale(d, spec.gamma);
    return d;
}

}  // namespace

ErStepResult er_step(const MnaSystem& sys, const Linearization& lin,
                     const Factorization& G_fact, const SimState& state,
                     const StepControl& ctl) {
    if (state.h <= 0.0) throw ContractError("er_step: step size must be positive");
    const std::uint64_t lu0 = lu_factor_count();

    ErStepResult out;
    out.workspace = er_begin(sys, lin, G_fact, state.x, state.t, state.h);
    ErInstrumentation inst{&out.rec.krylov_dims};
    out.x_next = er_eval(lin, G_fact, state.x, out.workspace, state.h, ctl, inst);
    out.rec.t = state.t + state.h;
    out.rec.h_accepted = state.h;
    out.rec.lu_count = static_cast<int>(lu_factor_count() - lu0);
    return out;
}

ErrorEstimate nonlinear_error(const MnaSystem& sys, const Linearization& lin,
                              const Factorization& G_fact, const Vec& x_k, const Vec& x_next,
                              const StepControl& ctl, double h) {
    (void)sys;
    Vec deltaF = sub(residual_F(lin, x_next), residual_F(lin, x_k));
    return error_from_deltaF(lin, G_fact, deltaF, ctl, h, {});
}

Vec correction_term(const MnaSystem& sys, const Linearization& lin,
                    const Factorization& G_fact, const Vec& deltaF, const StepControl& ctl,
                    double h, const CorrectionSpec& spec) {
    (void)sys;
    return correction_from_deltaF(lin, G_fact, deltaF, ctl, h, spec, {});
}

namespace {

std::vector<int> resolve_record_indices(const MnaSystem& sys,
                                        const std::vector<std::string>& names) {
    std::vector<int> idx;
    if (names.empty()) {
        idx.resize(sys.unknown_names.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        return idx;
    }
    for (const std::string& raw : names) {
        std::string name = raw;
        std::transform(name.begin(), name.end(), name.begin(), ::toupper);
        auto it = sys.node_index.find(name);
        if (it == sys.node_index.end())
            throw ContractError("unknown record node '" + raw + "'");
        idx.push_back(it->second);
    }
    return idx;
}

void emit(Waveform& wf, const std::vector<int>& idx, double t, const Vec& x) {
    Vec row(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) row[i] = x[idx[i]];
    wf.times.push_back(t);
    wf.samples.push_back(std::move(row));
}

double next_breakpoint_after(const std::vector<double>& bps, double t) {
    auto it = std::upper_bound(bps.begin(), bps.end(), t * (1.0 + 1e-12));
    return it == bps.end() ? std::numeric_limits<double>::infinity() : *it;
}

}  // namespace

TransientResult transient(const MnaSystem& sys, Method method, const StepControl& ctl,
                          double t_stop, const std::vector<std::string>& record_nodes) {
    if (t_stop <= 0.0) throw ContractError("transient: t_stop must be positive");

    TransientResult result;
    const std::vector<int> rec_idx = resolve_record_indices(sys, record_nodes);
    result.waveform.columns.reserve(rec_idx.size());
    for (int i : rec_idx) result.waveform.columns.push_back(sys.unknown_names[i]);

    Vec x = dc_solve(sys);
    emit(result.waveform, rec_idx, 0.0, x);

    const std::vector<double> bps = source_breakpoints(sys, 0.0, t_stop);
    const double hint = sys.tran && sys.tran->step_hint > 0.0 ? sys.tran->step_hint
                                                              : t_stop / 100.0;
    double h_nominal = ctl.h_init > 0.0 ? ctl.h_init : hint;
    h_nominal = std::min(h_nominal, ctl.hmax);
    const double hmin_eff = ctl.hmin > 0.0 ? ctl.hmin : t_stop * 1e-15;
    const double t_tiny = t_stop * 1e-12;

    double t = 0.0;
    long k = 0;
    while (t < t_stop - t_tiny) {
        const double seg_end = std::min(next_breakpoint_after(bps, t), t_stop);
        double h_try = std::min(h_nominal, seg_end - t);
        if (seg_end - t - h_try < t_tiny) h_try = seg_end - t;  // snap to the boundary
        h_try = std::max(h_try, std::min(hmin_eff, seg_end - t));

        if (method == Method::Benr) {
            SimState st{t, x, h_try, k};
            BenrStepResult r = benr_step(sys, st, ctl);
            x = std::move(r.x_next);
            t += r.rec.h_accepted;
            emit(result.waveform, rec_idx, t, x);
            const bool grow = !ctl.fixed_step &&
                              (ctl.grow_only_on_clean ? r.rec.rejects == 0
                                                      : r.rec.rejects < ctl.grow_threshold);
            const bool clamped = r.rec.h_accepted < h_nominal * (1.0 - 1e-12);
            if (r.rec.rejects > 0) h_nominal = r.rec.h_accepted;
            if (grow)
                h_nominal = std::min(ctl.beta * (clamped && r.rec.rejects == 0
                                                     ? h_nominal
                                                     : r.rec.h_accepted),
                                     ctl.hmax);
            result.records.push_back(std::move(r.rec));
            ++k;
            continue;
        }

        // ER / ERC: one device evaluation and one LU of G_k per step,
        // shared across all rejection retries.
        const std::uint64_t lu0 = lu_factor_count();
        Linearization lin = evaluate(sys, x);
        Factorization G_fact = lu_factor(lin.G_k);

        StepRecord rec;
        ErInstrumentation inst{&rec.krylov_dims};
        ErWorkspace ws = er_begin(sys, lin, G_fact, x, t, h_try);
        const Vec F_k = residual_F(lin, x);

        int rejects = 0;
        Vec x_next;
        double err_norm = 0.0;
        while (true) {
            x_next = er_eval(lin, G_fact, x, ws, h_try, ctl, inst);
            err_norm = 0.0;
            if (!sys.nonlinear_devices.empty()) {
                Vec deltaF = sub(residual_F(lin, x_next), F_k);
                ErrorEstimate est = error_from_deltaF(lin, G_fact, deltaF, ctl, h_try, inst);
                err_norm = est.norm_inf;
                if (method == Method::Erc) {
                    CorrectionSpec spec = ctl.correction;
                    spec.enabled = true;
                    Vec d = correction_from_deltaF(lin, G_fact, deltaF, ctl, h_try, spec, inst);
                    // the leading local error is +2h phi_3(hJ) C^{-1} dF, so the
                    // phi_2 surrogate must be added, not subtracted
                    axpy(1.0, d, x_next);
                }
            }
            if (ctl.fixed_step || err_norm <= ctl.err_budget) break;
            ++rejects;
            if (rejects > ctl.max_rejects)
                throw StepFailureError("transient: too many rejections at t=" +
                                       std::to_string(t));
            h_try *= ctl.alpha;
            if (h_try < hmin_eff)
                throw StepFailureError("transient: step size below HMIN at t=" +
                                       std::to_string(t));
        }

        rec.t = t + h_try;
        rec.h_accepted = h_try;
        rec.lu_count = static_cast<int>(lu_factor_count() - lu0);
        rec.rejects = rejects;
        rec.err_norm = err_norm;

        x = std::move(x_next);
        t += h_try;
        emit(result.waveform, rec_idx, t, x);

        const bool grow = !ctl.fixed_step &&
                          (ctl.grow_only_on_clean ? rejects == 0
                                                  : rejects < ctl.grow_threshold);
        const bool clamped = h_try < h_nominal * (1.0 - 1e-12);
        if (rejects > 0) h_nominal = h_try;
        if (grow)
            h_nominal = std::min(ctl.beta * (clamped && rejects == 0 ? h_nominal : h_try),
                                 ctl.hmax);
        result.records.push_back(std::move(rec));
        ++k;
    }
    return result;
}

CostSummary cost_report(const std::vector<StepRecord>& records) {
    if (records.empty()) throw ContractError("cost_report: no records");
    CostSummary s;
    s.steps = static_cast<long>(records.size());
    long dim_calls = 0, dim_sum = 0, nr_sum = 0;
    for (const StepRecord& r : records) {
        s.lu_total += r.lu_count;
        s.rejects += r.rejects;
        nr_sum += r.nr_iters;
        for (int m : r.krylov_dims) {
            ++dim_calls;
            dim_sum += m;
        }
    }
    s.m_avg = dim_calls ? static_cast<double>(dim_sum) / static_cast<double>(dim_calls) : 0.0;
    s.nr_avg = static_cast<double>(nr_sum) / static_cast<double>(s.steps);
    return s;
}

}  // namespace exsim
