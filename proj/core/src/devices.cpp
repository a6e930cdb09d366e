#include "exsim/devices.hpp"

#include <cmath>

#include "exsim/errors.hpp"

namespace exsim {

namespace {

constexpr double kExpClamp = 80.0;

double node_voltage(const Vec& x, int idx) { return idx < 0 ? 0.0 : x[idx]; }

}  // namespace

void diode_current(const DiodeParams& p, double v, double& current, double& conductance) {
    const double r = v / p.Vt;
    if (r <= kExpClamp) {
        const double e = std::exp(r);
        current = p.Is * (e - 1.0);
        conductance = p.Is * e / p.Vt;
    } else {
        // linear continuation beyond the clamp keeps value and slope
        const double e = std::exp(kExpClamp);
        conductance = p.Is * e / p.Vt;
        current = p.Is * (e - 1.0) + conductance * (v - kExpClamp * p.Vt);
    }
}

void mosfet_current(const MosfetParams& p, double vgs, double vds, double& id, double& gm,
                    double& gds) {
    bool swapped = false;
    if (vds < 0.0) {
        // symmetric device: exchange drain and source
        vgs = vgs - vds;
        vds = -vds;
        swapped = true;
    }
    const double k = p.Kp * p.W / p.L;
    const double vov = vgs - p.Vth;
    if (vov <= 0.0) {
        id = 0.0;
        gm = 0.0;
        gds = 0.0;
    } else if (vds >= vov) {
        const double clm = 1.0 + p.lambda * vds;
        id = 0.5 * k * vov * vov * clm;
        gm = k * vov * clm;
        gds = 0.5 * k * vov * vov * p.lambda;
    } else {
        const double clm = 1.0 + p.lambda * vds;
        const double q = vov * vds - 0.5 * vds * vds;
        id = k * q * clm;
        gm = k * vds * clm;
        gds = k * (vov - vds) * clm + k * q * p.lambda;
    }
    if (swapped) {
        // map partials back: id' = -id(vgs - vds', -vds')
        const double gm_s = gm;
        const double gds_s = gds;
        id = -id;
        gm = -gm_s;
        gds = gm_s + gds_s;
    }
}

double pnjlim(double vnew, double vold, double vt, double vcrit) {
    if (vnew > vcrit && std::abs(vnew - vold) > 2.0 * vt) {
        if (vold > 0.0) {
            double arg = 1.0 + (vnew - vold) / vt;
            vnew = arg > 0.0 ? vold + vt * std::log(arg) : vcrit;
        } else {
            vnew = vt * std::log(vnew / vt);
        }
    }
    return vnew;
}

namespace {

void eval_diode(const NonlinearDevice& dev, const Vec& x, const Vec* limit_from,
                DeviceOperatingPoint& op, std::vector<Triplet>& g_extra,
                std::vector<Triplet>& c_extra, Vec& f) {
    const int a = dev.nodes[0], c = dev.nodes[1];
    double v = node_voltage(x, a) - node_voltage(x, c);
    if (limit_from) {
        const double vold = node_voltage(*limit_from, a) - node_voltage(*limit_from, c);
        const double vcrit =
            dev.diode.Vt * std::log(dev.diode.Vt / (std::sqrt(2.0) * dev.diode.Is));
        v = pnjlim(v, vold, dev.diode.Vt, vcrit);
    }
    double i = 0.0, g0 = 0.0;
    diode_current(dev.diode, v, i, g0);

    op.kind = dev.kind;
    op.diode = dev.diode;
    op.nodes[0] = a;
    op.nodes[1] = c;
    op.v_used = v;
    op.g0 = g0;
    op.i0 = i;

    if (a >= 0) g_extra.push_back({a, a, g0});
    if (c >= 0) g_extra.push_back({c, c, g0});
    if (a >= 0 && c >= 0) {
        g_extra.push_back({a, c, -g0});
        g_extra.push_back({c, a, -g0});
    }
    if (dev.diode.C0 > 0.0) {
        if (a >= 0) c_extra.push_back({a, a, dev.diode.C0});
        if (c >= 0) c_extra.push_back({c, c, dev.diode.C0});
        if (a >= 0 && c >= 0) {
            c_extra.push_back({a, c, -dev.diode.C0});
            c_extra.push_back({c, a, -dev.diode.C0});
        }
    }
    if (a >= 0) f[a] += i;
    if (c >= 0) f[c] -= i;
}

void eval_mosfet(const NonlinearDevice& dev, const Vec& x, DeviceOperatingPoint& op,
                 std::vector<Triplet>& g_extra, std::vector<Triplet>& c_extra, Vec& f) {
    const int d = dev.nodes[0], g = dev.nodes[1], s = dev.nodes[2];
    double vgs = node_voltage(x, g) - node_voltage(x, s);
    double vds = node_voltage(x, d) - node_voltage(x, s);

    const double sign = dev.mos.pmos ? -1.0 : 1.0;
    double id = 0.0, gm = 0.0, gds = 0.0;
    mosfet_current(dev.mos, sign * vgs, sign * vds, id, gm, gds);
    id *= sign;  // partials are invariant under the PMOS reflection

    op.kind = dev.kind;
    op.mos = dev.mos;
    for (int i = 0; i < 4; ++i) op.nodes[i] = dev.nodes[i];
    op.vgs_ref = vgs;
    op.vds_ref = vds;
    op.id_ref = id;
    op.gm = gm;
    op.gds = gds;

    // drain current i_d(vgs, vds) enters at drain, leaves at source
    auto stamp = [&](int row, int col, double v) {
        if (row >= 0 && col >= 0 && v != 0.0) g_extra.push_back({row, col, v});
    };
    stamp(d, g, gm);
    stamp(d, s, -gm - gds);
    stamp(d, d, gds);
    stamp(s, g, -gm);
    stamp(s, s, gm + gds);
    stamp(s, d, -gds);

    auto cap = [&](int a, int b, double cv) {
        if (cv <= 0.0) return;
        if (a >= 0) c_extra.push_back({a, a, cv});
        if (b >= 0) c_extra.push_back({b, b, cv});
        if (a >= 0 && b >= 0) {
            c_extra.push_back({a, b, -cv});
            c_extra.push_back({b, a, -cv});
        }
    };
    cap(g, s, dev.mos.Cgs0);
    cap(g, d, dev.mos.Cgd0);

    if (d >= 0) f[d] += id;
    if (s >= 0) f[s] -= id;
}

}  // namespace

Linearization evaluate(const MnaSystem& sys, const Vec& x, const Vec* limit_from) {
    if (static_cast<int>(x.size()) != sys.n)
        throw ContractError("evaluate: state length does not match system");
    if (!all_finite(x)) throw NonFiniteError("evaluate: non-finite state entry");

    Linearization lin;
    lin.x_ref = x;
    lin.f_at_x = spmv(sys.G_lin, x);
    lin.op.resize(sys.nonlinear_devices.size());

    std::vector<Triplet> g_extra, c_extra;
    for (std::size_t i = 0; i < sys.nonlinear_devices.size(); ++i) {
        const NonlinearDevice& dev = sys.nonlinear_devices[i];
        if (dev.kind == DeviceKind::Diode)
            eval_diode(dev, x, limit_from, lin.op[i], g_extra, c_extra, lin.f_at_x);
        else
            eval_mosfet(dev, x, lin.op[i], g_extra, c_extra, lin.f_at_x);
    }

    if (g_extra.empty() && c_extra.empty()) {
        lin.C_k = sys.C_lin;
        lin.G_k = sys.G_lin;
    } else {
        SparseRealMatrix g_nl = SparseRealMatrix::from_triplets(sys.n, sys.n, std::move(g_extra));
        SparseRealMatrix c_nl = SparseRealMatrix::from_triplets(sys.n, sys.n, std::move(c_extra));
        lin.G_k = combine(1.0, sys.G_lin, 1.0, g_nl);
        lin.C_k = combine(1.0, sys.C_lin, 1.0, c_nl);
    }
    return lin;
}

Vec residual_F(const Linearization& lin, const Vec& x) {
    if (x.size() != lin.x_ref.size())
        throw ContractError("residual_F: state length mismatch");
    if (!all_finite(x)) throw NonFiniteError("residual_F: non-finite state entry");

    // G_k x - f(x) restricted to the nonlinear stamps; the linear parts
    // cancel exactly, so only device terms contribute.
    Vec F(x.size(), 0.0);
    for (const DeviceOperatingPoint& op : lin.op) {
        if (op.kind == DeviceKind::Diode) {
            const int a = op.nodes[0], c = op.nodes[1];
            const double v = node_voltage(x, a) - node_voltage(x, c);
            double i = 0.0, gdummy = 0.0;
            diode_current(op.diode, v, i, gdummy);
            const double r = op.g0 * v - i;
            if (a >= 0) F[a] += r;
            if (c >= 0) F[c] -= r;
        } else {
            const int d = op.nodes[0], g = op.nodes[1], s = op.nodes[2];
            const double vgs = node_voltage(x, g) - node_voltage(x, s);
            const double vds = node_voltage(x, d) - node_voltage(x, s);
            const double sign = op.mos.pmos ? -1.0 : 1.0;
            double id = 0.0, gm = 0.0, gds = 0.0;
            mosfet_current(op.mos, sign * vgs, sign * vds, id, gm, gds);
            id *= sign;
            const double r = op.gm * vgs + op.gds * vds - id;
            if (d >= 0) F[d] += r;
            if (s >= 0) F[s] -= r;
        }
    }
    return F;
}

}  // namespace exsim
