#pragma once

#include <vector>

#include "exsim/mna.hpp"
#include "exsim/sparse_matrix.hpp"
#include "exsim/vec.hpp"

namespace exsim {

/// Per-device operating point frozen at the linearization state. Holds the
/// partial derivatives and reference currents needed to apply the stamped
/// conductances and to re-evaluate device currents at other states.
struct DeviceOperatingPoint {
    DeviceKind kind{};
    int nodes[4] = {-1, -1, -1, -1};
    DiodeParams diode;
    MosfetParams mos;
    // diode: g0 = dI/dv and i0 = I at the (possibly limited) junction voltage
    double v_used = 0.0;
    double g0 = 0.0;
    double i0 = 0.0;
    // mosfet: partials at the reference voltages (NMOS orientation applied)
    double vgs_ref = 0.0, vds_ref = 0.0;
    double id_ref = 0.0, gm = 0.0, gds = 0.0;
};

/// Step-frozen linearization at x_ref: C(x_ref), G(x_ref), the total static
/// current f(x_ref) and per-device operating points.
struct Linearization {
    SparseRealMatrix C_k;
    SparseRealMatrix G_k;
    Vec f_at_x;
    Vec x_ref;
    std::vector<DeviceOperatingPoint> op;
};

/// Evaluates all nonlinear devices at x and assembles C_k, G_k.
/// When limit_from is given, diode junction voltages are limited against
/// the corresponding voltages of that state (Newton damping for BENR/DC);
/// the exponential-integrator path always evaluates without limiting.
Linearization evaluate(const MnaSystem& sys, const Vec& x, const Vec* limit_from = nullptr);

/// F(x) := G_k * x - f(x), with f re-evaluating device currents at x while
/// the stamps stay frozen at lin.x_ref. Identically zero for circuits
/// without nonlinear devices, so Delta F across a step is the pure
/// nonlinear remainder.
Vec residual_F(const Linearization& lin, const Vec& x);

/// Shockley current and conductance with the overflow guard applied
/// (exponent clamped at v/Vt = 80, linear extrapolation beyond, C1).
void diode_current(const DiodeParams& p, double v, double& current, double& conductance);

/// Level-1 drain current and partials in NMOS orientation; handles the
/// drain/source swap for vds < 0 and stays C1 across region boundaries.
void mosfet_current(const MosfetParams& p, double vgs, double vds, double& id, double& gm,
                    double& gds);

/// SPICE-style junction voltage limiting toward vold.
double pnjlim(double vnew, double vold, double vt, double vcrit);

}  // namespace exsim
