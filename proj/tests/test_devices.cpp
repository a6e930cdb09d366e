#include <cmath>

#include "doctest.h"
#include "exsim/devices.hpp"
#include "exsim/errors.hpp"
#include "exsim/netlist.hpp"

using namespace exsim;

TEST_CASE("diode current at frozen oracle points") {
    DiodeParams p;  // Is=1e-14, Vt=0.02585
    double i = 0.0, g = 0.0;

    diode_current(p, 0.0, i, g);
    CHECK(i == 0.0);
    CHECK(g == doctest::Approx(3.8684719535783366e-13).epsilon(1e-14));

    // Is*(e^{v/Vt}-1) and Is*e^{v/Vt}/Vt at v=0.6
    diode_current(p, 0.6, i, g);
    CHECK(i == doctest::Approx(1.2031953282638299e-4).epsilon(1e-13));
    CHECK(g == doctest::Approx(4.654527382451953e-3).epsilon(1e-13));
}

TEST_CASE("diode overflow guard is C1") {
    DiodeParams p;
    const double v_clamp = 80.0 * p.Vt;
    double i1, g1, i2, g2;
    diode_current(p, v_clamp - 1e-9, i1, g1);
    diode_current(p, v_clamp + 1e-9, i2, g2);
    CHECK(std::abs(i2 - i1) <= 2.1e-9 * g1);          // value continuous with slope g
    CHECK(std::abs(g2 - g1) <= 1e-7 * g1);            // derivative continuous
    diode_current(p, 100.0, i2, g2);                   // far beyond the clamp
    CHECK(std::isfinite(i2));
    CHECK(std::isfinite(g2));
}

TEST_CASE("linear-only circuit leaves stamps unchanged") {
    MnaSystem sys = build_mna(parse_netlist("R1 a 0 2\nC1 a 0 3\n.OPTIONS GMIN=0\n"));
    Vec x{1.5};
    Linearization lin = evaluate(sys, x);
    CHECK(lin.C_k.value_at(0, 0) == 3.0);
    CHECK(lin.G_k.value_at(0, 0) == 0.5);
    CHECK(lin.f_at_x[0] == doctest::Approx(0.75));  // G_lin * x
    Vec F = residual_F(lin, {0.7});
    CHECK(F == Vec{0.0});
    F = residual_F(lin, x);
    CHECK(F == Vec{0.0});
}

TEST_CASE("diode evaluation stamps conductance and current") {
    MnaSystem sys = build_mna(parse_netlist("D1 a 0 IS=1e-14\nR1 a 0 1k\n.OPTIONS GMIN=0\n"));
    Vec x{0.6};
    Linearization lin = evaluate(sys, x);
    const double g_r = 1e-3;
    CHECK(lin.G_k.value_at(0, 0) ==
          doctest::Approx(g_r + 4.654527382451953e-3).epsilon(1e-12));
    CHECK(lin.f_at_x[0] ==
          doctest::Approx(0.6 * g_r + 1.2031953282638299e-4).epsilon(1e-12));
}

TEST_CASE("residual_F of the scalar diode circuit") {
    // x_ref = 0: F(x) = g0*x - Is(e^{x/Vt}-1) with g0 = Is/Vt
    MnaSystem sys = build_mna(parse_netlist("D1 a 0 IS=1e-14\nR1 a 0 1k\n.OPTIONS GMIN=0\n"));
    Linearization lin = evaluate(sys, Vec{0.0});
    CHECK(residual_F(lin, Vec{0.0}) == Vec{0.0});

    const double g0 = 1e-14 / 0.02585;
    const double want = g0 * 0.1 - 1e-14 * (std::exp(0.1 / 0.02585) - 1.0);
    Vec F = residual_F(lin, Vec{0.1});
    CHECK(F[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("residual_F changes quadratically near the reference") {
    MnaSystem sys = build_mna(parse_netlist("D1 a 0 IS=1e-14\nR1 a 0 1k\n.OPTIONS GMIN=0\n"));
    const double v0 = 0.55;
    Linearization lin = evaluate(sys, Vec{v0});
    const Vec f0 = residual_F(lin, Vec{v0});
    auto change = [&](double d) {
        return norm_inf(sub(residual_F(lin, Vec{v0 + d}), f0));
    };
    // fit K at one delta, check the quadratic bound at smaller deltas
    const double d0 = 1e-3;
    const double k_fit = change(d0) / (d0 * d0);
    for (double d : {5e-4, 2e-4, 1e-4, 5e-5}) {
        CHECK(change(d) <= 1.1 * k_fit * d * d);
    }
}

TEST_CASE("stamped conductance matches finite differences") {
    DiodeParams dp;
    for (double v : {-0.3, 0.0, 0.3, 0.55, 0.7}) {
        double i = 0, g = 0, ip = 0, im = 0, gd = 0;
        diode_current(dp, v, i, g);
        const double d = 1e-7 * (1.0 + std::abs(v));
        diode_current(dp, v + d, ip, gd);
        diode_current(dp, v - d, im, gd);
        const double fd = (ip - im) / (2.0 * d);
        CHECK(g == doctest::Approx(fd).epsilon(1e-5));
    }

    MosfetParams mp;
    mp.Vth = 0.5;
    mp.Kp = 2e-4;
    mp.lambda = 0.05;
    mp.W = 4e-6;
    mp.L = 0.5e-6;
    for (auto [vgs, vds] : std::vector<std::pair<double, double>>{
             {0.3, 0.8}, {0.8, 0.1}, {0.8, 0.9}, {1.2, 0.4}, {0.9, -0.5}}) {
        double id, gm, gds, ip, im, t1, t2;
        mosfet_current(mp, vgs, vds, id, gm, gds);
        const double d = 1e-7 * (1.0 + std::abs(vgs) + std::abs(vds));
        mosfet_current(mp, vgs + d, vds, ip, t1, t2);
        mosfet_current(mp, vgs - d, vds, im, t1, t2);
        CHECK(gm == doctest::Approx((ip - im) / (2 * d)).epsilon(1e-5));
        mosfet_current(mp, vgs, vds + d, ip, t1, t2);
        mosfet_current(mp, vgs, vds - d, im, t1, t2);
        CHECK(gds == doctest::Approx((ip - im) / (2 * d)).epsilon(1e-5));
    }
}

TEST_CASE("device charge derivative matches stamped capacitance") {
    // junction and gate charges are C0*v; the finite difference of the
    // charge must reproduce the stamped capacitance exactly
    MnaSystem sys = build_mna(parse_netlist(
        "D1 a 0 IS=1e-14 C0=2e-12\nR1 a 0 1k\n"
        "M1 b g 0 0 VTH=0.5 KP=2e-4 CGS0=3e-15 CGD0=1e-15\nR2 b 0 1k\nR3 g 0 1k\n"
        ".OPTIONS GMIN=0\n"));
    Vec x(static_cast<std::size_t>(sys.n), 0.2);
    Linearization lin = evaluate(sys, x);
    const int a = sys.node_index.at("A");
    const int b = sys.node_index.at("B");
    const int g = sys.node_index.at("G");
    // diode charge q(v) = C0 v: dq/dv == stamped C0
    auto fd_cap = [](double c0, double v) {
        const double d = 1e-7 * (1.0 + std::abs(v));
        return ((v + d) * c0 - (v - d) * c0) / (2 * d);
    };
    CHECK(lin.C_k.value_at(a, a) == doctest::Approx(fd_cap(2e-12, 0.2)).epsilon(1e-5));
    CHECK(lin.C_k.value_at(g, g) == doctest::Approx(fd_cap(3e-15 + 1e-15, 0.2)).epsilon(1e-5));
    CHECK(lin.C_k.value_at(g, b) == doctest::Approx(-1e-15).epsilon(1e-12));
}

TEST_CASE("mosfet regions are C1 across boundaries") {
    MosfetParams p;
    p.Vth = 0.5;
    p.Kp = 2e-4;
    p.lambda = 0.05;
    const double vgs = 1.1;
    const double vsat = vgs - p.Vth;  // triode/saturation boundary
    double i1, gm1, gd1, i2, gm2, gd2;
    mosfet_current(p, vgs, vsat - 1e-13, i1, gm1, gd1);
    mosfet_current(p, vgs, vsat + 1e-13, i2, gm2, gd2);
    CHECK(std::abs(i1 - i2) <= 1e-12);
    CHECK(std::abs(gm1 - gm2) <= 1e-12);
    CHECK(std::abs(gd1 - gd2) <= 1e-12);

    // cutoff boundary
    mosfet_current(p, p.Vth - 1e-13, 0.7, i1, gm1, gd1);
    mosfet_current(p, p.Vth + 1e-13, 0.7, i2, gm2, gd2);
    CHECK(std::abs(i1 - i2) <= 1e-12);
    CHECK(std::abs(gm1 - gm2) <= 1e-12);
    CHECK(std::abs(gd1 - gd2) <= 1e-12);

    // vds = 0 (drain/source swap point)
    mosfet_current(p, 1.0, -1e-13, i1, gm1, gd1);
    mosfet_current(p, 1.0, 1e-13, i2, gm2, gd2);
    CHECK(std::abs(i1 - i2) <= 1e-12);
    CHECK(std::abs(gm1 - gm2) <= 1e-10);
    CHECK(std::abs(gd1 - gd2) <= 1e-10);
}

TEST_CASE("pnjlim pulls large forward jumps back") {
    const double vt = 0.02585;
    const double vcrit = vt * std::log(vt / (std::sqrt(2.0) * 1e-14));
    // big jump from 0.6 -> 5 gets limited near one thermal decade
    double v = pnjlim(5.0, 0.6, vt, vcrit);
    CHECK(v < 1.0);
    CHECK(v > 0.6);
    // small updates pass through untouched
    CHECK(pnjlim(0.61, 0.6, vt, vcrit) == 0.61);
    CHECK(pnjlim(0.3, 0.0, vt, vcrit) == 0.3);
}

TEST_CASE("evaluate rejects non-finite states") {
    MnaSystem sys = build_mna(parse_netlist("R1 a 0 1\n"));
    Vec bad{std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(evaluate(sys, bad), NonFiniteError);
}
