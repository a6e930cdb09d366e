#include "doctest.h"
#include "exsim/generator.hpp"
#include "exsim/mna.hpp"
#include "exsim/netlist.hpp"

using namespace exsim;

TEST_CASE("rc ladder structure") {
    GeneratorParams p;
    p.kind = GeneratorKind::RcLadder;
    p.stages = 3;
    NetlistDoc doc = generate_circuit(p);
    int r = 0, c = 0, v = 0;
    for (const DeviceCard& d : doc.devices) {
        r += d.kind == DeviceKind::Resistor;
        c += d.kind == DeviceKind::Capacitor;
        v += d.kind == DeviceKind::VoltageSource;
    }
    CHECK(r == 3);
    CHECK(c == 3);
    CHECK(v == 1);
    MnaSystem sys = build_mna(doc);
    CHECK(sys.node_index.size() == 4);  // IN, N1..N3
}

TEST_CASE("same seed gives byte-identical decks") {
    GeneratorParams p;
    p.kind = GeneratorKind::CoupledMesh;
    p.stages = 12;
    p.coupling_density = 0.2;
    p.seed = 1234;
    std::string a = pretty_print(generate_circuit(p));
    std::string b = pretty_print(generate_circuit(p));
    CHECK(a == b);
    p.seed = 1235;
    CHECK(pretty_print(generate_circuit(p)) != a);
}

TEST_CASE("coupled mesh widens C beyond G") {
    GeneratorParams p;
    p.kind = GeneratorKind::CoupledMesh;
    p.stages = 20;
    p.coupling_density = 0.1;
    p.seed = 77;
    MnaSystem sys = build_mna(generate_circuit(p));
    CHECK(sys.C_lin.nnz() > sys.G_lin.nnz());
}

TEST_CASE("cap_fill leaves empty C rows for the singular-C regime") {
    GeneratorParams p;
    p.kind = GeneratorKind::CoupledMesh;
    p.stages = 30;
    p.cap_fill = 0.7;
    p.coupling_density = 0.05;
    p.seed = 3;
    MnaSystem sys = build_mna(generate_circuit(p));
    int empty = 0;
    for (int i = 0; i < sys.n; ++i) empty += sys.C_lin.empty_row(i);
    CHECK(empty >= static_cast<int>(0.2 * sys.n));
}

TEST_CASE("inverter chain builds and has mosfets") {
    GeneratorParams p;
    p.kind = GeneratorKind::InverterChain;
    p.stages = 5;
    NetlistDoc doc = generate_circuit(p);
    MnaSystem sys = build_mna(doc);
    CHECK(sys.nonlinear_devices.size() == 10);  // PMOS + NMOS per stage
    CHECK(doc.tran.has_value());
}

TEST_CASE("kind parsing") {
    CHECK(generator_kind_from_name("rc_ladder") == GeneratorKind::RcLadder);
    CHECK(generator_kind_from_name("INVERTER_CHAIN") == GeneratorKind::InverterChain);
    CHECK(generator_kind_from_name("Coupled_Mesh") == GeneratorKind::CoupledMesh);
    CHECK_THROWS(generator_kind_from_name("nope"));
}
