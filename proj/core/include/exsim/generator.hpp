#pragma once

#include <cstdint>

#include "exsim/netlist.hpp"

namespace exsim {

enum class GeneratorKind { RcLadder, InverterChain, CoupledMesh };

/// Deterministic benchmark-circuit generator. Component values are
/// sampled log-uniformly from the given ranges; a fixed seed yields a
/// byte-identical deck.
struct GeneratorParams {
    GeneratorKind kind = GeneratorKind::RcLadder;
    int stages = 10;
    double coupling_density = 0.1;  // fraction of non-adjacent node pairs coupled
    double cap_fill = 1.0;          // fraction of mesh nodes carrying a ground cap
    double r_min = 100.0;
    double r_max = 10e3;
    double c_min = 1e-12;
    double c_max = 10e-12;
    double cc_min = 0.1e-12;
    double cc_max = 1e-12;
    std::uint64_t seed = 1;
};

NetlistDoc generate_circuit(const GeneratorParams& params);

GeneratorKind generator_kind_from_name(const std::string& name);

}  // namespace exsim
