#pragma once

#include <map>
#include <string>
#include <vector>

#include "exsim/netlist.hpp"
#include "exsim/sparse_matrix.hpp"
#include "exsim/source.hpp"
#include "exsim/vec.hpp"

namespace exsim {

struct DiodeParams {
    double Is = 1e-14;   // saturation current, A
    double Vt = 0.02585; // thermal voltage, V
    double C0 = 0.0;     // junction capacitance, F
};

struct MosfetParams {
    double Vth = 0.7;     // threshold voltage, V (magnitude for PMOS)
    double Kp = 2e-5;     // transconductance parameter, A/V^2
    double lambda = 0.0;  // channel-length modulation, 1/V
    double W = 10e-6;
    double L = 1e-6;
    double Cgs0 = 0.0;
    double Cgd0 = 0.0;
    bool pmos = false;
};

/// Nonlinear device instance with resolved node indices (-1 = ground).
struct NonlinearDevice {
    DeviceKind kind{};
    std::string name;
    // diode: nodes[0] anode, nodes[1] cathode
    // mosfet: nodes[0] drain, [1] gate, [2] source, [3] bulk (unused)
    int nodes[4] = {-1, -1, -1, -1};
    DiodeParams diode;
    MosfetParams mos;
};

/// Assembled circuit: index map, linear stamps and input sources.
/// Unknowns are the non-ground node voltages followed by branch currents
/// of voltage sources and inductors; ground is eliminated.
struct MnaSystem {
    int n = 0;
    std::map<std::string, int> node_index;          // node name -> index
    std::vector<std::string> unknown_names;         // index -> display name
    SparseRealMatrix C_lin;                         // linear charge/flux stamps
    SparseRealMatrix G_lin;                         // linear static stamps (+ gmin)
    SparseRealMatrix B;                             // n x n_inputs incidence
    std::vector<SourceWaveform> sources;            // one per B column
    std::vector<NonlinearDevice> nonlinear_devices;
    OptionsDirective options;
    std::optional<TranDirective> tran;
    std::vector<std::string> floating_nodes;        // gmin-free zero-G-diagonal nodes

    int n_inputs() const { return static_cast<int>(sources.size()); }
};

/// Standard MNA stamping of the parsed deck. Requires the ground literal
/// "0" to appear on at least one card.
MnaSystem build_mna(const NetlistDoc& doc);

/// u(t), one entry per independent source.
Vec eval_sources(const MnaSystem& sys, double t);

/// All source slope-change instants strictly inside (t0, t1), ascending,
/// deduplicated. Integrators clamp steps so each lies inside one segment.
std::vector<double> source_breakpoints(const MnaSystem& sys, double t0, double t1);

}  // namespace exsim
