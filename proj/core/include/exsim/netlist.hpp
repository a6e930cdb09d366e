#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exsim/errors.hpp"
#include "exsim/source.hpp"

namespace exsim {

enum class DeviceKind {
    Resistor,
    Capacitor,
    Inductor,
    VoltageSource,
    CurrentSource,
    Diode,
    Mosfet,
};

struct DeviceCard {
    DeviceKind kind{};
    std::string name;
    std::vector<std::string> nodes;
    double value = 0.0;                    // R / C / L principal value
    SourceWaveform source;                 // V / I waveforms
    std::map<std::string, double> params;  // D / M name=value parameters
    std::string model_label;               // optional bare token on M cards
    int line = 0;
};

struct TranDirective {
    double step_hint = 0.0;
    double stop_time = 0.0;
};

/// .OPTIONS values. ERRBUDGET is the transient error budget E_rr, KRYEPS the
/// Krylov residual tolerance, GMIN the conductance added on node diagonals,
/// MMAX the Krylov dimension cap, HMIN/HMAX the step-size bounds.
struct OptionsDirective {
    double err_budget = 1e-4;
    double krylov_eps = 1e-7;
    double gmin = 1e-12;
    int m_max = 100;
    std::optional<double> hmin;
    std::optional<double> hmax;
};

struct NetlistDoc {
    std::string title;
    std::vector<DeviceCard> devices;
    std::optional<TranDirective> tran;
    OptionsDirective options;
};

/// Case-insensitive SPICE-subset parser. Understands element cards
/// R, C, L, V, I, D, M, the directives .TRAN/.OPTIONS/.END, "*" comment
/// lines, trailing "$" comments, "+" continuations and unit suffixes
/// f/p/n/u/m/k/meg/g.
NetlistDoc parse_netlist(const std::string& text);

/// Canonical text form; parse_netlist(pretty_print(doc)) is structurally
/// identical to doc.
std::string pretty_print(const NetlistDoc& doc);

}  // namespace exsim
