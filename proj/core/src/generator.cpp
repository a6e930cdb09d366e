#include "exsim/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "exsim/errors.hpp"

namespace exsim {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo)) throw ContractError("generator: bad value range");
    return std::exp(std::log(lo) + uniform01(rng) * (std::log(hi) - std::log(lo)));
}

DeviceCard rc(DeviceKind kind, std::string name, std::string a, std::string b, double value) {
    DeviceCard card;
    card.kind = kind;
    card.name = std::move(name);
    card.nodes = {std::move(a), std::move(b)};
    card.value = value;
    return card;
}

DeviceCard vsource(std::string name, std::string a, std::string b, SourceWaveform src) {
    DeviceCard card;
    card.kind = DeviceKind::VoltageSource;
    card.name = std::move(name);
    card.nodes = {std::move(a), std::move(b)};
    card.source = std::move(src);
    return card;
}

NetlistDoc rc_ladder(const GeneratorParams& p) {
    NetlistDoc doc;
    doc.title = "generated rc ladder, stages=" + std::to_string(p.stages) +
                " seed=" + std::to_string(p.seed);
    std::mt19937_64 rng(p.seed);

    double tau_total = 0.0;
    std::string prev = "IN";
    for (int i = 1; i <= p.stages; ++i) {
        const std::string node = "N" + std::to_string(i);
        const double r = log_uniform(rng, p.r_min, p.r_max);
        const double c = log_uniform(rng, p.c_min, p.c_max);
        doc.devices.push_back(rc(DeviceKind::Resistor, "R" + std::to_string(i), prev, node, r));
        doc.devices.push_back(rc(DeviceKind::Capacitor, "C" + std::to_string(i), node, "0", c));
        tau_total += r * c;
        prev = node;
    }

    const double ramp = 0.5 * tau_total;
    doc.devices.insert(doc.devices.begin(),
                       vsource("V1", "IN", "0",
                               SourceWaveform::piecewise_linear({{0.0, 0.0}, {ramp, 1.0}})));
    doc.tran = TranDirective{tau_total / 20.0, 5.0 * tau_total};
    return doc;
}

NetlistDoc inverter_chain(const GeneratorParams& p) {
    NetlistDoc doc;
    doc.title = "generated inverter chain, stages=" + std::to_string(p.stages) +
                " seed=" + std::to_string(p.seed);
    std::mt19937_64 rng(p.seed);

    const double vdd = 1.8;
    const double cload_lo = 5e-15, cload_hi = 20e-15;

    doc.devices.push_back(vsource("VDD", "VDD", "0", SourceWaveform::dc(vdd)));

    std::string in = "IN";
    for (int i = 1; i <= p.stages; ++i) {
        const std::string out = "S" + std::to_string(i);
        DeviceCard mp;
        mp.kind = DeviceKind::Mosfet;
        mp.name = "MP" + std::to_string(i);
        mp.nodes = {out, in, "VDD", "VDD"};
        mp.model_label = "PMOS1";
        mp.params = {{"TYPE", 1.0}, {"VTH", 0.5},    {"KP", 1e-4},   {"LAMBDA", 0.05},
                     {"W", 8e-6},   {"L", 0.5e-6},   {"CGS0", 2e-15}, {"CGD0", 1e-15}};
        doc.devices.push_back(std::move(mp));

        DeviceCard mn;
        mn.kind = DeviceKind::Mosfet;
        mn.name = "MN" + std::to_string(i);
        mn.nodes = {out, in, "0", "0"};
        mn.model_label = "NMOS1";
        mn.params = {{"VTH", 0.5},  {"KP", 2e-4},   {"LAMBDA", 0.05}, {"W", 4e-6},
                     {"L", 0.5e-6}, {"CGS0", 2e-15}, {"CGD0", 1e-15}};
        doc.devices.push_back(std::move(mn));

        doc.devices.push_back(rc(DeviceKind::Capacitor, "CL" + std::to_string(i), out, "0",
                                 log_uniform(rng, cload_lo, cload_hi)));
        in = out;
    }

    // stage time constant ~ Ron * Cload, Ron ~ 1/(k (vdd - vth))
    const double tau = 1.0 / (2e-4 * 8.0 * (vdd - 0.5)) * 20e-15;
    const double rise = 40.0 * tau;
    SourceWaveform::Pulse pulse{0.0, vdd, 10.0 * tau, rise, rise, 200.0 * tau, 0.0};
    doc.devices.push_back(vsource("VIN", "IN", "0", SourceWaveform::pulsed(pulse)));
    doc.tran = TranDirective{tau, 10.0 * tau + 2.0 * rise + 200.0 * tau + 100.0 * tau};
    return doc;
}

NetlistDoc coupled_mesh(const GeneratorParams& p) {
    NetlistDoc doc;
    doc.title = "generated coupled mesh, stages=" + std::to_string(p.stages) +
                " density=" + std::to_string(p.coupling_density) +
                " seed=" + std::to_string(p.seed);
    if (p.coupling_density < 0.0 || p.coupling_density > 1.0)
        throw ContractError("generator: coupling_density outside [0,1]");
    if (p.cap_fill < 0.0 || p.cap_fill > 1.0)
        throw ContractError("generator: cap_fill outside [0,1]");
    std::mt19937_64 rng(p.seed);
    const int n = p.stages;

    auto node = [](int i) { return "N" + std::to_string(i); };

    // resistive chain gives G a narrow band
    double tau_mean = 0.0;
    std::string prev = "IN";
    for (int i = 1; i <= n; ++i) {
        const double r = log_uniform(rng, p.r_min, p.r_max);
        doc.devices.push_back(rc(DeviceKind::Resistor, "R" + std::to_string(i), prev, node(i), r));
        tau_mean += r;
        prev = node(i);
    }
    doc.devices.push_back(
        rc(DeviceKind::Resistor, "RT", node(n), "0", log_uniform(rng, p.r_min, p.r_max)));

    // ground caps on the first cap_fill fraction of nodes; the rest keep
    // an exactly empty C row
    const int n_capped = std::max(1, static_cast<int>(std::llround(p.cap_fill * n)));
    double c_mean = 0.0;
    for (int i = 1; i <= n_capped; ++i) {
        const double c = log_uniform(rng, p.c_min, p.c_max);
        doc.devices.push_back(rc(DeviceKind::Capacitor, "C" + std::to_string(i), node(i), "0", c));
        c_mean += c;
    }
    c_mean /= n_capped;
    tau_mean = tau_mean / n * c_mean * n;  // ~ total RC scale

    // coupling caps between random non-adjacent capped nodes; the target
    // count scales with stages^2 so C's off-band grows past G's band
    std::vector<std::pair<int, int>> pairs;
    for (int i = 1; i <= n_capped; ++i)
        for (int j = i + 2; j <= n_capped; ++j) pairs.emplace_back(i, j);
    // deterministic partial Fisher-Yates
    auto want = static_cast<std::size_t>(
        std::llround(p.coupling_density * static_cast<double>(n) * static_cast<double>(n)));
    want = std::min(want, pairs.size());
    for (std::size_t i = 0; i < want && i < pairs.size(); ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pairs.size() - i));
        std::swap(pairs[i], pairs[j]);
    }
    for (std::size_t i = 0; i < want && i < pairs.size(); ++i) {
        const double c = log_uniform(rng, p.cc_min, p.cc_max);
        doc.devices.push_back(rc(DeviceKind::Capacitor, "CC" + std::to_string(i + 1),
                                 node(pairs[i].first), node(pairs[i].second), c));
    }

    const double rise = 0.2 * tau_mean;
    SourceWaveform::Pulse pulse{0.0, 1.0, 0.1 * tau_mean, rise, rise, 2.0 * tau_mean, 0.0};
    doc.devices.insert(doc.devices.begin(),
                       vsource("V1", "IN", "0", SourceWaveform::pulsed(pulse)));
    doc.tran = TranDirective{tau_mean / 50.0, 5.0 * tau_mean};
    return doc;
}

}  // namespace

NetlistDoc generate_circuit(const GeneratorParams& params) {
    if (params.stages < 1) throw ContractError("generator: stages must be >= 1");
    switch (params.kind) {
        case GeneratorKind::RcLadder: return rc_ladder(params);
        case GeneratorKind::InverterChain: return inverter_chain(params);
        case GeneratorKind::CoupledMesh: return coupled_mesh(params);
    }
    throw ContractError("generator: unknown kind");
}

GeneratorKind generator_kind_from_name(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(), ::toupper);
    if (up == "RC_LADDER") return GeneratorKind::RcLadder;
    if (up == "INVERTER_CHAIN") return GeneratorKind::InverterChain;
    if (up == "COUPLED_MESH") return GeneratorKind::CoupledMesh;
    throw ContractError("generator: unknown kind '" + name + "'");
}

}  // namespace exsim
