#include "exsim/mna.hpp"

#include <algorithm>
#include <set>

#include "exsim/errors.hpp"

namespace exsim {

namespace {

bool is_ground(const std::string& name) { return name == "0"; }

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

}  // namespace

MnaSystem build_mna(const NetlistDoc& doc) {
    MnaSystem sys;
    sys.options = doc.options;
    sys.tran = doc.tran;

    bool ground_seen = false;
    for (const DeviceCard& card : doc.devices) {
        for (const std::string& node : card.nodes) {
            if (is_ground(node)) {
                ground_seen = true;
                continue;
            }
            if (!sys.node_index.count(node)) {
                int idx = static_cast<int>(sys.node_index.size());
                sys.node_index[node] = idx;
                sys.unknown_names.push_back(node);
                (void)idx;
            }
        }
    }
    if (!doc.devices.empty() && !ground_seen)
        throw ContractError("netlist has no ground node \"0\"");

    const int n_nodes = static_cast<int>(sys.node_index.size());
    int n_branches = 0;
    for (const DeviceCard& card : doc.devices)
        if (card.kind == DeviceKind::VoltageSource || card.kind == DeviceKind::Inductor)
            ++n_branches;
    sys.n = n_nodes + n_branches;

    auto idx = [&](const std::string& name) -> int {
        return is_ground(name) ? -1 : sys.node_index.at(name);
    };

    std::vector<Triplet> g, c, b;
    auto stamp_pair = [](std::vector<Triplet>& t, int a, int bb, double v) {
        if (a >= 0) t.push_back({a, a, v});
        if (bb >= 0) t.push_back({bb, bb, v});
        if (a >= 0 && bb >= 0) {
            t.push_back({a, bb, -v});
            t.push_back({bb, a, -v});
        }
    };

    int branch = n_nodes;
    for (const DeviceCard& card : doc.devices) {
        switch (card.kind) {
            case DeviceKind::Resistor:
                stamp_pair(g, idx(card.nodes[0]), idx(card.nodes[1]), 1.0 / card.value);
                break;
            case DeviceKind::Capacitor:
                stamp_pair(c, idx(card.nodes[0]), idx(card.nodes[1]), card.value);
                break;
            case DeviceKind::Inductor: {
                int a = idx(card.nodes[0]), bb = idx(card.nodes[1]);
                int j = branch++;
                sys.unknown_names.push_back("I(" + card.name + ")");
                if (a >= 0) {
                    g.push_back({a, j, 1.0});
                    g.push_back({j, a, 1.0});
                }
                if (bb >= 0) {
                    g.push_back({bb, j, -1.0});
                    g.push_back({j, bb, -1.0});
                }
                c.push_back({j, j, -card.value});
                break;
            }
            case DeviceKind::VoltageSource: {
                int a = idx(card.nodes[0]), bb = idx(card.nodes[1]);
                int j = branch++;
                sys.unknown_names.push_back("I(" + card.name + ")");
                if (a >= 0) {
                    g.push_back({a, j, 1.0});
                    g.push_back({j, a, 1.0});
                }
                if (bb >= 0) {
                    g.push_back({bb, j, -1.0});
                    g.push_back({j, bb, -1.0});
                }
                int col = static_cast<int>(sys.sources.size());
                b.push_back({j, col, 1.0});
                sys.sources.push_back(card.source);
                break;
            }
            case DeviceKind::CurrentSource: {
                int a = idx(card.nodes[0]), bb = idx(card.nodes[1]);
                int col = static_cast<int>(sys.sources.size());
                // positive source current flows out of node a into node b
                if (a >= 0) b.push_back({a, col, -1.0});
                if (bb >= 0) b.push_back({bb, col, 1.0});
                sys.sources.push_back(card.source);
                break;
            }
            case DeviceKind::Diode: {
                NonlinearDevice d;
                d.kind = card.kind;
                d.name = card.name;
                d.nodes[0] = idx(card.nodes[0]);
                d.nodes[1] = idx(card.nodes[1]);
                d.diode.Is = param_or(card.params, "IS", 1e-14);
                d.diode.Vt = param_or(card.params, "VT", 0.02585);
                d.diode.C0 = param_or(card.params, "C0", 0.0);
                if (d.diode.Is <= 0.0 || d.diode.Vt <= 0.0)
                    throw ContractError("diode " + card.name + ": IS and VT must be positive");
                sys.nonlinear_devices.push_back(std::move(d));
                break;
            }
            case DeviceKind::Mosfet: {
                NonlinearDevice d;
                d.kind = card.kind;
                d.name = card.name;
                for (int i = 0; i < 4; ++i) d.nodes[i] = idx(card.nodes[i]);
                d.mos.Vth = param_or(card.params, "VTH", 0.7);
                d.mos.Kp = param_or(card.params, "KP", 2e-5);
                d.mos.lambda = param_or(card.params, "LAMBDA", 0.0);
                d.mos.W = param_or(card.params, "W", 10e-6);
                d.mos.L = param_or(card.params, "L", 1e-6);
                d.mos.Cgs0 = param_or(card.params, "CGS0", 0.0);
                d.mos.Cgd0 = param_or(card.params, "CGD0", 0.0);
                d.mos.pmos = param_or(card.params, "TYPE", 0.0) != 0.0 ||
                             (!card.model_label.empty() && card.model_label[0] == 'P');
                if (d.mos.Kp <= 0.0 || d.mos.W <= 0.0 || d.mos.L <= 0.0)
                    throw ContractError("mosfet " + card.name + ": KP, W, L must be positive");
                sys.nonlinear_devices.push_back(std::move(d));
                break;
            }
        }
    }

    if (sys.options.gmin > 0.0)
        for (int i = 0; i < n_nodes; ++i) g.push_back({i, i, sys.options.gmin});

    sys.G_lin = SparseRealMatrix::from_triplets(sys.n, sys.n, std::move(g));
    sys.C_lin = SparseRealMatrix::from_triplets(sys.n, sys.n, std::move(c));
    sys.B = SparseRealMatrix::from_triplets(sys.n, sys.n_inputs(), std::move(b));

    // candidate floating nodes: no static stamp at all and gmin disabled
    if (sys.options.gmin == 0.0) {
        for (int i = 0; i < n_nodes; ++i)
            if (sys.G_lin.empty_row(i)) sys.floating_nodes.push_back(sys.unknown_names[i]);
    }
    return sys;
}

Vec eval_sources(const MnaSystem& sys, double t) {
    Vec u(sys.sources.size());
    for (std::size_t i = 0; i < sys.sources.size(); ++i) u[i] = sys.sources[i].eval(t);
    return u;
}

std::vector<double> source_breakpoints(const MnaSystem& sys, double t0, double t1) {
    if (!(t0 < t1)) throw ContractError("source_breakpoints: need t0 < t1");
    std::vector<double> pts;
    for (const SourceWaveform& s : sys.sources) s.breakpoints_in(t0, t1, pts);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace exsim
