#pragma once

#include <cstdio>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "exsim/errors.hpp"
#include "exsim/generator.hpp"
#include "exsim/integrate.hpp"
#include "exsim/mna.hpp"

namespace exsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_waveform_csv(const std::string& path, const Waveform& wf) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << "time";
    for (const std::string& c : wf.columns) out << "," << c;
    out << "\n";
    for (std::size_t i = 0; i < wf.times.size(); ++i) {
        out << fmt17(wf.times[i]);
        for (double v : wf.samples[i]) out << "," << fmt17(v);
        out << "\n";
    }
}

inline void write_records_jsonl(const std::string& path,
                                const std::vector<StepRecord>& records) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    for (const StepRecord& r : records) {
        out << "{\"t\":" << fmt17(r.t) << ",\"h\":" << fmt17(r.h_accepted)
            << ",\"lu\":" << r.lu_count << ",\"m\":[";
        for (std::size_t i = 0; i < r.krylov_dims.size(); ++i)
            out << (i ? "," : "") << r.krylov_dims[i];
        out << "],\"nr\":" << r.nr_iters << ",\"rejects\":" << r.rejects
            << ",\"err\":" << fmt17(r.err_norm) << "}\n";
    }
}

Method method_from_name(const std::string& name);

/// Step-control overrides shared by simulate and bench.
struct CtlFlags {
    double eps = -1.0;
    double err_budget = -1.0;
    double hmin = -1.0;
    double hmax = -1.0;
    int m_max = -1;
    double h_init = -1.0;
    bool fixed_step = false;
    double gamma = -1.0;

    StepControl resolve(const MnaSystem& sys) const {
        StepControl ctl = step_control_from(sys);
        if (eps > 0) ctl.eps = eps;
        if (err_budget > 0) ctl.err_budget = err_budget;
        if (hmin > 0) ctl.hmin = hmin;
        if (hmax > 0) ctl.hmax = hmax;
        if (m_max > 0) ctl.m_max = m_max;
        if (h_init > 0) ctl.h_init = h_init;
        if (gamma >= 0) ctl.correction.gamma = gamma;
        ctl.fixed_step = fixed_step;
        return ctl;
    }
};

struct BenchArgs {
    std::string circuit;         // deck path, or empty when generating
    std::string gen_kind;        // generator name when circuit is empty
    GeneratorParams gen_params;
    std::string methods = "benr,er,erc";
    std::string nodes;           // recorded nodes (default: all)
    double t_stop = -1.0;
    double h_ref = -1.0;         // reference BENR step (default hint/100)
    std::string out_dir = "bench_out";
    bool parallel = false;
    bool with_standard_krylov = false;  // also try the standard-subspace MEVP
    CtlFlags ctl;
};

int run_bench(const BenchArgs& args);

}  // namespace exsim::cli
