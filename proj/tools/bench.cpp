#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "json.hpp"

#include "common.hpp"
#include "exsim/errors.hpp"
#include "exsim/krylov.hpp"
#include "exsim/netlist.hpp"
#include "exsim/sparse_lu.hpp"

namespace exsim::cli {

namespace {

struct MethodOutcome {
    std::string name;
    bool ok = false;
    std::string failure;
    TransientResult result;
    CostSummary cost{};
    double wall = 0.0;
    double max_err = 0.0;
    double rms_err = 0.0;
};

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

/// Linear interpolation of the dense reference onto time t.
Vec interp_reference(const Waveform& ref, double t) {
    const auto& ts = ref.times;
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) return ref.samples.front();
    if (it == ts.end()) return ref.samples.back();
    const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    const std::size_t lo = hi - 1;
    const double f = (t - ts[lo]) / (ts[hi] - ts[lo]);
    Vec out(ref.samples[lo].size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ref.samples[lo][i] + f * (ref.samples[hi][i] - ref.samples[lo][i]);
    return out;
}

void waveform_errors(const Waveform& got, const Waveform& ref, double& max_err,
                     double& rms_err) {
    max_err = 0.0;
    double sq = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < got.times.size(); ++i) {
        Vec want = interp_reference(ref, got.times[i]);
        for (std::size_t c = 0; c < want.size(); ++c) {
            const double e = std::abs(got.samples[i][c] - want[c]);
            max_err = std::max(max_err, e);
            sq += e * e;
            ++count;
        }
    }
    rms_err = count ? std::sqrt(sq / static_cast<double>(count)) : 0.0;
}

}  // namespace

int run_bench(const BenchArgs& args) {
    NetlistDoc doc;
    std::string circuit_name;
    if (!args.circuit.empty()) {
        doc = parse_netlist(read_file(args.circuit));
        circuit_name = args.circuit;
    } else if (!args.gen_kind.empty()) {
        GeneratorParams p = args.gen_params;
        p.kind = generator_kind_from_name(args.gen_kind);
        doc = generate_circuit(p);
        circuit_name = "gen:" + args.gen_kind;
    } else {
        throw ContractError("bench needs --circuit or --gen");
    }
    MnaSystem sys = build_mna(doc);

    double t_stop = args.t_stop;
    if (t_stop <= 0) {
        if (!sys.tran) throw ContractError("bench needs --tstop or a .TRAN directive");
        t_stop = sys.tran->stop_time;
    }
    const double hint = sys.tran && sys.tran->step_hint > 0 ? sys.tran->step_hint
                                                            : t_stop / 100.0;
    double h_ref = args.h_ref > 0 ? args.h_ref : hint / 100.0;
    if (h_ref > hint / 10.0)
        throw ContractError("bench: reference step must be at most step hint / 10");

    const std::vector<std::string> nodes = split_names(args.nodes);
    std::filesystem::create_directories(args.out_dir);
    const std::filesystem::path out_dir(args.out_dir);

    // reference: BENR at a fixed tiny step
    StepControl ref_ctl = args.ctl.resolve(sys);
    ref_ctl.fixed_step = true;
    ref_ctl.h_init = h_ref;
    std::cerr << "bench: running BENR reference at h_ref=" << h_ref << "\n";
    TransientResult reference = transient(sys, Method::Benr, ref_ctl, t_stop, nodes);
    write_waveform_csv((out_dir / "reference.csv").string(), reference.waveform);

    std::vector<MethodOutcome> outcomes;
    for (const std::string& name : split_names(args.methods)) {
        MethodOutcome mo;
        mo.name = name;
        outcomes.push_back(std::move(mo));
    }

    auto run_one = [&](MethodOutcome& mo, bool timed) {
        try {
            const Method m = method_from_name(mo.name);
            StepControl ctl = args.ctl.resolve(sys);
            const auto t0 = std::chrono::steady_clock::now();
            TransientResult r = transient(sys, m, ctl, t_stop, nodes);
            const auto t1 = std::chrono::steady_clock::now();
            if (timed) mo.wall = std::chrono::duration<double>(t1 - t0).count();
            mo.result = std::move(r);
            mo.cost = cost_report(mo.result.records);
            waveform_errors(mo.result.waveform, reference.waveform, mo.max_err, mo.rms_err);
            mo.ok = true;
        } catch (const Error& e) {
            mo.ok = false;
            mo.failure = e.what();
        }
    };

    if (args.parallel) {
        // concurrent accuracy pass over the shared immutable system,
        // then a serial re-run for interference-free wall times
        std::vector<std::future<void>> futs;
        for (MethodOutcome& mo : outcomes)
            futs.push_back(std::async(std::launch::async, [&] { run_one(mo, false); }));
        for (auto& f : futs) f.get();
        for (MethodOutcome& mo : outcomes)
            if (mo.ok) run_one(mo, true);
    } else {
        for (MethodOutcome& mo : outcomes) run_one(mo, true);
    }

    double benr_wall = 0.0;
    for (const MethodOutcome& mo : outcomes)
        if (mo.ok && method_from_name(mo.name) == Method::Benr) benr_wall = mo.wall;

    // optional contrast: does the standard-subspace MEVP even start?
    std::string standard_status;
    if (args.with_standard_krylov) {
        try {
            Factorization cf = lu_factor(sys.C_lin);
            Vec v(static_cast<std::size_t>(sys.n), 1.0);
            MevpConfig cfg;
            cfg.eps = args.ctl.eps > 0 ? args.ctl.eps : 1e-7;
            mevp_standard(cf, sys.G_lin, v, cfg, hint);
            standard_status = "ok";
        } catch (const Error& e) {
            standard_status = std::string("FAILED(") + e.what() + ")";
        }
    }

    nlohmann::json jreport;
    jreport["circuit"] = circuit_name;
    jreport["unknowns"] = sys.n;
    jreport["nnz_c"] = sys.C_lin.nnz();
    jreport["nnz_g"] = sys.G_lin.nnz();
    jreport["t_stop"] = t_stop;
    jreport["h_ref"] = h_ref;
    jreport["reference_steps"] = static_cast<long>(reference.records.size());
    if (!standard_status.empty()) jreport["standard_krylov"] = standard_status;

    std::ofstream csv(out_dir / "report.csv");
    csv << "method,status,steps,nr_avg,m_avg,lu_total,rejects,wall_s,speedup,max_err,rms_err\n";
    std::ofstream txt(out_dir / "report.txt");
    txt << "circuit: " << circuit_name << "  n=" << sys.n << "  nnz(C)=" << sys.C_lin.nnz()
        << "  nnz(G)=" << sys.G_lin.nnz() << "\n";
    txt << "reference: BENR h=" << h_ref << " (" << reference.records.size() << " steps)\n\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-6s %-10s %8s %7s %7s %9s %8s %10s %8s %12s %12s\n",
                  "method", "status", "steps", "NR_a", "m_a", "LU", "rejects", "RT(s)", "SP",
                  "max_err", "rms_err");
    txt << line;

    nlohmann::json jrows = nlohmann::json::array();
    for (const MethodOutcome& mo : outcomes) {
        nlohmann::json row;
        row["method"] = mo.name;
        if (!mo.ok) {
            row["status"] = "FAILED(" + mo.failure + ")";
            csv << mo.name << ",FAILED(" << mo.failure << "),,,,,,,,,\n";
            std::snprintf(line, sizeof(line), "%-6s %-10s\n", mo.name.c_str(), "FAILED");
            txt << line << "    reason: " << mo.failure << "\n";
            jrows.push_back(row);
            continue;
        }
        const double speedup = benr_wall > 0 && mo.wall > 0 ? benr_wall / mo.wall : 0.0;
        row["status"] = "ok";
        row["steps"] = mo.cost.steps;
        row["nr_avg"] = mo.cost.nr_avg;
        row["m_avg"] = mo.cost.m_avg;
        row["lu_total"] = mo.cost.lu_total;
        row["rejects"] = mo.cost.rejects;
        row["wall_seconds"] = mo.wall;
        row["speedup_vs_benr"] = speedup;
        row["max_err"] = mo.max_err;
        row["rms_err"] = mo.rms_err;
        jrows.push_back(row);

        csv << mo.name << ",ok," << mo.cost.steps << "," << mo.cost.nr_avg << ","
            << mo.cost.m_avg << "," << mo.cost.lu_total << "," << mo.cost.rejects << ","
            << fmt17(mo.wall) << "," << fmt17(speedup) << "," << fmt17(mo.max_err) << ","
            << fmt17(mo.rms_err) << "\n";
        std::snprintf(line, sizeof(line),
                      "%-6s %-10s %8ld %7.2f %7.2f %9ld %8ld %10.4f %8.2f %12.3e %12.3e\n",
                      mo.name.c_str(), "ok", mo.cost.steps, mo.cost.nr_avg, mo.cost.m_avg,
                      mo.cost.lu_total, mo.cost.rejects, mo.wall, speedup, mo.max_err,
                      mo.rms_err);
        txt << line;

        std::string base = mo.name;
        for (char& c : base) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        write_waveform_csv((out_dir / (base + ".csv")).string(), mo.result.waveform);
        write_records_jsonl((out_dir / (base + "_records.jsonl")).string(), mo.result.records);
    }
    jreport["methods"] = jrows;
    std::ofstream jf(out_dir / "report.json");
    jf << jreport.dump(2) << "\n";
    std::cout << jreport.dump(2) << "\n";

    return kExitOk;
}

}  // namespace exsim::cli
