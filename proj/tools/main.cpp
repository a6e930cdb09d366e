#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "common.hpp"
#include "exsim/errors.hpp"
#include "exsim/netlist.hpp"
#include "exsim/sparse_lu.hpp"

namespace exsim::cli {

Method method_from_name(const std::string& name) {
    std::string up = name;
    for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (up == "BENR") return Method::Benr;
    if (up == "ER") return Method::Er;
    if (up == "ERC" || up == "ER-C") return Method::Erc;
    throw ContractError("unknown method '" + name + "'");
}

namespace {

std::vector<std::string> split_csv(const std::string& s) {
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

std::string floating_node_hint(const MnaSystem& sys) {
    if (sys.floating_nodes.empty()) return {};
    std::string msg = " (floating nodes with gmin=0:";
    for (const std::string& n : sys.floating_nodes) msg += " " + n;
    return msg + ")";
}

int cmd_simulate(const std::string& deck_path, const std::string& method_name,
                 const std::string& output, const std::string& summary_path,
                 const std::string& records_path, const std::string& nodes_csv,
                 double t_stop_flag, const std::string& trace_path, const CtlFlags& flags) {
    MnaSystem sys = build_mna(parse_netlist(read_file(deck_path)));
    const Method method = method_from_name(method_name);

    double t_stop = t_stop_flag;
    if (t_stop <= 0) {
        if (!sys.tran) throw ContractError("deck has no .TRAN directive and no --tstop");
        t_stop = sys.tran->stop_time;
    }
    StepControl ctl = flags.resolve(sys);

    std::ofstream trace;
    if (!trace_path.empty()) {
        trace.open(trace_path);
        trace << "j,h,residual,h_next\n";
        ctl.krylov_trace = &trace;
    }

    TransientResult result;
    double wall = 0.0;
    try {
        const auto wall0 = std::chrono::steady_clock::now();
        result = transient(sys, method, ctl, t_stop, split_csv(nodes_csv));
        wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    } catch (const SingularMatrixError& e) {
        std::cerr << "exsim: numerical failure: " << e.what() << floating_node_hint(sys)
                  << "\n";
        return kExitNumerical;
    }

    if (!output.empty()) write_waveform_csv(output, result.waveform);
    if (!records_path.empty()) write_records_jsonl(records_path, result.records);

    CostSummary cost = cost_report(result.records);
    nlohmann::json j{{"deck", deck_path},
                     {"method", method_name},
                     {"unknowns", sys.n},
                     {"nnz_c", sys.C_lin.nnz()},
                     {"nnz_g", sys.G_lin.nnz()},
                     {"t_stop", t_stop},
                     {"steps", cost.steps},
                     {"lu_total", cost.lu_total},
                     {"m_avg", cost.m_avg},
                     {"nr_avg", cost.nr_avg},
                     {"rejects", cost.rejects},
                     {"wall_seconds", wall}};
    if (!summary_path.empty()) {
        std::ofstream out(summary_path);
        out << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_gen(const std::string& kind, const GeneratorParams& base, const std::string& output) {
    GeneratorParams p = base;
    p.kind = generator_kind_from_name(kind);
    const std::string text = pretty_print(generate_circuit(p));
    if (output.empty() || output == "-") {
        std::cout << text;
    } else {
        std::ofstream out(output, std::ios::binary);
        if (!out) throw ContractError("cannot write '" + output + "'");
        out << text;
    }
    return kExitOk;
}

nlohmann::json fill_entry(const char* name, const SparseRealMatrix& m) {
    nlohmann::json j{{"name", name}, {"nnz", m.nnz()}};
    try {
        Factorization f = lu_factor(m);
        j["fill_nnz"] = f.fill_nnz();
    } catch (const SingularMatrixError&) {
        j["fill_nnz"] = "singular";
    }
    return j;
}

int cmd_matstats(const std::string& deck_path, double h, const std::string& json_path,
                 const std::string& dump_dir) {
    MnaSystem sys = build_mna(parse_netlist(read_file(deck_path)));
    if (h <= 0) {
        if (!sys.tran || sys.tran->step_hint <= 0)
            throw ContractError("matstats needs --h or a .TRAN step hint");
        h = sys.tran->step_hint;
    }
    SparseRealMatrix j_be = combine(1.0 / h, sys.C_lin, 1.0, sys.G_lin);

    nlohmann::json out;
    out["deck"] = deck_path;
    out["h"] = h;
    out["unknowns"] = sys.n;
    out["matrices"] = nlohmann::json::array(
        {fill_entry("C", sys.C_lin), fill_entry("G", sys.G_lin), fill_entry("C/h+G", j_be)});
    if (!sys.floating_nodes.empty()) out["floating_nodes"] = sys.floating_nodes;

    if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        auto dump = [&](const char* name, const SparseRealMatrix& m) {
            std::ofstream os(std::filesystem::path(dump_dir) / (std::string(name) + ".mtx"));
            write_matrix_market(os, m);
        };
        dump("C", sys.C_lin);
        dump("G", sys.G_lin);
        dump("J_be", j_be);
    }

    if (!json_path.empty()) {
        std::ofstream os(json_path);
        os << out.dump(2) << "\n";
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

void add_ctl_flags(CLI::App* cmd, CtlFlags& flags) {
    cmd->add_option("--eps", flags.eps, "Krylov residual tolerance");
    cmd->add_option("--errbudget", flags.err_budget, "transient error budget (inf-norm)");
    cmd->add_option("--hmin", flags.hmin, "minimum step size");
    cmd->add_option("--hmax", flags.hmax, "maximum step size");
    cmd->add_option("--mmax", flags.m_max, "Krylov dimension cap");
    cmd->add_option("--hinit", flags.h_init, "initial step size");
    cmd->add_flag("--fixed-step", flags.fixed_step, "disable error control and growth");
    cmd->add_option("--gamma", flags.gamma, "ER-C correction coefficient");
}

}  // namespace
}  // namespace exsim::cli

int main(int argc, char** argv) {
    using namespace exsim;
    using namespace exsim::cli;

    CLI::App app{"exponential-integrator circuit simulator"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run a transient simulation");
    std::string deck, method = "er", output, summary, records, nodes, trace;
    double t_stop = -1.0;
    CtlFlags sim_flags;
    sim->add_option("deck", deck, "netlist file")->required();
    sim->add_option("--method", method, "BENR | ER | ERC");
    sim->add_option("--output,-o", output, "waveform CSV path");
    sim->add_option("--summary", summary, "run summary JSON path");
    sim->add_option("--records", records, "per-step records JSONL path");
    sim->add_option("--nodes", nodes, "comma-separated node names to record");
    sim->add_option("--tstop", t_stop, "stop time (defaults to .TRAN)");
    sim->add_option("--trace-krylov", trace, "per-iteration Krylov CSV path");
    add_ctl_flags(sim, sim_flags);

    auto* gen = app.add_subcommand("gen", "generate a benchmark deck");
    std::string kind, gen_out;
    GeneratorParams gp;
    gen->add_option("kind", kind, "RC_LADDER | INVERTER_CHAIN | COUPLED_MESH")->required();
    gen->add_option("--stages", gp.stages, "stage count");
    gen->add_option("--coupling-density", gp.coupling_density, "fraction of coupled pairs");
    gen->add_option("--cap-fill", gp.cap_fill, "fraction of nodes with ground caps");
    gen->add_option("--seed", gp.seed, "RNG seed");
    gen->add_option("--output,-o", gen_out, "deck path (default stdout)");
    gen->add_option("--rmin", gp.r_min);
    gen->add_option("--rmax", gp.r_max);
    gen->add_option("--cmin", gp.c_min);
    gen->add_option("--cmax", gp.c_max);
    gen->add_option("--ccmin", gp.cc_min);
    gen->add_option("--ccmax", gp.cc_max);

    auto* mat = app.add_subcommand("matstats", "sparsity and LU fill statistics");
    std::string mat_deck, mat_json, dump_dir;
    double mat_h = -1.0;
    mat->add_option("deck", mat_deck, "netlist file")->required();
    mat->add_option("--step", mat_h, "step size h for C/h + G");
    mat->add_option("--json", mat_json, "JSON output path");
    mat->add_option("--dump-dir", dump_dir, "Matrix Market dump directory");

    auto* bench = app.add_subcommand("bench", "method comparison harness");
    BenchArgs bargs;
    bench->add_option("--circuit", bargs.circuit, "netlist file");
    bench->add_option("--gen", bargs.gen_kind, "generator kind instead of a deck");
    bench->add_option("--stages", bargs.gen_params.stages, "generator stage count");
    bench->add_option("--coupling-density", bargs.gen_params.coupling_density);
    bench->add_option("--cap-fill", bargs.gen_params.cap_fill);
    bench->add_option("--seed", bargs.gen_params.seed);
    bench->add_option("--methods", bargs.methods, "comma list from benr,er,erc");
    bench->add_option("--nodes", bargs.nodes, "recorded nodes");
    bench->add_option("--tstop", bargs.t_stop, "stop time");
    bench->add_option("--href", bargs.h_ref, "reference BENR step size");
    bench->add_option("--out-dir", bargs.out_dir, "report directory");
    bench->add_flag("--parallel", bargs.parallel, "run the accuracy pass concurrently");
    bench->add_flag("--with-standard-krylov", bargs.with_standard_krylov,
                    "also attempt the standard-subspace MEVP on this circuit");
    add_ctl_flags(bench, bargs.ctl);

    try {
        app.parse(argc, argv);
        if (sim->parsed())
            return cmd_simulate(deck, method, output, summary, records, nodes, t_stop, trace,
                                sim_flags);
        if (gen->parsed()) return cmd_gen(kind, gp, gen_out);
        if (mat->parsed()) return cmd_matstats(mat_deck, mat_h, mat_json, dump_dir);
        if (bench->parsed()) return run_bench(bargs);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ParseError& e) {
        std::cerr << "exsim: parse error at line " << e.line() << ": " << e.what() << "\n";
        return kExitInput;
    } catch (const ContractError& e) {
        std::cerr << "exsim: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "exsim: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
