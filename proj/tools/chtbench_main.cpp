// chtbench: constrained-optimization CHT benchmark driver.
//
// Subcommands: run (repeated trials + CSV/JSON results), verify (pairwise
// criterion vs. quantization sign), relax (overestimated-scale error bound),
// sortbench (sorting cost), sweep (xi sensitivity traces), list (problems).
// Exit codes: 0 success, 1 verification failure, 2 configuration error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chtbench/config.hpp"
#include "chtbench/harness.hpp"
#include "chtbench/io.hpp"
#include "chtbench/problem.hpp"

namespace {

using namespace chtbench;

std::string outcome_name(CompareOutcome o) {
    switch (o) {
        case CompareOutcome::Better: return "Better";
        case CompareOutcome::Worse: return "Worse";
        case CompareOutcome::Equivalent: return "Equivalent";
        case CompareOutcome::NoPreference: return "NoPreference";
    }
    return "?";
}

std::string default_out_dir() {
    if (const char* env = std::getenv("CHTBENCH_OUT"); env && *env) return env;
    return ".";
}

struct CliOverrides {
    std::string problem, cht, out, config_path, xover;
    int runs = 0, jobs = -1, np = 0;
    long max_fes = 0;
    std::uint64_t seed = 0;
    double xi_max = 0, xi_min = 0, p = 0, eps = 0, penalty_r = 0, sr_pf = 0, f = 0, cr = 0;
};

// flag > config file > environment > built-in default
RunConfig assemble_config(const CLI::App& cmd, const CliOverrides& o) {
    RunConfig cfg;
    cfg.out_dir = default_out_dir();
    if (cmd.count("--config")) {
        cfg = parse_run_config_text(read_file(o.config_path));
        if (!cmd.count("--out") && cfg.out_dir == ".") cfg.out_dir = default_out_dir();
    }
    if (cmd.count("--problem")) cfg.problem = o.problem;
    if (cmd.count("--cht")) {
        try {
            cfg.cht.kind = cht_kind_from_name(o.cht);
        } catch (const std::invalid_argument& e) {
            throw config_error(e.what());
        }
    }
    if (cmd.count("--runs")) cfg.runs = o.runs;
    if (cmd.count("--seed")) cfg.seed = o.seed;
    if (cmd.count("--jobs")) cfg.jobs = o.jobs;
    if (cmd.count("--out")) cfg.out_dir = o.out;
    if (cmd.count("--max-fes")) cfg.de.max_fes = o.max_fes;
    if (cmd.count("--np")) cfg.de.np = o.np;
    if (cmd.count("--f")) cfg.de.scale_factor = o.f;
    if (cmd.count("--cr")) cfg.de.crossover_rate = o.cr;
    if (cmd.count("--xover")) {
        if (o.xover == "bin") cfg.de.crossover = CrossoverKind::Binomial;
        else if (o.xover == "exp") cfg.de.crossover = CrossoverKind::Exponential;
        else throw config_error("xover must be 'bin' or 'exp'");
    }
    if (cmd.count("--xi-max")) cfg.cht.xi_max = o.xi_max;
    if (cmd.count("--xi-min")) cfg.cht.xi_min = o.xi_min;
    if (cmd.count("--p")) cfg.cht.p = o.p;
    if (cmd.count("--eps")) cfg.cht.eps = o.eps;
    if (cmd.count("--penalty-r")) cfg.cht.penalty_r = o.penalty_r;
    if (cmd.count("--sr-pf")) cfg.cht.sr_pf = o.sr_pf;
    if (cfg.runs <= 0) throw config_error("runs must be positive");
    try {
        cfg.de.validate();
        cfg.cht.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    return cfg;
}

void add_run_flags(CLI::App& cmd, CliOverrides& o) {
    cmd.add_option("--problem", o.problem, "problem name (see `list`)");
    cmd.add_option("--cht", o.cht, "qpc|frules|eps|penalty|sr");
    cmd.add_option("--runs", o.runs, "number of repeated runs");
    cmd.add_option("--max-fes", o.max_fes, "function-evaluation budget per run");
    cmd.add_option("--seed", o.seed, "base seed; run i uses seed+i");
    cmd.add_option("--jobs", o.jobs, "trial-level parallelism (0 = all cores)");
    cmd.add_option("--out", o.out, "output directory (env CHTBENCH_OUT as fallback)");
    cmd.add_option("--config", o.config_path, "run-config JSON; flags override it");
    cmd.add_option("--np", o.np, "DE population size");
    cmd.add_option("--f", o.f, "DE scale factor");
    cmd.add_option("--cr", o.cr, "DE crossover rate");
    cmd.add_option("--xover", o.xover, "bin|exp crossover");
    cmd.add_option("--xi-max", o.xi_max, "qpc schedule start value");
    cmd.add_option("--xi-min", o.xi_min, "qpc schedule end value");
    cmd.add_option("--p", o.p, "qpc schedule exponent");
    cmd.add_option("--eps", o.eps, "eps-level threshold");
    cmd.add_option("--penalty-r", o.penalty_r, "shared penalty coefficient");
    cmd.add_option("--sr-pf", o.sr_pf, "stochastic-ranking pf");
}

int cmd_run(const CLI::App& cmd, const CliOverrides& o) {
    const RunConfig cfg = assemble_config(cmd, o);
    const Cop* cop = nullptr;
    try {
        cop = &find_problem(cfg.problem);
    } catch (const std::out_of_range& e) {
        throw config_error(e.what());
    }
    const RunStats stats = run_trials(*cop, cfg);
    const std::filesystem::path dir(cfg.out_dir);
    atomic_write_file(dir / "results.csv", results_csv(stats, cfg.problem, cht_name(cfg.cht.kind)));
    atomic_write_file(dir / "aggregate.json", aggregate_json(stats));
    std::cout << aggregate_json(stats);
    return 0;
}

int cmd_verify(long pairs, std::uint64_t seed, double scale) {
    std::vector<const Cop*> problems;
    for (const char* name : {"g06", "g11", "g24", "ring5"})
        problems.push_back(&find_problem(name));
    const auto report = verify_sign_equivalence(problems, pairs, default_eta_grid(),
                                                default_xi_grid(), seed, scale);
    std::cout << "pairs per problem: " << report.pairs
              << "\ncomparisons: " << report.comparisons
              << "\nmismatches: " << report.mismatches << "\n";
    if (report.worst) {
        const auto& m = *report.worst;
        std::cerr << "mismatch on " << m.problem << " xi=" << m.xi << " scale=" << m.scale
                  << "\n  x1=(";
        for (double v : m.x1) std::cerr << format_double(v) << ' ';
        std::cerr << ") x2=(";
        for (double v : m.x2) std::cerr << format_double(v) << ' ';
        std::cerr << ")\n  y=" << format_double(m.y) << " z=" << format_double(m.z)
                  << " chi=" << m.chi << " lambda=" << m.lambda << " phi=" << m.phi
                  << "\n  pi1=" << format_double(m.pi1) << " pi2=" << format_double(m.pi2)
                  << " qualitative=" << outcome_name(m.qualitative) << "\n";
    }
    return report.ok() ? 0 : 1;
}

int cmd_relax(long points, double c, double xi, std::uint64_t seed) {
    const auto report = verify_relaxation(points, c, xi, seed);
    std::cout << "points: " << report.points << "\ndisagreements: " << report.disagreements
              << "\nempirical rate: " << format_double(report.empirical_rate)
              << "\nmu: " << format_double(report.mu)
              << "\nslack (3 sigma): " << format_double(report.slack)
              << "\noutside band: " << report.outside_band
              << "\nslopes: exact " << format_double(report.exact_slope) << ", relaxed "
              << format_double(report.relaxed_slope) << "\n";
    return report.ok() ? 0 : 1;
}

int cmd_sortbench(int repeats, std::uint64_t seed, const std::string& out_dir) {
    const auto table = sort_benchmark(default_sort_sizes(), repeats, seed);
    std::string csv = "size,eval_sort_time,pairwise_sort_time,eval_calls,compare_calls\n";
    for (const auto& row : table) {
        csv += std::to_string(row.size) + ',' + format_double(row.eval_seconds) + ',' +
               format_double(row.pairwise_seconds) + ',' + std::to_string(row.eval_calls) +
               ',' + std::to_string(row.compare_calls) + '\n';
    }
    atomic_write_file(std::filesystem::path(out_dir) / "sortbench.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_sweep(const CLI::App& cmd, const CliOverrides& o, const std::vector<double>& xi_values) {
    RunConfig cfg = assemble_config(cmd, o);
    // one run per xi unless the invocation says otherwise
    if (cmd.count("--runs") == 0 && cmd.count("--config") == 0) cfg.runs = 1;
    const Cop* cop = nullptr;
    try {
        cop = &find_problem(cfg.problem);
    } catch (const std::out_of_range& e) {
        throw config_error(e.what());
    }
    const auto traces = xi_sensitivity_sweep(*cop, xi_values, cfg);
    const std::filesystem::path dir(cfg.out_dir);
    for (const auto& t : traces) {
        const std::string name =
            "sweep_" + cfg.problem + "_xi" + format_double(t.xi) + "_run" +
            std::to_string(t.run_index) + ".csv";
        atomic_write_file(dir / name, trace_csv(t.trace));
    }
    std::cout << "wrote " << traces.size() << " trace files to " << dir.string() << "\n";
    return 0;
}

int cmd_list() {
    std::cout << "name dim ineq eq delta best_known_f\n";
    for (const Cop& c : registry()) {
        std::cout << c.name << ' ' << c.dimension << ' ' << c.inequality.size() << ' '
                  << c.equality.size() << ' ' << format_double(c.delta) << ' '
                  << (c.best_known_f ? format_double(*c.best_known_f) : std::string("-"))
                  << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"constraint-handling benchmark for box-bounded constrained optimization"};
    app.require_subcommand(1);

    CliOverrides run_o;
    auto* run_cmd = app.add_subcommand("run", "repeated optimization trials");
    add_run_flags(*run_cmd, run_o);

    long verify_pairs = 100000;
    std::uint64_t verify_seed = 20240501;
    double verify_scale = 1.0;
    auto* verify_cmd = app.add_subcommand("verify", "sign-equivalence oracle");
    verify_cmd->add_option("--pairs", verify_pairs, "pairs sampled per problem");
    verify_cmd->add_option("--seed", verify_seed, "sampling seed");
    verify_cmd->add_option("--scale", verify_scale, "ratio-preserving scale on the pi settings");

    long relax_points = 100000;
    double relax_c = 2.0, relax_xi = 1.0;
    std::uint64_t relax_seed = 20240502;
    auto* relax_cmd = app.add_subcommand("relax", "relaxed-scale error bound");
    relax_cmd->add_option("--points", relax_points, "(y, z) samples");
    relax_cmd->add_option("--c", relax_c, "ratio inflation factor (> 1)");
    relax_cmd->add_option("--xi", relax_xi, "xi value");
    relax_cmd->add_option("--seed", relax_seed, "sampling seed");

    int bench_repeats = 5;
    std::uint64_t bench_seed = 20240503;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("sortbench", "sorting-cost microbenchmark");
    bench_cmd->add_option("--repeats", bench_repeats, "timing repeats per size");
    bench_cmd->add_option("--seed", bench_seed, "population seed");
    bench_cmd->add_option("--out", bench_out, "output directory");

    CliOverrides sweep_o;
    std::vector<double> sweep_xi = {1.0, 0.1, 0.01, 0.001, 0.0001, 0.00001};
    auto* sweep_cmd = app.add_subcommand("sweep", "xi sensitivity traces");
    add_run_flags(*sweep_cmd, sweep_o);
    sweep_cmd->add_option("--xi", sweep_xi, "xi grid");

    auto* list_cmd = app.add_subcommand("list", "print the problem registry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(*run_cmd, run_o);
        if (verify_cmd->parsed()) return cmd_verify(verify_pairs, verify_seed, verify_scale);
        if (relax_cmd->parsed()) return cmd_relax(relax_points, relax_c, relax_xi, relax_seed);
        if (bench_cmd->parsed())
            return cmd_sortbench(bench_repeats, bench_seed,
                                 bench_out.empty() ? default_out_dir() : bench_out);
        if (sweep_cmd->parsed()) return cmd_sweep(*sweep_cmd, sweep_o, sweep_xi);
        if (list_cmd->parsed()) return cmd_list();
    } catch (const chtbench::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
