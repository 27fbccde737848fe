#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chtbench/cht.hpp"
#include "chtbench/config.hpp"
#include "chtbench/de.hpp"
#include "chtbench/io.hpp"
#include "chtbench/problem.hpp"

namespace chtbench {

// ---------------------------------------------------------------------------
// Repeated-trial statistics
// ---------------------------------------------------------------------------

struct RunRecord {
    int run_index = 0;
    std::uint64_t seed = 0;
    double best_f = 0.0;
    double best_viol = 0.0;
    bool feasible = false;
    bool success = false;
    std::optional<long> min_fes;
};

/// Aggregates over repeated runs. The five objective indicators follow the
/// inclusion rule: all runs when FR is 0 or 1, feasible runs only in between.
struct RunStats {
    std::vector<RunRecord> records;
    double fr = 0.0;
    std::optional<double> sr; // absent when the problem has no best-known f
    double best = 0.0;
    double median = 0.0;
    double worst = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    std::optional<double> min_fes_mean;
    std::optional<double> min_fes_median;

    static RunStats from_records(std::vector<RunRecord> records, bool has_best_known) {
        if (records.empty()) throw std::invalid_argument("no run records");
        RunStats s;
        s.records = std::move(records);
        const auto n = static_cast<double>(s.records.size());

        int feasible = 0, successes = 0;
        for (const auto& r : s.records) {
            feasible += r.feasible ? 1 : 0;
            successes += r.success ? 1 : 0;
        }
        s.fr = feasible / n;
        if (has_best_known) s.sr = successes / n;

        std::vector<double> fs;
        for (const auto& r : s.records)
            if (s.fr == 0.0 || s.fr == 1.0 || r.feasible) fs.push_back(r.best_f);
        std::sort(fs.begin(), fs.end());
        s.best = fs.front();
        s.worst = fs.back();
        const std::size_t m = fs.size();
        s.median = m % 2 == 1 ? fs[m / 2] : 0.5 * (fs[m / 2 - 1] + fs[m / 2]);
        s.mean = std::accumulate(fs.begin(), fs.end(), 0.0) / static_cast<double>(m);
        double ss = 0.0;
        for (double v : fs) ss += (v - s.mean) * (v - s.mean);
        s.stddev = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;

        std::vector<double> fes;
        for (const auto& r : s.records)
            if (r.min_fes) fes.push_back(static_cast<double>(*r.min_fes));
        if (!fes.empty()) {
            std::sort(fes.begin(), fes.end());
            s.min_fes_mean =
                std::accumulate(fes.begin(), fes.end(), 0.0) / static_cast<double>(fes.size());
            const std::size_t q = fes.size();
            s.min_fes_median = q % 2 == 1 ? fes[q / 2] : 0.5 * (fes[q / 2 - 1] + fes[q / 2]);
        }
        return s;
    }
};

namespace detail {

/// Index-parallel map. Worker count 0 means available parallelism; results
/// must be written by index so the outcome is order-independent.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::clamp(jobs, 1, std::max(1, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                if (failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

} // namespace detail

/// n independent runs with seeds seed+0 ... seed+n-1, fanned out across
/// workers and folded back in seed order.
inline std::vector<RunResult> run_trials_raw(const Cop& cop, const RunConfig& cfg) {
    std::vector<RunResult> results(cfg.runs);
    detail::parallel_for(cfg.runs, cfg.jobs, [&](int i) {
        DeParams de = cfg.de;
        de.seed = cfg.seed + static_cast<std::uint64_t>(i);
        results[i] = run(cop, de, cfg.cht);
    });
    return results;
}

inline RunStats stats_from_results(const Cop& cop, const RunConfig& cfg,
                                   const std::vector<RunResult>& results) {
    std::vector<RunRecord> records(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        records[i] = RunRecord{static_cast<int>(i),
                               cfg.seed + i,
                               results[i].best.f,
                               results[i].best.viol,
                               results[i].feasible,
                               results[i].success,
                               results[i].min_fes};
    }
    return RunStats::from_records(std::move(records), cop.best_known_f.has_value());
}

inline RunStats run_trials(const Cop& cop, const RunConfig& cfg) {
    return stats_from_results(cop, cfg, run_trials_raw(cop, cfg));
}

// ---------------------------------------------------------------------------
// Sign-equivalence oracle
// ---------------------------------------------------------------------------

struct SignMismatch {
    std::string problem;
    Vec x1, x2;
    std::vector<double> etas;
    double xi = 0.0;
    double scale = 1.0;
    double y = 0.0, z = 0.0;
    int chi = 0, lambda = 0, phi = 0;
    double pi1 = 0.0, pi2 = 0.0;
    CompareOutcome qualitative = CompareOutcome::NoPreference;
};

struct SignEquivalenceReport {
    long pairs = 0;        // pairs sampled per problem
    long comparisons = 0;  // total (pair, context) checks
    long mismatches = 0;
    std::optional<SignMismatch> worst; // largest |pi1 - pi2| among mismatches

    bool ok() const { return mismatches == 0; }
};

/// Checks that the sign of pi differences reproduces the qualitative
/// criterion on uniformly sampled in-box pairs, with exact scales taken from
/// the sample itself. `pi_scale` multiplies both setting values fed to pi
/// (ratio preserved); the qualitative reference always uses the unscaled
/// context.
inline SignEquivalenceReport verify_sign_equivalence(
    const std::vector<const Cop*>& problems, long n_pairs,
    const std::vector<std::vector<double>>& eta_lists, const std::vector<double>& xi_values,
    std::uint64_t seed, double pi_scale = 1.0) {
    SignEquivalenceReport report;
    report.pairs = n_pairs;
    double worst_gap = -1.0;

    for (std::size_t pi_idx = 0; pi_idx < problems.size(); ++pi_idx) {
        const Cop& cop = *problems[pi_idx];
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (pi_idx + 1));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::vector<Evaluated> points;
        points.reserve(2 * n_pairs);
        for (long i = 0; i < 2 * n_pairs; ++i) {
            Vec x(cop.dimension);
            for (int j = 0; j < cop.dimension; ++j)
                x[j] = cop.lower[j] + unit(rng) * (cop.upper[j] - cop.lower[j]);
            points.push_back(evaluate(cop, x));
        }

        // exact scales over the sampled set
        double f_lo = 0.0, f_hi = 0.0, v_hi = 0.0;
        if (!points.empty()) {
            f_lo = f_hi = points[0].f;
            for (const auto& e : points) {
                f_lo = std::min(f_lo, e.f);
                f_hi = std::max(f_hi, e.f);
                v_hi = std::max(v_hi, e.viol);
            }
        }
        const double f_range = f_hi > f_lo ? f_hi - f_lo : 1.0;
        const double g_max = v_hi > 0.0 ? v_hi : 1.0;

        for (const auto& etas : eta_lists) {
            for (double xi : xi_values) {
                const QpcContext exact{f_range, g_max, xi, etas};
                exact.validate();
                const QpcContext setting{pi_scale * f_range, pi_scale * g_max, xi, etas};
                const QpcComparator qualitative(exact);
                for (long i = 0; i < n_pairs; ++i) {
                    const Evaluated& a = points[2 * i];
                    const Evaluated& b = points[2 * i + 1];
                    const CompareOutcome out = qualitative(a, b);
                    const double pi1 = qpc_pi(a, setting);
                    const double pi2 = qpc_pi(b, setting);
                    const double d = pi1 - pi2;
                    const double tol = 1e-9 * (1.0 + std::abs(pi1) + std::abs(pi2));
                    const CompareOutcome quant = d > tol    ? CompareOutcome::Better
                                                 : d < -tol ? CompareOutcome::Worse
                                                            : CompareOutcome::Equivalent;
                    ++report.comparisons;
                    if (out != quant) {
                        ++report.mismatches;
                        if (std::abs(d) > worst_gap) {
                            worst_gap = std::abs(d);
                            const auto [y, z] = diff_pair(a, b, exact);
                            const int chi = rank_of(y_division(exact), y);
                            const int lambda = rank_of(z_division(exact), z);
                            report.worst = SignMismatch{cop.name, a.x,    b.x, etas,
                                                        xi,       pi_scale, y,  z,
                                                        chi,      lambda, chi + lambda,
                                                        pi1,      pi2,    out};
                        }
                    }
                }
            }
        }
    }
    return report;
}

/// The context grid the sign-equivalence check runs over: one-threshold divisions at three
/// eta levels plus the two-threshold case, each at three xi levels.
inline std::vector<std::vector<double>> default_eta_grid() {
    return {{0.25}, {0.5}, {0.75}, {0.3, 0.6}};
}
inline std::vector<double> default_xi_grid() { return {1.0, 0.5, 0.1}; }

// ---------------------------------------------------------------------------
// Relaxation (overestimated scale) oracle
// ---------------------------------------------------------------------------

struct RelaxationReport {
    long points = 0;
    long disagreements = 0;
    long outside_band = 0; // disagreements not strictly between the two lines
    double empirical_rate = 0.0;
    double mu = 0.0;
    double slack = 0.0; // three binomial standard errors
    double exact_slope = 0.0;
    double relaxed_slope = 0.0;

    bool ok() const { return outside_band == 0 && empirical_rate <= mu + slack; }
};

/// Synthetic-pair mode: samples (y, z) uniformly over the mapped rectangle,
/// infers the feasibility class from the z band, and compares the exact-scale
/// criterion against the sign of pi computed with f_hat = c * f_range. Every
/// disagreement must land strictly between the exact and relaxed lines, at a
/// rate within mu plus statistical slack.
inline RelaxationReport verify_relaxation(long n_points, double c, double xi,
                                          std::uint64_t seed, double f_range = 1.0,
                                          double g_max = 1.0,
                                          const std::vector<double>& etas = {0.5}) {
    if (!(c > 1.0)) throw std::invalid_argument("ratio inflation c must exceed 1");
    const QpcContext exact{f_range, g_max, xi, etas};
    exact.validate();
    const QpcComparator qualitative(exact);

    const double f_hat = c * f_range;
    const double g_hat = g_max;

    RelaxationReport report;
    report.points = n_points;
    report.exact_slope = line_slope(exact);
    report.relaxed_slope = relaxed_line_slope(QpcContext{f_hat, g_hat, xi, etas});
    report.mu = error_rate_mu(f_range, g_max, f_hat, g_hat, xi);
    report.slack =
        3.0 * std::sqrt(report.mu * (1.0 - report.mu) / static_cast<double>(n_points));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uy(-f_range, f_range);
    std::uniform_real_distribution<double> uz(-2.0 * g_max, 2.0 * g_max);

    for (long i = 0; i < n_points; ++i) {
        const double y = uy(rng);
        const double z = uz(rng);
        const CompareOutcome out = qualitative.compare_yz(y, z);

        // z band fixes the indicator difference I(rho2>0) - I(rho1>0)
        const double ind = z < -g_max ? 1.0 : z > g_max ? -1.0 : 0.0;
        const double d = -y + ind * f_hat - f_hat / (xi * g_hat) * z;
        const CompareOutcome quant = d > 0.0   ? CompareOutcome::Better
                                     : d < 0.0 ? CompareOutcome::Worse
                                               : CompareOutcome::Equivalent;
        if (out != quant) {
            ++report.disagreements;
            const bool between =
                (z + report.exact_slope * y) * (z + report.relaxed_slope * y) < 0.0;
            if (!between) ++report.outside_band;
        }
    }
    report.empirical_rate =
        static_cast<double>(report.disagreements) / static_cast<double>(n_points);
    return report;
}

// ---------------------------------------------------------------------------
// Sorting-cost microbenchmark
// ---------------------------------------------------------------------------

struct SortBenchRow {
    int size = 0;
    double eval_seconds = 0.0;
    double pairwise_seconds = 0.0;
    long eval_calls = 0;
    long compare_calls = 0;
};

/// Evaluation-based sorting (one pi per element, then sort by key) against
/// comparator-driven sorting, with call counts and wall times per size.
/// Counts are exact; times are whatever the hardware gives.
inline std::vector<SortBenchRow> sort_benchmark(const std::vector<int>& sizes, int repeats,
                                                std::uint64_t seed) {
    if (repeats <= 0) throw std::invalid_argument("repeats must be positive");
    const Cop& cop = find_problem("g24");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    using clock = std::chrono::steady_clock;

    std::vector<SortBenchRow> table;
    table.reserve(sizes.size());
    for (int l : sizes) {
        if (l < 2 || l > 100000)
            throw std::invalid_argument("sort sizes must lie in [2, 100000]");
        std::vector<Evaluated> pop;
        pop.reserve(l);
        for (int i = 0; i < l; ++i) {
            Vec x(cop.dimension);
            for (int j = 0; j < cop.dimension; ++j)
                x[j] = cop.lower[j] + unit(rng) * (cop.upper[j] - cop.lower[j]);
            pop.push_back(evaluate(cop, x));
        }

        double f_lo = pop[0].f, f_hi = pop[0].f, v_hi = 0.0;
        for (const auto& e : pop) {
            f_lo = std::min(f_lo, e.f);
            f_hi = std::max(f_hi, e.f);
            v_hi = std::max(v_hi, e.viol);
        }
        const QpcContext ctx{f_hi > f_lo ? f_hi - f_lo : 1.0, v_hi > 0.0 ? v_hi : 1.0, 1.0, {0.5}};

        SortBenchRow row;
        row.size = l;

        // evaluation-based: larger pi first
        {
            std::vector<int> order(l);
            std::vector<double> keys(l);
            const auto start = clock::now();
            for (int rep = 0; rep < repeats; ++rep) {
                std::iota(order.begin(), order.end(), 0);
                long calls = 0;
                for (int i = 0; i < l; ++i) {
                    keys[i] = qpc_pi(pop[i], ctx);
                    ++calls;
                }
                std::stable_sort(order.begin(), order.end(),
                                 [&](int a, int b) { return keys[a] > keys[b]; });
                row.eval_calls = calls;
            }
            row.eval_seconds =
                std::chrono::duration<double>(clock::now() - start).count() / repeats;
        }

        // pairwise: comparator-driven stable sort, best first
        {
            std::vector<int> order(l);
            const auto start = clock::now();
            for (int rep = 0; rep < repeats; ++rep) {
                std::iota(order.begin(), order.end(), 0);
                long calls = 0;
                std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                    ++calls;
                    return feasibility_rules_compare(pop[a], pop[b]) == CompareOutcome::Better;
                });
                row.compare_calls = calls;
            }
            row.pairwise_seconds =
                std::chrono::duration<double>(clock::now() - start).count() / repeats;
        }

        table.push_back(row);
    }
    return table;
}

inline std::vector<int> default_sort_sizes() {
    std::vector<int> sizes;
    for (int l = 10; l <= 200; l += 10) sizes.push_back(l);
    return sizes;
}

// ---------------------------------------------------------------------------
// xi sensitivity sweep
// ---------------------------------------------------------------------------

struct SweepTrace {
    double xi = 0.0;
    int run_index = 0;
    std::vector<TraceRow> trace;
};

/// Repeats the run per xi setting (xi_max = value, everything else from the
/// base config) and hands back the convergence traces for plotting.
inline std::vector<SweepTrace> xi_sensitivity_sweep(const Cop& cop,
                                                    const std::vector<double>& xi_values,
                                                    const RunConfig& base) {
    std::vector<SweepTrace> traces;
    for (double xi : xi_values) {
        if (!(xi > 0.0)) throw std::invalid_argument("xi values must be positive");
        RunConfig cfg = base;
        cfg.cht.kind = ChtKind::Qpc;
        cfg.cht.xi_max = xi;
        if (cfg.cht.xi_min >= xi) cfg.cht.xi_min = 0.0;
        const auto results = run_trials_raw(cop, cfg);
        for (std::size_t i = 0; i < results.size(); ++i)
            traces.push_back(SweepTrace{xi, static_cast<int>(i), results[i].trace});
    }
    return traces;
}

// ---------------------------------------------------------------------------
// Result serialization
// ---------------------------------------------------------------------------

inline std::string results_csv(const RunStats& stats, const std::string& problem,
                               const std::string& cht) {
    std::string out = "problem,cht,run_index,seed,best_f,best_viol,feasible,success,min_fes\n";
    for (const auto& r : stats.records) {
        out += problem + ',' + cht + ',' + std::to_string(r.run_index) + ',' +
               std::to_string(r.seed) + ',' + format_double(r.best_f) + ',' +
               format_double(r.best_viol) + ',' + (r.feasible ? "1" : "0") + ',' +
               (r.success ? "1" : "0") + ',' +
               (r.min_fes ? std::to_string(*r.min_fes) : std::string{}) + '\n';
    }
    return out;
}

inline std::string aggregate_json(const RunStats& stats) {
    nlohmann::json j;
    j["fr"] = stats.fr;
    j["sr"] = stats.sr ? nlohmann::json(*stats.sr) : nlohmann::json(nullptr);
    j["best"] = stats.best;
    j["median"] = stats.median;
    j["worst"] = stats.worst;
    j["mean"] = stats.mean;
    j["std"] = stats.stddev;
    j["min_fes_mean"] =
        stats.min_fes_mean ? nlohmann::json(*stats.min_fes_mean) : nlohmann::json(nullptr);
    return j.dump(2) + "\n";
}

inline std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = "fes,best_f,best_viol\n";
    for (const auto& row : trace) {
        out += std::to_string(row.fes) + ',' +
               (row.best_feasible_f ? format_double(*row.best_feasible_f) : std::string{}) +
               ',' + format_double(row.best_viol) + '\n';
    }
    return out;
}

} // namespace chtbench
