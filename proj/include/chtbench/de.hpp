#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chtbench/cht.hpp"
#include "chtbench/mapping.hpp"
#include "chtbench/problem.hpp"

namespace chtbench {

enum class CrossoverKind { Binomial, Exponential };

struct DeParams {
    int np = 40;
    double scale_factor = 0.7;  // F
    double crossover_rate = 0.9; // CR
    CrossoverKind crossover = CrossoverKind::Exponential;
    long max_fes = 50000;
    std::uint64_t seed = 1;

    void validate() const {
        if (np < 4) throw std::invalid_argument("np must be at least 4 for rand/1 mutation");
        if (!(scale_factor > 0.0) || scale_factor >= 2.0)
            throw std::invalid_argument("scale factor must lie in (0, 2)");
        if (crossover_rate < 0.0 || crossover_rate > 1.0)
            throw std::invalid_argument("crossover rate must lie in [0, 1]");
        if (max_fes < np) throw std::invalid_argument("max_fes must cover initialization");
    }
};

enum class ChtKind { Qpc, FeasibilityRules, EpsLevel, Penalty, StochasticRanking };

/// Selection-policy configuration; only the fields of the chosen kind matter.
struct ChtParams {
    ChtKind kind = ChtKind::Qpc;
    double xi_max = 1.0;
    double xi_min = 0.0;
    double p = 5.0;
    double eps = 0.0;       // static eps level
    double penalty_r = 1.0; // shared coefficient, broadcast to every constraint
    double sr_pf = 0.45;    // sub-0.5 keeps violation dominant

    void validate() const {
        switch (kind) {
            case ChtKind::Qpc: {
                if (!(xi_max > 0.0) || xi_max > 1.0)
                    throw std::invalid_argument("xi_max must lie in (0, 1]");
                if (xi_min < 0.0 || xi_min >= xi_max)
                    throw std::invalid_argument("xi_min must lie in [0, xi_max)");
                if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
                break;
            }
            case ChtKind::EpsLevel:
                if (eps < 0.0) throw std::invalid_argument("eps must be nonnegative");
                break;
            case ChtKind::Penalty:
                if (penalty_r < 0.0)
                    throw std::invalid_argument("penalty_r must be nonnegative");
                break;
            case ChtKind::StochasticRanking:
                if (sr_pf < 0.0 || sr_pf > 1.0)
                    throw std::invalid_argument("sr_pf must lie in [0, 1]");
                break;
            default: break;
        }
    }
};

inline std::string cht_name(ChtKind k) {
    switch (k) {
        case ChtKind::Qpc: return "qpc";
        case ChtKind::FeasibilityRules: return "frules";
        case ChtKind::EpsLevel: return "eps";
        case ChtKind::Penalty: return "penalty";
        case ChtKind::StochasticRanking: return "sr";
    }
    return "?";
}

inline ChtKind cht_kind_from_name(const std::string& name) {
    if (name == "qpc") return ChtKind::Qpc;
    if (name == "frules") return ChtKind::FeasibilityRules;
    if (name == "eps") return ChtKind::EpsLevel;
    if (name == "penalty") return ChtKind::Penalty;
    if (name == "sr") return ChtKind::StochasticRanking;
    throw std::invalid_argument("unknown cht: " + name);
}

/// Running extrema over every evaluation of a run, with a snapshot frozen at
/// each generation start so that all comparisons within one generation use a
/// single (f_range, g_max) pair. Degenerate spreads snapshot to a sentinel 1.
struct ScaleTracker {
    double f_min_seen = std::numeric_limits<double>::infinity();
    double f_max_seen = -std::numeric_limits<double>::infinity();
    double viol_max_seen = 0.0;
    double snap_f_range = 1.0;
    double snap_g_max = 1.0;

    void observe(const Evaluated& e) {
        f_min_seen = std::min(f_min_seen, e.f);
        f_max_seen = std::max(f_max_seen, e.f);
        viol_max_seen = std::max(viol_max_seen, e.viol);
    }

    void freeze_snapshot() {
        snap_f_range = f_max_seen > f_min_seen ? f_max_seen - f_min_seen : 1.0;
        snap_g_max = viol_max_seen > 0.0 ? viol_max_seen : 1.0;
    }
};

// ---------------------------------------------------------------------------
// Variation operators
// ---------------------------------------------------------------------------

/// rand/1 mutant v = x_r1 + F (x_r2 - x_r3) with r1, r2, r3 distinct and
/// different from the target. Out-of-box coordinates are repaired by the
/// midpoint between the target coordinate and the violated bound.
template <typename Rng>
Vec mutate_rand1(const std::vector<Vec>& pop, int target_idx, double scale_factor,
                 const Vec& lower, const Vec& upper, Rng& rng) {
    const int np = static_cast<int>(pop.size());
    if (np < 4) throw std::invalid_argument("rand/1 needs a population of at least 4");
    std::uniform_int_distribution<int> pick(0, np - 1);
    int r1, r2, r3;
    do { r1 = pick(rng); } while (r1 == target_idx);
    do { r2 = pick(rng); } while (r2 == target_idx || r2 == r1);
    do { r3 = pick(rng); } while (r3 == target_idx || r3 == r2 || r3 == r1);

    const Vec& target = pop[static_cast<std::size_t>(target_idx)];
    Vec v(target.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = pop[r1][j] + scale_factor * (pop[r2][j] - pop[r3][j]);
        if (v[j] < lower[j]) v[j] = 0.5 * (target[j] + lower[j]);
        else if (v[j] > upper[j]) v[j] = 0.5 * (target[j] + upper[j]);
    }
    return v;
}

/// Binomial: every coordinate crosses with probability CR plus one forced
/// index. Exponential: a contiguous circular block from a random start,
/// extended while u < CR.
template <typename Rng>
Vec crossover(const Vec& target, const Vec& mutant, double crossover_rate, CrossoverKind kind,
              Rng& rng) {
    if (target.size() != mutant.size())
        throw std::invalid_argument("crossover requires equal-length vectors");
    const int k = static_cast<int>(target.size());
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec trial = target;
    if (kind == CrossoverKind::Binomial) {
        const int forced = pick(rng);
        for (int j = 0; j < k; ++j)
            if (unit(rng) < crossover_rate || j == forced) trial[j] = mutant[j];
    } else {
        int n = pick(rng);
        int len = 0;
        do {
            trial[n] = mutant[n];
            n = (n + 1) % k;
            ++len;
        } while (len < k && unit(rng) < crossover_rate);
    }
    return trial;
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

template <typename P>
concept PairwiseComparator = requires(const P& p, const Evaluated& e) {
    { p(e, e) } -> std::convertible_to<CompareOutcome>;
};

template <typename P>
concept FitnessEvaluator = requires(const P& p, const Evaluated& e) {
    { p(e) } -> std::convertible_to<double>;
};

/// Comparator mode: the trial replaces the incumbent on Better or Equivalent;
/// NoPreference keeps the incumbent.
template <PairwiseComparator Cmp>
Evaluated select(const Evaluated& incumbent, const Evaluated& trial, const Cmp& compare) {
    const CompareOutcome o = compare(trial, incumbent);
    return (o == CompareOutcome::Better || o == CompareOutcome::Equivalent) ? trial : incumbent;
}

/// Evaluator mode: the trial replaces the incumbent unless strictly worse,
/// mirroring standard DE's <= acceptance so plateaus stay traversable.
template <FitnessEvaluator Ev>
Evaluated select(const Evaluated& incumbent, const Evaluated& trial, const Ev& fitness) {
    return fitness(trial) >= fitness(incumbent) ? trial : incumbent;
}

// ---------------------------------------------------------------------------
// Run loop
// ---------------------------------------------------------------------------

struct TraceRow {
    long fes = 0;
    std::optional<double> best_feasible_f; // empty until a feasible point is seen
    double best_viol = 0.0;                // violation of the best-so-far solution
};

struct RunResult {
    Evaluated best;               // best-so-far under the feasibility rules
    std::vector<TraceRow> trace;  // one row per generation, initialization included
    long fes = 0;
    std::optional<long> min_fes;  // first FES at which success held
    bool feasible = false;
    bool success = false;
};

inline constexpr double success_tolerance = 1e-4; // f - f* <= tol with viol = 0

namespace detail {

// best-so-far ordering: feasibility first, then f among feasible,
// then violation among infeasible
inline bool improves_best(const Evaluated& cand, const Evaluated& best) {
    const CompareOutcome o = feasibility_rules_compare(cand, best);
    return o == CompareOutcome::Better;
}

} // namespace detail

/// One budgeted DE run. Deterministic: (problem, params, cht, seed) fully
/// determine the trace. The FES counter equals the number of evaluate calls
/// and never exceeds max_fes.
inline RunResult run(const Cop& cop, const DeParams& de, const ChtParams& cht) {
    de.validate();
    cht.validate();
    std::mt19937_64 rng(de.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int k = cop.dimension;
    const int t_max = static_cast<int>(de.max_fes / de.np);
    const XiSchedule schedule{cht.xi_max, cht.xi_min, cht.p, t_max};

    RunResult result;
    long fes = 0;
    std::optional<long> min_fes;

    auto note = [&](const Evaluated& e) {
        ++fes;
        if (!min_fes && is_feasible(e) && cop.best_known_f &&
            e.f - *cop.best_known_f <= success_tolerance)
            min_fes = fes;
    };

    // initialization: NP uniform points in the box
    std::vector<Evaluated> pop;
    pop.reserve(de.np);
    ScaleTracker tracker;
    for (int i = 0; i < de.np; ++i) {
        Vec x(k);
        for (int j = 0; j < k; ++j)
            x[j] = cop.lower[j] + unit(rng) * (cop.upper[j] - cop.lower[j]);
        Evaluated e = evaluate(cop, x);
        note(e);
        tracker.observe(e);
        if (i == 0 || detail::improves_best(e, result.best)) result.best = e;
        pop.push_back(std::move(e));
    }

    auto trace_row = [&] {
        TraceRow row;
        row.fes = fes;
        if (is_feasible(result.best)) row.best_feasible_f = result.best.f;
        row.best_viol = result.best.viol;
        result.trace.push_back(row);
    };
    trace_row();

    std::vector<Vec> xs(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) xs[i] = pop[i].x;

    // one stochastic-ranking style comparison, driven by the run's stream
    auto sr_compare = [&](const Evaluated& a, const Evaluated& b) {
        const bool by_f = unit(rng) < cht.sr_pf || (is_feasible(a) && is_feasible(b));
        return by_f ? detail::compare_key(a.f, b.f) : detail::compare_key(a.viol, b.viol);
    };

    int t = 0;
    while (fes < de.max_fes) {
        ++t;
        tracker.freeze_snapshot();
        const QpcContext ctx{tracker.snap_f_range, tracker.snap_g_max,
                             xi_at(schedule, std::min(t, t_max)), {0.5}};

        auto keep_trial = [&](const Evaluated& incumbent, const Evaluated& trial) {
            switch (cht.kind) {
                case ChtKind::Qpc:
                    return qpc_pi(trial, ctx) >= qpc_pi(incumbent, ctx);
                case ChtKind::FeasibilityRules: {
                    const CompareOutcome o = feasibility_rules_compare(trial, incumbent);
                    return o == CompareOutcome::Better || o == CompareOutcome::Equivalent;
                }
                case ChtKind::EpsLevel: {
                    const CompareOutcome o = eps_level_compare(trial, incumbent, cht.eps);
                    return o == CompareOutcome::Better || o == CompareOutcome::Equivalent;
                }
                case ChtKind::Penalty:
                    return -(trial.f + cht.penalty_r * trial.viol) >=
                           -(incumbent.f + cht.penalty_r * incumbent.viol);
                case ChtKind::StochasticRanking: {
                    const CompareOutcome o = sr_compare(trial, incumbent);
                    return o == CompareOutcome::Better || o == CompareOutcome::Equivalent;
                }
            }
            return false;
        };

        for (int i = 0; i < de.np && fes < de.max_fes; ++i) {
            Vec mutant = mutate_rand1(xs, i, de.scale_factor, cop.lower, cop.upper, rng);
            Vec trial_x = crossover(xs[i], mutant, de.crossover_rate, de.crossover, rng);
            Evaluated trial = evaluate(cop, trial_x);
            note(trial);
            tracker.observe(trial);
            if (detail::improves_best(trial, result.best)) result.best = trial;
            if (keep_trial(pop[i], trial)) {
                xs[i] = trial.x;
                pop[i] = std::move(trial);
            }
        }
        trace_row();
    }

    result.fes = fes;
    result.min_fes = min_fes;
    result.feasible = is_feasible(result.best);
    result.success = min_fes.has_value();
    return result;
}

} // namespace chtbench
