#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chtbench/mapping.hpp"
#include "chtbench/problem.hpp"

namespace chtbench {

/// Pairwise verdict on (x1, x2), read as "x1 is ... than/to x2".
/// NoPreference marks exact ties the rule lists leave silent; what to do with
/// it is the selection policy's business, not the comparator's.
enum class CompareOutcome { Better, Worse, Equivalent, NoPreference };

constexpr CompareOutcome flip(CompareOutcome o) {
    switch (o) {
        case CompareOutcome::Better: return CompareOutcome::Worse;
        case CompareOutcome::Worse: return CompareOutcome::Better;
        default: return o; // Equivalent and NoPreference are self-dual
    }
}

namespace detail {

// smaller-is-better on a single key; exact tie gives no preference
inline CompareOutcome compare_key(double k1, double k2) {
    if (k1 < k2) return CompareOutcome::Better;
    if (k1 > k2) return CompareOutcome::Worse;
    return CompareOutcome::NoPreference;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Penalty function
// ---------------------------------------------------------------------------

struct PenaltyParams {
    std::vector<double> coefficients; // r_i >= 0, one per constraint
};

/// -(f + sum r_i v_i). Negated so that larger is better, matching the
/// evaluator convention used everywhere else.
inline double penalty_fitness(const Evaluated& e, const PenaltyParams& params,
                              const std::vector<double>& per_constraint_viol) {
    if (params.coefficients.size() != per_constraint_viol.size())
        throw std::invalid_argument("penalty coefficient count must equal constraint count");
    double p = 0.0;
    for (std::size_t i = 0; i < per_constraint_viol.size(); ++i)
        p += params.coefficients[i] * per_constraint_viol[i];
    return -(e.f + p);
}

// ---------------------------------------------------------------------------
// Feasibility rules and eps-level comparison
// ---------------------------------------------------------------------------

inline CompareOutcome feasibility_rules_compare(const Evaluated& e1, const Evaluated& e2) {
    const bool f1 = is_feasible(e1), f2 = is_feasible(e2);
    if (f1 && f2) return detail::compare_key(e1.f, e2.f);
    if (f1) return CompareOutcome::Better;
    if (f2) return CompareOutcome::Worse;
    return detail::compare_key(e1.viol, e2.viol);
}

/// eps = 0 reduces to the feasibility rules; eps = +inf compares f alone.
inline CompareOutcome eps_level_compare(const Evaluated& e1, const Evaluated& e2, double eps) {
    if (eps < 0.0) throw std::invalid_argument("eps must be nonnegative");
    const bool ok1 = e1.viol <= eps, ok2 = e2.viol <= eps;
    if (ok1 && ok2) return detail::compare_key(e1.f, e2.f);
    if (ok1) return CompareOutcome::Better;
    if (ok2) return CompareOutcome::Worse;
    if (e1.viol != e2.viol) return detail::compare_key(e1.viol, e2.viol);
    return detail::compare_key(e1.f, e2.f); // equal violations fall back to f
}

// ---------------------------------------------------------------------------
// Stochastic ranking
// ---------------------------------------------------------------------------

/// Bubble-sort-like ranking: `sweeps` full adjacent-pair passes, each
/// comparison sorting on f with probability pf (or when both solutions are
/// feasible) and on total violation otherwise. Returns a permutation of pop.
template <typename Rng>
std::vector<Evaluated> stochastic_rank(std::vector<Evaluated> pop, int sweeps, double pf,
                                       Rng& rng) {
    if (sweeps <= 0) throw std::invalid_argument("sweeps must be positive");
    if (pf < 0.0 || pf > 1.0) throw std::invalid_argument("pf must lie in [0, 1]");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < sweeps; ++t) {
        for (std::size_t s = 0; s + 1 < pop.size(); ++s) {
            const double u = unit(rng);
            const bool by_f = u < pf || (is_feasible(pop[s]) && is_feasible(pop[s + 1]));
            if (by_f ? pop[s].f > pop[s + 1].f : pop[s].viol > pop[s + 1].viol)
                std::swap(pop[s], pop[s + 1]);
        }
    }
    return pop;
}

// ---------------------------------------------------------------------------
// Quantitative pairwise criterion
// ---------------------------------------------------------------------------

/// Difference-rank criterion on a precomputed difference-plane point.
/// phi > 0 is a definite loss, phi < 0 a definite win; on phi = 0 the verdict
/// is the side of the equivalence line z = -e * y the point falls on.
inline CompareOutcome qpc_compare_yz(double y, double z, const QpcContext& ctx) {
    const int chi = rank_of(y_division(ctx), y);
    const int lambda = rank_of(z_division(ctx), z);
    const int phi = composite_rank(chi, lambda);
    if (phi > 0) return CompareOutcome::Worse;
    if (phi < 0) return CompareOutcome::Better;
    const double rhs = -line_slope(ctx) * y;
    if (z < rhs) return CompareOutcome::Better;
    if (z > rhs) return CompareOutcome::Worse;
    return CompareOutcome::Equivalent;
}

inline CompareOutcome qpc_qualitative_compare(const Evaluated& e1, const Evaluated& e2,
                                              const QpcContext& ctx) {
    const auto [y, z] = diff_pair(e1, e2, ctx);
    return qpc_compare_yz(y, z, ctx);
}

/// Same criterion with the divisions precomputed once, for sorting and other
/// hot loops.
class QpcComparator {
public:
    explicit QpcComparator(QpcContext ctx)
        : ctx_(std::move(ctx)),
          dy_(y_division(ctx_)),
          dz_(z_division(ctx_)),
          slope_(line_slope(ctx_)) {}

    CompareOutcome compare_yz(double y, double z) const {
        const int phi = composite_rank(rank_of(dy_, y), rank_of(dz_, z));
        if (phi > 0) return CompareOutcome::Worse;
        if (phi < 0) return CompareOutcome::Better;
        const double rhs = -slope_ * y;
        if (z < rhs) return CompareOutcome::Better;
        if (z > rhs) return CompareOutcome::Worse;
        return CompareOutcome::Equivalent;
    }

    CompareOutcome operator()(const Evaluated& e1, const Evaluated& e2) const {
        const auto [y, z] = diff_pair(e1, e2, ctx_);
        return compare_yz(y, z);
    }

    const QpcContext& context() const noexcept { return ctx_; }

private:
    QpcContext ctx_;
    Division dy_;
    Division dz_;
    double slope_;
};

/// Quantization function pi(x) = -(f + sigma). Larger is better; pairwise
/// sign differences of pi reproduce the qualitative criterion exactly when
/// the context holds the true scales.
inline double qpc_pi(const Evaluated& e, const QpcContext& ctx) {
    const double indicator = e.violated_count > 0 ? 1.0 : 0.0;
    const double sigma =
        indicator * ctx.f_range + ctx.f_range / (ctx.xi * ctx.g_max) * theta(e, ctx.g_max);
    return -(e.f + sigma);
}

// ---------------------------------------------------------------------------
// xi schedule and relaxation error rate
// ---------------------------------------------------------------------------

/// pi divides by xi, so the schedule may never actually reach zero.
inline constexpr double xi_floor = 1e-8;

struct XiSchedule {
    double xi_max = 1.0; // in (0, 1]
    double xi_min = 0.0; // in [0, xi_max)
    double p = 5.0;      // > 0; larger decays faster
    int t_max = 1;

    void validate() const {
        if (!(xi_max > 0.0) || xi_max > 1.0)
            throw std::invalid_argument("xi_max must lie in (0, 1]");
        if (xi_min < 0.0 || xi_min >= xi_max)
            throw std::invalid_argument("xi_min must lie in [0, xi_max)");
        if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
        if (t_max <= 0) throw std::invalid_argument("t_max must be positive");
    }
};

/// xi(t) = xi_max - (xi_max - xi_min) (t / t_max)^p, clamped to [0, t_max] in
/// t and floored at max(xi_min, xi_floor).
inline double xi_at(const XiSchedule& s, int t) {
    const double floor = std::max(s.xi_min, xi_floor);
    if (t <= 0) return s.xi_max;
    if (t >= s.t_max) return floor;
    const double frac = static_cast<double>(t) / static_cast<double>(s.t_max);
    const double v = s.xi_max - (s.xi_max - s.xi_min) * std::pow(frac, s.p);
    return std::max(v, floor);
}

/// Estimated fraction of the difference plane where setting values
/// (f_hat, g_hat) with an inflated ratio misorder a pair: the area between
/// the exact and relaxed equivalence lines over the whole mapped rectangle.
inline double error_rate_mu(double f_range_true, double g_max_true, double f_hat, double g_hat,
                            double xi) {
    if (!(f_range_true > 0.0) || !(g_max_true > 0.0) || !(f_hat > 0.0) || !(g_hat > 0.0))
        throw std::domain_error("scales must be positive");
    if (f_hat / g_hat < f_range_true / g_max_true)
        throw std::domain_error("setting ratio f_hat/g_hat must not undercut the true ratio");
    return xi * f_range_true / (8.0 * g_max_true) *
           (g_max_true / f_range_true - g_hat / f_hat);
}

} // namespace chtbench
