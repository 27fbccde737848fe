#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chtbench/problem.hpp"

namespace chtbench {

/// An ordered threshold set 0 < q_1 < ... < q_alpha < bound that divides the
/// symmetric range [-bound, bound] into signed rank buckets. alpha = 0 (no
/// thresholds) leaves the three-bucket division <[-b, 0), 0, (0, b]>.
class Division {
public:
    Division(std::vector<double> thresholds, double bound)
        : thresholds_(std::move(thresholds)), bound_(bound) {
        if (!(bound_ > 0.0)) throw std::invalid_argument("division bound must be positive");
        double prev = 0.0;
        for (double q : thresholds_) {
            if (!(q > prev) || !(q < bound_))
                throw std::invalid_argument("division thresholds must satisfy 0 < q_1 < ... < q_a < bound");
            prev = q;
        }
    }

    const std::vector<double>& thresholds() const noexcept { return thresholds_; }
    double bound() const noexcept { return bound_; }
    int order() const noexcept { return static_cast<int>(thresholds_.size()); }

private:
    std::vector<double> thresholds_;
    double bound_;
};

/// Signed bucket index of `value`. Zero maps to rank 0 exactly; the positive
/// side uses the intervals (0, q_1], (q_1, q_2], ..., (q_alpha, b] and the
/// negative side is the mirror image, so rank_of(d, -v) == -rank_of(d, v).
/// Values with |v| beyond the bound saturate to +/-(alpha + 1): the caller's
/// scale estimates may lag behind the most recent evaluations.
inline int rank_of(const Division& d, double value) {
    if (value == 0.0) return 0;
    const double mag = std::abs(value);
    const auto& q = d.thresholds();
    const int r = static_cast<int>(std::lower_bound(q.begin(), q.end(), mag) - q.begin()) + 1;
    return value > 0.0 ? r : -r;
}

/// Violation transform separating feasibility classes: feasible solutions map
/// to -g_max, infeasible ones to their raw violation. With g_max at least the
/// true maximum violation, differences of theta land in disjoint bands per
/// feasibility class.
inline double theta(const Evaluated& e, double g_max) {
    return e.viol == 0.0 ? -g_max : e.viol;
}

/// Scale settings and parameters of the quantitative pairwise criterion.
/// f_range stands in for the objective spread (max f - min f) and g_max for
/// the maximum total violation; both may be estimates. etas parametrize the
/// division grid used by the qualitative criterion only -- the quantization
/// function never reads them.
struct QpcContext {
    double f_range = 1.0;
    double g_max = 1.0;
    double xi = 1.0;
    std::vector<double> etas = {0.5};

    int alpha() const noexcept { return static_cast<int>(etas.size()); }
    int beta() const noexcept { return alpha() + 1; }

    void validate() const {
        if (!(f_range > 0.0)) throw std::invalid_argument("f_range must be positive");
        if (!(g_max > 0.0)) throw std::invalid_argument("g_max must be positive");
        if (!(xi > 0.0) || xi > 1.0) throw std::invalid_argument("xi must lie in (0, 1]");
        double prev = 0.0;
        for (double eta : etas) {
            if (!(eta > prev) || !(eta < 1.0))
                throw std::invalid_argument("etas must satisfy 0 < eta_1 < ... < eta_a < 1");
            prev = eta;
        }
    }
};

/// Objective-difference division: q_r = eta_r * f_range over [-f_range, f_range].
inline Division y_division(const QpcContext& ctx) {
    std::vector<double> q(ctx.etas.size());
    for (std::size_t r = 0; r < q.size(); ++r) q[r] = ctx.etas[r] * ctx.f_range;
    return Division(std::move(q), ctx.f_range);
}

/// Violation-difference division: q_r = eta_r * xi * g_max for r <= alpha,
/// topped by q_beta = xi * g_max, over [-2 g_max, 2 g_max]. The top threshold
/// keeps the grid corners on the equivalence line.
inline Division z_division(const QpcContext& ctx) {
    std::vector<double> q(ctx.etas.size() + 1);
    for (std::size_t r = 0; r < ctx.etas.size(); ++r) q[r] = ctx.etas[r] * ctx.xi * ctx.g_max;
    q.back() = ctx.xi * ctx.g_max;
    return Division(std::move(q), 2.0 * ctx.g_max);
}

/// (y, z) = (f1 - f2, theta1 - theta2), the coordinates of the pair in the
/// difference plane.
inline std::pair<double, double> diff_pair(const Evaluated& e1, const Evaluated& e2,
                                           const QpcContext& ctx) {
    return {e1.f - e2.f, theta(e1, ctx.g_max) - theta(e2, ctx.g_max)};
}

/// Fused rank phi = chi + lambda; its sign settles most comparisons.
inline int composite_rank(int chi, int lambda) { return chi + lambda; }

/// Slope of the equivalence line z = -e * y for an arbitrary division
/// arrangement. q_alpha_y / q_beta_z are the outermost thresholds of the two
/// divisions (ignored on the branches that do not use them).
inline double line_slope_general(int alpha, int beta, double q_alpha_y, double q_beta_z,
                                 double f_range, double g_max) {
    if (alpha > beta) return 2.0 * g_max / q_alpha_y;
    if (alpha == beta) return 2.0 * g_max / f_range;
    return q_beta_z / f_range;
}

/// Slope for the configuration in force (beta = alpha + 1, top z threshold
/// xi * g_max): e = xi * g_max / f_range.
inline double line_slope(const QpcContext& ctx) { return ctx.xi * ctx.g_max / ctx.f_range; }

/// Same ratio evaluated on a context holding setting values rather than true
/// scales; kept as a separate name so call sites say which line they mean.
inline double relaxed_line_slope(const QpcContext& ctx) { return line_slope(ctx); }

} // namespace chtbench
