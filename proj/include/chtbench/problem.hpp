#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chtbench/problems_manifest.hpp"

namespace chtbench {

using Vec = std::vector<double>;
using ScalarFn = std::function<double(const Vec&)>;

/// Thrown when an objective or constraint evaluates to a non-finite value.
/// `constraint_index()` is -1 when the objective itself is the offender.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& what, int constraint_index)
        : std::runtime_error(what), index_(constraint_index) {}

    int constraint_index() const noexcept { return index_; }

private:
    int index_;
};

/// A constrained optimization problem: minimize `objective` over the box
/// [lower, upper] subject to g_i(x) <= 0 and |h_i(x)| - delta <= 0.
struct Cop {
    std::string name;
    int dimension = 0;
    Vec lower;
    Vec upper;
    ScalarFn objective;
    std::vector<ScalarFn> inequality; // g_i(x) <= 0
    std::vector<ScalarFn> equality;   // h_i(x) = 0, relaxed by delta
    double delta = 1e-4;
    std::optional<double> best_known_f;

    std::size_t constraint_count() const {
        return inequality.size() + equality.size();
    }

    void validate() const {
        if (dimension <= 0) throw std::invalid_argument(name + ": dimension must be positive");
        if (lower.size() != static_cast<std::size_t>(dimension) ||
            upper.size() != static_cast<std::size_t>(dimension))
            throw std::invalid_argument(name + ": bound vectors must match dimension");
        for (int j = 0; j < dimension; ++j)
            if (!(lower[j] < upper[j]))
                throw std::invalid_argument(name + ": lower bound must be below upper bound");
        if (delta < 0.0) throw std::invalid_argument(name + ": delta must be nonnegative");
    }
};

/// A decision vector with its cached objective value, total violation, and
/// violated-constraint count. These cached values are the sole inputs to
/// every comparison; x is kept only for reporting.
struct Evaluated {
    Vec x;
    double f = 0.0;
    double viol = 0.0;
    int violated_count = 0;
};

/// Clipped violation of constraint `i` (inequalities first, then equalities).
inline double constraint_violation(const Cop& cop, const Vec& x, std::size_t i) {
    if (i >= cop.constraint_count())
        throw std::out_of_range(cop.name + ": constraint index " + std::to_string(i) +
                                " out of range");
    if (i < cop.inequality.size()) return std::max(cop.inequality[i](x), 0.0);
    const double h = cop.equality[i - cop.inequality.size()](x);
    return std::max(std::abs(h) - cop.delta, 0.0);
}

inline std::vector<double> all_violations(const Cop& cop, const Vec& x) {
    std::vector<double> v(cop.constraint_count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = constraint_violation(cop, x, i);
    return v;
}

/// Evaluates objective and all constraints at x. This is the unit of the
/// function-evaluation budget: one call, one FES, regardless of how many
/// constraints the problem has.
inline Evaluated evaluate(const Cop& cop, const Vec& x) {
    Evaluated e;
    e.x = x;
    e.f = cop.objective(x);
    if (!std::isfinite(e.f))
        throw numeric_error(cop.name + ": objective is not finite", -1);
    for (std::size_t i = 0; i < cop.constraint_count(); ++i) {
        const double v = constraint_violation(cop, x, i);
        if (!std::isfinite(v))
            throw numeric_error(cop.name + ": constraint " + std::to_string(i) +
                                    " is not finite",
                                static_cast<int>(i));
        e.viol += v;
        if (v > 0.0) ++e.violated_count;
    }
    return e;
}

/// Strict zero test: delta already absorbed any equality tolerance.
inline bool is_feasible(const Evaluated& e) { return e.viol == 0.0; }

/// min sum(x_j) s.t. sum(x_j^2) <= 1, -2 <= x_j <= 2. Optimum -sqrt(D) at
/// x_j = -1/sqrt(D).
inline Cop make_ring(int dimension) {
    Cop c;
    c.name = "ring" + std::to_string(dimension);
    c.dimension = dimension;
    c.lower.assign(dimension, -2.0);
    c.upper.assign(dimension, 2.0);
    c.objective = [](const Vec& x) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    };
    c.inequality.push_back([](const Vec& x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s - 1.0;
    });
    c.best_known_f = -std::sqrt(static_cast<double>(dimension));
    return c;
}

namespace detail {

inline Cop make_g06() {
    Cop c;
    c.name = "g06";
    c.dimension = 2;
    c.lower = {13.0, 0.0};
    c.upper = {100.0, 100.0};
    c.objective = [](const Vec& x) {
        const double a = x[0] - 10.0, b = x[1] - 20.0;
        return a * a * a + b * b * b;
    };
    c.inequality = {
        [](const Vec& x) {
            const double a = x[0] - 5.0, b = x[1] - 5.0;
            return -a * a - b * b + 100.0;
        },
        [](const Vec& x) {
            const double a = x[0] - 6.0, b = x[1] - 5.0;
            return a * a + b * b - 82.81;
        },
    };
    return c;
}

// The x1 lower bound is 1e-6 rather than 0: the objective is singular at
// x1 = 0, and the feasible region is nowhere near that edge.
inline Cop make_g08() {
    Cop c;
    c.name = "g08";
    c.dimension = 2;
    c.lower = {1e-6, 0.0};
    c.upper = {10.0, 10.0};
    c.objective = [](const Vec& x) {
        const double two_pi = 2.0 * std::numbers::pi;
        const double s1 = std::sin(two_pi * x[0]);
        const double s2 = std::sin(two_pi * x[1]);
        return -s1 * s1 * s1 * s2 / (x[0] * x[0] * x[0] * (x[0] + x[1]));
    };
    c.inequality = {
        [](const Vec& x) { return x[0] * x[0] - x[1] + 1.0; },
        [](const Vec& x) {
            const double b = x[1] - 4.0;
            return 1.0 - x[0] + b * b;
        },
    };
    return c;
}

inline Cop make_g11() {
    Cop c;
    c.name = "g11";
    c.dimension = 2;
    c.lower = {-1.0, -1.0};
    c.upper = {1.0, 1.0};
    c.objective = [](const Vec& x) {
        const double b = x[1] - 1.0;
        return x[0] * x[0] + b * b;
    };
    c.equality = {[](const Vec& x) { return x[1] - x[0] * x[0]; }};
    return c;
}

// The min over the 9^3 lattice of disjoint spheres is a single constraint
// (n = 1) for violation-count purposes.
inline Cop make_g12() {
    Cop c;
    c.name = "g12";
    c.dimension = 3;
    c.lower = {0.0, 0.0, 0.0};
    c.upper = {10.0, 10.0, 10.0};
    c.objective = [](const Vec& x) {
        const double a = x[0] - 5.0, b = x[1] - 5.0, d = x[2] - 5.0;
        return -(100.0 - a * a - b * b - d * d) / 100.0;
    };
    c.inequality = {[](const Vec& x) {
        double best = std::numeric_limits<double>::infinity();
        for (int p = 1; p <= 9; ++p)
            for (int q = 1; q <= 9; ++q)
                for (int r = 1; r <= 9; ++r) {
                    const double a = x[0] - p, b = x[1] - q, d = x[2] - r;
                    best = std::min(best, a * a + b * b + d * d - 0.0625);
                }
        return best;
    }};
    return c;
}

inline Cop make_g24() {
    Cop c;
    c.name = "g24";
    c.dimension = 2;
    c.lower = {0.0, 0.0};
    c.upper = {3.0, 4.0};
    c.objective = [](const Vec& x) { return -x[0] - x[1]; };
    c.inequality = {
        [](const Vec& x) {
            const double t = x[0];
            return -2.0 * t * t * t * t + 8.0 * t * t * t - 8.0 * t * t + x[1] - 2.0;
        },
        [](const Vec& x) {
            const double t = x[0];
            return -4.0 * t * t * t * t + 32.0 * t * t * t - 88.0 * t * t + 96.0 * t +
                   x[1] - 36.0;
        },
    };
    return c;
}

inline Cop make_eqline() {
    Cop c;
    c.name = "eqline";
    c.dimension = 2;
    c.lower = {-5.0, -5.0};
    c.upper = {5.0, 5.0};
    c.objective = [](const Vec& x) { return x[0] * x[0] + x[1] * x[1]; };
    c.equality = {[](const Vec& x) { return x[0] + x[1] - 1.0; }};
    return c;
}

inline Cop make_named(const std::string& name, int dimension) {
    if (name == "g06") return make_g06();
    if (name == "g08") return make_g08();
    if (name == "g11") return make_g11();
    if (name == "g12") return make_g12();
    if (name == "g24") return make_g24();
    if (name == "eqline") return make_eqline();
    if (name.rfind("ring", 0) == 0) return make_ring(dimension);
    throw std::out_of_range("unknown problem in manifest: " + name);
}

} // namespace detail

/// Builds the problem list from a JSON manifest: constraint and objective
/// bodies are bound by name, metadata (dimension, delta, best-known f)
/// comes from the manifest entries.
inline std::vector<Cop> registry_from_manifest(std::string_view manifest_json) {
    const auto manifest = nlohmann::json::parse(manifest_json);
    std::vector<Cop> out;
    out.reserve(manifest.size());
    for (const auto& item : manifest) {
        const auto name = item.at("name").get<std::string>();
        const int dim = item.at("dim").get<int>();
        Cop c = detail::make_named(name, dim);
        if (c.dimension != dim)
            throw std::invalid_argument(name + ": manifest dimension disagrees with definition");
        c.delta = item.at("delta").get<double>();
        if (item.contains("best_known_f") && !item.at("best_known_f").is_null())
            c.best_known_f = item.at("best_known_f").get<double>();
        c.validate();
        out.push_back(std::move(c));
    }
    return out;
}

/// The built-in problems, loaded from the manifest shipped with the source
/// tree. Immutable after first use; safe to share across threads.
inline const std::vector<Cop>& registry() {
    static const std::vector<Cop> problems =
        registry_from_manifest(detail::problems_manifest);
    return problems;
}

inline const Cop& find_problem(std::string_view name) {
    for (const Cop& c : registry())
        if (c.name == name) return c;
    throw std::out_of_range("unknown problem: " + std::string(name));
}

} // namespace chtbench
