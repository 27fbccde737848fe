#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "chtbench/de.hpp"

namespace chtbench {

/// Anything wrong with user-supplied configuration; the CLI maps this to
/// exit code 2.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One experiment: a problem, a selection policy, DE parameters, and the
/// repetition/bookkeeping knobs. Field-for-field the run-config JSON schema.
struct RunConfig {
    std::string problem = "g24";
    ChtParams cht;
    DeParams de;
    int runs = 25;
    std::uint64_t seed = 1;
    int jobs = 0; // 0 = available parallelism
    std::string out_dir = ".";
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad value for '") + key + "': " + e.what());
    }
}

} // namespace detail

/// Parses the run-config JSON. Unknown keys are rejected so typos fail loudly.
inline RunConfig parse_run_config(const nlohmann::json& j) {
    static const char* top_keys[] = {"problem", "cht", "de", "runs", "seed", "jobs", "out"};
    static const char* cht_keys[] = {"cht",  "xi_max",    "xi_min", "p",
                                     "eps",  "penalty_r", "sr_pf"};
    static const char* de_keys[] = {"np", "f", "cr", "xover", "max_fes", "seed"};

    auto check_keys = [](const nlohmann::json& obj, const char* what, const auto& allowed) {
        for (const auto& item : obj.items()) {
            bool ok = false;
            for (const char* key : allowed) ok = ok || item.key() == key;
            if (!ok) throw config_error(std::string("unknown ") + what + " key: " + item.key());
        }
    };

    if (!j.is_object()) throw config_error("run config must be a JSON object");
    check_keys(j, "config", top_keys);

    RunConfig cfg;
    detail::read_field(j, "problem", cfg.problem);
    detail::read_field(j, "runs", cfg.runs);
    detail::read_field(j, "seed", cfg.seed);
    detail::read_field(j, "jobs", cfg.jobs);
    detail::read_field(j, "out", cfg.out_dir);

    if (j.contains("cht")) {
        const auto& c = j.at("cht");
        if (!c.is_object()) throw config_error("'cht' must be an object");
        check_keys(c, "cht", cht_keys);
        std::string kind = cht_name(cfg.cht.kind);
        detail::read_field(c, "cht", kind);
        try {
            cfg.cht.kind = cht_kind_from_name(kind);
        } catch (const std::invalid_argument& e) {
            throw config_error(e.what());
        }
        detail::read_field(c, "xi_max", cfg.cht.xi_max);
        detail::read_field(c, "xi_min", cfg.cht.xi_min);
        detail::read_field(c, "p", cfg.cht.p);
        detail::read_field(c, "eps", cfg.cht.eps);
        detail::read_field(c, "penalty_r", cfg.cht.penalty_r);
        detail::read_field(c, "sr_pf", cfg.cht.sr_pf);
    }

    if (j.contains("de")) {
        const auto& d = j.at("de");
        if (!d.is_object()) throw config_error("'de' must be an object");
        check_keys(d, "de", de_keys);
        detail::read_field(d, "np", cfg.de.np);
        detail::read_field(d, "f", cfg.de.scale_factor);
        detail::read_field(d, "cr", cfg.de.crossover_rate);
        detail::read_field(d, "max_fes", cfg.de.max_fes);
        if (d.contains("xover")) {
            const auto kind = d.at("xover").get<std::string>();
            if (kind == "bin") cfg.de.crossover = CrossoverKind::Binomial;
            else if (kind == "exp") cfg.de.crossover = CrossoverKind::Exponential;
            else throw config_error("xover must be 'bin' or 'exp', got '" + kind + "'");
        }
    }

    if (cfg.runs <= 0) throw config_error("runs must be positive");
    if (cfg.jobs < 0) throw config_error("jobs must be nonnegative");
    try {
        cfg.de.validate();
        cfg.cht.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    return cfg;
}

inline RunConfig parse_run_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_run_config(j);
}

} // namespace chtbench
