// json_io.hpp — model-spec ingestion and JSON encodings of reports

#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "qworklab/advantage.hpp"
#include "qworklab/errors.hpp"
#include "qworklab/models.hpp"
#include "qworklab/tpm_lg.hpp"

namespace qworklab {

using json = nlohmann::ordered_json;

/// Non-finite numbers become null so the document stays valid JSON.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ----------------------------------------------------------------------------
// Model specs
// ----------------------------------------------------------------------------

/// A model plus the run parameters that travel with it.
struct RunSpec {
    BatteryModel model = TwoLevelCollective{};
    double q = 0.5;
    std::optional<double> t1;
    std::optional<SnapResult> snap;  // set when r was derived from N
};

namespace detail {

inline double get_number(const json& j, const char* field) {
    const auto& v = j.at(field);
    if (!v.is_number()) throw ValidationError(std::string(field) + ": must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(std::string(field) + ": must be finite");
    return x;
}

inline std::size_t get_count(const json& j, const char* field) {
    const auto& v = j.at(field);
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() > 0)) {
        const auto n = v.get<long long>();
        if (n < 1) throw ValidationError(std::string(field) + ": must be a positive integer");
        return static_cast<std::size_t>(n);
    }
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (x >= 1 && std::floor(x) == x && x < 1e15) return static_cast<std::size_t>(x);
    }
    throw ValidationError(std::string(field) + ": must be a positive integer");
}

} // namespace detail

/// Parses {model: "two_level"|"spin_block", N, r?, lambda?, epsilon0?, alpha?, q?, t1?}.
/// Defaults: epsilon0 = 1, q = 1/2, t1 = τ/2; two_level lambda = 1;
/// spin_block r = divisor of N nearest N^0.75, lambda = r·epsilon0, alpha = 0.
inline RunSpec parse_model_spec(const json& j) {
    if (!j.is_object()) throw ValidationError("model spec: must be a JSON object");
    static const char* known[] = {"model", "N", "r", "lambda", "epsilon0", "alpha", "q", "t1"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ValidationError(key + ": unknown field");
    }
    if (!j.contains("model") || !j["model"].is_string()) throw ValidationError("model: required string field");
    if (!j.contains("N")) throw ValidationError("N: required field");
    const std::string name = j["model"].get<std::string>();
    const std::size_t N = detail::get_count(j, "N");
    const double eps0 = j.contains("epsilon0") ? detail::get_number(j, "epsilon0") : 1.0;
    RunSpec rs;
    rs.q = j.contains("q") ? detail::get_number(j, "q") : 0.5;
    if (name == "two_level") {
        if (j.contains("r")) throw ValidationError("r: only valid for spin_block");
        if (j.contains("alpha")) throw ValidationError("alpha: only valid for spin_block");
        rs.model = TwoLevelCollective{N, eps0, j.contains("lambda") ? detail::get_number(j, "lambda") : 1.0};
    } else if (name == "spin_block") {
        std::size_t r = 0;
        if (j.contains("r")) {
            r = detail::get_count(j, "r");
        } else {
            const SnapResult s = snap_block_size(N, std::pow(static_cast<double>(N), 0.75));
            if (!s.feasible) throw ValidationError("r: " + s.reason);
            r = s.r;
            rs.snap = s;
        }
        const double lambda = j.contains("lambda") ? detail::get_number(j, "lambda") : static_cast<double>(r) * eps0;
        const double alpha = j.contains("alpha") ? detail::get_number(j, "alpha") : 0.0;
        rs.model = SpinBlock{N, r, lambda, eps0, alpha};
    } else {
        throw ValidationError("model: unknown model '" + name + "' (two_level|spin_block)");
    }
    validate(rs.model);
    if (j.contains("t1")) {
        const double t1 = detail::get_number(j, "t1");
        const double tau = charging_time(rs.model);
        if (!(t1 > 0 && t1 < tau)) throw ValidationError("t1: must lie strictly inside (0, tau=" + fmt17(tau) + ")");
        rs.t1 = t1;
    }
    return rs;
}

/// Shorthand "spin_block:N=8,r=2,lambda=2" → JSON object.
inline json parse_inline_spec(const std::string& text) {
    json j;
    const auto colon = text.find(':');
    j["model"] = text.substr(0, colon);
    if (colon == std::string::npos) return j;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ValidationError(item + ": expected key=value");
        const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        try {
            std::size_t pos = 0;
            if (key == "N" || key == "r") {
                const long long v = std::stoll(val, &pos);
                if (pos != val.size()) throw std::invalid_argument(val);
                j[key] = v;
            } else {
                const double v = std::stod(val, &pos);
                if (pos != val.size()) throw std::invalid_argument(val);
                j[key] = v;
            }
        } catch (const std::logic_error&) {
            throw ValidationError(key + ": cannot parse '" + val + "'");
        }
    }
    return j;
}

/// Accepts inline JSON ("{...}"), a path to a JSON file, or the shorthand form.
inline RunSpec load_model_spec(const std::string& arg) {
    json j;
    auto parse_text = [](const std::string& text) {
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string("model spec: invalid JSON: ") + e.what());
        }
    };
    if (!arg.empty() && arg.front() == '{') {
        j = parse_text(arg);
    } else if (std::ifstream f(arg); f) {
        std::stringstream buf;
        buf << f.rdbuf();
        j = parse_text(buf.str());
    } else {
        j = parse_inline_spec(arg);
    }
    try {
        return parse_model_spec(j);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model spec: ") + e.what());
    }
}

// ----------------------------------------------------------------------------
// Encoders
// ----------------------------------------------------------------------------

inline json to_json(const BatteryModel& m) {
    json j;
    j["model"] = model_name(m);
    j["N"] = cells(m);
    if (const auto* s = std::get_if<SpinBlock>(&m)) {
        j["r"] = s->r;
        j["k"] = s->k();
    }
    j["lambda"] = lambda_of(m);
    j["epsilon0"] = eps0_of(m);
    if (const auto* s = std::get_if<SpinBlock>(&m)) j["alpha"] = s->alpha;
    j["tau"] = charging_time(m);
    j["E0max"] = e0max(m);
    return j;
}

inline json to_json(const SnapResult& s) {
    json j;
    j["N_requested"] = s.N_requested;
    j["r_requested"] = num(s.r_requested);
    j["N"] = s.N;
    j["r"] = s.r;
    j["k"] = s.k;
    j["feasible"] = s.feasible;
    if (!s.reason.empty()) j["reason"] = s.reason;
    return j;
}

inline json to_json(const PowerLawFit& f) {
    return json{{"exponent", num(f.exponent)}, {"prefactor", num(f.prefactor)}, {"r2", num(f.r2)}, {"valid", f.valid}};
}

inline json to_json(const AdvantageReport& a) {
    json j;
    j["N"] = a.N;
    j["r"] = a.r;
    j["k"] = a.k;
    j["lambda"] = a.lambda;
    j["tau"] = a.tau;
    j["lemma1_metric"] = num(a.lemma1_metric);
    j["kappa3_over_N"] = num(a.kappa3_over_N);
    j["kappa3_prime_over_N"] = num(a.kappa3_prime_over_N);
    j["negativity"] = num(a.negativity);
    j["min_weight"] = num(a.min_weight);
    j["skewness"] = num(a.skewness);
    j["skewness_sqrtN"] = num(a.skewness_sqrtN);
    j["locality_radius"] = a.locality_radius;
    j["scaled_negative_mass"] = num(a.scaled_negative_mass);
    j["gaussian_sup_deviation"] = num(a.gaussian_sup_deviation);
    j["sigma_model"] = num(a.sigma_model);
    j["sigma_fitted"] = num(a.sigma_fitted);
    j["sigma_alt"] = num(a.sigma_alt);
    j["atoms"] = a.atoms;
    j["route"] = a.route;
    j["snap"] = to_json(a.snap);
    return j;
}

inline json to_json(const Verdict& v) {
    json j;
    j["family"] = v.family;
    j["negativity_present"] = v.negativity_present;
    j["negativity_persistent"] = v.negativity_persistent;
    j["negativity_growing"] = v.negativity_growing;
    j["tau_decreasing"] = v.tau_decreasing;
    j["tau_to_zero"] = v.tau_to_zero;
    j["implication_holds"] = v.implication_holds;
    j["converse_counterexample"] = v.converse_counterexample;
    j["lemma1_growing"] = v.lemma1_growing;
    j["lemma1_fit"] = to_json(v.lemma1_fit);
    j["tau_fit"] = to_json(v.tau_fit);
    j["negativity_excess_fit"] = to_json(v.negativity_fit);
    j["flags"] = v.flags;
    return j;
}

inline json to_json(const Kappa3Report& k) {
    return json{{"q", k.q},
                {"kappa3", num(k.kappa3)},
                {"kappa3_prime", num(k.kappa3_prime)},
                {"correction", num(k.correction)},
                {"h1_h0tilde_h1_tau", num(k.h1_h0tilde_h1_tau)},
                {"kappa3_distribution", num(k.kappa3_distribution)},
                {"consistent", k.consistent}};
}

inline json to_json(const LgReport& r) {
    return json{{"sigma2_tau", num(r.sigma2_tau)}, {"sigma2_t1", num(r.sigma2_t1)}, {"sigma2", num(r.sigma2)},
                {"lhs", num(r.lhs)},               {"rhs", num(r.rhs)},             {"violated", r.violated},
                {"note", r.note}};
}

inline json to_json(const FormulaDiscrepancy& f) {
    return json{{"max_dev_exact_state", num(f.max_dev_exact_state)},
                {"max_dev_charged_state", num(f.max_dev_charged_state)},
                {"max_dev_product_form", num(f.max_dev_product_form)},
                {"agrees_with_exact", f.agrees_with_exact},
                {"overlap_charged", num(f.overlap_charged)}};
}

} // namespace qworklab
