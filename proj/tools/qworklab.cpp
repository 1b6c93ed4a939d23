// qworklab.cpp — command-line driver: histograms, sweeps, diagnostics,
// detector readout and the covariance-inequality check.
//
// Exit codes: 0 ok, 1 input error, 2 invariant or assertion failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qworklab/qworklab.hpp"

namespace fs = std::filesystem;
using namespace qworklab;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitAssert = 2;

/// Raised when a run finishes but one of its cross-checks failed.
struct AssertionFailure : Error {
    using Error::Error;
};

struct Common {
    std::string model;
    std::string preset;
    double q = 0.5;
    std::optional<double> t1;
    std::size_t bins = 101;
    std::string out = "qworklab_out";
    std::uint64_t seed = 0;
    double tol = 1e-9;
    std::string route = "auto";
    std::string n_list = "16,64,256,1024";
    std::string r_rule = "pow:0.75";
    double alpha = 0.0;
    std::size_t u_points = 21;
    double u_max = 2.0;
};

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

/// Wall time and command line go to run.log so the JSON/CSV outputs stay
/// byte-identical between runs.
void write_run_log(const fs::path& dir, const std::string& cmd, double seconds) {
    std::ostringstream s;
    s << "command: " << cmd << "\nversion: " << QWORKLAB_VERSION << "\nwall_time_s: " << fmt17(seconds) << "\n";
    write_text(dir / "run.log", s.str());
}

json base_metadata(const std::string& command, const Common& c) {
    json j;
    j["artifact"] = "qworklab";
    j["version"] = QWORKLAB_VERSION;
    j["command"] = command;
    j["seed"] = c.seed;
    j["tol"] = c.tol;
    j["wall_time"] = "see run.log";
    return j;
}

Route parse_route(const std::string& s) {
    if (s == "auto") return Route::automatic;
    if (s == "convolution") return Route::convolution;
    if (s == "fourier") return Route::fourier;
    throw ValidationError("route: expected auto|convolution|fourier|exact, got '" + s + "'");
}

std::vector<std::size_t> parse_n_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(item, &pos);
            if (pos != item.size() || v < 1) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            throw ValidationError("n-list: '" + item + "' is not a positive integer");
        }
    }
    if (out.empty()) throw ValidationError("n-list: empty");
    return out;
}

BlockRule parse_r_rule(const std::string& s) {
    BlockRule rule;
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ValidationError("r-rule: expected fixed:<int> or pow:<float>");
    const std::string kind = s.substr(0, colon), val = s.substr(colon + 1);
    try {
        std::size_t pos = 0;
        rule.value = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
    } catch (const std::logic_error&) {
        throw ValidationError("r-rule: cannot parse '" + val + "'");
    }
    if (kind == "fixed") {
        rule.kind = BlockRule::fixed;
        if (!(rule.value >= 1) || std::floor(rule.value) != rule.value)
            throw ValidationError("r-rule: fixed block size must be a positive integer");
    } else if (kind == "pow") {
        rule.kind = BlockRule::power;
        if (!(rule.value > 0 && rule.value <= 1)) throw ValidationError("r-rule: exponent must lie in (0, 1]");
    } else {
        throw ValidationError("r-rule: unknown kind '" + kind + "'");
    }
    return rule;
}

/// Resolves --preset / --model into a run spec; command-line --q/--t1 win.
RunSpec resolve_spec(const Common& c, std::optional<SnapResult>& snap, std::string& preset_name) {
    if (!c.preset.empty() && !c.model.empty()) throw ValidationError("preset: use either --preset or --model");
    RunSpec rs;
    if (!c.preset.empty()) {
        const Preset p = figure_preset(c.preset);
        rs.model = p.model;
        rs.q = 0.5;
        snap = p.snap;
        preset_name = p.name;
    } else if (!c.model.empty()) {
        rs = load_model_spec(c.model);
        snap = rs.snap;
    } else {
        throw ValidationError("model: one of --model or --preset is required");
    }
    return rs;
}

double resolved_q(const CLI::App& sub, const Common& c, const RunSpec& rs) {
    return sub.count("--q") > 0 ? c.q : rs.q;
}

std::optional<double> resolved_t1(const CLI::App& sub, const Common& c, const RunSpec& rs) {
    if (sub.count("--t1") > 0) {
        const double tau = charging_time(rs.model);
        if (!(*c.t1 > 0 && *c.t1 < tau)) throw ValidationError("t1: must lie strictly inside (0, tau=" + fmt17(tau) + ")");
        return c.t1;
    }
    return rs.t1;
}

// ----------------------------------------------------------------------------

void cmd_histogram(const CLI::App& sub, const Common& c) {
    std::optional<SnapResult> snap;
    std::string preset;
    const RunSpec rs = resolve_spec(c, snap, preset);
    const double q = resolved_q(sub, c, rs);
    const auto t1 = resolved_t1(sub, c, rs);
    const double tau = charging_time(rs.model);

    std::string route_used;
    WorkQuasiDistribution d;
    const bool off_midpoint = t1 && std::abs(*t1 - 0.5 * tau) > 1e-15 * tau;
    if (c.route == "exact" || (off_midpoint && std::holds_alternative<TwoLevelCollective>(rs.model))) {
        // the closed forms fix t1 = τ/2 for the two-level model; other windows need the exact engine
        d = exact_process(rs.model, t1.value_or(-1.0)).pq(q);
        route_used = "exact";
    } else {
        const Route r = parse_route(c.route);
        route_used = to_string(resolved_route(rs.model, q, r));
        d = model_pq(rs.model, q, r);
    }
    const auto hist = bin_atoms(d, c.bins);
    const fs::path dir = prepare_out(c.out);
    write_csv((dir / "atoms.csv").string(), d);
    std::ostringstream h;
    h << "w_bin_center,mass\n";
    for (const auto& b : hist) h << fmt17(b.center) << ',' << fmt17(b.mass) << '\n';
    write_text(dir / "histogram.csv", h.str());

    // re-read check: every emitted distribution must parse back normalized
    const WorkQuasiDistribution back = read_csv((dir / "atoms.csv").string());
    if (atom_distance(back, d) != 0.0) throw AssertionFailure("atoms.csv does not round-trip");

    std::size_t negative_bins = 0;
    for (const auto& b : hist) negative_bins += b.mass < 0 ? 1 : 0;
    const JensenReport jr = jensen_check(d, UtilityFunction::exponential(1.0 / std::max(1.0, e0max(rs.model))));

    json meta = base_metadata("histogram", c);
    if (!preset.empty()) meta["preset"] = preset;
    meta["model"] = to_json(rs.model);
    if (snap) meta["snap"] = to_json(*snap);
    meta["q"] = q;
    meta["t1"] = t1.value_or(0.5 * tau);
    meta["route"] = route_used;
    meta["bins"] = c.bins;
    meta["atoms"] = d.size();
    meta["negativity"] = num(negativity(d));
    meta["min_weight"] = num(min_weight(d));
    meta["negative_bins"] = negative_bins;
    meta["moments"] = {num(moment(d, 1)), num(moment(d, 2))};
    meta["jensen"] = {{"utility", "-exp(-w/E0max)"}, {"lhs", num(jr.lhs)}, {"rhs", num(jr.rhs)}, {"violated", jr.violated}};
    write_json(dir / "metadata.json", meta);
    std::cout << "atoms=" << d.size() << " negativity=" << fmt17(negativity(d)) << " min_weight=" << fmt17(min_weight(d))
              << " negative_bins=" << negative_bins << "\n";
}

void cmd_sweep(const CLI::App& sub, const Common& c) {
    const BlockRule rule = parse_r_rule(c.r_rule);
    const auto ns = parse_n_list(c.n_list);
    SweepOptions opt;
    opt.q = sub.count("--q") > 0 ? c.q : 0.5;
    opt.alpha = c.alpha;
    opt.bins = c.bins;
    const SweepResult res = theorem_pipeline(rule, ns, opt);

    const fs::path dir = prepare_out(c.out);
    std::ostringstream csv;
    csv << "N,r,k,lambda,tau,lemma1_metric,kappa3_over_N,negativity,min_weight,skewness\n";
    for (const auto& a : res.rows)
        csv << a.N << ',' << a.r << ',' << a.k << ',' << fmt17(a.lambda) << ',' << fmt17(a.tau) << ','
            << fmt17(a.lemma1_metric) << ',' << fmt17(a.kappa3_over_N) << ',' << fmt17(a.negativity) << ','
            << fmt17(a.min_weight) << ',' << fmt17(a.skewness) << '\n';
    write_text(dir / "sweep.csv", csv.str());

    json v = base_metadata("sweep", c);
    v["r_rule"] = rule.describe();
    v["q"] = opt.q;
    v["alpha"] = opt.alpha;
    v["lambda_rule"] = "lambda = r * epsilon0";
    v["verdict"] = to_json(res.verdict);
    v["rows"] = json::array();
    for (const auto& a : res.rows) v["rows"].push_back(to_json(a));
    v["skipped"] = json::array();
    for (const auto& s : res.skipped) {
        v["skipped"].push_back(to_json(s));
        std::cerr << "skipped N=" << s.N << ": " << s.reason << "\n";
    }
    write_json(dir / "verdict.json", v);
    std::cout << "rows=" << res.rows.size() << " skipped=" << res.skipped.size()
              << " implication_holds=" << res.verdict.implication_holds
              << " converse_counterexample=" << res.verdict.converse_counterexample << "\n";
}

void cmd_diagnose(const CLI::App& sub, const Common& c) {
    std::optional<SnapResult> snap;
    std::string preset;
    const RunSpec rs = resolve_spec(c, snap, preset);
    const double q = resolved_q(sub, c, rs);
    const auto t1 = resolved_t1(sub, c, rs);
    const ExactProcess p = exact_process(rs.model, t1.value_or(-1.0));

    json j = base_metadata("diagnose", c);
    j["model"] = to_json(rs.model);
    j["q"] = q;
    j["t1"] = p.t1;
    std::vector<std::string> failures;

    const Kappa3Report k3 = kappa3_decomposition(p, q);
    j["kappa3"] = to_json(k3);
    if (!k3.consistent) failures.push_back("kappa3 decomposition disagrees with the distribution cumulant");

    const double l1 = lemma1_metric(rs.model), l1x = lemma1_metric_exact(rs.model);
    j["lemma1_metric"] = {{"analytic", l1}, {"exact", l1x}};
    if (std::abs(l1 - l1x) > c.tol * std::max(1.0, l1)) failures.push_back("lemma1 metric: analytic and exact differ");

    const InversionReport inv = inversion_symmetry_check(rs.model);
    j["inversion_symmetry"] = {{"symmetric", inv.symmetric},
                               {"deviation", inv.deviation},
                               {"h1_h0tilde_h1_tau", inv.h1_h0tilde_h1_tau},
                               {"h1_h0_h1_0", inv.h1_h0_h1_0}};
    const LocalityReport loc = locality_bound(rs.model);
    j["locality"] = {{"radius", loc.radius}, {"c", loc.c}, {"bound", loc.bound}, {"metric", loc.metric},
                     {"within_bound", loc.within_bound}};

    const double tau = p.tau;
    json st = json::array();
    for (const auto& s : short_time_expansion_check(rs.model, {1e-2 * tau, 3e-3 * tau, 1e-3 * tau}))
        st.push_back({{"t", s.t}, {"energy", s.energy}, {"quadratic", s.quadratic}, {"residual_over_t3", s.residual_over_t3}});
    j["short_time"] = st;

    const WorkQuasiDistribution d = p.pq(q);
    j["negativity"] = negativity(d);
    j["min_weight"] = min_weight(d);
    const CumulantSet kc = cumulants(d, 3);
    j["cumulants"] = {kc[1], kc[2], kc[3]};

    // route equivalence against the closed forms (window [τ/2, τ] only)
    if (std::abs(p.t1 - 0.5 * tau) <= 1e-15 * tau) {
        json routes;
        const double dc = atom_distance(d, model_pq(rs.model, q, Route::automatic));
        const double df = atom_distance(d, model_pq(rs.model, q, Route::fourier));
        routes["closed_form_vs_direct"] = num(dc);
        routes["fourier_vs_direct"] = num(df);
        j["routes"] = routes;
        if (!(dc <= c.tol) || !(df <= c.tol)) failures.push_back("route mismatch beyond tol");
    }
    if (const auto* s = std::get_if<SpinBlock>(&rs.model); s && s->alpha != 0.0 && s->N <= 10) {
        const FormulaDiscrepancy fd = perturbed_formula_check(*s, uniform_grid(-1.0, 1.0, 21));
        j["perturbed_g12_formula"] = to_json(fd);
    }
    j["failures"] = failures;
    const fs::path dir = prepare_out(c.out);
    write_json(dir / "diagnose.json", j);
    std::cout << "kappa3=" << fmt17(k3.kappa3) << " kappa3_prime=" << fmt17(k3.kappa3_prime)
              << " correction=" << fmt17(k3.correction) << "\n";
    if (!failures.empty()) throw AssertionFailure(failures.front());
}

void cmd_detector(const CLI::App& sub, const Common& c) {
    std::optional<SnapResult> snap;
    std::string preset;
    const RunSpec rs = resolve_spec(c, snap, preset);
    const double q = resolved_q(sub, c, rs);
    const auto t1 = resolved_t1(sub, c, rs);
    const ExactProcess p = exact_process(rs.model, t1.value_or(-1.0));
    const auto grid = uniform_grid(-c.u_max, c.u_max, c.u_points);
    const DetectorSpec det;
    const CharacteristicSamples s = reconstruct_Xq(p, grid, q, det);
    double dev = 0.0;
    std::ostringstream csv;
    csv << "u,re,im\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        dev = std::max(dev, std::abs(s.values[i] - p.X_q(s.u[i], q)));
        csv << fmt17(s.u[i]) << ',' << fmt17(s.values[i].real()) << ',' << fmt17(s.values[i].imag()) << '\n';
    }
    const Readout sample = simulate_readout(QuenchProtocol::from(p), p.t1, p.tau, det.programmed(grid.back(), q));
    const fs::path dir = prepare_out(c.out);
    write_text(dir / "readout.csv", csv.str());
    json j = base_metadata("detector", c);
    j["model"] = to_json(rs.model);
    j["q"] = q;
    j["t1"] = p.t1;
    j["omega"] = det.omega;
    j["u_points"] = c.u_points;
    j["max_abs_dev_vs_trace"] = dev;
    j["system_purity_after_readout"] = sample.system_purity;
    write_json(dir / "detector.json", j);
    std::cout << "max |reconstructed - direct| = " << fmt17(dev) << "\n";
    if (!(dev < 1e-10)) throw AssertionFailure("detector readout deviates from the trace formula");
}

void cmd_lg(const CLI::App& sub, const Common& c) {
    std::optional<SnapResult> snap;
    std::string preset;
    const RunSpec rs = resolve_spec(c, snap, preset);
    const auto t1 = resolved_t1(sub, c, rs);
    const ExactProcess p = exact_process(rs.model, t1.value_or(-1.0));
    const LgRun run = lg_pipeline(p);
    json j = to_json(run.report);
    j["t1"] = p.t1;
    j["sigma2_by_q"] = json::object();
    for (std::size_t i = 0; i < run.q_values.size(); ++i) j["sigma2_by_q"][fmt17(run.q_values[i])] = run.sigma2_by_q[i];
    j["sigma2_spread"] = run.sigma2_spread;
    j["negativity_q_half"] = run.negativity_half;
    j["model"] = to_json(rs.model);
    const fs::path dir = prepare_out(c.out);
    write_json(dir / "lg.json", j);
    std::cout << "lhs=" << fmt17(run.report.lhs) << " rhs=" << fmt17(run.report.rhs)
              << " violated=" << (run.report.violated ? "true" : "false") << "\n";
}

void add_model_flags(CLI::App* s, Common& c) {
    s->add_option("--model", c.model, "model spec: JSON file, inline JSON, or name:key=val,...");
    s->add_option("--preset", c.preset, "figure preset")->check(CLI::IsMember({"fig1", "fig2"}));
    s->add_option("--q", c.q, "quasiprobability parameter q");
    s->add_option("--t1", c.t1, "start of the work window (0 < t1 < tau)");
}

void add_common_flags(CLI::App* s, Common& c) {
    s->add_option("--out", c.out, "output directory");
    s->add_option("--seed", c.seed, "seed recorded in the metadata");
    s->add_option("--tol", c.tol, "tolerance for cross-route assertions");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qworklab: work quasiprobabilities for quantum-battery charging"};
    app.set_version_flag("--version", QWORKLAB_VERSION);
    app.require_subcommand(1);
    Common c;

    auto* hist = app.add_subcommand("histogram", "atoms, binned histogram and metadata for one model");
    add_model_flags(hist, c);
    add_common_flags(hist, c);
    hist->add_option("--bins", c.bins, "histogram bin count")->check(CLI::PositiveNumber);
    hist->add_option("--route", c.route, "auto|convolution|fourier|exact");

    auto* sweep = app.add_subcommand("sweep", "spin-block family sweep and verdict");
    add_common_flags(sweep, c);
    sweep->add_option("--n-list", c.n_list, "comma-separated N values");
    sweep->add_option("--r-rule", c.r_rule, "fixed:<int> or pow:<float>");
    sweep->add_option("--q", c.q, "quasiprobability parameter q");
    sweep->add_option("--alpha", c.alpha, "uniform transverse perturbation strength");
    sweep->add_option("--bins", c.bins, "bins for the Gaussian comparison")->check(CLI::PositiveNumber);

    auto* diag = app.add_subcommand("diagnose", "exact-engine diagnostics for a small model");
    add_model_flags(diag, c);
    add_common_flags(diag, c);

    auto* det = app.add_subcommand("detector", "qubit-detector reconstruction of X_q");
    add_model_flags(det, c);
    add_common_flags(det, c);
    det->add_option("--u-points", c.u_points, "grid size")->check(CLI::PositiveNumber);
    det->add_option("--u-max", c.u_max, "grid half-width");

    auto* lg = app.add_subcommand("lg", "covariance inequality for the charging process");
    add_model_flags(lg, c);
    add_common_flags(lg, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    const auto start = std::chrono::steady_clock::now();
    std::string cmd;
    for (int i = 0; i < argc; ++i) cmd += (i ? " " : "") + std::string(argv[i]);
    try {
        if (*hist) cmd_histogram(*hist, c);
        else if (*sweep) cmd_sweep(*sweep, c);
        else if (*diag) cmd_diagnose(*diag, c);
        else if (*det) cmd_detector(*det, c);
        else if (*lg) cmd_lg(*lg, c);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_run_log(prepare_out(c.out), cmd, secs);
        std::cerr << "wall time " << fmt17(secs) << " s\n";
    } catch (const ValidationError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const DimensionError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const AssertionFailure& e) {
        std::cerr << "assertion failed: " << e.what() << "\n";
        return kExitAssert;
    } catch (const Error& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return kExitAssert;
    }
    return 0;
}
