// advantage.hpp — scaling diagnostics linking negativity of p_{1/2} to
// charging advantage: the ⟨H1 H0 H1⟩_0 metric, short-time expansion, the κ3
// decomposition, inversion symmetry, locality bound, Gaussian limit, and the
// sweep verdict pipeline.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qworklab/errors.hpp"
#include "qworklab/models.hpp"
#include "qworklab/operator_core.hpp"
#include "qworklab/quasiprob.hpp"

namespace qworklab {

// ----------------------------------------------------------------------------
// ⟨H1 H0 H1⟩_0 / N
// ----------------------------------------------------------------------------

/// |⟨0..0|H1 H0 H1|0..0⟩| / N from the model's structure:
/// two-level λ²ε0; spin block (λ² + α²)ε0 for r ≥ 2 and (λ + α)²ε0 for r = 1.
inline double lemma1_metric(const BatteryModel& m) {
    validate(m);
    if (const auto* t = std::get_if<TwoLevelCollective>(&m)) return t->lambda * t->lambda * t->eps0;
    const auto& s = std::get<SpinBlock>(m);
    if (s.r == 1) return (s.lambda + s.alpha) * (s.lambda + s.alpha) * s.eps0;
    return (s.lambda * s.lambda + s.alpha * s.alpha) * s.eps0;
}

/// Same quantity by dense matrix products.
inline double lemma1_metric_exact(const BatteryModel& m) {
    const HermitianOperator h0 = h0_operator(m), h1 = h1_operator(m);
    const PureState g = PureState::basis(h0.dim(), 0);
    return std::abs(expectation(Matrix(h1.matrix() * h0.matrix() * h1.matrix()), g)) / static_cast<double>(cells(m));
}

// ----------------------------------------------------------------------------
// Short-time expansion ⟨H0⟩_t = ⟨H1 H0 H1⟩_0 t² + O(t³)
// ----------------------------------------------------------------------------

struct ShortTimePoint {
    double t;
    double energy;          // ⟨H0⟩_t, exact
    double quadratic;       // ⟨H1 H0 H1⟩_0 t²
    double residual_over_t3;
};

inline std::vector<ShortTimePoint> short_time_expansion_check(const BatteryModel& m, const std::vector<double>& ts) {
    const HermitianOperator h0 = h0_operator(m), h1 = h1_operator(m);
    const SpectralDecomposition h1s = diagonalize(h1);
    const PureState g = PureState::basis(h0.dim(), 0);
    const double w2 = expectation(Matrix(h1.matrix() * h0.matrix() * h1.matrix()), g).real();
    std::vector<ShortTimePoint> out;
    for (double t : ts) {
        const double e = expectation(h0, evolve(g, h1s, t));
        const double quad = w2 * t * t;
        out.push_back({t, e, quad, t == 0 ? 0.0 : (e - quad) / (t * t * t)});
    }
    return out;
}

// ----------------------------------------------------------------------------
// κ3 = κ'3 − 6q(1−q)⟨H1 H̃0 H1⟩_τ
// ----------------------------------------------------------------------------

struct Kappa3Report {
    double q;
    double kappa3;             // κ'3 + correction
    double kappa3_prime;       // third cumulant of −H1 in ψ(τ)
    double correction;         // −6q(1−q)⟨H1 H̃0 H1⟩_τ
    double h1_h0tilde_h1_tau;  // ⟨H1 H̃0 H1⟩_τ
    double kappa3_distribution;  // third cumulant of the p_q atoms
    bool consistent;           // |κ3 − κ3_distribution| ≤ 1e-8·max(1, |κ3|)
};

inline Kappa3Report kappa3_decomposition(const ExactProcess& p, double q) {
    const Matrix& h1 = p.h1.matrix();
    const Matrix h0t = e0max(p.model) * Matrix::Identity(p.h0.dim(), p.h0.dim()) - p.h0.matrix();
    const double m1 = expectation(p.h1, p.psi_tau);
    const double m2 = expectation(Matrix(h1 * h1), p.psi_tau).real();
    const double m3 = expectation(Matrix(h1 * h1 * h1), p.psi_tau).real();
    Kappa3Report r{};
    r.q = q;
    r.kappa3_prime = -m3 + 3 * m2 * m1 - 2 * m1 * m1 * m1;
    r.h1_h0tilde_h1_tau = expectation(Matrix(h1 * h0t * h1), p.psi_tau).real();
    r.correction = -6 * q * (1 - q) * r.h1_h0tilde_h1_tau;
    r.kappa3 = r.kappa3_prime + r.correction;
    r.kappa3_distribution = cumulants(p.pq(q), 3)[3];
    r.consistent = std::abs(r.kappa3 - r.kappa3_distribution) <= 1e-8 * std::max(1.0, std::abs(r.kappa3));
    return r;
}

inline Kappa3Report kappa3_decomposition(const BatteryModel& m, double q, double t1 = -1.0) {
    return kappa3_decomposition(exact_process(m, t1), q);
}

// ----------------------------------------------------------------------------
// Inversion symmetry U_I H1 U_I = H1
// ----------------------------------------------------------------------------

struct InversionReport {
    bool symmetric;
    double deviation;          // max |U_I H1 U_I − H1|
    double h1_h0tilde_h1_tau;  // ⟨H1 H̃0 H1⟩_τ
    double h1_h0_h1_0;         // ⟨H1 H0 H1⟩_0
    bool expectations_match;   // checked only when symmetric
};

/// Checks the symmetry for an arbitrary H1 on N cells; ψ(τ) = e^{−iH1 τ}|0..0>.
inline InversionReport inversion_symmetry_check(const Matrix& h0, const Matrix& h1, const Matrix& ui, double e0max_value,
                                                double tau) {
    if (max_abs(ui * ui - Matrix::Identity(ui.rows(), ui.cols())) > 1e-12)
        throw ValidationError("inversion_symmetry_check: U_I is not an involution");
    InversionReport r{};
    r.deviation = max_abs(ui * h1 * ui - h1);
    r.symmetric = r.deviation < 1e-10;
    const PureState g = PureState::basis(h0.rows(), 0);
    const PureState psi_tau = evolve(g, diagonalize(HermitianOperator(h1)), tau);
    const Matrix h0t = e0max_value * Matrix::Identity(h0.rows(), h0.cols()) - h0;
    r.h1_h0tilde_h1_tau = expectation(Matrix(h1 * h0t * h1), psi_tau).real();
    r.h1_h0_h1_0 = expectation(Matrix(h1 * h0 * h1), g).real();
    r.expectations_match = !r.symmetric || std::abs(r.h1_h0tilde_h1_tau - r.h1_h0_h1_0) <=
                                               1e-8 * std::max(1.0, std::abs(r.h1_h0_h1_0));
    if (r.symmetric && !r.expectations_match)
        throw InvariantError("inversion_symmetry_check: symmetric H1 but <H1 H0~ H1>_tau != <H1 H0 H1>_0");
    return r;
}

inline InversionReport inversion_symmetry_check(const BatteryModel& m) {
    return inversion_symmetry_check(h0_operator(m).matrix(), h1_operator(m).matrix(), inversion_unitary(cells(m)),
                                    e0max(m), charging_time(m));
}

// ----------------------------------------------------------------------------
// Locality bound
// ----------------------------------------------------------------------------

struct LocalityReport {
    std::size_t radius;  // max |X| over the terms of H1
    double c;            // bound / N
    double bound;        // Σ_i ‖h_i‖ (Σ_{X∋i} ‖v_X‖)²
    double metric;       // |⟨H1 H0 H1⟩_0|
    bool within_bound;
};

inline LocalityReport locality_bound(const std::vector<SupportTerm>& terms, std::size_t N, double eps0, double metric) {
    if (terms.empty()) throw ValidationError("locality_bound: H1 has no terms");
    LocalityReport r{};
    std::vector<double> load(N + 1, 0.0);
    for (const auto& t : terms) {
        r.radius = std::max(r.radius, t.sites.size());
        for (std::size_t s : t.sites) {
            if (s < 1 || s > N) throw ValidationError("locality_bound: term support outside 1..N");
            load[s] += t.norm;
        }
    }
    for (std::size_t i = 1; i <= N; ++i) r.bound += eps0 * load[i] * load[i];
    r.c = r.bound / static_cast<double>(N);
    r.metric = metric;
    r.within_bound = metric <= r.bound * (1 + 1e-12);
    return r;
}

inline LocalityReport locality_bound(const BatteryModel& m) {
    const std::size_t N = cells(m);
    std::vector<SupportTerm> terms;
    if (const auto* s = std::get_if<SpinBlock>(&m)) {
        // supports and norms only; skip building dense local operators for big blocks
        for (std::size_t j = 0; j < s->k(); ++j) {
            std::vector<std::size_t> sites;
            for (std::size_t i = 1; i <= s->r; ++i) sites.push_back(s->r * j + i);
            terms.push_back({std::move(sites), Matrix(), s->lambda});
        }
        if (s->alpha != 0.0)
            for (std::size_t i = 1; i <= N; ++i) terms.push_back({{i}, Matrix(), std::abs(s->alpha)});
    } else {
        std::vector<std::size_t> all(N);
        for (std::size_t i = 0; i < N; ++i) all[i] = i + 1;
        terms.push_back({std::move(all), Matrix(), lambda_of(m)});
    }
    return locality_bound(terms, N, eps0_of(m), lemma1_metric(m) * static_cast<double>(N));
}

// ----------------------------------------------------------------------------
// Gaussian limit at q = 1/2
// ----------------------------------------------------------------------------

struct GaussianComparison {
    double sup_deviation;   // max over bins |binned mass − Gaussian mass|
    double skewness;
    double skewness_sqrtN;
    double sigma_model;     // sqrt(N |g''(0)|)
    double sigma_fitted;    // sqrt(κ2) of the atoms
    std::size_t bins;
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Coarse-grained atoms against N(E0max, N|g''(0)|). g'' must be negative.
inline GaussianComparison gaussian_limit_compare(const WorkQuasiDistribution& d, double g2, double e0max_value,
                                                 std::size_t N, std::size_t bins = 101) {
    if (!(g2 < 0)) throw ValidationError("gaussian_limit_compare: g''(0) must be negative (degenerate Gaussian)");
    GaussianComparison r{};
    r.bins = bins;
    r.sigma_model = std::sqrt(static_cast<double>(N) * -g2);
    const CumulantSet k = cumulants(d, 3);
    r.sigma_fitted = std::sqrt(std::max(0.0, k[2]));
    r.skewness = k[2] > 0 ? k[3] / std::pow(k[2], 1.5) : 0.0;
    r.skewness_sqrtN = r.skewness * std::sqrt(static_cast<double>(N));
    const auto hist = bin_atoms(d, bins);
    const double width = hist.size() > 1 ? hist[1].center - hist[0].center : 1.0;
    for (const auto& b : hist) {
        const double lo = (b.center - 0.5 * width - e0max_value) / r.sigma_model;
        const double hi = (b.center + 0.5 * width - e0max_value) / r.sigma_model;
        r.sup_deviation = std::max(r.sup_deviation, std::abs(b.mass - (normal_cdf(hi) - normal_cdf(lo))));
    }
    return r;
}

/// Negative mass after binning atoms at width √N ε0 (the resolution at which
/// the rescaled distribution p(w/√N) is read).
inline double scaled_negative_mass(const WorkQuasiDistribution& d, std::size_t N, double eps0) {
    const double width = std::sqrt(static_cast<double>(N)) * eps0;
    const double lo = d.atoms().front().w;
    std::vector<double> mass;
    for (const auto& a : d.atoms()) {
        const auto b = static_cast<std::size_t>(std::floor((a.w - lo) / width));
        if (b >= mass.size()) mass.resize(b + 1, 0.0);
        mass[b] += a.p;
    }
    double neg = 0.0;
    for (double x : mass)
        if (x < 0) neg -= x;
    return neg;
}

// ----------------------------------------------------------------------------
// Power-law fits
// ----------------------------------------------------------------------------

struct PowerLawFit {
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double prefactor = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;
};

/// Least squares of ln y on ln x; needs ≥ 2 points with x, y > 0.
inline PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    PowerLawFit f;
    if (x.size() != y.size() || x.size() < 2) return f;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0)) return f;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0) return f;
    f.exponent = sxy / sxx;
    f.prefactor = std::exp(my - f.exponent * mx);
    f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    f.valid = true;
    return f;
}

// ----------------------------------------------------------------------------
// Sweep pipeline
// ----------------------------------------------------------------------------

struct AdvantageReport {
    std::size_t N = 0, r = 0, k = 0;
    double lambda = 0, tau = 0;
    double lemma1_metric = 0;
    double kappa3_over_N = 0;
    double kappa3_prime_over_N = 0;
    double negativity = 1;
    double min_weight = 0;
    double skewness = 0;
    std::size_t locality_radius = 0;
    double scaled_negative_mass = 0;
    double gaussian_sup_deviation = std::numeric_limits<double>::quiet_NaN();
    double sigma_model = std::numeric_limits<double>::quiet_NaN();   // sqrt(N|g''(0)|)
    double sigma_fitted = std::numeric_limits<double>::quiet_NaN();  // sqrt(κ2)
    double sigma_alt = std::numeric_limits<double>::quiet_NaN();     // λ²/(r√N)
    double skewness_sqrtN = 0;
    std::size_t atoms = 0;
    std::string route;
    SnapResult snap;

    /// min_weight < −1e-9 ⇔ 𝒩 > 1 + 1e-9.
    bool signals_consistent() const { return (min_weight < -1e-9) == (negativity > 1 + 1e-9); }
};

struct SweepOptions {
    double q = 0.5;
    double eps0 = 1.0;
    double lambda_per_r = 1.0;  // λ = lambda_per_r · r · ε0
    double alpha = 0.0;
    double negativity_threshold = 1e-6;
    double min_exponent = 0.2;
    double min_r2 = 0.99;
    std::size_t bins = 101;
};

/// One sweep row for a spin-block model (closed-form engines, any N).
inline AdvantageReport advantage_report(const SpinBlock& m, const SweepOptions& opt, const SnapResult& snap) {
    m.validate();
    AdvantageReport a;
    a.N = m.N;
    a.r = m.r;
    a.k = m.k();
    a.lambda = m.lambda;
    a.tau = charging_time(m);
    a.snap = snap;
    a.lemma1_metric = lemma1_metric(m);
    const Route route = resolved_route(m, opt.q);
    a.route = to_string(route);
    const WorkQuasiDistribution d = model_pq(m, opt.q, route);
    const WorkQuasiDistribution d0 = model_pq(m, 0.0);
    const CumulantSet kq = cumulants(d, 3);
    a.kappa3_over_N = kq[3] / static_cast<double>(m.N);
    a.kappa3_prime_over_N = cumulants(d0, 3)[3] / static_cast<double>(m.N);
    a.negativity = negativity(d);
    a.min_weight = min_weight(d);
    a.skewness = kq[2] > 0 ? kq[3] / std::pow(kq[2], 1.5) : 0.0;
    a.skewness_sqrtN = a.skewness * std::sqrt(static_cast<double>(m.N));
    a.locality_radius = locality_bound(BatteryModel(m)).radius;
    a.scaled_negative_mass = scaled_negative_mass(d, m.N, m.eps0);
    a.atoms = d.size();
    if (m.alpha == 0.0 && opt.q == 0.5) {
        const auto gd = spinblock_gq_derivs(m, opt.q);
        const auto gc = gaussian_limit_compare(d, gd.g2.real(), e0max(BatteryModel(m)), m.N, opt.bins);
        a.gaussian_sup_deviation = gc.sup_deviation;
        a.sigma_model = gc.sigma_model;
        a.sigma_fitted = gc.sigma_fitted;
        a.sigma_alt = m.lambda * m.lambda / (static_cast<double>(m.r) * std::sqrt(static_cast<double>(m.N)));
    }
    if (!a.signals_consistent())
        throw InvariantError("advantage report N=" + std::to_string(m.N) + ": min_weight and negativity disagree");
    return a;
}

struct Verdict {
    std::string family;
    bool negativity_present = false;     // some row has min_weight < −threshold
    bool negativity_persistent = false;  // every row does
    bool negativity_growing = false;     // 𝒩 larger at the largest N than at the smallest
    bool tau_decreasing = false;         // strictly decreasing in N
    bool tau_to_zero = false;            // decreasing with fitted exponent < −min_exponent, R² > min_r2
    bool implication_holds = true;       // negativity (persistent, growing) ⇒ τ → 0
    bool converse_counterexample = false;  // τ → 0 without negativity
    PowerLawFit lemma1_fit, tau_fit, negativity_fit;
    bool lemma1_growing = false;
    std::vector<std::string> flags;
};

inline Verdict sweep_verdict(const std::string& family, const std::vector<AdvantageReport>& rows, const SweepOptions& opt) {
    Verdict v;
    v.family = family;
    if (rows.size() < 2) {
        v.flags.push_back("fewer than two feasible sweep points; trends undetermined");
        return v;
    }
    std::vector<double> n, tau, l1, neg;
    std::size_t negative_rows = 0;
    for (const auto& r : rows) {
        n.push_back(static_cast<double>(r.N));
        tau.push_back(r.tau);
        l1.push_back(r.lemma1_metric);
        neg.push_back(r.negativity - 1.0);
        if (r.min_weight < -opt.negativity_threshold) ++negative_rows;
        if (!r.signals_consistent()) v.flags.push_back("negativity signals disagree at N=" + std::to_string(r.N));
    }
    for (std::size_t i = 1; i < n.size(); ++i)
        if (!(n[i] > n[i - 1])) v.flags.push_back("N list not strictly increasing");
    v.negativity_present = negative_rows > 0;
    v.negativity_persistent = negative_rows == rows.size();
    v.negativity_growing = rows.back().negativity > rows.front().negativity;
    v.tau_decreasing = true;
    for (std::size_t i = 1; i < tau.size(); ++i) v.tau_decreasing = v.tau_decreasing && tau[i] < tau[i - 1];
    v.tau_fit = fit_power_law(n, tau);
    v.tau_to_zero = v.tau_decreasing && v.tau_fit.valid && v.tau_fit.exponent < -opt.min_exponent && v.tau_fit.r2 > opt.min_r2;
    v.lemma1_fit = fit_power_law(n, l1);
    v.lemma1_growing = v.lemma1_fit.valid && v.lemma1_fit.exponent > opt.min_exponent && v.lemma1_fit.r2 > opt.min_r2;
    v.negativity_fit = fit_power_law(n, neg);
    if (v.negativity_persistent && v.negativity_growing) v.implication_holds = v.tau_to_zero;
    v.converse_counterexample = v.tau_to_zero && !v.negativity_present;
    if (!v.implication_holds) v.flags.push_back("negativity persists and grows but tau does not decrease to 0");
    if (v.negativity_present && !v.negativity_persistent) v.flags.push_back("negativity appears at some N only");
    bool monotone_neg = true;
    for (std::size_t i = 1; i < rows.size(); ++i) monotone_neg = monotone_neg && rows[i].negativity >= rows[i - 1].negativity;
    if (v.negativity_present && !monotone_neg) v.flags.push_back("negativity is non-monotone across the sweep");
    bool tau_monotone = true;
    for (std::size_t i = 1; i < tau.size(); ++i) tau_monotone = tau_monotone && tau[i] <= tau[i - 1];
    if (!tau_monotone) v.flags.push_back("tau increases somewhere along the sweep");
    return v;
}

struct SweepResult {
    std::vector<AdvantageReport> rows;
    std::vector<SnapResult> skipped;
    Verdict verdict;
};

/// Spin-block family r = rule(N), λ = lambda_per_r · r · ε0, over N_list.
/// Rows whose N has no admissible block size are skipped and reported.
inline SweepResult theorem_pipeline(const BlockRule& rule, const std::vector<std::size_t>& N_list,
                                    const SweepOptions& opt = {}) {
    SweepResult res;
    for (std::size_t N : N_list) {
        const SnapResult snap = snap_block_size(N, rule.requested(N));
        if (!snap.feasible) {
            res.skipped.push_back(snap);
            continue;
        }
        SpinBlock m{N, snap.r, opt.lambda_per_r * static_cast<double>(snap.r) * opt.eps0, opt.eps0, opt.alpha};
        res.rows.push_back(advantage_report(m, opt, snap));
    }
    res.verdict = sweep_verdict(rule.describe(), res.rows, opt);
    return res;
}

} // namespace qworklab
