// models.hpp — battery models: the two-level collective charger and the
// spin-block charger (optionally perturbed by a uniform transverse field).
// Dense exact-engine builders plus closed forms for X_q, g_q and p_q.
//
// Site s (1-based) of an N-cell battery is bit N−s of the basis index, so
// site 1 is the most significant factor of the Kronecker product. |0> is the
// empty cell and |1> the charged one; h_i = eps0 |1><1|.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "qworklab/atoms.hpp"
#include "qworklab/errors.hpp"
#include "qworklab/format.hpp"
#include "qworklab/operator_core.hpp"
#include "qworklab/quasiprob.hpp"

namespace qworklab {

// ----------------------------------------------------------------------------
// Model descriptions
// ----------------------------------------------------------------------------

/// H1 = λ(|E1><E0| + |E0><E1|) with |E0> = |0..0>, |E1> = |1..1>.
struct TwoLevelCollective {
    std::size_t N = 2;
    double eps0 = 1.0;
    double lambda = 1.0;

    void validate() const {
        if (N < 1) throw ValidationError("N: must be >= 1");
        if (!(eps0 > 0) || !std::isfinite(eps0)) throw ValidationError("epsilon0: must be positive and finite");
        if (!(lambda > 0) || !std::isfinite(lambda)) throw ValidationError("lambda: must be positive and finite");
    }
};

/// H1 = λ Σ_j ⊗_{i in block j} σ^x_i over k disjoint blocks of r contiguous
/// cells, plus H_p = α Σ_i σ^x_i when α ≠ 0.
struct SpinBlock {
    std::size_t N = 8;
    std::size_t r = 2;
    double lambda = 2.0;
    double eps0 = 1.0;
    double alpha = 0.0;

    std::size_t k() const { return r == 0 ? 0 : N / r; }

    void validate() const {
        if (N < 1) throw ValidationError("N: must be >= 1");
        if (r < 1) throw ValidationError("r: must be >= 1");
        if (N % r != 0)
            throw ValidationError("r: block size " + std::to_string(r) + " does not divide N=" + std::to_string(N));
        if (!(eps0 > 0) || !std::isfinite(eps0)) throw ValidationError("epsilon0: must be positive and finite");
        if (!(lambda > 0) || !std::isfinite(lambda)) throw ValidationError("lambda: must be positive and finite");
        if (!std::isfinite(alpha)) throw ValidationError("alpha: must be finite");
    }
};

using BatteryModel = std::variant<TwoLevelCollective, SpinBlock>;

inline void validate(const BatteryModel& m) {
    std::visit([](const auto& x) { x.validate(); }, m);
}
inline std::size_t cells(const BatteryModel& m) {
    return std::visit([](const auto& x) { return x.N; }, m);
}
inline double eps0_of(const BatteryModel& m) {
    return std::visit([](const auto& x) { return x.eps0; }, m);
}
inline double lambda_of(const BatteryModel& m) {
    return std::visit([](const auto& x) { return x.lambda; }, m);
}
inline double e0max(const BatteryModel& m) { return static_cast<double>(cells(m)) * eps0_of(m); }
inline const char* model_name(const BatteryModel& m) {
    return std::holds_alternative<TwoLevelCollective>(m) ? "two_level" : "spin_block";
}

/// τ = π/(2λ) for both models (two-level: ω = 2λ, τ = π/ω).
inline double charging_time(const BatteryModel& m) {
    const double l = lambda_of(m);
    if (!(l > 0)) throw ValidationError("lambda: must be positive");
    return std::numbers::pi / (2.0 * l);
}

// ----------------------------------------------------------------------------
// Operators (dense)
// ----------------------------------------------------------------------------

inline std::size_t site_bit(std::size_t N, std::size_t site) { return N - site; }

inline std::uint64_t block_mask(std::size_t N, std::size_t first_site, std::size_t r) {
    std::uint64_t m = 0;
    for (std::size_t s = first_site; s < first_site + r; ++s) m |= std::uint64_t{1} << site_bit(N, s);
    return m;
}

inline std::size_t dense_dim(const BatteryModel& m) {
    validate(m);
    return checked_power(2, cells(m));
}

/// H0 = Σ_i eps0 |1><1|_i (diagonal: eps0 × number of charged cells).
inline HermitianOperator h0_operator(const BatteryModel& m) {
    const std::size_t dim = dense_dim(m);
    const double e = eps0_of(m);
    Matrix h = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i)
        h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = e * std::popcount(static_cast<std::uint64_t>(i));
    return HermitianOperator(std::move(h));
}

/// Spectral inversion E0max − H0.
inline HermitianOperator h0_tilde_operator(const BatteryModel& m) {
    const HermitianOperator h0 = h0_operator(m);
    return HermitianOperator(e0max(m) * Matrix::Identity(h0.dim(), h0.dim()) - h0.matrix());
}

inline HermitianOperator h1_operator(const BatteryModel& m) {
    const std::size_t dim = dense_dim(m);
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix h = Matrix::Zero(n, n);
    if (const auto* t = std::get_if<TwoLevelCollective>(&m)) {
        h(n - 1, 0) = t->lambda;
        h(0, n - 1) = t->lambda;
        return HermitianOperator(std::move(h));
    }
    const auto& s = std::get<SpinBlock>(m);
    std::vector<std::uint64_t> flips;
    for (std::size_t j = 0; j < s.k(); ++j) flips.push_back(block_mask(s.N, s.r * j + 1, s.r));
    for (std::uint64_t i = 0; i < dim; ++i) {
        for (auto f : flips) h(static_cast<Eigen::Index>(i ^ f), static_cast<Eigen::Index>(i)) += s.lambda;
        if (s.alpha != 0.0)
            for (std::size_t b = 0; b < s.N; ++b)
                h(static_cast<Eigen::Index>(i ^ (std::uint64_t{1} << b)), static_cast<Eigen::Index>(i)) += s.alpha;
    }
    return HermitianOperator(std::move(h));
}

/// U_I = ⊗σ^x (swaps |0..0> and |1..1>).
inline Matrix inversion_unitary(std::size_t N) {
    const std::size_t dim = checked_power(2, N);
    const std::uint64_t all = dim - 1;
    Matrix u = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::uint64_t i = 0; i < dim; ++i) u(static_cast<Eigen::Index>(i ^ all), static_cast<Eigen::Index>(i)) = 1.0;
    return u;
}

/// One term v_X of H1 with its support X (1-based sites) and operator norm.
struct SupportTerm {
    std::vector<std::size_t> sites;
    Matrix local;  // acts on the 2^|X| space of the support, sites in order
    double norm;
};

/// H1 as a sum of labelled support terms.
inline std::vector<SupportTerm> charging_terms(const BatteryModel& m) {
    validate(m);
    std::vector<SupportTerm> out;
    if (const auto* t = std::get_if<TwoLevelCollective>(&m)) {
        const std::size_t dim = checked_power(2, t->N);
        Matrix v = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        v(static_cast<Eigen::Index>(dim) - 1, 0) = t->lambda;
        v(0, static_cast<Eigen::Index>(dim) - 1) = t->lambda;
        std::vector<std::size_t> all(t->N);
        for (std::size_t i = 0; i < t->N; ++i) all[i] = i + 1;
        out.push_back({std::move(all), std::move(v), t->lambda});
        return out;
    }
    const auto& s = std::get<SpinBlock>(m);
    for (std::size_t j = 0; j < s.k(); ++j) {
        std::vector<std::size_t> sites;
        Matrix v = Matrix::Identity(1, 1);
        for (std::size_t i = 1; i <= s.r; ++i) {
            sites.push_back(s.r * j + i);
            v = ops::kron(v, ops::sigma_x());
        }
        out.push_back({std::move(sites), s.lambda * v, s.lambda});
    }
    if (s.alpha != 0.0)
        for (std::size_t i = 1; i <= s.N; ++i) out.push_back({{i}, s.alpha * ops::sigma_x(), std::abs(s.alpha)});
    return out;
}

/// Σ_X embed(v_X); an independent construction of H1 for cross-checks.
inline Matrix assemble_terms(const std::vector<SupportTerm>& terms, std::size_t N) {
    const std::size_t dim = checked_power(2, N);
    Matrix h = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (const auto& t : terms) {
        const std::size_t w = t.sites.size();
        bool contiguous = true;
        for (std::size_t i = 1; i < w; ++i) contiguous = contiguous && t.sites[i] == t.sites[i - 1] + 1;
        if (!contiguous) throw ValidationError("assemble_terms: only contiguous supports are supported");
        const std::size_t left = t.sites.front() - 1, right = N - t.sites.back();
        h += ops::kron(ops::kron(ops::identity(static_cast<Eigen::Index>(std::size_t{1} << left)), t.local),
                       ops::identity(static_cast<Eigen::Index>(std::size_t{1} << right)));
    }
    return h;
}

// ----------------------------------------------------------------------------
// Exact engine
// ----------------------------------------------------------------------------

/// The quench protocol H0 → H1 on (0, τ) → H0, with the work window [t1, τ].
struct ExactProcess {
    BatteryModel model;
    double tau = 0.0;
    double t1 = 0.0;
    HermitianOperator h0, h1;
    SpectralDecomposition h0s, h1s;
    PureState psi0, psi_t1, psi_tau;
    Matrix u_tau_t1;  // e^{−i H1 (τ − t1)}

    /// p_q(w) of the work done in [t1, τ]: H(t1) = H1 and H(τ) = H0.
    WorkQuasiDistribution pq(double q) const { return build_pq_direct(psi_t1, h1s, h0s, u_tau_t1, q); }
    cplx X_q(double u, double q) const { return X_q_trace(psi_tau, h0s, h1s, u, q); }
    cplx chi_q(double u, double q) const { return chi_q_trace(psi_tau, h0s, h1s, u, q); }
};

inline ExactProcess exact_process(const BatteryModel& m, double t1 = -1.0) {
    validate(m);
    ExactProcess p;
    p.model = m;
    p.tau = charging_time(m);
    p.t1 = t1 < 0 ? 0.5 * p.tau : t1;
    if (!(p.t1 > 0 && p.t1 < p.tau))
        throw ValidationError("t1: must lie strictly inside (0, tau=" + fmt17(p.tau) + ")");
    p.h0 = h0_operator(m);
    p.h1 = h1_operator(m);
    p.h0s = diagonalize(p.h0);
    p.h1s = diagonalize(p.h1);
    p.psi0 = PureState::basis(p.h0.dim(), 0);
    p.psi_t1 = evolve(p.psi0, p.h1s, p.t1);
    p.psi_tau = evolve(p.psi0, p.h1s, p.tau);
    p.u_tau_t1 = p.h1s.propagator(p.tau - p.t1);
    return p;
}

/// |ψ(t)> = e^{−iH1 t}|0..0>. Closed form for the two-level model and the
/// unperturbed spin-block model; exact evolution otherwise.
inline PureState final_state(const BatteryModel& m, double t) {
    validate(m);
    const double tau = charging_time(m);
    if (t < 0 || t > tau * (1 + 1e-12)) throw ValidationError("t: must lie in [0, tau=" + fmt17(tau) + "]");
    const auto dim = static_cast<Eigen::Index>(dense_dim(m));
    if (const auto* tl = std::get_if<TwoLevelCollective>(&m)) {
        Vector v = Vector::Zero(dim);
        v(0) = std::cos(tl->lambda * t);
        v(dim - 1) = -kI * std::sin(tl->lambda * t);
        return PureState::normalized(std::move(v));
    }
    const auto& s = std::get<SpinBlock>(m);
    if (s.alpha != 0.0) return evolve(PureState::basis(dim, 0), diagonalize(h1_operator(m)), t);
    // per block: cos(λt)|0..0> − i sin(λt)|1..1>
    Vector block = Vector::Zero(static_cast<Eigen::Index>(std::size_t{1} << s.r));
    block(0) = std::cos(s.lambda * t);
    block(block.size() - 1) = -kI * std::sin(s.lambda * t);
    Vector v = Vector::Ones(1);
    for (std::size_t j = 0; j < s.k(); ++j) v = Eigen::kroneckerProduct(v, block).eval();
    return PureState::normalized(std::move(v));
}

// ----------------------------------------------------------------------------
// Two-level closed forms
// ----------------------------------------------------------------------------

/// c_q(u) = cos(λqu) cos(λ(1−q)u), s_q(u) = sin(λqu) sin(λ(1−q)u).
inline double c_q(double lambda, double q, double u) { return std::cos(lambda * q * u) * std::cos(lambda * (1 - q) * u); }
inline double s_q(double lambda, double q, double u) { return std::sin(lambda * q * u) * std::sin(lambda * (1 - q) * u); }

/// X_q(u) = e^{iuNε0}(c_q − s_q e^{−iuNε0}).
inline cplx two_level_Xq(const TwoLevelCollective& m, double u, double q) {
    m.validate();
    const double e = static_cast<double>(m.N) * m.eps0;
    return std::polar(1.0, u * e) * (c_q(m.lambda, q, u) - s_q(m.lambda, q, u) * std::polar(1.0, -u * e));
}

/// p_q(w) for the window [τ/2, τ]: background ¼ at E_k − E_± plus the
/// interference part −¼ at E0 − qE_± − (1−q)E_∓ and +¼ at E1 − qE_± − (1−q)E_∓.
inline WorkQuasiDistribution two_level_pq(const TwoLevelCollective& m, double q, double merge_tol = -1.0) {
    m.validate();
    const double e1 = static_cast<double>(m.N) * m.eps0, l = m.lambda;
    if (merge_tol < 0) merge_tol = default_merge_tol(e1);
    std::vector<Atom<double>> a;
    for (double ek : {0.0, e1})
        for (double ep : {l, -l}) a.push_back({ek - ep, 0.25});
    for (double sgn : {1.0, -1.0}) {
        const double shift = -q * sgn * l - (1 - q) * (-sgn) * l;
        a.push_back({0.0 + shift, -0.25});
        a.push_back({e1 + shift, 0.25});
    }
    return WorkQuasiDistribution(std::move(a), merge_tol, kPruneCutoff);
}

// ----------------------------------------------------------------------------
// Spin-block closed forms
// ----------------------------------------------------------------------------

inline void require_unperturbed(const SpinBlock& m, const char* what) {
    if (m.alpha != 0.0) throw ValidationError(std::string(what) + ": alpha must be 0 (use the perturbed evaluator)");
}

/// Per-block factor c_q − s_q e^{−iurε0}.
inline cplx spinblock_block_factor(const SpinBlock& m, double u, double q) {
    return c_q(m.lambda, q, u) - s_q(m.lambda, q, u) * std::polar(1.0, -u * static_cast<double>(m.r) * m.eps0);
}

/// X_q(u) = e^{iuE0max}(c_q − s_q e^{−iurε0})^k.
inline cplx spinblock_Xq_closed(const SpinBlock& m, double u, double q) {
    m.validate();
    require_unperturbed(m, "spinblock_Xq_closed");
    return std::polar(1.0, u * static_cast<double>(m.N) * m.eps0) *
           std::pow(spinblock_block_factor(m, u, q), static_cast<int>(m.k()));
}

/// X_q(u) for the spin-block model with any α, from the block product form.
/// Each block starts in ⊗|φ>, |φ> = e^{−iατσ^x}|1>, up to a global phase;
/// with `rotated_state` false |φ> = |1> instead (the fully charged state).
inline cplx spinblock_Xq_product(const SpinBlock& m, double u, double q, bool rotated_state = true) {
    m.validate();
    const double tau = charging_time(m);
    Matrix phi = Matrix::Zero(2, 1);
    phi(1, 0) = 1.0;
    const Matrix sx = ops::sigma_x();
    auto rot = [&](double theta) {  // e^{−iθσ^x}
        return Matrix(std::cos(theta) * ops::identity(2) - kI * std::sin(theta) * sx);
    };
    if (rotated_state) phi = rot(m.alpha * tau) * phi;
    Matrix n = Matrix::Identity(2, 2);
    n(1, 1) = std::polar(1.0, u * m.eps0);
    const Matrix mm = rot(u * (1 - q) * m.alpha) * n * rot(u * q * m.alpha);
    const Matrix phix = sx * phi;
    const cplx A = (phi.adjoint() * mm * phi)(0, 0);
    const cplx B = (phix.adjoint() * mm * phi)(0, 0);
    const cplx C = (phi.adjoint() * mm * phix)(0, 0);
    const cplx D = (phix.adjoint() * mm * phix)(0, 0);
    const double c1 = std::cos((1 - q) * m.lambda * u), s1 = std::sin((1 - q) * m.lambda * u);
    const double c2 = std::cos(q * m.lambda * u), s2 = std::sin(q * m.lambda * u);
    const int r = static_cast<int>(m.r);
    const cplx F = c1 * c2 * std::pow(A, r) - kI * c1 * s2 * std::pow(C, r) - kI * s1 * c2 * std::pow(B, r) -
                   s1 * s2 * std::pow(D, r);
    return std::pow(F, static_cast<int>(m.k()));
}

/// χ_q = ½(X_q + X_{1−q}) for either model.
inline cplx model_chi(const BatteryModel& m, double u, double q) {
    if (const auto* t = std::get_if<TwoLevelCollective>(&m))
        return 0.5 * (two_level_Xq(*t, u, q) + two_level_Xq(*t, u, 1 - q));
    const auto& s = std::get<SpinBlock>(m);
    if (s.alpha == 0.0) return 0.5 * (spinblock_Xq_closed(s, u, q) + spinblock_Xq_closed(s, u, 1 - q));
    return 0.5 * (spinblock_Xq_product(s, u, q) + spinblock_Xq_product(s, u, 1 - q));
}

inline cplx model_Xq(const BatteryModel& m, double u, double q) {
    if (const auto* t = std::get_if<TwoLevelCollective>(&m)) return two_level_Xq(*t, u, q);
    const auto& s = std::get<SpinBlock>(m);
    return s.alpha == 0.0 ? spinblock_Xq_closed(s, u, q) : spinblock_Xq_product(s, u, q);
}

// ----------------------------------------------------------------------------
// Branch-tracked logarithm
// ----------------------------------------------------------------------------

/// ln f(u) continued along the real axis from f(0) = 1 (log 0), evaluated
/// at every grid point. Steps are at most `max_step` and are bisected until
/// the phase moves by less than π/4 per step; |f| < 1e-13 on the path raises
/// BranchError carrying the offending u.
inline std::vector<cplx> continued_log(const std::function<cplx(double)>& f, const std::vector<double>& u_grid,
                                       double max_step) {
    if (!(max_step > 0)) throw ValidationError("continued_log: step must be positive");
    std::vector<cplx> out(u_grid.size());
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < u_grid.size(); ++i) (u_grid[i] >= 0 ? pos : neg).push_back(i);
    std::sort(pos.begin(), pos.end(), [&](auto a, auto b) { return u_grid[a] < u_grid[b]; });
    std::sort(neg.begin(), neg.end(), [&](auto a, auto b) { return u_grid[a] > u_grid[b]; });

    auto check = [&](double u, cplx z) {
        if (!(std::abs(z) >= 1e-13)) throw BranchError("logarithm argument vanishes on the continuation path", u);
    };
    for (const auto* side : {&pos, &neg}) {
        double u = 0.0;
        cplx z = f(0.0);
        check(0.0, z);
        double theta = std::arg(z);
        for (std::size_t idx : *side) {
            const double target = u_grid[idx];
            while (u != target) {
                double h = std::clamp(target - u, -max_step, max_step);
                cplx zn;
                double dth = 0.0;
                for (int depth = 0;; ++depth) {
                    zn = f(u + h);
                    check(u + h, zn);
                    dth = std::arg(zn / z);
                    if (std::abs(dth) < std::numbers::pi / 4 || depth > 60) break;
                    h *= 0.5;
                }
                u = (std::abs(target - (u + h)) < 1e-15 * std::max(1.0, std::abs(target))) ? target : u + h;
                theta += dth;
                z = zn;
            }
            out[idx] = cplx(std::log(std::abs(z)), theta);
        }
    }
    return out;
}

/// g_q(u) = (1/r) ln(c_q − s_q e^{−iurε0}), continued from u = 0.
inline CharacteristicSamples spinblock_gq(const SpinBlock& m, const std::vector<double>& u_grid, double q) {
    m.validate();
    require_unperturbed(m, "spinblock_gq");
    const double rate = m.lambda + static_cast<double>(m.r) * m.eps0;
    auto logs = continued_log([&](double u) { return spinblock_block_factor(m, u, q); }, u_grid, 0.1 / rate);
    CharacteristicSamples s;
    s.u = u_grid;
    s.kind = SampleKind::g_q;
    s.q = q;
    for (auto& l : logs) s.values.push_back(l / static_cast<double>(m.r));
    return s;
}

inline cplx spinblock_gq(const SpinBlock& m, double u, double q) { return spinblock_gq(m, std::vector<double>{u}, q).values[0]; }

struct GDerivatives {
    cplx g1, g2, g3;  // g'(0), g''(0), g'''(0)
};

/// Analytic derivatives: g' = 0, g'' = −λ²/r, g''' = 6iq(1−q)ε0λ².
inline GDerivatives spinblock_gq_derivs(const SpinBlock& m, double q) {
    m.validate();
    require_unperturbed(m, "spinblock_gq_derivs");
    return {0.0, -m.lambda * m.lambda / static_cast<double>(m.r), kI * (6 * q * (1 - q) * m.eps0 * m.lambda * m.lambda)};
}

// ----------------------------------------------------------------------------
// Block atoms, convolution and Fourier routes
// ----------------------------------------------------------------------------

/// Atoms of one block's measure, whose characteristic function is
/// e^{iurε0}(c_q − s_q e^{−iurε0}) = c_q e^{iurε0} − s_q:
///   rε0 ± λ and rε0 ± (2q−1)λ with ¼; ±(2q−1)λ with −¼; ±λ with +¼.
/// Validated against the closed form on a 64-point grid.
inline AtomSet<double> spinblock_block_atoms(const SpinBlock& m, double q) {
    m.validate();
    require_unperturbed(m, "spinblock_block_atoms");
    const double re = static_cast<double>(m.r) * m.eps0, l = m.lambda, d = (2 * q - 1) * m.lambda;
    std::vector<Atom<double>> a = {{re + l, 0.25}, {re - l, 0.25}, {re + d, 0.25}, {re - d, 0.25},
                                   {d, -0.25},     {-d, -0.25},    {l, 0.25},      {-l, 0.25}};
    AtomSet<double> set(std::move(a), default_merge_tol(re + l), kPruneCutoff);
    const double umax = 2 * std::numbers::pi / std::max(1e-300, std::min(m.eps0, m.lambda));
    for (double u : uniform_grid(-umax, umax, 64)) {
        const cplx want = std::polar(1.0, u * re) * spinblock_block_factor(m, u, q);
        if (std::abs(characteristic_at(set, u) - want) > 1e-10)
            throw InvariantError("spinblock_block_atoms: characteristic mismatch at u=" + fmt17(u));
    }
    return set;
}

/// g-derivatives from the cumulants of the block measure (independent of
/// the analytic expressions): ln Φ_b(u) = iurε0 + r g(u).
inline GDerivatives gq_derivs_from_block_atoms(const SpinBlock& m, double q) {
    const AtomSet<double> b = spinblock_block_atoms(m, q);
    const auto k = cumulants_of(b, 3);
    const double r = static_cast<double>(m.r);
    return {kI * (k[0] - r * m.eps0) / r, -k[1] / r, -kI * k[2] / r};
}

/// Total variation of a measure; bounds the error amplification of
/// repeated floating-point convolution.
template <class W>
double total_variation(const AtomSet<W>& s) {
    double t = 0.0;
    for (const auto& a : s.atoms()) t += std::abs(a.p);
    return t;
}

enum class Route { automatic, convolution, fourier };

inline const char* to_string(Route r) {
    switch (r) {
        case Route::automatic: return "auto";
        case Route::convolution: return "convolution";
        case Route::fourier: return "fourier";
    }
    return "?";
}

/// Lattice for Fourier inversion: spacing from the model's frequencies,
/// window bounding every w = E0_b − (1−q)e_a − q e_c with e in spec(H1).
inline EnergyLattice model_lattice(const BatteryModel& m, double q) {
    validate(m);
    double h1norm = 0.0;
    std::vector<double> freqs;
    if (const auto* t = std::get_if<TwoLevelCollective>(&m)) {
        h1norm = t->lambda;
        freqs = {static_cast<double>(t->N) * t->eps0, t->lambda, t->lambda * (2 * q - 1)};
    } else {
        const auto& s = std::get<SpinBlock>(m);
        h1norm = s.lambda * static_cast<double>(s.k()) + std::abs(s.alpha) * static_cast<double>(s.N);
        freqs = {s.eps0, s.lambda * q, s.lambda * (1 - q), s.alpha * q, s.alpha * (1 - q)};
    }
    const double spread = (std::abs(q) + std::abs(1 - q)) * h1norm;
    return EnergyLattice::covering(common_lattice(freqs), -spread, e0max(m) + spread);
}

/// p_q by Fourier inversion of χ_q on the model lattice.
inline WorkQuasiDistribution model_pq_fourier(const BatteryModel& m, double q) {
    const EnergyLattice L = model_lattice(m, q);
    auto d = invert_function([&](double u) { return model_chi(m, u, q); }, L, SampleKind::chi_q, q);
    return WorkQuasiDistribution(d.atom_set(), default_merge_tol(e0max(m)));
}

/// Convolution routes keep their rounding error below this bound:
/// TV(block)^k · 1e-16 ≲ 1e-12.
inline constexpr double kMaxConvolutionGrowth = 1e4;

/// p_q for the unperturbed spin-block model via k-fold convolution of the
/// block atoms, averaged over q and 1−q.
inline WorkQuasiDistribution spinblock_pq_convolution(const SpinBlock& m, double q) {
    require_unperturbed(m, "spinblock_pq_convolution");
    const double tol = default_merge_tol(static_cast<double>(m.N) * m.eps0);
    const auto a = convolution_power(spinblock_block_atoms(m, q), m.k(), tol, kPruneCutoff);
    const auto b = convolution_power(spinblock_block_atoms(m, 1 - q), m.k(), tol, kPruneCutoff);
    return WorkQuasiDistribution(combine(a, 0.5, b, 0.5, tol, kPruneCutoff), tol);
}

/// True when the convolution route is numerically safe for this model.
inline bool convolution_is_stable(const SpinBlock& m, double q) {
    if (m.alpha != 0.0) return false;
    const double tv = total_variation(spinblock_block_atoms(m, q));
    return std::pow(tv, static_cast<double>(m.k())) <= kMaxConvolutionGrowth;
}

/// p_q from closed forms: the two-level formula (window [τ/2, τ]), or the
/// spin-block model by convolution or Fourier inversion.
inline WorkQuasiDistribution model_pq(const BatteryModel& m, double q, Route route = Route::automatic) {
    validate(m);
    if (const auto* t = std::get_if<TwoLevelCollective>(&m))
        return route == Route::fourier ? model_pq_fourier(m, q) : two_level_pq(*t, q);
    const auto& s = std::get<SpinBlock>(m);
    if (route == Route::automatic) route = convolution_is_stable(s, q) ? Route::convolution : Route::fourier;
    if (route == Route::convolution) return spinblock_pq_convolution(s, q);
    return model_pq_fourier(m, q);
}

inline Route resolved_route(const BatteryModel& m, double q, Route route = Route::automatic) {
    if (route != Route::automatic) return route;
    if (std::holds_alternative<TwoLevelCollective>(m)) return Route::convolution;
    return convolution_is_stable(std::get<SpinBlock>(m), q) ? Route::convolution : Route::fourier;
}

// ----------------------------------------------------------------------------
// Perturbed spin block at q = 1/2
// ----------------------------------------------------------------------------

/// α_{1/2}(u) = cos²(αu/2) − e^{−iuε0} sin²(αu/2).
inline cplx alpha_half(const SpinBlock& m, double u) {
    const double c = std::cos(m.alpha * u / 2), s = std::sin(m.alpha * u / 2);
    return c * c - std::polar(1.0, -u * m.eps0) * s * s;
}

/// β_{1/2}(u) = −2i cos(λu/2) sin(λu/2) (−i cos(αu/2) sin(αu/2)(1 + e^{−iuε0}))^r.
inline cplx beta_half(const SpinBlock& m, double u) {
    const cplx inner = -kI * std::cos(m.alpha * u / 2) * std::sin(m.alpha * u / 2) * (1.0 + std::polar(1.0, -u * m.eps0));
    return -2.0 * kI * std::cos(m.lambda * u / 2) * std::sin(m.lambda * u / 2) * std::pow(inner, static_cast<int>(m.r));
}

/// Argument of the logarithm in the closed-form perturbed g_{1/2}.
inline cplx perturbed_g12_argument(const SpinBlock& m, double u) {
    const int r = static_cast<int>(m.r);
    const cplx ar = std::pow(alpha_half(m, u), r);
    return ar * c_q(m.lambda, 0.5, u) + beta_half(m, u) -
           std::conj(ar) * s_q(m.lambda, 0.5, u) * std::polar(1.0, -u * static_cast<double>(m.r) * m.eps0);
}

/// g_{1/2}(u) = (1/r) ln(α^r c + β − (α^r)* s e^{−iurε0}), continued from 0.
inline std::vector<cplx> spinblock_perturbed_g12(const SpinBlock& m, const std::vector<double>& u_grid) {
    m.validate();
    const double rate = m.lambda + static_cast<double>(m.r) * (m.eps0 + std::abs(m.alpha));
    auto logs = continued_log([&](double u) { return perturbed_g12_argument(m, u); }, u_grid, 0.1 / rate);
    for (auto& l : logs) l /= static_cast<double>(m.r);
    return logs;
}

inline cplx spinblock_perturbed_g12(const SpinBlock& m, double u) {
    return spinblock_perturbed_g12(m, std::vector<double>{u})[0];
}

/// Agreement of the closed-form perturbed g_{1/2} with exact traces.
struct FormulaDiscrepancy {
    double max_dev_exact_state = 0.0;    // vs X_{1/2} in the evolved state ψ(τ)
    double max_dev_charged_state = 0.0;  // vs X_{1/2} in |1..1>
    double max_dev_product_form = 0.0;   // product form (evolved state) vs exact trace
    bool agrees_with_exact = false;
    double overlap_charged = 0.0;  // |<1..1|ψ(τ)>|²
};

/// Compares X = e^{iuE0max} e^{N g_{1/2}} against dense traces at small N.
/// A disagreement is reported, never thrown, so callers can record it.
inline FormulaDiscrepancy perturbed_formula_check(const SpinBlock& m, const std::vector<double>& u_grid,
                                                  double tol = 1e-8) {
    m.validate();
    if (m.N > 10) throw DimensionError("perturbed_formula_check: N must be <= 10 for the dense comparison");
    const ExactProcess p = exact_process(m);
    const auto dim = p.h0.dim();
    const PureState ones = PureState::basis(dim, dim - 1);
    const auto g = spinblock_perturbed_g12(m, u_grid);
    FormulaDiscrepancy out;
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        const double u = u_grid[i];
        const cplx x = std::polar(1.0, u * e0max(m)) * std::exp(static_cast<double>(m.N) * g[i]);
        out.max_dev_exact_state = std::max(out.max_dev_exact_state, std::abs(x - p.X_q(u, 0.5)));
        out.max_dev_charged_state =
            std::max(out.max_dev_charged_state, std::abs(x - X_q_trace(ones, p.h0s, p.h1s, u, 0.5)));
        out.max_dev_product_form =
            std::max(out.max_dev_product_form, std::abs(spinblock_Xq_product(m, u, 0.5) - p.X_q(u, 0.5)));
    }
    out.agrees_with_exact = out.max_dev_exact_state <= tol;
    out.overlap_charged = std::norm(p.psi_tau.amplitudes()(dim - 1));
    return out;
}

// ----------------------------------------------------------------------------
// Block-size snapping and presets
// ----------------------------------------------------------------------------

struct SnapResult {
    std::size_t N_requested = 0;
    double r_requested = 0.0;
    std::size_t N = 0, r = 0, k = 0;
    bool feasible = false;
    std::string reason;
};

/// Divisor r of N closest to r_requested on a log scale (ties go to the
/// larger divisor); infeasible when the best divisor is more than a factor 2
/// away.
inline SnapResult snap_block_size(std::size_t N, double r_requested) {
    SnapResult s;
    s.N_requested = s.N = N;
    s.r_requested = r_requested;
    if (N == 0 || !(r_requested > 0)) {
        s.reason = "N and r must be positive";
        return s;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t d = 1; d <= N; ++d) {
        if (N % d != 0) continue;
        const double dist = std::abs(std::log(static_cast<double>(d) / r_requested));
        if (dist <= best + 1e-9) {
            best = std::min(best, dist);
            s.r = d;
        }
    }
    s.k = N / s.r;
    s.feasible = best <= std::log(2.0) + 1e-12;
    if (!s.feasible)
        s.reason = "no divisor of N=" + std::to_string(N) + " within a factor 2 of r=" + fmt17(r_requested);
    return s;
}

/// Block-size rule for a sweep family: fixed r or r = N^p.
struct BlockRule {
    enum Kind { fixed, power } kind = power;
    double value = 0.75;

    double requested(std::size_t N) const {
        return kind == fixed ? value : std::pow(static_cast<double>(N), value);
    }
    std::string describe() const {
        return (kind == fixed ? "fixed:" : "pow:") + fmt17(value);
    }
};

/// Figure presets: the requested N = 1000, r = N^0.75 has no integer block
/// count; the presets use the snapped factorization N = 1024, r = 256, k = 4,
/// with λ = r ε0 and ε0 = 1; fig2 adds α = 1.
struct Preset {
    std::string name;
    SpinBlock model;
    SnapResult snap;
};

inline Preset figure_preset(const std::string& name) {
    if (name != "fig1" && name != "fig2") throw ValidationError("preset: unknown preset '" + name + "' (fig1|fig2)");
    Preset p;
    p.name = name;
    p.model = SpinBlock{1024, 256, 256.0, 1.0, name == "fig2" ? 1.0 : 0.0};
    p.snap.N_requested = 1000;
    p.snap.r_requested = std::pow(1000.0, 0.75);
    p.snap.N = 1024;
    p.snap.r = 256;
    p.snap.k = 4;
    p.snap.feasible = true;
    return p;
}

} // namespace qworklab
