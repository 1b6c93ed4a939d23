// quasiprob.hpp — work quasiprobability distributions p_q(w): direct
// construction, moments and cumulants, negativity, characteristic functions,
// Fourier inversion on an energy lattice, Jensen-bound check, CSV I/O.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qworklab/atoms.hpp"
#include "qworklab/errors.hpp"
#include "qworklab/format.hpp"
#include "qworklab/operator_core.hpp"

namespace qworklab {

inline constexpr double kNormTol = 1e-9;
inline constexpr double kImagTol = 1e-9;
inline constexpr double kPruneCutoff = 1e-12;

/// Default merge tolerance for a process whose top H0 energy is e0max.
inline double default_merge_tol(double e0max) { return 1e-9 * std::max(1.0, std::abs(e0max)); }

// ----------------------------------------------------------------------------
// WorkQuasiDistribution
// ----------------------------------------------------------------------------

/// Real, normalized, possibly negative atomic distribution.
class WorkQuasiDistribution {
public:
    WorkQuasiDistribution() = default;

    /// Merges atoms closer than merge_tol, prunes |p| < prune_cutoff, and
    /// checks Σp = 1.
    WorkQuasiDistribution(std::vector<Atom<double>> atoms, double merge_tol, double prune_cutoff = 0.0)
        : set_(std::move(atoms), merge_tol, prune_cutoff), tol_(merge_tol) {
        validate();
    }

    WorkQuasiDistribution(AtomSet<double> set, double merge_tol)
        : set_(std::vector<Atom<double>>(set.atoms()), merge_tol), tol_(merge_tol) {
        validate();
    }

    /// From complex weights: merged first, then each imaginary part must be
    /// below 1e-9 before it is discarded.
    static WorkQuasiDistribution from_complex(std::vector<Atom<cplx>> atoms, double merge_tol,
                                              double prune_cutoff = 0.0) {
        auto merged = merge_atoms(std::move(atoms), merge_tol);
        std::vector<Atom<double>> real;
        real.reserve(merged.size());
        for (const auto& a : merged) {
            if (std::abs(a.p.imag()) > kImagTol)
                throw InvariantError("quasiprobability weight at w=" + fmt17(a.w) +
                                     " has imaginary part " + fmt17(a.p.imag()));
            real.push_back({a.w, a.p.real()});
        }
        return WorkQuasiDistribution(std::move(real), merge_tol, prune_cutoff);
    }

    static WorkQuasiDistribution from_complex(const AtomSet<cplx>& s, double merge_tol, double prune_cutoff = 0.0) {
        return from_complex(std::vector<Atom<cplx>>(s.atoms()), merge_tol, prune_cutoff);
    }

    static WorkQuasiDistribution point(double w) { return WorkQuasiDistribution({{w, 1.0}}, 0.0); }

    const std::vector<Atom<double>>& atoms() const { return set_.atoms(); }
    const AtomSet<double>& atom_set() const { return set_; }
    std::size_t size() const { return set_.size(); }
    double merge_tol() const { return tol_; }

private:
    void validate() const {
        if (set_.empty()) throw ValidationError("WorkQuasiDistribution: no atoms");
        if (std::abs(set_.total() - 1.0) > kNormTol)
            throw InvariantError("WorkQuasiDistribution: weights sum to " + fmt17(set_.total()) + ", not 1");
    }

    AtomSet<double> set_;
    double tol_ = 0.0;
};

inline double moment(const WorkQuasiDistribution& d, int n) {
    if (n < 0) throw ValidationError("moment: order must be >= 0");
    return raw_moment(d.atom_set(), n);
}

/// Σ|p|; exceeds 1 iff some weight is negative.
inline double negativity(const WorkQuasiDistribution& d) {
    double s = 0.0;
    for (const auto& a : d.atoms()) s += std::abs(a.p);
    return s;
}

inline double min_weight(const WorkQuasiDistribution& d) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& a : d.atoms()) m = std::min(m, a.p);
    return m;
}

inline double negative_mass(const WorkQuasiDistribution& d) {
    double s = 0.0;
    for (const auto& a : d.atoms())
        if (a.p < 0) s -= a.p;
    return s;
}

/// True when both distributions have the same atoms within tol (location and weight).
inline bool same_atoms(const WorkQuasiDistribution& a, const WorkQuasiDistribution& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.atoms()[i].w - b.atoms()[i].w) > tol) return false;
        if (std::abs(a.atoms()[i].p - b.atoms()[i].p) > tol) return false;
    }
    return true;
}

/// Largest atom-by-atom discrepancy; +inf when the atom counts differ.
inline double atom_distance(const WorkQuasiDistribution& a, const WorkQuasiDistribution& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a.atoms()[i].w - b.atoms()[i].w));
        d = std::max(d, std::abs(a.atoms()[i].p - b.atoms()[i].p));
    }
    return d;
}

// ----------------------------------------------------------------------------
// Cumulants
// ----------------------------------------------------------------------------

/// κ_1..κ_n_max; index by order with operator[].
class CumulantSet {
public:
    CumulantSet() = default;
    explicit CumulantSet(std::vector<double> kappa) : k_(std::move(kappa)) {}

    int max_order() const { return static_cast<int>(k_.size()); }
    double operator[](int n) const {
        if (n < 1 || n > max_order()) throw ValidationError("CumulantSet: order " + std::to_string(n) + " not available");
        return k_[static_cast<std::size_t>(n - 1)];
    }
    const std::vector<double>& values() const { return k_; }

private:
    std::vector<double> k_;
};

inline CumulantSet cumulants(const WorkQuasiDistribution& d, int n_max) {
    return CumulantSet(cumulants_of(d.atom_set(), n_max));
}

/// κ_3 / κ_2^{3/2}.
inline double skewness(const WorkQuasiDistribution& d) {
    const CumulantSet k = cumulants(d, 3);
    if (k[2] <= 0) throw InvariantError("skewness: non-positive variance");
    return k[3] / std::pow(k[2], 1.5);
}

// ----------------------------------------------------------------------------
// Characteristic samples
// ----------------------------------------------------------------------------

enum class SampleKind { X_q, chi_q, g_q, G_q };

inline const char* to_string(SampleKind k) {
    switch (k) {
        case SampleKind::X_q: return "X_q";
        case SampleKind::chi_q: return "chi_q";
        case SampleKind::g_q: return "g_q";
        case SampleKind::G_q: return "G_q";
    }
    return "?";
}

struct CharacteristicSamples {
    std::vector<double> u;
    std::vector<cplx> values;
    SampleKind kind = SampleKind::chi_q;
    double q = 0.5;

    std::size_t size() const { return u.size(); }

    /// Checks the kind-specific invariants: χ(0) = 1 and, at q = 1/2,
    /// χ(−u) = conj χ(u) for every mirrored pair present in the grid.
    void validate() const {
        if (u.size() != values.size()) throw DimensionError("CharacteristicSamples: grid/value size mismatch");
        if (kind != SampleKind::chi_q) return;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u[i] == 0.0 && std::abs(values[i] - 1.0) > 1e-12)
                throw ValidationError("CharacteristicSamples: chi(0) != 1");
        }
        if (q != 0.5) return;
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = 0; j < u.size(); ++j)
                if (u[j] == -u[i] && std::abs(values[j] - std::conj(values[i])) > 1e-10)
                    throw ValidationError("CharacteristicSamples: chi(-u) != conj chi(u) at u=" + fmt17(u[i]));
    }
};

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

/// χ(u) = Σ p e^{iuw} on a grid.
inline CharacteristicSamples characteristic(const WorkQuasiDistribution& d, const std::vector<double>& u_grid,
                                            double q = 0.5) {
    CharacteristicSamples s;
    s.u = u_grid;
    s.kind = SampleKind::chi_q;
    s.q = q;
    s.values.reserve(u_grid.size());
    for (double u : u_grid) s.values.push_back(characteristic_at(d.atom_set(), u));
    return s;
}

// ----------------------------------------------------------------------------
// Direct construction
// ----------------------------------------------------------------------------

/// p_q(w) from its definition, summed over degenerate eigenspaces:
/// the (K, I, J) level triple contributes Re⟨ψ|P_J U† P_K U P_I|ψ⟩ at
/// w = E_K − q E_I − (1−q) E_J. The real part is formed by averaging the
/// complex q and 1−q measures after merging, which checks that the
/// imaginary parts cancel.
inline WorkQuasiDistribution build_pq_direct(const PureState& psi_t1, const SpectralDecomposition& h_t1,
                                             const SpectralDecomposition& h_t2, const Matrix& u, double q,
                                             double merge_tol = -1.0) {
    const Eigen::Index n = psi_t1.dim();
    if (h_t1.dim() != n || h_t2.dim() != n || u.rows() != n || u.cols() != n)
        throw DimensionError("build_pq_direct: dimension mismatch");
    if (!is_unitary(u, 1e-9)) throw ValidationError("build_pq_direct: evolution operator is not unitary");
    if (merge_tol < 0) merge_tol = default_merge_tol(std::max(h_t1.eigenvalues().cwiseAbs().maxCoeff(),
                                                              h_t2.eigenvalues().cwiseAbs().maxCoeff()));

    const auto lv1 = h_t1.levels();
    const auto lv2 = h_t2.levels();

    // b[K][I] = P_K U P_I ψ
    std::vector<std::vector<Vector>> b(lv2.size());
    std::vector<Vector> upi;
    upi.reserve(lv1.size());
    for (const auto& li : lv1) upi.push_back(u * h_t1.project(li, psi_t1.amplitudes()));
    for (std::size_t k = 0; k < lv2.size(); ++k) {
        b[k].reserve(lv1.size());
        for (std::size_t i = 0; i < lv1.size(); ++i) b[k].push_back(h_t2.project(lv2[k], upi[i]));
    }

    std::vector<Atom<cplx>> atoms;
    atoms.reserve(2 * lv2.size() * lv1.size() * lv1.size());
    for (std::size_t k = 0; k < lv2.size(); ++k) {
        for (std::size_t i = 0; i < lv1.size(); ++i) {
            if (b[k][i].squaredNorm() == 0.0) continue;
            for (std::size_t j = 0; j < lv1.size(); ++j) {
                const cplx z = b[k][j].dot(b[k][i]);  // ⟨ψ|P_J U† P_K U P_I|ψ⟩
                if (z == cplx(0.0)) continue;
                const double ek = lv2[k].energy, ei = lv1[i].energy, ej = lv1[j].energy;
                atoms.push_back({ek - q * ei - (1.0 - q) * ej, 0.5 * z});
                atoms.push_back({ek - (1.0 - q) * ei - q * ej, 0.5 * z});
            }
        }
    }
    return WorkQuasiDistribution::from_complex(std::move(atoms), merge_tol, kPruneCutoff);
}

// ----------------------------------------------------------------------------
// Moments from operators
// ----------------------------------------------------------------------------

struct MomentTriple {
    double m1, m2, m3;
};

/// First three moments from operator expressions in the state at t1, with
/// D = H^(H)(t2) − H(t1):
///   ⟨w⟩ = ⟨D⟩, ⟨w²⟩ = ⟨D²⟩,
///   ⟨w³⟩ = ⟨D³⟩ + ½⟨[H(t1)+H^(H)(t2), [H(t1), H^(H)(t2)]]⟩ − 3q(1−q)⟨[H(t1), [H(t1), H^(H)(t2)]]⟩.
inline MomentTriple analytic_moments(const PureState& psi_t1, const Matrix& h_t1, const Matrix& h_t2_heis, double q) {
    const Matrix d = h_t2_heis - h_t1;
    const Matrix d2 = d * d;
    const Matrix c = h_t1 * h_t2_heis - h_t2_heis * h_t1;
    const Matrix s = h_t1 + h_t2_heis;
    const Matrix nested_s = s * c - c * s;
    const Matrix nested_a = h_t1 * c - c * h_t1;
    const cplx m3 = expectation(Matrix(d2 * d), psi_t1) + 0.5 * expectation(nested_s, psi_t1) -
                    3.0 * q * (1.0 - q) * expectation(nested_a, psi_t1);
    return {expectation(d, psi_t1).real(), expectation(d2, psi_t1).real(), m3.real()};
}

// ----------------------------------------------------------------------------
// X_q trace
// ----------------------------------------------------------------------------

/// X_q(u) = ⟨ψτ| e^{−iu(1−q)H1} e^{iuH0} e^{−iuqH1} |ψτ⟩.
inline cplx X_q_trace(const PureState& psi_tau, const SpectralDecomposition& h0, const SpectralDecomposition& h1,
                      double u, double q) {
    if (h0.dim() != psi_tau.dim() || h1.dim() != psi_tau.dim()) throw DimensionError("X_q_trace: dimension mismatch");
    Vector v = h1.apply_exp(psi_tau.amplitudes(), u * q);
    v = h0.apply_exp(v, -u);
    v = h1.apply_exp(v, u * (1.0 - q));
    return psi_tau.amplitudes().dot(v);
}

inline cplx X_q_trace(const PureState& psi_tau, const HermitianOperator& h0, const HermitianOperator& h1, double u,
                      double q) {
    return X_q_trace(psi_tau, diagonalize(h0), diagonalize(h1), u, q);
}

/// χ_q = ½(X_q + X_{1−q}).
inline cplx chi_q_trace(const PureState& psi_tau, const SpectralDecomposition& h0, const SpectralDecomposition& h1,
                        double u, double q) {
    return 0.5 * (X_q_trace(psi_tau, h0, h1, u, q) + X_q_trace(psi_tau, h0, h1, u, 1.0 - q));
}

// ----------------------------------------------------------------------------
// Fourier inversion on an energy lattice
// ----------------------------------------------------------------------------

/// Lattice {w_lo + m δE : 0 ≤ m < M} and the matching full-period u-grid
/// u_j = 2π j / (M δE).
struct EnergyLattice {
    double dE = 1.0;
    double w_lo = 0.0;
    std::size_t M = 1;

    double u_step() const { return 2.0 * std::numbers::pi / (static_cast<double>(M) * dE); }
    std::vector<double> u_grid() const {
        std::vector<double> g(M);
        for (std::size_t j = 0; j < M; ++j) g[j] = u_step() * static_cast<double>(j);
        return g;
    }

    /// Smallest lattice covering [lo, hi] with `margin` spare points on each side.
    static EnergyLattice covering(double dE, double lo, double hi, std::size_t margin = 2) {
        if (!(dE > 0)) throw ValidationError("EnergyLattice: dE must be positive");
        if (hi < lo) throw ValidationError("EnergyLattice: empty window");
        EnergyLattice L;
        L.dE = dE;
        const double m_lo = std::floor(lo / dE + 1e-9) - static_cast<double>(margin);
        const double m_hi = std::ceil(hi / dE - 1e-9) + static_cast<double>(margin);
        L.w_lo = m_lo * dE;
        L.M = static_cast<std::size_t>(m_hi - m_lo) + 1;
        return L;
    }
};

/// Rational approximation x ≈ a/b by continued fractions with b ≤ max_den.
/// Returns false when no such approximation is within rel_tol·max(1,|x|).
inline bool rationalize(double x, long long max_den, double rel_tol, long long& num, long long& den) {
    const double tol = rel_tol * std::max(1.0, std::abs(x));
    long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double r = x;
    for (int it = 0; it < 64; ++it) {
        const double a = std::floor(r);
        if (std::abs(a) > 1e15) break;
        const long long ai = static_cast<long long>(a);
        const long long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) <= tol) {
            num = h1;
            den = k1;
            return true;
        }
        const double frac = r - a;
        if (frac == 0.0) break;
        r = 1.0 / frac;
    }
    return false;
}

/// Common lattice spacing for a set of energies: the largest δE with every
/// energy an integer multiple of it (relative to the first nonzero energy,
/// via rational approximation with bounded denominators).
inline double common_lattice(const std::vector<double>& energies, long long max_den = 4096, double rel_tol = 1e-12) {
    double base = 0.0;
    for (double e : energies)
        if (std::abs(e) > 0) {
            base = std::abs(e);
            break;
        }
    if (base == 0.0) return 1.0;
    long long lcm_den = 1;
    std::vector<long long> nums;
    for (double e : energies) {
        long long a = 0, b = 1;
        if (!rationalize(std::abs(e) / base, max_den, rel_tol, a, b))
            throw CommensurabilityError("energy " + fmt17(e) + " is not commensurate with " + fmt17(base) +
                                        " (denominator bound " + std::to_string(max_den) + ")");
        lcm_den = std::lcm(lcm_den, b);
        if (lcm_den > max_den * max_den)
            throw CommensurabilityError("energy lattice too fine for inversion");
    }
    // every energy is an integer multiple of base / lcm_den; reduce by the gcd
    long long g = 0;
    for (double e : energies) {
        const long long m = std::llround(std::abs(e) / base * static_cast<double>(lcm_den));
        g = std::gcd(g, m);
    }
    if (g == 0) g = 1;
    return base * static_cast<double>(g) / static_cast<double>(lcm_den);
}

/// Complex weights on the lattice from full-period samples:
/// p_m = (1/M) Σ_j χ(u_j) e^{−i u_j w_m}.
inline AtomSet<cplx> invert_to_complex(const CharacteristicSamples& s, const EnergyLattice& L) {
    if (s.size() != L.M) throw DimensionError("invert_characteristic: sample count differs from lattice size");
    const double du = L.u_step();
    for (std::size_t j = 0; j < s.size(); ++j)
        if (std::abs(s.u[j] - du * static_cast<double>(j)) > 1e-12 * std::max(1.0, du * static_cast<double>(L.M)))
            throw ValidationError("invert_characteristic: samples are not on the lattice's u-grid");
    const std::size_t M = L.M;
    std::vector<cplx> root(M);
    for (std::size_t t = 0; t < M; ++t)
        root[t] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(M));
    std::vector<cplx> y(M);
    for (std::size_t j = 0; j < M; ++j) y[j] = s.values[j] * std::polar(1.0, -s.u[j] * L.w_lo);
    std::vector<Atom<cplx>> atoms;
    atoms.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        cplx acc{0.0, 0.0};
        std::size_t idx = 0;
        for (std::size_t j = 0; j < M; ++j) {
            acc += y[j] * root[idx];
            idx += m;
            if (idx >= M) idx -= M;
        }
        atoms.push_back({L.w_lo + static_cast<double>(m) * L.dE, acc / static_cast<double>(M)});
    }
    return AtomSet<cplx>(std::move(atoms), 0.0, kPruneCutoff);
}

inline WorkQuasiDistribution invert_characteristic(const CharacteristicSamples& s, const EnergyLattice& L) {
    return WorkQuasiDistribution::from_complex(invert_to_complex(s, L), 0.5 * L.dE, kPruneCutoff);
}

/// Samples chi on the lattice's u-grid, inverts, and validates the result
/// against chi at off-grid points; aliasing or off-lattice atoms raise
/// CommensurabilityError.
inline WorkQuasiDistribution invert_function(const std::function<cplx(double)>& chi, const EnergyLattice& L,
                                             SampleKind kind = SampleKind::chi_q, double q = 0.5,
                                             std::size_t held_out = 17) {
    CharacteristicSamples s;
    s.kind = kind;
    s.q = q;
    s.u = L.u_grid();
    s.values.reserve(s.u.size());
    for (double u : s.u) s.values.push_back(chi(u));
    WorkQuasiDistribution d;
    try {
        d = invert_characteristic(s, L);
    } catch (const InvariantError& e) {
        // atoms off the lattice fold back with complex weights
        throw CommensurabilityError(std::string("inversion produced complex weights: ") + e.what());
    }
    const double du = L.u_step();
    for (std::size_t h = 0; h < held_out; ++h) {
        // irrational offsets within and beyond the first few grid cells
        const double u = du * (0.5 + 0.6180339887498949 * static_cast<double>(h)) + 0.137 * static_cast<double>(h) / L.dE;
        const double err = std::abs(characteristic_at(d.atom_set(), u) - chi(u));
        if (err > 1e-8)
            throw CommensurabilityError("inversion check failed at u=" + fmt17(u) + ": deviation " + fmt17(err));
    }
    return d;
}

// ----------------------------------------------------------------------------
// Jensen bound
// ----------------------------------------------------------------------------

struct UtilityFunction {
    std::string name;
    std::function<double(double)> f;
    std::function<double(double)> f_inv;
    double epsilon = 0.0;  // min −f''/f'
    double sup = std::numeric_limits<double>::infinity();  // sup of f over the reals

    /// f(w) = −e^{−εw}.
    static UtilityFunction exponential(double eps = 1.0) {
        if (!(eps > 0)) throw ValidationError("UtilityFunction: epsilon must be positive");
        return {"exponential",
                [eps](double w) { return -std::exp(-eps * w); },
                [eps](double y) { return -std::log(-y) / eps; },
                eps, 0.0};
    }

    /// f(w) = a w + b with a > 0.
    static UtilityFunction affine(double a = 1.0, double b = 0.0) {
        if (!(a > 0)) throw ValidationError("UtilityFunction: slope must be positive");
        return {"affine", [a, b](double w) { return a * w + b; }, [a, b](double y) { return (y - b) / a; }, 0.0};
    }
};

struct JensenReport {
    double lhs;  // ⟨w⟩
    double rhs;  // f^{-1}(⟨f(w)⟩), +inf when ⟨f⟩ lies above the range of f
    bool violated;
    bool has_negative_weight;
};

inline JensenReport jensen_check(const WorkQuasiDistribution& d, const UtilityFunction& f) {
    const auto& at = d.atoms();
    for (std::size_t i = 1; i < at.size(); ++i)
        if (!(f.f(at[i].w) > f.f(at[i - 1].w)))
            throw ValidationError("jensen_check: utility '" + f.name + "' is not increasing on the support");
    double mean_f = 0.0;
    for (const auto& a : at) mean_f += a.p * f.f(a.w);
    JensenReport r{};
    r.lhs = moment(d, 1);
    r.rhs = mean_f >= f.sup ? std::numeric_limits<double>::infinity() : f.f_inv(mean_f);
    r.violated = r.lhs < r.rhs - 1e-12 * std::max(1.0, std::abs(r.lhs));
    r.has_negative_weight = min_weight(d) < 0.0;
    if (r.violated && !r.has_negative_weight)
        throw InvariantError("jensen_check: bound violated by a nonnegative distribution");
    return r;
}

// ----------------------------------------------------------------------------
// Binning and CSV
// ----------------------------------------------------------------------------

struct HistogramBin {
    double center;
    double mass;
};

/// `bins` equal-width bins spanning [w_min, w_max] of the support.
inline std::vector<HistogramBin> bin_atoms(const WorkQuasiDistribution& d, std::size_t bins) {
    if (bins == 0) throw ValidationError("bin_atoms: bin count must be positive");
    const double lo = d.atoms().front().w, hi = d.atoms().back().w;
    if (hi == lo) return {{lo, d.atom_set().total()}};
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) out[b] = {lo + (static_cast<double>(b) + 0.5) * width, 0.0};
    for (const auto& a : d.atoms()) {
        auto b = static_cast<std::size_t>(std::floor((a.w - lo) / width));
        if (b >= bins) b = bins - 1;
        out[b].mass += a.p;
    }
    return out;
}

inline void write_csv(std::ostream& os, const WorkQuasiDistribution& d) {
    os << "w,weight\n";
    for (const auto& a : d.atoms()) os << fmt17(a.w) << ',' << fmt17(a.p) << '\n';
}

inline void write_csv(const std::string& path, const WorkQuasiDistribution& d) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path + " for writing");
    write_csv(f, d);
}

inline WorkQuasiDistribution read_csv(std::istream& is, double merge_tol = 0.0) {
    std::string line;
    if (!std::getline(is, line) || line != "w,weight") throw ValidationError("distribution CSV: missing 'w,weight' header");
    std::vector<Atom<double>> atoms;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError("distribution CSV: line " + std::to_string(lineno));
        try {
            std::size_t pos = 0;
            const std::string ws = line.substr(0, comma), ps = line.substr(comma + 1);
            const double w = std::stod(ws, &pos);
            if (pos != ws.size()) throw std::invalid_argument(ws);
            const double p = std::stod(ps, &pos);
            if (pos != ps.size()) throw std::invalid_argument(ps);
            atoms.push_back({w, p});
        } catch (const std::logic_error&) {
            throw ValidationError("distribution CSV: malformed number on line " + std::to_string(lineno));
        }
    }
    for (std::size_t i = 1; i < atoms.size(); ++i)
        if (!(atoms[i].w > atoms[i - 1].w)) throw ValidationError("distribution CSV: locations not strictly ascending");
    return WorkQuasiDistribution(std::move(atoms), merge_tol);
}

inline WorkQuasiDistribution read_csv(const std::string& path, double merge_tol = 0.0) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    return read_csv(f, merge_tol);
}

} // namespace qworklab
