// atoms.hpp — finite signed measures: sums of Dirac atoms with real or complex
// weights, merging, convolution, moments and characteristic functions.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <type_traits>
#include <vector>

#include "qworklab/errors.hpp"

namespace qworklab {

template <class W>
struct Atom {
    double w;  // location (energy)
    W p;       // weight
};

template <class W>
inline double weight_abs(const W& p) { return std::abs(p); }

/// Sorts by location and sums atoms closer than `tol` to the first atom of
/// their cluster. The merged location is the first atom's location, so the
/// result does not depend on the order weights are accumulated.
template <class W>
std::vector<Atom<W>> merge_atoms(std::vector<Atom<W>> atoms, double tol) {
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const Atom<W>& a, const Atom<W>& b) { return a.w < b.w; });
    std::vector<Atom<W>> out;
    out.reserve(atoms.size());
    for (const auto& a : atoms) {
        if (!out.empty() && a.w - out.back().w <= tol) {
            out.back().p += a.p;
        } else {
            out.push_back(a);
        }
    }
    return out;
}

/// Drops atoms with |p| < cutoff.
template <class W>
std::vector<Atom<W>> prune_atoms(std::vector<Atom<W>> atoms, double cutoff) {
    atoms.erase(std::remove_if(atoms.begin(), atoms.end(),
                               [&](const Atom<W>& a) { return weight_abs(a.p) < cutoff; }),
                atoms.end());
    return atoms;
}

/// Merged, pruned, location-sorted list of atoms.
template <class W>
class AtomSet {
public:
    AtomSet() = default;

    AtomSet(std::vector<Atom<W>> atoms, double merge_tol, double prune_cutoff = 0.0)
        : atoms_(prune_atoms(merge_atoms(std::move(atoms), merge_tol), prune_cutoff)) {}

    static AtomSet point(double w, W p = W(1.0)) {
        AtomSet s;
        s.atoms_.push_back({w, p});
        return s;
    }

    const std::vector<Atom<W>>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }

    W total() const {
        W s{};
        for (const auto& a : atoms_) s += a.p;
        return s;
    }

    double min_location() const { return atoms_.empty() ? 0.0 : atoms_.front().w; }
    double max_location() const { return atoms_.empty() ? 0.0 : atoms_.back().w; }

    /// Atoms shifted by dw.
    AtomSet shifted(double dw) const {
        AtomSet s = *this;
        for (auto& a : s.atoms_) a.w += dw;
        return s;
    }

    /// Mirror image w -> -w.
    AtomSet reflected() const {
        AtomSet s;
        s.atoms_.assign(atoms_.rbegin(), atoms_.rend());
        for (auto& a : s.atoms_) a.w = -a.w;
        return s;
    }

    AtomSet scaled(W c) const {
        AtomSet s = *this;
        for (auto& a : s.atoms_) a.p *= c;
        return s;
    }

private:
    std::vector<Atom<W>> atoms_;
};

/// Weighted sum of two atom sets (merged).
template <class W>
AtomSet<W> combine(const AtomSet<W>& a, W ca, const AtomSet<W>& b, W cb, double merge_tol,
                   double prune_cutoff = 0.0) {
    std::vector<Atom<W>> v;
    v.reserve(a.size() + b.size());
    for (const auto& x : a.atoms()) v.push_back({x.w, ca * x.p});
    for (const auto& x : b.atoms()) v.push_back({x.w, cb * x.p});
    return AtomSet<W>(std::move(v), merge_tol, prune_cutoff);
}

/// Convolution: atoms at pairwise sums, weights multiplied, then merged.
template <class W>
AtomSet<W> convolve(const AtomSet<W>& a, const AtomSet<W>& b, double merge_tol, double prune_cutoff = 0.0) {
    std::vector<Atom<W>> v;
    v.reserve(a.size() * b.size());
    for (const auto& x : a.atoms())
        for (const auto& y : b.atoms()) v.push_back({x.w + y.w, x.p * y.p});
    return AtomSet<W>(std::move(v), merge_tol, prune_cutoff);
}

/// k-fold self-convolution by repeated squaring; k = 0 gives the unit point mass.
template <class W>
AtomSet<W> convolution_power(const AtomSet<W>& a, std::size_t k, double merge_tol, double prune_cutoff = 0.0) {
    AtomSet<W> result = AtomSet<W>::point(0.0);
    AtomSet<W> base = a;
    while (k > 0) {
        if (k & 1U) result = convolve(result, base, merge_tol, prune_cutoff);
        k >>= 1U;
        if (k > 0) base = convolve(base, base, merge_tol, prune_cutoff);
    }
    return result;
}

/// Σ p w^n.
template <class W>
W raw_moment(const AtomSet<W>& s, int n) {
    W m{};
    for (const auto& a : s.atoms()) m += a.p * std::pow(a.w, n);
    return m;
}

/// Σ p e^{iuw}.
template <class W>
std::complex<double> characteristic_at(const AtomSet<W>& s, double u) {
    std::complex<double> acc{0.0, 0.0};
    for (const auto& a : s.atoms()) acc += std::complex<double>(a.p) * std::polar(1.0, u * a.w);
    return acc;
}

/// Cumulants κ_1..κ_nmax from the moments of a measure of unit mass.
/// Central moments are used so large offsets do not cancel catastrophically;
/// κ_n for n ≥ 2 is shift invariant.
template <class W>
std::vector<W> cumulants_of(const AtomSet<W>& s, int n_max) {
    if (n_max < 1) throw ValidationError("cumulants: order must be >= 1");
    const W mass = s.total();
    const W mean = raw_moment(s, 1) / mass;
    std::vector<W> mu(static_cast<std::size_t>(n_max) + 1, W{});
    for (const auto& a : s.atoms()) {
        const W d = W(a.w) - mean;
        W pw = W(1.0);
        for (int n = 0; n <= n_max; ++n) {
            mu[static_cast<std::size_t>(n)] += a.p * pw;
            pw *= d;
        }
    }
    for (auto& m : mu) m /= mass;
    // κ_n = μ_n − Σ_{m=1}^{n−1} C(n−1, m−1) κ_m μ_{n−m}
    std::vector<W> k(static_cast<std::size_t>(n_max) + 1, W{});
    for (int n = 1; n <= n_max; ++n) {
        W acc = mu[static_cast<std::size_t>(n)];
        double binom = 1.0;  // C(n-1, m-1)
        for (int m = 1; m < n; ++m) {
            acc -= binom * k[static_cast<std::size_t>(m)] * mu[static_cast<std::size_t>(n - m)];
            binom = binom * static_cast<double>(n - m) / static_cast<double>(m);
        }
        k[static_cast<std::size_t>(n)] = acc;
    }
    k[1] = mean;
    return {k.begin() + 1, k.end()};
}

} // namespace qworklab
