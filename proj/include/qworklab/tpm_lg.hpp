// tpm_lg.hpp — two-point-measurement work distributions for incoherent
// initial states, and the covariance (Leggett–Garg type) inequality
// |σ²_τ + σ²_t1 − σ²| ≤ 2 σ²_τ σ²_t1.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qworklab/errors.hpp"
#include "qworklab/models.hpp"
#include "qworklab/operator_core.hpp"
#include "qworklab/quasiprob.hpp"

namespace qworklab {

struct TpmDistribution {
    WorkQuasiDistribution dist;      // nonnegative atoms at E^t_K − E^0_I
    std::vector<double> p_initial;   // populations of the H0 levels
    Eigen::MatrixXd p_transition;    // p_{K|I}, rows K (levels of H(t)), columns I
};

/// Requires [ρ0, H0] = 0, i.e. ρ0 block-diagonal in the H0 eigenbasis.
inline TpmDistribution tpm_distribution(const Matrix& rho0, const SpectralDecomposition& h0, const Matrix& u,
                                        const SpectralDecomposition& ht, double merge_tol = -1.0) {
    const Eigen::Index n = h0.dim();
    if (rho0.rows() != n || rho0.cols() != n || ht.dim() != n || u.rows() != n || u.cols() != n)
        throw DimensionError("tpm_distribution: dimension mismatch");
    const Matrix h0m = h0.reconstruct();
    const double scale = std::max(1.0, max_abs(h0m));
    if (max_abs(rho0 * h0m - h0m * rho0) > 1e-12 * scale)
        throw ValidationError("tpm_distribution: initial state is not diagonal in the H0 eigenbasis");
    if (std::abs(rho0.trace() - 1.0) > 1e-12) throw ValidationError("tpm_distribution: initial state trace != 1");
    if (merge_tol < 0)
        merge_tol = default_merge_tol(std::max(h0.eigenvalues().cwiseAbs().maxCoeff(), ht.eigenvalues().cwiseAbs().maxCoeff()));

    const auto l0 = h0.levels();
    const auto lt = ht.levels();
    TpmDistribution out;
    out.p_transition = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lt.size()), static_cast<Eigen::Index>(l0.size()));
    std::vector<Atom<double>> atoms;
    for (std::size_t i = 0; i < l0.size(); ++i) {
        const auto vi = h0.eigenvectors().middleCols(l0[i].begin, l0[i].size());
        const Matrix block = vi.adjoint() * rho0 * vi;  // ρ0 restricted to level I
        const double pi = block.trace().real();
        out.p_initial.push_back(pi);
        if (pi <= 0) continue;
        const Matrix evolved = u * vi;  // U P_I
        for (std::size_t k = 0; k < lt.size(); ++k) {
            const auto vk = ht.eigenvectors().middleCols(lt[k].begin, lt[k].size());
            const Matrix a = vk.adjoint() * evolved;  // P_K U P_I in eigenbases
            const double w = (a * block * a.adjoint()).trace().real();  // Tr[P_K U ρ_I U†]
            out.p_transition(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = w / pi;
            if (w != 0.0) atoms.push_back({lt[k].energy - l0[i].energy, w});
        }
    }
    out.dist = WorkQuasiDistribution(std::move(atoms), merge_tol, kPruneCutoff);
    for (const auto& a : out.dist.atoms())
        if (a.p < -1e-12) throw InvariantError("tpm_distribution: negative probability");
    if (std::abs(out.dist.atom_set().total() - 1.0) > 1e-12)
        throw InvariantError("tpm_distribution: probabilities do not sum to 1");
    return out;
}

/// Pure eigenstate / diagonal mixture given by weights on the H0 eigenvector columns.
inline TpmDistribution tpm_distribution(const std::vector<double>& weights, const SpectralDecomposition& h0,
                                        const Matrix& u, const SpectralDecomposition& ht) {
    if (static_cast<Eigen::Index>(weights.size()) != h0.dim()) throw DimensionError("tpm_distribution: weight count");
    Eigen::VectorXcd w(h0.dim());
    for (Eigen::Index i = 0; i < h0.dim(); ++i) {
        if (weights[static_cast<std::size_t>(i)] < 0) throw ValidationError("tpm_distribution: negative population");
        w(i) = weights[static_cast<std::size_t>(i)];
    }
    const Matrix rho = h0.eigenvectors() * w.asDiagonal() * h0.eigenvectors().adjoint();
    return tpm_distribution(rho, h0, u, ht);
}

inline double variance(const WorkQuasiDistribution& d) {
    const double m1 = moment(d, 1);
    double v = 0.0;
    for (const auto& a : d.atoms()) v += a.p * (a.w - m1) * (a.w - m1);
    return v;
}

struct LgReport {
    double sigma2_tau, sigma2_t1, sigma2;
    double lhs, rhs;
    bool violated;
    std::string note;
};

inline LgReport lg_check(double sigma2_tau, double sigma2_t1, double sigma2) {
    if (sigma2_tau < 0 || sigma2_t1 < 0 || sigma2 < 0) throw ValidationError("lg_check: variances must be >= 0");
    LgReport r{sigma2_tau, sigma2_t1, sigma2, 0, 0, false, ""};
    r.lhs = std::abs(sigma2_tau + sigma2_t1 - sigma2);
    r.rhs = 2 * sigma2_tau * sigma2_t1;
    r.violated = r.lhs > r.rhs + 1e-10 * std::max({1.0, sigma2_tau, sigma2_t1, sigma2});
    r.note = "rhs is a product of variances (energy^4) while lhs is a variance (energy^2); "
             "the comparison depends on the energy unit";
    return r;
}

struct LgRun {
    LgReport report;
    TpmDistribution tpm_tau, tpm_t1;
    std::vector<double> q_values;
    std::vector<double> sigma2_by_q;
    double sigma2_spread = 0.0;   // max − min over q
    double negativity_half = 1.0; // 𝒩 of p_{1/2} on [t1, τ]
};

/// Works w_τ on [0, τ] (H(τ) = H0) and w_t1 on [0, t1] (H(t1) = H1) from
/// TPM distributions; σ² of w = w_τ − w_t1 from p_q on [t1, τ] for each q.
inline LgRun lg_pipeline(const ExactProcess& p, const std::vector<double>& qs = {0.0, 0.5, 1.0}) {
    if (qs.empty()) throw ValidationError("lg_pipeline: empty q list");
    LgRun run;
    const Matrix rho0 = p.psi0.amplitudes() * p.psi0.amplitudes().adjoint();
    run.tpm_tau = tpm_distribution(rho0, p.h0s, p.h1s.propagator(p.tau), p.h0s);
    run.tpm_t1 = tpm_distribution(rho0, p.h0s, p.h1s.propagator(p.t1), p.h1s);
    run.q_values = qs;
    for (double q : qs) run.sigma2_by_q.push_back(variance(p.pq(q)));
    const auto [lo, hi] = std::minmax_element(run.sigma2_by_q.begin(), run.sigma2_by_q.end());
    run.sigma2_spread = *hi - *lo;
    auto clamp0 = [](double v) { return std::abs(v) < 1e-12 ? 0.0 : v; };
    run.report = lg_check(clamp0(variance(run.tpm_tau.dist)), clamp0(variance(run.tpm_t1.dist)),
                          clamp0(run.sigma2_by_q.front()));
    run.negativity_half = negativity(p.pq(0.5));
    return run;
}

} // namespace qworklab
