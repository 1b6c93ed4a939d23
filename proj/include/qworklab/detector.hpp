// detector.hpp — qubit interferometer that reads X_q(u) from its coherence.
//
// The detector (basis |g>, |e>; H_D = ω|e><e|) is kicked at t1 and t2 by
// exp(−i H(t_i) ⊗ H_I) with H_I = −δ_e|e><e| + δ_g|g><g| (primed at t2).
// The joint system–detector state is propagated explicitly, one pure
// component of ρ_D(0) at a time.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

#include "qworklab/errors.hpp"
#include "qworklab/models.hpp"
#include "qworklab/operator_core.hpp"
#include "qworklab/quasiprob.hpp"

namespace qworklab {

using Matrix2c = Eigen::Matrix2cd;

struct DetectorSpec {
    double omega = 1.3;
    double delta_e = 0.0, delta_g = 0.0;    // kick at t1
    double delta_e2 = 0.0, delta_g2 = 0.0;  // kick at t2
    Matrix2c rho = plus_state();            // basis order (|g>, |e>)

    static Matrix2c plus_state() {
        Matrix2c r;
        r << 0.5, 0.5,
             0.5, 0.5;
        return r;
    }

    /// ⟨e|ρ_D|g⟩.
    cplx coherence() const { return rho(1, 0); }

    void validate(bool require_coherence = true) const {
        const double tol = 1e-12;
        if (max_abs(Matrix(rho - rho.adjoint())) > tol) throw ValidationError("detector rho: not Hermitian");
        if (std::abs(rho.trace() - 1.0) > tol) throw ValidationError("detector rho: trace differs from 1");
        Eigen::SelfAdjointEigenSolver<Matrix2c> es(rho);
        if (es.eigenvalues().minCoeff() < -tol) throw ValidationError("detector rho: not positive semidefinite");
        if (require_coherence && std::abs(coherence()) == 0.0)
            throw ValidationError("detector rho: no initial coherence between |e> and |g>");
    }

    /// Kicks that make the normalized readout equal X_q(u).
    DetectorSpec programmed(double u, double q) const {
        DetectorSpec d = *this;
        d.delta_e = -q * u;
        d.delta_g = -(1 - q) * u;
        d.delta_e2 = u;
        d.delta_g2 = 0.0;
        return d;
    }
};

struct Readout {
    cplx coherence;          // ⟨e|ρ_D(τ)|g⟩
    double system_purity;    // Tr ρ_S(τ)²
};

/// Piecewise-constant protocol seen by the detector: H(t) = H0 at t ≤ 0 and
/// t ≥ τ, H1 in between.
struct QuenchProtocol {
    SpectralDecomposition h0, h1;
    double tau;
    PureState psi0;

    const SpectralDecomposition& at(double t) const { return (t <= 0 || t >= tau) ? h0 : h1; }

    static QuenchProtocol from(const ExactProcess& p) { return {p.h0s, p.h1s, p.tau, p.psi0}; }
};

/// Joint evolution from 0 to τ with kicks at t1 < t2; returns the detector
/// coherence at τ and the purity of the battery's reduced state.
inline Readout simulate_readout(const QuenchProtocol& pr, double t1, double t2, const DetectorSpec& det) {
    det.validate(false);
    if (!(t1 >= 0 && t1 < t2 && t2 <= pr.tau)) throw ValidationError("detector: need 0 <= t1 < t2 <= tau");
    const Eigen::Index n = pr.psi0.dim();
    checked_power(static_cast<std::size_t>(2 * n), 1);

    // free evolution of the joint state (columns: g, e components) over [a, b)
    auto drift = [&](Matrix& joint, double a, double b) {
        if (b <= a) return;
        const double inner_lo = std::max(a, 0.0), inner_hi = std::min(b, pr.tau);
        for (Eigen::Index c = 0; c < 2; ++c) joint.col(c) = pr.h1.apply_exp(joint.col(c), inner_hi - inner_lo);
        joint.col(1) *= std::polar(1.0, -det.omega * (b - a));
    };
    // exp(−i H ⊗ H_I): e-branch e^{+iδ_e H}, g-branch e^{−iδ_g H}
    auto kick = [&](Matrix& joint, const SpectralDecomposition& h, double de, double dg) {
        joint.col(1) = h.apply_exp(joint.col(1), -de);
        joint.col(0) = h.apply_exp(joint.col(0), dg);
    };

    Eigen::SelfAdjointEigenSolver<Matrix2c> es(det.rho);
    Matrix2c rho_d = Matrix2c::Zero();
    Matrix amp(n, 0);  // √p_m-weighted system blocks, for the reduced system state
    for (Eigen::Index m = 0; m < 2; ++m) {
        const double pm = std::max(0.0, es.eigenvalues()(m));
        if (pm == 0.0) continue;
        const Eigen::Vector2cd d = es.eigenvectors().col(m);
        Matrix joint(n, 2);
        joint.col(0) = d(0) * pr.psi0.amplitudes();
        joint.col(1) = d(1) * pr.psi0.amplitudes();
        drift(joint, 0.0, t1);
        kick(joint, pr.at(t1), det.delta_e, det.delta_g);
        drift(joint, t1, t2);
        kick(joint, pr.at(t2), det.delta_e2, det.delta_g2);
        drift(joint, t2, pr.tau);
        rho_d += pm * (joint.adjoint() * joint).transpose();  // ρ_D(a,b) = Σ_s Ψ(s,a) Ψ(s,b)*
        Matrix grown(n, amp.cols() + 2);
        grown << amp, std::sqrt(pm) * joint;
        amp = std::move(grown);
    }
    const Matrix gram = amp.adjoint() * amp;
    return {rho_d(1, 0), gram.squaredNorm()};
}

/// ⟨e|ρ_D(0)|g⟩ e^{−iωτ} ⟨ψ(t1)| e^{iδ_g H(t1)} U† e^{i(δ'_e+δ'_g) H(t2)} U e^{iδ_e H(t1)} |ψ(t1)⟩,
/// U = U_{t2,t1}.
inline cplx readout_closed_form(const QuenchProtocol& pr, double t1, double t2, const DetectorSpec& det) {
    const Vector psi1 = pr.h1.apply_exp(pr.psi0.amplitudes(), std::min(t1, pr.tau));
    const SpectralDecomposition& h1k = pr.at(t1);
    const SpectralDecomposition& h2k = pr.at(t2);
    auto propagate = [&](Vector v) { return pr.h1.apply_exp(v, t2 - t1); };
    Vector right = propagate(h1k.apply_exp(psi1, -det.delta_e));
    right = h2k.apply_exp(right, -(det.delta_e2 + det.delta_g2));
    const Vector left = propagate(h1k.apply_exp(psi1, det.delta_g));
    return det.coherence() * std::polar(1.0, -det.omega * pr.tau) * left.dot(right);
}

/// X_q on a grid from normalized readouts with the programmed kick schedule
/// (kicks at t1 and τ).
inline CharacteristicSamples reconstruct_Xq(const QuenchProtocol& pr, double t1, const std::vector<double>& u_grid,
                                            double q, const DetectorSpec& tmpl = {}) {
    tmpl.validate(true);
    const cplx norm = tmpl.coherence() * std::polar(1.0, -tmpl.omega * pr.tau);
    CharacteristicSamples s;
    s.u = u_grid;
    s.kind = SampleKind::X_q;
    s.q = q;
    for (double u : u_grid) s.values.push_back(simulate_readout(pr, t1, pr.tau, tmpl.programmed(u, q)).coherence / norm);
    return s;
}

inline CharacteristicSamples reconstruct_Xq(const ExactProcess& p, const std::vector<double>& u_grid, double q,
                                            const DetectorSpec& tmpl = {}) {
    return reconstruct_Xq(QuenchProtocol::from(p), p.t1, u_grid, q, tmpl);
}

} // namespace qworklab
