// operator_core.hpp — dense finite-dimensional quantum mechanics: Hermitian
// operators, spectral decomposition, evolution, expectations, tensor embedding.
//
// Conventions: hbar = 1, energies in units of eps0, times in 1/eps0.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "qworklab/errors.hpp"

namespace qworklab {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

// Default cap on the exact engine's Hilbert-space dimension (N = 14 qubits).
inline constexpr std::size_t kDefaultMaxDim = std::size_t{1} << 14;

/// Dimension cap for dense operators; overridable with QWORKLAB_MAX_DIM.
inline std::size_t max_dimension() {
    const char* env = std::getenv("QWORKLAB_MAX_DIM");
    if (env == nullptr || *env == '\0') return kDefaultMaxDim;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
        throw ValidationError(std::string("QWORKLAB_MAX_DIM: not a positive integer: ") + env);
    return static_cast<std::size_t>(v);
}

/// d^n, or throws DimensionError when it exceeds the dimension cap.
inline std::size_t checked_power(std::size_t d, std::size_t n) {
    const std::size_t cap = max_dimension();
    std::size_t out = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (out > cap / d)
            throw DimensionError("dimension " + std::to_string(d) + "^" + std::to_string(n) +
                                 " exceeds cap " + std::to_string(cap));
        out *= d;
    }
    return out;
}

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// ----------------------------------------------------------------------------
// HermitianOperator
// ----------------------------------------------------------------------------

/// Dense Hermitian matrix. Hermiticity is checked elementwise to 1e-12,
/// scaled by the largest entry when that exceeds one.
class HermitianOperator {
public:
    HermitianOperator() = default;

    explicit HermitianOperator(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols() || m_.rows() == 0)
            throw ValidationError("HermitianOperator: matrix must be square and non-empty");
        const double tol = 1e-12 * std::max(1.0, max_abs(m_));
        if (max_abs(m_ - m_.adjoint()) > tol)
            throw ValidationError("HermitianOperator: matrix is not Hermitian");
    }

    Eigen::Index dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }

    friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
        if (a.dim() != b.dim()) throw DimensionError("operator sum: dimension mismatch");
        return HermitianOperator(a.m_ + b.m_);
    }
    friend HermitianOperator operator*(double s, const HermitianOperator& a) {
        return HermitianOperator(s * a.m_);
    }

private:
    Matrix m_;
};

// ----------------------------------------------------------------------------
// PureState
// ----------------------------------------------------------------------------

class PureState {
public:
    PureState() = default;

    explicit PureState(Vector amplitudes) : a_(std::move(amplitudes)) {
        if (a_.size() == 0) throw ValidationError("PureState: empty amplitude vector");
        if (std::abs(a_.squaredNorm() - 1.0) > 1e-12)
            throw ValidationError("PureState: squared norm differs from 1 by more than 1e-12");
    }

    /// Normalizes first; throws on a zero vector.
    static PureState normalized(Vector v) {
        const double n = v.norm();
        if (n == 0.0) throw ValidationError("PureState: cannot normalize the zero vector");
        return PureState(v / n);
    }

    static PureState basis(Eigen::Index dim, Eigen::Index index) {
        if (index < 0 || index >= dim) throw ValidationError("PureState::basis: index out of range");
        Vector v = Vector::Zero(dim);
        v(index) = 1.0;
        return PureState(std::move(v));
    }

    Eigen::Index dim() const { return a_.size(); }
    const Vector& amplitudes() const { return a_; }

private:
    Vector a_;
};

// ----------------------------------------------------------------------------
// SpectralDecomposition
// ----------------------------------------------------------------------------

/// A maximal run of (numerically) degenerate eigenvalues: columns [begin, end).
struct Level {
    double energy;
    Eigen::Index begin;
    Eigen::Index end;
    Eigen::Index size() const { return end - begin; }
};

class SpectralDecomposition {
public:
    SpectralDecomposition() = default;

    SpectralDecomposition(Eigen::VectorXd eigenvalues, Matrix eigenvectors)
        : e_(std::move(eigenvalues)), v_(std::move(eigenvectors)) {
        if (v_.rows() != v_.cols() || v_.cols() != e_.size())
            throw DimensionError("SpectralDecomposition: shape mismatch");
        for (Eigen::Index i = 1; i < e_.size(); ++i)
            if (e_(i) < e_(i - 1)) throw ValidationError("SpectralDecomposition: eigenvalues not ascending");
    }

    Eigen::Index dim() const { return e_.size(); }
    const Eigen::VectorXd& eigenvalues() const { return e_; }
    const Matrix& eigenvectors() const { return v_; }
    double min() const { return e_(0); }
    double max() const { return e_(e_.size() - 1); }

    /// Default tolerance for grouping eigenvalues into levels.
    double level_tolerance() const {
        return 1e-9 * std::max(1.0, e_.cwiseAbs().maxCoeff());
    }

    /// Degenerate levels, ascending. Eigenvalues closer than tol to the first
    /// member of a run are grouped; the level energy is the run's mean.
    std::vector<Level> levels(double tol = -1.0) const {
        if (tol < 0) tol = level_tolerance();
        std::vector<Level> out;
        Eigen::Index i = 0;
        while (i < e_.size()) {
            Eigen::Index j = i + 1;
            while (j < e_.size() && e_(j) - e_(i) <= tol) ++j;
            out.push_back({e_.segment(i, j - i).mean(), i, j});
            i = j;
        }
        return out;
    }

    /// Orthogonal projection of x onto a level's eigenspace.
    Vector project(const Level& level, const Vector& x) const {
        const auto cols = v_.middleCols(level.begin, level.size());
        return cols * (cols.adjoint() * x);
    }

    Matrix reconstruct() const { return v_ * e_.cast<cplx>().asDiagonal() * v_.adjoint(); }

    /// exp(-i t H) x.
    Vector apply_exp(const Vector& x, double t) const {
        if (x.size() != dim()) throw DimensionError("apply_exp: dimension mismatch");
        Vector c = v_.adjoint() * x;
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(-kI * (t * e_(i)));
        return v_ * c;
    }

    /// The unitary exp(-i t H).
    Matrix propagator(double t) const {
        Eigen::VectorXcd ph(dim());
        for (Eigen::Index i = 0; i < dim(); ++i) ph(i) = std::exp(-kI * (t * e_(i)));
        return v_ * ph.asDiagonal() * v_.adjoint();
    }

private:
    Eigen::VectorXd e_;
    Matrix v_;
};

inline bool is_diagonal(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (i != j && m(i, j) != cplx(0.0)) return false;
    return true;
}

/// Eigen-decomposition with ascending eigenvalues. Diagonal input is sorted
/// directly (stable, so equal energies keep basis order).
inline SpectralDecomposition diagonalize(const HermitianOperator& h) {
    const Matrix& m = h.matrix();
    const Eigen::Index n = m.rows();
    if (is_diagonal(m)) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return m(a, a).real() < m(b, b).real(); });
        Eigen::VectorXd e(n);
        Matrix v = Matrix::Zero(n, n);
        for (Eigen::Index c = 0; c < n; ++c) {
            e(c) = m(order[static_cast<std::size_t>(c)], order[static_cast<std::size_t>(c)]).real();
            v(order[static_cast<std::size_t>(c)], c) = 1.0;
        }
        return {std::move(e), std::move(v)};
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw Error("diagonalize: eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

/// e^{-iHt} psi.
inline PureState evolve(const PureState& psi, const SpectralDecomposition& h, double t) {
    if (psi.dim() != h.dim()) throw DimensionError("evolve: dimension mismatch");
    if (t == 0.0) return psi;
    Vector out = h.apply_exp(psi.amplitudes(), t);
    // Renormalize rounding drift so the result stays within the PureState tolerance.
    out /= out.norm();
    return PureState(std::move(out));
}

// ----------------------------------------------------------------------------
// Expectations
// ----------------------------------------------------------------------------

/// <psi|X|psi> for an arbitrary operator (e.g. a product such as H1 H0 H1).
inline cplx expectation(const Matrix& x, const PureState& psi) {
    if (x.rows() != psi.dim() || x.cols() != psi.dim()) throw DimensionError("expectation: dimension mismatch");
    return psi.amplitudes().dot(x * psi.amplitudes());
}

/// Real expectation of a Hermitian operator; the imaginary residue is dropped
/// after checking it is rounding-level.
inline double expectation(const HermitianOperator& x, const PureState& psi) {
    const cplx v = expectation(x.matrix(), psi);
    if (std::abs(v.imag()) > 1e-12 * std::max(1.0, max_abs(x.matrix()) * static_cast<double>(psi.dim())))
        throw InvariantError("expectation: Hermitian operator produced a complex mean");
    return v.real();
}

// ----------------------------------------------------------------------------
// Tensor-product embedding
// ----------------------------------------------------------------------------

namespace ops {

inline Matrix identity(Eigen::Index d) { return Matrix::Identity(d, d); }

inline Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0.0, 1.0,
         1.0, 0.0;
    return m;
}

inline Matrix sigma_y() {
    Matrix m(2, 2);
    m << 0.0, -kI,
         kI, 0.0;
    return m;
}

// Battery convention: |0> (ground) has sigma_z = -1 and |1> (charged) has +1,
// so h = eps0 (sigma_z + 1) / 2 = eps0 |1><1|.
inline Matrix sigma_z() {
    Matrix m(2, 2);
    m << -1.0, 0.0,
          0.0, 1.0;
    return m;
}

/// |1><1|.
inline Matrix number() {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 1) = 1.0;
    return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

} // namespace ops

/// Tensor product over `cells` factors of dimension d: `local` maps 1-based
/// site index to its operator; all other factors are the identity.
inline Matrix embed_sites(const std::map<std::size_t, Matrix>& local, Eigen::Index d, std::size_t cells) {
    if (d <= 0) throw ValidationError("embed_sites: local dimension must be positive");
    if (cells == 0) throw ValidationError("embed_sites: cell count must be positive");
    checked_power(static_cast<std::size_t>(d), cells);
    for (const auto& [site, op] : local) {
        if (site < 1 || site > cells)
            throw ValidationError("embed_sites: site " + std::to_string(site) + " out of range 1.." +
                                  std::to_string(cells));
        if (op.rows() != d || op.cols() != d) throw DimensionError("embed_sites: local operator has wrong dimension");
    }
    Matrix out = Matrix::Identity(1, 1);
    Eigen::Index run = 1;  // pending identity block
    for (std::size_t s = 1; s <= cells; ++s) {
        auto it = local.find(s);
        if (it == local.end()) {
            run *= d;
            continue;
        }
        if (run > 1) out = ops::kron(out, ops::identity(run));
        run = 1;
        out = ops::kron(out, it->second);
    }
    if (run > 1) out = ops::kron(out, ops::identity(run));
    return out;
}

/// op acting on one site (1-based) of `cells` identical factors.
inline HermitianOperator embed_local(const HermitianOperator& op, std::size_t site, std::size_t cells) {
    return HermitianOperator(embed_sites({{site, op.matrix()}}, op.dim(), cells));
}

/// Sum over all sites of the embedded local operator.
inline HermitianOperator sum_local(const HermitianOperator& op, std::size_t cells) {
    const std::size_t dim = checked_power(static_cast<std::size_t>(op.dim()), cells);
    Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t s = 1; s <= cells; ++s) acc += embed_sites({{s, op.matrix()}}, op.dim(), cells);
    return HermitianOperator(std::move(acc));
}

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
    if (u.rows() != u.cols()) return false;
    return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())) <= tol;
}

} // namespace qworklab
