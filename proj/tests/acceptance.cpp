// acceptance.cpp — end-to-end acceptance checks, one PASS/FAIL line each
//
// Every tolerance below is pinned. A failing criterion is reported, never
// softened; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qworklab/qworklab.hpp"

namespace qw = qworklab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("FAILED " + what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Max |Δw| + |Δp| over matched atoms after both sides are re-merged at a
/// common resolution; infinity when the atom counts differ.
double atom_gap(const qw::WorkQuasiDistribution& d, oracle::Atoms o, double resolution = 1e-8) {
    oracle::Atoms lib;
    for (const auto& a : d.atoms()) lib.add(a.w, a.p);
    lib.finish(resolution);
    o.finish(resolution);
    if (lib.items.size() != o.items.size()) return std::numeric_limits<double>::infinity();
    double gap = 0;
    for (std::size_t i = 0; i < lib.items.size(); ++i) {
        gap = std::max(gap, std::abs(lib.items[i].first - o.items[i].first));
        gap = std::max(gap, std::abs(lib.items[i].second - o.items[i].second));
    }
    return gap;
}

/// Library process for an oracle-side random model.
qw::ExactProcess to_process(const oracle::RandomModel& rm, double t1) {
    qw::ExactProcess p;
    p.model = qw::TwoLevelCollective{static_cast<std::size_t>(rm.N), 1.0, 1.0};
    p.tau = rm.tau;
    p.t1 = t1;
    p.h0 = qw::HermitianOperator(rm.h0);
    p.h1 = qw::HermitianOperator(rm.h1);
    p.h0s = qw::diagonalize(p.h0);
    p.h1s = qw::diagonalize(p.h1);
    p.psi0 = qw::PureState::basis(p.h0.dim(), 0);
    p.psi_t1 = qw::evolve(p.psi0, p.h1s, t1);
    p.psi_tau = qw::evolve(p.psi0, p.h1s, p.tau);
    p.u_tau_t1 = p.h1s.propagator(p.tau - t1);
    return p;
}

struct RandomCase {
    oracle::RandomModel model;
    double t1;
};

std::vector<RandomCase> random_set(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> frac(0.1, 0.9);
    std::vector<RandomCase> out;
    for (int i = 0; i < count; ++i) {
        const int N = 2 + i % 5;  // 2..6
        auto m = oracle::random_model(N, rng);
        const double t1 = frac(rng) * m.tau;
        out.push_back({std::move(m), t1});
    }
    return out;
}

oracle::Vec ground(int N) {
    oracle::Vec v = oracle::Vec::Zero(Eigen::Index{1} << N);
    v(0) = 1.0;
    return v;
}

const std::vector<double> kQGrid = {0.0, 0.25, 0.5, 0.75, 1.0};
constexpr std::uint64_t kSeed = 20240611;

// ----------------------------------------------------------------------------

Outcome criterion1() {
    Outcome o;
    double worst = 0, worst_oracle = 0;
    for (std::size_t N : {2u, 4u, 8u})
        for (double lambda : {1.0, 2.0}) {
            const qw::TwoLevelCollective m{N, 1.0, lambda};
            const auto p = qw::exact_process(m);
            const int n = static_cast<int>(N);
            const oracle::Mat h1 = oracle::two_level_h1(n, lambda), h0 = oracle::popcount_h0(n);
            const double tau = std::numbers::pi / (2 * lambda);
            const oracle::Vec psi1 = oracle::propagator(h1, tau / 2) * ground(n);
            const oracle::Mat U = oracle::propagator(h1, tau / 2);
            for (double q : kQGrid) {
                const auto closed = qw::two_level_pq(m, q);
                const auto direct = p.pq(q);
                const double gap = qw::atom_distance(closed, direct);
                worst = std::max(worst, gap);
                worst_oracle = std::max(worst_oracle, atom_gap(closed, oracle::triple_sum(psi1, h1, h0, U, q, false)));
                const double neg = qw::negativity(closed);
                if (q == 0.0 || q == 1.0) o.require(std::abs(neg - 1.0) <= 1e-12, "N=" + std::to_string(N) + " q=" + g(q) + " negativity " + g(neg) + " != 1");
                else o.require(neg > 1.0, "N=" + std::to_string(N) + " q=" + g(q) + " negativity " + g(neg) + " not > 1");
            }
        }
    o.require(worst <= 1e-10, "closed form vs direct build gap " + g(worst));
    o.require(worst_oracle <= 1e-10, "closed form vs raw triple sum gap " + g(worst_oracle));
    const auto d = qw::two_level_pq(qw::TwoLevelCollective{2, 1.0, 1.0}, 0.5);
    const std::vector<std::pair<double, double>> want = {{-1, .25}, {0, -.5}, {1, .5}, {2, .5}, {3, .25}};
    bool match = d.size() == want.size();
    for (std::size_t i = 0; match && i < want.size(); ++i)
        match = std::abs(d.atoms()[i].w - want[i].first) <= 1e-12 && std::abs(d.atoms()[i].p - want[i].second) <= 1e-12;
    o.require(match, "N=2 atoms differ from {(-1,1/4),(0,-1/2),(1,1/2),(2,1/2),(3,1/4)}");
    o.require(std::abs(qw::negativity(d) - 2.0) <= 1e-12, "N=2 negativity " + g(qw::negativity(d)));
    o.note("max closed-vs-direct " + g(worst) + ", vs triple sum " + g(worst_oracle));
    return o;
}

Outcome criterion2(const std::vector<RandomCase>& set) {
    Outcome o;
    double m12 = 0, m3 = 0, atoms = 0;
    for (const auto& c : set) {
        const auto p = to_process(c.model, c.t1);
        const oracle::Vec psi1 = oracle::propagator(c.model.h1, c.t1) * ground(c.model.N);
        const oracle::Mat U = oracle::propagator(c.model.h1, c.model.tau - c.t1);
        const oracle::Mat heis = U.adjoint() * c.model.h0 * U;
        double ref1 = 0, ref2 = 0;
        for (double q : kQGrid) {
            const auto d = p.pq(q);
            const auto od = oracle::triple_sum(psi1, c.model.h1, c.model.h0, U, q, false);
            atoms = std::max(atoms, atom_gap(d, od));
            if (q == 0.0) {
                ref1 = qw::moment(d, 1);
                ref2 = qw::moment(d, 2);
            }
            m12 = std::max({m12, std::abs(qw::moment(d, 1) - ref1), std::abs(qw::moment(d, 2) - ref2)});
            const auto an = qw::analytic_moments(qw::PureState(psi1), c.model.h1, heis, q);
            m3 = std::max(m3, std::abs(an.m3 - od.moment(3).real()));
        }
    }
    o.require(m12 <= 1e-9, "first/second moment spread over q " + g(m12));
    o.require(m3 <= 1e-8, "analytic third moment vs distribution " + g(m3));
    o.require(atoms <= 1e-9, "direct build vs raw triple sum " + g(atoms));
    o.note(std::to_string(set.size()) + " models; moment spread " + g(m12) + ", m3 gap " + g(m3) + ", atom gap " + g(atoms));
    return o;
}

Outcome criterion3(const std::vector<RandomCase>& set) {
    Outcome o;
    double gap = 0, corr01 = 0;
    for (const auto& c : set) {
        const auto p = to_process(c.model, c.t1);
        const oracle::Vec psi1 = oracle::propagator(c.model.h1, c.t1) * ground(c.model.N);
        const oracle::Mat U = oracle::propagator(c.model.h1, c.model.tau - c.t1);
        for (double q : kQGrid) {
            const auto rep = qw::kappa3_decomposition(p, q);
            const auto od = oracle::triple_sum(psi1, c.model.h1, c.model.h0, U, q, false);
            const auto k = oracle::cumulants_from_moments({od.moment(1), od.moment(2), od.moment(3)});
            gap = std::max(gap, std::abs(rep.kappa3 - k[2].real()));
            if (q == 0.0 || q == 1.0) corr01 = std::max(corr01, std::abs(rep.correction));
        }
    }
    o.require(gap <= 1e-8, "kappa3 decomposition vs distribution cumulant " + g(gap));
    o.require(corr01 == 0.0, "correction at q in {0,1} is " + g(corr01));
    const auto r = qw::kappa3_decomposition(qw::BatteryModel(qw::TwoLevelCollective{2, 1.0, 1.0}), 0.5);
    const bool triple = std::abs(r.kappa3_prime) <= 1e-10 && std::abs(r.correction + 3) <= 1e-10 && std::abs(r.kappa3 + 3) <= 1e-10;
    o.require(triple, "two-level N=2 gives (" + g(r.kappa3_prime) + "," + g(r.correction) + "," + g(r.kappa3) + ")");
    o.note("max gap " + g(gap) + "; N=2 two-level (kappa3', correction, kappa3) = (" + g(r.kappa3_prime) + ", " +
           g(r.correction) + ", " + g(r.kappa3) + ")");
    return o;
}

Outcome criterion4() {
    Outcome o;
    double xq = 0, deriv = 0, deriv_lib = 0;
    for (auto [N, r] : std::vector<std::pair<int, int>>{{8, 2}, {8, 4}, {10, 5}}) {
        const double lambda = r;
        const qw::SpinBlock m{static_cast<std::size_t>(N), static_cast<std::size_t>(r), lambda, 1.0, 0.0};
        const oracle::Mat h1 = oracle::spinblock_h1(N, r, lambda), h0 = oracle::popcount_h0(N);
        const oracle::Evolver e1(h1), e0(h0);
        const double tau = std::numbers::pi / (2 * lambda);
        const oracle::Vec psi_tau = e1.apply(ground(N), tau);
        for (double q : kQGrid)
            for (double u : qw::uniform_grid(-3.0, 3.0, 50))
                xq = std::max(xq, std::abs(qw::spinblock_Xq_closed(m, u, q) - oracle::xq_dense(psi_tau, e0, e1, u, q)));
        // g derivatives from the cumulants of the X-measure: ln X = iuE0max + N g(u)
        const oracle::Vec psi1 = e1.apply(ground(N), tau / 2);
        const oracle::Mat U = oracle::propagator(h1, tau / 2);
        for (double q : {0.25, 0.5, 0.8}) {
            const auto xm = oracle::triple_sum(psi1, h1, h0, U, q, true);
            const auto k = oracle::cumulants_from_moments({xm.moment(1), xm.moment(2), xm.moment(3)});
            const oracle::cplx i(0, 1);
            const oracle::cplx g1 = (i * k[0] - i * double(N)) / double(N), g2 = -k[1] / double(N), g3 = -i * k[2] / double(N);
            const oracle::cplx w1 = 0.0, w2 = -lambda * lambda / r, w3 = i * (6 * q * (1 - q) * lambda * lambda);
            deriv = std::max({deriv, std::abs(g1 - w1), std::abs(g2 - w2), std::abs(g3 - w3)});
            const auto lib = qw::gq_derivs_from_block_atoms(m, q);
            const auto an = qw::spinblock_gq_derivs(m, q);
            deriv_lib = std::max({deriv_lib, std::abs(lib.g1 - w1), std::abs(lib.g2 - w2), std::abs(lib.g3 - w3),
                                  std::abs(an.g1 - w1), std::abs(an.g2 - w2), std::abs(an.g3 - w3)});
        }
        const auto inv = qw::inversion_symmetry_check(qw::BatteryModel(m));
        o.require(inv.symmetric && inv.expectations_match, "U_I symmetry at N=" + std::to_string(N) + " r=" + std::to_string(r));
        oracle::Mat sx(2, 2);
        sx << 0, 1, 1, 0;
        oracle::Mat ui = oracle::Mat::Identity(1, 1);
        for (int s = 0; s < N; ++s) ui = oracle::kron(ui, sx);
        o.require((ui * h1 * ui - h1).cwiseAbs().maxCoeff() <= 1e-12, "oracle U_I H1 U_I != H1");
    }
    o.require(xq <= 1e-9, "closed-form X_q vs dense trace " + g(xq));
    o.require(deriv <= 1e-8, "X-measure g-derivatives vs analytic " + g(deriv));
    o.require(deriv_lib <= 1e-8, "library g-derivatives vs analytic " + g(deriv_lib));
    o.note("X_q gap " + g(xq) + ", derivative gaps " + g(deriv) + " / " + g(deriv_lib));
    return o;
}

Outcome criterion5() {
    Outcome o;
    double gap = 0;
    for (std::size_t r : {2u, 4u})
        for (double q : kQGrid) {
            const qw::SpinBlock m{8, r, static_cast<double>(r), 1.0, 0.0};
            const auto direct = qw::exact_process(m).pq(q);
            const auto conv = qw::model_pq(m, q, qw::Route::convolution);
            const auto four = qw::model_pq(m, q, qw::Route::fourier);
            gap = std::max({gap, qw::atom_distance(direct, conv), qw::atom_distance(direct, four), qw::atom_distance(conv, four)});
        }
    o.require(gap <= 1e-9, "route disagreement at N=8: " + g(gap));
    const auto preset = qw::figure_preset("fig1");
    const auto t0 = std::chrono::steady_clock::now();
    const auto d = qw::model_pq(preset.model, 0.5, qw::Route::convolution);
    const double secs = seconds_since(t0);
    o.require(secs < 10.0, "fig1 convolution took " + g(secs) + " s");
    o.require(std::abs(d.atom_set().total() - 1.0) <= 1e-9, "fig1 convolution not normalized");
    o.note("route gap " + g(gap) + "; fig1 convolution " + g(secs) + " s, " + std::to_string(d.size()) + " atoms");
    return o;
}

Outcome criterion6() {
    Outcome o;
    for (const char* name : {"fig1", "fig2"}) {
        const auto p = qw::figure_preset(name);
        const auto d = qw::model_pq(p.model, 0.5);
        o.require(qw::min_weight(d) < -1e-6, std::string(name) + " min weight " + g(qw::min_weight(d)));
        o.require(qw::negativity(d) > 1.01, std::string(name) + " negativity " + g(qw::negativity(d)));
        o.note(std::string(name) + ": min weight " + g(qw::min_weight(d)) + ", negativity " + g(qw::negativity(d)) + " (" +
               qw::to_string(qw::resolved_route(p.model, 0.5)) + ")");
    }
    qw::BlockRule rule;
    rule.kind = qw::BlockRule::fixed;
    rule.value = 2;
    const auto res = qw::theorem_pipeline(rule, {16, 64, 256, 1024});
    o.require(res.rows.size() == 4, "fixed-r sweep rows " + std::to_string(res.rows.size()));
    double worst = 0;
    std::string routes, devs, skews, scaled;
    for (const auto& a : res.rows) {
        worst = std::min(worst, a.min_weight);
        scaled += g(a.scaled_negative_mass) + " ";
        routes += a.route + " ";
        devs += g(a.gaussian_sup_deviation) + " ";
        skews += g(a.skewness_sqrtN) + " ";
    }
    o.require(worst >= -1e-12, "fixed-r sweep has weights down to " + g(worst) + " (atom-level negativity persists)");
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        o.require(res.rows[i].gaussian_sup_deviation < res.rows[i - 1].gaussian_sup_deviation,
                  "Gaussian deviation not decreasing at N=" + std::to_string(res.rows[i].N));
    double smax = 0;
    for (const auto& a : res.rows) smax = std::max(smax, std::abs(a.skewness_sqrtN));
    o.require(smax <= 2 * std::abs(res.rows.front().skewness_sqrtN), "skewness*sqrt(N) grows: " + skews);
    o.note("fixed r=2 routes [" + routes + "] sup-dev [" + devs + "] skew*sqrtN [" + skews + "] min weight " + g(worst));
    o.note("negative mass after binning at sqrt(N) eps0 [" + scaled + "]");
    return o;
}

Outcome criterion7() {
    Outcome o;
    qw::BlockRule f1{qw::BlockRule::power, 0.75}, f2{qw::BlockRule::fixed, 2}, f3{qw::BlockRule::power, 0.25};
    const std::vector<std::size_t> pow_list = {16, 81, 256, 625, 1296}, fixed_list = {16, 64, 256, 1024};
    const auto r1 = qw::theorem_pipeline(f1, pow_list);
    const auto r2 = qw::theorem_pipeline(f2, fixed_list);
    const auto r3 = qw::theorem_pipeline(f3, pow_list);
    const auto& v1 = r1.verdict;
    o.require(v1.negativity_persistent && v1.negativity_growing, "family 1 premise (persistent, growing negativity) absent");
    o.require(v1.implication_holds && v1.tau_to_zero, "family 1 negativity does not come with tau -> 0");
    o.require(r3.verdict.converse_counterexample,
              "family 3 converse counterexample not recorded (negativity present=" +
                  std::string(r3.verdict.negativity_present ? "yes" : "no") + ", tau->0=" +
                  std::string(r3.verdict.tau_to_zero ? "yes" : "no") + ")");
    o.require(v1.lemma1_growing && v1.lemma1_fit.exponent > 0.2 && v1.lemma1_fit.r2 > 0.99,
              "family 1 Lemma-1 metric fit exponent " + g(v1.lemma1_fit.exponent) + " R2 " + g(v1.lemma1_fit.r2));
    o.note("family 1: implication " + std::string(v1.implication_holds ? "holds" : "violated") + ", lemma1 exponent " +
           g(v1.lemma1_fit.exponent));
    o.note("family 2: implication " + std::string(r2.verdict.implication_holds ? "holds" : "violated") + ", tau->0 " +
           (r2.verdict.tau_to_zero ? "yes" : "no"));
    o.note("family 3: negativity present " + std::string(r3.verdict.negativity_present ? "yes" : "no") + ", tau->0 " +
           (r3.verdict.tau_to_zero ? "yes" : "no"));
    return o;
}

Outcome criterion8() {
    Outcome o;
    double worst = 0;
    struct Case {
        qw::BatteryModel m;
        oracle::Mat h1;
        int N;
        double lambda;
    };
    std::vector<Case> cases = {{qw::TwoLevelCollective{4, 1.0, 1.0}, oracle::two_level_h1(4, 1.0), 4, 1.0},
                               {qw::TwoLevelCollective{8, 1.0, 2.0}, oracle::two_level_h1(8, 2.0), 8, 2.0},
                               {qw::SpinBlock{8, 2, 2.0, 1.0, 0.0}, oracle::spinblock_h1(8, 2, 2.0), 8, 2.0},
                               {qw::SpinBlock{6, 3, 3.0, 1.0, 0.0}, oracle::spinblock_h1(6, 3, 3.0), 6, 3.0}};
    const auto grid = qw::uniform_grid(-2.0, 2.0, 21);
    for (const auto& c : cases) {
        const auto p = qw::exact_process(c.m);
        const oracle::Evolver e1(c.h1), e0(oracle::popcount_h0(c.N));
        const oracle::Vec psi_tau = e1.apply(ground(c.N), std::numbers::pi / (2 * c.lambda));
        for (double q : {0.0, 0.3, 0.5}) {
            const auto s = qw::reconstruct_Xq(p, grid, q);
            for (std::size_t i = 0; i < grid.size(); ++i)
                worst = std::max(worst, std::abs(s.values[i] - oracle::xq_dense(psi_tau, e0, e1, grid[i], q)));
        }
        const auto pr = qw::QuenchProtocol::from(p);
        qw::DetectorSpec zero;
        const auto rz = qw::simulate_readout(pr, p.t1, p.tau, zero);
        const oracle::cplx norm = zero.coherence() * std::polar(1.0, -zero.omega * p.tau);
        o.require(std::abs(rz.coherence / norm - 1.0) <= 1e-12, "zero-kick readout " + g(std::abs(rz.coherence / norm - 1.0)));
        o.require(std::abs(rz.system_purity - 1.0) <= 1e-12, "zero-kick purity " + g(rz.system_purity));
        qw::DetectorSpec diag = zero.programmed(0.7, 0.5);
        diag.rho << 0.3, 0.0, 0.0, 0.7;
        const auto rd = qw::simulate_readout(pr, p.t1, p.tau, diag);
        o.require(rd.coherence == oracle::cplx(0.0), "diagonal detector coherence " + g(std::abs(rd.coherence)));
    }
    o.require(worst <= 1e-10, "reconstructed X_q vs dense trace " + g(worst));
    o.note("max readout gap " + g(worst) + " over 4 models x 3 q x 21 u");
    return o;
}

Outcome criterion9() {
    Outcome o;
    bool witness = false;
    double lhs = 0, spread = 0, sig_gap = 0;
    std::vector<qw::BatteryModel> models = {qw::TwoLevelCollective{2, 1.0, 1.0}, qw::TwoLevelCollective{4, 1.0, 1.5},
                                            qw::SpinBlock{4, 2, 2.0, 1.0, 0.0}, qw::SpinBlock{6, 3, 3.0, 1.0, 0.0},
                                            qw::SpinBlock{8, 2, 2.0, 1.0, 0.0}};
    for (const auto& m : models)
        for (double f : {0.25, 0.5, 0.75}) {
            const auto p = qw::exact_process(m, f * qw::charging_time(m));
            const auto run = qw::lg_pipeline(p);
            const auto& r = run.report;
            o.require(r.sigma2_tau == 0.0, "sigma2_tau " + g(r.sigma2_tau) + " for " + qw::model_name(m));
            o.require(r.rhs == 0.0 && !r.violated, std::string("violated for ") + qw::model_name(m));
            lhs = std::max(lhs, r.lhs);
            spread = std::max(spread, run.sigma2_spread);
            // oracle variance at q = 1/2 from the raw triple sum
            const int N = static_cast<int>(qw::cells(m));
            const oracle::Mat h1 = p.h1.matrix();
            const oracle::Vec psi1 = oracle::propagator(h1, p.t1) * ground(N);
            const auto od = oracle::triple_sum(psi1, h1, oracle::popcount_h0(N), oracle::propagator(h1, p.tau - p.t1), 0.5, false);
            const double var = (od.moment(2) - od.moment(1) * od.moment(1)).real();
            sig_gap = std::max(sig_gap, std::abs(var - run.sigma2_by_q[1]));
            if (!r.violated && run.negativity_half > 1.0 + 1e-9) witness = true;
        }
    o.require(lhs <= 1e-10, "lhs " + g(lhs) + " not 0");
    o.require(spread <= 1e-10, "sigma2 spread over q " + g(spread));
    o.require(sig_gap <= 1e-9, "sigma2 vs raw triple sum " + g(sig_gap));
    o.require(witness, "no run pairs non-violation with negativity > 1");
    o.note("max lhs " + g(lhs) + ", sigma2 spread " + g(spread));
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome criterion10(double elapsed_before, const std::vector<RandomCase>& set) {
    Outcome o;
    const auto again = random_set(kSeed, static_cast<int>(set.size()));
    bool same = true;
    for (std::size_t i = 0; i < set.size(); ++i)
        same = same && set[i].model.h1 == again[i].model.h1 && set[i].t1 == again[i].t1;
    o.require(same, "random model set differs under the same seed");

    qw::BlockRule rule{qw::BlockRule::power, 0.75};
    const auto a = qw::theorem_pipeline(rule, {16, 81, 256});
    const auto b = qw::theorem_pipeline(rule, {16, 81, 256});
    o.require(qw::to_json(a.verdict).dump() == qw::to_json(b.verdict).dump() &&
                  qw::to_json(a.rows.back()).dump() == qw::to_json(b.rows.back()).dump(),
              "sweep output differs between runs");

    const fs::path base = fs::temp_directory_path() / "qworklab_acceptance";
    fs::remove_all(base);
    bool cli_same = true;
    for (const char* preset : {"fig1", "fig2"}) {
        for (int run = 0; run < 2; ++run) {
            const std::string cmd = std::string(QWORKLAB_CLI) + " histogram --preset " + preset + " --seed 7 --out " +
                                    (base / (std::string(preset) + std::to_string(run))).string() + " > /dev/null 2>&1";
            o.require(std::system(cmd.c_str()) == 0, std::string("cli histogram ") + preset + " failed");
        }
        for (const char* f : {"atoms.csv", "histogram.csv", "metadata.json"})
            cli_same = cli_same && slurp(base / (std::string(preset) + "0") / f) == slurp(base / (std::string(preset) + "1") / f);
    }
    o.require(cli_same, "cli outputs differ between identical runs");
    fs::remove_all(base);
    o.note("acceptance checks ran in " + g(elapsed_before) + " s");
    o.require(elapsed_before < 300.0, "acceptance run exceeded 5 minutes");
    return o;
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto set = random_set(kSeed, 50);
    std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
        {"two-level closed form", criterion1},
        {"moment laws", [&] { return criterion2(set); }},
        {"kappa3 decomposition", [&] { return criterion3(set); }},
        {"spin-block closed forms", criterion4},
        {"route equivalence", criterion5},
        {"figure reproduction", criterion6},
        {"theorem pipeline", criterion7},
        {"detector scheme", criterion8},
        {"covariance inequality", criterion9},
        {"runtime and determinism", [&] { return criterion10(seconds_since(t0), set); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const auto ts = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = checks[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.notes.push_back(std::string("exception: ") + e.what());
        }
        failed += o.pass ? 0 : 1;
        std::cout << "criterion " << (i + 1) << " [" << checks[i].first << "]: " << (o.pass ? "PASS" : "FAIL") << " ("
                  << g(seconds_since(ts)) << " s)\n";
        for (const auto& n : o.notes) std::cout << "    " << n << "\n";
        std::cout.flush();
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
    return failed == 0 ? 0 : 1;
}
