// test_analysis.cpp — advantage diagnostics, detector, TPM/covariance checks,
// model-spec ingestion and command-line behavior

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "qworklab/qworklab.hpp"

namespace qw = qworklab;
namespace fs = std::filesystem;
using qw::cplx;

namespace {

const qw::TwoLevelCollective kTwo{2, 1.0, 1.0};
const qw::SpinBlock kBlock{8, 2, 2.0, 1.0, 0.0};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

/// Runs the CLI and returns its exit status.
int cli(const std::string& args) {
    const std::string cmd = std::string(QWORKLAB_CLI) + " " + args + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qworklab_test_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

// ------------------------------------------------------------------- advantage

TEST(Advantage, Lemma1Metric) {
    EXPECT_DOUBLE_EQ(qw::lemma1_metric(kBlock), 4.0);
    EXPECT_NEAR(qw::lemma1_metric_exact(kBlock), 4.0, 1e-12);
    EXPECT_DOUBLE_EQ(qw::lemma1_metric(kTwo), 1.0);
    EXPECT_NEAR(qw::lemma1_metric_exact(kTwo), 1.0, 1e-14);
    const qw::SpinBlock pert{6, 2, 2.0, 1.0, 0.5};
    EXPECT_NEAR(qw::lemma1_metric(pert), qw::lemma1_metric_exact(pert), 1e-12);
}

TEST(Advantage, ParallelChargingMetricBounded) {
    // r = 1: 1-local charging, the metric per cell does not grow with N
    const double a = qw::lemma1_metric_exact(qw::SpinBlock{4, 1, 1.0, 1.0, 0.0});
    const double b = qw::lemma1_metric_exact(qw::SpinBlock{8, 1, 1.0, 1.0, 0.0});
    EXPECT_NEAR(a, b, 1e-12);
    const auto loc = qw::locality_bound(qw::SpinBlock{8, 1, 1.0, 1.0, 0.0});
    EXPECT_TRUE(loc.within_bound);
    EXPECT_EQ(loc.radius, 1u);
}

TEST(Advantage, ShortTime) {
    const auto pts = qw::short_time_expansion_check(kBlock, {0.0, 1e-2, 1e-3, 1e-4});
    EXPECT_EQ(pts[0].energy, 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_LT(std::abs(pts[i].residual_over_t3), 10.0);
    // no linear term: ⟨H0⟩_t / t shrinks in proportion to t
    for (std::size_t i = 2; i < pts.size(); ++i)
        EXPECT_NEAR((pts[i].energy / pts[i].t) / (pts[i - 1].energy / pts[i - 1].t), 0.1, 1e-3);
}

TEST(Advantage, Kappa3) {
    const auto r = qw::kappa3_decomposition(qw::BatteryModel(kTwo), 0.5);
    EXPECT_NEAR(r.kappa3_prime, 0.0, 1e-12);
    EXPECT_NEAR(r.correction, -3.0, 1e-12);
    EXPECT_NEAR(r.kappa3, -3.0, 1e-12);
    EXPECT_TRUE(r.consistent);
    const auto r0 = qw::kappa3_decomposition(qw::BatteryModel(kBlock), 0.0);
    EXPECT_EQ(r0.correction, 0.0);
    EXPECT_NEAR(r0.kappa3, r0.kappa3_distribution, 1e-8);
}

TEST(Advantage, InversionSymmetry) {
    EXPECT_TRUE(qw::inversion_symmetry_check(qw::BatteryModel(kBlock)).symmetric);
    EXPECT_TRUE(qw::inversion_symmetry_check(qw::BatteryModel(qw::SpinBlock{10, 5, 5.0, 1.0, 0.0})).symmetric);
    EXPECT_TRUE(qw::inversion_symmetry_check(qw::BatteryModel(kTwo)).symmetric);
    const qw::Matrix h1 = qw::h1_operator(kBlock).matrix() + qw::embed_sites({{1, qw::ops::sigma_z()}}, 2, 8);
    const qw::Matrix h0 = qw::h0_operator(kBlock).matrix();
    EXPECT_FALSE(qw::inversion_symmetry_check(h0, h1, qw::inversion_unitary(8), 8.0, 0.5).symmetric);
    EXPECT_THROW(qw::inversion_symmetry_check(h0, h1, 2.0 * qw::inversion_unitary(8), 8.0, 0.5), qw::ValidationError);
}

TEST(Advantage, LocalityRadius) {
    EXPECT_EQ(qw::locality_bound(kBlock).radius, 2u);
    EXPECT_EQ(qw::locality_bound(kTwo).radius, 2u);
    EXPECT_EQ(qw::locality_bound(qw::TwoLevelCollective{5, 1.0, 1.0}).radius, 5u);
    EXPECT_THROW(qw::locality_bound({}, 4, 1.0, 0.0), qw::ValidationError);
}

TEST(Advantage, GaussianLimitFixedBlock) {
    double prev = 1e9;
    for (std::size_t N : {8u, 16u, 32u, 64u}) {
        const qw::SpinBlock m{N, 2, 2.0, 1.0, 0.0};
        const auto d = qw::model_pq(m, 0.5);
        const auto gc = qw::gaussian_limit_compare(d, qw::spinblock_gq_derivs(m, 0.5).g2.real(), 1.0 * N, N);
        EXPECT_LT(gc.sup_deviation, prev) << "N=" << N;
        prev = gc.sup_deviation;
        EXPECT_NEAR(gc.sigma_model, gc.sigma_fitted, 1e-9);
    }
    EXPECT_THROW(qw::gaussian_limit_compare(qw::WorkQuasiDistribution::point(0.0), 0.0, 0.0, 1), qw::ValidationError);
}

TEST(Advantage, PowerLawFit) {
    const auto f = qw::fit_power_law({1, 2, 4, 8}, {3, 12, 48, 192});
    EXPECT_NEAR(f.exponent, 2.0, 1e-12);
    EXPECT_NEAR(f.prefactor, 3.0, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(Advantage, FamilyThreeQuartersTrends) {
    const auto res = qw::theorem_pipeline(qw::BlockRule{qw::BlockRule::power, 0.75}, {16, 64, 256, 1024});
    ASSERT_EQ(res.rows.size(), 4u);
    EXPECT_TRUE(res.verdict.negativity_present);
    EXPECT_TRUE(res.verdict.tau_decreasing);
    EXPECT_GT(res.rows.back().negativity, res.rows.front().negativity);
    for (std::size_t i = 1; i < res.rows.size(); ++i) {
        EXPECT_GT(res.rows[i].lemma1_metric, res.rows[i - 1].lemma1_metric);
        EXPECT_GE(res.rows[i].negativity, res.rows[i - 1].negativity);
    }
}

TEST(Advantage, FamilyThreeQuartersVerdict) {
    // N = m^4 so that r = N^{3/4} needs no snapping
    const auto res = qw::theorem_pipeline(qw::BlockRule{qw::BlockRule::power, 0.75}, {16, 81, 256, 625});
    EXPECT_TRUE(res.verdict.negativity_persistent);
    EXPECT_TRUE(res.verdict.tau_to_zero);
    EXPECT_TRUE(res.verdict.implication_holds);
    EXPECT_TRUE(res.verdict.lemma1_growing);
}

TEST(Advantage, FixedBlockTauConstant) {
    const auto res = qw::theorem_pipeline(qw::BlockRule{qw::BlockRule::fixed, 2}, {16, 64, 256});
    for (const auto& a : res.rows) EXPECT_DOUBLE_EQ(a.tau, res.rows.front().tau);
    EXPECT_FALSE(res.verdict.tau_to_zero);
}

TEST(Advantage, InfeasibleRowSkipped) {
    const auto res = qw::theorem_pipeline(qw::BlockRule{qw::BlockRule::power, 0.75}, {16, 23, 256});
    EXPECT_EQ(res.rows.size(), 2u);
    ASSERT_EQ(res.skipped.size(), 1u);
    EXPECT_EQ(res.skipped[0].N, 23u);
    EXPECT_FALSE(res.skipped[0].reason.empty());
}

// -------------------------------------------------------------------- detector

TEST(Detector, ZeroKickFreePrecession) {
    const auto p = qw::exact_process(kBlock);
    const qw::DetectorSpec det;
    const auto r = qw::simulate_readout(qw::QuenchProtocol::from(p), p.t1, p.tau, det);
    EXPECT_LT(std::abs(r.coherence - det.coherence() * std::polar(1.0, -det.omega * p.tau)), 1e-13);
}

TEST(Detector, DiagonalDetectorHasNoCoherence) {
    const auto p = qw::exact_process(kTwo);
    qw::DetectorSpec det = qw::DetectorSpec{}.programmed(0.8, 0.5);
    det.rho << 0.4, 0.0, 0.0, 0.6;
    EXPECT_EQ(qw::simulate_readout(qw::QuenchProtocol::from(p), p.t1, p.tau, det).coherence, cplx(0.0));
    EXPECT_THROW(qw::reconstruct_Xq(p, {0.1}, 0.5, det), qw::ValidationError);
}

TEST(Detector, ReconstructsXq) {
    const auto grid = qw::uniform_grid(-2.0, 2.0, 21);
    for (const qw::BatteryModel& m : {qw::BatteryModel(kBlock), qw::BatteryModel(qw::TwoLevelCollective{4, 1.0, 1.0})}) {
        const auto p = qw::exact_process(m);
        const auto s = qw::reconstruct_Xq(p, grid, 0.5);
        EXPECT_LT(std::abs(s.values[10] - 1.0), 1e-13);  // u = 0
        for (std::size_t i = 0; i < grid.size(); ++i) {
            EXPECT_LT(std::abs(s.values[i] - p.X_q(grid[i], 0.5)), 1e-10);
            EXPECT_LT(std::abs(s.values[i] - qw::model_Xq(m, grid[i], 0.5)), 1e-10);
        }
    }
}

TEST(Detector, ClosedFormReadout) {
    const auto p = qw::exact_process(kBlock);
    const auto pr = qw::QuenchProtocol::from(p);
    const qw::DetectorSpec det = qw::DetectorSpec{}.programmed(0.7, 0.3);
    EXPECT_LT(std::abs(qw::simulate_readout(pr, p.t1, p.tau, det).coherence - qw::readout_closed_form(pr, p.t1, p.tau, det)), 1e-12);
    EXPECT_THROW(qw::simulate_readout(pr, p.tau, p.t1, det), qw::ValidationError);
}

// ---------------------------------------------------------------------- tpm/lg

TEST(TpmLg, IdentityEvolutionGivesPointMass) {
    const auto h0 = qw::diagonalize(qw::h0_operator(kTwo));
    const auto t = qw::tpm_distribution(std::vector<double>{0.25, 0.25, 0.25, 0.25}, h0, qw::Matrix::Identity(4, 4), h0);
    ASSERT_EQ(t.dist.size(), 1u);
    EXPECT_DOUBLE_EQ(t.dist.atoms()[0].w, 0.0);
    EXPECT_EQ(qw::variance(t.dist), 0.0);
}

TEST(TpmLg, TwoLevelIntervals) {
    const qw::TwoLevelCollective m{3, 1.0, 1.0};
    const auto p = qw::exact_process(m);
    const qw::Matrix rho0 = p.psi0.amplitudes() * p.psi0.amplitudes().adjoint();
    const auto full = qw::tpm_distribution(rho0, p.h0s, p.h1s.propagator(p.tau), p.h0s);
    ASSERT_EQ(full.dist.size(), 1u);
    EXPECT_NEAR(full.dist.atoms()[0].w, 3.0, 1e-12);
    const auto half = qw::tpm_distribution(rho0, p.h0s, p.h1s.propagator(p.tau / 2), p.h0s);
    ASSERT_EQ(half.dist.size(), 2u);
    EXPECT_NEAR(half.dist.atoms()[0].p, 0.5, 1e-12);
    EXPECT_NEAR(half.dist.atoms()[1].w, 3.0, 1e-12);
    qw::Matrix coherent = qw::Matrix::Constant(8, 8, 0.125);
    EXPECT_THROW(qw::tpm_distribution(coherent, p.h0s, p.u_tau_t1, p.h0s), qw::ValidationError);
}

TEST(TpmLg, Arithmetic) {
    const auto a = qw::lg_check(0.0, 1.0, 1.0);
    EXPECT_EQ(a.lhs, 0.0);
    EXPECT_EQ(a.rhs, 0.0);
    EXPECT_FALSE(a.violated);
    const auto b = qw::lg_check(1.0, 1.0, 2.0);
    EXPECT_EQ(b.lhs, 0.0);
    EXPECT_EQ(b.rhs, 2.0);
    EXPECT_FALSE(b.violated);
    const auto c = qw::lg_check(0.1, 0.1, 1.0);
    EXPECT_NEAR(c.lhs, 0.8, 1e-15);
    EXPECT_NEAR(c.rhs, 0.02, 1e-15);
    EXPECT_TRUE(c.violated);
    EXPECT_THROW(qw::lg_check(-1.0, 0.0, 0.0), qw::ValidationError);
}

TEST(TpmLg, PipelineFullyCharged) {
    const auto run = qw::lg_pipeline(qw::exact_process(kBlock));
    EXPECT_EQ(run.report.sigma2_tau, 0.0);
    EXPECT_FALSE(run.report.violated);
    EXPECT_LT(run.report.lhs, 1e-10);
    EXPECT_LT(run.sigma2_spread, 1e-10);
    EXPECT_GT(run.negativity_half, 1.0);
}

// ----------------------------------------------------------------------- specs

TEST(Specs, Defaults) {
    const auto rs = qw::load_model_spec(R"({"model":"spin_block","N":16})");
    const auto& m = std::get<qw::SpinBlock>(rs.model);
    EXPECT_EQ(m.r, 8u);
    EXPECT_DOUBLE_EQ(m.lambda, 8.0);
    EXPECT_DOUBLE_EQ(rs.q, 0.5);
    EXPECT_TRUE(rs.snap.has_value());
    const auto two = qw::load_model_spec("two_level:N=2");
    EXPECT_DOUBLE_EQ(std::get<qw::TwoLevelCollective>(two.model).lambda, 1.0);
}

TEST(Specs, FieldErrorsNamed) {
    auto message = [](const std::string& spec) {
        try {
            qw::load_model_spec(spec);
        } catch (const qw::ValidationError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message(R"({"model":"spin_block","N":8,"bogus":1})").find("bogus"), std::string::npos);
    EXPECT_NE(message(R"({"model":"spin_block","N":8,"r":3})").find("r"), std::string::npos);
    EXPECT_NE(message(R"({"model":"two_level","N":-2})").find("N"), std::string::npos);
    EXPECT_NE(message(R"({"model":"two_level","N":2,"t1":5})").find("t1"), std::string::npos);
    EXPECT_NE(message("{not json").find("invalid JSON"), std::string::npos);
    EXPECT_NE(message("cubic:N=2").find("model"), std::string::npos);
}

TEST(Specs, JsonEncodingFinite) {
    const auto j = qw::to_json(qw::AdvantageReport{});
    EXPECT_TRUE(j["gaussian_sup_deviation"].is_null());
    EXPECT_EQ(qw::fmt17(0.1), "0.10000000000000001");
}

// ------------------------------------------------------------------------- cli

TEST(Cli, HistogramTwoLevelZero) {
    const fs::path out = scratch("hist_q0");
    ASSERT_EQ(cli("histogram --model two_level:N=2 --q 0 --out " + out.string()), 0);
    const auto d = qw::read_csv((out / "atoms.csv").string());
    ASSERT_EQ(d.size(), 2u);
    EXPECT_DOUBLE_EQ(d.atoms()[0].w, 1.0);
    EXPECT_DOUBLE_EQ(d.atoms()[1].p, 0.5);
    std::ifstream h(out / "histogram.csv");
    std::string line;
    std::getline(h, line);
    EXPECT_EQ(line, "w_bin_center,mass");
    int nonzero = 0;
    while (std::getline(h, line)) nonzero += line.substr(line.find(',') + 1) != "0" ? 1 : 0;
    EXPECT_EQ(nonzero, 2);
    const auto meta = qw::json::parse(slurp(out / "metadata.json"));
    EXPECT_EQ(meta["negativity"].get<double>(), 1.0);
    EXPECT_EQ(meta["version"].get<std::string>(), QWORKLAB_VERSION);
}

TEST(Cli, HistogramDeterministic) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(cli("histogram --preset fig1 --seed 5 --out " + a.string()), 0);
    ASSERT_EQ(cli("histogram --preset fig1 --seed 5 --out " + b.string()), 0);
    for (const char* f : {"atoms.csv", "histogram.csv", "metadata.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    const auto meta = qw::json::parse(slurp(a / "metadata.json"));
    EXPECT_GT(meta["negativity"].get<double>(), 1.0);
    EXPECT_GT(meta["negative_bins"].get<int>(), 0);
    EXPECT_EQ(meta["snap"]["N_requested"].get<int>(), 1000);
}

TEST(Cli, SweepOutputs) {
    const fs::path out = scratch("sweep");
    ASSERT_EQ(cli("sweep --r-rule pow:0.75 --n-list 16,81,256 --out " + out.string()), 0);
    std::ifstream csv(out / "sweep.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "N,r,k,lambda,tau,lemma1_metric,kappa3_over_N,negativity,min_weight,skewness");
    const auto v = qw::json::parse(slurp(out / "verdict.json"));
    EXPECT_TRUE(v["verdict"]["implication_holds"].get<bool>());
    EXPECT_EQ(v["rows"].size(), 3u);
}

TEST(Cli, DiagnoseDetectorLg) {
    const fs::path d = scratch("diag");
    ASSERT_EQ(cli("diagnose --model two_level:N=2 --out " + d.string()), 0);
    const auto j = qw::json::parse(slurp(d / "diagnose.json"));
    EXPECT_NEAR(j["kappa3"]["kappa3_prime"].get<double>(), 0.0, 1e-12);
    EXPECT_NEAR(j["kappa3"]["correction"].get<double>(), -3.0, 1e-12);
    const fs::path det = scratch("det");
    ASSERT_EQ(cli("detector --model two_level:N=2 --out " + det.string()), 0);
    EXPECT_LT(qw::json::parse(slurp(det / "detector.json"))["max_abs_dev_vs_trace"].get<double>(), 1e-10);
    const fs::path lg = scratch("lg");
    ASSERT_EQ(cli("lg --model two_level:N=2 --out " + lg.string()), 0);
    const auto l = qw::json::parse(slurp(lg / "lg.json"));
    EXPECT_FALSE(l["violated"].get<bool>());
    EXPECT_LT(l["lhs"].get<double>(), 1e-10);
    EXPECT_EQ(l["rhs"].get<double>(), 0.0);
}

TEST(Cli, ExitCodes) {
    const fs::path out = scratch("bad");
    EXPECT_EQ(cli("histogram --model two_level:N=0 --out " + out.string()), 1);
    EXPECT_EQ(cli("histogram --model '{\"model\":\"spin_block\",\"N\":8,\"x\":1}' --out " + out.string()), 1);
    EXPECT_EQ(cli("sweep --r-rule cubic:2 --out " + out.string()), 1);
    EXPECT_EQ(cli("nonsense"), 1);
    EXPECT_EQ(cli("histogram --model spin_block:N=8,r=2 --route fourier --out " + out.string()), 0);
}
