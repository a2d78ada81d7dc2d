// Acceptance gate: one PASS/FAIL line per shipped claim, with the measured
// quantity and its pinned tolerance on the line. Exit status is the number of
// failures. Criteria can be cherry-picked by number on the command line while
// iterating; no arguments runs all of them in order.
//
// The two sweep gates share work: the oracle sweeps of criterion 5 produce
// the beta_bar values that criterion 6 compares the online tuner against. A
// cherry-picked criterion 6 without 5 falls back to the shipped fixed betas.

#include <gddpc/gddpc.hpp>

#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

using namespace gddpc;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int crit, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", crit, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fd(double v) { return io::format_double(v); }

double secs(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// 1. LQ factorization: reconstruction and orthonormality on random bundles
// ---------------------------------------------------------------------------

void criterion_1() {
    const auto t0 = Clock::now();
    GaussianStream g(101);
    double max_rec = 0, max_orth = 0;
    for (int i = 0; i < 100; ++i) {
        HankelBundle b;
        b.m = 1 + i % 3;
        b.p = 1 + (i / 3) % 3;
        b.rho = 1 + (i / 9) % 4;
        b.T = 1 + (i / 36) % 5;
        const Index rows = (b.m + b.p) * b.rho + (b.m + b.p) * b.T;
        b.N = rows + 20 + i % 31;
        b.Zp = g.normal_mat((b.m + b.p) * b.rho, b.N);
        b.Uf = g.normal_mat(b.m * b.T, b.N);
        b.Yf = g.normal_mat(b.p * b.T, b.N);

        const LqFactors f = lq_decompose(b);
        const Mat M = b.stacked();
        Mat Q(rows, b.N);
        Q << f.Q1, f.Q2, f.Q3;
        max_rec = std::max(max_rec, (f.L() * Q - M).norm() / M.norm());
        max_orth = std::max(max_orth,
                            (Q * Q.transpose() - Mat::Identity(rows, rows)).norm());
    }
    const double el = secs(t0);
    report(1, max_rec < 1e-10 && max_orth < 1e-10 && el < 10.0,
           "lq reconstruction max " + fd(max_rec) + ", orthonormality max " + fd(max_orth) +
               " (tol 1e-10 each), " + fd(el) + " s (limit 10)");
}

// ---------------------------------------------------------------------------
// 2. Noise-free data: the unregularized data-driven step equals oracle MPC
// ---------------------------------------------------------------------------

void criterion_2() {
    const SystemModel sys = support::benchmark_plant();
    const Index rho = sys.n(), T = 20;
    const DataSet d = generate_dataset(sys, 250, 1.0, NoiseMode::None, 0.0, 1);
    const LqFactors f = lq_decompose(build_bundle(d, rho, T));
    ControlWeights w;
    w.Q = 2000.0 * Mat::Identity(1, 1);
    w.R = 0.01 * Mat::Identity(1, 1);

    GaussianStream g(202);
    double max_applied = 0, max_plan = 0;
    for (int k = 0; k < 20; ++k) {
        const Mat u_hist = g.normal_mat(1, rho);
        const Vec x0 = g.normal_vec(sys.n());
        Mat u_pad(1, rho + 1);
        u_pad << u_hist, Mat::Zero(1, 1);
        const SimResult sim = simulate(sys, u_pad, Mat::Zero(1, rho + 1), x0);
        const Vec z_init = make_init_window(u_hist, sim.y.leftCols(rho));
        const Vec y_r = g.normal_vec(T);

        const Vec g1 = gamma1_star(f.L11, z_init);
        const StepSolution dd = solve_unregularized(f, g1, y_r, w);
        const MpcSolution kf = solve_mpc(sys, sim.x.col(rho), y_r, w.Q, w.R);

        max_applied = std::max(max_applied, (dd.u_f.head(1) - kf.u_f.head(1)).norm() /
                                                kf.u_f.head(1).norm());
        max_plan = std::max(max_plan, (dd.u_f - kf.u_f).norm() / kf.u_f.norm());
    }
    report(2, max_applied < 1e-6,
           "applied-input rel err max " + fd(max_applied) + " over 20 instances (tol 1e-6); "
               "full plan max " + fd(max_plan));
}

// ---------------------------------------------------------------------------
// 3. Predictor-error variance formula against redrawn innovations
// ---------------------------------------------------------------------------

void criterion_3() {
    const auto t0 = Clock::now();
    Prop1Config pc;
    pc.n_redraws = 500;
    pc.N_data = 10000;
    pc.rho = 20;
    pc.T = 20;
    pc.seed = 1;
    pc.workers = 1;
    const Prop1Result r = prop1_montecarlo(support::benchmark_plant_innovation(), pc);
    const double trace_err = std::abs(r.trace_sample - r.trace_simple) / r.trace_simple;
    const double el = secs(t0);
    report(3, r.rel_frobenius < 0.15 && trace_err < 0.10 && el < 300.0,
           "covariance rel frobenius " + fd(r.rel_frobenius) + " (tol 0.15), trace rel err " +
               fd(trace_err) + " (tol 0.10), " + fd(el) + " s (limit 300)");
}

// ---------------------------------------------------------------------------
// 4. Noise-factor convergence: L33 L33' approaches sigma2 Hs Hs'
// ---------------------------------------------------------------------------

void criterion_4() {
    const std::vector<Index> lengths = {2000, 10000, 50000};
    const std::vector<LemmaPoint> pts =
        lemma_convergence(support::benchmark_plant_innovation(), 20, 20, 1.0, lengths, 20, 1, 1);
    bool decreasing = true;
    std::string detail;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0 && pts[i].median_rel_err >= pts[i - 1].median_rel_err) decreasing = false;
        detail += "N=" + std::to_string(pts[i].N_data) + " err " + fd(pts[i].median_rel_err) + "; ";
    }
    report(4, decreasing && pts.back().median_rel_err < 0.15,
           detail + "want decreasing, last < 0.15");
}

// ---------------------------------------------------------------------------
// 5 and 6. Oracle sweeps, then online tuning against the oracle betas
// ---------------------------------------------------------------------------

struct SweepBars {
    double beta2 = 0, beta3 = 0;
    bool available = false;
};

SweepBars criterion_5(const ExperimentConfig& c) {
    const auto t0 = Clock::now();
    bench::ReplicaSet rs;
    rs.base = bench::make_base_dataset(c);
    for (Index i = 0; i < c.n_mc; ++i) rs.replicas.push_back(bench::make_replica(c, rs.base, i));
    const std::vector<LqFactors> lqs = bench::decompose_replicas(c, rs, 1);

    const bench::SweepOutput s2 = bench::run_sweep(c, TuneMode::Beta2, rs, lqs, 1);
    const bench::SweepOutput s3 = bench::run_sweep(c, TuneMode::Beta3, rs, lqs, 1);
    const double el = secs(t0);

    const SweepPoint& best2 = s2.result.points[s2.result.argmin];
    const SweepPoint& best3 = s3.result.points[s3.result.argmin];
    const double ratio2 = s2.result.points.front().J_av / best2.J_av;  // beta2 grid starts at 1e0
    const double ratio3 = s3.result.points.back().J_av / best3.J_av;   // beta3 grid ends at 1e0

    report(5, ratio2 >= 100.0 && ratio3 >= 100.0 && el < 1800.0,
           "J_av(1e0)/J_av(beta_bar): beta2 " + fd(ratio2) + ", beta3 " + fd(ratio3) +
               " (want >= 100 each, divergence cap " + fd(s2.cap) + "); beta2_bar " +
               fd(s2.result.beta_bar) + ", beta3_bar " + fd(s3.result.beta_bar) + ", " + fd(el) +
               " s (limit 1800)");

    SweepBars bars;
    bars.beta2 = s2.result.beta_bar;
    bars.beta3 = s3.result.beta_bar;
    bars.available = true;
    return bars;
}

void criterion_6(const ExperimentConfig& base_cfg, const SweepBars& bars) {
    ExperimentConfig c = base_cfg;
    c.n_mc = 100;
    if (bars.available) {
        c.beta2_fixed = bars.beta2;
        c.beta3_fixed = bars.beta3;
    }

    bench::ReplicaSet rs;
    rs.base = bench::make_base_dataset(c);
    for (Index i = 0; i < c.n_mc; ++i) rs.replicas.push_back(bench::make_replica(c, rs.base, i));
    const std::vector<LqFactors> lqs = bench::decompose_replicas(c, rs, 1);
    const ReferenceSignal refs = reference_signal(c.T_v, c.T);
    const Vec sigma_v = bench::snr_sigma_v(c, rs.base);

    auto run_mode = [&](ControlMode mode) {
        std::vector<double> js(static_cast<std::size_t>(c.n_mc));
        for (Index i = 0; i < c.n_mc; ++i) {
            const RunConfig rc =
                bench::run_config_for(c, mode, sigma_v, bench::episode_noise_seed(c.seed, i));
            const LqFactors* f = mode_uses_data(mode) ? &lqs[static_cast<std::size_t>(i)] : nullptr;
            const Episode ep = run_closed_loop(c.system, f, refs, rc);
            js[static_cast<std::size_t>(i)] = performance_indices(ep, refs, rc.weights).J;
        }
        return median_of(js);
    };

    const double med2_hat = run_mode(ControlMode::Beta2Online);
    const double med3_hat = run_mode(ControlMode::Beta3Online);
    const double med2_bar = run_mode(ControlMode::Beta2Fixed);
    const double med3_bar = run_mode(ControlMode::Beta3Fixed);
    const double med_kf = run_mode(ControlMode::KalmanOracle);

    const double gap2 = std::abs(med2_hat - med2_bar) / med2_bar;
    const double gap3 = std::abs(med3_hat - med3_bar) / med3_bar;
    report(6, gap2 <= 0.25 && gap3 <= 0.25 && med_kf <= med2_hat && med_kf <= med3_hat,
           "median J over 100 seeds: online/fixed beta2 " + fd(med2_hat) + "/" + fd(med2_bar) +
               " gap " + fd(gap2) + ", beta3 " + fd(med3_hat) + "/" + fd(med3_bar) + " gap " +
               fd(gap3) + " (tol 0.25); kalman " + fd(med_kf) + " must not exceed either" +
               (bars.available ? "" : " [beta_bar from config, sweep skipped]"));
}

// ---------------------------------------------------------------------------
// 7. Active-set QP against the exhaustive enumeration oracle
// ---------------------------------------------------------------------------

void criterion_7() {
    GaussianStream g(7001);
    int n_feasible = 0, n_infeasible = 0, n_bad = 0;
    double max_z = 0, max_obj = 0, max_stat = 0, max_primal = 0, min_dual = 0, max_compl = 0;
    double max_compl_scaled = 0;

    for (int i = 0; i < 1000; ++i) {
        const Index d = 1 + i % 10;
        const Index cc = (i * 7) % 13;
        const QpProblem p = support::random_qp(g, d, cc);
        const support::OracleSolution want = support::qp_enumeration_oracle(p);
        const QpResult got = solve_qp(p);

        if (!want.feasible) {
            ++n_infeasible;
            const bool farkas_ok =
                got.status == QpStatus::Infeasible && got.farkas.size() == cc &&
                got.farkas.minCoeff() >= -1e-12 && got.farkas.dot(p.h) < 0 &&
                (p.G.transpose() * got.farkas).norm() <= 1e-8 * (1.0 + got.farkas.norm());
            if (!farkas_ok) ++n_bad;
            continue;
        }

        ++n_feasible;
        if (got.status != QpStatus::Optimal) {
            ++n_bad;
            continue;
        }
        const double obj = 0.5 * got.z.dot(p.H * got.z) + p.f.dot(got.z);
        const double dz = (got.z - want.z).cwiseAbs().maxCoeff();
        const double dobj = std::abs(obj - want.objective);
        max_z = std::max(max_z, dz);
        max_obj = std::max(max_obj, dobj);
        if (dz > 1e-8 * (1.0 + want.z.cwiseAbs().maxCoeff()) ||
            dobj > 1e-8 * (1.0 + std::abs(want.objective)))
            ++n_bad;

        const KktResiduals kr = kkt_residuals(p, got);
        max_stat = std::max(max_stat, kr.stationarity);
        max_primal = std::max(max_primal, kr.primal);
        min_dual = std::min(min_dual, kr.dual_min);
        max_compl = std::max(max_compl, kr.complementarity);
        // the product lambda * slack is only meaningful at the multiplier's
        // scale: near-degenerate active geometries push lambda to 1e5 while
        // the slack sits at machine level, so the gate is per-instance scaled
        const double lam_max = got.lambda.size() ? got.lambda.cwiseAbs().maxCoeff() : 0.0;
        max_compl_scaled = std::max(max_compl_scaled, kr.complementarity / (1.0 + lam_max));
    }

    const bool kkt_ok = max_stat <= 1e-8 && max_primal <= 1e-9 && min_dual >= -1e-9 &&
                        max_compl_scaled <= 1e-9;
    report(7, n_bad == 0 && kkt_ok,
           std::to_string(n_feasible) + " feasible + " + std::to_string(n_infeasible) +
               " infeasible instances, " + std::to_string(n_bad) +
               " mismatches (tol 1e-8); kkt worst: stationarity " + fd(max_stat) +
               " (tol 1e-8), primal " + fd(max_primal) + " (tol 1e-9), dual min " + fd(min_dual) +
               " (floor -1e-9), complementarity " + fd(max_compl_scaled) +
               " at multiplier scale (tol 1e-9; raw product " + fd(max_compl) + ")");
}

// ---------------------------------------------------------------------------
// 8. Performance-index arithmetic on the worked example
// ---------------------------------------------------------------------------

void criterion_8() {
    ReferenceSignal refs;
    refs.T_v = 2;
    refs.T = 1;
    refs.y = Mat::Zero(1, 3);
    Episode ep;
    ep.u = Mat::Ones(1, 2);
    ep.y.resize(1, 2);
    ep.y << 1, 0;
    ep.steps_completed = 2;
    ControlWeights w;
    w.Q = 2000.0 * Mat::Identity(1, 1);
    w.R = 0.01 * Mat::Identity(1, 1);
    const PerformanceIndices pi = performance_indices(ep, refs, w);
    report(8,
           std::abs(pi.J - 1000.01) <= 1e-12 * 1000.01 && pi.J_u == 1.0 && std::isinf(pi.J_y),
           "J " + fd(pi.J) + " (want 1000.01), J_u " + fd(pi.J_u) + " (want 1), J_y " +
               fd(pi.J_y) + " (want inf sentinel)");
}

}  // namespace

int main(int argc, char** argv) {
    bool want[9];
    std::fill(std::begin(want), std::end(want), argc <= 1);
    for (int i = 1; i < argc; ++i) {
        const int k = std::atoi(argv[i]);
        if (k >= 1 && k <= 8) want[k] = true;
    }

    ExperimentConfig cfg;
    if (want[5] || want[6]) cfg = load_experiment(std::string(CONFIG_DIR) + "/benchmark.conf");

    auto guarded = [&](int crit, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(crit, false, std::string("exception: ") + e.what());
        }
    };

    guarded(1, [&] { if (want[1]) criterion_1(); });
    guarded(2, [&] { if (want[2]) criterion_2(); });
    guarded(3, [&] { if (want[3]) criterion_3(); });
    guarded(4, [&] { if (want[4]) criterion_4(); });
    SweepBars bars;
    guarded(5, [&] { if (want[5]) bars = criterion_5(cfg); });
    guarded(6, [&] { if (want[6]) criterion_6(cfg, bars); });
    guarded(7, [&] { if (want[7]) criterion_7(); });
    guarded(8, [&] { if (want[8]) criterion_8(); });

    std::printf("acceptance: %d failure(s)\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
