#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gddpc/controllers.hpp"
#include "gddpc/lq.hpp"
#include "gddpc/lti.hpp"
#include "gddpc/oracle_mpc.hpp"
#include "gddpc/predictor.hpp"
#include "gddpc/rng.hpp"
#include "gddpc/tuning.hpp"
#include "gddpc/types.hpp"

namespace gddpc {

/// Reference trajectory, p x (T_v + T): the tracking horizon plus one extra
/// predictor horizon so every step has a full preview window.
struct ReferenceSignal {
    Mat y;
    Index T_v = 0;
    Index T = 0;
};

/// Half-period sine sweep over the full stored length (p = 1).
inline ReferenceSignal reference_signal(Index T_v, Index T) {
    require(T_v >= 1 && T >= 1, "reference_signal: T_v and T must be positive");
    ReferenceSignal r;
    r.T_v = T_v;
    r.T = T;
    const Index L = T_v + T;
    constexpr double pi = 3.14159265358979323846;
    r.y.resize(1, L);
    for (Index t = 0; t < L; ++t)
        r.y(0, t) = std::sin(5.0 * pi * static_cast<double>(t) / static_cast<double>(L - 1));
    return r;
}

/// Preview window [t, t+T) as a stacked pT vector; past the stored end the
/// last sample is held.
inline Vec preview_window(const ReferenceSignal& r, Index t, Index T) {
    const Index p = r.y.rows();
    const Index L = r.y.cols();
    require(L >= 1, "preview_window: empty reference");
    Vec out(p * T);
    for (Index k = 0; k < T; ++k) {
        const Index src = std::min(t + k, L - 1);
        out.segment(k * p, p) = r.y.col(src);
    }
    return out;
}

enum class ControlMode { Unreg, Beta2Fixed, Beta3Fixed, Beta2Online, Beta3Online, KalmanOracle };

inline std::string to_string(ControlMode m) {
    switch (m) {
        case ControlMode::Unreg: return "unreg";
        case ControlMode::Beta2Fixed: return "beta2-fixed";
        case ControlMode::Beta3Fixed: return "beta3-fixed";
        case ControlMode::Beta2Online: return "beta2-online";
        case ControlMode::Beta3Online: return "beta3-online";
        case ControlMode::KalmanOracle: return "kalman-oracle";
    }
    return "?";
}

inline ControlMode control_mode_from_string(const std::string& s) {
    if (s == "unreg") return ControlMode::Unreg;
    if (s == "beta2-fixed") return ControlMode::Beta2Fixed;
    if (s == "beta3-fixed") return ControlMode::Beta3Fixed;
    if (s == "beta2-online") return ControlMode::Beta2Online;
    if (s == "beta3-online") return ControlMode::Beta3Online;
    if (s == "kalman-oracle") return ControlMode::KalmanOracle;
    throw ConfigError("unknown control mode: " + s);
}

inline bool mode_uses_data(ControlMode m) { return m != ControlMode::KalmanOracle; }

struct RunConfig {
    ControlMode mode = ControlMode::Unreg;
    Index T_v = 50;
    ControlWeights weights;
    BoxConstraints boxes;
    double beta_fixed = 0;               // Beta2Fixed / Beta3Fixed
    TuneConfig tune;                     // Beta2Online / Beta3Online
    NoiseMode loop_noise = NoiseMode::AdditiveOutput;  // measurement noise while running
    Vec sigma_v;                         // per-channel std dev for AdditiveOutput
    double blow_up_factor = 1e4;         // |y_i| > factor * max |y_r| ends the episode
    uint64_t noise_seed = 0;
};

/// One closed-loop run. Prefix up to the blow-up (if any) is kept.
struct Episode {
    Mat u;                     // m x steps_completed
    Mat y;                     // p x steps_completed, measured
    std::vector<double> betas; // per step; 0 where not applicable
    std::vector<double> objectives;
    bool diverged = false;
    bool solver_failed = false;
    Index steps_completed = 0;
};

struct PerformanceIndices {
    double J = 0;    // T_v^-1 sum ||y-y_r||_Q^2 + ||u||_R^2
    double J_u = 0;  // T_v^-1 sum ||u||^2, unweighted
    double J_y = 0;  // sum ||y-y_r||^2 / sum ||y_r||^2, relative
};

/// Costs over the recorded prefix with the nominal T_v in the divisors, so a
/// divergent episode is not rewarded for ending early. J_y's denominator runs
/// over the full horizon; a zero-energy reference yields the +inf sentinel,
/// as does an episode with nothing recorded.
inline PerformanceIndices performance_indices(const Episode& ep, const ReferenceSignal& refs,
                                              const ControlWeights& w) {
    PerformanceIndices out;
    const Index n = ep.steps_completed;
    if (n == 0) {
        out.J = out.J_u = out.J_y = std::numeric_limits<double>::infinity();
        return out;
    }
    double sJ = 0, su2 = 0, sy2 = 0, sr2 = 0;
    for (Index t = 0; t < n; ++t) {
        const Vec du = ep.u.col(t);
        const Vec dy = ep.y.col(t) - refs.y.col(std::min(t, refs.y.cols() - 1));
        sJ += dy.dot(w.Q * dy) + du.dot(w.R * du);
        su2 += du.squaredNorm();
        sy2 += dy.squaredNorm();
    }
    for (Index t = 0; t < refs.T_v; ++t)
        sr2 += refs.y.col(std::min(t, refs.y.cols() - 1)).squaredNorm();
    const double T_v = static_cast<double>(refs.T_v);
    out.J = sJ / T_v;
    out.J_u = su2 / T_v;
    out.J_y = sr2 > 0 ? sy2 / sr2 : std::numeric_limits<double>::infinity();
    return out;
}

namespace detail {

/// Rolling window of the last rho samples, oldest first.
class History {
   public:
    History(Index dim, Index rho) : buf_(Mat::Zero(dim, rho)) {}
    void push(const Vec& v) {
        const Index r = buf_.cols();
        buf_.leftCols(r - 1) = buf_.rightCols(r - 1).eval();
        buf_.col(r - 1) = v;
    }
    const Mat& window() const { return buf_; }

   private:
    Mat buf_;
};

}  // namespace detail

/// Simulate T_v steps of receding-horizon control on the true plant.
///
/// Data-driven modes consume the LQ factors; the oracle mode consumes the true
/// model through its stationary Kalman filter and a model-based MPC with the
/// same weights, horizon and boxes. Histories warm up with rho zero samples
/// (the plant starts at rest), so the oracle filter starts from x_hat = 0.
inline Episode run_closed_loop(const SystemModel& truth, const LqFactors* factors,
                               const ReferenceSignal& refs, const RunConfig& cfg) {
    require(refs.T_v == cfg.T_v, "run_closed_loop: reference and config disagree on T_v");
    const Index m = truth.m();
    const Index p = truth.p();
    const bool data_mode = mode_uses_data(cfg.mode);
    require(!data_mode || factors != nullptr, "run_closed_loop: data-driven mode needs LQ factors");
    const Index T = data_mode ? factors->T : refs.T;
    const Index rho = data_mode ? factors->rho : Index(1);
    if (data_mode) {
        require(factors->m == m && factors->p == p,
                "run_closed_loop: LQ factors disagree with plant dimensions");
        require(refs.T == T, "run_closed_loop: reference preview horizon mismatch");
    }

    const double y_r_max = refs.y.cwiseAbs().maxCoeff();
    const double blow_up = cfg.blow_up_factor * std::max(y_r_max, 1.0);

    GaussianStream noise(cfg.noise_seed);
    Vec sigma_v = cfg.sigma_v;
    if (cfg.loop_noise == NoiseMode::AdditiveOutput) {
        require(sigma_v.size() == p, "run_closed_loop: sigma_v must have one entry per output");
    }
    const double sigma_e = std::sqrt(truth.sigma2);

    Episode ep;
    ep.u.resize(m, cfg.T_v);
    ep.y.resize(p, cfg.T_v);
    ep.betas.assign(static_cast<size_t>(cfg.T_v), 0.0);
    ep.objectives.assign(static_cast<size_t>(cfg.T_v), 0.0);

    detail::History u_hist(m, rho), y_hist(p, rho);
    Vec x = Vec::Zero(truth.n());
    KalmanState kf{Vec::Zero(truth.n())};

    // Per-mode solver state, built once.
    std::optional<StepAssembler> assembler;
    std::optional<Eigen::LLT<Mat>> fixed_llt;
    std::optional<double> prev_beta;
    if (data_mode) {
        RegMode reg = RegMode::None;
        if (cfg.mode == ControlMode::Beta2Fixed || cfg.mode == ControlMode::Beta2Online)
            reg = RegMode::Beta2;
        if (cfg.mode == ControlMode::Beta3Fixed || cfg.mode == ControlMode::Beta3Online)
            reg = RegMode::Beta3;
        assembler.emplace(*factors, reg, cfg.weights, cfg.boxes);
        const bool fixed =
            cfg.mode == ControlMode::Unreg || cfg.mode == ControlMode::Beta2Fixed ||
            cfg.mode == ControlMode::Beta3Fixed;
        if (fixed && !cfg.boxes.any())
            fixed_llt = assembler->factorize(cfg.mode == ControlMode::Unreg ? 0.0 : cfg.beta_fixed);
    }

    for (Index t = 0; t < cfg.T_v; ++t) {
        const Vec y_ref = preview_window(refs, t, T);
        Vec u_now(m);

        try {
            if (cfg.mode == ControlMode::KalmanOracle) {
                const MpcSolution sol = solve_mpc(truth, kf.x_hat, y_ref, cfg.weights.Q,
                                                  cfg.weights.R, MpcBoxes{cfg.boxes.u_lo, cfg.boxes.u_hi,
                                                                          cfg.boxes.y_lo, cfg.boxes.y_hi});
                u_now = sol.u_f.head(m);
                ep.objectives[static_cast<size_t>(t)] = 0;
            } else {
                const Vec z_init = make_init_window(u_hist.window(), y_hist.window());
                const Vec g1 = gamma1_star(factors->L11, z_init);
                StepSolution sol;
                if (cfg.mode == ControlMode::Beta2Online || cfg.mode == ControlMode::Beta3Online) {
                    const TuneMode tm = cfg.mode == ControlMode::Beta2Online ? TuneMode::Beta2
                                                                             : TuneMode::Beta3;
                    StepProblem sp = assembler->make(g1, y_ref);
                    TuneResult tr = tune_beta(tm, sp, *factors, cfg.tune, prev_beta);
                    sol = tr.sol;
                    prev_beta = tr.beta;
                    ep.betas[static_cast<size_t>(t)] = tr.beta;
                } else {
                    const double beta = cfg.mode == ControlMode::Unreg ? 0.0 : cfg.beta_fixed;
                    StepProblem sp = assembler->make(g1, y_ref);
                    sol = fixed_llt ? solve_step_cached(sp, *factors, *fixed_llt, beta)
                                    : solve_step(sp, *factors, beta);
                    ep.betas[static_cast<size_t>(t)] = beta;
                }
                u_now = sol.u_f.head(m);
                ep.objectives[static_cast<size_t>(t)] = sol.objective;
            }
        } catch (const NumericError&) {
            ep.solver_failed = true;
            ep.diverged = true;
            break;
        }

        // True plant step with the configured measurement noise.
        Vec e = Vec::Zero(p);
        if (cfg.loop_noise == NoiseMode::Innovation) e = sigma_e * noise.normal_vec(p);
        Vec y_meas = truth.C * x + truth.D * u_now + e;
        if (cfg.loop_noise == NoiseMode::AdditiveOutput)
            y_meas += sigma_v.asDiagonal() * noise.normal_vec(p);
        x = truth.A * x + truth.B * u_now + truth.K * e;

        ep.u.col(t) = u_now;
        ep.y.col(t) = y_meas;
        ep.steps_completed = t + 1;

        if (!y_meas.allFinite() || y_meas.cwiseAbs().maxCoeff() > blow_up) {
            ep.diverged = true;
            break;
        }

        if (cfg.mode == ControlMode::KalmanOracle) kf = kalman_step(truth, kf, u_now, y_meas);
        u_hist.push(u_now);
        y_hist.push(y_meas);
    }

    ep.u.conservativeResize(m, ep.steps_completed);
    ep.y.conservativeResize(p, ep.steps_completed);
    ep.betas.resize(static_cast<size_t>(ep.steps_completed));
    ep.objectives.resize(static_cast<size_t>(ep.steps_completed));
    return ep;
}

}  // namespace gddpc
