#pragma once

#include "gddpc/controllers.hpp"
#include "gddpc/parallel.hpp"
#include "gddpc/predictor.hpp"
#include "gddpc/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace gddpc {

// ---------------------------------------------------------------------------
// Experiment-free beta selection
//
// The matching conditions equate a measured dispersion with its predicted
// asymptotic size T (||g1||^2 + ||g2||^2) / N:
//
//   beta2:  ||L33^{-1} (y_hat0 - y_r)||^2  - target   (increasing in beta2)
//   beta3:  ||g3*(beta3)||^2               - target   (decreasing in beta3)
//
// tune_beta hunts a sign change of the residual on a log grid and bisects;
// with no sign change it settles for the grid point of smallest |residual|
// and says so via `matched = false`.
// ---------------------------------------------------------------------------

enum class TuneMode { Beta2, Beta3 };

struct TuneConfig {
    TuneMode mode = TuneMode::Beta2;
    double beta_min = 1.0;     // paper grid: beta2 in [1e0, 1e4]
    double beta_max = 1e4;     //             beta3 in [1e-4, 1e0]
    int grid_points = 12;
    double tol_rel = 1e-2;
    int max_bisect = 60;
    // warm-start bracket around the previous step's beta, in decades
    double warm_decades = 1.0;
    int warm_points = 7;

    static TuneConfig for_mode(TuneMode m) {
        TuneConfig c;
        c.mode = m;
        if (m == TuneMode::Beta3) {
            c.beta_min = 1e-4;
            c.beta_max = 1.0;
        }
        return c;
    }
};

inline void check_tune_config(const TuneConfig& c) {
    require(c.beta_min > 0.0 && c.beta_min < c.beta_max, "tune config: need 0 < beta_min < beta_max");
    require(c.grid_points >= 2, "tune config: need at least 2 grid points");
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
    require(lo > 0.0 && hi > lo && n >= 1, "log_grid: bad bracket");
    std::vector<double> g(static_cast<std::size_t>(n));
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1.0));
    return g;
}

struct ResidualParts {
    double lhs = 0, rhs = 0, residual = 0;
    bool l33_pinv = false;  // L33 was singular at tolerance; pseudo-inverse used
    StepSolution sol;
};

/// Residual of the matching condition at one beta, on an assembled step.
/// The StepProblem's mode must agree with the tune mode.
inline ResidualParts matching_residual(TuneMode mode, const StepProblem& s, const LqFactors& f,
                                       double beta) {
    ResidualParts out;
    out.sol = solve_step(s, f, beta);
    out.rhs = gamma3_norm_target(s.g1, out.sol.g2, f.T, f.N);
    if (mode == TuneMode::Beta2) {
        const Vec err = out.sol.y_hat_f - s.y_r;  // y_hat0: g3 = 0 in this mode
        const double dmax = f.L33.diagonal().cwiseAbs().maxCoeff();
        const double dmin = f.L33.diagonal().cwiseAbs().minCoeff();
        if (dmin <= 1e-12 * dmax) {
            out.l33_pinv = true;
            out.lhs = f.L33.completeOrthogonalDecomposition().solve(err).squaredNorm();
        } else {
            out.lhs = f.L33.triangularView<Eigen::Lower>().solve(err).squaredNorm();
        }
    } else {
        out.lhs = out.sol.g3.squaredNorm();
    }
    out.residual = out.lhs - out.rhs;
    return out;
}

struct ResidualEval {
    double residual = 0;
    double scale = 0;  // magnitude the tol_rel stopping rule is relative to
};

struct TuneResult {
    double beta = 0;
    double residual = 0;
    bool matched = false;  // a sign change was found and bisected
    int evals = 0;
    StepSolution sol;      // solution at the returned beta (empty in the generic core)
};

/// Generic sign-change hunt: scan a log grid (optionally a narrow bracket
/// around `prev_beta` first), then bisect in log space until the residual is
/// within tol_rel of its scale. With no sign change anywhere, returns the
/// evaluated point of smallest |residual| and matched = false.
template <class Fn>
TuneResult tune_on_residual(Fn&& fn, const TuneConfig& cfg, std::optional<double> prev_beta = {}) {
    check_tune_config(cfg);

    TuneResult best;
    best.residual = std::numeric_limits<double>::infinity();
    int evals = 0;

    auto eval = [&](double beta) {
        const ResidualEval r = fn(beta);
        ++evals;
        if (std::abs(r.residual) < std::abs(best.residual)) {
            best.beta = beta;
            best.residual = r.residual;
        }
        return r;
    };
    auto converged = [&](const ResidualEval& r) {
        return std::abs(r.residual) <= cfg.tol_rel * std::max(r.scale, 1e-30);
    };

    struct Bracket {
        double lo = 0, hi = 0;
        double res_lo = 0;
        bool found = false;
    };
    auto scan = [&](const std::vector<double>& grid) {
        Bracket b;
        double prev_b = 0, prev_r = 0;
        bool have_prev = false;
        for (double beta : grid) {
            const ResidualEval r = eval(beta);
            if (have_prev && std::signbit(prev_r) != std::signbit(r.residual)) {
                b = {prev_b, beta, prev_r, true};
                return b;
            }
            prev_b = beta;
            prev_r = r.residual;
            have_prev = true;
        }
        return b;
    };

    Bracket br;
    if (prev_beta) {
        const double w = cfg.warm_decades;
        const double lo = std::max(cfg.beta_min, *prev_beta * std::pow(10.0, -w));
        const double hi = std::min(cfg.beta_max, *prev_beta * std::pow(10.0, w));
        if (lo < hi) br = scan(log_grid(lo, hi, cfg.warm_points));
    }
    if (!br.found) br = scan(log_grid(cfg.beta_min, cfg.beta_max, cfg.grid_points));
    if (!br.found) {
        best.matched = false;
        best.evals = evals;
        return best;
    }

    double llo = std::log(br.lo), lhi = std::log(br.hi);
    double res_lo = br.res_lo;
    double mid = std::exp(0.5 * (llo + lhi));
    for (int it = 0; it < cfg.max_bisect; ++it) {
        mid = std::exp(0.5 * (llo + lhi));
        const ResidualEval r = eval(mid);
        if (converged(r)) {
            best.beta = mid;
            best.residual = r.residual;
            break;
        }
        if (std::signbit(r.residual) == std::signbit(res_lo)) {
            llo = std::log(mid);
            res_lo = r.residual;
        } else {
            lhi = std::log(mid);
        }
        if (lhi - llo < 1e-12) break;
    }
    best.matched = true;
    best.evals = evals;
    return best;
}

/// Per-step tuner on an assembled step problem. The returned solution is the
/// solve at the chosen beta.
inline TuneResult tune_beta(TuneMode mode, const StepProblem& s, const LqFactors& f,
                            const TuneConfig& cfg, std::optional<double> prev_beta = {}) {
    if (mode == TuneMode::Beta2)
        require(s.mode == RegMode::Beta2, "tune_beta: step problem must be assembled in beta2 mode");
    else
        require(s.mode == RegMode::Beta3, "tune_beta: step problem must be assembled in beta3 mode");

    TuneResult out = tune_on_residual(
        [&](double beta) {
            const ResidualParts r = matching_residual(mode, s, f, beta);
            return ResidualEval{r.residual, r.rhs};
        },
        cfg, prev_beta);
    const ResidualParts at = matching_residual(mode, s, f, out.beta);
    out.sol = at.sol;
    out.residual = at.residual;
    return out;
}

// ---------------------------------------------------------------------------
// Oracle sweep: grid of betas, averaged closed-loop cost over Monte-Carlo
// episodes. Generic over the episode runner so it stays independent of the
// closed-loop engine.
// ---------------------------------------------------------------------------

struct EpisodeCost {
    double J = 0, J_u = 0, J_y = 0;
    bool diverged = false;
};

struct SweepPoint {
    double beta = 0;
    double J_av = 0, Ju_av = 0, Jy_av = 0;
    int n_diverged = 0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    double beta_bar = 0;
    std::size_t argmin = 0;
};

/// fn(beta, replica) -> EpisodeCost. Diverged episodes contribute `cap` to
/// every index. Ties in the argmin go to the lowest beta.
template <class EpisodeFn>
SweepResult oracle_sweep(const std::vector<double>& grid, int n_mc, double cap, EpisodeFn&& fn,
                         int workers = 1) {
    require(!grid.empty(), "oracle_sweep: empty grid");
    require(n_mc >= 1, "oracle_sweep: n_mc must be positive");
    SweepResult out;
    const std::size_t nb = grid.size();
    const std::size_t total = nb * static_cast<std::size_t>(n_mc);
    std::vector<EpisodeCost> cell(total);
    parallel_for(total, workers, [&](std::size_t idx) {
        const std::size_t bi = idx / static_cast<std::size_t>(n_mc);
        const int j = static_cast<int>(idx % static_cast<std::size_t>(n_mc));
        cell[idx] = fn(grid[bi], j);
    });

    out.points.resize(nb);
    for (std::size_t bi = 0; bi < nb; ++bi) {
        SweepPoint pt;
        pt.beta = grid[bi];
        for (int j = 0; j < n_mc; ++j) {
            const EpisodeCost& c = cell[bi * static_cast<std::size_t>(n_mc) + static_cast<std::size_t>(j)];
            if (c.diverged) {
                pt.J_av += cap;
                pt.Ju_av += cap;
                pt.Jy_av += cap;
                ++pt.n_diverged;
            } else {
                pt.J_av += std::min(c.J, cap);
                pt.Ju_av += std::min(c.J_u, cap);
                pt.Jy_av += std::min(c.J_y, cap);
            }
        }
        pt.J_av /= n_mc;
        pt.Ju_av /= n_mc;
        pt.Jy_av /= n_mc;
        out.points[bi] = pt;
    }
    out.argmin = 0;
    for (std::size_t bi = 1; bi < nb; ++bi)
        if (out.points[bi].J_av < out.points[out.argmin].J_av) out.argmin = bi;
    out.beta_bar = out.points[out.argmin].beta;
    return out;
}

}  // namespace gddpc
