#pragma once

#include "gddpc/rng.hpp"
#include "gddpc/types.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace gddpc {

// ---------------------------------------------------------------------------
// Innovation-form LTI model
//
//   x(t+1) = A x(t) + B u(t) + K e(t)
//   y(t)   = C x(t) + D u(t) + e(t)
//
// sigma2 is the innovation variance; innovations are isotropic (sigma2 * I_p)
// because every downstream diagnostic is written for scalar sigma2.
// ---------------------------------------------------------------------------

struct SystemModel {
    Mat A, B, C, D, K;
    double sigma2 = 1.0;

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index p() const { return C.rows(); }
};

inline void check_dimensions(const SystemModel& s) {
    require(s.A.rows() == s.A.cols(), "SystemModel: A must be square");
    require(s.B.rows() == s.n(), "SystemModel: B row count must equal n");
    require(s.C.cols() == s.n(), "SystemModel: C column count must equal n");
    require(s.D.rows() == s.p() && s.D.cols() == s.m(), "SystemModel: D must be p x m");
    require(s.K.rows() == s.n() && s.K.cols() == s.p(), "SystemModel: K must be n x p");
    require(s.sigma2 >= 0.0, "SystemModel: sigma2 must be nonnegative");
}

inline double spectral_radius(const Mat& a) {
    if (a.rows() == 0) return 0.0;
    return Eigen::EigenSolver<Mat>(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

/// Numerical rank of M at tolerance tol relative to the largest singular value.
inline Index numerical_rank(const Mat& m, double tol = 1e-8) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    const Vec sv = svd.singularValues();
    const double cut = tol * sv[0];
    Index r = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv[i] > cut) ++r;
    return r;
}

struct SystemChecks {
    bool reachable = false;
    bool observable = false;
    bool predictor_stable = false;  // spectral radius of A - KC below 1
    double rho_A = 0.0;
    double rho_AKC = 0.0;
};

inline SystemChecks check_system(const SystemModel& s, double rank_tol = 1e-8) {
    check_dimensions(s);
    const Index n = s.n();
    SystemChecks out;
    if (n == 0) {
        out.reachable = out.observable = out.predictor_stable = true;
        return out;
    }
    Mat ctrb(n, n * s.m());
    Mat obsv(n * s.p(), n);
    Mat ab = s.B;
    Mat ca = s.C;
    for (Index k = 0; k < n; ++k) {
        ctrb.middleCols(k * s.m(), s.m()) = ab;
        obsv.middleRows(k * s.p(), s.p()) = ca;
        ab = s.A * ab;
        ca = ca * s.A;
    }
    out.reachable = numerical_rank(ctrb, rank_tol) == n;
    out.observable = numerical_rank(obsv, rank_tol) == n;
    out.rho_A = spectral_radius(s.A);
    out.rho_AKC = spectral_radius(s.A - s.K * s.C);
    out.predictor_stable = out.rho_AKC < 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Markov parameters and the horizon-lift matrices built from them
// ---------------------------------------------------------------------------

/// k-th Markov parameter: D for k = 0, C A^(k-1) B for k >= 1.
inline Mat markov_parameter(const SystemModel& s, Index k) {
    if (k == 0) return s.D;
    Mat ca = s.C;
    for (Index i = 1; i < k; ++i) ca = ca * s.A;
    return ca * s.B;
}

/// Extended observability matrix [C; CA; ...; CA^(T-1)], pT x n.
inline Mat extended_observability(const SystemModel& s, Index T) {
    Mat g(s.p() * T, s.n());
    Mat ca = s.C;
    for (Index i = 0; i < T; ++i) {
        g.middleRows(i * s.p(), s.p()) = ca;
        ca = ca * s.A;
    }
    return g;
}

/// Block lower-triangular Toeplitz of the deterministic Markov parameters
/// (D, CB, CAB, ...), pT x mT.
inline Mat toeplitz_hd(const SystemModel& s, Index T) {
    const Index p = s.p(), m = s.m();
    std::vector<Mat> h(T);
    h[0] = s.D;
    Mat ca = s.C;
    for (Index k = 1; k < T; ++k) {
        h[k] = ca * s.B;
        ca = ca * s.A;
    }
    Mat out = Mat::Zero(p * T, m * T);
    for (Index i = 0; i < T; ++i)
        for (Index j = 0; j <= i; ++j) out.block(i * p, j * m, p, m) = h[i - j];
    return out;
}

/// Block lower-triangular Toeplitz of the stochastic Markov parameters
/// (I, CK, CAK, ...), pT x pT.
inline Mat toeplitz_hs(const SystemModel& s, Index T) {
    const Index p = s.p();
    std::vector<Mat> h(T);
    h[0] = Mat::Identity(p, p);
    Mat ca = s.C;
    for (Index k = 1; k < T; ++k) {
        h[k] = ca * s.K;
        ca = ca * s.A;
    }
    Mat out = Mat::Zero(p * T, p * T);
    for (Index i = 0; i < T; ++i)
        for (Index j = 0; j <= i; ++j) out.block(i * p, j * p, p, p) = h[i - j];
    return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimResult {
    Mat y;  // p x L, y(t) in column t
    Mat x;  // n x L, state before the update at t (x(0) = x0)
};

/// Runs the innovation-form recursion exactly; time runs over columns.
/// An empty x0 means rest.
inline SimResult simulate(const SystemModel& s, const Mat& u_seq, const Mat& e_seq,
                          const Vec& x0 = Vec()) {
    check_dimensions(s);
    require(u_seq.rows() == s.m(), "simulate: u_seq must have m rows");
    require(e_seq.rows() == s.p(), "simulate: e_seq must have p rows");
    require(u_seq.cols() == e_seq.cols(), "simulate: u_seq and e_seq lengths differ");
    require(x0.size() == 0 || x0.size() == s.n(), "simulate: x0 must have n entries");
    const Index L = u_seq.cols();
    SimResult out;
    out.y.resize(s.p(), L);
    out.x.resize(s.n(), L);
    Vec x = x0.size() == 0 ? Vec(Vec::Zero(s.n())) : x0;
    for (Index t = 0; t < L; ++t) {
        out.x.col(t) = x;
        out.y.col(t) = s.C * x + s.D * u_seq.col(t) + e_seq.col(t);
        x = s.A * x + s.B * u_seq.col(t) + s.K * e_seq.col(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

enum class NoiseMode { None, Innovation, AdditiveOutput };

inline const char* to_string(NoiseMode m) {
    switch (m) {
        case NoiseMode::None: return "none";
        case NoiseMode::Innovation: return "innovation";
        case NoiseMode::AdditiveOutput: return "additive-output";
    }
    return "?";
}

struct DataSet {
    Mat u;  // m x N_data
    Mat y;  // p x N_data
    std::uint64_t seed = 0;
    double snr_db = std::numeric_limits<double>::infinity();
    NoiseMode mode = NoiseMode::None;
    Vec sigma_v;  // per-channel additive noise std actually applied (empty otherwise)

    Index N_data() const { return u.cols(); }
};

/// Mean-removed population variance of each row.
inline Vec row_variance(const Mat& m) {
    Vec v(m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
        const double mu = m.row(i).mean();
        v[i] = (m.row(i).array() - mu).square().mean();
    }
    return v;
}

/// White Gaussian input of the given variance; noise per `mode`:
///  - Innovation: e(t) ~ N(0, sigma2 I) drives the recursion;
///  - AdditiveOutput: noise-free simulation plus output noise sized per channel
///    so 10*log10(var(y_free)/sigma_v^2) = snr_db on the empirical variance;
///  - None (or snr_db = +inf): noise-free.
/// Deterministic given seed; the input stream does not depend on the mode.
inline DataSet generate_dataset(const SystemModel& sys, Index N_data, double input_variance,
                                NoiseMode mode, double snr_db, std::uint64_t seed) {
    check_dimensions(sys);
    require(N_data > 0, "generate_dataset: N_data must be positive");
    require(input_variance > 0.0, "generate_dataset: input variance must be positive");
    if (mode == NoiseMode::Innovation)
        require(sys.sigma2 > 0.0, "generate_dataset: innovation mode needs sigma2 > 0");

    GaussianStream input_stream(split_seed(seed, 0));
    GaussianStream noise_stream(split_seed(seed, 1));

    DataSet ds;
    ds.seed = seed;
    ds.snr_db = snr_db;
    ds.mode = mode;
    ds.u = std::sqrt(input_variance) * input_stream.normal_mat(sys.m(), N_data);
    const Vec x0 = Vec::Zero(sys.n());

    if (mode == NoiseMode::Innovation) {
        const Mat e = std::sqrt(sys.sigma2) * noise_stream.normal_mat(sys.p(), N_data);
        ds.y = simulate(sys, ds.u, e, x0).y;
        return ds;
    }

    const Mat e0 = Mat::Zero(sys.p(), N_data);
    ds.y = simulate(sys, ds.u, e0, x0).y;
    if (mode == NoiseMode::AdditiveOutput && std::isfinite(snr_db)) {
        const Vec var_free = row_variance(ds.y);
        ds.sigma_v = (var_free * std::pow(10.0, -snr_db / 10.0)).cwiseSqrt();
        ds.y += ds.sigma_v.asDiagonal() * noise_stream.normal_mat(sys.p(), N_data);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Realization from transfer-function coefficients (SISO)
// ---------------------------------------------------------------------------

/// Companion-form realization of b(q^-1)/a(q^-1), coefficients in powers
/// q^0..q^-n. Raises ConfigError when the result is non-minimal or unstable:
/// the caller supplied reducible or bad coefficients, not a usable plant.
inline SystemModel make_siso_from_tf(std::vector<double> num, std::vector<double> den,
                                     double sigma2 = 1.0) {
    if (den.empty() || den[0] == 0.0) throw ConfigError("transfer function: den[0] must be nonzero");
    for (auto& c : num) c /= den[0];
    for (auto& c : den) c /= den[0];
    const Index n = static_cast<Index>(den.size()) - 1;
    require(static_cast<Index>(num.size()) <= n + 1, "transfer function: num longer than den");
    num.resize(static_cast<std::size_t>(n) + 1, 0.0);

    SystemModel s;
    s.sigma2 = sigma2;
    s.A = Mat::Zero(n, n);
    s.B = Mat::Zero(n, 1);
    s.C = Mat::Zero(1, n);
    s.D = Mat::Constant(1, 1, num[0]);
    s.K = Mat::Zero(n, 1);
    for (Index i = 0; i < n; ++i) {
        s.A(0, i) = -den[static_cast<std::size_t>(i) + 1];
        s.C(0, i) = num[static_cast<std::size_t>(i) + 1] - den[static_cast<std::size_t>(i) + 1] * num[0];
    }
    if (n > 0) {
        s.A.block(1, 0, n - 1, n - 1).setIdentity();
        s.B(0, 0) = 1.0;
    }

    const SystemChecks chk = check_system(s);
    if (!chk.reachable || !chk.observable)
        throw ConfigError("transfer function yields a non-minimal realization "
                          "(common factors in num/den?); reachable=" +
                          std::to_string(chk.reachable) + " observable=" + std::to_string(chk.observable));
    if (chk.rho_A > 1.0 + 1e-8)
        throw ConfigError("transfer function is unstable: spectral radius " + std::to_string(chk.rho_A));
    return s;
}

}  // namespace gddpc
