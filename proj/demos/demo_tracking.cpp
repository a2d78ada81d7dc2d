// Minimal end-to-end run: one noisy dataset, one closed-loop episode per
// controller mode, costs printed side by side.

#include <iostream>

#include <gddpc/gddpc.hpp>

using namespace gddpc;

int main() {
    std::vector<double> num = {0, 0, 0, 0.28261, 0.50666};
    std::vector<double> den = {1, -1.41833, 1.58939, -1.31608, 0.88642};
    const SystemModel sys = make_siso_from_tf(num, den, 1.0);

    const Index n_data = 250, rho = 20, T = 20, T_v = 50;
    const double snr_db = 13;

    const DataSet clean = generate_dataset(sys, n_data, 1.0, NoiseMode::None, snr_db, 1);
    DataSet noisy = clean;
    const Vec sigma_v =
        (row_variance(clean.y).array() * std::pow(10.0, -snr_db / 10.0)).sqrt().matrix();
    GaussianStream g(2);
    noisy.y = clean.y + sigma_v.asDiagonal() * g.normal_mat(1, n_data);

    const LqFactors f = lq_decompose(build_bundle(noisy, rho, T));
    const ReferenceSignal refs = reference_signal(T_v, T);

    RunConfig rc;
    rc.T_v = T_v;
    rc.weights.Q = 2000 * Mat::Identity(1, 1);
    rc.weights.R = 0.01 * Mat::Identity(1, 1);
    rc.sigma_v = sigma_v;
    rc.noise_seed = 3;

    for (ControlMode mode : {ControlMode::Unreg, ControlMode::Beta2Online,
                             ControlMode::Beta3Online, ControlMode::KalmanOracle}) {
        rc.mode = mode;
        rc.tune = TuneConfig::for_mode(mode == ControlMode::Beta3Online ? TuneMode::Beta3
                                                                        : TuneMode::Beta2);
        const Episode ep =
            run_closed_loop(sys, mode == ControlMode::KalmanOracle ? nullptr : &f, refs, rc);
        const PerformanceIndices pi = performance_indices(ep, refs, rc.weights);
        std::cout << to_string(mode) << ": J=" << pi.J << " J_u=" << pi.J_u << " J_y=" << pi.J_y
                  << (ep.diverged ? "  (diverged)" : "") << "\n";
    }
    return 0;
}
