#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gddpc/closed_loop.hpp"
#include "gddpc/config.hpp"
#include "gddpc/diagnostics.hpp"
#include "gddpc/io.hpp"
#include "gddpc/lq.hpp"
#include "gddpc/parallel.hpp"
#include "gddpc/svg.hpp"
#include "gddpc/tuning.hpp"
#include "gddpc/types.hpp"

namespace gddpc::bench {

// Seed layout under one master seed: base input, per-replica data noise,
// per-replica in-loop noise. Counter-based, so growing n_mc never reshuffles
// earlier replicas.
inline uint64_t base_input_seed(uint64_t master) { return split_seed(master, 0); }
inline uint64_t replica_noise_seed(uint64_t master, Index i) {
    return split_seed(master, 1 + static_cast<uint64_t>(i));
}
inline uint64_t episode_noise_seed(uint64_t master, Index i) {
    return split_seed(master, 1000000 + static_cast<uint64_t>(i));
}

inline std::string base_path(const std::string& out_dir) { return out_dir + "/base.csv"; }
inline std::string replica_path(const std::string& out_dir, Index i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "/replica_%04lld.csv", static_cast<long long>(i));
    return out_dir + buf;
}

inline DataSet make_base_dataset(const ExperimentConfig& c) {
    return generate_dataset(c.system, c.n_data, c.input_variance, NoiseMode::None, c.snr_db,
                            base_input_seed(c.seed));
}

/// Per-channel noise level hitting the configured SNR against the base run.
inline Vec snr_sigma_v(const ExperimentConfig& c, const DataSet& base) {
    const Vec var = row_variance(base.y);
    return (var.array() * std::pow(10.0, -c.snr_db / 10.0)).sqrt().matrix();
}

/// Replica i: the base input with a fresh noise realization on the outputs,
/// either added directly or pushed through the innovation channel.
inline DataSet make_replica(const ExperimentConfig& c, const DataSet& base, Index i) {
    DataSet d = base;
    d.seed = replica_noise_seed(c.seed, i);
    d.mode = c.noise_mode;
    d.snr_db = c.snr_db;
    GaussianStream g(d.seed);
    switch (c.noise_mode) {
        case NoiseMode::None:
            break;
        case NoiseMode::AdditiveOutput: {
            const Vec sv = snr_sigma_v(c, base);
            d.sigma_v = sv;
            d.y = base.y + sv.asDiagonal() * g.normal_mat(base.y.rows(), base.N_data());
            break;
        }
        case NoiseMode::Innovation: {
            const Mat e = std::sqrt(c.system.sigma2) *
                          g.normal_mat(c.system.p(), base.N_data());
            d.y = simulate(c.system, base.u, e).y;
            break;
        }
    }
    return d;
}

inline RunConfig run_config_for(const ExperimentConfig& c, ControlMode mode, const Vec& sigma_v,
                                uint64_t noise_seed) {
    RunConfig rc;
    rc.mode = mode;
    rc.T_v = c.T_v;
    rc.weights.Q = c.q * Mat::Identity(c.system.p(), c.system.p());
    rc.weights.R = c.r * Mat::Identity(c.system.m(), c.system.m());
    if (mode == ControlMode::Beta2Fixed) rc.beta_fixed = c.beta2_fixed;
    if (mode == ControlMode::Beta3Fixed) rc.beta_fixed = c.beta3_fixed;
    if (mode == ControlMode::Beta2Online) rc.tune = tune_config_for(c, TuneMode::Beta2);
    if (mode == ControlMode::Beta3Online) rc.tune = tune_config_for(c, TuneMode::Beta3);
    rc.loop_noise = c.in_loop_noise;
    rc.sigma_v = sigma_v;
    rc.blow_up_factor = c.blow_up_factor;
    rc.noise_seed = noise_seed;
    return rc;
}

// --------------------------------------------------------------------------
// generate
// --------------------------------------------------------------------------

inline int cmd_generate(const ExperimentConfig& c, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const DataSet base = make_base_dataset(c);
    io::write_dataset_csv(base_path(out_dir), base, c.config_hash);
    for (Index i = 0; i < c.n_mc; ++i)
        io::write_dataset_csv(replica_path(out_dir, i), make_replica(c, base, i), c.config_hash);
    std::cout << "wrote " << base_path(out_dir) << " and " << c.n_mc << " replicas ("
              << to_string(c.noise_mode) << ", " << c.snr_db << " dB)\n";
    return 0;
}

// --------------------------------------------------------------------------
// shared episode plumbing
// --------------------------------------------------------------------------

struct ReplicaSet {
    DataSet base;
    std::vector<DataSet> replicas;
};

inline ReplicaSet load_replicas(const ExperimentConfig& c, const std::string& out_dir) {
    ReplicaSet rs;
    const std::string bp = base_path(out_dir);
    if (!std::filesystem::exists(bp))
        throw InputError("dataset not found: " + bp + " (run the generate verb first)");
    rs.base = io::read_dataset_csv(bp).data;
    rs.replicas.reserve(static_cast<size_t>(c.n_mc));
    for (Index i = 0; i < c.n_mc; ++i) {
        const std::string rp = replica_path(out_dir, i);
        if (!std::filesystem::exists(rp))
            throw InputError("dataset not found: " + rp + " (run the generate verb first)");
        rs.replicas.push_back(io::read_dataset_csv(rp).data);
    }
    return rs;
}

inline std::vector<LqFactors> decompose_replicas(const ExperimentConfig& c, const ReplicaSet& rs,
                                                 int workers) {
    std::vector<LqFactors> out(rs.replicas.size());
    parallel_for(static_cast<Index>(rs.replicas.size()), workers, [&](Index i) {
        out[static_cast<size_t>(i)] =
            lq_decompose(build_bundle(rs.replicas[static_cast<size_t>(i)], c.rho, c.T));
    });
    return out;
}

inline void dump_lq_blocks(const LqFactors& f, const std::string& out_dir,
                           const std::string& hash) {
    io::write_matrix_csv(out_dir + "/lq_L11.csv", f.L11, hash);
    io::write_matrix_csv(out_dir + "/lq_L21.csv", f.L21, hash);
    io::write_matrix_csv(out_dir + "/lq_L22.csv", f.L22, hash);
    io::write_matrix_csv(out_dir + "/lq_L31.csv", f.L31, hash);
    io::write_matrix_csv(out_dir + "/lq_L32.csv", f.L32, hash);
    io::write_matrix_csv(out_dir + "/lq_L33.csv", f.L33, hash);
}

inline void print_quartiles(std::ostream& os, const std::string& name,
                            const std::vector<double>& v) {
    std::vector<double> finite;
    for (double x : v)
        if (std::isfinite(x)) finite.push_back(x);
    if (finite.empty()) {
        os << name << ": no finite values\n";
        return;
    }
    os << name << ": q1=" << io::format_double(plot::quantile_type7(finite, 0.25))
       << " median=" << io::format_double(plot::quantile_type7(finite, 0.5))
       << " q3=" << io::format_double(plot::quantile_type7(finite, 0.75)) << "\n";
}

// --------------------------------------------------------------------------
// montecarlo
// --------------------------------------------------------------------------

inline int cmd_montecarlo(const ExperimentConfig& c, ControlMode mode, const std::string& out_dir,
                          int workers, bool dump_lq = false) {
    std::filesystem::create_directories(out_dir);
    const ReplicaSet rs = load_replicas(c, out_dir);
    const ReferenceSignal refs = reference_signal(c.T_v, c.T);
    const Vec sigma_v = snr_sigma_v(c, rs.base);

    std::vector<LqFactors> lqs;
    if (mode_uses_data(mode)) lqs = decompose_replicas(c, rs, workers);
    if (dump_lq && !lqs.empty()) dump_lq_blocks(lqs[0], out_dir, c.config_hash);

    std::vector<Episode> eps(static_cast<size_t>(c.n_mc));
    parallel_for(c.n_mc, workers, [&](Index i) {
        const RunConfig rc = run_config_for(c, mode, sigma_v, episode_noise_seed(c.seed, i));
        const LqFactors* f = mode_uses_data(mode) ? &lqs[static_cast<size_t>(i)] : nullptr;
        eps[static_cast<size_t>(i)] = run_closed_loop(c.system, f, refs, rc);
    });

    std::vector<io::EpisodeSummaryRow> rows;
    std::vector<double> js, jus, jys;
    Index n_div = 0;
    for (Index i = 0; i < c.n_mc; ++i) {
        const Episode& ep = eps[static_cast<size_t>(i)];
        const PerformanceIndices pi = performance_indices(ep, refs, run_config_for(c, mode, sigma_v, 0).weights);
        io::EpisodeSummaryRow r;
        r.mode = to_string(mode);
        r.replica = i;
        r.seed = episode_noise_seed(c.seed, i);
        r.steps = ep.steps_completed;
        r.diverged = ep.diverged;
        r.J = pi.J;
        r.J_u = pi.J_u;
        r.J_y = pi.J_y;
        r.betas = ep.betas;
        rows.push_back(std::move(r));
        js.push_back(pi.J);
        jus.push_back(pi.J_u);
        jys.push_back(pi.J_y);
        if (ep.diverged) ++n_div;
    }

    const std::string summary = out_dir + "/summary_" + to_string(mode) + ".csv";
    io::write_summary_csv(summary, rows, c.T_v, c.config_hash);
    std::ofstream jf = io::open_out(out_dir + "/episodes_" + to_string(mode) + ".jsonl");
    io::write_steps_meta(jf, to_string(mode), c.config_hash);
    for (Index i = 0; i < c.n_mc; ++i) io::write_steps_jsonl(jf, i, eps[static_cast<size_t>(i)], refs);

    std::cout << "mode " << to_string(mode) << ": " << c.n_mc << " episodes, " << n_div
              << " diverged\n";
    print_quartiles(std::cout, "J  ", js);
    print_quartiles(std::cout, "J_u", jus);
    print_quartiles(std::cout, "J_y", jys);
    std::cout << "wrote " << summary << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// sweep
// --------------------------------------------------------------------------

/// Median oracle cost on the same replicas; anchors the divergence cap.
inline double kalman_median_cost(const ExperimentConfig& c, const ReplicaSet& rs,
                                 const ReferenceSignal& refs, const Vec& sigma_v, int workers) {
    std::vector<double> js(static_cast<size_t>(c.n_mc));
    parallel_for(c.n_mc, workers, [&](Index i) {
        const RunConfig rc =
            run_config_for(c, ControlMode::KalmanOracle, sigma_v, episode_noise_seed(c.seed, i));
        const Episode ep = run_closed_loop(c.system, nullptr, refs, rc);
        js[static_cast<size_t>(i)] = performance_indices(ep, refs, rc.weights).J;
    });
    std::vector<double> finite;
    for (double x : js)
        if (std::isfinite(x)) finite.push_back(x);
    if (finite.empty()) return 0;
    return plot::quantile_type7(finite, 0.5);
}

inline double divergence_cap(const ExperimentConfig& c, double kalman_median) {
    if (kalman_median > 0) return c.divergence_cap_factor * kalman_median;
    return c.divergence_cap_factor;
}

struct SweepOutput {
    SweepResult result;
    double cap = 0;
    double kalman_median = 0;
};

inline SweepOutput run_sweep(const ExperimentConfig& c, TuneMode which, const ReplicaSet& rs,
                             const std::vector<LqFactors>& lqs, int workers) {
    const ReferenceSignal refs = reference_signal(c.T_v, c.T);
    const Vec sigma_v = snr_sigma_v(c, rs.base);
    const ControlMode mode =
        which == TuneMode::Beta2 ? ControlMode::Beta2Fixed : ControlMode::Beta3Fixed;

    SweepOutput out;
    out.kalman_median = kalman_median_cost(c, rs, refs, sigma_v, workers);
    out.cap = divergence_cap(c, out.kalman_median);

    const std::vector<double> grid =
        which == TuneMode::Beta2 ? log_grid(c.grid2_min, c.grid2_max, c.grid2_points)
                                 : log_grid(c.grid3_min, c.grid3_max, c.grid3_points);

    auto fn = [&](double beta, Index i) -> EpisodeCost {
        RunConfig rc = run_config_for(c, mode, sigma_v, episode_noise_seed(c.seed, i));
        rc.beta_fixed = beta;
        const Episode ep = run_closed_loop(c.system, &lqs[static_cast<size_t>(i)], refs, rc);
        const PerformanceIndices pi = performance_indices(ep, refs, rc.weights);
        return {pi.J, pi.J_u, pi.J_y, ep.diverged};
    };
    out.result = oracle_sweep(grid, c.n_mc, out.cap, fn, workers);
    return out;
}

inline int cmd_sweep(const ExperimentConfig& c, TuneMode which, const std::string& out_dir,
                     int workers, bool dump_lq = false) {
    std::filesystem::create_directories(out_dir);
    const ReplicaSet rs = load_replicas(c, out_dir);
    const std::vector<LqFactors> lqs = decompose_replicas(c, rs, workers);
    if (dump_lq) dump_lq_blocks(lqs[0], out_dir, c.config_hash);

    const SweepOutput so = run_sweep(c, which, rs, lqs, workers);
    const std::string tag = which == TuneMode::Beta2 ? "beta2" : "beta3";
    const std::string csv = out_dir + "/sweep_" + tag + ".csv";
    io::write_sweep_csv(csv, so.result.points, c.config_hash);

    plot::Series s;
    s.label = "J_AV";
    for (const SweepPoint& pt : so.result.points) {
        s.x.push_back(pt.beta);
        s.y.push_back(pt.J_av);
    }
    plot::write_line_svg(out_dir + "/sweep_" + tag + ".svg", "average cost vs " + tag, tag,
                         "J_AV", {s}, true, true);

    std::cout << "sweep " << tag << ": beta_bar=" << io::format_double(so.result.beta_bar)
              << " J_AV(beta_bar)=" << io::format_double(so.result.points[static_cast<size_t>(so.result.argmin)].J_av)
              << " cap=" << io::format_double(so.cap) << "\n";
    std::cout << "wrote " << csv << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// plot
// --------------------------------------------------------------------------

inline int cmd_plot(const std::string& results_dir, const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(results_dir))
        throw InputError("results directory not found: " + results_dir);

    std::vector<std::string> summaries, sweeps;
    for (const auto& entry : fs::directory_iterator(results_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("summary_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
            summaries.push_back(entry.path().string());
        if (name.rfind("sweep_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
            sweeps.push_back(entry.path().string());
    }
    std::sort(summaries.begin(), summaries.end());
    std::sort(sweeps.begin(), sweeps.end());
    if (summaries.empty() && sweeps.empty())
        throw InputError("no summary_*.csv or sweep_*.csv files in " + results_dir);

    fs::create_directories(out_dir);
    int files = 0;

    if (!summaries.empty()) {
        std::vector<std::string> labels;
        std::vector<std::vector<double>> J, Ju, Jy;
        for (const std::string& path : summaries) {
            const std::vector<io::EpisodeSummaryRow> rows = io::read_summary_csv(path);
            if (rows.empty()) throw ConfigError(path + ": no episode rows");
            std::vector<double> j, ju, jy;
            for (const io::EpisodeSummaryRow& r : rows) {
                j.push_back(r.J);
                ju.push_back(r.J_u);
                jy.push_back(r.J_y);
            }
            labels.push_back(rows[0].mode);
            J.push_back(std::move(j));
            Ju.push_back(std::move(ju));
            Jy.push_back(std::move(jy));
        }
        plot::write_boxplot_svg(out_dir + "/boxplot_J.svg", "closed-loop cost J", "J", labels, J);
        plot::write_boxplot_svg(out_dir + "/boxplot_J_u.svg", "input cost J_u", "J_u", labels, Ju);
        plot::write_boxplot_svg(out_dir + "/boxplot_J_y.svg", "tracking cost J_y", "J_y", labels, Jy);
        files += 3;
    }

    for (const std::string& path : sweeps) {
        const std::vector<SweepPoint> pts = io::read_sweep_csv(path);
        if (pts.empty()) throw ConfigError(path + ": no sweep rows");
        plot::Series s;
        s.label = "J_AV";
        for (const SweepPoint& pt : pts) {
            s.x.push_back(pt.beta);
            s.y.push_back(pt.J_av);
        }
        const std::string stem = fs::path(path).stem().string();
        plot::write_line_svg(out_dir + "/" + stem + ".svg", stem, "beta", "J_AV", {s}, true, true);
        ++files;
    }

    std::cout << "wrote " << files << " figure(s) to " << out_dir << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// verify
// --------------------------------------------------------------------------

inline int cmd_verify(const ExperimentConfig& c, int workers) {
    int failures = 0;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  " << detail << "\n";
        if (!ok) ++failures;
    };

    {
        Prop1Config pc;
        pc.n_redraws = c.verify_redraws;
        pc.N_data = c.verify_n_data;
        pc.rho = c.rho;
        pc.T = c.T;
        pc.input_variance = c.input_variance;
        pc.seed = c.seed;
        pc.workers = workers;
        const Prop1Result r = prop1_montecarlo(c.system, pc);
        const double trace_err = std::abs(r.trace_sample - r.trace_simple) / r.trace_simple;
        report("variance formula (matrix)", r.rel_frobenius < 0.15,
               "rel_frobenius=" + io::format_double(r.rel_frobenius) + " (limit 0.15)");
        report("variance formula (trace)", trace_err < 0.10,
               "rel_err=" + io::format_double(trace_err) + " (limit 0.10)");
        report("variance formula (mean)", r.mean_ok, "componentwise |mean| within 3 sigma");
    }

    {
        const std::vector<Index> lengths = {2000, 10000, 50000};
        const std::vector<LemmaPoint> pts =
            lemma_convergence(c.system, c.rho, c.T, c.input_variance, lengths, c.lemma_seeds,
                              c.seed, workers);
        bool decreasing = true;
        for (size_t i = 1; i < pts.size(); ++i)
            if (pts[i].median_rel_err >= pts[i - 1].median_rel_err) decreasing = false;
        std::string detail;
        for (const LemmaPoint& pt : pts)
            detail += "N=" + std::to_string(pt.N_data) + ":" + io::format_double(pt.median_rel_err) + " ";
        report("noise factor convergence", decreasing && pts.back().median_rel_err < 0.15, detail);
    }

    {
        Prop2Config pc;
        pc.n_redraws = c.prop2_redraws;
        pc.N_data = c.verify_n_data;
        pc.rho = c.rho;
        pc.T = c.T;
        pc.input_variance = c.input_variance;
        pc.seed = c.seed;
        pc.workers = workers;
        const Prop2Result r = prop2_check(c.system, pc);
        report("third-block size", std::abs(r.ratio - 1.0) <= 0.25,
               "mean ratio=" + io::format_double(r.ratio) + " (limit 1 +- 0.25)");
    }

    return failures == 0 ? 0 : 1;
}

}  // namespace gddpc::bench
