#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gddpc/io.hpp"
#include "gddpc/lti.hpp"
#include "gddpc/oracle_mpc.hpp"
#include "gddpc/tuning.hpp"
#include "gddpc/types.hpp"

namespace gddpc {

/// `key = value` lines, `#` comments. Values keep internal spaces.
struct KeyValueFile {
    std::map<std::string, std::string> kv;
    std::string canonical;  // sorted key=value lines, hash input
};

inline KeyValueFile parse_key_value_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    KeyValueFile out;
    std::string line;
    Index lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string t = io::detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = io::detail::trim(t.substr(0, eq));
        const std::string val = io::detail::trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        if (out.kv.count(key))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        out.kv[key] = val;
    }
    for (const auto& [k, v] : out.kv) out.canonical += k + "=" + v + "\n";
    return out;
}

inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline std::vector<double> parse_double_list(const std::string& v, const std::string& where) {
    std::istringstream ss(v);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(io::detail::parse_double(tok, where));
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

class KeyReader {
   public:
    KeyReader(const KeyValueFile& f, std::string path) : f_(f), path_(std::move(path)) {}

    bool has(const std::string& key) {
        seen_.insert(key);
        return f_.kv.count(key) > 0;
    }
    std::string str(const std::string& key, const std::string& dflt) {
        seen_.insert(key);
        const auto it = f_.kv.find(key);
        return it == f_.kv.end() ? dflt : it->second;
    }
    double num(const std::string& key, double dflt) {
        seen_.insert(key);
        const auto it = f_.kv.find(key);
        return it == f_.kv.end() ? dflt : io::detail::parse_double(it->second, where(key));
    }
    Index idx(const std::string& key, Index dflt) {
        seen_.insert(key);
        const auto it = f_.kv.find(key);
        return it == f_.kv.end() ? dflt
                                 : static_cast<Index>(io::detail::parse_int(it->second, where(key)));
    }
    uint64_t u64(const std::string& key, uint64_t dflt) {
        seen_.insert(key);
        const auto it = f_.kv.find(key);
        return it == f_.kv.end()
                   ? dflt
                   : static_cast<uint64_t>(io::detail::parse_int(it->second, where(key)));
    }
    std::vector<double> list(const std::string& key) {
        seen_.insert(key);
        return parse_double_list(f_.kv.at(key), where(key));
    }
    std::string where(const std::string& key) const { return path_ + ": key '" + key + "'"; }

    void check_no_unknown() const {
        for (const auto& [k, v] : f_.kv)
            if (!seen_.count(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
    }

   private:
    const KeyValueFile& f_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline NoiseMode parse_noise_mode(const std::string& s, const std::string& where) {
    if (s == "additive") return NoiseMode::AdditiveOutput;
    if (s == "innovation") return NoiseMode::Innovation;
    if (s == "none") return NoiseMode::None;
    throw ConfigError(where + ": expected additive | innovation | none, got '" + s + "'");
}

/// System file: scalar transfer function in powers of q^-1 plus noise model.
/// The predictor gain comes either from an explicit K or from a white-noise
/// Riccati pair (kalman_qw, kalman_rv); at most one of the two.
inline SystemModel load_system(const std::string& path, std::string* canonical = nullptr) {
    const KeyValueFile f = parse_key_value_file(path);
    if (canonical) *canonical = f.canonical;
    detail::KeyReader r(f, path);

    require(r.has("num") && r.has("den"), "system config needs num and den: " + path);
    const std::vector<double> num = r.list("num");
    const std::vector<double> den = r.list("den");
    const double sigma2 = r.num("sigma2", 1.0);

    SystemModel s = make_siso_from_tf(num, den, sigma2);

    const bool has_k = r.has("K");
    const bool has_ric = r.has("kalman_qw") || r.has("kalman_rv");
    if (has_k && has_ric)
        throw ConfigError(path + ": give either K or the kalman_qw/kalman_rv pair, not both");
    if (has_k) {
        const std::vector<double> kv = r.list("K");
        if (static_cast<Index>(kv.size()) != s.n())
            throw ConfigError(path + ": K needs " + std::to_string(s.n()) + " entries");
        for (Index i = 0; i < s.n(); ++i) s.K(i, 0) = kv[static_cast<size_t>(i)];
    } else if (has_ric) {
        require(r.has("kalman_qw") && r.has("kalman_rv"),
                path + ": kalman_qw and kalman_rv must be given together");
        const double qw = r.num("kalman_qw", 0.0);
        const double rv = r.num("kalman_rv", 0.0);
        require(qw > 0 && rv > 0, path + ": kalman_qw and kalman_rv must be positive");
        const RiccatiResult ric =
            riccati_kalman_gain(s.A, s.C, qw * Mat::Identity(s.n(), s.n()),
                                rv * Mat::Identity(s.p(), s.p()));
        s.K = ric.K;
    }
    r.check_no_unknown();

    const SystemChecks checks = check_system(s);
    if (!checks.predictor_stable)
        throw ConfigError(path + ": predictor A - K C is not Schur stable");
    return s;
}

/// Experiment file: everything around the system. Defaults are the
/// benchmark scale (short dataset, 13 dB, long grids).
struct ExperimentConfig {
    std::string system_path;
    SystemModel system;

    Index n_data = 250;
    Index rho = 20, T = 20, T_v = 50;
    double q = 2000, r = 0.01;
    double snr_db = 13;
    Index n_mc = 50;
    double input_variance = 1;
    NoiseMode noise_mode = NoiseMode::AdditiveOutput;    // replica construction
    NoiseMode in_loop_noise = NoiseMode::AdditiveOutput; // measurement noise while running

    double grid2_min = 1e0, grid2_max = 1e4;
    Index grid2_points = 200;
    double grid3_min = 1e-4, grid3_max = 1e0;
    Index grid3_points = 200;

    double tune_tol_rel = 1e-2;
    Index tune_grid_points = 12;
    Index tune_max_bisect = 60;

    double beta2_fixed = 0, beta3_fixed = 0;  // used by the fixed modes

    double blow_up_factor = 1e4;
    double divergence_cap_factor = 1e6;

    Index verify_redraws = 500;
    Index verify_n_data = 10000;
    Index prop2_redraws = 200;
    Index lemma_seeds = 20;

    uint64_t seed = 1;
    std::string out_dir = "results";
    std::string config_hash;
};

inline ExperimentConfig load_experiment(const std::string& path) {
    const KeyValueFile f = parse_key_value_file(path);
    detail::KeyReader r(f, path);
    ExperimentConfig c;

    if (!r.has("system"))
        throw ConfigError(path + ": needs a 'system' key pointing at a system config");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    c.system_path = (base / r.str("system", "")).string();
    std::string system_canonical;
    c.system = load_system(c.system_path, &system_canonical);

    c.n_data = r.idx("n_data", c.n_data);
    c.rho = r.idx("rho", c.rho);
    c.T = r.idx("T", c.T);
    c.T_v = r.idx("T_v", c.T_v);
    c.q = r.num("q", c.q);
    c.r = r.num("r", c.r);
    c.snr_db = r.num("snr_db", c.snr_db);
    c.n_mc = r.idx("n_mc", c.n_mc);
    c.input_variance = r.num("input_variance", c.input_variance);
    c.noise_mode = parse_noise_mode(r.str("noise_mode", "additive"), r.where("noise_mode"));
    c.in_loop_noise =
        parse_noise_mode(r.str("in_loop_noise", "additive"), r.where("in_loop_noise"));

    c.grid2_min = r.num("grid2_min", c.grid2_min);
    c.grid2_max = r.num("grid2_max", c.grid2_max);
    c.grid2_points = r.idx("grid2_points", c.grid2_points);
    c.grid3_min = r.num("grid3_min", c.grid3_min);
    c.grid3_max = r.num("grid3_max", c.grid3_max);
    c.grid3_points = r.idx("grid3_points", c.grid3_points);

    c.tune_tol_rel = r.num("tune_tol_rel", c.tune_tol_rel);
    c.tune_grid_points = r.idx("tune_grid_points", c.tune_grid_points);
    c.tune_max_bisect = r.idx("tune_max_bisect", c.tune_max_bisect);

    c.beta2_fixed = r.num("beta2_fixed", c.beta2_fixed);
    c.beta3_fixed = r.num("beta3_fixed", c.beta3_fixed);

    c.blow_up_factor = r.num("blow_up_factor", c.blow_up_factor);
    c.divergence_cap_factor = r.num("divergence_cap_factor", c.divergence_cap_factor);

    c.verify_redraws = r.idx("verify_redraws", c.verify_redraws);
    c.verify_n_data = r.idx("verify_n_data", c.verify_n_data);
    c.prop2_redraws = r.idx("prop2_redraws", c.prop2_redraws);
    c.lemma_seeds = r.idx("lemma_seeds", c.lemma_seeds);

    c.seed = r.u64("seed", c.seed);
    c.out_dir = r.str("out_dir", c.out_dir);
    r.check_no_unknown();

    require(c.n_data >= 1 && c.rho >= 1 && c.T >= 1 && c.T_v >= 1, path + ": sizes must be positive");
    require(c.q >= 0 && c.r > 0, path + ": q must be >= 0 and r > 0");
    require(c.n_mc >= 1, path + ": n_mc must be positive");
    require(c.input_variance > 0, path + ": input_variance must be positive");

    c.config_hash = hash_hex(fnv1a64(f.canonical + "---\n" + system_canonical));
    return c;
}

inline TuneConfig tune_config_for(const ExperimentConfig& c, TuneMode mode) {
    TuneConfig t = TuneConfig::for_mode(mode);
    if (mode == TuneMode::Beta2) {
        t.beta_min = c.grid2_min;
        t.beta_max = c.grid2_max;
    } else {
        t.beta_min = c.grid3_min;
        t.beta_max = c.grid3_max;
    }
    t.grid_points = c.tune_grid_points;
    t.tol_rel = c.tune_tol_rel;
    t.max_bisect = static_cast<int>(c.tune_max_bisect);
    return t;
}

}  // namespace gddpc
