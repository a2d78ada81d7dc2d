#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gddpc/closed_loop.hpp"
#include "gddpc/lti.hpp"
#include "gddpc/tuning.hpp"
#include "gddpc/types.hpp"

namespace gddpc::io {

/// Shortest round-trippable decimal form.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec <= 16; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot open for writing: " + path);
    return f;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open for reading: " + path);
    return f;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": not a number: '" + s + "'");
    }
}

inline long long parse_int(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": not an integer: '" + s + "'");
    }
}

// Split seeds routinely land above the signed 64-bit range.
inline uint64_t parse_u64(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": not an unsigned integer: '" + s + "'");
    }
}

/// Reads the `# key=value` comment block at the top of a CSV, returns the
/// first non-comment line (the header) and leaves the stream at the data.
inline std::string read_meta(std::istream& in, std::map<std::string, std::string>& meta) {
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] != '#') return t;
        const std::string body = trim(t.substr(1));
        const auto eq = body.find('=');
        if (eq != std::string::npos)
            meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
    }
    return "";
}

}  // namespace detail

// --------------------------------------------------------------------------
// datasets: header `t,u_1..u_m,y_1..y_p`, hash and generation info up top
// --------------------------------------------------------------------------

inline void write_dataset_csv(const std::string& path, const DataSet& d,
                              const std::string& config_hash) {
    std::ofstream f = open_out(path);
    const Index m = d.u.rows(), p = d.y.rows(), n = d.N_data();
    f << "# config_hash=" << config_hash << "\n";
    f << "# seed=" << d.seed << "\n";
    f << "# noise=" << to_string(d.mode) << "\n";
    f << "# snr_db=" << format_double(d.snr_db) << "\n";
    f << "t";
    for (Index i = 0; i < m; ++i) f << ",u_" << (i + 1);
    for (Index i = 0; i < p; ++i) f << ",y_" << (i + 1);
    f << "\n";
    for (Index t = 0; t < n; ++t) {
        f << t;
        for (Index i = 0; i < m; ++i) f << "," << format_double(d.u(i, t));
        for (Index i = 0; i < p; ++i) f << "," << format_double(d.y(i, t));
        f << "\n";
    }
    if (!f) throw InputError("write failed: " + path);
}

struct DatasetFile {
    DataSet data;
    std::map<std::string, std::string> meta;
};

inline DatasetFile read_dataset_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    DatasetFile out;
    const std::string header = detail::read_meta(f, out.meta);
    if (header.empty()) throw ConfigError(path + ": missing header row");

    const std::vector<std::string> cols = detail::split(header, ',');
    Index m = 0, p = 0;
    if (cols.empty() || cols[0] != "t") throw ConfigError(path + ": header must start with 't'");
    for (size_t i = 1; i < cols.size(); ++i) {
        if (cols[i] == "u_" + std::to_string(m + 1) && p == 0) ++m;
        else if (cols[i] == "y_" + std::to_string(p + 1)) ++p;
        else throw ConfigError(path + ": unexpected column '" + cols[i] + "'");
    }
    if (m == 0 || p == 0) throw ConfigError(path + ": need at least one u and one y column");

    std::vector<std::vector<double>> rows;
    std::string line;
    Index rowno = 1;
    while (std::getline(f, line)) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        ++rowno;
        const std::vector<std::string> parts = detail::split(t, ',');
        if (static_cast<Index>(parts.size()) != 1 + m + p)
            throw ConfigError(path + ": row " + std::to_string(rowno) + ": expected " +
                              std::to_string(1 + m + p) + " fields, got " +
                              std::to_string(parts.size()));
        std::vector<double> vals;
        for (size_t i = 1; i < parts.size(); ++i)
            vals.push_back(detail::parse_double(parts[i], path + ": row " + std::to_string(rowno)));
        rows.push_back(std::move(vals));
    }
    const Index n = static_cast<Index>(rows.size());
    if (n == 0) throw ConfigError(path + ": no data rows");

    out.data.u.resize(m, n);
    out.data.y.resize(p, n);
    for (Index t2 = 0; t2 < n; ++t2) {
        for (Index i = 0; i < m; ++i) out.data.u(i, t2) = rows[static_cast<size_t>(t2)][static_cast<size_t>(i)];
        for (Index i = 0; i < p; ++i) out.data.y(i, t2) = rows[static_cast<size_t>(t2)][static_cast<size_t>(m + i)];
    }
    if (auto it = out.meta.find("seed"); it != out.meta.end())
        out.data.seed = detail::parse_u64(it->second, path + ": seed");
    if (auto it = out.meta.find("snr_db"); it != out.meta.end())
        out.data.snr_db = detail::parse_double(it->second, path + ": snr_db");
    return out;
}

// --------------------------------------------------------------------------
// per-run episode summaries: one row per episode, per-step beta columns
// --------------------------------------------------------------------------

struct EpisodeSummaryRow {
    std::string mode;
    Index replica = 0;
    uint64_t seed = 0;
    Index steps = 0;
    bool diverged = false;
    double J = 0, J_u = 0, J_y = 0;
    std::vector<double> betas;  // one per completed step
};

inline void write_summary_csv(const std::string& path, const std::vector<EpisodeSummaryRow>& rows,
                              Index T_v, const std::string& config_hash) {
    std::ofstream f = open_out(path);
    f << "# config_hash=" << config_hash << "\n";
    f << "mode,replica,seed,steps,diverged,J,J_u,J_y";
    for (Index t = 0; t < T_v; ++t) f << ",beta_" << (t + 1);
    f << "\n";
    for (const EpisodeSummaryRow& r : rows) {
        f << r.mode << "," << r.replica << "," << r.seed << "," << r.steps << ","
          << (r.diverged ? 1 : 0) << "," << format_double(r.J) << "," << format_double(r.J_u)
          << "," << format_double(r.J_y);
        for (Index t = 0; t < T_v; ++t) {
            f << ",";
            if (t < static_cast<Index>(r.betas.size())) f << format_double(r.betas[static_cast<size_t>(t)]);
        }
        f << "\n";
    }
    if (!f) throw InputError("write failed: " + path);
}

inline std::vector<EpisodeSummaryRow> read_summary_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    std::map<std::string, std::string> meta;
    const std::string header = detail::read_meta(f, meta);
    if (header.empty()) throw ConfigError(path + ": missing header row");
    const std::vector<std::string> cols = detail::split(header, ',');
    const std::vector<std::string> fixed = {"mode", "replica", "seed", "steps",
                                            "diverged", "J", "J_u", "J_y"};
    for (size_t i = 0; i < fixed.size(); ++i)
        if (cols.size() <= i || cols[i] != fixed[i])
            throw ConfigError(path + ": header must begin with mode,replica,seed,steps,diverged,J,J_u,J_y");

    std::vector<EpisodeSummaryRow> out;
    std::string line;
    Index rowno = 1;
    while (std::getline(f, line)) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        ++rowno;
        const std::string where = path + ": row " + std::to_string(rowno);
        const std::vector<std::string> parts = detail::split(t, ',');
        if (parts.size() < fixed.size() || parts.size() > cols.size())
            throw ConfigError(where + ": expected between " + std::to_string(fixed.size()) +
                              " and " + std::to_string(cols.size()) + " fields, got " +
                              std::to_string(parts.size()));
        EpisodeSummaryRow r;
        r.mode = parts[0];
        r.replica = detail::parse_int(parts[1], where);
        r.seed = detail::parse_u64(parts[2], where);
        r.steps = detail::parse_int(parts[3], where);
        r.diverged = detail::parse_int(parts[4], where) != 0;
        r.J = detail::parse_double(parts[5], where);
        r.J_u = detail::parse_double(parts[6], where);
        r.J_y = detail::parse_double(parts[7], where);
        for (size_t i = fixed.size(); i < parts.size(); ++i)
            if (!parts[i].empty()) r.betas.push_back(detail::parse_double(parts[i], where));
        out.push_back(std::move(r));
    }
    return out;
}

// --------------------------------------------------------------------------
// sweep curves
// --------------------------------------------------------------------------

inline void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& points,
                            const std::string& config_hash) {
    std::ofstream f = open_out(path);
    f << "# config_hash=" << config_hash << "\n";
    f << "beta,J_av,J_u_av,J_y_av,n_diverged\n";
    for (const SweepPoint& s : points)
        f << format_double(s.beta) << "," << format_double(s.J_av) << ","
          << format_double(s.Ju_av) << "," << format_double(s.Jy_av) << "," << s.n_diverged
          << "\n";
    if (!f) throw InputError("write failed: " + path);
}

inline std::vector<SweepPoint> read_sweep_csv(const std::string& path) {
    std::ifstream f = open_in(path);
    std::map<std::string, std::string> meta;
    const std::string header = detail::read_meta(f, meta);
    if (detail::split(header, ',') !=
        std::vector<std::string>{"beta", "J_av", "J_u_av", "J_y_av", "n_diverged"})
        throw ConfigError(path + ": expected header beta,J_av,J_u_av,J_y_av,n_diverged");
    std::vector<SweepPoint> out;
    std::string line;
    Index rowno = 1;
    while (std::getline(f, line)) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        ++rowno;
        const std::string where = path + ": row " + std::to_string(rowno);
        const std::vector<std::string> parts = detail::split(t, ',');
        if (parts.size() != 5) throw ConfigError(where + ": expected 5 fields");
        SweepPoint s;
        s.beta = detail::parse_double(parts[0], where);
        s.J_av = detail::parse_double(parts[1], where);
        s.Ju_av = detail::parse_double(parts[2], where);
        s.Jy_av = detail::parse_double(parts[3], where);
        s.n_diverged = detail::parse_int(parts[4], where);
        out.push_back(s);
    }
    return out;
}

// --------------------------------------------------------------------------
// per-step episode records, JSON lines
// --------------------------------------------------------------------------

inline void write_steps_meta(std::ostream& f, const std::string& mode,
                             const std::string& config_hash) {
    nlohmann::json j;
    j["type"] = "meta";
    j["mode"] = mode;
    j["config_hash"] = config_hash;
    f << j.dump() << "\n";
}

inline void write_steps_jsonl(std::ostream& f, Index replica, const Episode& ep,
                              const ReferenceSignal& refs) {
    for (Index t = 0; t < ep.steps_completed; ++t) {
        nlohmann::json j;
        j["type"] = "step";
        j["replica"] = replica;
        j["t"] = t;
        j["u"] = std::vector<double>(ep.u.col(t).data(), ep.u.col(t).data() + ep.u.rows());
        j["y"] = std::vector<double>(ep.y.col(t).data(), ep.y.col(t).data() + ep.y.rows());
        const Vec yr = refs.y.col(std::min(t, refs.y.cols() - 1));
        j["y_r"] = std::vector<double>(yr.data(), yr.data() + yr.size());
        j["beta"] = ep.betas[static_cast<size_t>(t)];
        j["objective"] = ep.objectives[static_cast<size_t>(t)];
        f << j.dump() << "\n";
    }
}

// --------------------------------------------------------------------------
// matrix dump (--dump-lq)
// --------------------------------------------------------------------------

inline void write_matrix_csv(const std::string& path, const Mat& a,
                             const std::string& config_hash) {
    std::ofstream f = open_out(path);
    f << "# config_hash=" << config_hash << "\n";
    f << "# rows=" << a.rows() << " cols=" << a.cols() << "\n";
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (j) f << ",";
            f << format_double(a(i, j));
        }
        f << "\n";
    }
    if (!f) throw InputError("write failed: " + path);
}

}  // namespace gddpc::io
