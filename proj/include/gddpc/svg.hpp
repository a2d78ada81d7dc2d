#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gddpc/io.hpp"
#include "gddpc/types.hpp"

namespace gddpc::plot {

/// Linear-interpolation quantile (the spreadsheet/numpy default), q in [0,1].
inline double quantile_type7(std::vector<double> v, double q) {
    require(!v.empty(), "quantile_type7: empty sample");
    require(q >= 0.0 && q <= 1.0, "quantile_type7: q must be in [0,1]");
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - std::floor(h);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

struct BoxStats {
    double median = 0, q1 = 0, q3 = 0;
    double lo_whisker = 0, hi_whisker = 0;  // extreme points inside the 1.5 IQR fences
    std::vector<double> outliers;
    Index n = 0, n_nonfinite = 0;
};

inline BoxStats box_stats(const std::vector<double>& raw) {
    std::vector<double> v;
    Index dropped = 0;
    for (double x : raw) {
        if (std::isfinite(x)) v.push_back(x);
        else ++dropped;
    }
    require(!v.empty(), "box_stats: no finite values");
    BoxStats b;
    b.n = static_cast<Index>(v.size());
    b.n_nonfinite = dropped;
    b.median = quantile_type7(v, 0.5);
    b.q1 = quantile_type7(v, 0.25);
    b.q3 = quantile_type7(v, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.lo_whisker = b.q3;
    b.hi_whisker = b.q1;
    bool any = false;
    for (double x : v) {
        if (x < lo_fence || x > hi_fence) {
            b.outliers.push_back(x);
        } else {
            if (!any) {
                b.lo_whisker = b.hi_whisker = x;
                any = true;
            } else {
                b.lo_whisker = std::min(b.lo_whisker, x);
                b.hi_whisker = std::max(b.hi_whisker, x);
            }
        }
    }
    if (!any) {  // pathological: everything flagged; fall back to the box
        b.lo_whisker = b.q1;
        b.hi_whisker = b.q3;
    }
    std::sort(b.outliers.begin(), b.outliers.end());
    return b;
}

namespace detail {

struct Frame {
    double x0 = 70, x1 = 610, y0 = 40, y1 = 360;  // pixel box, y grows downward
    double lo_x = 0, hi_x = 1, lo_y = 0, hi_y = 1;
    bool log_x = false, log_y = false;

    double px(double x) const {
        const double a = log_x ? std::log10(x) : x;
        const double lo = log_x ? std::log10(lo_x) : lo_x;
        const double hi = log_x ? std::log10(hi_x) : hi_x;
        return x0 + (a - lo) / (hi - lo) * (x1 - x0);
    }
    double py(double y) const {
        const double a = log_y ? std::log10(y) : y;
        const double lo = log_y ? std::log10(lo_y) : lo_y;
        const double hi = log_y ? std::log10(hi_y) : hi_y;
        return y1 - (a - lo) / (hi - lo) * (y1 - y0);
    }
};

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline void svg_header(std::ostream& f, const std::string& title) {
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"660\" height=\"420\" "
         "viewBox=\"0 0 660 420\" font-family=\"sans-serif\" font-size=\"12\">\n";
    f << "<rect width=\"660\" height=\"420\" fill=\"white\"/>\n";
    f << "<text x=\"330\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
}

inline void svg_axes(std::ostream& f, const Frame& fr, const std::string& xlabel,
                     const std::string& ylabel, bool draw_x_ticks = true) {
    f << "<rect x=\"" << fr.x0 << "\" y=\"" << fr.y0 << "\" width=\"" << (fr.x1 - fr.x0)
      << "\" height=\"" << (fr.y1 - fr.y0) << "\" fill=\"none\" stroke=\"black\"/>\n";
    f << "<text x=\"" << 0.5 * (fr.x0 + fr.x1) << "\" y=\"405\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
    f << "<text x=\"16\" y=\"" << 0.5 * (fr.y0 + fr.y1)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << 0.5 * (fr.y0 + fr.y1) << ")\">"
      << ylabel << "</text>\n";

    auto ticks = [](double lo, double hi, bool logscale) {
        std::vector<double> t;
        if (logscale) {
            const int a = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
            const int b = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
            for (int d = a; d <= b; ++d) t.push_back(std::pow(10.0, d));
            if (t.empty()) t = {lo, hi};
        } else {
            for (int i = 0; i <= 4; ++i) t.push_back(lo + (hi - lo) * i / 4.0);
        }
        return t;
    };
    if (draw_x_ticks) {
        for (double v : ticks(fr.lo_x, fr.hi_x, fr.log_x)) {
            const double x = fr.px(v);
            f << "<line x1=\"" << x << "\" y1=\"" << fr.y1 << "\" x2=\"" << x << "\" y2=\""
              << fr.y1 + 5 << "\" stroke=\"black\"/>\n";
            f << "<text x=\"" << x << "\" y=\"" << fr.y1 + 18 << "\" text-anchor=\"middle\">"
              << fmt_tick(v) << "</text>\n";
        }
    }
    for (double v : ticks(fr.lo_y, fr.hi_y, fr.log_y)) {
        const double y = fr.py(v);
        f << "<line x1=\"" << fr.x0 - 5 << "\" y1=\"" << y << "\" x2=\"" << fr.x0 << "\" y2=\""
          << y << "\" stroke=\"black\"/>\n";
        f << "<text x=\"" << fr.x0 - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
          << fmt_tick(v) << "</text>\n";
    }
}

}  // namespace detail

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f6fb2";
};

inline void write_line_svg(const std::string& path, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel,
                           const std::vector<Series>& series, bool log_x, bool log_y) {
    require(!series.empty(), "write_line_svg: no series");
    double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
    bool any = false;
    for (const Series& s : series) {
        require(s.x.size() == s.y.size() && !s.x.empty(), "write_line_svg: bad series " + s.label);
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (log_x && s.x[i] <= 0) continue;
            if (log_y && s.y[i] <= 0) continue;
            if (!any) {
                lo_x = hi_x = s.x[i];
                lo_y = hi_y = s.y[i];
                any = true;
            }
            lo_x = std::min(lo_x, s.x[i]);
            hi_x = std::max(hi_x, s.x[i]);
            lo_y = std::min(lo_y, s.y[i]);
            hi_y = std::max(hi_y, s.y[i]);
        }
    }
    require(any, "write_line_svg: no plottable points");
    if (lo_x == hi_x) {
        lo_x = log_x ? lo_x / 2 : lo_x - 1;
        hi_x = log_x ? hi_x * 2 : hi_x + 1;
    }
    if (lo_y == hi_y) {
        lo_y = log_y ? lo_y / 2 : lo_y - 1;
        hi_y = log_y ? hi_y * 2 : hi_y + 1;
    }

    detail::Frame fr;
    fr.lo_x = lo_x;
    fr.hi_x = hi_x;
    fr.lo_y = lo_y;
    fr.hi_y = hi_y;
    fr.log_x = log_x;
    fr.log_y = log_y;

    std::ofstream f = io::open_out(path);
    detail::svg_header(f, title);
    detail::svg_axes(f, fr, xlabel, ylabel);

    const std::vector<std::string> palette = {"#1f6fb2", "#d1495b", "#3a7d44", "#8d6b94"};
    for (size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const std::string color = s.color.empty() ? palette[si % palette.size()] : s.color;
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if ((log_x && s.x[i] <= 0) || (log_y && s.y[i] <= 0)) continue;
            f << fr.px(s.x[i]) << "," << fr.py(s.y[i]) << " ";
        }
        f << "\"/>\n";
        f << "<text x=\"" << fr.x1 - 8 << "\" y=\"" << fr.y0 + 16 + 16 * static_cast<double>(si)
          << "\" text-anchor=\"end\" fill=\"" << color << "\">" << s.label << "</text>\n";
    }
    f << "</svg>\n";
    if (!f) throw InputError("write failed: " + path);
}

inline void write_boxplot_svg(const std::string& path, const std::string& title,
                              const std::string& ylabel, const std::vector<std::string>& labels,
                              const std::vector<std::vector<double>>& groups, bool log_y = false) {
    require(!groups.empty() && groups.size() == labels.size(),
            "write_boxplot_svg: need matching labels and groups");
    std::vector<BoxStats> stats;
    double lo = 0, hi = 0;
    bool any = false;
    for (const std::vector<double>& g : groups) {
        stats.push_back(box_stats(g));
        const BoxStats& b = stats.back();
        double glo = b.lo_whisker, ghi = b.hi_whisker;
        if (!b.outliers.empty()) {
            glo = std::min(glo, b.outliers.front());
            ghi = std::max(ghi, b.outliers.back());
        }
        if (!any) {
            lo = glo;
            hi = ghi;
            any = true;
        }
        lo = std::min(lo, glo);
        hi = std::max(hi, ghi);
    }
    if (log_y) {
        for (const BoxStats& b : stats)
            require(b.lo_whisker > 0 && (b.outliers.empty() || b.outliers.front() > 0),
                    "write_boxplot_svg: log scale needs positive data");
    }
    if (lo == hi) {
        lo = log_y ? lo / 2 : lo - 1;
        hi = log_y ? hi * 2 : hi + 1;
    } else if (!log_y) {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }

    detail::Frame fr;
    fr.lo_x = 0;
    fr.hi_x = static_cast<double>(groups.size());
    fr.lo_y = lo;
    fr.hi_y = hi;
    fr.log_y = log_y;

    std::ofstream f = io::open_out(path);
    detail::svg_header(f, title);
    // y axis only; x positions are categorical
    detail::svg_axes(f, fr, "", ylabel, false);

    const double slot = (fr.x1 - fr.x0) / static_cast<double>(groups.size());
    const double half = 0.25 * slot;
    for (size_t i = 0; i < groups.size(); ++i) {
        const BoxStats& b = stats[i];
        const double cx = fr.x0 + slot * (static_cast<double>(i) + 0.5);
        const double yq1 = fr.py(b.q1), yq3 = fr.py(b.q3), ymed = fr.py(b.median);
        const double ylo = fr.py(b.lo_whisker), yhi = fr.py(b.hi_whisker);
        f << "<line x1=\"" << cx << "\" y1=\"" << ylo << "\" x2=\"" << cx << "\" y2=\"" << yq1
          << "\" stroke=\"black\"/>\n";
        f << "<line x1=\"" << cx << "\" y1=\"" << yq3 << "\" x2=\"" << cx << "\" y2=\"" << yhi
          << "\" stroke=\"black\"/>\n";
        f << "<line x1=\"" << cx - half * 0.6 << "\" y1=\"" << ylo << "\" x2=\"" << cx + half * 0.6
          << "\" y2=\"" << ylo << "\" stroke=\"black\"/>\n";
        f << "<line x1=\"" << cx - half * 0.6 << "\" y1=\"" << yhi << "\" x2=\"" << cx + half * 0.6
          << "\" y2=\"" << yhi << "\" stroke=\"black\"/>\n";
        f << "<rect x=\"" << cx - half << "\" y=\"" << yq3 << "\" width=\"" << 2 * half
          << "\" height=\"" << (yq1 - yq3) << "\" fill=\"#cfe3f2\" stroke=\"black\"/>\n";
        f << "<line x1=\"" << cx - half << "\" y1=\"" << ymed << "\" x2=\"" << cx + half
          << "\" y2=\"" << ymed << "\" stroke=\"#a01020\" stroke-width=\"2\"/>\n";
        for (double o : b.outliers)
            f << "<circle cx=\"" << cx << "\" cy=\"" << fr.py(o)
              << "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
        f << "<text x=\"" << cx << "\" y=\"" << fr.y1 + 18 << "\" text-anchor=\"middle\">"
          << labels[i] << "</text>\n";
        if (b.n_nonfinite > 0)
            f << "<text x=\"" << cx << "\" y=\"" << fr.y0 - 6 << "\" text-anchor=\"middle\">"
              << b.n_nonfinite << " off-scale</text>\n";
    }
    f << "</svg>\n";
    if (!f) throw InputError("write failed: " + path);
}

}  // namespace gddpc::plot
