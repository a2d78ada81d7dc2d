#pragma once

#include "gddpc/lti.hpp"
#include "gddpc/types.hpp"

#include <cmath>
#include <string>

namespace gddpc {

// ---------------------------------------------------------------------------
// Block Hankel matrices over past/future windows
// ---------------------------------------------------------------------------

/// Block Hankel matrix of the signal w (s rows, time over columns):
/// s*(t1-t0+1) x N, block entry (i,j) = w(t0+i+j-2)/sqrt(N) with 1-based
/// block indices. Data indexing is 0-based, so column j (0-based) stacks
/// w(t0+j) .. w(t1+j).
inline Mat hankel(const Mat& w, Index t0, Index t1, Index N) {
    require(t1 >= t0 && t0 >= 0, "hankel: need 0 <= t0 <= t1");
    require(N >= 1, "hankel: need N >= 1");
    const Index need = t1 + N;  // last touched sample is w(t1 + N - 1)
    require(w.cols() >= need,
            "hankel: signal too short, need length >= " + std::to_string(need) + ", got " +
                std::to_string(w.cols()));
    const Index s = w.rows();
    const Index rows = t1 - t0 + 1;
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    Mat out(s * rows, N);
    for (Index i = 0; i < rows; ++i)
        out.middleRows(i * s, s) = scale * w.middleCols(t0 + i, N);
    return out;
}

/// Z_P, U_F, Y_F for past horizon rho and future horizon T.
/// N = N_data - T - rho + 1 columns; all blocks carry the 1/sqrt(N) scale.
struct HankelBundle {
    Mat Zp;  // (m+p)*rho x N
    Mat Uf;  // m*T x N
    Mat Yf;  // p*T x N
    Index rho = 0, T = 0, N = 0, m = 0, p = 0;
    // Set when N is below 5x the stacked row count; full row rank is then
    // fragile and downstream rank flags deserve attention.
    bool thin_data = false;

    Index rows() const { return Zp.rows() + Uf.rows() + Yf.rows(); }
    Mat stacked() const {
        Mat s(rows(), N);
        s << Zp, Uf, Yf;
        return s;
    }
};

inline HankelBundle build_bundle(const DataSet& data, Index rho, Index T) {
    require(rho >= 1 && T >= 1, "build_bundle: rho and T must be >= 1");
    const Index m = data.u.rows(), p = data.y.rows();
    const Index N = data.N_data() - T - rho + 1;
    require(N >= 1, "build_bundle: N_data too short, N = N_data - T - rho + 1 = " + std::to_string(N));

    // z(t) = [u(t); y(t)] interleaved per time step
    Mat z(m + p, data.N_data());
    z.topRows(m) = data.u;
    z.bottomRows(p) = data.y;

    HankelBundle b;
    b.rho = rho;
    b.T = T;
    b.N = N;
    b.m = m;
    b.p = p;
    b.Zp = hankel(z, 0, rho - 1, N);
    b.Uf = hankel(data.u, rho, rho + T - 1, N);
    b.Yf = hankel(data.y, rho, rho + T - 1, N);
    b.thin_data = N < 5 * b.rows();
    return b;
}

}  // namespace gddpc
