#pragma once

#include "gddpc/hankel.hpp"
#include "gddpc/types.hpp"

#include <limits>
#include <string>

namespace gddpc {

// ---------------------------------------------------------------------------
// LQ decomposition of the stacked [Zp; Uf; Yf]
//
//   [Zp]   [L11  0    0 ] [Q1]
//   [Uf] = [L21  L22  0 ] [Q2]
//   [Yf]   [L31  L32  L33] [Q3]
//
// computed as the transpose of an (unpivoted) Householder QR of M^T.
// Diagonals of L are forced positive by flipping Q rows; the factorization
// is otherwise the textbook one.
// ---------------------------------------------------------------------------

struct LqFactors {
    Mat L11, L21, L22, L31, L32, L33;
    Mat Q1, Q2, Q3;  // orthonormal rows, each rX x N
    Index rho = 0, T = 0, N = 0, m = 0, p = 0;

    double cond_L11 = 0, cond_L22 = 0, cond_L33 = 0;
    double smin = 0, smax = 0;   // extreme singular values of the stacked matrix
    bool rank_deficient = false; // smin <= tol * smax (noise-free data: L33 ~ 0)
    bool thin_data = false;      // carried over from the bundle

    Index r1() const { return (m + p) * rho; }
    Index r2() const { return m * T; }
    Index r3() const { return p * T; }

    Mat L() const {
        const Index n1 = r1(), n2 = r2(), n3 = r3();
        Mat l = Mat::Zero(n1 + n2 + n3, n1 + n2 + n3);
        l.topLeftCorner(n1, n1) = L11;
        l.block(n1, 0, n2, n1) = L21;
        l.block(n1, n1, n2, n2) = L22;
        l.block(n1 + n2, 0, n3, n1) = L31;
        l.block(n1 + n2, n1, n3, n2) = L32;
        l.bottomRightCorner(n3, n3) = L33;
        return l;
    }
    Mat Q() const {
        Mat q(r1() + r2() + r3(), N);
        q << Q1, Q2, Q3;
        return q;
    }
};

namespace detail {
inline double cond_ratio(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    const Vec sv = svd.singularValues();
    const double lo = sv[sv.size() - 1];
    return lo > 0.0 ? sv[0] / lo : std::numeric_limits<double>::infinity();
}
}  // namespace detail

inline LqFactors lq_decompose(const HankelBundle& b, double rank_tol = 1e-10) {
    const Index n1 = (b.m + b.p) * b.rho, n2 = b.m * b.T, n3 = b.p * b.T;
    const Index rows = n1 + n2 + n3;
    require(b.N >= rows, "lq_decompose: need N >= stacked row count (" + std::to_string(rows) +
                             "), got N = " + std::to_string(b.N));
    const Mat M = b.stacked();

    Eigen::HouseholderQR<Mat> qr(M.transpose());
    Mat L = Mat(qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>()).transpose();
    Mat Qrows = (qr.householderQ() * Mat::Identity(b.N, rows)).transpose();
    for (Index i = 0; i < rows; ++i) {
        if (L(i, i) < 0.0) {
            L.col(i) = -L.col(i);
            Qrows.row(i) = -Qrows.row(i);
        }
    }

    LqFactors f;
    f.rho = b.rho;
    f.T = b.T;
    f.N = b.N;
    f.m = b.m;
    f.p = b.p;
    f.thin_data = b.thin_data;
    f.L11 = L.topLeftCorner(n1, n1);
    f.L21 = L.block(n1, 0, n2, n1);
    f.L22 = L.block(n1, n1, n2, n2);
    f.L31 = L.block(n1 + n2, 0, n3, n1);
    f.L32 = L.block(n1 + n2, n1, n3, n2);
    f.L33 = L.bottomRightCorner(n3, n3);
    f.Q1 = Qrows.topRows(n1);
    f.Q2 = Qrows.middleRows(n1, n2);
    f.Q3 = Qrows.bottomRows(n3);

    // Singular values of M equal those of its triangular factor; L is tiny
    // next to M, so rank diagnostics come from L.
    Eigen::JacobiSVD<Mat> svd(L);
    const Vec sv = svd.singularValues();
    f.smax = sv[0];
    f.smin = sv[sv.size() - 1];
    f.rank_deficient = f.smin <= rank_tol * f.smax;
    f.cond_L11 = detail::cond_ratio(f.L11);
    f.cond_L22 = detail::cond_ratio(f.L22);
    f.cond_L33 = detail::cond_ratio(f.L33);
    return f;
}

}  // namespace gddpc
