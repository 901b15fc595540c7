#pragma once

#include <cmath>

#include "so3fm/quadrature.hpp"
#include "so3fm/so3.hpp"

namespace so3fm {

// Normalized Haar measure is the reference throughout, so F(0) = 1 and the
// uniform distribution has zero entropy.

// log F(S) for proper singular values S.
inline double log_norm_const(const Vec3& s, const QuadratureConfig& cfg = {}) {
    return log_norm_and_derivs(s, cfg).log_f;
}

// The three ratios (dF/ds_i)/F. Each is a moment of the distribution with
// magnitude at most 1, approaching 1 as the concentration grows.
inline Vec3 dlogf_ds(const Vec3& s, const QuadratureConfig& cfg = {}) {
    return log_norm_and_derivs(s, cfg).df_over_f;
}

// z-parameters of the equivalent antipodal distribution on S^3, trace-zero
// convention. Linear in S and invertible.
inline Vec4 z_from_s(const Vec3& s) {
    return Vec4(s[0] - s[1] - s[2], s[1] - s[0] - s[2], s[2] - s[0] - s[1],
                s[0] + s[1] + s[2]);
}

inline Vec3 s_from_z(const Vec4& z) {
    return Vec3(-0.5 * (z[1] + z[2]), -0.5 * (z[0] + z[2]), -0.5 * (z[0] + z[1]));
}

// Matrix Fisher distribution over SO(3), density proportional to
// exp(tr(A^T R)). Construction eagerly computes the proper SVD of A, the
// log-normalizer and the derivative ratios; every loss evaluation downstream
// reuses them. Immutable afterwards.
class FisherParams {
public:
    explicit FisherParams(const Mat3& a, const QuadratureConfig& cfg = {})
        : a_(a), svd_(proper_svd(a)), cfg_(cfg) {
        const LogNormResult r = log_norm_and_derivs(svd_.s, cfg);
        log_f_ = r.log_f;
        d_ = r.df_over_f;
    }

    const Mat3& a() const { return a_; }
    const ProperSvd& svd() const { return svd_; }
    const QuadratureConfig& quadrature() const { return cfg_; }
    double log_norm() const { return log_f_; }
    const Vec3& df_over_f() const { return d_; }

    // U diag(1, 1, det(UV)) V^T; with the proper SVD the determinant factor
    // is already +1, so the mode is U V^T.
    Rotation mode() const {
        return Rotation::unchecked(svd_.u.matrix() * svd_.v.matrix().transpose());
    }

    double log_pdf(const Rotation& r) const {
        return (a_.transpose() * r.matrix()).trace() - log_f_;
    }

    // E[R]; entries lie in [-1, 1] and the matrix is generally not a
    // rotation. Also equals the gradient of log F with respect to A.
    Mat3 expected_rotation() const {
        return svd_.u.matrix() * d_.asDiagonal() * svd_.v.matrix().transpose();
    }

    Mat3 grad_log_norm_wrt_a() const { return expected_rotation(); }

    // H(f) = log F - sum_i z_i (dF/dz_i)/F, computed through the z-side
    // parameters of the equivalent S^3 distribution. The four ratios
    // (dF/dz_i)/F are the second moments E[(m_i^T q)^2]; in the SVD frame
    // they reduce to (1 + tr(E_i^T diag(d))) / 4.
    double entropy() const {
        const Vec4 z = z_from_s(svd_.s);
        return log_f_ - z.dot(z_moment_ratios());
    }

    // (1/F) dF/dz_i for i = 1..4; nonnegative, sums to 1.
    Vec4 z_moment_ratios() const {
        const auto& basis = quat_basis();
        Vec4 w;
        for (int i = 0; i < 4; ++i) {
            w[i] = 0.25 * (1.0 + basis[i].diagonal().dot(d_));
        }
        return w;
    }

private:
    Mat3 a_;
    ProperSvd svd_;
    QuadratureConfig cfg_;
    double log_f_;
    Vec3 d_;
};

}  // namespace so3fm
