#pragma once

#include <cmath>
#include <stdexcept>

#include "so3fm/fisher.hpp"
#include "so3fm/so3.hpp"

namespace so3fm {

inline const double kLog2Pi2 = std::log(2.0 * M_PI * M_PI);

// Antipodally symmetric distribution on S^3 over unit quaternions, density
// proportional to exp(q^T M Z M^T q) with respect to Lebesgue measure on the
// sphere. Z is stored in the trace-zero convention, which makes the map to
// the matrix Fisher singular values linear and invertible; the diag(0, z1,
// z2, z3) convention used elsewhere differs by a constant diagonal shift
// that the normalizer absorbs.
//
// All normalization constants route through the Fisher-side Bessel
// quadrature: F_B = 2 pi^2 F_F for the equivalent Fisher parameters, and
// the z-derivatives are second moments recoverable from the Fisher moment
// matrix. No 4-dimensional quadrature anywhere.
class BinghamParams {
public:
    BinghamParams(const Mat4& m, const Vec4& z, const QuadratureConfig& cfg = {})
        : m_(m), z_(z), fisher_(equivalent_a(m, z), cfg) {
        log_f_b_ = kLog2Pi2 + fisher_.log_norm();
        const Mat3 er = fisher_.expected_rotation();
        for (int i = 0; i < 4; ++i) {
            const Mat3 gmi = quat_to_rot_matrix(m_.col(i));
            w_[i] = 0.25 * (1.0 + (gmi.transpose() * er).trace());
        }
    }

    const Mat4& m() const { return m_; }
    const Vec4& z() const { return z_; }
    double log_norm() const { return log_f_b_; }

    // (1/F_B) dF_B/dz_i = E[(m_i^T q)^2]; nonnegative, sums to 1.
    const Vec4& z_moment_ratios() const { return w_; }

    // Column holding the mode: the one with the largest z entry.
    int mode_column() const {
        int best = 0;
        for (int i = 1; i < 4; ++i) {
            if (z_[i] > z_[best]) best = i;
        }
        return best;
    }

    UnitQuaternion mode() const { return UnitQuaternion(m_.col(mode_column())); }

    const FisherParams& equivalent_fisher() const { return fisher_; }

private:
    // A = (1/4) sum_i z_i gamma(m_i). Exact for any orthonormal M and
    // trace-zero z: q^T M Z M^T q = tr(A^T gamma(q)) for all unit q.
    static Mat3 equivalent_a(const Mat4& m, const Vec4& z) {
        if ((m.transpose() * m - Mat4::Identity()).norm() > 1e-9) {
            throw std::invalid_argument(
                "BinghamParams: M does not have orthonormal columns");
        }
        if (std::abs(z.sum()) > 1e-9 * std::max(1.0, z.cwiseAbs().maxCoeff())) {
            throw std::invalid_argument("BinghamParams: Z must have zero trace");
        }
        Mat3 a = Mat3::Zero();
        for (int i = 0; i < 4; ++i) {
            a += z[i] * quat_to_rot_matrix(m.col(i));
        }
        return 0.25 * a;
    }

    Mat4 m_;
    Vec4 z_;
    FisherParams fisher_;
    double log_f_b_ = 0.0;
    Vec4 w_ = Vec4::Zero();
};

// Shift an arbitrary 4-vector of z entries into the trace-zero convention.
inline Vec4 trace_zero_z(const Vec4& z_any) {
    return z_any - Vec4::Constant(z_any.mean());
}

// Exact reparameterization: m_i = gamma^{-1}(U E_i V^T) and z from the
// linear map on the singular values. The resulting M is put in SO(4) by
// flipping the most anti-modal column if needed (column signs do not affect
// the density).
inline BinghamParams fisher_to_bingham(const FisherParams& f) {
    const auto& basis = quat_basis();
    const Mat3& u = f.svd().u.matrix();
    const Mat3& v = f.svd().v.matrix();
    Mat4 m;
    for (int i = 0; i < 4; ++i) {
        const Rotation rei = Rotation::unchecked(u * basis[i] * v.transpose());
        m.col(i) = rot_to_quat(rei).vec();
    }
    const Vec4 z = z_from_s(f.svd().s);
    if (m.determinant() < 0.0) {
        int anti = 0;
        for (int i = 1; i < 4; ++i) {
            if (z[i] < z[anti]) anti = i;
        }
        m.col(anti) *= -1.0;
    }
    return BinghamParams(m, z, f.quadrature());
}

// Inverse reparameterization; the equivalent Fisher parameters are fixed at
// construction, so this is a lookup. s_i follow the inverse linear map,
// e.g. s1 = -(z2 + z3)/2 when (M, Z) are in the canonical sorted
// arrangement.
inline FisherParams bingham_to_fisher(const BinghamParams& b) {
    return b.equivalent_fisher();
}

// q^T M Z M^T q - log F_B. Antipodally symmetric.
inline double bingham_log_pdf(const BinghamParams& b, const UnitQuaternion& q) {
    const Vec4 proj = b.m().transpose() * q.vec();
    return b.z().dot(proj.cwiseProduct(proj)) - b.log_norm();
}

// H(f) = log F - sum_i z_i (dF/dz_i)/F. Equals the Fisher-side entropy plus
// log(2 pi^2), the Lebesgue/Haar scaling between the two supports.
inline double bingham_entropy(const BinghamParams& b) {
    return b.log_norm() - b.z().dot(b.z_moment_ratios());
}

// Cross entropy H(f, g) = -E_f[log g] between two distributions on S^3:
//   log F_g - sum_i z_gi (b_i^2 + sum_j (a_ji^2 - b_i^2) (1/F_f) dF_f/dz_fj)
// with a_ji = m_fj . m_gi and b_i = mu_f . m_gi, mu_f the modal column of f.
// The b_i terms cancel analytically because the moment ratios sum to one;
// they are kept for fidelity to the closed form and cost nothing.
inline double bingham_cross_entropy(const BinghamParams& f, const BinghamParams& g) {
    const Vec4 mu = f.m().col(f.mode_column());
    const Vec4& wf = f.z_moment_ratios();
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Vec4 gi = g.m().col(i);
        const double bi = mu.dot(gi);
        double inner = bi * bi;
        for (int j = 0; j < 4; ++j) {
            const double aji = f.m().col(j).dot(gi);
            inner += (aji * aji - bi * bi) * wf[j];
        }
        acc += g.z()[i] * inner;
    }
    return g.log_norm() - acc;
}

// Raw network head for a Bingham predictor: o1 seeds the orthogonal matrix,
// o2 the concentrations.
struct BirdalOutput {
    Vec4 o1 = Vec4::Zero();
    Vec3 o2 = Vec3::Zero();
};

namespace detail {
inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}
}  // namespace detail

// Orthogonal M from the normalized o1 via the Birdal matrix, and
// Z_main = diag(0, z1, z2, z3) with 0 >= z1 >= z2 >= z3 accumulated through
// softplus; stored internally in the trace-zero convention.
inline BinghamParams birdal_construct(const BirdalOutput& o,
                                      const QuadratureConfig& cfg = {}) {
    const double n = o.o1.norm();
    if (n < 1e-12) {
        throw std::invalid_argument("birdal_construct: o1 is numerically zero");
    }
    const Vec4 q = o.o1 / n;
    Mat4 m;
    m << q[0], -q[1], -q[2],  q[3],
         q[1],  q[0],  q[3],  q[2],
         q[2], -q[3],  q[0], -q[1],
         q[3],  q[2], -q[1], -q[0];
    Vec4 z_main;
    z_main[0] = 0.0;
    z_main[1] = -detail::softplus(o.o2[0]);
    z_main[2] = z_main[1] - detail::softplus(o.o2[1]);
    z_main[3] = z_main[2] - detail::softplus(o.o2[2]);
    return BinghamParams(m, trace_zero_z(z_main), cfg);
}

}  // namespace so3fm
