#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "so3fm/bingham.hpp"

namespace so3fm {

// Network head mapping a raw 7-vector (o1: 4, o2: 3) to Bingham parameters
// via the Birdal construction, with an analytic backward pass through the
// equivalent Fisher parameter A. Losses for this head are evaluated on the
// equivalent Fisher distribution; their gradients arrive as dLoss/dA.
namespace detail {

// Directional derivative of gamma at unit quaternion q along dq.
inline Mat3 dgamma(const Vec4& q, const Vec4& dq) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    const double dw = dq[0], dx = dq[1], dy = dq[2], dz = dq[3];
    Mat3 d;
    d(0, 0) = -4 * y * dy - 4 * z * dz;
    d(0, 1) = 2 * (dx * y + x * dy) - 2 * (dw * z + w * dz);
    d(0, 2) = 2 * (dx * z + x * dz) + 2 * (dw * y + w * dy);
    d(1, 0) = 2 * (dx * y + x * dy) + 2 * (dw * z + w * dz);
    d(1, 1) = -4 * x * dx - 4 * z * dz;
    d(1, 2) = 2 * (dy * z + y * dz) - 2 * (dw * x + w * dx);
    d(2, 0) = 2 * (dx * z + x * dz) - 2 * (dw * y + w * dy);
    d(2, 1) = 2 * (dy * z + y * dz) + 2 * (dw * x + w * dx);
    d(2, 2) = -4 * x * dx - 4 * y * dy;
    return d;
}

// Columns of the Birdal matrix as linear maps of the normalized o1.
inline Vec4 birdal_column(const Vec4& u, int i) {
    switch (i) {
        case 0: return Vec4(u[0], u[1], u[2], u[3]);
        case 1: return Vec4(-u[1], u[0], -u[3], u[2]);
        case 2: return Vec4(-u[2], u[3], u[0], -u[1]);
        default: return Vec4(u[3], u[2], -u[1], -u[0]);
    }
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

struct BinghamHead {
    static BinghamParams forward(const Eigen::VectorXd& raw,
                                 const QuadratureConfig& cfg = {}) {
        if (raw.size() != 7) {
            throw std::invalid_argument("BinghamHead: expected 7 raw outputs");
        }
        BirdalOutput o;
        o.o1 = raw.head<4>();
        o.o2 = raw.tail<3>();
        return birdal_construct(o, cfg);
    }

    // d(loss)/d(raw) given d(loss)/d(A) for the equivalent Fisher parameter
    // A(raw) = (1/4) sum_i z_i(o2) gamma(m_i(o1 / |o1|)). The z-convention
    // shift drops out because sum_i gamma(m_i) vanishes identically for
    // orthonormal columns.
    static Eigen::VectorXd backward(const Eigen::VectorXd& raw, const Mat3& grad_a) {
        if (raw.size() != 7) {
            throw std::invalid_argument("BinghamHead: expected 7 raw outputs");
        }
        const Vec4 o1 = raw.head<4>();
        const Vec3 o2 = raw.tail<3>();
        const double n = o1.norm();
        if (n < 1e-12) {
            throw std::invalid_argument("BinghamHead: o1 is numerically zero");
        }
        const Vec4 u = o1 / n;

        Vec4 z;  // cumulative-softplus concentrations, main convention
        z[0] = 0.0;
        z[1] = -detail::softplus(o2[0]);
        z[2] = z[1] - detail::softplus(o2[1]);
        z[3] = z[2] - detail::softplus(o2[2]);

        std::array<Vec4, 4> m;
        std::array<Mat3, 4> gm;
        for (int i = 0; i < 4; ++i) {
            m[i] = detail::birdal_column(u, i);
            gm[i] = quat_to_rot_matrix(m[i]);
        }

        Eigen::VectorXd grad(7);
        // o1 path: du/do1_b = (I - u u^T) e_b / |o1|.
        const Mat4 proj = (Mat4::Identity() - u * u.transpose()) / n;
        for (int b = 0; b < 4; ++b) {
            const Vec4 du = proj.col(b);
            Mat3 da = Mat3::Zero();
            for (int i = 0; i < 4; ++i) {
                da += z[i] * detail::dgamma(m[i], detail::birdal_column(du, i));
            }
            grad[b] = 0.25 * (grad_a.cwiseProduct(da)).sum();
        }
        // o2 path: z_i for i >= c+1 all contain -softplus(o2_c).
        for (int c = 0; c < 3; ++c) {
            const double dphi = detail::logistic(o2[c]);
            Mat3 da = Mat3::Zero();
            for (int i = c + 1; i < 4; ++i) da += -dphi * gm[i];
            grad[4 + c] = 0.25 * (grad_a.cwiseProduct(da)).sum();
        }
        return grad;
    }
};

}  // namespace so3fm
