#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>

#include "so3fm/rng.hpp"

namespace so3fm {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

inline constexpr double kRotationTol = 1e-9;

// 3x3 orthonormal matrix with det = +1. The constructor validates; use
// Rotation::unchecked only for matrices produced by the conversions below,
// which are orthonormal by construction.
class Rotation {
public:
    explicit Rotation(const Mat3& m) : m_(m) {
        if (!is_rotation(m)) {
            throw std::invalid_argument("Rotation: matrix is not in SO(3)");
        }
    }

    static Rotation identity() { return Rotation(Mat3::Identity(), Unchecked{}); }

    static Rotation unchecked(const Mat3& m) { return Rotation(m, Unchecked{}); }

    static bool is_rotation(const Mat3& m, double tol = kRotationTol) {
        return (m.transpose() * m - Mat3::Identity()).norm() <= tol &&
               std::abs(m.determinant() - 1.0) <= tol;
    }

    const Mat3& matrix() const { return m_; }

private:
    struct Unchecked {};
    Rotation(const Mat3& m, Unchecked) : m_(m) {}
    Mat3 m_;
};

// Unit 4-vector (w, x, y, z) canonicalized to the w >= 0 hemisphere. When
// |w| < 1e-9 the first nonzero of (x, y, z) is made positive instead, so
// that every rotation has exactly one representative.
class UnitQuaternion {
public:
    explicit UnitQuaternion(const Vec4& q) : q_(q) {
        const double n = q_.norm();
        if (std::abs(n - 1.0) > 1e-6) {
            throw std::invalid_argument("UnitQuaternion: input is not unit length");
        }
        q_ /= n;
        canonicalize();
    }

    double w() const { return q_[0]; }
    double x() const { return q_[1]; }
    double y() const { return q_[2]; }
    double z() const { return q_[3]; }
    const Vec4& vec() const { return q_; }

private:
    void canonicalize() {
        double lead = q_[0];
        if (std::abs(lead) < 1e-9) {
            lead = 0.0;
            for (int i = 1; i < 4; ++i) {
                if (q_[i] != 0.0) { lead = q_[i]; break; }
            }
        }
        if (lead < 0.0) q_ = -q_;
    }

    Vec4 q_;
};

// gamma: unit quaternion -> rotation matrix. gamma(q) == gamma(-q).
inline Mat3 quat_to_rot_matrix(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * w * z, 2 * x * z + 2 * w * y,
         2 * x * y + 2 * w * z, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * w * x,
         2 * x * z - 2 * w * y, 2 * y * z + 2 * w * x, 1 - 2 * x * x - 2 * y * y;
    return r;
}

inline Rotation quat_to_rot(const UnitQuaternion& q) {
    return Rotation::unchecked(quat_to_rot_matrix(q.vec()));
}

// gamma^{-1}: rotation -> unit quaternion in the canonical hemisphere.
// The direct formula with sqrt(1 + trace) is singular near trace = -1, so
// the branch keyed on the largest of (trace, R00, R11, R22) is used.
inline UnitQuaternion rot_to_quat(const Rotation& rot) {
    const Mat3& r = rot.matrix();
    const double tr = r.trace();
    Vec4 q;
    if (tr >= r(0, 0) && tr >= r(1, 1) && tr >= r(2, 2)) {
        const double s = std::sqrt(1.0 + tr) * 2.0;
        q << 0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s,
             (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
        const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
        q << (r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s,
             (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) >= r(2, 2)) {
        const double s = std::sqrt(1.0 - r(0, 0) + r(1, 1) - r(2, 2)) * 2.0;
        q << (r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s,
             (r(1, 2) + r(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 - r(0, 0) - r(1, 1) + r(2, 2)) * 2.0;
        q << (r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s,
             (r(1, 2) + r(2, 1)) / s, 0.25 * s;
    }
    q /= q.norm();
    return UnitQuaternion(q);
}

// SVD variant with U, V forced into SO(3); any sign defect is folded into
// the third singular value, so s1 >= s2 >= |s3| and s3 may be negative.
struct ProperSvd {
    Rotation u;
    Vec3 s;
    Rotation v;

    Mat3 reconstruct() const {
        return u.matrix() * s.asDiagonal() * v.matrix().transpose();
    }
};

inline ProperSvd proper_svd(const Mat3& a) {
    Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    Vec3 s = svd.singularValues();  // descending, nonnegative
    const double du = u.determinant();
    const double dv = v.determinant();
    u.col(2) *= du;
    v.col(2) *= dv;
    s[2] *= du * dv;
    return ProperSvd{Rotation::unchecked(u), s, Rotation::unchecked(v)};
}

// Relative rotation angle in degrees, in [0, 180].
inline double geodesic_angle_deg(const Rotation& r1, const Rotation& r2) {
    const double c = ((r1.matrix().transpose() * r2.matrix()).trace() - 1.0) / 2.0;
    return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
}

// Uniform direction on S^3: four independent normals, normalized.
inline Vec4 sample_unit_quaternion(Rng& rng) {
    for (;;) {
        Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        const double n = q.norm();
        if (n >= 1e-12) return q / n;
    }
}

// Haar-uniform rotation, via gamma of a uniform unit quaternion.
inline Rotation sample_uniform_rotation(Rng& rng) {
    return Rotation::unchecked(quat_to_rot_matrix(sample_unit_quaternion(rng)));
}

// The four reference rotations E_i = gamma(e_i), e_i the columns of I_4:
// E_4 = I_3 and E_1..E_3 are the pi-rotations about x, y, z
// (E_i = 2 e_i e_i^T - I_3). Each is diagonal and its own inverse.
inline const std::array<Mat3, 4>& quat_basis() {
    static const std::array<Mat3, 4> basis = {
        Vec3(1, -1, -1).asDiagonal().toDenseMatrix(),
        Vec3(-1, 1, -1).asDiagonal().toDenseMatrix(),
        Vec3(-1, -1, 1).asDiagonal().toDenseMatrix(),
        Mat3::Identity().eval(),
    };
    return basis;
}

}  // namespace so3fm
