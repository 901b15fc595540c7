#include <catch2/catch_amalgamated.hpp>

#include "so3fm/so3.hpp"

using namespace so3fm;

namespace {
Mat3 rot_z(double deg) {
    const double r = deg * M_PI / 180.0;
    Mat3 m;
    m << std::cos(r), -std::sin(r), 0, std::sin(r), std::cos(r), 0, 0, 0, 1;
    return m;
}
}  // namespace

TEST_CASE("quat_to_rot basic values") {
    CHECK(quat_to_rot(UnitQuaternion(Vec4(1, 0, 0, 0))).matrix().isApprox(Mat3::Identity(), 1e-15));
    const Mat3 rz = quat_to_rot(UnitQuaternion(Vec4(0, 0, 0, 1))).matrix();
    CHECK(rz.isApprox(Vec3(-1, -1, 1).asDiagonal().toDenseMatrix(), 1e-15));
}

TEST_CASE("quat_to_rot produces rotations for random unit q") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const Vec4 q = sample_unit_quaternion(rng);
        const Mat3 r = quat_to_rot_matrix(q);
        CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
        CHECK(r.determinant() == Catch::Approx(1.0).margin(1e-12));
        // gamma(q) == gamma(-q) exactly
        CHECK((r - quat_to_rot_matrix(-q)).norm() == 0.0);
    }
}

TEST_CASE("quaternion normalization tolerance") {
    Vec4 q(1 + 5e-7, 0, 0, 0);
    CHECK_NOTHROW(UnitQuaternion(q));
    Vec4 bad(1.1, 0, 0, 0);
    CHECK_THROWS_AS(UnitQuaternion(bad), std::invalid_argument);
}

TEST_CASE("rot_to_quat identity and trace -1 branch") {
    const UnitQuaternion qi = rot_to_quat(Rotation::identity());
    CHECK((qi.vec() - Vec4(1, 0, 0, 0)).norm() < 1e-15);
    // pi about x: trace = -1, the naive formula divides by zero here
    const Mat3 px = Vec3(1, -1, -1).asDiagonal();
    const UnitQuaternion qx = rot_to_quat(Rotation(px));
    CHECK((qx.vec() - Vec4(0, 1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("rot_to_quat round trip, canonical hemisphere") {
    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        Vec4 q = sample_unit_quaternion(rng);
        if (std::abs(q[0]) <= 1e-3) continue;
        if (q[0] < 0) q = -q;
        const Rotation r = Rotation::unchecked(quat_to_rot_matrix(q));
        const UnitQuaternion back = rot_to_quat(r);
        CHECK((back.vec() - q).norm() < 1e-9);
        CHECK(back.w() >= 0.0);
    }
}

TEST_CASE("round trip through matrices") {
    Rng rng(13);
    for (int i = 0; i < 500; ++i) {
        const Rotation r = sample_uniform_rotation(rng);
        const Rotation back = quat_to_rot(rot_to_quat(r));
        CHECK((back.matrix() - r.matrix()).norm() < 1e-9);
    }
}

TEST_CASE("rot_to_quat rejects non-rotations") {
    Mat3 bad = Mat3::Identity();
    bad(0, 0) = 1.5;
    CHECK_THROWS_AS(Rotation(bad), std::invalid_argument);
    Mat3 reflect = Vec3(1, 1, -1).asDiagonal();  // det = -1
    CHECK_THROWS_AS(Rotation(reflect), std::invalid_argument);
}

TEST_CASE("proper_svd identity and reflection") {
    const ProperSvd si = proper_svd(Mat3::Identity());
    CHECK((si.s - Vec3(1, 1, 1)).norm() < 1e-12);
    CHECK(si.reconstruct().isApprox(Mat3::Identity(), 1e-12));

    const Mat3 refl = Vec3(1, 1, -1).asDiagonal();
    const ProperSvd sr = proper_svd(refl);
    CHECK(sr.s[0] == Catch::Approx(1.0));
    CHECK(sr.s[1] == Catch::Approx(1.0));
    CHECK(sr.s[2] == Catch::Approx(-1.0));
    CHECK((sr.u.matrix() * sr.v.matrix().transpose()).isApprox(Mat3::Identity(), 1e-9));
}

TEST_CASE("proper_svd zero matrix") {
    const ProperSvd s0 = proper_svd(Mat3::Zero());
    CHECK(s0.s.norm() == 0.0);
    CHECK(Rotation::is_rotation(s0.u.matrix()));
    CHECK(Rotation::is_rotation(s0.v.matrix()));
    CHECK(s0.reconstruct().norm() < 1e-12);
}

TEST_CASE("proper_svd reconstruction and ordering on random matrices") {
    Rng rng(14);
    for (int i = 0; i < 300; ++i) {
        Mat3 a;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) a(r, c) = 3.0 * rng.normal();
        const ProperSvd svd = proper_svd(a);
        CHECK((svd.reconstruct() - a).norm() < 1e-9 * std::max(1.0, a.norm()));
        CHECK(std::abs(svd.u.matrix().determinant() - 1.0) < 1e-9);
        CHECK(std::abs(svd.v.matrix().determinant() - 1.0) < 1e-9);
        CHECK(svd.s[0] >= svd.s[1]);
        CHECK(svd.s[1] >= std::abs(svd.s[2]));
    }
}

TEST_CASE("geodesic angle values and properties") {
    const Rotation i = Rotation::identity();
    CHECK(geodesic_angle_deg(i, i) == 0.0);
    CHECK(geodesic_angle_deg(i, Rotation(Vec3(-1, -1, 1).asDiagonal())) ==
          Catch::Approx(180.0));
    CHECK(geodesic_angle_deg(i, Rotation(rot_z(30))) == Catch::Approx(30.0).margin(1e-9));

    Rng rng(15);
    for (int t = 0; t < 100; ++t) {
        const Rotation r1 = sample_uniform_rotation(rng);
        const Rotation r2 = sample_uniform_rotation(rng);
        const Rotation g = sample_uniform_rotation(rng);
        const double a12 = geodesic_angle_deg(r1, r2);
        CHECK(a12 == Catch::Approx(geodesic_angle_deg(r2, r1)).margin(1e-12));
        CHECK(a12 >= 0.0);
        CHECK(a12 <= 180.0);
        // bi-invariance
        const Rotation gr1 = Rotation::unchecked(g.matrix() * r1.matrix());
        const Rotation gr2 = Rotation::unchecked(g.matrix() * r2.matrix());
        CHECK(geodesic_angle_deg(gr1, gr2) == Catch::Approx(a12).margin(1e-9));
    }
}

TEST_CASE("sampler produces valid rotations with Haar moments") {
    Rng rng(16);
    const int n = 100000;
    double str = 0, str2 = 0;
    Mat3 sum = Mat3::Zero();
    for (int i = 0; i < n; ++i) {
        const Rotation r = sample_uniform_rotation(rng);
        if (i < 100) CHECK(Rotation::is_rotation(r.matrix()));
        str += r.matrix().trace();
        str2 += r.matrix().trace() * r.matrix().trace();
        sum += r.matrix();
    }
    const double mean_tr = str / n;
    const double se_tr = std::sqrt((str2 / n - mean_tr * mean_tr) / n);
    CHECK(std::abs(mean_tr) <= 3 * se_tr);
    // every entry has variance 1/3 under Haar
    const double se_entry = std::sqrt(1.0 / 3.0 / n);
    CHECK((sum / n).cwiseAbs().maxCoeff() <= 4 * se_entry);
}

TEST_CASE("quat basis constants") {
    const auto& basis = quat_basis();
    CHECK(basis[3].isApprox(Mat3::Identity(), 1e-15));
    // component pairing: E1 -> x, E2 -> y, E3 -> z, E4 -> w
    for (int i = 0; i < 4; ++i) {
        CHECK(Rotation::is_rotation(basis[i]));
        CHECK((basis[i] * basis[i]).isApprox(Mat3::Identity(), 1e-15));  // own inverse
        const Vec4 q = rot_to_quat(Rotation(basis[i])).vec();
        Vec4 expect = Vec4::Zero();
        expect[(i + 1) % 4] = 1.0;
        CHECK(std::abs(std::abs(q.dot(expect)) - 1.0) < 1e-12);
    }
    for (int i = 0; i < 3; ++i) {
        Vec3 e = Vec3::Zero();
        e[i] = 1.0;
        const Mat3 expect = 2.0 * e * e.transpose() - Mat3::Identity();
        CHECK(basis[i].isApprox(expect, 1e-15));
    }
}
