#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "so3fm/rng.hpp"
#include "so3fm/so3.hpp"

namespace so3fm {

// Synthetic rotation-regression task: the input is the orthographic
// projection (first two rows of R) of a fixed keypoint template, flattened
// as (x_0, y_0, x_1, y_1, ...), plus isotropic Gaussian noise. The rotation
// is fully determined by the clean features, so the task is noise-limited
// rather than ambiguity-limited.
struct SyntheticSample {
    Eigen::VectorXd features;
    std::optional<Rotation> label;
};

// Fixed template: 8 cube corners plus 6 face centers, unit-ball scaled.
// Any prefix of size >= 4 is non-coplanar.
inline const std::vector<Vec3>& keypoint_template() {
    static const std::vector<Vec3> pts = [] {
        std::vector<Vec3> v;
        const double c = 1.0 / std::sqrt(3.0);
        for (int sx : {-1, 1})
            for (int sy : {-1, 1})
                for (int sz : {-1, 1}) v.emplace_back(sx * c, sy * c, sz * c);
        for (int axis = 0; axis < 3; ++axis)
            for (int sgn : {-1, 1}) {
                Vec3 p = Vec3::Zero();
                p[axis] = sgn;
                v.push_back(p);
            }
        return v;
    }();
    return pts;
}

inline Eigen::VectorXd project_keypoints(const Mat3& r, int k) {
    const auto& tpl = keypoint_template();
    Eigen::VectorXd f(2 * k);
    for (int i = 0; i < k; ++i) {
        f[2 * i] = r.row(0).dot(tpl[i]);
        f[2 * i + 1] = r.row(1).dot(tpl[i]);
    }
    return f;
}

inline std::vector<SyntheticSample> gen_synthetic_dataset(int n, int k, double sigma,
                                                          Rng& rng) {
    if (n < 1) throw std::invalid_argument("gen_synthetic_dataset: n must be >= 1");
    if (k < 4 || k > static_cast<int>(keypoint_template().size())) {
        throw std::invalid_argument("gen_synthetic_dataset: k out of template range");
    }
    std::vector<SyntheticSample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const Rotation r = sample_uniform_rotation(rng);
        Eigen::VectorXd f = project_keypoints(r.matrix(), k);
        for (int j = 0; j < f.size(); ++j) f[j] += sigma * rng.normal();
        out.push_back(SyntheticSample{std::move(f), r});
    }
    return out;
}

// Least-squares decoder: recovers the first two rows of R from noise-free
// features and completes the third by cross product, then projects onto
// SO(3). Used once as a build-time sanity oracle showing the task is
// solvable, and never by the learner.
inline Rotation decode_by_least_squares(const Eigen::VectorXd& features, int k) {
    const auto& tpl = keypoint_template();
    Mat3 gram = Mat3::Zero();
    Vec3 bx = Vec3::Zero(), by = Vec3::Zero();
    for (int i = 0; i < k; ++i) {
        gram += tpl[i] * tpl[i].transpose();
        bx += tpl[i] * features[2 * i];
        by += tpl[i] * features[2 * i + 1];
    }
    const Vec3 r1 = gram.ldlt().solve(bx);
    const Vec3 r2 = gram.ldlt().solve(by);
    Mat3 m;
    m.row(0) = r1.transpose();
    m.row(1) = r2.transpose();
    m.row(2) = r1.cross(r2).transpose();
    const ProperSvd svd = proper_svd(m);
    return Rotation::unchecked(svd.u.matrix() * svd.v.matrix().transpose());
}

}  // namespace so3fm
