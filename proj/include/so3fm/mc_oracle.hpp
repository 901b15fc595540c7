#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "so3fm/rng.hpp"
#include "so3fm/so3.hpp"

namespace so3fm {

// Brute-force estimators over Haar-uniform rotation samples. These are the
// acceptance oracles: every analytic quantity in the library is admitted
// only against them. They are deliberately independent of the quadrature
// path — the only shared code is the rotation sampler and gamma.
//
// Uniform sampling keeps the estimators unbiased but their variance grows
// like exp(2 s_max), so concentrations are capped at s_i <= 5; sharper
// parameters are checked by quadrature self-refinement instead.

inline constexpr double kMcMaxSingular = 5.0 + 1e-9;
inline constexpr std::int64_t kMcMinSamples = 10000;

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
};

namespace detail {
inline void check_mc_preconditions(const Mat3& a, std::int64_t n) {
    if (n < kMcMinSamples) {
        throw std::invalid_argument("mc oracle: need at least 1e4 samples");
    }
    const Vec3 s = proper_svd(a).s;
    if (s.cwiseAbs().maxCoeff() > kMcMaxSingular) {
        throw std::domain_error(
            "mc oracle: singular values above 5 make the uniform-sampling "
            "variance unusable; use quadrature self-refinement instead");
    }
}
}  // namespace detail

// E[exp(tr(A^T R))] over Haar-uniform R; this is F(A).
inline McEstimate mc_norm_const(const Mat3& a, std::int64_t n, std::uint64_t seed) {
    detail::check_mc_preconditions(a, n);
    Rng rng(seed);
    double sum = 0.0, sum2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const Mat3 r = quat_to_rot_matrix(sample_unit_quaternion(rng));
        const double v = std::exp((a.transpose() * r).trace());
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
    return McEstimate{mean, std::sqrt(var / static_cast<double>(n)),
                      n};
}

// Shared-sample estimator of the cross entropy H(f, g) = -E_f[log g]:
//   H = log Fg - mean(exp(t_f) t_g) / Ff
// with plug-in normalizers from the same stream. The standard error comes
// from the delta method over the three sample means (Ff, Fg, m).
inline McEstimate mc_cross_entropy(const Mat3& a_f, const Mat3& a_g,
                                   std::int64_t n, std::uint64_t seed) {
    detail::check_mc_preconditions(a_f, n);
    detail::check_mc_preconditions(a_g, n);
    Rng rng(seed);
    // Raw moment sums; |t| <= 15 at the concentration cap, so squares stay
    // comfortably inside double range.
    double sf = 0, sg = 0, sm = 0;
    double sff = 0, sgg = 0, smm = 0, sfg = 0, sfm = 0, sgm = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const Mat3 r = quat_to_rot_matrix(sample_unit_quaternion(rng));
        const double tf = (a_f.transpose() * r).trace();
        const double tg = (a_g.transpose() * r).trace();
        const double ef = std::exp(tf);
        const double eg = std::exp(tg);
        const double em = ef * tg;
        sf += ef; sg += eg; sm += em;
        sff += ef * ef; sgg += eg * eg; smm += em * em;
        sfg += ef * eg; sfm += ef * em; sgm += eg * em;
    }
    const double dn = static_cast<double>(n);
    const double ff = sf / dn, fg = sg / dn, m = sm / dn;
    const double h = std::log(fg) - m / ff;
    // Covariance of the sample means.
    const double c_ff = (sff / dn - ff * ff) / dn;
    const double c_gg = (sgg / dn - fg * fg) / dn;
    const double c_mm = (smm / dn - m * m) / dn;
    const double c_fg = (sfg / dn - ff * fg) / dn;
    const double c_fm = (sfm / dn - ff * m) / dn;
    const double c_gm = (sgm / dn - fg * m) / dn;
    const double gf = m / (ff * ff);   // dH/dFf
    const double gg = 1.0 / fg;        // dH/dFg
    const double gm = -1.0 / ff;       // dH/dm
    const double var = gf * gf * c_ff + gg * gg * c_gg + gm * gm * c_mm +
                       2.0 * (gf * gg * c_fg + gf * gm * c_fm + gg * gm * c_gm);
    return McEstimate{h, std::sqrt(std::max(0.0, var)), n};
}

// H(f) = -E_f[log f], the f = g case of the cross entropy.
inline McEstimate mc_entropy(const Mat3& a, std::int64_t n, std::uint64_t seed) {
    return mc_cross_entropy(a, a, n, seed);
}

// Entrywise estimate of E[R] = E_Haar[R exp(tr(A^T R))] / F with per-entry
// delta-method standard errors.
struct McMatrixEstimate {
    Mat3 mean = Mat3::Zero();
    Mat3 std_error = Mat3::Zero();
    std::int64_t n_samples = 0;
};

inline McMatrixEstimate mc_expected_rotation(const Mat3& a, std::int64_t n,
                                             std::uint64_t seed) {
    detail::check_mc_preconditions(a, n);
    Rng rng(seed);
    double sf = 0, sff = 0;
    Mat3 sn = Mat3::Zero(), snn = Mat3::Zero(), snf = Mat3::Zero();
    for (std::int64_t i = 0; i < n; ++i) {
        const Mat3 r = quat_to_rot_matrix(sample_unit_quaternion(rng));
        const double e = std::exp((a.transpose() * r).trace());
        const Mat3 re = r * e;
        sf += e;
        sff += e * e;
        sn += re;
        snn += re.cwiseProduct(re);
        snf += re * e;
    }
    const double dn = static_cast<double>(n);
    const double f = sf / dn;
    const double c_ff = (sff / dn - f * f) / dn;
    McMatrixEstimate out;
    out.n_samples = n;
    for (int r0 = 0; r0 < 3; ++r0) {
        for (int c0 = 0; c0 < 3; ++c0) {
            const double num = sn(r0, c0) / dn;
            const double c_nn = (snn(r0, c0) / dn - num * num) / dn;
            const double c_nf = (snf(r0, c0) / dn - num * f) / dn;
            out.mean(r0, c0) = num / f;
            const double gn = 1.0 / f;
            const double gf = -num / (f * f);
            const double var = gn * gn * c_nn + gf * gf * c_ff + 2.0 * gn * gf * c_nf;
            out.std_error(r0, c0) = std::sqrt(std::max(0.0, var));
        }
    }
    return out;
}

// Central finite differences of a scalar function of a 3x3 matrix.
inline Mat3 fd_gradient(const std::function<double(const Mat3&)>& fn, const Mat3& a,
                        double h = 1e-4) {
    Mat3 g;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Mat3 ap = a, am = a;
            ap(i, j) += h;
            am(i, j) -= h;
            const double fp = fn(ap), fm = fn(am);
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                throw std::domain_error("fd_gradient: non-finite evaluation");
            }
            g(i, j) = (fp - fm) / (2.0 * h);
        }
    }
    return g;
}

}  // namespace so3fm
