#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "so3fm/bingham.hpp"
#include "so3fm/fisher.hpp"
#include "so3fm/losses.hpp"
#include "so3fm/mc_oracle.hpp"

namespace so3fm {

// Self-contained oracle suite behind the `verify` CLI subcommand: every
// analytic quantity is replayed against its Monte-Carlo or independent
// numerical oracle. Deterministic for a given seed; needs no external data.
struct VerifyOptions {
    bool fast = false;        // 1e5 samples instead of 1e6
    std::uint64_t seed = 0;

    std::int64_t mc_samples() const { return fast ? 100000 : 1000000; }
};

struct VerifyRow {
    std::string name;
    double analytic = 0.0;
    double oracle = 0.0;
    double sigma = 0.0;  // MC standard error, or the tolerance for exact checks
    bool pass = false;
};

namespace detail {

inline Mat3 random_matrix(Rng& rng, double scale) {
    Mat3 a;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = scale * rng.normal();
    return a;
}

// Random A whose largest singular value equals `smax`.
inline Mat3 random_matrix_smax(Rng& rng, double smax) {
    Mat3 a = random_matrix(rng, 1.0);
    return a * (smax / proper_svd(a).s[0]);
}

}  // namespace detail

inline std::vector<VerifyRow> run_verify_suite(const VerifyOptions& opt) {
    std::vector<VerifyRow> rows;
    Rng rng(opt.seed ^ 0x5eedf00dULL);
    const std::int64_t n = opt.mc_samples();

    // Normalization constant vs Monte Carlo, F-scale, max(1%, 3 sigma).
    for (int rep = 0; rep < (opt.fast ? 3 : 6); ++rep) {
        const Mat3 a = detail::random_matrix_smax(rng, rng.uniform(0.5, 3.0));
        const double f_an = std::exp(log_norm_const(proper_svd(a).s));
        const McEstimate mc = mc_norm_const(a, n, rng.next_u64());
        const double tol = std::max(0.01 * f_an, 3.0 * mc.std_error);
        rows.push_back({"norm_const_mc_" + std::to_string(rep), f_an, mc.mean,
                        mc.std_error, std::abs(f_an - mc.mean) <= tol});
    }

    // Quadrature self-refinement, 511 vs 8191 trapezoids.
    {
        double worst = 0.0;
        for (const Vec3& s : {Vec3(0, 0, 0), Vec3(5, 5, 5), Vec3(20, 1, 1),
                              Vec3(50, 50, 50), Vec3(50, 25, -10), Vec3(35, 20, 5)}) {
            const double c = log_norm_const(s, QuadratureConfig{511});
            const double r = log_norm_const(s, QuadratureConfig{8191});
            worst = std::max(worst, std::abs(c - r) / std::max(1.0, std::abs(r)));
        }
        rows.push_back({"norm_const_refinement", worst, 0.0, 1e-8, worst < 1e-8});
    }

    // Index-assignment invariance of the Bessel integral.
    {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            const Vec3 s = proper_svd(detail::random_matrix(rng, 5.0)).s;
            const double l0 = log_norm_and_derivs(s, {}, {0, 1, 2}).log_f;
            const double l1 = log_norm_and_derivs(s, {}, {1, 2, 0}).log_f;
            const double l2 = log_norm_and_derivs(s, {}, {2, 0, 1}).log_f;
            worst = std::max({worst, std::abs(l1 - l0), std::abs(l2 - l0)});
        }
        rows.push_back({"assignment_invariance", worst, 0.0, 1e-10, worst < 1e-10});
    }

    // Entropy and cross entropy vs Monte Carlo, max(2%, 4 sigma).
    for (int rep = 0; rep < (opt.fast ? 2 : 4); ++rep) {
        const Mat3 af = detail::random_matrix_smax(rng, rng.uniform(0.5, 3.0));
        const Mat3 ag = detail::random_matrix_smax(rng, rng.uniform(0.5, 3.0));
        const FisherParams f(af), g(ag);
        const double h_an = f.entropy();
        const McEstimate h_mc = mc_entropy(af, n, rng.next_u64());
        double tol = std::max(0.02 * std::abs(h_an), 4.0 * h_mc.std_error);
        rows.push_back({"entropy_mc_" + std::to_string(rep), h_an, h_mc.mean,
                        h_mc.std_error, std::abs(h_an - h_mc.mean) <= tol});
        const double ce_an = cross_entropy_erform(f, g).value;
        const McEstimate ce_mc = mc_cross_entropy(af, ag, n, rng.next_u64());
        tol = std::max(0.02 * std::abs(ce_an), 4.0 * ce_mc.std_error);
        rows.push_back({"cross_entropy_mc_" + std::to_string(rep), ce_an, ce_mc.mean,
                        ce_mc.std_error, std::abs(ce_an - ce_mc.mean) <= tol});
    }

    // Expected rotation vs Monte Carlo, entrywise 3 sigma (plus an absolute
    // floor at the MC resolution so a zero-variance entry cannot fail on
    // rounding).
    {
        const Mat3 a = detail::random_matrix_smax(rng, 2.5);
        const Mat3 er = FisherParams(a).expected_rotation();
        const McMatrixEstimate mc = mc_expected_rotation(a, n, rng.next_u64());
        bool ok = true;
        double worst = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double dev = std::abs(er(i, j) - mc.mean(i, j));
                ok = ok && dev <= 3.0 * mc.std_error(i, j) + 1e-12;
                worst = std::max(worst, dev);
            }
        }
        rows.push_back({"expected_rotation_mc", er.norm(), mc.mean.norm(),
                        mc.std_error.maxCoeff(), ok});
    }

    // Exact structural identities on random parameters.
    {
        double worst_exp = 0.0, worst_dens = 0.0, worst_bridge = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const Mat3 a = detail::random_matrix(rng, 3.0);
            const FisherParams f(a);
            const BinghamParams b = fisher_to_bingham(f);
            for (int t = 0; t < 50; ++t) {
                const Vec4 q = sample_unit_quaternion(rng);
                const double lhs = (a.transpose() * quat_to_rot_matrix(q)).trace();
                const Vec4 p = b.m().transpose() * q;
                worst_exp = std::max(worst_exp, std::abs(lhs - p.cwiseProduct(p).dot(b.z())));
                const double lp_f = f.log_pdf(Rotation::unchecked(quat_to_rot_matrix(q)));
                const double lp_b = bingham_log_pdf(b, UnitQuaternion(q));
                worst_dens = std::max(worst_dens, std::abs(lp_f - (lp_b + kLog2Pi2)));
            }
            worst_bridge = std::max(
                worst_bridge, std::abs(bingham_entropy(b) - kLog2Pi2 - f.entropy()));
        }
        rows.push_back({"exponent_identity", worst_exp, 0.0, 1e-9, worst_exp < 1e-9});
        rows.push_back({"density_equivalence", worst_dens, 0.0, 1e-9, worst_dens < 1e-9});
        rows.push_back({"entropy_bridge", worst_bridge, 0.0, 1e-9, worst_bridge < 1e-9});
    }

    // Dual-path cross entropy.
    {
        double worst = 0.0;
        const int reps = opt.fast ? 20 : 100;
        for (int rep = 0; rep < reps; ++rep) {
            const Mat3 af = detail::random_matrix_smax(rng, rng.uniform(0.5, 20.0));
            const Mat3 ag = detail::random_matrix_smax(rng, rng.uniform(0.5, 20.0));
            const FisherParams f(af), g(ag);
            const double q = cross_entropy_qform(f, g).value;
            const double e = cross_entropy_erform(f, g).value;
            worst = std::max(worst, std::abs(q - e) / std::max(1.0, std::abs(e)));
        }
        rows.push_back({"dual_path_ce", worst, 0.0, 1e-6, worst < 1e-6});
    }

    // Gibbs inequality.
    {
        bool ok = true;
        for (int rep = 0; rep < 50; ++rep) {
            const Mat3 af = detail::random_matrix(rng, 2.0);
            const Mat3 ag = detail::random_matrix(rng, 2.0);
            const FisherParams f(af), g(ag);
            ok = ok && cross_entropy_erform(f, g).value >= f.entropy() - 1e-12;
        }
        rows.push_back({"gibbs_inequality", 0.0, 0.0, 0.0, ok});
    }

    // Gradients vs central finite differences.
    {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            const Mat3 a = detail::random_matrix(rng, 2.0);
            const Mat3 g_an = FisherParams(a).grad_log_norm_wrt_a();
            const Mat3 g_fd = fd_gradient(
                [](const Mat3& m) { return log_norm_const(proper_svd(m).s); }, a);
            worst = std::max(worst, (g_an - g_fd).norm() / g_fd.norm());
        }
        rows.push_back({"grad_logF_fd", worst, 0.0, 1e-4, worst < 1e-4});
    }
    {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            const Mat3 a = detail::random_matrix(rng, 2.0);
            const Rotation y = sample_uniform_rotation(rng);
            const Mat3 g_an = nll_supervised(FisherParams(a), y).grad_a;
            const Mat3 g_fd = fd_gradient(
                [&](const Mat3& m) { return nll_supervised(FisherParams(m), y).value; }, a);
            worst = std::max(worst, (g_an - g_fd).norm() / g_fd.norm());
            const Mat3 at = detail::random_matrix(rng, 2.0);
            const FisherParams t(at);
            const Mat3 g2_an = cross_entropy_erform(t, FisherParams(a)).grad_a;
            const Mat3 g2_fd = fd_gradient(
                [&](const Mat3& m) { return cross_entropy_erform(t, FisherParams(m)).value; },
                a);
            worst = std::max(worst, (g2_an - g2_fd).norm() / g2_fd.norm());
        }
        rows.push_back({"grad_losses_fd", worst, 0.0, 1e-4, worst < 1e-4});
    }

    // Mode is the sampled density argmax.
    {
        bool ok = true;
        const std::int64_t trials = opt.fast ? 20000 : 100000;
        for (int rep = 0; rep < 3; ++rep) {
            const Mat3 a = detail::random_matrix_smax(rng, rng.uniform(1.0, 10.0));
            const FisherParams f(a);
            const double at_mode = f.log_pdf(f.mode());
            for (std::int64_t t = 0; t < trials; ++t) {
                if (f.log_pdf(sample_uniform_rotation(rng)) > at_mode) {
                    ok = false;
                    break;
                }
            }
        }
        rows.push_back({"mode_is_argmax", 0.0, 0.0, 0.0, ok});
    }

    // Dirac limit: CE against a sharpened teacher approaches the mode NLL.
    {
        bool ok = true;
        double final_gap = 0.0;
        for (int rep = 0; rep < 3; ++rep) {
            const Mat3 at = detail::random_matrix_smax(rng, 10.0);
            const Mat3 as = detail::random_matrix_smax(rng, rng.uniform(1.0, 10.0));
            const FisherParams t1(at), s(as);
            const double nll = nll_unsupervised(t1, s).value;
            double prev = 1e300;
            for (double kappa : {1.0, 10.0, 100.0}) {
                const double gap =
                    std::abs(cross_entropy_erform(FisherParams(kappa * at), s).value - nll);
                ok = ok && gap < prev;
                prev = gap;
            }
            final_gap = std::max(final_gap, prev);
            ok = ok && prev < 0.05;
        }
        rows.push_back({"dirac_limit", final_gap, 0.0, 0.05, ok});
    }

    // Haar sampler moments: E[tr R] = 0, E[R] = 0.
    {
        Rng srng(opt.seed ^ 0xabcdefULL);
        const std::int64_t ns = opt.fast ? 50000 : 200000;
        double str = 0.0, str2 = 0.0;
        Mat3 sr = Mat3::Zero();
        for (std::int64_t i = 0; i < ns; ++i) {
            const Mat3 r = quat_to_rot_matrix(sample_unit_quaternion(srng));
            const double tr = r.trace();
            str += tr;
            str2 += tr * tr;
            sr += r;
        }
        const double mean = str / ns;
        const double se = std::sqrt((str2 / ns - mean * mean) / ns);
        rows.push_back({"haar_trace_moment", 0.0, mean, se, std::abs(mean) <= 3 * se});
        const double worst_entry = (sr / ns).cwiseAbs().maxCoeff();
        // Var of an entry of R under Haar is 1/3.
        const double entry_se = std::sqrt(1.0 / 3.0 / ns);
        rows.push_back({"haar_mean_rotation", 0.0, worst_entry, entry_se,
                        worst_entry <= 4 * entry_se});
    }

    return rows;
}

inline std::string format_verify_table(const std::vector<VerifyRow>& rows) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-26s %16s %16s %12s  %s\n", "quantity", "analytic",
                  "oracle", "sigma", "verdict");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-26s %16.8g %16.8g %12.4g  %s\n",
                      r.name.c_str(), r.analytic, r.oracle, r.sigma,
                      r.pass ? "ok" : "FAIL");
        out << buf;
    }
    int failed = 0;
    for (const auto& r : rows) failed += r.pass ? 0 : 1;
    std::snprintf(buf, sizeof(buf), "%zu checks, %d failed\n", rows.size(), failed);
    out << buf;
    return out.str();
}

}  // namespace so3fm
