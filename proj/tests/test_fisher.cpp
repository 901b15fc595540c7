#include <catch2/catch_amalgamated.hpp>

#include "so3fm/fisher.hpp"
#include "so3fm/mc_oracle.hpp"

using namespace so3fm;

namespace {
Mat3 random_mat(Rng& rng, double scale) {
    Mat3 a;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = scale * rng.normal();
    return a;
}
}  // namespace

TEST_CASE("FisherParams caches a consistent decomposition") {
    Rng rng(31);
    for (int t = 0; t < 50; ++t) {
        const Mat3 a = random_mat(rng, 4.0);
        const FisherParams p(a);
        CHECK((p.svd().reconstruct() - a).norm() < 1e-9 * std::max(1.0, a.norm()));
        CHECK(std::isfinite(p.log_norm()));
        CHECK(p.df_over_f().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    }
}

TEST_CASE("mode examples") {
    CHECK(FisherParams(Mat3::Identity()).mode().matrix().isApprox(Mat3::Identity(), 1e-12));
    const Mat3 refl = Vec3(1, 1, -1).asDiagonal();
    CHECK(FisherParams(refl).mode().matrix().isApprox(Mat3::Identity(), 1e-9));
}

TEST_CASE("mode is where the density peaks") {
    Rng rng(32);
    const Rotation g = sample_uniform_rotation(rng);
    const Mat3 a = g.matrix() * Vec3(3, 2, 1).asDiagonal();
    const FisherParams p(a);
    CHECK((p.mode().matrix() - g.matrix()).norm() < 1e-9);
    const double at_mode = p.log_pdf(p.mode());
    for (int t = 0; t < 100000; ++t) {
        CHECK(p.log_pdf(sample_uniform_rotation(rng)) <= at_mode);
    }
}

TEST_CASE("log_pdf values") {
    Rng rng(33);
    const FisherParams uniform(Mat3::Zero());
    for (int t = 0; t < 10; ++t) {
        CHECK(uniform.log_pdf(sample_uniform_rotation(rng)) == 0.0);
    }
    const FisherParams iso(Mat3::Identity() * 5.0);
    CHECK(iso.log_pdf(Rotation::identity()) ==
          Catch::Approx(15.0 - log_norm_const(Vec3(5, 5, 5))).margin(1e-12));
    // never exceeds the mode density
    const FisherParams p(random_mat(rng, 2.0));
    const double at_mode = p.log_pdf(p.mode());
    for (int t = 0; t < 1000; ++t) {
        CHECK(p.log_pdf(sample_uniform_rotation(rng)) <= at_mode);
    }
}

TEST_CASE("entropy of the uniform distribution is zero") {
    CHECK(std::abs(FisherParams(Mat3::Zero()).entropy()) < 1e-12);
}

TEST_CASE("entropy agrees with the Monte-Carlo oracle") {
    const Mat3 a = Mat3::Identity() * 5.0;
    const double h = FisherParams(a).entropy();
    const McEstimate mc = mc_entropy(a, 1000000, 77);
    CHECK(std::abs(h - mc.mean) <= std::max(0.02 * std::abs(h), 4.0 * mc.std_error));
}

TEST_CASE("entropy decreases with concentration") {
    double prev = FisherParams(Mat3::Zero()).entropy();
    for (double s : {1.0, 2.0, 5.0, 10.0, 20.0}) {
        const double h = FisherParams(Mat3::Identity() * s).entropy();
        CHECK(h < prev);
        prev = h;
    }
    CHECK(FisherParams(Mat3::Identity() * 20.0).entropy() <
          FisherParams(Mat3::Identity() * 5.0).entropy());
}

TEST_CASE("expected rotation: symmetry, concentration, oracle") {
    CHECK(FisherParams(Mat3::Zero()).expected_rotation().norm() == 0.0);

    const Mat3 a = Mat3::Identity() * 5.0;
    const Mat3 er = FisherParams(a).expected_rotation();
    CHECK(std::abs(er(0, 0) - er(1, 1)) < 1e-12);
    CHECK(std::abs(er(0, 0) - er(2, 2)) < 1e-12);
    const McMatrixEstimate mc = mc_expected_rotation(a, 1000000, 78);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(er(i, j) - mc.mean(i, j)) <=
                  3.0 * mc.std_error(i, j) + 1e-12);

    const Mat3 sharp = Mat3::Identity() * 200.0;
    CHECK((FisherParams(sharp).expected_rotation() - Mat3::Identity())
              .cwiseAbs()
              .maxCoeff() < 0.01);
}

TEST_CASE("gradient of log F matches finite differences") {
    Rng rng(34);
    const Mat3 base = Vec3(6, 3, 1).asDiagonal();
    for (int t = 0; t < 5; ++t) {
        const Mat3 g = sample_uniform_rotation(rng).matrix();
        const Mat3 h = sample_uniform_rotation(rng).matrix();
        const Mat3 a = g * base * h;
        const Mat3 grad = FisherParams(a).grad_log_norm_wrt_a();
        const Mat3 fd = fd_gradient(
            [](const Mat3& m) { return log_norm_const(proper_svd(m).s); }, a);
        CHECK((grad - fd).norm() / fd.norm() < 1e-4);
    }
    CHECK(FisherParams(Mat3::Zero()).grad_log_norm_wrt_a().norm() == 0.0);
}

TEST_CASE("gradient equivariance under left and right rotation") {
    Rng rng(35);
    for (int t = 0; t < 10; ++t) {
        const Mat3 a = random_mat(rng, 2.0);
        const Mat3 g = sample_uniform_rotation(rng).matrix();
        const Mat3 h = sample_uniform_rotation(rng).matrix();
        const Mat3 grad_a = FisherParams(a).grad_log_norm_wrt_a();
        const Mat3 grad_gah = FisherParams(g * a * h).grad_log_norm_wrt_a();
        CHECK((grad_gah - g * grad_a * h).norm() < 1e-9 * std::max(1.0, grad_a.norm()));
    }
}

TEST_CASE("log F depends only on the proper singular values") {
    Rng rng(36);
    for (int t = 0; t < 20; ++t) {
        const Mat3 a = random_mat(rng, 3.0);
        const Mat3 g = sample_uniform_rotation(rng).matrix();
        const Mat3 h = sample_uniform_rotation(rng).matrix();
        const double lf = log_norm_const(proper_svd(a).s);
        const double lf2 = log_norm_const(proper_svd(g * a * h).s);
        CHECK(std::abs(lf - lf2) < 1e-9 * std::max(1.0, std::abs(lf)));
    }
}

TEST_CASE("density normalizes under Haar sampling") {
    Rng rng(37);
    Mat3 a = random_mat(rng, 1.0);
    a *= 2.5 / proper_svd(a).s[0];  // keep s <= 3 for variance control
    const FisherParams p(a);
    const int n = 1000000;
    double sum = 0, sum2 = 0;
    Rng srng(379);
    for (int i = 0; i < n; ++i) {
        const double v = std::exp(p.log_pdf(sample_uniform_rotation(srng)));
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}
