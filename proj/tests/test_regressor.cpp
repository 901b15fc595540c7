#include <catch2/catch_amalgamated.hpp>

#include "so3fm/bingham_head.hpp"
#include "so3fm/losses.hpp"
#include "so3fm/regressor.hpp"

using namespace so3fm;

TEST_CASE("zero weights pass the bias through") {
    Rng rng(71);
    Regressor net(6, 8, 9, rng);
    for (int l = 0; l < 3; ++l) net.weight(l).setZero();
    Eigen::VectorXd bias(9);
    for (int i = 0; i < 9; ++i) bias[i] = 0.1 * (i + 1);
    net.bias(2) = bias;
    const Eigen::VectorXd out = net.forward(Eigen::VectorXd::Zero(6));
    CHECK((out - bias).norm() == 0.0);
    const Mat3 a = output_to_a(out);
    CHECK(a(0, 1) == bias[1]);  // row-major reshape
    CHECK(a(2, 0) == bias[6]);
}

TEST_CASE("forward is deterministic and per-sample") {
    Rng rng(72);
    Regressor net(6, 8, 9, rng);
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x[i] = rng.normal();
    const Eigen::VectorXd o1 = net.forward(x);
    const Eigen::VectorXd o2 = net.forward(x);
    CHECK((o1 - o2).norm() == 0.0);
    CHECK_THROWS_AS(net.forward(Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("backward matches finite differences through the full loss") {
    Rng rng(73);
    Regressor net(8, 10, 9, rng);
    Eigen::VectorXd x(8);
    for (int i = 0; i < 8; ++i) x[i] = rng.normal();
    const Rotation y = sample_uniform_rotation(rng);

    auto loss_at = [&](Regressor& n) {
        const Eigen::VectorXd out = n.forward(x);
        return nll_supervised(FisherParams(output_to_a(out)), y).value;
    };

    Regressor::Trace trace;
    const Eigen::VectorXd out = net.forward(x, &trace);
    const LossValue l = nll_supervised(FisherParams(output_to_a(out)), y);
    auto grads = net.zero_grads();
    net.backward(trace, a_grad_to_output(l.grad_a), &grads);

    // probe 20 randomly chosen parameters with central differences
    const double h = 1e-5;
    for (int probe = 0; probe < 20; ++probe) {
        const int layer = static_cast<int>(rng.below(3));
        auto& w = net.weight(layer);
        const int r = static_cast<int>(rng.below(w.rows()));
        const int c = static_cast<int>(rng.below(w.cols()));
        const double keep = w(r, c);
        w(r, c) = keep + h;
        const double fp = loss_at(net);
        w(r, c) = keep - h;
        const double fm = loss_at(net);
        w(r, c) = keep;
        const double fd = (fp - fm) / (2 * h);
        CHECK(grads.w[layer](r, c) ==
              Catch::Approx(fd).epsilon(1e-3).margin(1e-8));
    }
}

TEST_CASE("ema update endpoints and geometric convergence") {
    Rng rng(74);
    const Regressor pre(4, 5, 9, rng);
    TeacherStudent ts(pre, 0.999);
    // move the student somewhere else
    for (int l = 0; l < 3; ++l) ts.student.weight(l).array() += 1.0;

    TeacherStudent t0(pre, 0.0);
    t0.student = ts.student;
    t0.ema_update();
    CHECK((t0.teacher.weight(0) - ts.student.weight(0)).norm() == 0.0);

    TeacherStudent t1(pre, 1.0);
    t1.student = ts.student;
    t1.ema_update();
    CHECK((t1.teacher.weight(0) - pre.weight(0)).norm() == 0.0);

    // gap shrinks by decay^k against a frozen student
    const double gap0 = (ts.teacher.weight(0) - ts.student.weight(0)).norm();
    for (int k = 0; k < 1000; ++k) ts.ema_update();
    const double gap = (ts.teacher.weight(0) - ts.student.weight(0)).norm();
    CHECK(gap / gap0 == Catch::Approx(std::pow(0.999, 1000)).epsilon(1e-9));
}

TEST_CASE("flatten and unflatten round trip") {
    Rng rng(75);
    Regressor a(6, 7, 9, rng);
    Regressor b(6, 7, 9, rng);
    b.unflatten(a.flatten());
    CHECK((a.weight(1) - b.weight(1)).norm() == 0.0);
    CHECK((a.bias(2) - b.bias(2)).norm() == 0.0);
    std::vector<double> short_buf(5);
    CHECK_THROWS_AS(b.unflatten(short_buf), std::invalid_argument);
}

TEST_CASE("bingham head forward structure") {
    Eigen::VectorXd raw(7);
    raw << 1, 0, 0, 0, 0, 0, 0;
    const BinghamParams b = BinghamHead::forward(raw);
    // mode quaternion is the first column of M(o1)
    CHECK(b.mode_column() == 0);
    CHECK((b.mode().vec() - Vec4(1, 0, 0, 0)).norm() < 1e-12);
    CHECK_THROWS_AS(BinghamHead::forward(Eigen::VectorXd::Zero(6)),
                    std::invalid_argument);
}

TEST_CASE("bingham head gradient matches finite differences") {
    Rng rng(76);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd raw(7);
        for (int i = 0; i < 7; ++i) raw[i] = rng.normal();
        const Rotation y = sample_uniform_rotation(rng);
        auto loss_at = [&](const Eigen::VectorXd& r) {
            const BinghamParams b = BinghamHead::forward(r);
            return nll_supervised(b.equivalent_fisher(), y).value;
        };
        const BinghamParams b = BinghamHead::forward(raw);
        const LossValue l = nll_supervised(b.equivalent_fisher(), y);
        const Eigen::VectorXd grad = BinghamHead::backward(raw, l.grad_a);
        const double h = 1e-5;
        for (int i = 0; i < 7; ++i) {
            Eigen::VectorXd rp = raw, rm = raw;
            rp[i] += h;
            rm[i] -= h;
            const double fd = (loss_at(rp) - loss_at(rm)) / (2 * h);
            CHECK(grad[i] == Catch::Approx(fd).epsilon(1e-3).margin(1e-7));
        }
    }
}
