#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "so3fm/bingham.hpp"
#include "so3fm/fisher.hpp"

namespace so3fm {

// Entropy-threshold gate for a teacher prediction. Entropies are in nats.
struct FilterDecision {
    double entropy = 0.0;
    double threshold = 0.0;
    bool passed = false;
};

inline FilterDecision entropy_filter(const FisherParams& teacher, double tau) {
    const double h = teacher.entropy();
    return FilterDecision{h, tau, h <= tau};
}

// A scalar loss together with its gradient with respect to the student's
// distribution parameter A. Teachers and targets are constants throughout
// (the teacher is EMA-updated, never backpropagated).
struct LossValue {
    double value = 0.0;
    Mat3 grad_a = Mat3::Zero();
};

// Negative log likelihood of a ground-truth rotation under the prediction:
// log F(A) - tr(A^T y). Gradient: E[R] - y.
inline LossValue nll_supervised(const FisherParams& pred, const Rotation& y) {
    LossValue out;
    out.value = pred.log_norm() - (pred.a().transpose() * y.matrix()).trace();
    out.grad_a = pred.expected_rotation() - y.matrix();
    return out;
}

// Cross entropy H(teacher, student) over SO(3) in expected-rotation form:
// log F_s - tr(A_s^T E_t[R]). Gradient: E_s[R] - E_t[R].
inline LossValue cross_entropy_erform(const FisherParams& teacher,
                                      const FisherParams& student) {
    const Mat3 er_t = teacher.expected_rotation();
    LossValue out;
    out.value = student.log_norm() - (student.a().transpose() * er_t).trace();
    out.grad_a = student.expected_rotation() - er_t;
    return out;
}

// Same quantity through the quaternion-side closed form (the S^3 cross
// entropy minus the Lebesgue/Haar offset). Kept as an independent
// computation path; the two must agree and the tests hold them to it. The
// gradient is shared with the expected-rotation form, where it is exact.
inline LossValue cross_entropy_qform(const FisherParams& teacher,
                                     const FisherParams& student) {
    const BinghamParams bt = fisher_to_bingham(teacher);
    const BinghamParams bs = fisher_to_bingham(student);
    LossValue out;
    out.value = bingham_cross_entropy(bt, bs) - kLog2Pi2;
    out.grad_a = student.expected_rotation() - teacher.expected_rotation();
    return out;
}

// NLL of the teacher's mode under the student: the cross entropy after
// collapsing the teacher to a point mass at its mode.
inline LossValue nll_unsupervised(const FisherParams& teacher,
                                  const FisherParams& student) {
    return nll_supervised(student, teacher.mode());
}

enum class UnsupLossKind { kCrossEntropy, kNll };

// Batch objective: mean supervised NLL over the labeled slots plus
// lambda_u times the mean gated unsupervised loss over the unlabeled slots.
// Rejected samples contribute zero loss and zero gradient but stay in the
// unlabeled denominator, keeping lambda_u's effective scale independent of
// coverage.
struct BatchLoss {
    double value = 0.0;
    std::vector<Mat3> grad_labeled;    // w.r.t. each labeled prediction's A
    std::vector<Mat3> grad_unlabeled;  // w.r.t. each student prediction's A
    std::vector<FilterDecision> decisions;
};

inline BatchLoss total_loss(std::span<const FisherParams> labeled_pred,
                            std::span<const Rotation> labeled_y,
                            std::span<const FisherParams> teacher_pred,
                            std::span<const FisherParams> student_pred,
                            double tau, double lambda_u,
                            UnsupLossKind kind = UnsupLossKind::kCrossEntropy) {
    if (labeled_pred.size() != labeled_y.size() ||
        teacher_pred.size() != student_pred.size()) {
        throw std::invalid_argument("total_loss: batch size mismatch");
    }
    BatchLoss out;
    const std::size_t bl = labeled_pred.size();
    const std::size_t bu = teacher_pred.size();
    out.grad_labeled.resize(bl, Mat3::Zero());
    out.grad_unlabeled.resize(bu, Mat3::Zero());
    out.decisions.reserve(bu);

    if (bl > 0) {
        double acc = 0.0;
        for (std::size_t i = 0; i < bl; ++i) {
            const LossValue l = nll_supervised(labeled_pred[i], labeled_y[i]);
            acc += l.value;
            out.grad_labeled[i] = l.grad_a / static_cast<double>(bl);
        }
        out.value += acc / static_cast<double>(bl);
    }

    if (bu > 0) {
        double acc = 0.0;
        for (std::size_t i = 0; i < bu; ++i) {
            const FilterDecision d = entropy_filter(teacher_pred[i], tau);
            out.decisions.push_back(d);
            if (!d.passed) continue;
            const LossValue l = kind == UnsupLossKind::kCrossEntropy
                                    ? cross_entropy_erform(teacher_pred[i], student_pred[i])
                                    : nll_unsupervised(teacher_pred[i], student_pred[i]);
            acc += l.value;
            out.grad_unlabeled[i] = lambda_u * l.grad_a / static_cast<double>(bu);
        }
        out.value += lambda_u * acc / static_cast<double>(bu);
    }
    return out;
}

}  // namespace so3fm
