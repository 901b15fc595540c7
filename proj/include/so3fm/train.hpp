#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "so3fm/bingham_head.hpp"
#include "so3fm/losses.hpp"
#include "so3fm/regressor.hpp"
#include "so3fm/synthetic.hpp"

namespace so3fm {

struct TrainConfig {
    int schema_version = 1;
    std::uint64_t seed = 0;

    // Data
    int n_labeled = 200;
    int n_unlabeled = 4000;
    int n_test = 1000;
    int keypoints = 8;
    double data_noise = 0.05;

    // Model / optimization
    int hidden = 64;
    double learning_rate = 1e-3;
    int pretrain_steps = 3000;
    int ssl_steps = 6000;
    int batch_labeled = 32;
    int batch_unlabeled = 128;
    double pretrain_early_stop_delta = 1e-4;  // over a 500-step lookback

    // Semi-supervised machinery
    double lambda_u = 1.0;
    double tau = -5.3;
    std::string tau_mode = "percentile";  // "fixed" | "percentile"
    double tau_percentile = 0.40;
    double ema_decay = 0.999;
    double weak_noise = 0.01;
    double strong_noise = 0.05;
    double dropout_prob = 0.10;
    bool augment_labeled = true;
    std::string unsup_loss = "ce";  // "ce" | "nll"
    std::string head = "fisher";    // "fisher" | "bingham"

    // Distribution machinery / logging
    int n_trapezoids = 511;
    int snapshot_every = 200;

    void validate() const {
        if (batch_labeled < 1 || batch_unlabeled < 1) {
            throw std::invalid_argument("TrainConfig: batch sizes must be >= 1");
        }
        if (!(ema_decay > 0.0 && ema_decay < 1.0)) {
            throw std::invalid_argument("TrainConfig: ema_decay must be in (0, 1)");
        }
        if (n_labeled < 1 || n_test < 1) {
            throw std::invalid_argument("TrainConfig: dataset sizes must be >= 1");
        }
        if (tau_mode != "fixed" && tau_mode != "percentile") {
            throw std::invalid_argument("TrainConfig: tau_mode must be fixed|percentile");
        }
        if (unsup_loss != "ce" && unsup_loss != "nll") {
            throw std::invalid_argument("TrainConfig: unsup_loss must be ce|nll");
        }
        if (head != "fisher" && head != "bingham") {
            throw std::invalid_argument("TrainConfig: head must be fisher|bingham");
        }
        QuadratureConfig{n_trapezoids}.validate();
    }

    QuadratureConfig quadrature() const { return QuadratureConfig{n_trapezoids}; }
    int head_outputs() const { return head == "bingham" ? 7 : 9; }
    UnsupLossKind unsup_kind() const {
        return unsup_loss == "nll" ? UnsupLossKind::kNll : UnsupLossKind::kCrossEntropy;
    }
};

struct Datasets {
    std::vector<SyntheticSample> labeled;
    std::vector<SyntheticSample> unlabeled;
    std::vector<SyntheticSample> test;
};

// Labeled, unlabeled and test sets from disjoint draws of one stream.
inline Datasets make_datasets(const TrainConfig& cfg, Rng& rng) {
    Datasets d;
    d.labeled = gen_synthetic_dataset(cfg.n_labeled, cfg.keypoints, cfg.data_noise, rng);
    d.unlabeled =
        gen_synthetic_dataset(cfg.n_unlabeled, cfg.keypoints, cfg.data_noise, rng);
    d.test = gen_synthetic_dataset(cfg.n_test, cfg.keypoints, cfg.data_noise, rng);
    return d;
}

struct EvalReport {
    double mean_error_deg = 0.0;
    double median_error_deg = 0.0;
    double acc_30deg = 0.0;
    double entropy_error_spearman = 0.0;
};

struct SnapshotRow {
    long step = 0;
    double mean_err = 0.0;
    double median_err = 0.0;
    double acc30 = 0.0;
    double coverage = 0.0;         // fraction of the unlabeled pool passing the filter
    double pl_err = 0.0;           // mean error of passing pseudo labels vs ground truth
    double student_pl_err = 0.0;   // mean student-to-pseudo-label error
    double mean_entropy = 0.0;     // mean teacher entropy over the pool
};

// Per-slot filter audit record for one training step.
struct FilterRecord {
    double entropy = 0.0;
    double grad_norm = 0.0;
    bool passed = false;
};

struct SslResult {
    Regressor student;
    Regressor teacher;
    double tau = 0.0;
    std::vector<SnapshotRow> history;
    std::vector<double> step_coverage;                // batch coverage per step
    std::vector<std::vector<FilterRecord>> filter_log;  // per step, per unlabeled slot
    EvalReport final_report;
    // First-step augmented inputs, kept so tests can assert the teacher and
    // student never see the same noise realization.
    Eigen::MatrixXd first_step_teacher_inputs;
    Eigen::MatrixXd first_step_student_inputs;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
        return 0.5 * (v[mid - 1] + hi);
    }
    return hi;
}

inline std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks_with_ties(a);
    const auto rb = ranks_with_ties(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) { ma += ra[i]; mb += rb[i]; }
    ma /= n; mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0 || sbb == 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

// One forward pass through the configured head; returns the predicted
// distribution as its (equivalent) Fisher parameters.
inline FisherParams predict(const Regressor& net, const Eigen::VectorXd& x,
                            const TrainConfig& cfg, Regressor::Trace* trace) {
    const Eigen::VectorXd out = net.forward(x, trace);
    if (cfg.head == "bingham") {
        return BinghamHead::forward(out, cfg.quadrature()).equivalent_fisher();
    }
    return FisherParams(output_to_a(out), cfg.quadrature());
}

// Upstream gradient for the network output given d(loss)/dA.
inline Eigen::VectorXd head_backward(const Eigen::VectorXd& out, const Mat3& grad_a,
                                     const TrainConfig& cfg) {
    if (cfg.head == "bingham") return BinghamHead::backward(out, grad_a);
    return a_grad_to_output(grad_a);
}

}  // namespace detail

inline EvalReport evaluate(const Regressor& model,
                           const std::vector<SyntheticSample>& test,
                           const TrainConfig& cfg) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    std::vector<double> errs, ents;
    errs.reserve(test.size());
    ents.reserve(test.size());
    double acc = 0.0;
    for (const auto& s : test) {
        const FisherParams p = detail::predict(model, s.features, cfg, nullptr);
        const double e = geodesic_angle_deg(p.mode(), *s.label);
        errs.push_back(e);
        ents.push_back(p.entropy());
        if (e < 30.0) acc += 1.0;
    }
    EvalReport r;
    r.mean_error_deg = 0.0;
    for (double e : errs) r.mean_error_deg += e;
    r.mean_error_deg /= static_cast<double>(errs.size());
    r.median_error_deg = detail::median_of(errs);
    r.acc_30deg = acc / static_cast<double>(errs.size());
    r.entropy_error_spearman = detail::spearman(ents, errs);
    return r;
}

struct PretrainResult {
    Regressor model;
    std::vector<double> loss_history;
    long steps_run = 0;
};

// Stage one: supervised NLL on the labeled set. Stops early once the
// window-100 smoothed loss has improved by less than the configured delta
// over the last 500 steps.
inline PretrainResult pretrain(const TrainConfig& cfg,
                               const std::vector<SyntheticSample>& labeled, Rng& rng) {
    cfg.validate();
    if (labeled.empty()) throw std::invalid_argument("pretrain: empty labeled set");
    Regressor net(2 * cfg.keypoints, cfg.hidden, cfg.head_outputs(), rng);
    PretrainResult res{net, {}, 0};
    std::vector<double> smoothed;
    const int bl = cfg.batch_labeled;
    auto grads = net.zero_grads();
    for (int step = 0; step < cfg.pretrain_steps; ++step) {
        grads.setZero();
        double loss = 0.0;
        for (int i = 0; i < bl; ++i) {
            const auto& sample = labeled[rng.below(labeled.size())];
            Eigen::VectorXd x = sample.features;
            if (cfg.augment_labeled) {
                for (int j = 0; j < x.size(); ++j) x[j] += cfg.weak_noise * rng.normal();
            }
            Regressor::Trace trace;
            const Eigen::VectorXd out = net.forward(x, &trace);
            const FisherParams pred =
                cfg.head == "bingham"
                    ? BinghamHead::forward(out, cfg.quadrature()).equivalent_fisher()
                    : FisherParams(output_to_a(out), cfg.quadrature());
            const LossValue l = nll_supervised(pred, *sample.label);
            loss += l.value / bl;
            net.backward(trace, detail::head_backward(out, l.grad_a / bl, cfg), &grads);
        }
        if (!std::isfinite(loss)) {
            throw std::runtime_error("pretrain: loss diverged at step " +
                                     std::to_string(step));
        }
        net.sgd_step(grads, cfg.learning_rate);
        res.loss_history.push_back(loss);
        // window-100 smoothed loss
        const int w = std::min<int>(100, static_cast<int>(res.loss_history.size()));
        double m = 0.0;
        for (int k = 0; k < w; ++k) m += res.loss_history[res.loss_history.size() - 1 - k];
        smoothed.push_back(m / w);
        res.steps_run = step + 1;
        if (step >= 600) {
            const double old = smoothed[smoothed.size() - 1 - 500];
            if (old - smoothed.back() < cfg.pretrain_early_stop_delta) break;
        }
    }
    res.model = net;
    return res;
}

// Stage two: FixMatch-style training. Per step: B_l labeled (weakly
// augmented) and B_u unlabeled samples; the teacher sees weak augmentation,
// the student strong augmentation plus coordinate dropout; the unsupervised
// term is gated per sample by the teacher-entropy threshold; the student
// takes the gradient step and the teacher follows by EMA.
//
// The draw order per step is fixed (labeled indices+noise, unlabeled
// indices, teacher noise, student noise, dropout mask) so runs differing
// only in lambda_u consume identical random streams.
inline SslResult ssl_train(const TrainConfig& cfg, const Datasets& data,
                           const Regressor& pretrained, Rng& rng) {
    cfg.validate();
    if (data.unlabeled.empty()) throw std::invalid_argument("ssl_train: empty unlabeled set");
    TeacherStudent ts(pretrained, cfg.ema_decay);

    // Fixed weakly-augmented view of the unlabeled pool, used for threshold
    // calibration and for the coverage / pseudo-label-quality snapshots.
    Rng pool_rng = rng.fork(101);
    Eigen::MatrixXd pool(data.unlabeled.size(), data.unlabeled[0].features.size());
    for (std::size_t i = 0; i < data.unlabeled.size(); ++i) {
        for (int j = 0; j < pool.cols(); ++j) {
            pool(i, j) = data.unlabeled[i].features[j] + cfg.weak_noise * pool_rng.normal();
        }
    }
    auto pool_entropies = [&](const Regressor& teacher) {
        std::vector<double> h(data.unlabeled.size());
        for (std::size_t i = 0; i < data.unlabeled.size(); ++i) {
            h[i] = detail::predict(teacher, pool.row(i).transpose(), cfg, nullptr).entropy();
        }
        return h;
    };

    double tau = cfg.tau;
    if (cfg.tau_mode == "percentile") {
        std::vector<double> h = pool_entropies(ts.teacher);
        std::vector<double> sorted = h;
        std::sort(sorted.begin(), sorted.end());
        const double pos = cfg.tau_percentile * (sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        tau = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
    }

    SslResult res{ts.student, ts.teacher, tau, {}, {}, {}, {}, {}, {}};
    const int bl = cfg.batch_labeled, bu = cfg.batch_unlabeled;
    const int dim = static_cast<int>(data.unlabeled[0].features.size());
    auto grads = ts.student.zero_grads();

    auto snapshot = [&](long step) {
        SnapshotRow row;
        row.step = step;
        const EvalReport er = evaluate(ts.student, data.test, cfg);
        row.mean_err = er.mean_error_deg;
        row.median_err = er.median_error_deg;
        row.acc30 = er.acc_30deg;
        // Teacher statistics over the fixed pool view.
        double cov = 0.0, ment = 0.0, pl = 0.0, spl = 0.0;
        long npass = 0;
        for (std::size_t i = 0; i < data.unlabeled.size(); ++i) {
            const Eigen::VectorXd x = pool.row(i).transpose();
            const FisherParams tp = detail::predict(ts.teacher, x, cfg, nullptr);
            const double h = tp.entropy();
            ment += h;
            if (h <= tau) {
                ++npass;
                const Rotation pseudo = tp.mode();
                pl += geodesic_angle_deg(pseudo, *data.unlabeled[i].label);
                const FisherParams sp = detail::predict(ts.student, x, cfg, nullptr);
                spl += geodesic_angle_deg(sp.mode(), pseudo);
            }
        }
        const double nu = static_cast<double>(data.unlabeled.size());
        cov = static_cast<double>(npass) / nu;
        row.coverage = cov;
        row.mean_entropy = ment / nu;
        row.pl_err = npass > 0 ? pl / npass : std::numeric_limits<double>::quiet_NaN();
        row.student_pl_err =
            npass > 0 ? spl / npass : std::numeric_limits<double>::quiet_NaN();
        res.history.push_back(row);
    };

    snapshot(0);
    for (int step = 0; step < cfg.ssl_steps; ++step) {
        // -- draw the step's batches and augmentations (order fixed) --
        std::vector<std::size_t> li(bl), ui(bu);
        Eigen::MatrixXd xl(bl, dim), xw(bu, dim), xs(bu, dim);
        for (int i = 0; i < bl; ++i) {
            li[i] = rng.below(data.labeled.size());
            for (int j = 0; j < dim; ++j) {
                xl(i, j) = data.labeled[li[i]].features[j] +
                           (cfg.augment_labeled ? cfg.weak_noise * rng.normal() : 0.0);
            }
        }
        for (int i = 0; i < bu; ++i) ui[i] = rng.below(data.unlabeled.size());
        for (int i = 0; i < bu; ++i) {
            for (int j = 0; j < dim; ++j) {
                xw(i, j) = data.unlabeled[ui[i]].features[j] + cfg.weak_noise * rng.normal();
            }
        }
        for (int i = 0; i < bu; ++i) {
            for (int j = 0; j < dim; ++j) {
                xs(i, j) = data.unlabeled[ui[i]].features[j] + cfg.strong_noise * rng.normal();
            }
        }
        for (int i = 0; i < bu; ++i) {
            for (int j = 0; j < dim; ++j) {
                if (rng.uniform01() < cfg.dropout_prob) xs(i, j) = 0.0;
            }
        }
        if (step == 0) {
            res.first_step_teacher_inputs = xw;
            res.first_step_student_inputs = xs;
        }

        // -- forward --
        std::vector<Regressor::Trace> traces_l(bl), traces_s(bu);
        std::vector<Eigen::VectorXd> outs_l(bl), outs_s(bu);
        std::vector<FisherParams> pred_l, pred_t, pred_s;
        pred_l.reserve(bl); pred_t.reserve(bu); pred_s.reserve(bu);
        std::vector<Rotation> y_l;
        y_l.reserve(bl);
        for (int i = 0; i < bl; ++i) {
            outs_l[i] = ts.student.forward(xl.row(i).transpose(), &traces_l[i]);
            pred_l.push_back(cfg.head == "bingham"
                                 ? BinghamHead::forward(outs_l[i], cfg.quadrature())
                                       .equivalent_fisher()
                                 : FisherParams(output_to_a(outs_l[i]), cfg.quadrature()));
            y_l.push_back(*data.labeled[li[i]].label);
        }
        for (int i = 0; i < bu; ++i) {
            pred_t.push_back(detail::predict(ts.teacher, xw.row(i).transpose(), cfg, nullptr));
            outs_s[i] = ts.student.forward(xs.row(i).transpose(), &traces_s[i]);
            pred_s.push_back(cfg.head == "bingham"
                                 ? BinghamHead::forward(outs_s[i], cfg.quadrature())
                                       .equivalent_fisher()
                                 : FisherParams(output_to_a(outs_s[i]), cfg.quadrature()));
        }

        // -- loss and gradients --
        const BatchLoss bloss = total_loss(pred_l, y_l, pred_t, pred_s, tau,
                                           cfg.lambda_u, cfg.unsup_kind());
        if (!std::isfinite(bloss.value)) {
            throw std::runtime_error("ssl_train: loss diverged at step " +
                                     std::to_string(step));
        }
        grads.setZero();
        for (int i = 0; i < bl; ++i) {
            ts.student.backward(traces_l[i],
                                detail::head_backward(outs_l[i], bloss.grad_labeled[i], cfg),
                                &grads);
        }
        std::vector<FilterRecord> step_log(bu);
        double batch_cov = 0.0;
        for (int i = 0; i < bu; ++i) {
            const double gn = bloss.grad_unlabeled[i].norm();
            step_log[i] = FilterRecord{bloss.decisions[i].entropy, gn,
                                       bloss.decisions[i].passed};
            if (bloss.decisions[i].passed) batch_cov += 1.0;
            if (gn > 0.0) {
                ts.student.backward(
                    traces_s[i],
                    detail::head_backward(outs_s[i], bloss.grad_unlabeled[i], cfg), &grads);
            }
        }
        res.filter_log.push_back(std::move(step_log));
        res.step_coverage.push_back(batch_cov / bu);

        ts.student.sgd_step(grads, cfg.learning_rate);
        ts.ema_update();
        if ((step + 1) % cfg.snapshot_every == 0) snapshot(step + 1);
    }

    res.student = ts.student;
    res.teacher = ts.teacher;
    res.final_report = evaluate(ts.student, data.test, cfg);
    return res;
}

}  // namespace so3fm
