#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "so3fm/rng.hpp"
#include "so3fm/so3.hpp"

namespace so3fm {

// Small feed-forward network: input -> hidden -> hidden -> output, tanh
// between layers, linear output. Written with explicit reverse-mode
// backpropagation so the whole gradient chain stays auditable against
// finite differences. tanh (rather than a kinked nonlinearity) keeps those
// checks clean.
class Regressor {
public:
    Regressor(int input_dim, int hidden_dim, int output_dim, Rng& rng)
        : dims_{input_dim, hidden_dim, hidden_dim, output_dim} {
        for (int l = 0; l < 3; ++l) {
            const int fin = dims_[l], fout = dims_[l + 1];
            // Last layer starts near zero so the initial predictions are
            // close to the uniform distribution (A ~ 0).
            const double scale = (l == 2 ? 0.01 : 1.0) / std::sqrt(static_cast<double>(fin));
            Eigen::MatrixXd w(fout, fin);
            for (int i = 0; i < fout; ++i)
                for (int j = 0; j < fin; ++j) w(i, j) = scale * rng.normal();
            w_.push_back(std::move(w));
            b_.emplace_back(Eigen::VectorXd::Zero(fout));
        }
    }

    int input_dim() const { return dims_[0]; }
    int output_dim() const { return dims_[3]; }

    // Activations cached by forward() for the matching backward() call.
    struct Trace {
        Eigen::VectorXd x, h1, h2;
    };

    Eigen::VectorXd forward(const Eigen::VectorXd& x, Trace* trace = nullptr) const {
        if (x.size() != dims_[0]) {
            throw std::invalid_argument("Regressor::forward: input size mismatch");
        }
        const Eigen::VectorXd h1 = (w_[0] * x + b_[0]).array().tanh();
        const Eigen::VectorXd h2 = (w_[1] * h1 + b_[1]).array().tanh();
        Eigen::VectorXd out = w_[2] * h2 + b_[2];
        if (trace) *trace = Trace{x, h1, h2};
        return out;
    }

    struct Grads {
        std::vector<Eigen::MatrixXd> w;
        std::vector<Eigen::VectorXd> b;

        void setZero() {
            for (auto& m : w) m.setZero();
            for (auto& v : b) v.setZero();
        }
        void add_scaled(const Grads& g, double c) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] += c * g.w[i];
                b[i] += c * g.b[i];
            }
        }
    };

    Grads zero_grads() const {
        Grads g;
        for (int l = 0; l < 3; ++l) {
            g.w.emplace_back(Eigen::MatrixXd::Zero(dims_[l + 1], dims_[l]));
            g.b.emplace_back(Eigen::VectorXd::Zero(dims_[l + 1]));
        }
        return g;
    }

    // Accumulates d(loss)/d(parameters) for one sample given the upstream
    // gradient w.r.t. the network output.
    void backward(const Trace& t, const Eigen::VectorXd& grad_out, Grads* accum) const {
        const Eigen::VectorXd g2 =
            (w_[2].transpose() * grad_out).cwiseProduct(
                (1.0 - t.h2.array().square()).matrix());
        const Eigen::VectorXd g1 =
            (w_[1].transpose() * g2).cwiseProduct(
                (1.0 - t.h1.array().square()).matrix());
        accum->w[2] += grad_out * t.h2.transpose();
        accum->b[2] += grad_out;
        accum->w[1] += g2 * t.h1.transpose();
        accum->b[1] += g2;
        accum->w[0] += g1 * t.x.transpose();
        accum->b[0] += g1;
    }

    void sgd_step(const Grads& g, double lr) {
        for (int l = 0; l < 3; ++l) {
            w_[l] -= lr * g.w[l];
            b_[l] -= lr * g.b[l];
        }
    }

    // teacher <- decay * teacher + (1 - decay) * student, elementwise.
    void ema_from(const Regressor& student, double decay) {
        for (int l = 0; l < 3; ++l) {
            w_[l] = decay * w_[l] + (1.0 - decay) * student.w_[l];
            b_[l] = decay * b_[l] + (1.0 - decay) * student.b_[l];
        }
    }

    std::vector<double> flatten() const {
        std::vector<double> out;
        for (int l = 0; l < 3; ++l) {
            out.insert(out.end(), w_[l].data(), w_[l].data() + w_[l].size());
            out.insert(out.end(), b_[l].data(), b_[l].data() + b_[l].size());
        }
        return out;
    }

    void unflatten(const std::vector<double>& flat) {
        std::size_t pos = 0;
        for (int l = 0; l < 3; ++l) {
            if (pos + w_[l].size() + b_[l].size() > flat.size()) {
                throw std::invalid_argument("Regressor::unflatten: buffer too small");
            }
            std::copy(flat.begin() + pos, flat.begin() + pos + w_[l].size(), w_[l].data());
            pos += w_[l].size();
            std::copy(flat.begin() + pos, flat.begin() + pos + b_[l].size(), b_[l].data());
            pos += b_[l].size();
        }
        if (pos != flat.size()) {
            throw std::invalid_argument("Regressor::unflatten: buffer size mismatch");
        }
    }

    std::array<int, 4> dims() const { return dims_; }

    Eigen::MatrixXd& weight(int l) { return w_[l]; }
    const Eigen::MatrixXd& weight(int l) const { return w_[l]; }
    Eigen::VectorXd& bias(int l) { return b_[l]; }
    const Eigen::VectorXd& bias(int l) const { return b_[l]; }

private:
    std::array<int, 4> dims_;
    std::vector<Eigen::MatrixXd> w_;
    std::vector<Eigen::VectorXd> b_;
};

// Student plus its exponential-moving-average teacher. The teacher is never
// gradient-updated; its parameters move only through ema_update.
struct TeacherStudent {
    Regressor student;
    Regressor teacher;
    double ema_decay = 0.999;

    TeacherStudent(const Regressor& pretrained, double decay)
        : student(pretrained), teacher(pretrained), ema_decay(decay) {
        if (!(decay > 0.0 && decay < 1.0) && decay != 0.0 && decay != 1.0) {
            throw std::invalid_argument("TeacherStudent: ema_decay out of range");
        }
    }

    void ema_update() { teacher.ema_from(student, ema_decay); }
};

// Reshape the 9 network outputs row-major into the distribution parameter.
inline Mat3 output_to_a(const Eigen::VectorXd& out) {
    Mat3 a;
    a << out[0], out[1], out[2], out[3], out[4], out[5], out[6], out[7], out[8];
    return a;
}

inline Eigen::VectorXd a_grad_to_output(const Mat3& g) {
    Eigen::VectorXd v(9);
    v << g(0, 0), g(0, 1), g(0, 2), g(1, 0), g(1, 1), g(1, 2), g(2, 0), g(2, 1), g(2, 2);
    return v;
}

}  // namespace so3fm
