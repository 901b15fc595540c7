#pragma once

#include <cmath>

namespace so3fm {

// Exponentially scaled modified Bessel functions of the first kind,
//   i0_scaled(x) = exp(-|x|) I0(x),   i1_scaled(x) = exp(-|x|) I1(x).
// The scaled form stays in [0, 1] for all x, which lets the quadrature in
// quadrature.hpp keep every exponential factor explicit. Both are evaluated
// with Horner-style polynomials: the ascending power series below a switch
// point and the large-argument asymptotic series above it. Worst-case
// relative error is near the switch point and is ~1e-13, well inside the
// 1e-8 budget allotted to the Bessel evaluations.

namespace detail {
inline constexpr double kBesselSwitch = 15.0;

// Ascending series: I0(x) = sum_k (x^2/4)^k / (k!)^2,
//                   I1(x) = (x/2) sum_k (x^2/4)^k / (k! (k+1)!).
inline double i0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

inline double i1_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * (k + 1));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return 0.5 * x * sum;
}

// Asymptotic series: I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k c_k with
// c_0 = 1, c_k = c_{k-1} * ((2k-1)^2 - 4 nu^2) / (8 x k). Truncated at the
// smallest term; at x = 15 that is already below 1e-13 relative.
inline double i_asym_scaled(double x, double mu /* = 4 nu^2 */) {
    double c = 1.0, sum = 1.0;
    double prev = std::fabs(c);
    for (int k = 1; k <= 24; ++k) {
        const double f = (2.0 * k - 1.0) * (2.0 * k - 1.0) - mu;
        c *= f / (8.0 * x * k);
        const double a = std::fabs(c);
        if (a > prev) break;  // series started diverging
        sum += c;
        prev = a;
        if (a < 1e-18 * std::fabs(sum)) break;
    }
    return sum / std::sqrt(2.0 * M_PI * x);
}
}  // namespace detail

// Even in x.
inline double i0_scaled(double x) {
    const double ax = std::fabs(x);
    if (ax <= detail::kBesselSwitch) {
        return std::exp(-ax) * detail::i0_series(ax);
    }
    return detail::i_asym_scaled(ax, 0.0);
}

// Odd in x.
inline double i1_scaled(double x) {
    const double ax = std::fabs(x);
    double v;
    if (ax <= detail::kBesselSwitch) {
        v = std::exp(-ax) * detail::i1_series(ax);
    } else {
        v = detail::i_asym_scaled(ax, 4.0);
    }
    return x < 0.0 ? -v : v;
}

}  // namespace so3fm
