#pragma once

#include <cmath>
#include <functional>

#include "qbnf/errors.hpp"
#include "qbnf/types.hpp"

namespace qbnf {

/// Adaptive Dormand-Prince 5(4) for linear systems  U' = A(s) U.
/// The state is a matrix so fundamental solutions integrate in one pass.
inline Mat integrate_linear(const std::function<Mat(double)>& A, Mat U0, double s0, double s1,
                            double tol = kIntTol) {
    if (s1 == s0) return U0;
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double dir = (s1 > s0) ? 1.0 : -1.0;
    double s = s0;
    double h = dir * std::min(std::abs(s1 - s0), 0.05 * (1 + std::abs(s1 - s0)));
    Mat U = std::move(U0);
    const double hmin = std::abs(s1 - s0) * 1e-15;
    int steps = 0;

    while (dir * (s1 - s) > 0) {
        if (++steps > 2000000) throw IntegratorFailure("step count exceeded");
        if (dir * (s + h - s1) > 0) h = s1 - s;

        const Mat k1 = A(s) * U;
        const Mat k2 = A(s + c2 * h) * (U + h * (a21 * k1));
        const Mat k3 = A(s + c3 * h) * (U + h * (a31 * k1 + a32 * k2));
        const Mat k4 = A(s + c4 * h) * (U + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Mat k5 = A(s + c5 * h) * (U + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Mat k6 =
            A(s + h) * (U + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Mat U5 = U + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Mat k7 = A(s + h) * U5;
        const Mat err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double scale = tol * std::max(1.0, std::max(U.cwiseAbs().maxCoeff(),
                                                          U5.cwiseAbs().maxCoeff()));
        const double emax = err.cwiseAbs().maxCoeff() / scale;
        if (emax <= 1.0) {
            s += h;
            U = U5;
        }
        const double fac = std::clamp(0.9 * std::pow(std::max(emax, 1e-16), -0.2), 0.2, 5.0);
        h *= fac;
        if (std::abs(h) < hmin) throw IntegratorFailure("step size underflow");
    }
    return U;
}

/// Fixed-step classical RK4; test oracle, intentionally a different scheme.
inline Mat integrate_linear_rk4(const std::function<Mat(double)>& A, Mat U0, double s0, double s1,
                                int steps) {
    const double h = (s1 - s0) / steps;
    Mat U = std::move(U0);
    for (int i = 0; i < steps; ++i) {
        const double s = s0 + i * h;
        const Mat k1 = A(s) * U;
        const Mat k2 = A(s + h / 2) * (U + (h / 2) * k1);
        const Mat k3 = A(s + h / 2) * (U + (h / 2) * k2);
        const Mat k4 = A(s + h) * (U + h * k3);
        U += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return U;
}

}  // namespace qbnf
