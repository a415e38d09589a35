#pragma once

#include <random>

#include "qbnf/errors.hpp"
#include "qbnf/types.hpp"

namespace qbnf {

/// Phase-space layout: u = (x_1..x_n, xi_1..xi_n) with the symplectic form
/// omega(u,v) = u^T J v,  J = [[0, I],[-I, 0]].
inline Mat standard_J(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.block(0, n, n, n) = Mat::Identity(n, n);
    J.block(n, 0, n, n) = -Mat::Identity(n, n);
    return J;
}

inline double omega(const Vec& u, const Vec& v) {
    const int n = static_cast<int>(u.size()) / 2;
    double w = 0;
    for (int i = 0; i < n; ++i) w += u(i) * v(n + i) - u(n + i) * v(i);
    return w;
}

inline Complex omega_c(const CVec& u, const CVec& v) {
    const int n = static_cast<int>(u.size()) / 2;
    Complex w = 0;
    for (int i = 0; i < n; ++i) w += u(i) * v(n + i) - u(n + i) * v(i);
    return w;
}

inline double symplectic_residual(const Mat& M) {
    const int n = static_cast<int>(M.rows()) / 2;
    const Mat J = standard_J(n);
    return (M.transpose() * J * M - J).cwiseAbs().maxCoeff();
}

inline Complex symplectic_residual_c(const CMat& M) {
    const int n = static_cast<int>(M.rows()) / 2;
    Mat J = standard_J(n);
    return (M.transpose() * J.cast<Complex>() * M - J.cast<Complex>()).cwiseAbs().maxCoeff();
}

/// Hamilton matrix J*A of the quadratic form H(u) = (1/2) u^T A u.
inline Mat hamilton_matrix_of(const Mat& A) {
    const int n = static_cast<int>(A.rows()) / 2;
    return standard_J(n) * A;
}

/// Random symplectic matrix exp(J*A) with A symmetric, entries ~ U(-scale, scale).
template <class Rng>
Mat random_symplectic(int n, Rng& rng, double scale = 0.8) {
    std::uniform_real_distribution<double> U(-scale, scale);
    Mat A(2 * n, 2 * n);
    for (int i = 0; i < 2 * n; ++i)
        for (int j = i; j < 2 * n; ++j) A(i, j) = A(j, i) = U(rng);
    Mat X = hamilton_matrix_of(A);
    // scaling-and-squaring exponential; the inputs are mild so few squarings occur
    int sq = 0;
    double nrm = X.cwiseAbs().sum();
    while (nrm > 0.5) { X *= 0.5; nrm *= 0.5; ++sq; }
    Mat E = Mat::Identity(2 * n, 2 * n), term = Mat::Identity(2 * n, 2 * n);
    for (int k = 1; k <= 18; ++k) {
        term = term * X / double(k);
        E += term;
    }
    for (int i = 0; i < sq; ++i) E = E * E;
    return E;
}

inline Mat matrix_exp(Mat X) {
    int sq = 0;
    double nrm = X.cwiseAbs().sum();
    while (nrm > 0.5) { X *= 0.5; nrm *= 0.5; ++sq; }
    const int d = static_cast<int>(X.rows());
    Mat E = Mat::Identity(d, d), term = Mat::Identity(d, d);
    for (int k = 1; k <= 18; ++k) {
        term = term * X / double(k);
        E += term;
    }
    for (int i = 0; i < sq; ++i) E = E * E;
    return E;
}

}  // namespace qbnf
