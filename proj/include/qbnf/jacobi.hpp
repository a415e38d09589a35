#pragma once

#include <map>
#include <vector>

#include "qbnf/floquet.hpp"
#include "qbnf/trig.hpp"
#include "qbnf/types.hpp"

namespace qbnf {

/// Periodic curvature data of a closed geodesic: K(s) is symmetric n x n with
/// truncated trigonometric dependence on s (period L), plus the holonomy of
/// the parallel normal frame.
struct CurvatureLoop {
    int n = 0;
    double L = 0;
    std::map<int, CMat> K_modes;  // K(s) = sum_k K_modes[k] e^{2 pi i k s / L}
    Mat holonomy;                 // orthogonal n x n, defaults to identity

    Mat K(double s) const;
    void validate() const;

    static CurvatureLoop constant(int n, double L, const Mat& K0);
    /// n = 1 Hill loop  K(s) = a + b cos(2 pi s / L).
    static CurvatureLoop hill(double L, double a, double b);
};

/// Evolve the Jacobi system (Y, Ydot)' = [[0, I], [-K(s), 0]] (Y, Ydot).
Vec integrate_jacobi(const CurvatureLoop& loop, const Vec& y0, double s0, double s1,
                     double int_tol = kIntTol);

/// Fundamental solution samples of the physical Jacobi flow on a uniform grid
/// s_i = i L / N_s, i = 0..N_s (the last entry is the period map).
std::vector<Mat> jacobi_fundamental_grid(const CurvatureLoop& loop, int N_s,
                                         double int_tol = kIntTol);

/// Linear Poincare map in the weightless (x, xi) = (y / L, L eta) variables,
/// composed with the holonomy transpose.
SymplecticMatrix monodromy(const CurvatureLoop& loop, double int_tol = kIntTol,
                           double tol_symp = 1e-8);

/// Symplectic moving frame built from the normalized Jacobi eigenfields in
/// weightless variables: W(s) = S Phi(s) S^{-1} E with S = diag(I/L, L I) and
/// E the classification frame of the monodromy.
struct WronskianFrame {
    int n = 0;
    double L = 0;
    int N_s = 0;
    std::vector<Mat> samples;  // W(s_i), i = 0..N_s-1
    Mat normal_form;           // E^{-1} P E: right monodromy factor over one period
    Mat frame0;                // E = W(0)
    Mat generator;             // Xi with exp(Xi) = normal_form (no negative pairs)
    bool has_negative_pair = false;

    /// Entries of W are twisted-periodic; the stored trigonometric modes hold
    /// the periodic part  W(s) exp(-(s/L) Xi)  so interpolation is spectral.
    std::vector<std::vector<TrigSeries>> periodic_modes;  // [row][col]

    Mat eval(double s) const;

    double max_symplectic_residual() const;
    /// max over grid strides of || W(s + L) - W(s) * normal_form ||, with the
    /// advanced frame recomputed by integration (holonomy = identity case).
    double monodromy_residual(const CurvatureLoop& loop, double int_tol = kIntTol) const;
};

WronskianFrame build_wronskian(const CurvatureLoop& loop, const FloquetClassification& F,
                               int N_s = 256, double int_tol = kIntTol);

}  // namespace qbnf
