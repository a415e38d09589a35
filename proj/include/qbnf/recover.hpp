#pragma once

#include <map>
#include <string>
#include <vector>

#include "qbnf/floquet.hpp"
#include "qbnf/nf.hpp"
#include "qbnf/wave.hpp"

namespace qbnf {

/// Finite sum  sum_m coeff_m e^{z omega_m}, with the provenance exponent
/// vector beta of each frequency (omega = <beta + 1/2, X>).
struct ExpTerm {
    Complex freq;
    Complex coeff;
    std::vector<int> beta;
};
struct ExponentialPolynomial {
    std::vector<ExpTerm> terms;
};

struct FrequencyLattice {
    int k = 0;
    int clearing_power = 0;                 // k + 2
    std::vector<std::vector<int>> betas;    // all beta in {0..k+2}^lines
    std::vector<Complex> freqs;             // <beta + 1/2, X>
    double min_gap = 0.0;                   // smallest pairwise distance found
    std::string near_collisions;            // diagnostics
};

FrequencyLattice clear_denominators(int k, const FloquetClassification& Fl,
                                    double gap_tol = 1e-6);

struct FitResult {
    ExponentialPolynomial poly;
    double condition_number = 0.0;
    double residual = 0.0;
    bool used_negative_window = false;
};

/// Least-squares solve of the generalized Vandermonde system e^{N omega_m}.
/// samples: (N, cleared value).  Throws IllConditioned above cond_max.
FitResult fit_exponential_polynomial(const std::vector<std::pair<int, Complex>>& samples,
                                     const FrequencyLattice& lattice, double cond_max = 1e10);

/// Top-degree-down recovery of the derivative polynomial from the fitted
/// coefficients; undoes the half shift at the end.
DerivativePolynomial peel_coefficients(const ExponentialPolynomial& ep, int k,
                                       const FloquetClassification& Fl,
                                       DerivConvention conv = DerivConvention::UniformD,
                                       double residual_tol = 1e-6);

struct RecoveryProblem {
    int k_max = 0;
    FloquetClassification Fl;  // Floquet data assumed known
    double L = 1.0;            // geodesic length (part of the known data)
    std::map<int, std::vector<std::pair<int, Complex>>> samples;  // k -> (N, a_{gamma^N k})
    double div_tol = kDivTol;
    double cond_max = 1e10;
    DerivConvention conv = DerivConvention::UniformD;
};

struct RecoveryResult {
    std::vector<DerivativePolynomial> Fk;      // k = 0..k_max
    std::vector<ActionPolynomial> ptilde;      // recovered ptilde_1..k_max+1
    std::vector<double> fit_conditions;
    std::vector<double> fit_residuals;
    std::string diagnostics;
};

RecoveryResult recover_normal_form(const RecoveryProblem& problem);

/// Window size used when generating forward samples for recovery.
int recovery_window(int k, const FloquetClassification& Fl);

/// Forward samples a_{gamma^N, k} for N = 1..window (iterate values).
std::vector<std::pair<int, Complex>> forward_samples(int k, const NormalFormResult& nf,
                                                     const FloquetClassification& Fl, int window,
                                                     DerivConvention conv = DerivConvention::UniformD);

}  // namespace qbnf
