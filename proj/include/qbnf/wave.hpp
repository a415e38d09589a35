#pragma once

#include <string>
#include <vector>

#include "qbnf/action.hpp"
#include "qbnf/floquet.hpp"
#include "qbnf/nf.hpp"

namespace qbnf {

/// Convention for the derivative operators acting on the character.
/// UniformD: every action insertion is (1/i) d/d(parameter) — the default.
/// Paper: plain d/d(parameter) for the hyperbolic and loxodromic radial
/// classes, (1/i) d for the angle classes.
enum class DerivConvention { UniformD, Paper };

/// Constant-coefficient polynomial in the per-eigen-line derivative
/// operators V_j (one variable per block exponent: p elliptic, q hyperbolic,
/// 2 per loxodromic block).  In the UniformD convention the coefficients in
/// the loxodromic slots are exactly the C_{k;abc1c2} of the wave-invariant
/// formula.
struct DerivativePolynomial {
    int k = 0;
    ActionPolynomial P;  // variables are the V_j

    int nlines() const { return P.nvars(); }
};

/// Substitute action variables by derivative variables (and back).
ActionPolynomial action_to_derivative(const FloquetClassification& F, const ActionPolynomial& P,
                                      DerivConvention conv);
ActionPolynomial derivative_to_action(const FloquetClassification& F, const ActionPolynomial& P,
                                      DerivConvention conv);

/// i-factors per eigen line for the chosen convention.
std::vector<Complex> line_gammas(const FloquetClassification& F, DerivConvention conv);

/// The per-block symbolic calculus on reciprocals u = (1 - e^X)^{-1}:
/// evaluation of derivative polynomials against the metaplectic character.
struct CharacterFunction {
    std::vector<Complex> X;       // block exponents
    std::vector<Complex> gamma;   // i-factors per line
    bool half_shifted = false;    // use the half-shifted operators

    static CharacterFunction make(const FloquetClassification& F, DerivConvention conv,
                                  bool shift = false);

    /// Value of  P(V) [ prod_j e^{z X_j / 2} (1 - e^{z X_j})^{-1} ]  at the
    /// given z (z = N for iterates).
    Complex apply(const ActionPolynomial& P, double z, double div_tol = kDivTol) const;

    /// Plain character value at z.
    Complex character_value(double z) const;
};

/// The n^{-1} Laurent coefficient of the trace expansion: the operator
/// applied to the character to produce the k-th wave invariant.  Requires
/// ptilde_1 .. ptilde_{k+1} in nf.
DerivativePolynomial build_F(int k, const NormalFormResult& nf,
                             DerivConvention conv = DerivConvention::UniformD);

/// Apply a derivative polynomial to the character of Fl at iterate z = 1.
Complex apply_derivatives(const DerivativePolynomial& Fk, const FloquetClassification& Fl,
                          bool shift = false,
                          DerivConvention conv = DerivConvention::UniformD, double z = 1.0);

PhasedComplex wave_invariant(int k, const NormalFormResult& nf, const FloquetClassification& Fl,
                             double L, DerivConvention conv = DerivConvention::UniformD);

std::vector<Complex> iterate_values(int k, const NormalFormResult& nf,
                                    const FloquetClassification& Fl,
                                    const std::vector<int>& N_list,
                                    DerivConvention conv = DerivConvention::UniformD,
                                    double div_tol = kDivTol);

}  // namespace qbnf
