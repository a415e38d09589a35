#pragma once

#include <string>
#include <vector>

#include "qbnf/action.hpp"
#include "qbnf/expansion.hpp"
#include "qbnf/floquet.hpp"
#include "qbnf/weyl.hpp"

namespace qbnf {

struct NfOptions {
    double div_tol = kDivTol;
    double tol_homo = kTolHomo;
    double prune = 1e-15;
};

struct DivisorUse {
    std::vector<int> net;  // signed exponent vector, one entry per eigen line
    int freq = 0;
    double modulus = 0.0;  // |1 - e^{eps}|, the twisted divisor size
};

struct HomologicalStep {
    int k = 0;                      // the h^{k/2} step
    SymbolPolynomial Q;             // generator, model coordinates
    ActionPolynomial f;             // extracted diagonal (even steps only)
    double backsub_residual = 0.0;  // defining equation residual
    std::vector<DivisorUse> divisors;
};

struct NormalFormResult {
    FloquetClassification F;
    double L = 0;
    int k_max = 0;
    std::vector<ActionPolynomial> f;                    // f_0 .. f_kmax
    std::vector<ActionPolynomial> p;                    // p_1 .. p_{kmax+1}
    std::vector<std::vector<ActionPolynomial>> p_homog; // homogeneous parts of each p_k
    std::vector<ActionPolynomial> ptilde;               // ptilde_1 .. ptilde_{kmax+1}
    std::vector<HomologicalStep> steps;
    double max_backsub_residual = 0.0;
    double verification_residual = 0.0;
    double max_f_imag = 0.0;
    std::string ordering_table;

    std::string serialize() const;
};

/// Signed net exponent vector of an eigen-coordinate monomial (one entry per
/// eigen line: elliptic, hyperbolic, then two per loxodromic block).
std::vector<int> monomial_net(const FloquetClassification& F, const MonoKey& key);

/// Eigenvalue of the bracket with the model Hamiltonian on that monomial.
Complex net_eigenvalue(const FloquetClassification& F, const std::vector<int>& net);

/// Express a diagonal, frequency-zero, eigen-coordinate symbol as a
/// polynomial in the quantized actions (exact inversion of the Weyl-ordering
/// table).  Raises NonActionDiagonal on non-diagonal input.
ActionPolynomial diagonal_symbol_to_action(const FloquetClassification& F, double L,
                                           const SymbolPolynomial& S_eigen);

/// Documented Weyl-ordering constants: symbol of each action monomial.
std::string ordering_table_dump(const FloquetClassification& F, double L, int max_degree);

/// One homological step on a given expansion term (odd transverse parity).
HomologicalStep solve_odd_step(const SymbolPolynomial& D_half, const FloquetClassification& F,
                               double L, const NfOptions& opts = {});
/// Even step: off-diagonal solve plus extraction of the action polynomial.
HomologicalStep solve_even_step(const SymbolPolynomial& D_even, const FloquetClassification& F,
                                double L, const NfOptions& opts = {});

/// The full iteration: consumes the model expansion, returns f_j for
/// j <= k_max together with diagnostics and the verification pass.
NormalFormResult run_normal_form(const SemiclassicalExpansion& model,
                                 const FloquetClassification& F, double L, int k_max,
                                 const NfOptions& opts = {});

/// Enrich a result with p_k, the homogeneous parts and the ptilde_k used by
/// the wave-invariant formula.
void regroup_homogeneous(NormalFormResult& nf);

}  // namespace qbnf
