#pragma once

#include <vector>

#include "qbnf/action.hpp"
#include "qbnf/symplectic.hpp"
#include "qbnf/types.hpp"

namespace qbnf {

/// A validated real symplectic matrix in the (x, xi) layout.
struct SymplecticMatrix {
    int n = 0;
    Mat m;

    SymplecticMatrix() = default;
    SymplecticMatrix(int n_, Mat m_, double tol_symp = kTolSymp) : n(n_), m(std::move(m_)) {
        if (m.rows() != 2 * n || m.cols() != 2 * n)
            throw DimensionMismatch("SymplecticMatrix: size mismatch");
        const double r = symplectic_residual(m);
        if (r > tol_symp * std::max(1.0, m.cwiseAbs().maxCoeff()))
            throw NotSymplectic("SymplecticMatrix: M^T J M - J residual " + std::to_string(r));
    }
};

enum class BlockKind { Elliptic, Hyperbolic, Loxodromic };

/// Spectral block data of a non-degenerate linear Poincare map.
/// Elliptic rotation angles are Krein-signed: alpha in (-pi,0) u (0,pi), and
/// the model block is always exp(alpha * J_2) in its frame columns.
struct FloquetClassification {
    int n = 0;
    int p = 0, q = 0, c = 0;
    std::vector<double> alpha;   // signed elliptic angles
    std::vector<double> lambda;  // positive hyperbolic rates
    std::vector<bool> neg_flags; // true for a pair {-e^{+-lambda}}
    std::vector<double> mu;      // positive loxodromic rates
    std::vector<double> nu;      // loxodromic angles in (0, pi)
    Mat frame;                   // 2n x 2n symplectic, model -> original coordinates
    CMat eigenbasis;             //복 eigenvectors, columns ordered e/h/ch then duals
    double reassembly_residual = 0.0;

    int num_actions() const { return p + q + 2 * c; }

    /// x-slot of the j-th block of the given kind (loxodromic blocks occupy
    /// the two consecutive slots starting at the returned index).
    int x_slot(BlockKind kind, int j) const {
        switch (kind) {
            case BlockKind::Elliptic: return j;
            case BlockKind::Hyperbolic: return p + j;
            default: return p + q + 2 * j;
        }
    }

    /// One complex exponent per selected eigenvalue representative:
    /// i*alpha_j, lambda_j (+ i*pi for negative pairs), mu_j +- i nu_j.
    /// These drive the character, the iterate values and the recovery lattice.
    std::vector<Complex> block_exponents() const;

    /// Kind of each action slot in order.
    std::vector<BlockKind> action_kinds() const;
};

struct ResonanceReport {
    int order_checked = 0;
    double margin = 0.0;
    std::vector<int> worst_multiindex;  // signed net exponents, one per block line
};

FloquetClassification classify_poincare(const SymplecticMatrix& M, double tol_eig = kTolEig,
                                        double tol_symp = kTolSymp);

/// Minimum of |1 - prod rho_i^{k_i}| over signed integer vectors 0 < |k| <= M_max
/// drawn on the representative exponents (and implicitly their inverses through
/// the sign).  Trivial dual-pair combinations are excluded by construction.
ResonanceReport resonance_margin(const FloquetClassification& F, int M_max);

/// H = sum alpha_j I^e_j + sum lambda_j I^h_j + sum (mu_j I^Re_j + nu_j I^Im_j).
/// Time-1 Hamilton flow of H reproduces the map in frame coordinates
/// (up to sign for negative hyperbolic pairs).
ActionPolynomial quadratic_hamiltonian(const FloquetClassification& F, double L = 1.0);

/// Block normal form matrix in model coordinates: exp of the Hamilton matrix
/// of quadratic_hamiltonian, with the sign flip on negative pairs.
Mat model_normal_form_matrix(const FloquetClassification& F);

/// Hamilton matrix (d/dt generator) of an action-coefficient list on the
/// model layout of F.
Mat model_hamilton_matrix(const FloquetClassification& F, const std::vector<double>& coeffs);

/// Metaplectic character  prod e^{X_j/2} / (1 - e^{X_j}) over block exponents,
/// phase defined modulo i^sigma only.
PhasedComplex character(const FloquetClassification& F);

/// |det(I - M)|^{-1/2}; oracle for |character|.
double character_direct(const Mat& M);

/// Complex change of variables to eigen-coordinates: row i of the returned
/// matrix expresses the i-th eigen coordinate functional in terms of (x, xi).
/// Position-like rows: z_j, y_j, (w_j, wbar_j); momentum-like rows follow.
CMat eigen_coordinate_matrix(const FloquetClassification& F);

}  // namespace qbnf
