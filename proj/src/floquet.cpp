#include "qbnf/floquet.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace qbnf {

namespace {

struct EllipticBlock {
    double alpha;  // Krein-signed
    CVec v;        // scaled so  omega(Re v, Im v) = 1
};
struct HyperbolicBlock {
    double lambda;
    bool neg;
    Vec a, b;  // omega(a, b) = 1
};
struct LoxodromicBlock {
    double mu, nu;
    CVec A, B;  // columns a1 - i a2 and b1 + i b2, omega_c(A,B) = 2
};

/// Deterministic phase fix: rotate so the entry of largest modulus is real
/// positive (ties broken by index order).
Complex phase_of_largest(const CVec& v) {
    int best = 0;
    double bm = -1;
    for (int i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > bm + 1e-14) {
            bm = std::abs(v(i));
            best = i;
        }
    Complex ph = v(best) / std::abs(v(best));
    return ph;
}

Vec realify(const CVec& v) {
    const Complex ph = phase_of_largest(v);
    CVec w = v / ph;
    return w.real();
}

}  // namespace

std::vector<Complex> FloquetClassification::block_exponents() const {
    std::vector<Complex> X;
    for (int j = 0; j < p; ++j) X.emplace_back(0.0, alpha[j]);
    for (int j = 0; j < q; ++j) X.emplace_back(lambda[j], neg_flags[j] ? M_PI : 0.0);
    for (int j = 0; j < c; ++j) {
        X.emplace_back(mu[j], nu[j]);
        X.emplace_back(mu[j], -nu[j]);
    }
    return X;
}

std::vector<BlockKind> FloquetClassification::action_kinds() const {
    std::vector<BlockKind> k;
    for (int j = 0; j < p; ++j) k.push_back(BlockKind::Elliptic);
    for (int j = 0; j < q; ++j) k.push_back(BlockKind::Hyperbolic);
    for (int j = 0; j < c; ++j) {
        k.push_back(BlockKind::Loxodromic);
        k.push_back(BlockKind::Loxodromic);
    }
    return k;
}

FloquetClassification classify_poincare(const SymplecticMatrix& M, double tol_eig,
                                        double tol_symp) {
    const int n = M.n;
    const int N = 2 * n;
    Eigen::EigenSolver<Mat> es(M.m);
    if (es.info() != Eigen::Success) throw DegenerateSpectrum("eigensolver failed");
    CVec rho = es.eigenvalues();
    CMat V = es.eigenvectors();

    for (int i = 0; i < N; ++i) {
        if (std::abs(rho(i) - 1.0) < tol_eig || std::abs(rho(i) + 1.0) < tol_eig)
            throw DegenerateSpectrum("eigenvalue within tolerance of +-1");
        for (int j = i + 1; j < N; ++j)
            if (std::abs(rho(i) - rho(j)) < tol_eig)
                throw DegenerateSpectrum("multiple eigenvalue within tolerance");
    }

    std::vector<bool> used(N, false);
    auto find_nearest = [&](Complex target) {
        int best = -1;
        double bd = 1e300;
        for (int i = 0; i < N; ++i) {
            if (used[i]) continue;
            const double d = std::abs(rho(i) - target);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        return best;
    };

    const double unit_tol = std::max(tol_eig, 1e-12);
    std::vector<EllipticBlock> ell;
    std::vector<HyperbolicBlock> hyp;
    std::vector<LoxodromicBlock> lox;

    for (int i = 0; i < N; ++i) {
        if (used[i]) continue;
        const Complex r = rho(i);
        const double absr = std::abs(r);
        if (std::abs(absr - 1.0) < unit_tol) {
            if (r.imag() <= 0) continue;  // handled via the conjugate
            used[i] = true;
            const int ic = find_nearest(std::conj(r));
            if (ic < 0) throw DegenerateSpectrum("unpaired elliptic eigenvalue");
            used[ic] = true;

            CVec v = V.col(i);
            Complex w = omega_c(v, v.conjugate());  // = -2i * omega(Re v, Im v)
            double s = (w / Complex(0, -2.0)).real();
            double a = std::arg(r);
            if (s < 0) {
                v = v.conjugate();
                s = -s;
                a = -a;
            }
            v /= std::sqrt(s);
            v /= phase_of_largest(v);
            // re-normalize after the phase fix (only rounding-level changes)
            const double s2 = (omega_c(v, v.conjugate()) / Complex(0, -2.0)).real();
            v /= std::sqrt(s2);
            ell.push_back({a, v});
        } else if (std::abs(r.imag()) < unit_tol * std::max(1.0, absr) && absr > 1.0) {
            used[i] = true;
            const int iv = find_nearest(1.0 / r);
            if (iv < 0) throw DegenerateSpectrum("unpaired hyperbolic eigenvalue");
            used[iv] = true;

            Vec a = realify(V.col(i));
            Vec b0 = realify(V.col(iv));
            const double lam = std::log(absr);
            const bool neg = r.real() < 0;
            double pair = omega(a, b0);
            if (std::abs(pair) < 1e-12) throw DegenerateSpectrum("degenerate hyperbolic pairing");
            Vec b = b0 / pair;
            const double bal = std::sqrt(b.norm() / a.norm());
            a *= bal;
            b /= bal;
            hyp.push_back({lam, neg, a, b});
        } else if (absr > 1.0 && r.imag() > 0) {
            used[i] = true;
            const int i2 = find_nearest(std::conj(r));
            const int i3 = find_nearest(1.0 / r);
            const int i4 = find_nearest(1.0 / std::conj(r));
            if (i2 < 0 || i3 < 0 || i4 < 0) throw DegenerateSpectrum("incomplete loxodromic quartet");
            used[i2] = used[i3] = used[i4] = true;

            CVec A = V.col(i);
            CVec B = V.col(i3);
            const Complex pair = omega_c(A, B);
            if (std::abs(pair) < 1e-12) throw DegenerateSpectrum("degenerate loxodromic pairing");
            B *= 2.0 / pair;
            const Complex ph = phase_of_largest(A);
            A /= ph;
            B *= ph;  // omega_c(A,B) preserved: omega(tA, B/t) = omega(A,B)
            const double bal = std::sqrt(B.norm() / A.norm());
            A *= bal;
            B /= bal;
            lox.push_back({std::log(absr), std::arg(r), A, B});
        }
    }

    std::sort(ell.begin(), ell.end(),
              [](const auto& x, const auto& y) { return std::abs(x.alpha) < std::abs(y.alpha); });
    std::sort(hyp.begin(), hyp.end(),
              [](const auto& x, const auto& y) { return x.lambda < y.lambda; });
    std::sort(lox.begin(), lox.end(), [](const auto& x, const auto& y) {
        return x.mu != y.mu ? x.mu < y.mu : x.nu < y.nu;
    });

    FloquetClassification F;
    F.n = n;
    F.p = static_cast<int>(ell.size());
    F.q = static_cast<int>(hyp.size());
    F.c = static_cast<int>(lox.size());
    if (F.p + F.q + 2 * F.c != n)
        throw DegenerateSpectrum("block count mismatch: p+q+2c != n");

    F.frame = Mat::Zero(N, N);
    F.eigenbasis = CMat::Zero(N, N);
    int col = 0;
    auto place = [&](int slot, const Vec& xcol, const Vec& xicol) {
        F.frame.col(slot) = xcol;
        F.frame.col(n + slot) = xicol;
    };
    for (int j = 0; j < F.p; ++j) {
        F.alpha.push_back(ell[j].alpha);
        place(F.x_slot(BlockKind::Elliptic, j), ell[j].v.real(), ell[j].v.imag());
        F.eigenbasis.col(col++) = ell[j].v;
        F.eigenbasis.col(n + F.x_slot(BlockKind::Elliptic, j)) = ell[j].v.conjugate();
    }
    for (int j = 0; j < F.q; ++j) {
        F.lambda.push_back(hyp[j].lambda);
        F.neg_flags.push_back(hyp[j].neg);
        place(F.x_slot(BlockKind::Hyperbolic, j), hyp[j].a, hyp[j].b);
        F.eigenbasis.col(col++) = hyp[j].a.cast<Complex>();
        F.eigenbasis.col(n + F.x_slot(BlockKind::Hyperbolic, j)) = hyp[j].b.cast<Complex>();
    }
    for (int j = 0; j < F.c; ++j) {
        F.mu.push_back(lox[j].mu);
        F.nu.push_back(lox[j].nu);
        const int s0 = F.x_slot(BlockKind::Loxodromic, j);
        // A = a1 - i a2 spans the expanding position plane, B = b1 + i b2 the dual
        place(s0, lox[j].A.real(), lox[j].B.real());
        place(s0 + 1, -lox[j].A.imag(), lox[j].B.imag());
        F.eigenbasis.col(col++) = lox[j].A;
        F.eigenbasis.col(col++) = lox[j].A.conjugate();
        F.eigenbasis.col(n + s0) = lox[j].B;
        F.eigenbasis.col(n + s0 + 1) = lox[j].B.conjugate();
    }

    const double fr = symplectic_residual(F.frame);
    if (fr > std::max(1e-7, tol_symp * 1e3) * std::max(1.0, F.frame.cwiseAbs().maxCoeff()))
        throw NotSymplectic("classification frame residual " + std::to_string(fr));

    const Mat NF = model_normal_form_matrix(F);
    F.reassembly_residual =
        (F.frame * NF * F.frame.inverse() - M.m).cwiseAbs().maxCoeff();
    return F;
}

ResonanceReport resonance_margin(const FloquetClassification& F, int M_max) {
    const auto X = F.block_exponents();
    const int m = static_cast<int>(X.size());
    ResonanceReport rep;
    rep.order_checked = M_max;
    rep.margin = 1e300;

    std::vector<int> k(m, 0);
    // depth-first over signed vectors with |k|_1 <= M_max
    std::function<void(int, int, Complex)> rec = [&](int pos, int budget, Complex acc) {
        if (pos == m) {
            bool zero = std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
            if (zero) return;
            const double d = std::abs(1.0 - std::exp(acc));
            if (d < rep.margin) {
                rep.margin = d;
                rep.worst_multiindex = k;
            }
            return;
        }
        for (int v = -budget; v <= budget; ++v) {
            k[pos] = v;
            rec(pos + 1, budget - std::abs(v), acc + double(v) * X[pos]);
        }
        k[pos] = 0;
    };
    rec(0, M_max, Complex(0));
    return rep;
}

ActionPolynomial quadratic_hamiltonian(const FloquetClassification& F, double L) {
    if (L <= 0) throw Error("quadratic_hamiltonian: L must be positive");
    const int nv = F.num_actions();
    ActionPolynomial H(nv);
    int s = 0;
    for (int j = 0; j < F.p; ++j) H += ActionPolynomial::variable(nv, s++) * Complex(F.alpha[j]);
    for (int j = 0; j < F.q; ++j) H += ActionPolynomial::variable(nv, s++) * Complex(F.lambda[j]);
    for (int j = 0; j < F.c; ++j) {
        H += ActionPolynomial::variable(nv, s++) * Complex(F.mu[j]);
        H += ActionPolynomial::variable(nv, s++) * Complex(F.nu[j]);
    }
    return H;
}

Mat model_hamilton_matrix(const FloquetClassification& F, const std::vector<double>& coeffs) {
    const int n = F.n;
    Mat X = Mat::Zero(2 * n, 2 * n);
    int s = 0;
    for (int j = 0; j < F.p; ++j, ++s) {
        const int i = F.x_slot(BlockKind::Elliptic, j);
        X(i, n + i) += coeffs[s];
        X(n + i, i) -= coeffs[s];
    }
    for (int j = 0; j < F.q; ++j, ++s) {
        const int i = F.x_slot(BlockKind::Hyperbolic, j);
        X(i, i) += coeffs[s];
        X(n + i, n + i) -= coeffs[s];
    }
    for (int j = 0; j < F.c; ++j, s += 2) {
        const int a = F.x_slot(BlockKind::Loxodromic, j), b = a + 1;
        const double m = coeffs[s], v = coeffs[s + 1];
        X(a, a) += m;
        X(b, b) += m;
        X(n + a, n + a) -= m;
        X(n + b, n + b) -= m;
        X(a, b) -= v;
        X(b, a) += v;
        X(n + a, n + b) -= v;
        X(n + b, n + a) += v;
    }
    return X;
}

Mat model_normal_form_matrix(const FloquetClassification& F) {
    std::vector<double> coeffs;
    for (double a : F.alpha) coeffs.push_back(a);
    for (double l : F.lambda) coeffs.push_back(l);
    for (int j = 0; j < F.c; ++j) {
        coeffs.push_back(F.mu[j]);
        coeffs.push_back(F.nu[j]);
    }
    Mat NF = matrix_exp(model_hamilton_matrix(F, coeffs));
    // negative real pairs: the pair block is -exp(Hamilton flow)
    for (int j = 0; j < F.q; ++j) {
        if (!F.neg_flags[j]) continue;
        const int i = F.x_slot(BlockKind::Hyperbolic, j);
        NF(i, i) = -NF(i, i);
        NF(F.n + i, F.n + i) = -NF(F.n + i, F.n + i);
    }
    return NF;
}

PhasedComplex character(const FloquetClassification& F) {
    PhasedComplex out;
    Complex t = 1.0;
    for (const Complex& X : F.block_exponents()) {
        const Complex eX = std::exp(X);
        t *= std::exp(0.5 * X) / (1.0 - eX);
    }
    out.value = t;
    out.phase_modulo_quarter_turn = true;
    return out;
}

double character_direct(const Mat& M) {
    const int N = static_cast<int>(M.rows());
    const double det = (Mat::Identity(N, N) - M).determinant();
    if (std::abs(det) < 1e-12) throw SingularIMinusP("det(I - M) within tolerance of zero");
    return 1.0 / std::sqrt(std::abs(det));
}

CMat eigen_coordinate_matrix(const FloquetClassification& F) {
    const int n = F.n;
    CMat Z = CMat::Zero(2 * n, 2 * n);
    const Complex I(0, 1);
    for (int j = 0; j < F.p; ++j) {
        const int i = F.x_slot(BlockKind::Elliptic, j);
        Z(i, i) = 1;
        Z(i, n + i) = I;  // z = x + i xi
        Z(n + i, i) = 1;
        Z(n + i, n + i) = -I;  // zbar
    }
    for (int j = 0; j < F.q; ++j) {
        const int i = F.x_slot(BlockKind::Hyperbolic, j);
        Z(i, i) = 1;          // y
        Z(n + i, n + i) = 1;  // eta
    }
    for (int j = 0; j < F.c; ++j) {
        const int a = F.x_slot(BlockKind::Loxodromic, j), b = a + 1;
        Z(a, a) = 1;
        Z(a, b) = I;  // w = x_a + i x_b
        Z(b, a) = 1;
        Z(b, b) = -I;  // wbar
        Z(n + a, n + a) = 1;
        Z(n + a, n + b) = -I;  // omega = xi_a - i xi_b
        Z(n + b, n + a) = 1;
        Z(n + b, n + b) = I;  // omegabar
    }
    return Z;
}

}  // namespace qbnf
