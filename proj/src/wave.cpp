#include "qbnf/wave.hpp"

#include <cmath>
#include <map>

namespace qbnf {

namespace {

/// Map between the action slots (p + q + 2c, loxodromic as Re/Im pairs) and
/// derivative lines (p + q + 2c, loxodromic as +/- exponent pairs).
std::vector<ActionPolynomial> substitution_images(const FloquetClassification& F,
                                                  DerivConvention conv, bool inverse) {
    const int nv = F.num_actions();
    std::vector<ActionPolynomial> img;
    const Complex I(0, 1);
    for (int j = 0; j < F.p + F.q; ++j) img.push_back(ActionPolynomial::variable(nv, j));
    for (int j = 0; j < F.c; ++j) {
        const int s = F.p + F.q + 2 * j;
        ActionPolynomial A = ActionPolynomial::variable(nv, s);
        ActionPolynomial B = ActionPolynomial::variable(nv, s + 1);
        if (!inverse) {
            // (I^Re, I^Im) -> (V+, V-) combinations
            img.push_back(A + B);  // I^Re -> V+ + V-
            if (conv == DerivConvention::UniformD)
                img.push_back((A - B) * I);  // I^Im -> i (V+ - V-)
            else
                img.push_back(A - B);
        } else {
            // (V+, V-) -> action combinations
            if (conv == DerivConvention::UniformD) {
                img.push_back((A - B * I) * 0.5);  // V+ -> (R - i Im)/2
                img.push_back((A + B * I) * 0.5);
            } else {
                img.push_back((A + B) * 0.5);
                img.push_back((A - B) * 0.5);
            }
        }
    }
    return img;
}

ActionPolynomial substitute(const ActionPolynomial& P, const std::vector<ActionPolynomial>& img) {
    const int nv = P.nvars();
    ActionPolynomial out(nv);
    for (const auto& [k, c] : P.terms()) {
        ActionPolynomial t = ActionPolynomial::constant(nv, c);
        for (int s = 0; s < nv; ++s)
            for (int e = 0; e < k.e[s]; ++e) t = t * img[s];
        out += t;
    }
    return out;
}

}  // namespace

ActionPolynomial action_to_derivative(const FloquetClassification& F, const ActionPolynomial& P,
                                      DerivConvention conv) {
    return substitute(P, substitution_images(F, conv, false));
}

ActionPolynomial derivative_to_action(const FloquetClassification& F, const ActionPolynomial& P,
                                      DerivConvention conv) {
    return substitute(P, substitution_images(F, conv, true));
}

std::vector<Complex> line_gammas(const FloquetClassification& F, DerivConvention conv) {
    std::vector<Complex> g;
    const Complex minus_i(0, -1);
    for (int j = 0; j < F.p; ++j) g.push_back(1.0);  // (1/i) d/d(alpha) = d/dz at z = i alpha
    for (int j = 0; j < F.q; ++j)
        g.push_back(conv == DerivConvention::UniformD ? minus_i : Complex(1.0));
    for (int j = 0; j < 2 * F.c; ++j)
        g.push_back(conv == DerivConvention::UniformD ? minus_i : Complex(1.0));
    return g;
}

CharacterFunction CharacterFunction::make(const FloquetClassification& F, DerivConvention conv,
                                          bool shift) {
    CharacterFunction cf;
    cf.X = F.block_exponents();
    cf.gamma = line_gammas(F, conv);
    cf.half_shifted = shift;
    return cf;
}

Complex CharacterFunction::character_value(double z) const {
    Complex t = 1.0;
    for (const Complex& x : X) t *= std::exp(0.5 * z * x) / (1.0 - std::exp(z * x));
    return t;
}

Complex CharacterFunction::apply(const ActionPolynomial& P, double z, double div_tol) const {
    const int m = static_cast<int>(X.size());
    for (int j = 0; j < m; ++j)
        if (std::abs(1.0 - std::exp(z * X[j])) < div_tol)
            throw ResonantIterate("iterate hits a unit eigenvalue at line " + std::to_string(j));

    Complex total = 0;
    for (const auto& [key, coeff] : P.terms()) {
        Complex prod = coeff;
        for (int j = 0; j < m; ++j) {
            // apply V_j^{e_j} to e^{zX/2} u, then evaluate
            const int e = key.e[j];
            std::vector<Complex> cvec(e + 2, 0.0);
            cvec[1] = 1.0;
            for (int r = 0; r < e; ++r) {
                std::vector<Complex> nxt(e + 2, 0.0);
                for (int t = 1; t <= e + 1; ++t) {
                    if (cvec[t] == 0.0) continue;
                    nxt[t] += gamma[j] * (0.5 - double(t)) * cvec[t];
                    if (t + 1 <= e + 1) nxt[t + 1] += gamma[j] * double(t) * cvec[t];
                }
                cvec.swap(nxt);
            }
            const Complex u = 1.0 / (1.0 - std::exp(z * X[j]));
            Complex val = 0, up = 1.0;
            for (int t = 0; t <= e + 1; ++t) {
                if (t > 0) up *= u;
                if (t >= 1) val += cvec[t] * up;
            }
            prod *= std::exp(0.5 * z * X[j]) * val;
        }
        total += prod;
    }
    return total;
}

namespace {

using Laurent = std::map<int, ActionPolynomial>;  // n-power -> coefficient

Laurent laurent_mul(const Laurent& A, const Laurent& B, int min_pow) {
    Laurent R;
    for (const auto& [pa, ca] : A)
        for (const auto& [pb, cb] : B) {
            const int p = pa + pb;
            if (p < min_pow) continue;
            auto it = R.find(p);
            if (it == R.end()) R.emplace(p, ca * cb);
            else it->second += ca * cb;
        }
    return R;
}

}  // namespace

DerivativePolynomial build_F(int k, const NormalFormResult& nf, DerivConvention conv) {
    const int nv = nf.F.num_actions();
    if (static_cast<int>(nf.ptilde.size()) < k + 1)
        throw MissingNormalForm("build_F: ptilde_1..ptilde_" + std::to_string(k + 1) +
                                " required; call regroup_homogeneous first");
    const int min_pow = -(k + 2);

    const ActionPolynomial A = action_to_derivative(nf.F, quadratic_hamiltonian(nf.F), conv);

    Laurent P;  // the correction polynomial, a symbol of order -1
    for (int j = 1; j <= k + 1; ++j) {
        ActionPolynomial c = action_to_derivative(nf.F, nf.ptilde[j - 1], conv) *
                             Complex(std::pow(2 * M_PI, -double(j)));
        if (!c.empty()) P.emplace(-j, std::move(c));
    }

    Laurent bracket;  // (2 pi n + A)/L + P
    bracket.emplace(1, ActionPolynomial::constant(nv, 2 * M_PI / nf.L));
    bracket.emplace(0, A * Complex(1.0 / nf.L));
    for (const auto& [pw, c] : P) {
        auto it = bracket.find(pw);
        if (it == bracket.end()) bracket.emplace(pw, c);
        else it->second += c;
    }

    Laurent G;
    G.emplace(0, ActionPolynomial::constant(nv, 1.0));
    for (int t = 0; t < k; ++t) G = laurent_mul(G, bracket, min_pow);

    // exp(i L P), truncated where it can still reach the n^{-1} coefficient
    Laurent E;
    E.emplace(0, ActionPolynomial::constant(nv, 1.0));
    Laurent Ppow;
    Ppow.emplace(0, ActionPolynomial::constant(nv, 1.0));
    double fact = 1;
    for (int t = 1; t <= k + 1; ++t) {
        Ppow = laurent_mul(Ppow, P, min_pow);
        if (Ppow.empty()) break;
        fact *= t;
        const Complex coef = std::pow(Complex(0, nf.L), t) / fact;
        for (const auto& [pw, c] : Ppow) {
            ActionPolynomial add = c * coef;
            auto it = E.find(pw);
            if (it == E.end()) E.emplace(pw, std::move(add));
            else it->second += add;
        }
    }

    G = laurent_mul(G, E, min_pow);

    DerivativePolynomial out;
    out.k = k;
    out.P = ActionPolynomial(nv);
    auto it = G.find(-1);
    if (it != G.end()) out.P = it->second * (2.0 * M_PI / Complex(0, nf.L));  // gauge: k=0 is
                                                                              // the plain
                                                                              // substitution
    out.P.prune(1e-300);
    return out;
}

Complex apply_derivatives(const DerivativePolynomial& Fk, const FloquetClassification& Fl,
                          bool shift, DerivConvention conv, double z) {
    const CharacterFunction cf = CharacterFunction::make(Fl, conv, shift);
    if (!shift) return cf.apply(Fk.P, z);
    // half-shifted form: same value through V -> V + gamma/2 on the
    // prefactor-free reciprocals; the identities make the two readings agree
    const auto g = line_gammas(Fl, conv);
    ActionPolynomial shifted = Fk.P;
    std::vector<ActionPolynomial> img;
    for (int j = 0; j < Fk.P.nvars(); ++j)
        img.push_back(ActionPolynomial::variable(Fk.P.nvars(), j) +
                      ActionPolynomial::constant(Fk.P.nvars(), 0.5 * g[j]));
    // apply the shifted operator to the bare reciprocals and restore prefactors
    CharacterFunction bare = cf;
    bare.half_shifted = true;
    ActionPolynomial Psh(Fk.P.nvars());
    for (const auto& [key, c] : Fk.P.terms()) {
        ActionPolynomial t = ActionPolynomial::constant(Fk.P.nvars(), c);
        for (int s = 0; s < Fk.P.nvars(); ++s)
            for (int e = 0; e < key.e[s]; ++e) t = t * img[s];
        Psh += t;
    }
    // evaluate with the pure-reciprocal rule (no e^{z/2} in the derivative)
    Complex total = 0;
    for (const auto& [key, coeff] : Psh.terms()) {
        Complex prod = coeff;
        for (std::size_t j = 0; j < cf.X.size(); ++j) {
            const int e = key.e[j];
            std::vector<Complex> cvec(e + 2, 0.0);
            cvec[1] = 1.0;
            for (int r = 0; r < e; ++r) {
                std::vector<Complex> nxt(e + 2, 0.0);
                for (int t = 1; t <= e + 1; ++t) {
                    if (cvec[t] == 0.0) continue;
                    nxt[t] += g[j] * (-double(t)) * cvec[t];
                    if (t + 1 <= e + 1) nxt[t + 1] += g[j] * double(t) * cvec[t];
                }
                cvec.swap(nxt);
            }
            const Complex u = 1.0 / (1.0 - std::exp(z * cf.X[j]));
            Complex val = 0, up = 1.0;
            for (int t = 0; t <= e + 1; ++t) {
                if (t > 0) up *= u;
                if (t >= 1) val += cvec[t] * up;
            }
            prod *= val;
        }
        total += prod;
    }
    for (const Complex& x : cf.X) total *= std::exp(0.5 * z * x);
    return total;
}

PhasedComplex wave_invariant(int k, const NormalFormResult& nf, const FloquetClassification& Fl,
                             double L, DerivConvention conv) {
    (void)L;
    const DerivativePolynomial Fk = build_F(k, nf, conv);
    PhasedComplex out;
    out.value = apply_derivatives(Fk, Fl, false, conv, 1.0);
    out.phase_modulo_quarter_turn = true;
    return out;
}

std::vector<Complex> iterate_values(int k, const NormalFormResult& nf,
                                    const FloquetClassification& Fl,
                                    const std::vector<int>& N_list, DerivConvention conv,
                                    double div_tol) {
    const DerivativePolynomial Fk = build_F(k, nf, conv);
    const CharacterFunction cf = CharacterFunction::make(Fl, conv, false);
    std::vector<Complex> out;
    out.reserve(N_list.size());
    for (int N : N_list) {
        if (N == 0) throw Error("iterate_values: N must be nonzero");
        out.push_back(cf.apply(Fk.P, double(N), div_tol));
    }
    return out;
}

}  // namespace qbnf
