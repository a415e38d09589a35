#include "qbnf/nf.hpp"

#include <cmath>
#include <sstream>

namespace qbnf {

namespace {

double binom_half(int m) {  // binom(1/2, m)
    double r = 1;
    for (int i = 0; i < m; ++i) r *= (0.5 - i) / (i + 1);
    return r;
}

double binom_int(int a, int b) {
    double r = 1;
    for (int i = 0; i < b; ++i) r *= double(a - i) / (i + 1);
    return r;
}

struct StepEngine {
    const FloquetClassification& F;
    double L;
    NfOptions opts;
    CMat Z, Zi;

    StepEngine(const FloquetClassification& F_, double L_, NfOptions o)
        : F(F_), L(L_), opts(o) {
        Z = eigen_coordinate_matrix(F);
        Zi = Z.inverse();
    }

    SymbolPolynomial to_eigen(const SymbolPolynomial& A) const { return substitute_linear(A, Zi); }
    SymbolPolynomial from_eigen(const SymbolPolynomial& A) const { return substitute_linear(A, Z); }

    /// Solve the step for the weight-zero part of B; fills Q (model coords),
    /// the extracted diagonal (even), and the divisor log.
    void solve(const SymbolPolynomial& B, int k, SymbolPolynomial& Q_model,
               SymbolPolynomial& fsym_eigen, std::vector<DivisorUse>& log) const {
        const int n = F.n;
        SymbolPolynomial b0 = weight_zero_part(B);
        SymbolPolynomial b0e = to_eigen(b0);
        b0e.prune(1e-14 * std::max(1.0, b0e.max_abs()));

        SymbolPolynomial Qe(n, L);
        fsym_eigen = SymbolPolynomial(n, L);
        for (const auto& [key, coeff] : b0e.terms()) {
            const auto net = monomial_net(F, key);
            const bool diag = std::all_of(net.begin(), net.end(), [](int v) { return v == 0; });
            if (diag && key.freq == 0) {
                if (k % 2 == 1) {
                    // structurally impossible for odd parity input; tolerate dust
                    if (std::abs(coeff) > 1e-9)
                        throw NonActionDiagonal("diagonal monomial in an odd step");
                    continue;
                }
                fsym_eigen.add_term(key, coeff);
                continue;
            }
            const Complex eps = net_eigenvalue(F, net);
            const Complex delta = Complex(0, 2 * M_PI * key.freq) - eps;
            const double twisted = std::abs(1.0 - std::exp(eps));
            if (std::abs(delta) < opts.div_tol) {
                std::ostringstream msg;
                msg << "resonant divisor |delta| = " << std::abs(delta) << " at net (";
                for (std::size_t i = 0; i < net.size(); ++i)
                    msg << net[i] << (i + 1 < net.size() ? "," : "");
                msg << ") frequency " << key.freq;
                throw ResonantDivisor(msg.str(), net, key.freq, std::abs(delta));
            }
            log.push_back({net, key.freq, twisted});
            Qe.add_term(key, -coeff * L * L / (2.0 * delta));
        }
        Q_model = from_eigen(Qe);
        Q_model.prune(1e-16 * std::max(1.0, Q_model.max_abs()));
    }

    /// Residual of the defining equation: the weight-zero part of
    /// B + i[R1, Q] minus the extracted diagonal must vanish.
    double backsub_residual(const SymbolPolynomial& B, const SymbolPolynomial& R1,
                            const SymbolPolynomial& Q, const SymbolPolynomial& fsym_eigen) const {
        const SymbolPolynomial corr = moyal_bracket(R1, Q) * Complex(-1.0);
        SymbolPolynomial res = to_eigen(weight_zero_part(B + corr)) - fsym_eigen;
        return res.max_abs();
    }
};

/// newcur = conjugation of cur by exp(i h^{k/2} Q): term at m' feeds m' + j k
/// with coefficient (-1)^j / j! through iterated Moyal brackets.
void apply_step(std::map<int, SymbolPolynomial>& cur, const SymbolPolynomial& Q, int k, int mmax,
                double prune_tol) {
    std::map<int, SymbolPolynomial> add;
    for (const auto& [m, T] : cur) {
        if (T.empty()) continue;
        SymbolPolynomial chain = T;
        double fac = 1;
        for (int j = 1; m + j * k <= mmax; ++j) {
            chain = moyal_bracket(chain, Q);
            if (chain.empty()) break;
            fac *= -1.0 / j;
            auto it = add.find(m + j * k);
            if (it == add.end()) it = add.emplace(m + j * k, SymbolPolynomial(chain.n(), chain.period())).first;
            it->second += chain * Complex(fac);
        }
    }
    for (auto& [m, T] : add) {
        auto it = cur.find(m);
        if (it == cur.end()) it = cur.emplace(m, SymbolPolynomial(T.n(), T.period())).first;
        it->second += T;
        it->second.truncate_degree(m);
        it->second.prune(prune_tol * std::max(1.0, it->second.max_abs()));
    }
}

}  // namespace

std::vector<int> monomial_net(const FloquetClassification& F, const MonoKey& key) {
    std::vector<int> net;
    for (int j = 0; j < F.p; ++j) {
        const int i = F.x_slot(BlockKind::Elliptic, j);
        net.push_back(key.x(i) - key.xi(i));
    }
    for (int j = 0; j < F.q; ++j) {
        const int i = F.x_slot(BlockKind::Hyperbolic, j);
        net.push_back(key.x(i) - key.xi(i));
    }
    for (int j = 0; j < F.c; ++j) {
        const int a = F.x_slot(BlockKind::Loxodromic, j);
        net.push_back(key.x(a) - key.xi(a));
        net.push_back(key.x(a + 1) - key.xi(a + 1));
    }
    return net;
}

Complex net_eigenvalue(const FloquetClassification& F, const std::vector<int>& net) {
    Complex eps = 0;
    int s = 0;
    for (int j = 0; j < F.p; ++j, ++s) eps += Complex(0, F.alpha[j]) * double(net[s]);
    for (int j = 0; j < F.q; ++j, ++s) eps -= Complex(F.lambda[j]) * double(net[s]);
    for (int j = 0; j < F.c; ++j, s += 2) {
        eps -= Complex(F.mu[j], F.nu[j]) * double(net[s]);
        eps -= Complex(F.mu[j], -F.nu[j]) * double(net[s + 1]);
    }
    return eps;
}

ActionPolynomial diagonal_symbol_to_action(const FloquetClassification& F, double L,
                                           const SymbolPolynomial& S_eigen) {
    const int nv = F.num_actions();
    ActionPolynomial acc(nv);
    SymbolPolynomial rem = S_eigen;
    rem.prune(1e-15 * std::max(1.0, rem.max_abs()));
    const double scale = std::max(1.0, rem.max_abs());

    int guard = 0;
    while (!rem.empty() && rem.max_abs() > 1e-13 * scale) {
        if (++guard > 64) throw NonActionDiagonal("ordering inversion failed to terminate");
        const int d = rem.max_degree();
        ActionPolynomial top(nv);
        for (const auto& [key, coeff] : rem.terms()) {
            if (key.degree() != d) continue;
            if (key.sig != 0 || key.freq != 0)
                throw NonActionDiagonal("sigma or s-dependence in diagonal extraction");
            const auto net = monomial_net(F, key);
            if (!std::all_of(net.begin(), net.end(), [](int v) { return v == 0; }))
                throw NonActionDiagonal("non-diagonal monomial in diagonal extraction");
            // convert the balanced monomial to action variables
            ActionPolynomial term = ActionPolynomial::constant(nv, coeff);
            int s = 0;
            for (int j = 0; j < F.p; ++j, ++s) {
                const int a = key.x(F.x_slot(BlockKind::Elliptic, j));
                if (a) term = term * ActionPolynomial::variable(nv, s).pow(a) * std::pow(2.0, a);
            }
            for (int j = 0; j < F.q; ++j, ++s) {
                const int b = key.x(F.x_slot(BlockKind::Hyperbolic, j));
                if (b) term = term * ActionPolynomial::variable(nv, s).pow(b);
            }
            for (int j = 0; j < F.c; ++j, s += 2) {
                const int c1 = key.x(F.x_slot(BlockKind::Loxodromic, j));
                const int c2 = key.x(F.x_slot(BlockKind::Loxodromic, j) + 1);
                ActionPolynomial R = ActionPolynomial::variable(nv, s);
                ActionPolynomial Im = ActionPolynomial::variable(nv, s + 1);
                if (c1) term = term * (R - Im * Complex(0, 1)).pow(c1);
                if (c2) term = term * (R + Im * Complex(0, 1)).pow(c2);
            }
            acc += term;
            top += term;
        }
        if (top.empty()) break;
        rem -= substitute_linear(action_operator_symbol(F, L, top),
                                 eigen_coordinate_matrix(F).inverse());
        rem.prune(1e-15 * scale);
    }
    acc.prune(1e-14 * std::max(1.0, acc.max_abs()));
    return acc;
}

std::string ordering_table_dump(const FloquetClassification& F, double L, int max_degree) {
    std::ostringstream os;
    const int nv = F.num_actions();
    std::function<void(ActKey, int, int)> rec = [&](ActKey k, int slot, int deg) {
        if (slot == nv) {
            if (deg == 0) return;
            ActionPolynomial mono(nv);
            mono.add_term(k, 1.0);
            os << "monomial ";
            for (int i = 0; i < nv; ++i) os << int(k.e[i]) << (i + 1 < nv ? " " : "");
            os << "\n" << action_operator_symbol(F, L, mono).dump();
            return;
        }
        for (int e = 0; deg + e <= max_degree; ++e) {
            ActKey kk = k;
            kk.e[slot] = static_cast<uint8_t>(e);
            rec(kk, slot + 1, deg + e);
        }
    };
    rec(ActKey{}, 0, 0);
    return os.str();
}

namespace {
HomologicalStep solve_single(const SymbolPolynomial& D, const FloquetClassification& F, double L,
                             const NfOptions& opts, int k) {
    StepEngine eng(F, L, opts);
    HomologicalStep st;
    st.k = k;
    SymbolPolynomial fsym(F.n, L);
    eng.solve(D, k, st.Q, fsym, st.divisors);
    st.f = (k % 2 == 0) ? diagonal_symbol_to_action(F, L, fsym) : ActionPolynomial(F.num_actions());

    const SymbolPolynomial H_sym = action_classical_symbol(F, L, quadratic_hamiltonian(F));
    const SymbolPolynomial R1 =
        SymbolPolynomial::sigma(F.n, L) * Complex(2.0 / L) + H_sym * Complex(2.0 / (L * L));
    st.backsub_residual = eng.backsub_residual(D, R1, st.Q, fsym);
    return st;
}
}  // namespace

HomologicalStep solve_odd_step(const SymbolPolynomial& D_half, const FloquetClassification& F,
                               double L, const NfOptions& opts) {
    if (D_half.parity() == 1)
        throw Error("solve_odd_step: input has even transverse parity");
    return solve_single(D_half, F, L, opts, 1);
}

HomologicalStep solve_even_step(const SymbolPolynomial& D_even, const FloquetClassification& F,
                                double L, const NfOptions& opts) {
    if (D_even.parity() == -1)
        throw Error("solve_even_step: input has odd transverse parity");
    return solve_single(D_even, F, L, opts, 2);
}

NormalFormResult run_normal_form(const SemiclassicalExpansion& model,
                                 const FloquetClassification& F, double L, int k_max,
                                 const NfOptions& opts) {
    if (model.kind != ExpansionKind::Model)
        throw Error("run_normal_form: expansion must be conjugated to the model first");
    const int mmax = 2 * k_max + 4;
    if (model.mmax < mmax)
        throw InsufficientJetOrder("run_normal_form: expansion terms missing beyond m = " +
                                   std::to_string(model.mmax));
    StepEngine eng(F, L, opts);

    NormalFormResult out;
    out.F = F;
    out.L = L;
    out.k_max = k_max;

    std::map<int, SymbolPolynomial> cur;
    for (const auto& [m, T] : model.terms)
        if (m <= mmax) cur.emplace(m, T);

    const SymbolPolynomial R1 = model.term(2);
    out.f.assign(k_max + 1, ActionPolynomial(F.num_actions()));

    for (int k = 1; k <= 2 * k_max + 2; ++k) {
        const int m = k + 2;
        SymbolPolynomial B = (cur.count(m) ? cur[m] : SymbolPolynomial(F.n, L));
        HomologicalStep st;
        st.k = k;
        SymbolPolynomial fsym(F.n, L);
        eng.solve(B, k, st.Q, fsym, st.divisors);
        if (k % 2 == 0) {
            st.f = diagonal_symbol_to_action(F, L, fsym);
            const int j = (k - 2) / 2;
            if (j <= k_max) out.f[j] = st.f;
            out.max_f_imag = std::max(out.max_f_imag, st.f.max_imag());
        }
        st.backsub_residual = eng.backsub_residual(B, R1, st.Q, fsym);
        out.max_backsub_residual = std::max(out.max_backsub_residual, st.backsub_residual);
        apply_step(cur, st.Q, k, mmax, opts.prune);
        out.steps.push_back(std::move(st));
    }

    // verification pass: conjugate the original expansion by the composed
    // steps and compare the weight-zero restrictions with the extracted f_j
    std::map<int, SymbolPolynomial> ver;
    for (const auto& [m, T] : model.terms)
        if (m <= mmax) ver.emplace(m, T);
    for (const auto& st : out.steps) apply_step(ver, st.Q, st.k, mmax, opts.prune);
    double vres = 0;
    for (int m = 3; m <= mmax; ++m) {
        if (!ver.count(m)) continue;
        SymbolPolynomial b0e = eng.to_eigen(weight_zero_part(ver[m]));
        if (m % 2 == 0) {
            const int j = (m - 4) / 2;
            if (j >= 0 && j <= k_max)
                b0e -= eng.to_eigen(action_operator_symbol(F, L, out.f[j]));
        }
        vres = std::max(vres, b0e.max_abs());
    }
    out.verification_residual = vres;
    out.ordering_table = ordering_table_dump(F, L, std::min(k_max + 2, 4));
    return out;
}

void regroup_homogeneous(NormalFormResult& nf) {
    const int nv = nf.F.num_actions();
    const int kp = nf.k_max + 1;
    nf.p.assign(kp, ActionPolynomial(nv));
    nf.ptilde.assign(kp, ActionPolynomial(nv));
    nf.p_homog.assign(kp, {});

    // p_k = sum_m binom(1/2, m) L^{2m-1} sum_{j_1+..+j_m = k+1-2m} f_{j_1} .. f_{j_m}
    for (int k = 1; k <= kp; ++k) {
        ActionPolynomial pk(nv);
        for (int m = 1; 2 * m <= k + 1; ++m) {
            const int target = k + 1 - 2 * m;
            std::function<void(int, int, ActionPolynomial)> rec = [&](int pos, int rem,
                                                                      ActionPolynomial prod) {
                if (pos == m) {
                    if (rem == 0)
                        pk += prod * Complex(binom_half(m) * std::pow(nf.L, 2 * m - 1));
                    return;
                }
                for (int j = 0; j <= std::min(rem, nf.k_max); ++j)
                    rec(pos + 1, rem - j, prod * nf.f[j]);
            };
            rec(0, target, ActionPolynomial::constant(nv, 1.0));
        }
        pk.prune(1e-300);
        nf.p[k - 1] = pk;
        for (int d = 0; d <= k + 1; ++d) nf.p_homog[k - 1].push_back(pk.homogeneous_part(d));
    }

    const ActionPolynomial H = quadratic_hamiltonian(nf.F);
    for (int k = 1; k <= kp; ++k) {
        ActionPolynomial pt(nv);
        ActionPolynomial Hm = ActionPolynomial::constant(nv, 1.0);
        for (int m = 0; m <= k - 1; ++m) {
            pt += nf.p[k - m - 1] * Hm * Complex((m % 2 ? -1.0 : 1.0) * binom_int(k - 1, m));
            Hm = Hm * H;
        }
        nf.ptilde[k - 1] = pt;
    }
}

std::string NormalFormResult::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "normalform v1\n";
    os << "n " << F.n << " p " << F.p << " q " << F.q << " c " << F.c << " L " << L << " k_max "
       << k_max << "\n";
    os << "exponents";
    for (double a : F.alpha) os << " " << a;
    for (double l : F.lambda) os << " " << l;
    for (int j = 0; j < F.c; ++j) os << " " << F.mu[j] << " " << F.nu[j];
    os << "\n";
    for (std::size_t j = 0; j < f.size(); ++j)
        os << "f " << j << "\n" << f[j].dump(F.num_actions());
    for (std::size_t k = 0; k < p.size(); ++k)
        os << "p " << (k + 1) << "\n" << p[k].dump(F.num_actions());
    for (std::size_t k = 0; k < ptilde.size(); ++k)
        os << "ptilde " << (k + 1) << "\n" << ptilde[k].dump(F.num_actions());
    os << "max_backsub_residual " << max_backsub_residual << "\n";
    os << "verification_residual " << verification_residual << "\n";
    return os.str();
}

}  // namespace qbnf
