#include "qbnf/recover.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <sstream>

namespace qbnf {

namespace {
double binom_int(int a, int b) {
    if (b < 0 || b > a) return 0;
    double r = 1;
    for (int i = 0; i < b; ++i) r *= double(a - i) / (i + 1);
    return r;
}
std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}
}  // namespace

FrequencyLattice clear_denominators(int k, const FloquetClassification& Fl, double gap_tol) {
    FrequencyLattice lat;
    lat.k = k;
    lat.clearing_power = k + 2;
    const auto X = Fl.block_exponents();
    const int lines = static_cast<int>(X.size());

    std::vector<int> beta(lines, 0);
    std::function<void(int)> rec = [&](int pos) {
        if (pos == lines) {
            Complex w = 0;
            for (int j = 0; j < lines; ++j) w += (beta[j] + 0.5) * X[j];
            lat.betas.push_back(beta);
            lat.freqs.push_back(w);
            return;
        }
        for (int v = 0; v <= lat.clearing_power; ++v) {
            beta[pos] = v;
            rec(pos + 1);
        }
        beta[pos] = 0;
    };
    rec(0);

    lat.min_gap = 1e300;
    std::ostringstream diag;
    for (std::size_t i = 0; i < lat.freqs.size(); ++i)
        for (std::size_t j = i + 1; j < lat.freqs.size(); ++j) {
            const double g = std::abs(lat.freqs[i] - lat.freqs[j]);
            lat.min_gap = std::min(lat.min_gap, g);
            if (g < gap_tol)
                diag << "near-collision between lattice points " << i << " and " << j << " (gap "
                     << g << ")\n";
        }
    lat.near_collisions = diag.str();
    return lat;
}

FitResult fit_exponential_polynomial(const std::vector<std::pair<int, Complex>>& samples,
                                     const FrequencyLattice& lattice, double cond_max) {
    const int M = static_cast<int>(lattice.freqs.size());
    const int S = static_cast<int>(samples.size());
    if (S < M) throw Error("fit_exponential_polynomial: fewer samples than frequencies");

    CMat A(S, M);
    CVec b(S);
    for (int r = 0; r < S; ++r) {
        b(r) = samples[r].second;
        for (int c = 0; c < M; ++c)
            A(r, c) = std::exp(double(samples[r].first) * lattice.freqs[c]);
    }
    Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cond = svd.singularValues()(0) / svd.singularValues()(M - 1);
    if (cond > cond_max)
        throw IllConditioned("generalized Vandermonde condition number " + std::to_string(cond) +
                             "; enlarge the window (negative iterates help)");
    CVec x = svd.solve(b);

    FitResult out;
    out.condition_number = cond;
    out.residual = (A * x - b).cwiseAbs().maxCoeff();
    for (int c = 0; c < M; ++c)
        out.poly.terms.push_back({lattice.freqs[c], x(c), lattice.betas[c]});
    return out;
}

namespace {

/// Coefficient vector (index = reciprocal power) of V^e applied to the bare
/// reciprocal u, with the per-line gamma factor and no half shift.
std::vector<Complex> bare_derivative_vector(int e, Complex gamma) {
    std::vector<Complex> c(e + 2, 0.0);
    c[1] = 1.0;
    for (int r = 0; r < e; ++r) {
        std::vector<Complex> nxt(e + 2, 0.0);
        for (int t = 1; t <= e + 1; ++t) {
            if (c[t] == 0.0) continue;
            nxt[t] += gamma * (-double(t)) * c[t];
            if (t + 1 <= e + 1) nxt[t + 1] += gamma * double(t) * c[t];
        }
        c.swap(nxt);
    }
    return c;
}

}  // namespace

DerivativePolynomial peel_coefficients(const ExponentialPolynomial& ep, int k,
                                       const FloquetClassification& Fl, DerivConvention conv,
                                       double residual_tol) {
    const auto X = Fl.block_exponents();
    const int lines = static_cast<int>(X.size());
    const int kp = k + 2;
    const int width = kp + 1;  // beta entries run 0..kp

    std::vector<Complex> work(ipow(width, lines), Complex(0));
    {
        auto index_of = [&](const std::vector<int>& b) {
            std::size_t idx = 0;
            for (int j = 0; j < lines; ++j) idx = idx * width + b[j];
            return idx;
        };
        for (const auto& t : ep.terms) work[index_of(t.beta)] += t.coeff;
    }

    // per-line inversion of  u^t -> (1 - e^{zX})^{kp - t},
    // i.e. beta-coefficient r of u^t is binom(kp-t, r) (-1)^r
    CMat Mline = CMat::Zero(width, kp);
    for (int t = 1; t <= kp; ++t)
        for (int r = 0; r <= kp - t; ++r)
            Mline(r, t - 1) = binom_int(kp - t, r) * ((r % 2) ? -1.0 : 1.0);
    Eigen::JacobiSVD<CMat> svd(Mline, Eigen::ComputeThinU | Eigen::ComputeThinV);

    std::size_t inner = 1;  // product of sizes of already-converted axes (each kp)
    for (int axis = lines - 1; axis >= 0; --axis) {
        const std::size_t outer = ipow(width, axis);
        std::vector<Complex> next(outer * kp * inner);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t s = 0; s < inner; ++s) {
                CVec fiber(width);
                for (int r = 0; r < width; ++r) fiber(r) = work[(o * width + r) * inner + s];
                CVec u = svd.solve(fiber);
                for (int t = 0; t < kp; ++t) next[(o * kp + t) * inner + s] = u(t);
            }
        work.swap(next);
        inner *= kp;
    }
    auto uindex = [&](const std::vector<int>& t) {  // entries are u-powers in 1..kp
        std::size_t idx = 0;
        for (int j = 0; j < lines; ++j) idx = idx * kp + (t[j] - 1);
        return idx;
    };

    const auto gamma = line_gammas(Fl, conv);
    ActionPolynomial rec(lines);
    const double scale0 = [&] {
        double s = 0;
        for (const Complex& w : work) s = std::max(s, std::abs(w));
        return std::max(1.0, s);
    }();

    for (int d = k + 1; d >= 0; --d) {
        std::vector<int> m(lines, 0);
        std::function<void(int, int)> loop = [&](int pos, int rem) {
            if (pos == lines) {
                if (rem != 0) return;
                std::vector<int> t(lines);
                Complex lead = 1.0;
                for (int j = 0; j < lines; ++j) {
                    t[j] = m[j] + 1;
                    for (int i = 1; i <= m[j]; ++i) lead *= gamma[j] * double(i);
                }
                const Complex C = work[uindex(t)] / lead;
                if (std::abs(C) <= 1e-14 * scale0) return;
                ActKey key;
                for (int j = 0; j < lines; ++j) key.e[j] = static_cast<uint8_t>(m[j]);
                rec.add_term(key, C);
                std::vector<std::vector<Complex>> vecs;
                for (int j = 0; j < lines; ++j)
                    vecs.push_back(bare_derivative_vector(m[j], gamma[j]));
                std::vector<int> tt(lines, 1);
                std::function<void(int, Complex)> sub = [&](int pos2, Complex w) {
                    if (pos2 == lines) {
                        work[uindex(tt)] -= C * w;
                        return;
                    }
                    for (int t2 = 1; t2 < static_cast<int>(vecs[pos2].size()); ++t2) {
                        if (vecs[pos2][t2] == 0.0) continue;
                        tt[pos2] = t2;
                        sub(pos2 + 1, w * vecs[pos2][t2]);
                    }
                    tt[pos2] = 1;
                };
                sub(0, 1.0);
                return;
            }
            for (int v = 0; v <= rem; ++v) {
                m[pos] = v;
                loop(pos + 1, rem - v);
            }
            m[pos] = 0;
        };
        loop(0, d);
    }

    double leftover = 0;
    for (const Complex& w : work) leftover = std::max(leftover, std::abs(w));
    if (leftover > residual_tol * scale0)
        throw InconsistentResidual("peel left unexplained energy " + std::to_string(leftover));

    // undo the half shift: F(V) = F'(V - gamma/2)
    std::vector<ActionPolynomial> img;
    for (int j = 0; j < lines; ++j)
        img.push_back(ActionPolynomial::variable(lines, j) +
                      ActionPolynomial::constant(lines, -0.5 * gamma[j]));
    ActionPolynomial unshifted(lines);
    for (const auto& [key, c] : rec.terms()) {
        ActionPolynomial t = ActionPolynomial::constant(lines, c);
        for (int s = 0; s < lines; ++s)
            for (int e = 0; e < key.e[s]; ++e) t = t * img[s];
        unshifted += t;
    }

    DerivativePolynomial out;
    out.k = k;
    out.P = unshifted;
    return out;
}

int recovery_window(int k, const FloquetClassification& Fl) {
    const int lines = static_cast<int>(Fl.block_exponents().size());
    return static_cast<int>(ipow(std::size_t(k + 3), lines)) + 4;
}

std::vector<std::pair<int, Complex>> forward_samples(int k, const NormalFormResult& nf,
                                                     const FloquetClassification& Fl, int window,
                                                     DerivConvention conv) {
    std::vector<int> Ns;
    for (int N = 1; N <= window; ++N) Ns.push_back(N);
    const auto vals = iterate_values(k, nf, Fl, Ns, conv);
    std::vector<std::pair<int, Complex>> out;
    for (int i = 0; i < window; ++i) out.emplace_back(Ns[i], vals[i]);
    return out;
}

RecoveryResult recover_normal_form(const RecoveryProblem& problem) {
    RecoveryResult out;
    std::ostringstream diag;
    const auto X = problem.Fl.block_exponents();

    for (int k = 0; k <= problem.k_max; ++k) {
        auto it = problem.samples.find(k);
        if (it == problem.samples.end())
            throw Error("recover_normal_form: missing samples for k = " + std::to_string(k));
        const FrequencyLattice lat = clear_denominators(k, problem.Fl);
        if (!lat.near_collisions.empty()) diag << lat.near_collisions;

        std::vector<std::pair<int, Complex>> cleared;
        for (const auto& [N, a] : it->second) {
            Complex clear = 1.0;
            for (const Complex& x : X)
                clear *= std::pow(1.0 - std::exp(double(N) * x), lat.clearing_power);
            cleared.emplace_back(N, a * clear);
        }

        FitResult fit = fit_exponential_polynomial(cleared, lat, problem.cond_max);
        out.fit_conditions.push_back(fit.condition_number);
        out.fit_residuals.push_back(fit.residual);
        out.Fk.push_back(peel_coefficients(fit.poly, k, problem.Fl, problem.conv));
    }

    // triangular inversion back to the ptilde coefficients
    NormalFormResult scratch;
    scratch.F = problem.Fl;
    scratch.L = problem.L;
    scratch.k_max = problem.k_max;
    scratch.ptilde.assign(problem.k_max + 1, ActionPolynomial(problem.Fl.num_actions()));

    for (int k = 0; k <= problem.k_max; ++k) {
        ActionPolynomial diff = out.Fk[k].P;
        if (k > 0) {
            const DerivativePolynomial partial = build_F(k, scratch, problem.conv);
            diff = diff - partial.P;
        }
        scratch.ptilde[k] =
            derivative_to_action(problem.Fl, diff, problem.conv) * Complex(std::pow(problem.L, k));
        scratch.ptilde[k].prune(1e-12 * std::max(1.0, scratch.ptilde[k].max_abs()));
    }
    out.ptilde = scratch.ptilde;
    out.diagnostics = diag.str();
    return out;
}

}  // namespace qbnf
