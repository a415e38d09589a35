#include "qbnf/expansion.hpp"

#include <cmath>
#include <sstream>

namespace qbnf {

namespace {
double binom_real(double a, int k) {
    double r = 1;
    for (int i = 0; i < k; ++i) r *= (a - i) / (i + 1);
    return r;
}
}  // namespace

JetSeries JetSeries::fractional_power(double pow) const {
    if (!unit_at_origin())
        throw Error("fractional_power: jet must equal 1 on the axis");
    JetSeries u = *this;
    u.add(YKey{}, TrigSeries(Complex(-1.0)));
    JetSeries r = JetSeries::constant(n_, order_, 1.0);
    JetSeries up = JetSeries::constant(n_, order_, 1.0);
    for (int k = 1; k <= order_; ++k) {
        up = up * u;
        if (up.terms().empty()) break;
        r = r + up.scale(binom_real(pow, k));
    }
    return r;
}

JetSeries JetSeries::logarithm() const {
    if (!unit_at_origin()) throw Error("logarithm: jet must equal 1 on the axis");
    JetSeries u = *this;
    u.add(YKey{}, TrigSeries(Complex(-1.0)));
    JetSeries r(n_, order_);
    JetSeries up = JetSeries::constant(n_, order_, 1.0);
    for (int k = 1; k <= order_; ++k) {
        up = up * u;
        if (up.terms().empty()) break;
        r = r + up.scale(Complex((k % 2 == 1 ? 1.0 : -1.0) / k));
    }
    return r;
}

void MetricJet::validate(const CurvatureLoop* loop) const {
    if (n <= 0 || n > kMaxTransverse || L <= 0 || order < 2)
        throw Error("MetricJet: bad dimensions");
    if (!goo.unit_at_origin(1e-10)) throw Error("MetricJet: g^{oo}(s,0) != 1");
    if (!density.unit_at_origin(1e-10)) throw Error("MetricJet: J(s,0) != 1");
    for (int i = 0; i < n; ++i) {
        YKey k;
        k.e[i] = 1;
        if (goo.at(k).max_abs() > 1e-10) throw Error("MetricJet: first y-derivative of g^{oo}");
        if (gamma_i[i].at(YKey{}).max_abs() > 1e-10)
            throw Error("MetricJet: Gamma^i nonzero on the axis");
    }
    if (gamma_o.at(YKey{}).max_abs() > 1e-10) throw Error("MetricJet: Gamma^o nonzero on the axis");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double target = (i == j) ? 1.0 : 0.0;
            TrigSeries c0 = gij[i][j].at(YKey{});
            if ((c0 - TrigSeries(Complex(target))).max_abs() > 1e-10)
                throw Error("MetricJet: g^{ij}(s,0) != delta");
        }
    if (loop) {
        // quadratic part of g^{oo} must reproduce the curvature of the loop
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                YKey k;
                k.e[i] += 1;
                k.e[j] += 1;
                TrigSeries got = goo.at(k);
                TrigSeries want;
                for (const auto& [f, Kf] : loop->K_modes)
                    want.add_mode(f, Kf(i, j) * ((i == j) ? 1.0 : 2.0));
                if ((got - want).max_abs() > 1e-8)
                    throw Error("MetricJet: quadratic part of g^{oo} inconsistent with K");
            }
    }
}

namespace {
void serialize_jet(std::ostringstream& os, const std::string& name, const JetSeries& j, int n) {
    os << "coef " << name << "\n";
    for (const auto& [k, t] : j.terms())
        for (const auto& [f, c] : t.modes()) {
            for (int i = 0; i < n; ++i) os << int(k.e[i]) << " ";
            os << "| " << f << " | " << c.real() << " | " << c.imag() << "\n";
        }
    os << "end\n";
}

JetSeries parse_jet(std::istream& is, int n, int order) {
    JetSeries j(n, order);
    std::string line;
    while (std::getline(is, line)) {
        if (line == "end") break;
        if (line.empty()) continue;
        for (char& ch : line)
            if (ch == '|') ch = ' ';
        std::istringstream ls(line);
        YKey k;
        int v;
        for (int i = 0; i < n; ++i) {
            ls >> v;
            k.e[i] = static_cast<uint8_t>(v);
        }
        int f;
        double re, im;
        ls >> f >> re >> im;
        TrigSeries t = j.at(k);
        t.add_mode(f, Complex(re, im));
        j.set(k, t);
    }
    return j;
}
}  // namespace

std::string MetricJet::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "metricjet v1\n";
    os << "n " << n << " L " << L << " order " << order << "\n";
    serialize_jet(os, "goo", goo, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            serialize_jet(os, "gij " + std::to_string(i) + " " + std::to_string(j), gij[i][j], n);
    serialize_jet(os, "gamma_o", gamma_o, n);
    for (int i = 0; i < n; ++i) serialize_jet(os, "gamma_i " + std::to_string(i), gamma_i[i], n);
    serialize_jet(os, "sigma_o", sigma_o, n);
    serialize_jet(os, "density", density, n);
    return os.str();
}

MetricJet MetricJet::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string word;
    is >> word;
    if (word != "metricjet") throw ConfigError("not a metricjet file");
    is >> word;
    if (word != "v1") throw ConfigError("unsupported metricjet version " + word);
    MetricJet m;
    is >> word >> m.n >> word >> m.L >> word >> m.order;
    std::string line;
    std::getline(is, line);
    m.gij.assign(m.n, std::vector<JetSeries>(m.n, JetSeries(m.n, m.order)));
    m.gamma_i.assign(m.n, JetSeries(m.n, m.order));
    m.goo = JetSeries(m.n, m.order);
    m.gamma_o = JetSeries(m.n, m.order);
    m.sigma_o = JetSeries(m.n, m.order);
    m.density = JetSeries(m.n, m.order);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag, name;
        ls >> tag >> name;
        if (tag != "coef") throw ConfigError("bad metricjet section: " + line);
        if (name == "goo") m.goo = parse_jet(is, m.n, m.order);
        else if (name == "gij") {
            int i, j;
            ls >> i >> j;
            m.gij[i][j] = parse_jet(is, m.n, m.order);
        } else if (name == "gamma_o") m.gamma_o = parse_jet(is, m.n, m.order);
        else if (name == "gamma_i") {
            int i;
            ls >> i;
            m.gamma_i[i] = parse_jet(is, m.n, m.order);
        } else if (name == "sigma_o") m.sigma_o = parse_jet(is, m.n, m.order);
        else if (name == "density") m.density = parse_jet(is, m.n, m.order);
        else throw ConfigError("unknown metricjet coefficient " + name);
    }
    return m;
}

namespace {
JetSeries scale_jet(const JetSeries& j, double eps, double extra_weight) {
    JetSeries r(j.n(), j.order());
    for (const auto& [k, t] : j.terms())
        r.set(k, t * Complex(std::pow(eps, extra_weight - k.degree())));
    return r;
}
}  // namespace

MetricJet scale_metric_jet(const MetricJet& m, double eps) {
    MetricJet r = m;
    r.L = eps * m.L;
    r.goo = scale_jet(m.goo, eps, 0);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) r.gij[i][j] = scale_jet(m.gij[i][j], eps, 0);
    r.gamma_o = scale_jet(m.gamma_o, eps, -1);
    for (int i = 0; i < m.n; ++i) r.gamma_i[i] = scale_jet(m.gamma_i[i], eps, -1);
    r.sigma_o = scale_jet(m.sigma_o, eps, -2);
    r.density = scale_jet(m.density, eps, 0);
    return r;
}

CurvatureLoop scale_loop(const CurvatureLoop& loop, double eps) {
    CurvatureLoop r = loop;
    r.L = eps * loop.L;
    for (auto& [k, mat] : r.K_modes) mat /= (eps * eps);
    return r;
}

const SymbolPolynomial& SemiclassicalExpansion::term(int m) const {
    static const SymbolPolynomial empty;
    auto it = terms.find(m);
    if (it == terms.end()) {
        if (m > mmax) throw InsufficientJetOrder("expansion term beyond truncation order");
        return empty;
    }
    return it->second;
}

SymbolPolynomial& SemiclassicalExpansion::slot(int m) {
    auto it = terms.find(m);
    if (it == terms.end()) it = terms.emplace(m, SymbolPolynomial(n, L)).first;
    return it->second;
}

MetricJet half_density_reduce(const MetricJet& raw) {
    if (raw.density.unit_at_origin() &&
        raw.density.terms().size() <= 1)  // J == 1 exactly: nothing to do
        if ((raw.density.at(YKey{}) - TrigSeries(Complex(1))).max_abs() == 0.0) {
            MetricJet out = raw;
            out.density = JetSeries::constant(raw.n, raw.order, 1.0);
            return out;
        }

    const int n = raw.n;
    const JetSeries psi = raw.density.logarithm().scale(-0.5);
    const JetSeries psi_s = psi.d_s(raw.L);
    std::vector<JetSeries> psi_y;
    for (int i = 0; i < n; ++i) psi_y.push_back(psi.d_y(i));

    MetricJet out = raw;
    out.gamma_o = raw.gamma_o + (raw.goo * psi_s).scale(2.0);
    for (int i = 0; i < n; ++i) {
        JetSeries g = raw.gamma_i[i];
        for (int j = 0; j < n; ++j) g = g + (raw.gij[i][j] * psi_y[j]).scale(2.0);
        out.gamma_i[i] = g;
    }
    JetSeries sig = raw.sigma_o + raw.goo * (psi_s.d_s(raw.L) + psi_s * psi_s) +
                    raw.gamma_o * psi_s;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            sig = sig + raw.gij[i][j] * (psi_y[i].d_y(j) + psi_y[i] * psi_y[j]);
        sig = sig + raw.gamma_i[i] * psi_y[i];
    }
    out.sigma_o = sig;
    out.density = JetSeries::constant(n, raw.order, 1.0);
    return out;
}

namespace {
SymbolPolynomial jet_term_symbol(int n, double L, const YKey& k, const TrigSeries& t) {
    SymbolPolynomial s(n, L);
    for (const auto& [f, c] : t.modes()) {
        MonoKey mk;
        for (int i = 0; i < n; ++i) mk.e[i] = k.e[i];
        mk.freq = static_cast<int16_t>(f);
        s.add_term(mk, c);
    }
    return s;
}
}  // namespace

SemiclassicalExpansion rescale_expand(const MetricJet& jets, int M) {
    jets.validate();
    if (jets.order < M) throw InsufficientJetOrder("Taylor order below requested expansion order");
    if ((jets.density.at(YKey{}) - TrigSeries(Complex(1))).max_abs() > 0 ||
        jets.density.terms().size() > 1)
        throw Error("rescale_expand: jets must be half-density reduced (J == 1)");

    const int n = jets.n;
    const double L = jets.L;
    SemiclassicalExpansion E;
    E.n = n;
    E.L = L;
    E.kind = ExpansionKind::Laplace;
    E.mmax = M;

    const SymbolPolynomial sig = SymbolPolynomial::sigma(n, L);
    auto xi = [&](int i) { return SymbolPolynomial::variable_xi(n, L, i); };

    // g^{oo}: the h^{-2} class and the D_s class
    for (const auto& [k, t] : jets.goo.terms()) {
        const int d = k.degree();
        SymbolPolynomial base = jet_term_symbol(n, L, k, t);
        if (d <= M) E.slot(d) += base * Complex(std::pow(L, d - 2));
        if (d + 2 <= M)
            E.slot(d + 2) += moyal_product(base, sig) * Complex(2.0 * std::pow(L, d - 1));
    }
    // Gamma^o
    for (const auto& [k, t] : jets.gamma_o.terms()) {
        const int d = k.degree();
        if (d + 2 <= M)
            E.slot(d + 2) +=
                jet_term_symbol(n, L, k, t) * (Complex(0, -1) * std::pow(L, d - 1));
    }
    // g^{ij}
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (const auto& [k, t] : jets.gij[i][j].terms()) {
                const int d = k.degree();
                if (d + 2 > M) continue;
                SymbolPolynomial base = jet_term_symbol(n, L, k, t);
                E.slot(d + 2) += moyal_product(base, xi(i).pointwise(xi(j))) *
                                 Complex(std::pow(L, d - 2));
            }
    // Gamma^i
    for (int i = 0; i < n; ++i)
        for (const auto& [k, t] : jets.gamma_i[i].terms()) {
            const int d = k.degree();
            if (d + 1 > M) continue;
            SymbolPolynomial base = jet_term_symbol(n, L, k, t);
            E.slot(d + 1) += moyal_product(base, xi(i)) * (Complex(0, -1) * std::pow(L, d - 1));
        }
    // sigma_o
    for (const auto& [k, t] : jets.sigma_o.terms()) {
        const int d = k.degree();
        if (d + 4 <= M)
            E.slot(d + 4) += jet_term_symbol(n, L, k, t) * Complex(-std::pow(L, double(d)));
    }

    for (auto& [m, s] : E.terms) {
        s.truncate_degree(m);
        s.prune(1e-300);
    }
    return E;
}

SymbolPolynomial action_classical_symbol(const FloquetClassification& F, double L,
                                         const ActionPolynomial& P) {
    const int n = F.n;
    auto xv = [&](int i) { return SymbolPolynomial::variable_x(n, L, i); };
    auto xiv = [&](int i) { return SymbolPolynomial::variable_xi(n, L, i); };

    std::vector<SymbolPolynomial> base;
    for (int j = 0; j < F.p; ++j) {
        const int i = F.x_slot(BlockKind::Elliptic, j);
        base.push_back((xv(i).pointwise(xv(i)) + xiv(i).pointwise(xiv(i))) * Complex(0.5));
    }
    for (int j = 0; j < F.q; ++j) {
        const int i = F.x_slot(BlockKind::Hyperbolic, j);
        base.push_back(xv(i).pointwise(xiv(i)));
    }
    for (int j = 0; j < F.c; ++j) {
        const int a = F.x_slot(BlockKind::Loxodromic, j), b = a + 1;
        base.push_back(xv(a).pointwise(xiv(a)) + xv(b).pointwise(xiv(b)));
        base.push_back(xv(a).pointwise(xiv(b)) - xv(b).pointwise(xiv(a)));
    }

    SymbolPolynomial out(n, L);
    for (const auto& [k, c] : P.terms()) {
        SymbolPolynomial t = SymbolPolynomial::constant(n, L, c);
        for (int s = 0; s < F.num_actions(); ++s)
            for (int e = 0; e < k.e[s]; ++e) t = t.pointwise(base[s]);
        out += t;
    }
    return out;
}

SymbolPolynomial action_operator_symbol(const FloquetClassification& F, double L,
                                        const ActionPolynomial& P) {
    const int n = F.n;
    std::vector<SymbolPolynomial> base;
    for (int s = 0; s < F.num_actions(); ++s)
        base.push_back(action_classical_symbol(F, L, ActionPolynomial::variable(F.num_actions(), s)));

    SymbolPolynomial out(n, L);
    for (const auto& [k, c] : P.terms()) {
        SymbolPolynomial t = SymbolPolynomial::constant(n, L, c);
        for (int s = 0; s < F.num_actions(); ++s)
            for (int e = 0; e < k.e[s]; ++e) t = moyal_product(t, base[s]);
        out += t;
    }
    return out;
}

ModelConjugation conjugate_to_model(const SemiclassicalExpansion& exp, const WronskianFrame& W,
                                    const FloquetClassification& F) {
    const int n = exp.n;
    const double L = exp.L;
    if (W.n != n || F.n != n) throw DimensionMismatch("conjugate_to_model: dimension mismatch");
    for (bool neg : F.neg_flags)
        if (neg)
            throw Error("conjugate_to_model: negative hyperbolic pairs are not supported "
                        "by the normal-form pipeline");

    // frame of the conjugating family: V(s) = D Phi(s) D^{-1} E_hat
    Mat G = Mat::Zero(2 * n, 2 * n);
    G.block(0, 0, n, n) = L * Mat::Identity(n, n);
    G.block(n, n, n, n) = -Mat::Identity(n, n);
    const Mat Ginv = G.inverse();
    const Mat E = F.frame;
    const Mat Einv = E.inverse();
    const Mat P_V = G * E * W.normal_form * Einv * Ginv;

    FloquetClassification FV = classify_poincare(SymplecticMatrix(n, P_V, 1e-6));
    if (FV.p != F.p || FV.q != F.q || FV.c != F.c)
        throw InconsistentFrame("conjugate_to_model: block type mismatch between P and its dual");

    // canonical model frame: lambda/mu/nu positive, elliptic angle Krein-signed
    Mat Ehat = FV.frame;
    std::vector<double> hat;
    for (int j = 0; j < FV.p; ++j) hat.push_back(-FV.alpha[j]);
    for (int j = 0; j < FV.q; ++j) {
        const int i = FV.x_slot(BlockKind::Hyperbolic, j);
        const Vec a = Ehat.col(i), b = Ehat.col(n + i);
        Ehat.col(i) = b;
        Ehat.col(n + i) = -a;
        hat.push_back(FV.lambda[j]);
    }
    for (int j = 0; j < FV.c; ++j) {
        const int a0 = FV.x_slot(BlockKind::Loxodromic, j), b0 = a0 + 1;
        const Vec a1 = Ehat.col(a0), a2 = Ehat.col(b0);
        const Vec b1 = Ehat.col(n + a0), b2 = Ehat.col(n + b0);
        Ehat.col(a0) = b2;
        Ehat.col(b0) = b1;
        Ehat.col(n + a0) = -a2;
        Ehat.col(n + b0) = -a1;
        hat.push_back(FV.mu[j]);
        hat.push_back(FV.nu[j]);
    }

    // the exponents of the model must agree with the classification of P itself
    {
        double err = 0;
        for (int j = 0; j < F.p; ++j) err = std::max(err, std::abs(hat[j] - F.alpha[j]));
        for (int j = 0; j < F.q; ++j)
            err = std::max(err, std::abs(hat[F.p + j] - F.lambda[j]));
        for (int j = 0; j < F.c; ++j) {
            err = std::max(err, std::abs(hat[F.p + F.q + 2 * j] - F.mu[j]));
            err = std::max(err, std::abs(hat[F.p + F.q + 2 * j + 1] - F.nu[j]));
        }
        if (err > 1e-6)
            throw InconsistentFrame("conjugate_to_model: model exponents disagree with the "
                                    "Poincare classification, max error " + std::to_string(err));
    }

    std::vector<double> neg_hat(hat.size());
    for (std::size_t i = 0; i < hat.size(); ++i) neg_hat[i] = -hat[i];
    const Mat Xi_hat = model_hamilton_matrix(FV, neg_hat);
    const Mat NF_hat = Ehat.inverse() * P_V * Ehat;
    if ((NF_hat - matrix_exp(Xi_hat)).cwiseAbs().maxCoeff() > 1e-6)
        throw InconsistentFrame("conjugate_to_model: canonical frame does not exponentiate");

    // periodic part of the conjugating family, entrywise trigonometric series
    const int N_s = W.N_s;
    std::vector<std::vector<TrigSeries>> vmodes(2 * n, std::vector<TrigSeries>(2 * n));
    {
        std::vector<std::vector<Complex>> samp(4 * n * n, std::vector<Complex>(N_s));
        for (int i = 0; i < N_s; ++i) {
            const double s = i * L / N_s;
            const Mat Vti =
                G * W.samples[i] * Einv * Ginv * Ehat * matrix_exp(-(s / L) * Xi_hat);
            for (int r = 0; r < 2 * n; ++r)
                for (int c2 = 0; c2 < 2 * n; ++c2) samp[r * 2 * n + c2][i] = Vti(r, c2);
        }
        const int max_mode = std::min(N_s / 2 - 1, 64);
        for (int r = 0; r < 2 * n; ++r)
            for (int c2 = 0; c2 < 2 * n; ++c2)
                vmodes[r][c2] = TrigSeries::from_samples(samp[r * 2 * n + c2], max_mode, 1e-13);
    }

    // variable images under the substitution u -> Vtilde(s) u
    std::vector<SymbolPolynomial> images;
    for (int r = 0; r < 2 * n; ++r) {
        SymbolPolynomial img(n, L);
        for (int c2 = 0; c2 < 2 * n; ++c2) {
            if (vmodes[r][c2].empty()) continue;
            SymbolPolynomial var = (c2 < n) ? SymbolPolynomial::variable_x(n, L, c2)
                                            : SymbolPolynomial::variable_xi(n, L, c2 - n);
            img += var.scaled_by_series(vmodes[r][c2]);
        }
        images.push_back(std::move(img));
    }

    ModelConjugation out;
    out.hat = hat;
    out.H = ActionPolynomial(F.num_actions());
    for (int s = 0; s < F.num_actions(); ++s)
        out.H += ActionPolynomial::variable(F.num_actions(), s) * Complex(hat[s]);
    const SymbolPolynomial H_sym = action_classical_symbol(F, L, out.H);

    const SymbolPolynomial Q = exp.term(2).sigma_coefficient(0);
    const SymbolPolynomial QoV = substitute_images(Q, images);
    const SymbolPolynomial Ghat = QoV * Complex(-L / 2.0) + H_sym * Complex(1.0 / L);

    out.model.n = n;
    out.model.L = L;
    out.model.kind = ExpansionKind::Model;
    out.model.mmax = exp.mmax;
    for (const auto& [m, T] : exp.terms) {
        SymbolPolynomial R = conjugate_moving_frame(T, images, Ghat);
        R.prune(1e-14 * std::max(1.0, R.max_abs()));
        out.model.terms.emplace(m, std::move(R));
    }

    SymbolPolynomial R1_target = SymbolPolynomial::sigma(n, L) * Complex(2.0 / L) +
                                 H_sym * Complex(2.0 / (L * L));
    out.frame_residual = (out.model.term(2) - R1_target).max_abs();
    if (out.frame_residual > 1e-7)
        throw InconsistentFrame("conjugate_to_model: residual transverse part of the principal "
                                "term is " + std::to_string(out.frame_residual));
    return out;
}

}  // namespace qbnf
