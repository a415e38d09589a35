#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "qbnf/action.hpp"
#include "qbnf/floquet.hpp"
#include "qbnf/jacobi.hpp"
#include "qbnf/trig.hpp"
#include "qbnf/weyl.hpp"

namespace qbnf {

struct YKey {
    std::array<uint8_t, kMaxTransverse> e{};
    bool operator<(const YKey& o) const { return e < o.e; }
    int degree() const {
        int d = 0;
        for (auto v : e) d += v;
        return d;
    }
};

/// Taylor jet in the transverse coordinates with s-periodic coefficients.
class JetSeries {
public:
    JetSeries() = default;
    JetSeries(int n, int order) : n_(n), order_(order) {}

    static JetSeries constant(int n, int order, Complex c) {
        JetSeries j(n, order);
        if (c != 0.0) j.terms_[YKey{}] = TrigSeries(c);
        return j;
    }

    int n() const { return n_; }
    int order() const { return order_; }
    const std::map<YKey, TrigSeries>& terms() const { return terms_; }

    void set(const YKey& k, const TrigSeries& t) {
        if (k.degree() > order_) return;
        if (t.empty()) terms_.erase(k);
        else terms_[k] = t;
    }
    void add(const YKey& k, const TrigSeries& t) {
        if (k.degree() > order_) return;
        auto it = terms_.find(k);
        if (it == terms_.end()) {
            if (!t.empty()) terms_[k] = t;
        } else {
            it->second += t;
            if (it->second.max_abs() == 0.0) terms_.erase(it);
        }
    }
    TrigSeries at(const YKey& k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? TrigSeries() : it->second;
    }

    JetSeries operator+(const JetSeries& o) const {
        JetSeries r = *this;
        for (const auto& [k, t] : o.terms_) r.add(k, t);
        return r;
    }
    JetSeries operator-() const {
        JetSeries r(n_, order_);
        for (const auto& [k, t] : terms_) r.terms_[k] = -t;
        return r;
    }
    JetSeries operator-(const JetSeries& o) const { return *this + (-o); }
    JetSeries operator*(const JetSeries& o) const {
        JetSeries r(n_, order_);
        for (const auto& [ka, ta] : terms_)
            for (const auto& [kb, tb] : o.terms_) {
                YKey k;
                int deg = 0;
                for (int i = 0; i < kMaxTransverse; ++i) {
                    k.e[i] = static_cast<uint8_t>(ka.e[i] + kb.e[i]);
                    deg += k.e[i];
                }
                if (deg <= order_) r.add(k, ta * tb);
            }
        return r;
    }
    JetSeries scale(Complex a) const {
        JetSeries r(n_, order_);
        for (const auto& [k, t] : terms_) r.terms_[k] = t * a;
        return r;
    }

    JetSeries d_y(int i) const {
        JetSeries r(n_, order_);
        for (const auto& [k, t] : terms_) {
            if (k.e[i] == 0) continue;
            YKey kk = k;
            kk.e[i] -= 1;
            r.add(kk, t * Complex(double(k.e[i])));
        }
        return r;
    }
    JetSeries d_s(double L) const {
        JetSeries r(n_, order_);
        for (const auto& [k, t] : terms_) {
            TrigSeries d = t.derivative(L);
            if (!d.empty()) r.terms_[k] = d;
        }
        return r;
    }

    /// f with f(s,0) == 1: power series of f^pow (pow = -1, 1/2, -1/2, ...),
    /// exact to the jet order.
    JetSeries fractional_power(double pow) const;
    /// log f for f(s,0) == 1.
    JetSeries logarithm() const;

    bool unit_at_origin(double tol = 1e-12) const {
        TrigSeries c0 = at(YKey{});
        return std::abs(c0.at_freq(0) - 1.0) <= tol && c0.max_abs() <= 1.0 + tol &&
               (c0 - TrigSeries(Complex(1))).max_abs() <= tol;
    }

    void prune(double tol) {
        for (auto it = terms_.begin(); it != terms_.end();) {
            it->second.prune(tol);
            it = it->second.empty() ? terms_.erase(it) : std::next(it);
        }
    }
    void truncate_modes(int max_mode) {
        for (auto it = terms_.begin(); it != terms_.end();) {
            it->second.truncate(max_mode);
            it = it->second.empty() ? terms_.erase(it) : std::next(it);
        }
    }

private:
    int n_ = 0;
    int order_ = 0;
    std::map<YKey, TrigSeries> terms_;
};

/// Coefficient jets of the (half-density reduced) Laplacian in Fermi
/// coordinates:  -Delta = goo d_s^2 + Gamma_o d_s + sum g^ij d_i d_j
///                        + sum Gamma_i d_i + sigma_o,
/// together with the density factor J.  All metric entries are the INVERSE
/// metric coefficients.
struct MetricJet {
    int n = 0;
    double L = 0;
    int order = 0;  // Taylor order in y
    JetSeries goo;                            // g^{oo}, = 1 + K_{ij} y_i y_j + ...
    std::vector<std::vector<JetSeries>> gij;  // g^{ij}, symmetric
    JetSeries gamma_o;
    std::vector<JetSeries> gamma_i;
    JetSeries sigma_o;
    JetSeries density;  // J(s,y); 1 when the jets are already half-density reduced

    void validate(const CurvatureLoop* loop = nullptr) const;
    std::string serialize() const;
    static MetricJet deserialize(const std::string& text);
};

/// Rescale g -> eps^2 g: L -> eps L, Taylor coefficients of y-degree k pick up
/// eps^{-k}, curvature eps^{-2}.
MetricJet scale_metric_jet(const MetricJet& m, double eps);
CurvatureLoop scale_loop(const CurvatureLoop& loop, double eps);

enum class ExpansionKind { Laplace, Model };

/// Terms of the semiclassical expansion, keyed by the half-order index m
/// (the h^{-2+m/2} coefficient).
struct SemiclassicalExpansion {
    int n = 0;
    double L = 0;
    ExpansionKind kind = ExpansionKind::Laplace;
    int mmax = 0;
    std::map<int, SymbolPolynomial> terms;

    const SymbolPolynomial& term(int m) const;
    SymbolPolynomial& slot(int m);
};

/// Conjugate jets of the plain Laplacian by J^{1/2}: returns coefficient jets
/// of the half-density Laplacian with density set to 1.
MetricJet half_density_reduce(const MetricJet& raw);

/// Build the expansion terms up to half-order M (phase shift, transverse
/// dilation, weightless variables).
SemiclassicalExpansion rescale_expand(const MetricJet& jets, int M);

struct ModelConjugation {
    SemiclassicalExpansion model;        // R-terms, periodic coefficients
    ActionPolynomial H;                  // model quadratic Hamiltonian
    std::vector<double> hat;             // its coefficients per action slot
    double frame_residual = 0.0;         // || R_1 - (2/L)(sigma + H/L) ||
    std::string convention = "model";    // which twist is in force
};

/// Conjugation by the moving metaplectic frame derived from the Wronskian:
/// kills the transverse part of the principal term and yields the model
/// expansion whose coefficients are honest trigonometric series.
ModelConjugation conjugate_to_model(const SemiclassicalExpansion& exp, const WronskianFrame& W,
                                    const FloquetClassification& F);

/// Symbol of an action polynomial under the Weyl quantization of the
/// commuting action operators (exact, including ordering constants).
SymbolPolynomial action_operator_symbol(const FloquetClassification& F, double L,
                                        const ActionPolynomial& P);
/// Classical symbol substitution only (no ordering corrections); quadratic
/// actions coincide in both.
SymbolPolynomial action_classical_symbol(const FloquetClassification& F, double L,
                                         const ActionPolynomial& P);

}  // namespace qbnf
