#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qbnf/errors.hpp"
#include "qbnf/trig.hpp"
#include "qbnf/types.hpp"

namespace qbnf {

inline constexpr int kMaxTransverse = 4;  // transverse dimension cap (n <= 4)

/// Monomial key of a Weyl symbol term: exponents of the transverse variables
/// (x_1..x_n, xi_1..xi_n), the power of sigma (the symbol of D_s) and the
/// integer s-frequency.
struct MonoKey {
    std::array<uint8_t, 2 * kMaxTransverse> e{};  // x at [0..n), xi at [kMaxTransverse..)
    uint8_t sig = 0;
    int16_t freq = 0;

    bool operator<(const MonoKey& o) const {
        if (e != o.e) return e < o.e;
        if (sig != o.sig) return sig < o.sig;
        return freq < o.freq;
    }
    bool operator==(const MonoKey& o) const {
        return e == o.e && sig == o.sig && freq == o.freq;
    }
    int x(int i) const { return e[i]; }
    int xi(int i) const { return e[kMaxTransverse + i]; }
    int degree() const {
        int d = 0;
        for (auto v : e) d += v;
        return d;
    }
};

/// Sparse polynomial in the 2n transverse phase-space variables and sigma,
/// with s-periodic trigonometric coefficients of period L.
class SymbolPolynomial {
public:
    SymbolPolynomial() = default;
    SymbolPolynomial(int n, double L) : n_(n), L_(L) {
        if (n < 0 || n > kMaxTransverse) throw DimensionMismatch("transverse dimension out of range");
    }

    int n() const { return n_; }
    double period() const { return L_; }
    const std::map<MonoKey, Complex>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    static SymbolPolynomial constant(int n, double L, Complex c) {
        SymbolPolynomial s(n, L);
        s.add_term(MonoKey{}, c);
        return s;
    }
    static SymbolPolynomial variable_x(int n, double L, int i) {
        SymbolPolynomial s(n, L);
        MonoKey k;
        k.e[i] = 1;
        s.add_term(k, 1.0);
        return s;
    }
    static SymbolPolynomial variable_xi(int n, double L, int i) {
        SymbolPolynomial s(n, L);
        MonoKey k;
        k.e[kMaxTransverse + i] = 1;
        s.add_term(k, 1.0);
        return s;
    }
    static SymbolPolynomial sigma(int n, double L) {
        SymbolPolynomial s(n, L);
        MonoKey k;
        k.sig = 1;
        s.add_term(k, 1.0);
        return s;
    }

    void add_term(const MonoKey& k, Complex c) {
        if (c == 0.0) return;
        auto it = terms_.find(k);
        if (it == terms_.end()) {
            terms_[k] = c;
        } else {
            it->second += c;
            if (it->second == 0.0) terms_.erase(it);
        }
    }

    Complex coeff(const MonoKey& k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? Complex(0) : it->second;
    }

    SymbolPolynomial& operator+=(const SymbolPolynomial& o) {
        check_compatible(o);
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    SymbolPolynomial& operator-=(const SymbolPolynomial& o) {
        check_compatible(o);
        for (const auto& [k, c] : o.terms_) add_term(k, -c);
        return *this;
    }
    SymbolPolynomial operator+(const SymbolPolynomial& o) const {
        SymbolPolynomial r = *this;
        return r += o;
    }
    SymbolPolynomial operator-(const SymbolPolynomial& o) const {
        SymbolPolynomial r = *this;
        return r -= o;
    }
    SymbolPolynomial operator*(Complex a) const {
        SymbolPolynomial r(n_, L_);
        if (a == 0.0) return r;
        for (const auto& [k, c] : terms_) r.terms_[k] = c * a;
        return r;
    }
    SymbolPolynomial operator-() const { return *this * Complex(-1.0); }

    /// Plain commutative product (used for coefficient arithmetic and
    /// variable substitution, not for operator composition).
    SymbolPolynomial pointwise(const SymbolPolynomial& o) const;

    /// Multiply by a periodic coefficient function of s.
    SymbolPolynomial scaled_by_series(const TrigSeries& f) const {
        SymbolPolynomial r(n_, L_);
        for (const auto& [k, c] : terms_)
            for (const auto& [m, a] : f.modes()) {
                MonoKey kk = k;
                kk.freq = static_cast<int16_t>(kk.freq + m);
                r.add_term(kk, c * a);
            }
        return r;
    }

    int max_degree() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, k.degree());
        return d;
    }
    int max_sigma_power() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max<int>(d, k.sig);
        return d;
    }
    double max_abs() const {
        double m = 0;
        for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
        return m;
    }
    double sum_abs() const {
        double m = 0;
        for (const auto& [k, c] : terms_) m += std::abs(c);
        return m;
    }

    void prune(double tol) {
        for (auto it = terms_.begin(); it != terms_.end();)
            it = (std::abs(it->second) <= tol) ? terms_.erase(it) : std::next(it);
    }
    /// Drop terms with transverse degree + 2*sigma power above the cap.
    /// Returns the absolute mass removed.
    double truncate_degree(int cap) {
        double dropped = 0;
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (it->first.degree() + 2 * it->first.sig > cap) {
                dropped += std::abs(it->second);
                it = terms_.erase(it);
            } else {
                ++it;
            }
        }
        return dropped;
    }

    /// Keep only terms matching a predicate.
    SymbolPolynomial filter(const std::function<bool(const MonoKey&)>& pred) const {
        SymbolPolynomial r(n_, L_);
        for (const auto& [k, c] : terms_)
            if (pred(k)) r.terms_[k] = c;
        return r;
    }

    /// Coefficient of sigma^p as a sigma-free symbol.
    SymbolPolynomial sigma_coefficient(int p) const {
        SymbolPolynomial r(n_, L_);
        for (const auto& [k, c] : terms_)
            if (k.sig == p) {
                MonoKey kk = k;
                kk.sig = 0;
                r.add_term(kk, c);
            }
        return r;
    }

    /// Multiply by sigma^p (plain, used when reassembling ordered forms).
    SymbolPolynomial times_sigma(int p) const {
        SymbolPolynomial r(n_, L_);
        for (const auto& [k, c] : terms_) {
            MonoKey kk = k;
            kk.sig = static_cast<uint8_t>(kk.sig + p);
            r.terms_[kk] = c;
        }
        return r;
    }

    /// Zero-frequency part (the s-average, (1/L) int_0^L ds).
    SymbolPolynomial s_average() const {
        return filter([](const MonoKey& k) { return k.freq == 0; });
    }

    /// Q0 + L * int_0^s (.) du, termwise on trigonometric modes.  Only valid
    /// on zero-average input; a surviving zero mode raises
    /// NonPeriodicPrimitive (secular terms are not representable).
    SymbolPolynomial s_primitive(const SymbolPolynomial& Q0) const;

    /// d/ds of the coefficients.
    SymbolPolynomial s_derivative() const {
        SymbolPolynomial r(n_, L_);
        for (const auto& [k, c] : terms_)
            if (k.freq != 0) r.terms_[k] = c * Complex(0, 2 * M_PI * k.freq / L_);
        return r;
    }

    /// Transverse parity: +1 if all terms have even transverse degree,
    /// -1 if all odd, 0 if mixed or zero.
    int parity() const {
        bool ev = false, od = false;
        for (const auto& [k, c] : terms_) ((k.degree() % 2 == 0) ? ev : od) = true;
        if (ev && od) return 0;
        if (ev) return 1;
        if (od) return -1;
        return 0;
    }

    SymbolPolynomial even_part() const {
        return filter([](const MonoKey& k) { return k.degree() % 2 == 0; });
    }
    SymbolPolynomial odd_part() const {
        return filter([](const MonoKey& k) { return k.degree() % 2 == 1; });
    }

    /// Max deviation from conjugate symmetry (zero for real-valued symbols).
    double reality_defect() const {
        double d = 0;
        for (const auto& [k, c] : terms_) {
            MonoKey kk = k;
            kk.freq = -k.freq;
            d = std::max(d, std::abs(c - std::conj(coeff(kk))));
        }
        return d;
    }

    Complex eval(double s, const CVec& u, double sig) const;

    /// Structured text dump, one line per term:
    ///   (e_x1 .. e_xn e_xi1 .. e_xin e_sig | freq | re | im)
    std::string dump() const;
    static SymbolPolynomial parse(const std::string& text);

private:
    void check_compatible(const SymbolPolynomial& o) const {
        if (n_ != o.n_ || L_ != o.L_) throw DimensionMismatch("symbol dimension/period mismatch");
    }

    int n_ = 0;
    double L_ = 1.0;
    std::map<MonoKey, Complex> terms_;
};

/// Exact Weyl composition of polynomial symbols (the bidifferential series
/// terminates on polynomials).  The (s, sigma) pair participates like a
/// canonical pair, which is what makes conjugation identities exact.
SymbolPolynomial moyal_product(const SymbolPolynomial& A, const SymbolPolynomial& B);

/// (A * B - B * A) / i
SymbolPolynomial moyal_bracket(const SymbolPolynomial& A, const SymbolPolynomial& B);

/// Classical Poisson bracket (leading term of the Moyal bracket); kept as an
/// independent implementation for cross-checks.
SymbolPolynomial poisson_bracket(const SymbolPolynomial& A, const SymbolPolynomial& B);

/// Substitution of the transverse variables by degree-one images; sigma and
/// the s-dependence of the original symbol are untouched.  Images may carry
/// s-dependent coefficients (moving frames).
SymbolPolynomial substitute_images(const SymbolPolynomial& A,
                                   const std::vector<SymbolPolynomial>& images);

/// A |-> A o C for a constant complex linear map of the transverse variables.
SymbolPolynomial substitute_linear(const SymbolPolynomial& A, const CMat& C);

/// Weyl symbol -> right-ordered (all D_s moved right) and back.
SymbolPolynomial to_right_ordered(const SymbolPolynomial& A);
SymbolPolynomial from_right_ordered(const SymbolPolynomial& A);

/// The sigma-free part of the right-ordered form: the part of the operator
/// that survives on s-independent functions of the transverse variables.
SymbolPolynomial weight_zero_part(const SymbolPolynomial& A);

/// Replace D_s by D_s + Op(G) exactly: right-order, substitute transverse
/// variables through `images`, and rebuild with Weyl powers of (sigma + G).
/// This is the full effect of conjugation by a moving metaplectic family
/// whose frame has generator fitting G.
SymbolPolynomial conjugate_moving_frame(const SymbolPolynomial& A,
                                        const std::vector<SymbolPolynomial>& images,
                                        const SymbolPolynomial& G);

namespace parallel {
bool enabled();
void set_enabled(bool on);
int chunk_count();
}  // namespace parallel

}  // namespace qbnf
