#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "qbnf/errors.hpp"
#include "qbnf/types.hpp"

namespace qbnf {

inline constexpr int kMaxActions = 8;

struct ActKey {
    std::array<uint8_t, kMaxActions> e{};
    bool operator<(const ActKey& o) const { return e < o.e; }
    bool operator==(const ActKey& o) const { return e == o.e; }
    int degree() const {
        int d = 0;
        for (auto v : e) d += v;
        return d;
    }
};

/// Polynomial in the commuting action variables.  Slot order is fixed by the
/// Floquet classification: I^e_1..I^e_p, I^h_1..I^h_q, then per loxodromic
/// block the pair (I^{ch,Re}_j, I^{ch,Im}_j).
class ActionPolynomial {
public:
    ActionPolynomial() = default;
    explicit ActionPolynomial(int nvars) : nvars_(nvars) {
        if (nvars < 0 || nvars > kMaxActions) throw DimensionMismatch("too many action variables");
    }

    static ActionPolynomial constant(int nvars, Complex c) {
        ActionPolynomial p(nvars);
        p.add_term(ActKey{}, c);
        return p;
    }
    static ActionPolynomial variable(int nvars, int slot) {
        ActionPolynomial p(nvars);
        ActKey k;
        k.e[slot] = 1;
        p.add_term(k, 1.0);
        return p;
    }

    int nvars() const { return nvars_; }
    const std::map<ActKey, Complex>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void add_term(const ActKey& k, Complex c) {
        if (c == 0.0) return;
        auto it = terms_.find(k);
        if (it == terms_.end()) {
            terms_[k] = c;
        } else {
            it->second += c;
            if (it->second == 0.0) terms_.erase(it);
        }
    }
    Complex coeff(const ActKey& k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? Complex(0) : it->second;
    }

    ActionPolynomial& operator+=(const ActionPolynomial& o) {
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    ActionPolynomial operator+(const ActionPolynomial& o) const {
        ActionPolynomial r = *this;
        return r += o;
    }
    ActionPolynomial operator-(const ActionPolynomial& o) const { return *this + o * Complex(-1); }
    ActionPolynomial operator*(Complex a) const {
        ActionPolynomial r(nvars_);
        if (a == 0.0) return r;
        for (const auto& [k, c] : terms_) r.terms_[k] = c * a;
        return r;
    }
    ActionPolynomial operator*(const ActionPolynomial& o) const {
        ActionPolynomial r(nvars_);
        for (const auto& [ka, ca] : terms_)
            for (const auto& [kb, cb] : o.terms_) {
                ActKey k;
                for (int i = 0; i < kMaxActions; ++i) k.e[i] = static_cast<uint8_t>(ka.e[i] + kb.e[i]);
                r.add_term(k, ca * cb);
            }
        return r;
    }

    ActionPolynomial pow(int m) const {
        ActionPolynomial r = constant(nvars_, 1.0);
        for (int i = 0; i < m; ++i) r = r * (*this);
        return r;
    }

    Complex eval(const CVec& actions) const {
        Complex v = 0;
        for (const auto& [k, c] : terms_) {
            Complex t = c;
            for (int i = 0; i < nvars_; ++i)
                for (int j = 0; j < k.e[i]; ++j) t *= actions(i);
            v += t;
        }
        return v;
    }

    int degree() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, k.degree());
        return d;
    }

    /// Terms of exact total degree d.
    ActionPolynomial homogeneous_part(int d) const {
        ActionPolynomial r(nvars_);
        for (const auto& [k, c] : terms_)
            if (k.degree() == d) r.terms_[k] = c;
        return r;
    }

    double max_imag() const {
        double m = 0;
        for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c.imag()));
        return m;
    }
    double max_abs() const {
        double m = 0;
        for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
        return m;
    }
    void prune(double tol) {
        for (auto it = terms_.begin(); it != terms_.end();)
            it = (std::abs(it->second) <= tol) ? terms_.erase(it) : std::next(it);
    }

    std::string dump(int nvars_hint = -1) const {
        std::ostringstream os;
        os.precision(17);
        const int nv = nvars_hint < 0 ? nvars_ : nvars_hint;
        for (const auto& [k, c] : terms_) {
            os << "(";
            for (int i = 0; i < nv; ++i) os << int(k.e[i]) << (i + 1 < nv ? " " : "");
            os << " | " << c.real() << " | " << c.imag() << ")\n";
        }
        return os.str();
    }

private:
    int nvars_ = 0;
    std::map<ActKey, Complex> terms_;
};

}  // namespace qbnf
