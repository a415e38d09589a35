#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "qbnf/errors.hpp"
#include "qbnf/types.hpp"

namespace qbnf {

/// Truncated trigonometric series  f(s) = sum_k c_k exp(2 pi i k s / L).
/// The period L is carried by the caller; the series itself only stores the
/// integer mode index.  Real-valued series satisfy c_{-k} = conj(c_k).
class TrigSeries {
public:
    TrigSeries() = default;
    explicit TrigSeries(Complex c0) { if (c0 != 0.0) modes_[0] = c0; }

    static TrigSeries constant(Complex c) { return TrigSeries(c); }
    static TrigSeries mode(int k, Complex c) {
        TrigSeries t;
        if (c != 0.0) t.modes_[k] = c;
        return t;
    }
    /// cos/sin helpers for real input data.
    static TrigSeries cosine(int k, double amp) {
        TrigSeries t;
        t.add_mode(k, Complex(amp / 2, 0));
        t.add_mode(-k, Complex(amp / 2, 0));
        return t;
    }
    static TrigSeries sine(int k, double amp) {
        TrigSeries t;
        t.add_mode(k, Complex(0, -amp / 2));
        t.add_mode(-k, Complex(0, amp / 2));
        return t;
    }

    const std::map<int, Complex>& modes() const { return modes_; }
    bool empty() const { return modes_.empty(); }

    void add_mode(int k, Complex c) {
        auto it = modes_.find(k);
        if (it == modes_.end()) {
            if (c != 0.0) modes_[k] = c;
        } else {
            it->second += c;
            if (std::abs(it->second) == 0.0) modes_.erase(it);
        }
    }

    Complex at_freq(int k) const {
        auto it = modes_.find(k);
        return it == modes_.end() ? Complex(0) : it->second;
    }

    Complex eval(double s, double L) const {
        Complex v = 0;
        for (const auto& [k, c] : modes_) v += c * std::exp(Complex(0, 2 * M_PI * k * s / L));
        return v;
    }

    TrigSeries& operator+=(const TrigSeries& o) {
        for (const auto& [k, c] : o.modes_) add_mode(k, c);
        return *this;
    }
    TrigSeries operator+(const TrigSeries& o) const { TrigSeries t = *this; t += o; return t; }
    TrigSeries operator-() const {
        TrigSeries t;
        for (const auto& [k, c] : modes_) t.modes_[k] = -c;
        return t;
    }
    TrigSeries operator-(const TrigSeries& o) const { return *this + (-o); }
    TrigSeries operator*(Complex a) const {
        TrigSeries t;
        if (a == 0.0) return t;
        for (const auto& [k, c] : modes_) t.modes_[k] = a * c;
        return t;
    }
    TrigSeries operator*(const TrigSeries& o) const {
        TrigSeries t;
        for (const auto& [k1, c1] : modes_)
            for (const auto& [k2, c2] : o.modes_) t.add_mode(k1 + k2, c1 * c2);
        return t;
    }

    /// d/ds, with the 2*pi/L factor supplied by the caller's period.
    TrigSeries derivative(double L) const {
        TrigSeries t;
        for (const auto& [k, c] : modes_)
            if (k != 0) t.modes_[k] = c * Complex(0, 2 * M_PI * k / L);
        return t;
    }

    double max_abs() const {
        double m = 0;
        for (const auto& [k, c] : modes_) m = std::max(m, std::abs(c));
        return m;
    }

    void prune(double tol) {
        for (auto it = modes_.begin(); it != modes_.end();)
            it = (std::abs(it->second) <= tol) ? modes_.erase(it) : std::next(it);
    }

    void truncate(int max_mode) {
        for (auto it = modes_.begin(); it != modes_.end();)
            it = (std::abs(it->first) > max_mode) ? modes_.erase(it) : std::next(it);
    }

    bool is_real(double tol = 1e-12) const {
        for (const auto& [k, c] : modes_)
            if (std::abs(c - std::conj(at_freq(-k))) > tol) return false;
        return true;
    }

    /// Exact recovery of a band-limited series from uniform samples (plain DFT;
    /// sample counts here are a few hundred at most).
    static TrigSeries from_samples(const std::vector<Complex>& samples, int max_mode,
                                   double prune_tol = 1e-14) {
        const int N = static_cast<int>(samples.size());
        TrigSeries t;
        for (int k = -max_mode; k <= max_mode; ++k) {
            Complex c = 0;
            for (int j = 0; j < N; ++j)
                c += samples[j] * std::exp(Complex(0, -2 * M_PI * k * j / double(N)));
            c /= double(N);
            if (std::abs(c) > prune_tol) t.modes_[k] = c;
        }
        return t;
    }

private:
    std::map<int, Complex> modes_;
};

}  // namespace qbnf
