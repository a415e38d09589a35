#include "qbnf/weyl.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qbnf {

namespace parallel {
namespace {
std::atomic<bool> g_enabled{true};
}
bool enabled() {
#ifdef _OPENMP
    return g_enabled.load();
#else
    return false;
#endif
}
void set_enabled(bool on) { g_enabled.store(on); }
int chunk_count() { return 64; }
}  // namespace parallel

namespace {

double falling(int e, int j) {
    double f = 1;
    for (int t = 0; t < j; ++t) f *= (e - t);
    return f;
}

double factorial(int j) {
    double f = 1;
    for (int t = 2; t <= j; ++t) f *= t;
    return f;
}

using TermVec = std::vector<std::pair<MonoKey, Complex>>;

TermVec to_vec(const std::map<MonoKey, Complex>& m) {
    return TermVec(m.begin(), m.end());
}

/// All contractions between one term of A and one term of B.
/// beta_i contracts d/dx_i of A with d/dxi_i of B, gamma_i the reverse;
/// bs contracts d/ds of A with d/dsigma of B, gs the reverse.
void moyal_term_pair(int n, double L, const MonoKey& ka, Complex ca, const MonoKey& kb, Complex cb,
                     std::map<MonoKey, Complex>& out) {
    const Complex ihalf(0, 0.5);
    const Complex mihalf(0, -0.5);
    const Complex dsa(0, 2 * M_PI * ka.freq / L);  // one d/ds acting on the A factor
    const Complex dsb(0, 2 * M_PI * kb.freq / L);

    // iterate the 2n+2 contraction exponents with a small odometer
    std::array<int, 2 * kMaxTransverse + 2> lim{}, idx{};
    for (int i = 0; i < n; ++i) {
        lim[i] = std::min<int>(ka.x(i), kb.xi(i));           // beta_i
        lim[kMaxTransverse + i] = std::min<int>(ka.xi(i), kb.x(i));  // gamma_i
    }
    lim[2 * kMaxTransverse] = (ka.freq == 0) ? 0 : kb.sig;   // bs
    lim[2 * kMaxTransverse + 1] = (kb.freq == 0) ? 0 : ka.sig;  // gs

    while (true) {
        Complex w = ca * cb;
        MonoKey k;
        k.freq = static_cast<int16_t>(ka.freq + kb.freq);
        int sig = ka.sig + kb.sig;
        for (int i = 0; i < n; ++i) {
            const int b = idx[i], g = idx[kMaxTransverse + i];
            if (b) w *= std::pow(ihalf, b) / factorial(b) * falling(ka.x(i), b) * falling(kb.xi(i), b);
            if (g) w *= std::pow(mihalf, g) / factorial(g) * falling(ka.xi(i), g) * falling(kb.x(i), g);
            k.e[i] = static_cast<uint8_t>(ka.x(i) - b + kb.x(i) - g);
            k.e[kMaxTransverse + i] = static_cast<uint8_t>(ka.xi(i) - g + kb.xi(i) - b);
        }
        const int bs = idx[2 * kMaxTransverse], gs = idx[2 * kMaxTransverse + 1];
        if (bs) w *= std::pow(ihalf * dsa, bs) / factorial(bs) * falling(kb.sig, bs);
        if (gs) w *= std::pow(mihalf * dsb, gs) / factorial(gs) * falling(ka.sig, gs);
        sig -= bs + gs;
        k.sig = static_cast<uint8_t>(sig);

        if (w != 0.0) {
            auto it = out.find(k);
            if (it == out.end()) out[k] = w;
            else {
                it->second += w;
                if (it->second == 0.0) out.erase(it);
            }
        }

        int pos = 0;
        for (; pos < 2 * kMaxTransverse + 2; ++pos) {
            if (idx[pos] < lim[pos]) {
                ++idx[pos];
                break;
            }
            idx[pos] = 0;
        }
        if (pos == 2 * kMaxTransverse + 2) break;
    }
}

void merge_into(std::map<MonoKey, Complex>& dst, const std::map<MonoKey, Complex>& src) {
    for (const auto& [k, c] : src) {
        auto it = dst.find(k);
        if (it == dst.end()) dst[k] = c;
        else {
            it->second += c;
            if (it->second == 0.0) dst.erase(it);
        }
    }
}

}  // namespace

SymbolPolynomial SymbolPolynomial::pointwise(const SymbolPolynomial& o) const {
    check_compatible(o);
    SymbolPolynomial r(n_, L_);
    for (const auto& [ka, ca] : terms_)
        for (const auto& [kb, cb] : o.terms_) {
            MonoKey k;
            for (int i = 0; i < 2 * kMaxTransverse; ++i)
                k.e[i] = static_cast<uint8_t>(ka.e[i] + kb.e[i]);
            k.sig = static_cast<uint8_t>(ka.sig + kb.sig);
            k.freq = static_cast<int16_t>(ka.freq + kb.freq);
            r.add_term(k, ca * cb);
        }
    return r;
}

SymbolPolynomial SymbolPolynomial::s_primitive(const SymbolPolynomial& Q0) const {
    SymbolPolynomial r = Q0;
    for (const auto& [k, c] : terms_) {
        if (k.freq == 0)
            throw NonPeriodicPrimitive("s_primitive called on input with nonzero s-average");
        const Complex amp = c * L_ * Complex(0, -L_ / (2 * M_PI * k.freq));  // L * L/(2 pi i f)
        r.add_term(k, amp);
        MonoKey k0 = k;
        k0.freq = 0;
        r.add_term(k0, -amp);
    }
    return r;
}

Complex SymbolPolynomial::eval(double s, const CVec& u, double sig) const {
    Complex v = 0;
    for (const auto& [k, c] : terms_) {
        Complex t = c * std::exp(Complex(0, 2 * M_PI * k.freq * s / L_));
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < k.x(i); ++j) t *= u(i);
            for (int j = 0; j < k.xi(i); ++j) t *= u(n_ + i);
        }
        for (int j = 0; j < k.sig; ++j) t *= sig;
        v += t;
    }
    return v;
}

std::string SymbolPolynomial::dump() const {
    std::ostringstream os;
    os.precision(17);
    os << "symbol n=" << n_ << " L=" << L_ << "\n";
    for (const auto& [k, c] : terms_) {
        os << "(";
        for (int i = 0; i < n_; ++i) os << k.x(i) << " ";
        for (int i = 0; i < n_; ++i) os << k.xi(i) << " ";
        os << int(k.sig) << " | " << k.freq << " | " << c.real() << " | " << c.imag() << ")\n";
    }
    return os.str();
}

SymbolPolynomial SymbolPolynomial::parse(const std::string& text) {
    std::istringstream is(text);
    std::string word;
    is >> word;
    if (word != "symbol") throw Error("bad symbol dump header");
    int n = 0;
    double L = 1;
    is >> word;
    n = std::stoi(word.substr(2));
    is >> word;
    L = std::stod(word.substr(2));
    SymbolPolynomial r(n, L);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::string body = line;
        for (char& ch : body)
            if (ch == '(' || ch == ')' || ch == '|') ch = ' ';
        std::istringstream ls(body);
        MonoKey k;
        int v;
        for (int i = 0; i < n; ++i) {
            ls >> v;
            k.e[i] = static_cast<uint8_t>(v);
        }
        for (int i = 0; i < n; ++i) {
            ls >> v;
            k.e[kMaxTransverse + i] = static_cast<uint8_t>(v);
        }
        ls >> v;
        k.sig = static_cast<uint8_t>(v);
        int f;
        double re, im;
        ls >> f >> re >> im;
        k.freq = static_cast<int16_t>(f);
        r.add_term(k, Complex(re, im));
    }
    return r;
}

SymbolPolynomial moyal_product(const SymbolPolynomial& A, const SymbolPolynomial& B) {
    if (A.n() != B.n() || A.period() != B.period())
        throw DimensionMismatch("moyal_product: dimension/period mismatch");
    const int n = A.n();
    const double L = A.period();
    SymbolPolynomial R(n, L);
    if (A.empty() || B.empty()) return R;

    const TermVec av = to_vec(A.terms());
    const TermVec bv = to_vec(B.terms());

    // fixed chunk decomposition of A's terms; merge order is chunk order, so
    // the result is identical for the serial and parallel paths
    const int nchunk = std::min<int>(parallel::chunk_count(), static_cast<int>(av.size()));
    std::vector<std::map<MonoKey, Complex>> partial(std::max(nchunk, 1));

    auto run_chunk = [&](int ci) {
        const std::size_t lo = av.size() * ci / nchunk;
        const std::size_t hi = av.size() * (ci + 1) / nchunk;
        auto& out = partial[ci];
        for (std::size_t ia = lo; ia < hi; ++ia)
            for (const auto& [kb, cb] : bv)
                moyal_term_pair(n, L, av[ia].first, av[ia].second, kb, cb, out);
    };

    if (parallel::enabled() && nchunk > 1 &&
        av.size() * bv.size() > 4096) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
        for (int ci = 0; ci < nchunk; ++ci) run_chunk(ci);
#else
        for (int ci = 0; ci < nchunk; ++ci) run_chunk(ci);
#endif
    } else {
        for (int ci = 0; ci < nchunk; ++ci) run_chunk(ci);
    }

    std::map<MonoKey, Complex> acc;
    for (int ci = 0; ci < nchunk; ++ci) merge_into(acc, partial[ci]);
    for (const auto& [k, c] : acc) R.add_term(k, c);
    return R;
}

SymbolPolynomial moyal_bracket(const SymbolPolynomial& A, const SymbolPolynomial& B) {
    SymbolPolynomial r = moyal_product(A, B) - moyal_product(B, A);
    return r * Complex(0, -1);  // divide by i
}

SymbolPolynomial poisson_bracket(const SymbolPolynomial& A, const SymbolPolynomial& B) {
    // {A,B} = sum_i dA/dx_i dB/dxi_i - dA/dxi_i dB/dx_i + dA/ds dB/dsigma - dA/dsigma dB/ds
    const int n = A.n();
    const double L = A.period();
    SymbolPolynomial r(n, L);
    auto dvar = [&](const SymbolPolynomial& S, int slot) {
        // slot: 0..n-1 -> x_i ; n..2n-1 -> xi ; 2n -> s ; 2n+1 -> sigma
        SymbolPolynomial d(n, L);
        for (const auto& [k, c] : S.terms()) {
            MonoKey kk = k;
            Complex cc = c;
            if (slot < n) {
                if (k.x(slot) == 0) continue;
                cc *= double(k.x(slot));
                kk.e[slot] -= 1;
            } else if (slot < 2 * n) {
                const int i = slot - n;
                if (k.xi(i) == 0) continue;
                cc *= double(k.xi(i));
                kk.e[kMaxTransverse + i] -= 1;
            } else if (slot == 2 * n) {
                if (k.freq == 0) continue;
                cc *= Complex(0, 2 * M_PI * k.freq / L);
            } else {
                if (k.sig == 0) continue;
                cc *= double(k.sig);
                kk.sig -= 1;
            }
            d.add_term(kk, cc);
        }
        return d;
    };
    for (int i = 0; i < n; ++i) {
        r += dvar(A, i).pointwise(dvar(B, n + i));
        r -= dvar(A, n + i).pointwise(dvar(B, i));
    }
    r += dvar(A, 2 * n).pointwise(dvar(B, 2 * n + 1));
    r -= dvar(A, 2 * n + 1).pointwise(dvar(B, 2 * n));
    return r;
}

SymbolPolynomial substitute_images(const SymbolPolynomial& A,
                                   const std::vector<SymbolPolynomial>& images) {
    const int n = A.n();
    const double L = A.period();
    if (static_cast<int>(images.size()) != 2 * n)
        throw DimensionMismatch("substitute_images: need one image per transverse variable");

    // power cache per variable
    std::vector<std::vector<SymbolPolynomial>> pow(2 * n);
    for (int v = 0; v < 2 * n; ++v) pow[v].push_back(SymbolPolynomial::constant(n, L, 1.0));

    auto power = [&](int v, int e) -> const SymbolPolynomial& {
        auto& vec = pow[v];
        while (static_cast<int>(vec.size()) <= e) vec.push_back(vec.back().pointwise(images[v]));
        return vec[e];
    };

    SymbolPolynomial r(n, L);
    for (const auto& [k, c] : A.terms()) {
        SymbolPolynomial t = SymbolPolynomial::constant(n, L, c);
        for (int i = 0; i < n; ++i) {
            if (k.x(i)) t = t.pointwise(power(i, k.x(i)));
            if (k.xi(i)) t = t.pointwise(power(n + i, k.xi(i)));
        }
        MonoKey extra;
        extra.sig = k.sig;
        extra.freq = k.freq;
        SymbolPolynomial shift(n, L);
        shift.add_term(extra, 1.0);
        r += t.pointwise(shift);
    }
    return r;
}

SymbolPolynomial substitute_linear(const SymbolPolynomial& A, const CMat& C) {
    const int n = A.n();
    if (C.rows() != 2 * n || C.cols() != 2 * n)
        throw DimensionMismatch("substitute_linear: matrix size mismatch");
    if (std::abs(C.determinant()) < 1e-300) throw SingularMap("substitute_linear: singular map");
    std::vector<SymbolPolynomial> images;
    images.reserve(2 * n);
    for (int v = 0; v < 2 * n; ++v) {
        SymbolPolynomial img(n, A.period());
        for (int j = 0; j < 2 * n; ++j) {
            if (C(v, j) == 0.0) continue;
            MonoKey k;
            if (j < n) k.e[j] = 1;
            else k.e[kMaxTransverse + (j - n)] = 1;
            img.add_term(k, C(v, j));
        }
        images.push_back(std::move(img));
    }
    return substitute_images(A, images);
}

SymbolPolynomial to_right_ordered(const SymbolPolynomial& A) {
    // b_R = exp( (1/(2i)) d_s d_sigma ) b_W, termwise exact
    SymbolPolynomial r(A.n(), A.period());
    const double L = A.period();
    for (const auto& [k, c] : A.terms()) {
        for (int j = 0; j <= k.sig; ++j) {
            if (j > 0 && k.freq == 0) break;
            Complex w = c;
            if (j > 0)
                w *= std::pow(Complex(0, -0.5) * Complex(0, 2 * M_PI * k.freq / L), j) *
                     falling(k.sig, j) / factorial(j);
            MonoKey kk = k;
            kk.sig = static_cast<uint8_t>(k.sig - j);
            r.add_term(kk, w);
        }
    }
    return r;
}

SymbolPolynomial from_right_ordered(const SymbolPolynomial& A) {
    SymbolPolynomial r(A.n(), A.period());
    const double L = A.period();
    for (const auto& [k, c] : A.terms()) {
        for (int j = 0; j <= k.sig; ++j) {
            if (j > 0 && k.freq == 0) break;
            Complex w = c;
            if (j > 0)
                w *= std::pow(Complex(0, 0.5) * Complex(0, 2 * M_PI * k.freq / L), j) *
                     falling(k.sig, j) / factorial(j);
            MonoKey kk = k;
            kk.sig = static_cast<uint8_t>(k.sig - j);
            r.add_term(kk, w);
        }
    }
    return r;
}

SymbolPolynomial weight_zero_part(const SymbolPolynomial& A) {
    return to_right_ordered(A).sigma_coefficient(0);
}

SymbolPolynomial conjugate_moving_frame(const SymbolPolynomial& A,
                                        const std::vector<SymbolPolynomial>& images,
                                        const SymbolPolynomial& G) {
    const int n = A.n();
    const double L = A.period();
    const SymbolPolynomial R = to_right_ordered(A);
    const int kmax = R.max_sigma_power();

    // Weyl powers of (sigma + G)
    SymbolPolynomial base = SymbolPolynomial::sigma(n, L) + G;
    std::vector<SymbolPolynomial> spow;
    spow.push_back(SymbolPolynomial::constant(n, L, 1.0));
    for (int k = 1; k <= kmax; ++k) spow.push_back(moyal_product(spow.back(), base));

    SymbolPolynomial out(n, L);
    for (int k = 0; k <= kmax; ++k) {
        SymbolPolynomial ak = R.sigma_coefficient(k);
        if (ak.empty()) continue;
        ak = substitute_images(ak, images);
        out += (k == 0) ? ak : moyal_product(ak, spow[k]);
    }
    return out;
}

}  // namespace qbnf
