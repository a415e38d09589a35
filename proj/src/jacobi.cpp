#include "qbnf/jacobi.hpp"

#include <cmath>

#include "qbnf/ode.hpp"

namespace qbnf {

Mat CurvatureLoop::K(double s) const {
    CMat acc = CMat::Zero(n, n);
    for (const auto& [k, m] : K_modes) acc += m * std::exp(Complex(0, 2 * M_PI * k * s / L));
    return acc.real();
}

void CurvatureLoop::validate() const {
    if (n <= 0 || L <= 0) throw Error("CurvatureLoop: bad dimensions");
    for (const auto& [k, m] : K_modes) {
        if (m.rows() != n || m.cols() != n) throw DimensionMismatch("K mode size");
        auto it = K_modes.find(-k);
        if (it == K_modes.end() || (m - it->second.conjugate()).cwiseAbs().maxCoeff() > 1e-12)
            throw Error("CurvatureLoop: K modes are not conjugate-symmetric (K not real)");
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw Error("CurvatureLoop: K(s) not symmetric");
    }
    if (holonomy.rows() != n || holonomy.cols() != n)
        throw DimensionMismatch("holonomy size");
    if ((holonomy.transpose() * holonomy - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
        throw Error("CurvatureLoop: holonomy not orthogonal");
}

CurvatureLoop CurvatureLoop::constant(int n, double L, const Mat& K0) {
    CurvatureLoop loop;
    loop.n = n;
    loop.L = L;
    loop.K_modes[0] = K0.cast<Complex>();
    loop.holonomy = Mat::Identity(n, n);
    loop.validate();
    return loop;
}

CurvatureLoop CurvatureLoop::hill(double L, double a, double b) {
    CurvatureLoop loop;
    loop.n = 1;
    loop.L = L;
    loop.K_modes[0] = CMat::Constant(1, 1, Complex(a));
    if (b != 0) {
        loop.K_modes[1] = CMat::Constant(1, 1, Complex(b / 2));
        loop.K_modes[-1] = CMat::Constant(1, 1, Complex(b / 2));
    }
    loop.holonomy = Mat::Identity(1, 1);
    loop.validate();
    return loop;
}

namespace {
std::function<Mat(double)> jacobi_rhs(const CurvatureLoop& loop) {
    const int n = loop.n;
    return [&loop, n](double s) {
        Mat A = Mat::Zero(2 * n, 2 * n);
        A.block(0, n, n, n) = Mat::Identity(n, n);
        A.block(n, 0, n, n) = -loop.K(s);
        return A;
    };
}

Mat weight_scaling(int n, double L) {
    Mat S = Mat::Zero(2 * n, 2 * n);
    S.block(0, 0, n, n) = Mat::Identity(n, n) / L;
    S.block(n, n, n, n) = Mat::Identity(n, n) * L;
    return S;
}
}  // namespace

Vec integrate_jacobi(const CurvatureLoop& loop, const Vec& y0, double s0, double s1,
                     double int_tol) {
    loop.validate();
    if (y0.size() != 2 * loop.n) throw DimensionMismatch("integrate_jacobi: state size");
    Mat U = y0;
    return integrate_linear(jacobi_rhs(loop), U, s0, s1, int_tol).col(0);
}

std::vector<Mat> jacobi_fundamental_grid(const CurvatureLoop& loop, int N_s, double int_tol) {
    loop.validate();
    const int n = loop.n;
    std::vector<Mat> grid;
    grid.reserve(N_s + 1);
    Mat U = Mat::Identity(2 * n, 2 * n);
    grid.push_back(U);
    const auto rhs = jacobi_rhs(loop);
    for (int i = 1; i <= N_s; ++i)
        grid.push_back(U = integrate_linear(rhs, U, (i - 1) * loop.L / N_s, i * loop.L / N_s,
                                            int_tol));
    return grid;
}

SymplecticMatrix monodromy(const CurvatureLoop& loop, double int_tol, double tol_symp) {
    loop.validate();
    const int n = loop.n;
    const Mat Phi = integrate_linear(jacobi_rhs(loop), Mat::Identity(2 * n, 2 * n), 0, loop.L,
                                     int_tol);
    Mat That = Mat::Zero(2 * n, 2 * n);
    That.block(0, 0, n, n) = loop.holonomy.transpose();
    That.block(n, n, n, n) = loop.holonomy.transpose();
    const Mat S = weight_scaling(n, loop.L);
    return SymplecticMatrix(n, S * (That * Phi) * S.inverse(), tol_symp);
}

Mat WronskianFrame::eval(double s) const {
    Mat P = Mat::Zero(2 * n, 2 * n);
    for (int r = 0; r < 2 * n; ++r)
        for (int c = 0; c < 2 * n; ++c) P(r, c) = periodic_modes[r][c].eval(s, L).real();
    return P * matrix_exp((s / L) * generator);
}

double WronskianFrame::max_symplectic_residual() const {
    double m = 0;
    for (const auto& W : samples) m = std::max(m, symplectic_residual(W));
    return m;
}

double WronskianFrame::monodromy_residual(const CurvatureLoop& loop, double int_tol) const {
    const auto rhs = [&loop](double s) {
        const int nn = loop.n;
        Mat A = Mat::Zero(2 * nn, 2 * nn);
        A.block(0, nn, nn, nn) = Mat::Identity(nn, nn);
        A.block(nn, 0, nn, nn) = -loop.K(s);
        return A;
    };
    const Mat S = weight_scaling(n, L);
    const Mat Sinv = S.inverse();
    double worst = 0;
    const int stride = std::max(1, N_s / 16);
    for (int i = 0; i < N_s; i += stride) {
        const double s = i * L / N_s;
        const Mat advanced = S * integrate_linear(rhs, Sinv * samples[i], s, s + L, int_tol);
        const Mat law = samples[i] * normal_form;
        worst = std::max(worst, (advanced - law).cwiseAbs().maxCoeff());
    }
    return worst;
}

WronskianFrame build_wronskian(const CurvatureLoop& loop, const FloquetClassification& F,
                               int N_s, double int_tol) {
    loop.validate();
    const int n = loop.n;
    if (F.n != n) throw DimensionMismatch("build_wronskian: classification dimension");

    WronskianFrame W;
    W.n = n;
    W.L = loop.L;
    W.N_s = N_s;
    const Mat S = weight_scaling(n, loop.L);
    const Mat Sinv = S.inverse();
    const auto grid = jacobi_fundamental_grid(loop, N_s, int_tol);
    W.frame0 = F.frame;
    for (int i = 0; i < N_s; ++i) W.samples.push_back(S * grid[i] * Sinv * F.frame);

    const Mat P = S * grid[N_s] * Sinv;  // holonomy = identity for frame use
    W.normal_form = F.frame.inverse() * P * F.frame;
    W.has_negative_pair =
        std::any_of(F.neg_flags.begin(), F.neg_flags.end(), [](bool b) { return b; });

    std::vector<double> coeffs;
    for (double a : F.alpha) coeffs.push_back(a);
    for (double l : F.lambda) coeffs.push_back(l);
    for (int j = 0; j < F.c; ++j) {
        coeffs.push_back(F.mu[j]);
        coeffs.push_back(F.nu[j]);
    }
    W.generator = model_hamilton_matrix(F, coeffs);
    if (W.has_negative_pair) W.generator = Mat::Zero(2 * n, 2 * n);  // eval() degrades only

    // trigonometric modes of the periodic part W(s) exp(-(s/L) Xi)
    W.periodic_modes.assign(2 * n, std::vector<TrigSeries>(2 * n));
    const int max_mode = std::min(N_s / 2 - 1, 64);
    std::vector<std::vector<Complex>> samp(2 * n * 2 * n, std::vector<Complex>(N_s));
    for (int i = 0; i < N_s; ++i) {
        const double s = i * loop.L / N_s;
        const Mat Pp = W.samples[i] * matrix_exp(-(s / loop.L) * W.generator);
        for (int r = 0; r < 2 * n; ++r)
            for (int c = 0; c < 2 * n; ++c) samp[r * 2 * n + c][i] = Pp(r, c);
    }
    for (int r = 0; r < 2 * n; ++r)
        for (int c = 0; c < 2 * n; ++c)
            W.periodic_modes[r][c] = TrigSeries::from_samples(samp[r * 2 * n + c], max_mode);
    return W;
}

}  // namespace qbnf
