#pragma once

#include <complex>
#include <Eigen/Dense>

namespace qbnf {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double kTolSymp = 1e-10;
inline constexpr double kTolEig = 1e-9;
inline constexpr double kDivTol = 1e-8;
inline constexpr double kTolHomo = 1e-9;
inline constexpr double kIntTol = 1e-11;

/// A complex value whose overall phase is only defined modulo quarter turns
/// (the Maslov factor of the metaplectic character is never computed).
struct PhasedComplex {
    Complex value{0.0, 0.0};
    bool phase_modulo_quarter_turn = true;
};

}  // namespace qbnf
