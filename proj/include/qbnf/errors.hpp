#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qbnf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotSymplectic : Error { using Error::Error; };
struct DegenerateSpectrum : Error { using Error::Error; };
struct SingularIMinusP : Error { using Error::Error; };
struct IntegratorFailure : Error { using Error::Error; };
struct ResonantSpectrum : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct SingularMap : Error { using Error::Error; };
struct NonPeriodicPrimitive : Error { using Error::Error; };
struct InsufficientJetOrder : Error { using Error::Error; };
struct InconsistentFrame : Error { using Error::Error; };
struct NonActionDiagonal : Error { using Error::Error; };
struct TruncationExceeded : Error { using Error::Error; };
struct MissingNormalForm : Error { using Error::Error; };
struct ResonantIterate : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct InconsistentResidual : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

/// Raised when a homological divisor falls below div_tol.  Carries the net
/// exponent vector of the offending monomial (one signed entry per Floquet
/// block) and the s-frequency at which the divisor degenerates.
struct ResonantDivisor : Error {
    std::vector<int> multi_index;
    int s_frequency = 0;
    double divisor_modulus = 0.0;
    ResonantDivisor(const std::string& msg, std::vector<int> m, int freq, double mod)
        : Error(msg), multi_index(std::move(m)), s_frequency(freq), divisor_modulus(mod) {}
};

}  // namespace qbnf
