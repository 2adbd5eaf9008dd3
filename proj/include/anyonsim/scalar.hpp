// Scalar layer: complex arithmetic at the 24th root of unity, tolerances,
// and small helpers shared by every module.
//
// The theory lives at A = exp(i*pi/12), a primitive 24th root of unity
// (4r = 24 for r = level + 2 = 6).  Every quantity the simulator computes
// is an element of Q(zeta_24); the default numeric backend is
// double-precision complex, the exact backend lives in cyclotomic.hpp.

#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>

namespace anyonsim {

using Cx = std::complex<double>;

inline constexpr double kDefaultTol = 1e-9;
inline constexpr double kTightTol = 1e-12;

// Comparison tolerance, overridable through ANYONSIM_TOL.
inline double comparison_tol() {
    if (const char* env = std::getenv("ANYONSIM_TOL")) {
        char* end = nullptr;
        double v = std::strtod(env, &end);
        if (end != env && v > 0.0) return v;
    }
    return kDefaultTol;
}

// zeta_24^k = exp(2*pi*i*k/24) = exp(i*pi*k/12); k may be any integer.
inline Cx root24(long k) {
    long m = ((k % 24) + 24) % 24;
    const double angle = M_PI * static_cast<double>(m) / 12.0;
    return Cx{std::cos(angle), std::sin(angle)};
}

inline bool approx_eq(Cx a, Cx b, double tol = kDefaultTol) {
    return std::abs(a - b) <= tol;
}

inline bool approx_zero(Cx a, double tol = kDefaultTol) {
    return std::abs(a) <= tol;
}

// Formats a complex number as "a+bi" with fixed decimals (report convention).
inline std::string format_complex(Cx z, int decimals = 9) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.*f%+.*fi", decimals, z.real(), decimals, z.imag());
    return buf;
}

}  // namespace anyonsim
