// Logical 9x9 gates on the 2-qutrit basis (00,02,04,20,22,24,40,42,44),
// the published gate constants, projective comparison, and the entangling
// certificate for diagonal gates.
//
// The four published diagonal gates are stored both numerically and as exact
// elements of Q(zeta_24), so their algebra (the recovery identities) can be
// checked without floating point.  Writing x = [a==2], y = [b==2] and
// w = e^{i 2 pi / 3}:
//   gate1[(a,b)] = w    when x == y, else 1      (fusion outcome 2)
//   gate2[(a,b)] = 1    when x|y == 0, else w^-1 (fusion outcome 0)
//   d    [(a,b)] = w^(x & y)
//   t    [(a,b)] = w^(x + y)                     (recovery twists)

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "anyonsim/cyclotomic.hpp"
#include "anyonsim/fusionspace.hpp"
#include "anyonsim/linalg.hpp"
#include "anyonsim/scalar.hpp"

namespace anyonsim {

using GateMatrix = Mat;  // 9x9 over the logical basis

// Diagonal gate with exact phases: each entry is zero or a 24th root.
struct ExactDiagonalGate {
    std::array<Cyc24, 9> diag;

    static ExactDiagonalGate identity() {
        ExactDiagonalGate g;
        for (auto& z : g.diag) z = Cyc24(1);
        return g;
    }

    friend ExactDiagonalGate operator*(const ExactDiagonalGate& a,
                                       const ExactDiagonalGate& b) {
        ExactDiagonalGate out;
        for (int k = 0; k < 9; ++k) out.diag[k] = a.diag[k] * b.diag[k];
        return out;
    }

    ExactDiagonalGate scaled(const Cyc24& s) const {
        ExactDiagonalGate out;
        for (int k = 0; k < 9; ++k) out.diag[k] = diag[k] * s;
        return out;
    }

    bool operator==(const ExactDiagonalGate& o) const { return diag == o.diag; }

    // Proportional by a single unit scalar (exact projective equality).
    bool proportional_to(const ExactDiagonalGate& o) const {
        if (o.diag[0].is_zero()) return false;
        Cyc24 ratio = diag[0] / o.diag[0];
        for (int k = 1; k < 9; ++k)
            if (diag[k] != ratio * o.diag[k]) return false;
        return true;
    }

    GateMatrix matrix() const {
        GateMatrix m(9, 9);
        for (int k = 0; k < 9; ++k) m(k, k) = diag[k].to_complex();
        return m;
    }
};

// The published gates of the protocol and its recovery algebra.
namespace paper_gates {

inline Cyc24 omega() { return Cyc24::root(8); }        // e^{i 2 pi/3}
inline Cyc24 omega_bar() { return Cyc24::root(-8); }   // e^{-i 2 pi/3}

namespace detail {
inline ExactDiagonalGate from_exponent(int (*expo)(int x, int y)) {
    ExactDiagonalGate g;
    for (int k = 0; k < 9; ++k) {
        auto [a, b] = LogicalEncoding::index_pair(k);
        g.diag[k] = Cyc24::root(8L * expo(a == 2, b == 2));
    }
    return g;
}
}  // namespace detail

// Theorem gate, fusion outcome 2: diag(w,1,w,1,w,1,w,1,w).
inline const ExactDiagonalGate& gate1() {
    static const ExactDiagonalGate g =
        detail::from_exponent(+[](int x, int y) { return (x ^ y) ? 0 : 1; });
    return g;
}

// Fusion outcome 0 gate: diag(1,w^-1,1,w^-1,w^-1,w^-1,1,w^-1,1).
inline const ExactDiagonalGate& gate2() {
    static const ExactDiagonalGate g =
        detail::from_exponent(+[](int x, int y) { return (x | y) ? -1 : 0; });
    return g;
}

// Gate after the recovery twists were applied to gate2: identity except w at |22>.
inline const ExactDiagonalGate& d_gate() {
    static const ExactDiagonalGate g =
        detail::from_exponent(+[](int x, int y) { return x & y; });
    return g;
}

// The sigma_1 full-twist-inverse pair on both blocks: diag of w^{[a=2]+[b=2]}.
inline const ExactDiagonalGate& recovery_t() {
    static const ExactDiagonalGate g =
        detail::from_exponent(+[](int x, int y) { return x + y; });
    return g;
}

}  // namespace paper_gates

// ---------------------------------------------------------------------------
// Projective comparison: true iff a unit phase lambda exists with
// max|G - lambda H| <= tol.  The Frobenius-optimal phase is tried first and a
// largest-entry ratio as fallback.

struct ProjectiveMatch {
    bool match = false;
    Cx phase{1.0, 0.0};
    double distance = 0.0;  // max-norm distance at the best phase tried
};

inline ProjectiveMatch compare_projective(const Mat& g, const Mat& h,
                                          double tol = kDefaultTol) {
    if (g.rows() != h.rows() || g.cols() != h.cols())
        throw std::invalid_argument("compare_projective: dimension mismatch");
    auto dist_at = [&](Cx lambda) {
        double d = 0.0;
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j)
                d = std::max(d, std::abs(g(i, j) - lambda * h(i, j)));
        return d;
    };

    std::vector<Cx> candidates;
    Cx overlap{0.0, 0.0};
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) overlap += std::conj(h(i, j)) * g(i, j);
    if (std::abs(overlap) > 1e-14) candidates.push_back(overlap / std::abs(overlap));
    // Fallback: the phase aligning the largest entry of h.
    std::size_t bi = 0, bj = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
            if (std::abs(h(i, j)) > best) { best = std::abs(h(i, j)); bi = i; bj = j; }
    if (best > 1e-14 && std::abs(g(bi, bj)) > 1e-14)
        candidates.push_back((g(bi, bj) / h(bi, bj)) /
                             std::abs(g(bi, bj) / h(bi, bj)));

    ProjectiveMatch out;
    out.distance = dist_at(Cx{1.0, 0.0});
    for (Cx lambda : candidates) {
        double d = dist_at(lambda);
        if (d < out.distance || !out.match) {
            out.distance = d;
            out.phase = lambda;
            out.match = d <= tol;
            if (out.match) break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Entangling certificate.  A diagonal 2-qudit gate is a tensor product of
// local diagonal gates iff its d x d phase matrix M[a][b] = G[(a,b),(a,b)] has
// rank 1; rank >= 2 certifies an entangling gate.

inline std::size_t entangling_rank(const Mat& gate, int qudit_dim = 3,
                                   double tol = kDefaultTol) {
    const std::size_t d = static_cast<std::size_t>(qudit_dim);
    if (gate.rows() != d * d || gate.cols() != d * d)
        throw std::invalid_argument("entangling_rank: gate is not 2-qudit");
    Mat phases(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) phases(a, b) = gate(a * d + b, a * d + b);
    return phases.rank(tol);
}

// Feasibility of writing a 2 x 3 coefficient table as an outer product
// (a_0, a_2) x (b_0, b_2, b_4): all 2x2 minors must vanish.  Returns the
// largest minor magnitude; factorization is infeasible when it exceeds tol.
inline double max_factorization_minor(const Mat& coeffs) {
    if (coeffs.rows() != 2 || coeffs.cols() != 3)
        throw std::invalid_argument("max_factorization_minor: need a 2x3 table");
    double worst = 0.0;
    for (std::size_t j1 = 0; j1 < 3; ++j1)
        for (std::size_t j2 = j1 + 1; j2 < 3; ++j2)
            worst = std::max(worst, std::abs(coeffs(0, j1) * coeffs(1, j2) -
                                             coeffs(0, j2) * coeffs(1, j1)));
    return worst;
}

}  // namespace anyonsim
