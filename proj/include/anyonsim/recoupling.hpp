// Recoupling data of the Kauffman-Lins SU(2) level-4 theory.
//
// Conventions, fixed once for the whole simulator:
//   * labels are integers 0..4 (twice-spin), level k = 4, r = k + 2 = 6;
//   * A = zeta_24 = exp(i*pi/12), a primitive 4r-th root of unity;
//   * [n] = (A^{2n} - A^{-2n}) / (A^2 - A^{-2}) = 2 sin(n*pi/6), so the
//     loop values Delta_a = (-1)^a [a+1] carry the Kauffman-Lins sign;
//   * theta and tet are the standard Kauffman-Lins net evaluations;
//   * sixj(a,b,m,c,d,n) = tet * Delta_n / (theta(a,d,n) theta(b,c,n)) is the
//     F-matrix entry in the KL gauge;
//   * f_matrix returns the unitary normalization of that 6j block, the gauge
//     in which every fusion-tree basis is orthonormal;
//   * r_symbol(a,b,c) = (-1)^{(a+b-c)/2} A^{(a(a+2)+b(b+2)-c(c+2))/2}, whose
//     square over channels (0,2,4) of (2,2) matches diag(1, e^{-i2pi/3}, 1)
//     up to one global phase.
//
// The formula layer is templated over a scalar backend so the same nets can
// be evaluated in double complex (default) or exactly in Q(zeta_24).

#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "anyonsim/cyclotomic.hpp"
#include "anyonsim/linalg.hpp"
#include "anyonsim/scalar.hpp"

namespace anyonsim {

using Label = int;

inline constexpr int kLevel = 4;
inline constexpr int kR = kLevel + 2;  // 6; quantum [6] = 0

struct AdmissibilityError : std::domain_error {
    using std::domain_error::domain_error;
};

inline bool is_label(Label a) { return a >= 0 && a <= kLevel; }

// Fixed parameters of the theory: level 4, r = 6, A a primitive 4r-th root.
struct TheoryParams {
    int level = kLevel;
    int r = kR;
    Cx a = root24(1);  // exp(i*pi/12)
};

inline const TheoryParams& theory_params() {
    static const TheoryParams params;
    return params;
}

// (a,b,c) admissible: parity, triangle, and the level cutoff a+b+c <= 2k.
inline bool admissible(Label a, Label b, Label c) {
    if (!is_label(a) || !is_label(b) || !is_label(c)) return false;
    if ((a + b + c) % 2 != 0) return false;
    if (c < std::abs(a - b) || c > a + b) return false;
    return a + b + c <= 2 * kLevel;
}

inline void require_admissible(Label a, Label b, Label c, const char* where) {
    if (!admissible(a, b, c))
        throw AdmissibilityError(std::string(where) + ": inadmissible triple (" +
                                 std::to_string(a) + "," + std::to_string(b) + "," +
                                 std::to_string(c) + ")");
}

inline std::vector<Label> fusion_channels(Label a, Label b) {
    std::vector<Label> out;
    for (Label c = 0; c <= kLevel; ++c)
        if (admissible(a, b, c)) out.push_back(c);
    return out;
}

// ---------------------------------------------------------------------------
// Scalar backends for the net formulas.

struct NumericBackend {
    using Scalar = Cx;
    static Scalar root(long k) { return root24(k); }
    static Scalar from_int(long n) { return Cx{static_cast<double>(n), 0.0}; }
};

struct ExactBackend {
    using Scalar = Cyc24;
    static Scalar root(long k) { return Cyc24::root(k); }
    static Scalar from_int(long n) { return Cyc24(n); }
};

namespace nets {

// [n] = (A^{2n} - A^{-2n}) / (A^2 - A^{-2})
template <class B>
typename B::Scalar quantum_int(int n) {
    if (n < 0) throw std::domain_error("quantum_int: negative argument");
    if (n == 0) return B::from_int(0);
    return (B::root(2 * n) - B::root(-2 * n)) / (B::root(2) - B::root(-2));
}

template <class B>
typename B::Scalar quantum_fact(int n) {
    auto acc = B::from_int(1);
    for (int k = 1; k <= n; ++k) acc = acc * quantum_int<B>(k);
    return acc;
}

// Delta_a = (-1)^a [a+1]
template <class B>
typename B::Scalar loop_value(Label a) {
    auto v = quantum_int<B>(a + 1);
    return (a % 2 == 0) ? v : -v;
}

// theta(a,b,c) with m = (a+b-c)/2, n = (b+c-a)/2, p = (c+a-b)/2:
//   (-1)^{m+n+p} [m+n+p+1]! [m]! [n]! [p]! / ([m+n]! [n+p]! [p+m]!)
template <class B>
typename B::Scalar theta(Label a, Label b, Label c) {
    require_admissible(a, b, c, "theta");
    const int m = (a + b - c) / 2;
    const int n = (b + c - a) / 2;
    const int p = (c + a - b) / 2;
    auto num = quantum_fact<B>(m + n + p + 1) * quantum_fact<B>(m) * quantum_fact<B>(n) *
               quantum_fact<B>(p);
    auto den = quantum_fact<B>(m + n) * quantum_fact<B>(n + p) * quantum_fact<B>(p + m);
    auto v = num / den;
    return ((m + n + p) % 2 == 0) ? v : -v;
}

// Tetrahedral net with edge labels (a,b,c,d,e,f): opposite edge pairs are
// (a,c), (b,d), (e,f); the four vertex triples are
//   (a,b,e), (c,d,e), (a,d,f), (b,c,f).
// Standard Kauffman-Lins sum:
//   Tet = (I! / E!) * sum_s (-1)^s [s+1]! / (prod_i [s-a_i]! prod_j [b_j-s]!)
// with a_i the vertex half-sums, b_j the opposite-pair half-sums,
// I! = prod_{i,j} [b_j - a_i]! and E! the product of [edge]! over all edges.
template <class B>
typename B::Scalar tet(Label a, Label b, Label c, Label d, Label e, Label f) {
    require_admissible(a, b, e, "tet");
    require_admissible(c, d, e, "tet");
    require_admissible(a, d, f, "tet");
    require_admissible(b, c, f, "tet");
    const int av[4] = {(a + b + e) / 2, (c + d + e) / 2, (a + d + f) / 2, (b + c + f) / 2};
    const int bv[3] = {(a + c + b + d) / 2, (a + c + e + f) / 2, (b + d + e + f) / 2};
    const int lo = *std::max_element(av, av + 4);
    const int hi = *std::min_element(bv, bv + 3);

    auto interior = B::from_int(1);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) interior = interior * quantum_fact<B>(bv[j] - av[i]);
    auto edges = quantum_fact<B>(a) * quantum_fact<B>(b) * quantum_fact<B>(c) *
                 quantum_fact<B>(d) * quantum_fact<B>(e) * quantum_fact<B>(f);

    auto total = B::from_int(0);
    for (int s = lo; s <= hi; ++s) {
        auto term = quantum_fact<B>(s + 1);
        auto den = B::from_int(1);
        for (int i = 0; i < 4; ++i) den = den * quantum_fact<B>(s - av[i]);
        for (int j = 0; j < 3; ++j) den = den * quantum_fact<B>(bv[j] - s);
        term = term / den;
        total = (s % 2 == 0) ? (total + term) : (total - term);
    }
    return interior / edges * total;
}

// KL-gauge 6j / F-matrix entry for the move
//   |(a b)_m c ; d>  =  sum_n  sixj(a,b,m,c,d,n)  |a (b c)_n ; d>
template <class B>
typename B::Scalar sixj(Label a, Label b, Label m, Label c, Label d, Label n) {
    require_admissible(a, b, m, "sixj");
    require_admissible(m, c, d, "sixj");
    require_admissible(b, c, n, "sixj");
    require_admissible(a, n, d, "sixj");
    return tet<B>(a, b, c, d, m, n) * loop_value<B>(n) /
           (theta<B>(a, d, n) * theta<B>(b, c, n));
}

// Half-twist eigenvalue of the exchange of charges a,b in channel c.
template <class B>
typename B::Scalar r_symbol(Label a, Label b, Label c) {
    require_admissible(a, b, c, "r_symbol");
    const int sign = (a + b - c) / 2;
    const long expo = (static_cast<long>(a) * (a + 2) + static_cast<long>(b) * (b + 2) -
                       static_cast<long>(c) * (c + 2)) /
                      2;
    auto v = B::root(expo);
    return (sign % 2 == 0) ? v : -v;
}

// Ribbon twist of a single label.
template <class B>
typename B::Scalar twist(Label a) {
    auto v = B::root(static_cast<long>(a) * (a + 2));
    return (a % 2 == 0) ? v : -v;
}

}  // namespace nets

// ---------------------------------------------------------------------------
// Double-precision front ends.  All of these are real at the chosen root, so
// they are exposed as double; r_symbol and twist stay complex.

inline double quantum_int(int n) { return nets::quantum_int<NumericBackend>(n).real(); }
inline double loop_value(Label a) { return nets::loop_value<NumericBackend>(a).real(); }
inline double theta(Label a, Label b, Label c) {
    return nets::theta<NumericBackend>(a, b, c).real();
}
inline double tet(Label a, Label b, Label c, Label d, Label e, Label f) {
    return nets::tet<NumericBackend>(a, b, c, d, e, f).real();
}
inline double sixj(Label a, Label b, Label m, Label c, Label d, Label n) {
    return nets::sixj<NumericBackend>(a, b, m, c, d, n).real();
}
inline Cx r_symbol(Label a, Label b, Label c) {
    return nets::r_symbol<NumericBackend>(a, b, c);
}
inline Cx twist(Label a) { return nets::twist<NumericBackend>(a); }

namespace exact {
inline Cyc24 quantum_int(int n) { return nets::quantum_int<ExactBackend>(n); }
inline Cyc24 loop_value(Label a) { return nets::loop_value<ExactBackend>(a); }
inline Cyc24 theta(Label a, Label b, Label c) { return nets::theta<ExactBackend>(a, b, c); }
inline Cyc24 tet(Label a, Label b, Label c, Label d, Label e, Label f) {
    return nets::tet<ExactBackend>(a, b, c, d, e, f);
}
inline Cyc24 sixj(Label a, Label b, Label m, Label c, Label d, Label n) {
    return nets::sixj<ExactBackend>(a, b, m, c, d, n);
}
inline Cyc24 r_symbol(Label a, Label b, Label c) {
    return nets::r_symbol<ExactBackend>(a, b, c);
}
}  // namespace exact

// ---------------------------------------------------------------------------
// F-matrices.
//
// f_matrix(a,b,c,d) is the change of basis
//   |(a b)_m c ; d>  =  sum_n  F[m,n]  |a (b c)_n ; d>
// in the unitary gauge: every fusion vertex (x,y;z) is rescaled by
// sqrt(|theta(x,y,z)/Delta_z|), which makes the tree bases orthonormal and F
// real orthogonal.  Within one block all vertex weights share a single sign,
// so the absolute values do not disturb the pentagon/hexagon identities.

struct FMatrix {
    Label a, b, c, d;
    std::vector<Label> row_channels;  // m with (a,b,m), (m,c,d) admissible
    std::vector<Label> col_channels;  // n with (b,c,n), (a,n,d) admissible
    Mat entries;                      // unitary gauge

    int row_index(Label m) const {
        for (std::size_t i = 0; i < row_channels.size(); ++i)
            if (row_channels[i] == m) return static_cast<int>(i);
        return -1;
    }
    int col_index(Label n) const {
        for (std::size_t i = 0; i < col_channels.size(); ++i)
            if (col_channels[i] == n) return static_cast<int>(i);
        return -1;
    }
    Cx at(Label m, Label n) const {
        int i = row_index(m), j = col_index(n);
        if (i < 0 || j < 0) return Cx{0.0, 0.0};
        return entries(i, j);
    }
};

namespace detail {

// Vertex weight theta(x,y,z)/Delta_z of the fusion vertex (x,y;z).
inline double vertex_weight(Label x, Label y, Label z) {
    return theta(x, y, z) / loop_value(z);
}

inline const FMatrix& f_matrix_uncached(FMatrix& f) {
    const Label a = f.a, b = f.b, c = f.c, d = f.d;
    for (Label m = 0; m <= kLevel; ++m)
        if (admissible(a, b, m) && admissible(m, c, d)) f.row_channels.push_back(m);
    for (Label n = 0; n <= kLevel; ++n)
        if (admissible(b, c, n) && admissible(a, n, d)) f.col_channels.push_back(n);
    if (f.row_channels.empty() || f.col_channels.empty())
        throw std::domain_error("f_matrix: empty channel set");
    f.entries = Mat(f.row_channels.size(), f.col_channels.size());
    for (std::size_t i = 0; i < f.row_channels.size(); ++i) {
        const Label m = f.row_channels[i];
        const double wl = std::abs(vertex_weight(a, b, m) * vertex_weight(m, c, d));
        for (std::size_t j = 0; j < f.col_channels.size(); ++j) {
            const Label n = f.col_channels[j];
            const double wr = std::abs(vertex_weight(b, c, n) * vertex_weight(a, n, d));
            f.entries(i, j) = sixj(a, b, m, c, d, n) * std::sqrt(wr / wl);
        }
    }
    return f;
}

}  // namespace detail

inline const FMatrix& f_matrix(Label a, Label b, Label c, Label d) {
    static std::map<std::tuple<Label, Label, Label, Label>, FMatrix> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_tuple(a, b, c, d);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    FMatrix f;
    f.a = a;
    f.b = b;
    f.c = c;
    f.d = d;
    detail::f_matrix_uncached(f);
    return cache.emplace(key, std::move(f)).first->second;
}

// ---------------------------------------------------------------------------
// Consistency residuals (used by the self-test command and the test suite).

// max |F^{pcd}_e[q,s] F^{abs}_e[p,t] - sum_h F^{abc}_q[p,h] F^{ahd}_e[q,t] F^{bcd}_t[h,s]|
// over all admissible level-4 assignments: the pentagon identity.
inline double pentagon_residual() {
    double worst = 0.0;
    for (Label a = 0; a <= kLevel; ++a)
        for (Label b = 0; b <= kLevel; ++b)
            for (Label c = 0; c <= kLevel; ++c)
                for (Label d = 0; d <= kLevel; ++d)
                    for (Label e = 0; e <= kLevel; ++e)
                        for (Label p = 0; p <= kLevel; ++p) {
                            if (!admissible(a, b, p)) continue;
                            for (Label q = 0; q <= kLevel; ++q) {
                                if (!admissible(p, c, q) || !admissible(q, d, e)) continue;
                                for (Label s = 0; s <= kLevel; ++s) {
                                    if (!admissible(c, d, s) || !admissible(p, s, e)) continue;
                                    for (Label t = 0; t <= kLevel; ++t) {
                                        if (!admissible(b, s, t) || !admissible(a, t, e))
                                            continue;
                                        Cx lhs = f_matrix(p, c, d, e).at(q, s) *
                                                 f_matrix(a, b, s, e).at(p, t);
                                        Cx rhs{0.0, 0.0};
                                        for (Label h = 0; h <= kLevel; ++h) {
                                            if (!admissible(b, c, h)) continue;
                                            if (!admissible(a, h, q) || !admissible(h, d, t))
                                                continue;
                                            rhs += f_matrix(a, b, c, q).at(p, h) *
                                                   f_matrix(a, h, d, e).at(q, t) *
                                                   f_matrix(b, c, d, t).at(h, s);
                                        }
                                        worst = std::max(worst, std::abs(lhs - rhs));
                                    }
                                }
                            }
                        }
    return worst;
}

// Hexagon in operational form: braiding c leftward past the pair (a,b) equals
// the channel R-phase after the corresponding F-move,
//   sum_x F^{abc}_d[m,x] R^{bc}_x F^{acb}_d[m',x] R^{ac}_{m'}
//     = F^{cab}_d[m',m] R^{mc}_d.
// `handed` = +1 uses R, -1 uses conj(R) on both sides.
inline double hexagon_residual(int handed = +1) {
    auto rr = [&](Label x, Label y, Label z) {
        Cx v = r_symbol(x, y, z);
        return handed > 0 ? v : std::conj(v);
    };
    double worst = 0.0;
    for (Label a = 0; a <= kLevel; ++a)
        for (Label b = 0; b <= kLevel; ++b)
            for (Label c = 0; c <= kLevel; ++c)
                for (Label d = 0; d <= kLevel; ++d)
                    for (Label m = 0; m <= kLevel; ++m) {
                        if (!admissible(a, b, m) || !admissible(m, c, d)) continue;
                        for (Label mp = 0; mp <= kLevel; ++mp) {
                            if (!admissible(c, a, mp) || !admissible(mp, b, d)) continue;
                            Cx lhs{0.0, 0.0};
                            for (Label x = 0; x <= kLevel; ++x) {
                                if (!admissible(b, c, x) || !admissible(a, x, d)) continue;
                                lhs += f_matrix(a, b, c, d).at(m, x) * rr(b, c, x) *
                                       f_matrix(a, c, b, d).at(mp, x);
                            }
                            lhs *= rr(a, c, mp);
                            Cx rhs = f_matrix(c, a, b, d).at(mp, m) * rr(m, c, d);
                            worst = std::max(worst, std::abs(lhs - rhs));
                        }
                    }
    return worst;
}

// Worst unitarity defect over every F-matrix with a nonempty channel set.
inline double f_unitarity_residual() {
    double worst = 0.0;
    for (Label a = 0; a <= kLevel; ++a)
        for (Label b = 0; b <= kLevel; ++b)
            for (Label c = 0; c <= kLevel; ++c)
                for (Label d = 0; d <= kLevel; ++d) {
                    bool any = false;
                    for (Label m = 0; m <= kLevel && !any; ++m)
                        any = admissible(a, b, m) && admissible(m, c, d);
                    if (!any) continue;
                    worst = std::max(worst, f_matrix(a, b, c, d).entries.unitarity_defect());
                }
    return worst;
}

}  // namespace anyonsim
