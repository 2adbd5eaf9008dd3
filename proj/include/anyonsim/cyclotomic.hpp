// Exact arithmetic in the 24th cyclotomic field Q(zeta_24).
//
// Elements are stored on the power basis 1, z, ..., z^7 with rational
// coefficients, where z = zeta_24 = exp(i*pi/12) and the minimal polynomial
// is Phi_24(x) = x^8 - x^4 + 1, i.e. z^8 = z^4 - 1.
//
// This is the optional exact backend: every recoupling scalar of the level-4
// theory lies in this field, so quantum integers, theta/tet nets, 6j symbols,
// R-symbols and the published gate matrices can all be checked without
// floating point.  Division is supported through the Galois norm.

#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include "anyonsim/scalar.hpp"

namespace anyonsim {

// Reduced fraction of 64-bit integers with overflow detection.
class Rational {
  public:
    Rational() : num_(0), den_(1) {}
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { reduce(); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    bool is_zero() const { return num_ == 0; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = i128(a.num_) * b.den_ + i128(b.num_) * a.den_;
        __int128 d = i128(a.den_) * b.den_;
        return from128(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        __int128 n = i128(a.num_) * b.den_ - i128(b.num_) * a.den_;
        __int128 d = i128(a.den_) * b.den_;
        return from128(n, d);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from128(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
        return from128(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }
    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

    double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

  private:
    static __int128 i128(std::int64_t v) { return static_cast<__int128>(v); }

    static Rational from128(__int128 n, __int128 d) {
        if (d == 0) throw std::domain_error("Rational: zero denominator");
        if (d < 0) { n = -n; d = -d; }
        __int128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        constexpr __int128 lim = static_cast<__int128>(INT64_MAX);
        if (n > lim || n < -lim || d > lim)
            throw std::overflow_error("Rational: 64-bit overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        return a == 0 ? 1 : a;
    }

    void reduce() { *this = from128(num_, den_); }

    std::int64_t num_, den_;
};

// Element of Q(zeta_24) on the power basis.
class Cyc24 {
  public:
    static constexpr int kDegree = 8;

    Cyc24() = default;
    Cyc24(std::int64_t n) { c_[0] = Rational(n); }
    explicit Cyc24(const Rational& r) { c_[0] = r; }

    // z^k for any integer k, reduced mod 24 and onto the power basis.
    static Cyc24 root(long k) {
        long m = ((k % 24) + 24) % 24;
        Cyc24 out;
        const auto& rep = power_table()[m];
        for (int i = 0; i < kDegree; ++i) out.c_[i] = Rational(rep[i]);
        return out;
    }

    const Rational& coeff(int i) const { return c_[i]; }

    bool is_zero() const {
        for (const auto& r : c_)
            if (!r.is_zero()) return false;
        return true;
    }
    bool is_rational() const {
        for (int i = 1; i < kDegree; ++i)
            if (!c_[i].is_zero()) return false;
        return true;
    }

    friend Cyc24 operator+(const Cyc24& a, const Cyc24& b) {
        Cyc24 out;
        for (int i = 0; i < kDegree; ++i) out.c_[i] = a.c_[i] + b.c_[i];
        return out;
    }
    friend Cyc24 operator-(const Cyc24& a, const Cyc24& b) {
        Cyc24 out;
        for (int i = 0; i < kDegree; ++i) out.c_[i] = a.c_[i] - b.c_[i];
        return out;
    }
    Cyc24 operator-() const {
        Cyc24 out;
        for (int i = 0; i < kDegree; ++i) out.c_[i] = -c_[i];
        return out;
    }

    friend Cyc24 operator*(const Cyc24& a, const Cyc24& b) {
        // Polynomial product, then reduce degrees 8..14 via z^8 = z^4 - 1.
        std::array<Rational, 2 * kDegree - 1> prod;
        for (int i = 0; i < kDegree; ++i) {
            if (a.c_[i].is_zero()) continue;
            for (int j = 0; j < kDegree; ++j) {
                if (b.c_[j].is_zero()) continue;
                prod[i + j] = prod[i + j] + a.c_[i] * b.c_[j];
            }
        }
        for (int d = 2 * kDegree - 2; d >= kDegree; --d) {
            if (prod[d].is_zero()) continue;
            prod[d - 4] = prod[d - 4] + prod[d];
            prod[d - 8] = prod[d - 8] - prod[d];
            prod[d] = Rational(0);
        }
        Cyc24 out;
        for (int i = 0; i < kDegree; ++i) out.c_[i] = prod[i];
        return out;
    }

    friend Cyc24 operator/(const Cyc24& a, const Cyc24& b) { return a * b.inverse(); }

    friend bool operator==(const Cyc24& a, const Cyc24& b) {
        for (int i = 0; i < kDegree; ++i)
            if (a.c_[i] != b.c_[i]) return false;
        return true;
    }
    friend bool operator!=(const Cyc24& a, const Cyc24& b) { return !(a == b); }

    // Galois action z -> z^j for j coprime to 24.
    Cyc24 galois(int j) const {
        Cyc24 out;
        for (int i = 0; i < kDegree; ++i) {
            if (c_[i].is_zero()) continue;
            Cyc24 term = root(static_cast<long>(j) * i);
            for (int k = 0; k < kDegree; ++k)
                out.c_[k] = out.c_[k] + c_[i] * term.c_[k];
        }
        return out;
    }

    // Complex conjugation is the Galois map z -> z^{-1} = z^23.
    Cyc24 conj() const { return galois(23); }

    // Inverse via the norm: z^{-1} = prod_{j != 1} sigma_j(z) / N(z),
    // with N(z) = prod_j sigma_j(z) a rational number.
    Cyc24 inverse() const {
        if (is_zero()) throw std::domain_error("Cyc24: inverse of zero");
        static constexpr int units[] = {5, 7, 11, 13, 17, 19, 23};
        Cyc24 cof(1);
        for (int j : units) cof = cof * galois(j);
        Cyc24 norm = *this * cof;
        if (!norm.is_rational())
            throw std::logic_error("Cyc24: norm is not rational");
        Rational n = norm.c_[0];
        if (n.is_zero()) throw std::domain_error("Cyc24: inverse of zero");
        Cyc24 out;
        for (int i = 0; i < kDegree; ++i) out.c_[i] = cof.c_[i] / n;
        return out;
    }

    Cx to_complex() const {
        Cx acc{0.0, 0.0};
        for (int i = 0; i < kDegree; ++i)
            if (!c_[i].is_zero()) acc += c_[i].to_double() * root24(i);
        return acc;
    }

    std::string str() const {
        std::string s;
        for (int i = 0; i < kDegree; ++i) {
            if (c_[i].is_zero()) continue;
            if (!s.empty()) s += " + ";
            s += c_[i].str();
            if (i > 0) s += "*z^" + std::to_string(i);
        }
        return s.empty() ? "0" : s;
    }

  private:
    // Integer basis representation of z^m for m = 0..23.
    static const std::array<std::array<std::int64_t, kDegree>, 24>& power_table() {
        static const auto table = [] {
            std::array<std::array<std::int64_t, kDegree>, 24> t{};
            std::array<std::int64_t, kDegree> cur{};
            cur[0] = 1;
            t[0] = cur;
            for (int m = 1; m < 24; ++m) {
                std::array<std::int64_t, kDegree> next{};
                std::int64_t top = cur[kDegree - 1];
                for (int i = kDegree - 1; i > 0; --i) next[i] = cur[i - 1];
                next[0] = 0;
                if (top != 0) {  // z^8 = z^4 - 1
                    next[4] += top;
                    next[0] -= top;
                }
                cur = next;
                t[m] = cur;
            }
            return t;
        }();
        return table;
    }

    std::array<Rational, kDegree> c_{};
};

}  // namespace anyonsim
