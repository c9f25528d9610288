#pragma once
// Internal helpers: dense polynomial arithmetic over small prime fields,
// extension-field arithmetic F_p[t]/(u), distinct/equal-degree factorization,
// division-polynomial ladders mod p, and elliptic-curve point counting over
// F_p (character sums and baby-step giant-step).  Not part of the public
// interface; shared by the division-polynomial and Frobenius-sampling
// modules.

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cmik/arith.hpp"
#include "cmik/divpoly.hpp"

namespace cmik::detail {

using FpPoly = std::vector<std::uint64_t>;  // ascending, reduced mod p

inline void fp_trim(FpPoly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

inline long fp_deg(const FpPoly& a) { return static_cast<long>(a.size()) - 1; }

inline FpPoly fp_monic(FpPoly a, std::uint64_t p) {
    fp_trim(a);
    if (a.empty()) return a;
    const std::uint64_t inv = invmod_u64(a.back(), p);
    for (auto& c : a) c = mulmod_u64(c, inv, p);
    return a;
}

inline FpPoly fp_mul(const FpPoly& a, const FpPoly& b, std::uint64_t p) {
    if (a.empty() || b.empty()) return {};
    FpPoly out(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] = (out[i + j] + mulmod_u64(a[i], b[j], p)) % p;
    fp_trim(out);
    return out;
}

inline FpPoly fp_add(FpPoly a, const FpPoly& b, std::uint64_t p) {
    if (a.size() < b.size()) a.resize(b.size(), 0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] = (a[i] + b[i]) % p;
    fp_trim(a);
    return a;
}

inline FpPoly fp_sub(FpPoly a, const FpPoly& b, std::uint64_t p) {
    if (a.size() < b.size()) a.resize(b.size(), 0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] = (a[i] + p - b[i]) % p;
    fp_trim(a);
    return a;
}

inline FpPoly fp_smul(std::uint64_t s, FpPoly a, std::uint64_t p) {
    for (auto& c : a) c = mulmod_u64(c, s % p, p);
    fp_trim(a);
    return a;
}

// Remainder of a modulo monic f.
inline FpPoly fp_rem(FpPoly a, const FpPoly& f, std::uint64_t p) {
    fp_trim(a);
    const long df = fp_deg(f);
    while (fp_deg(a) >= df) {
        const std::uint64_t c = a.back();
        const std::size_t shift = a.size() - f.size();
        for (std::size_t i = 0; i < f.size(); ++i) {
            const std::uint64_t s = mulmod_u64(c, f[i], p);
            a[i + shift] = (a[i + shift] + p - s) % p;
        }
        fp_trim(a);
    }
    return a;
}

// Quotient of a by monic f, assuming the remainder is of lower degree.
inline FpPoly fp_quot(FpPoly a, const FpPoly& f, std::uint64_t p) {
    fp_trim(a);
    const long df = fp_deg(f);
    if (fp_deg(a) < df) return {};
    FpPoly q(static_cast<std::size_t>(fp_deg(a) - df) + 1, 0);
    while (fp_deg(a) >= df) {
        const std::uint64_t c = a.back();
        const std::size_t shift = a.size() - f.size();
        q[shift] = c;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const std::uint64_t s = mulmod_u64(c, f[i], p);
            a[i + shift] = (a[i + shift] + p - s) % p;
        }
        fp_trim(a);
    }
    return q;
}

inline FpPoly fp_gcd(FpPoly a, FpPoly b, std::uint64_t p) {
    fp_trim(a);
    fp_trim(b);
    while (!b.empty()) {
        FpPoly bm = fp_monic(std::move(b), p);
        FpPoly r = fp_rem(std::move(a), bm, p);
        a = std::move(bm);
        b = std::move(r);
    }
    return fp_monic(std::move(a), p);
}

inline FpPoly fp_deriv(const FpPoly& a, std::uint64_t p) {
    if (a.size() <= 1) return {};
    FpPoly out(a.size() - 1);
    for (std::size_t i = 1; i < a.size(); ++i) out[i - 1] = mulmod_u64(a[i], i % p, p);
    fp_trim(out);
    return out;
}

// base^e modulo monic f.
inline FpPoly fp_powmod(FpPoly base, std::uint64_t e, const FpPoly& f, std::uint64_t p) {
    FpPoly result{1};
    base = fp_rem(std::move(base), f, p);
    while (e > 0) {
        if (e & 1) result = fp_rem(fp_mul(result, base, p), f, p);
        base = fp_rem(fp_mul(base, base, p), f, p);
        e >>= 1;
    }
    return result;
}

// base^e modulo monic f with an arbitrary-precision exponent.
inline FpPoly fp_powmod_mpz(FpPoly base, const mpz_class& e, const FpPoly& f, std::uint64_t p) {
    FpPoly result{1};
    base = fp_rem(std::move(base), f, p);
    const mp_bitcnt_t bits = mpz_sizeinbase(e.get_mpz_t(), 2);
    for (mp_bitcnt_t i = 0; i < bits; ++i) {
        if (mpz_tstbit(e.get_mpz_t(), i)) result = fp_rem(fp_mul(result, base, p), f, p);
        base = fp_rem(fp_mul(base, base, p), f, p);
    }
    return result;
}

// Inverse of a modulo monic f with gcd(a, f) = 1, by the extended Euclidean
// algorithm.  Throws std::domain_error when a is not invertible.
inline FpPoly fp_invmod(const FpPoly& a, const FpPoly& f, std::uint64_t p) {
    FpPoly r0 = f, r1 = fp_rem(a, f, p);
    FpPoly s0 = {}, s1 = {1};
    while (!r1.empty()) {
        const std::uint64_t lead = invmod_u64(r1.back(), p);
        FpPoly r1m = r1;
        for (auto& c : r1m) c = mulmod_u64(c, lead, p);
        FpPoly q = fp_quot(r0, r1m, p);
        for (auto& c : q) c = mulmod_u64(c, lead, p);
        FpPoly r2 = fp_sub(r0, fp_mul(q, r1, p), p);
        FpPoly s2 = fp_sub(s0, fp_mul(q, s1, p), p);
        r0 = std::move(r1);
        r1 = std::move(r2);
        s0 = std::move(s1);
        s1 = std::move(s2);
    }
    if (fp_deg(r0) != 0) throw std::domain_error("polynomial is not invertible");
    return fp_rem(fp_smul(invmod_u64(r0[0], p), std::move(s0), p), f, p);
}

inline bool fp_is_squarefree(const FpPoly& f, std::uint64_t p) {
    return fp_deg(fp_gcd(f, fp_deriv(f, p), p)) == 0;
}

// Distinct-degree factorization of a squarefree monic polynomial: returns
// (k, total degree of the irreducible factors of degree k) with k ascending.
inline std::vector<std::pair<long, long>> fp_ddf(const FpPoly& f_in, std::uint64_t p) {
    FpPoly f = fp_monic(f_in, p);
    std::vector<std::pair<long, long>> out;
    FpPoly x{0, 1};
    FpPoly r = fp_rem(x, f, p);  // x^(p^k) mod f, starting at k = 0
    long k = 0;
    FpPoly fstar = f;
    while (fp_deg(fstar) > 0) {
        ++k;
        if (2 * k > fp_deg(fstar)) {
            out.emplace_back(fp_deg(fstar), fp_deg(fstar));
            break;
        }
        r = fp_powmod(std::move(r), p, f, p);
        FpPoly rx = r;
        if (rx.size() < 2) rx.resize(2, 0);
        rx[1] = (rx[1] + p - 1) % p;
        fp_trim(rx);
        FpPoly g = fp_gcd(fstar, rx, p);
        if (fp_deg(g) > 0) {
            out.emplace_back(k, fp_deg(g));
            fstar = fp_quot(std::move(fstar), g, p);
        }
    }
    return out;
}

inline bool fp_irreducible(const FpPoly& f, std::uint64_t p) {
    if (fp_deg(f) <= 0) return false;
    if (!fp_is_squarefree(f, p)) return false;
    const auto ddf = fp_ddf(f, p);
    return ddf.size() == 1 && ddf[0].first == fp_deg(f);
}

// Equal-degree splitting (Cantor–Zassenhaus) of a monic squarefree product
// of irreducibles all of degree d, for odd p.  Deterministically seeded.
inline void fp_edf(const FpPoly& f, long d, std::uint64_t p, std::mt19937_64& rng,
                   std::vector<FpPoly>& out) {
    if (fp_deg(f) <= 0) return;
    if (fp_deg(f) == d) {
        out.push_back(fp_monic(f, p));
        return;
    }
    mpz_class e;
    mpz_ui_pow_ui(e.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(d));
    e = (e - 1) / 2;
    for (int attempt = 0; attempt < 200; ++attempt) {
        FpPoly r(static_cast<std::size_t>(fp_deg(f)), 0);
        for (auto& c : r) c = rng() % p;
        fp_trim(r);
        if (fp_deg(r) < 1) continue;
        FpPoly t = fp_powmod_mpz(r, e, f, p);
        if (t.empty()) continue;
        t[0] = (t[0] + p - 1) % p;
        fp_trim(t);
        FpPoly g = fp_gcd(f, t, p);
        if (fp_deg(g) > 0 && fp_deg(g) < fp_deg(f)) {
            fp_edf(g, d, p, rng, out);
            fp_edf(fp_quot(f, g, p), d, p, rng, out);
            return;
        }
    }
    throw std::runtime_error("equal-degree splitting failed to converge");
}

// Full factorization of a squarefree monic polynomial over F_p (odd p).
// When max_deg >= 0, factors of degree above max_deg are dropped (the
// distinct-degree stage stops early).  Deterministic for fixed input.
inline std::vector<FpPoly> fp_factor_squarefree(const FpPoly& f_in, std::uint64_t p,
                                                long max_deg = -1) {
    FpPoly f = fp_monic(f_in, p);
    std::vector<FpPoly> out;
    if (fp_deg(f) <= 0) return out;
    std::mt19937_64 rng(0x5eedf00dULL ^ (p * 1000003ULL) ^ static_cast<std::uint64_t>(fp_deg(f)));
    FpPoly x{0, 1};
    FpPoly r = fp_rem(x, f, p);
    long k = 0;
    FpPoly fstar = f;
    while (fp_deg(fstar) > 0) {
        ++k;
        if (max_deg >= 0 && k > max_deg) break;
        if (2 * k > fp_deg(fstar)) {
            if (max_deg < 0 || fp_deg(fstar) <= max_deg) out.push_back(fp_monic(fstar, p));
            break;
        }
        r = fp_powmod(std::move(r), p, f, p);
        FpPoly rx = r;
        if (rx.size() < 2) rx.resize(2, 0);
        rx[1] = (rx[1] + p - 1) % p;
        fp_trim(rx);
        FpPoly g = fp_gcd(fstar, rx, p);
        if (fp_deg(g) > 0) {
            fp_edf(g, k, p, rng, out);
            fstar = fp_quot(std::move(fstar), g, p);
        }
    }
    return out;
}

inline std::uint64_t fp_eval(const FpPoly& a, std::uint64_t x0, std::uint64_t p) {
    std::uint64_t acc = 0;
    for (std::size_t i = a.size(); i-- > 0;) acc = (mulmod_u64(acc, x0, p) + a[i]) % p;
    return acc;
}

inline FpPoly fp_from_ratpoly(const RatPoly& a, std::uint64_t p) {
    FpPoly out(a.coeffs().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const mpq_class& c = a.coeffs()[i];
        if (c.get_den() != 1)
            throw std::invalid_argument("mod-p reduction needs integer coefficients");
        out[i] = mpz_fdiv_ui(c.get_num().get_mpz_t(), p);
    }
    fp_trim(out);
    return out;
}

// ---------------------------------------------------------------------------
// The extension field F_p[t]/(u) for monic irreducible u
// ---------------------------------------------------------------------------

struct FqCtx {
    std::uint64_t p = 0;
    FpPoly modulus;  // monic

    long deg() const { return fp_deg(modulus); }
    FpPoly reduce(FpPoly a) const { return fp_rem(std::move(a), modulus, p); }
    FpPoly scalar(std::uint64_t c) const { return c % p ? FpPoly{c % p} : FpPoly{}; }
    // The class of t itself (a root of the modulus).
    FpPoly gen() const { return reduce(FpPoly{0, 1}); }
    FpPoly mul(const FpPoly& a, const FpPoly& b) const { return reduce(fp_mul(a, b, p)); }
    FpPoly add(FpPoly a, const FpPoly& b) const { return fp_add(std::move(a), b, p); }
    FpPoly sub(FpPoly a, const FpPoly& b) const { return fp_sub(std::move(a), b, p); }
    FpPoly smul(std::uint64_t s, FpPoly a) const { return fp_smul(s, std::move(a), p); }
    FpPoly pow(FpPoly base, const mpz_class& e) const {
        return fp_powmod_mpz(std::move(base), e, modulus, p);
    }
    FpPoly inv(const FpPoly& a) const { return fp_invmod(a, modulus, p); }
    bool is_scalar(const FpPoly& a) const { return fp_deg(a) <= 0; }
};

// ---------------------------------------------------------------------------
// Division polynomials mod p
// ---------------------------------------------------------------------------

// x-parts of the division polynomials of y^2 = x^3 + Ax + B reduced mod p:
// psi_N = P_N(x) for odd N and P_N(x)·y for even N, with P_2 = 2.  Returns
// P_0 .. P_Nmax.  Requires odd p > 3.
inline std::vector<FpPoly> fp_divpoly_ladder(std::uint64_t A, std::uint64_t B, long Nmax,
                                             std::uint64_t p) {
    A %= p;
    B %= p;
    std::vector<FpPoly> P(static_cast<std::size_t>(std::max<long>(Nmax, 4)) + 1);
    const FpPoly f{B, A, 0, 1};
    P[0] = {};
    P[1] = {1};
    P[2] = {2};
    // 3x^4 + 6Ax^2 + 12Bx - A^2
    P[3] = {(p - mulmod_u64(A, A, p)) % p, mulmod_u64(12, B, p), mulmod_u64(6, A, p), 0, 3};
    fp_trim(P[3]);
    // 4(x^6 + 5Ax^4 + 20Bx^3 - 5A^2x^2 - 4ABx - 8B^2 - A^3)
    {
        const std::uint64_t A2 = mulmod_u64(A, A, p);
        const std::uint64_t A3 = mulmod_u64(A2, A, p);
        const std::uint64_t B2 = mulmod_u64(B, B, p);
        FpPoly q{(2 * p - mulmod_u64(8, B2, p) % p - A3) % p,
                 (p - mulmod_u64(4, mulmod_u64(A, B, p), p)) % p,
                 (p - mulmod_u64(5, A2, p)) % p,
                 mulmod_u64(20, B, p),
                 mulmod_u64(5, A, p),
                 0,
                 1};
        P[4] = fp_smul(4, std::move(q), p);
    }
    const FpPoly f2 = fp_mul(f, f, p);
    const std::uint64_t inv2 = invmod_u64(2, p);
    for (long n = 5; n <= Nmax; ++n) {
        const long m = n / 2;
        if (n % 2 == 1) {
            const FpPoly t1 = fp_mul(P[m + 2], fp_mul(P[m], fp_mul(P[m], P[m], p), p), p);
            const FpPoly t2 = fp_mul(P[m - 1], fp_mul(P[m + 1], fp_mul(P[m + 1], P[m + 1], p), p), p);
            if (m % 2 == 0)
                P[n] = fp_sub(fp_mul(f2, t1, p), t2, p);
            else
                P[n] = fp_sub(t1, fp_mul(f2, t2, p), p);
        } else {
            const FpPoly t1 = fp_mul(P[m + 2], fp_mul(P[m - 1], P[m - 1], p), p);
            const FpPoly t2 = fp_mul(P[m - 2], fp_mul(P[m + 1], P[m + 1], p), p);
            P[n] = fp_smul(inv2, fp_mul(P[m], fp_sub(t1, t2, p), p), p);
        }
    }
    P.resize(static_cast<std::size_t>(Nmax) + 1);
    return P;
}

// ---------------------------------------------------------------------------
// Point counts over F_p
// ---------------------------------------------------------------------------

// Frobenius trace of y^2 = x^3 + Ax + B over F_p (odd p, good reduction).
inline long trace_by_char_sum(const mpz_class& A, const mpz_class& B, long p) {
    const std::uint64_t up = static_cast<std::uint64_t>(p);
    const std::uint64_t a = mpz_fdiv_ui(A.get_mpz_t(), up);
    const std::uint64_t b = mpz_fdiv_ui(B.get_mpz_t(), up);
    long sum = 0;
    for (std::uint64_t t = 0; t < up; ++t) {
        const std::uint64_t t2 = mulmod_u64(t, t, up);
        const std::uint64_t v = (mulmod_u64(t2, t, up) + mulmod_u64(a, t, up) + b) % up;
        sum += kronecker(static_cast<long long>(v), static_cast<long long>(p));
    }
    return -sum;
}

// Square root mod an odd prime by Tonelli–Shanks; returns p when a is a
// non-residue.
inline std::uint64_t sqrt_mod(std::uint64_t a, std::uint64_t p) {
    a %= p;
    if (a == 0) return 0;
    if (powmod_u64(a, (p - 1) / 2, p) != 1) return p;
    if (p % 4 == 3) return powmod_u64(a, (p + 1) / 4, p);
    std::uint64_t q = p - 1, s = 0;
    while (q % 2 == 0) {
        q /= 2;
        ++s;
    }
    std::uint64_t z = 2;
    while (powmod_u64(z, (p - 1) / 2, p) == 1) ++z;
    std::uint64_t m = s;
    std::uint64_t c = powmod_u64(z, q, p);
    std::uint64_t t = powmod_u64(a, q, p);
    std::uint64_t r = powmod_u64(a, (q + 1) / 2, p);
    while (t != 1) {
        std::uint64_t i = 0, tt = t;
        while (tt != 1) {
            tt = mulmod_u64(tt, tt, p);
            ++i;
        }
        std::uint64_t b = c;
        for (std::uint64_t j = 0; j + i + 1 < m; ++j) b = mulmod_u64(b, b, p);
        m = i;
        c = mulmod_u64(b, b, p);
        t = mulmod_u64(t, c, p);
        r = mulmod_u64(r, b, p);
    }
    return r;
}

struct EcPoint {
    std::uint64_t x = 0, y = 0;
    bool inf = true;
    bool operator==(const EcPoint& o) const {
        return inf == o.inf && (inf || (x == o.x && y == o.y));
    }
};

inline EcPoint ec_neg(EcPoint P, std::uint64_t p) {
    if (!P.inf) P.y = (p - P.y) % p;
    return P;
}

inline EcPoint ec_add(const EcPoint& P, const EcPoint& Q, std::uint64_t A, std::uint64_t p) {
    if (P.inf) return Q;
    if (Q.inf) return P;
    std::uint64_t lam;
    if (P.x == Q.x) {
        if ((P.y + Q.y) % p == 0) return {};
        const std::uint64_t num = (mulmod_u64(3, mulmod_u64(P.x, P.x, p), p) + A) % p;
        lam = mulmod_u64(num, invmod_u64((2 * P.y) % p, p), p);
    } else {
        const std::uint64_t num = (Q.y + p - P.y) % p;
        lam = mulmod_u64(num, invmod_u64((Q.x + p - P.x) % p, p), p);
    }
    EcPoint R;
    R.inf = false;
    R.x = (mulmod_u64(lam, lam, p) + 2 * p - P.x - Q.x) % p;
    R.y = (mulmod_u64(lam, (P.x + p - R.x) % p, p) + p - P.y) % p;
    return R;
}

inline EcPoint ec_mul(mpz_class k, EcPoint P, std::uint64_t A, std::uint64_t p) {
    if (k < 0) {
        k = -k;
        P = ec_neg(P, p);
    }
    EcPoint R;
    const mp_bitcnt_t bits = mpz_sizeinbase(k.get_mpz_t(), 2);
    if (k == 0) return R;
    for (mp_bitcnt_t i = bits; i-- > 0;) {
        R = ec_add(R, R, A, p);
        if (mpz_tstbit(k.get_mpz_t(), i)) R = ec_add(R, P, A, p);
    }
    return R;
}

// Frobenius trace of y^2 = x^3 + Ax + B over F_p by baby-step giant-step
// order finding on random points (Mestre–Shanks).  Requires good reduction;
// intended for p beyond character-sum range.  Deterministic.
inline long trace_bsgs(const mpz_class& Az, const mpz_class& Bz, long p) {
    const std::uint64_t up = static_cast<std::uint64_t>(p);
    const std::uint64_t A = mpz_fdiv_ui(Az.get_mpz_t(), up);
    const std::uint64_t B = mpz_fdiv_ui(Bz.get_mpz_t(), up);
    mpz_class H;
    mpz_sqrt(H.get_mpz_t(), mpz_class(4 * mpz_class(p)).get_mpz_t());  // floor(2 sqrt p)
    const mpz_class lo = mpz_class(p) + 1 - H;
    const mpz_class hi = mpz_class(p) + 1 + H;
    mpz_class L = 1;
    std::mt19937_64 rng(0xec5eedULL ^ up);
    for (int trial = 0; trial < 48; ++trial) {
        // random point
        EcPoint P;
        for (int tries = 0; tries < 256; ++tries) {
            const std::uint64_t x = rng() % up;
            const std::uint64_t v = (mulmod_u64(mulmod_u64(x, x, up), x, up) + mulmod_u64(A, x, up) + B) % up;
            if (v == 0) continue;
            const std::uint64_t y = sqrt_mod(v, up);
            if (y == up) continue;
            P = {x, y, false};
            break;
        }
        if (P.inf) throw std::runtime_error("failed to sample a curve point");
        // find n in [lo, hi] with nP = O via BSGS
        const mpz_class width = hi - lo + 1;
        mpz_class s;
        mpz_sqrt(s.get_mpz_t(), width.get_mpz_t());
        s += 1;
        const long sl = static_cast<long>(s.get_si());
        // sorted table mapping coordinates of -(jP) to j
        std::vector<std::pair<std::pair<std::uint64_t, std::uint64_t>, long>> table;
        table.reserve(static_cast<std::size_t>(sl));
        EcPoint jp;  // j*P
        long j_inf = -1;
        for (long j = 0; j < sl; ++j) {
            if (jp.inf) j_inf = j;
            else table.push_back({{jp.x, (up - jp.y) % up}, j});
            jp = ec_add(jp, P, A, up);
        }
        std::sort(table.begin(), table.end());
        const EcPoint sP = ec_mul(s, P, A, up);
        EcPoint G = ec_mul(lo, P, A, up);
        mpz_class n_found = -1;
        for (mpz_class base = lo; base <= hi; base += s) {
            if (G.inf && j_inf >= 0) {
                n_found = base + j_inf;
            } else if (!G.inf) {
                auto it = std::lower_bound(table.begin(), table.end(),
                                           std::make_pair(std::make_pair(G.x, G.y), -1L));
                if (it != table.end() && it->first == std::make_pair(G.x, G.y))
                    n_found = base + it->second;
            }
            if (n_found > 0) break;  // any annihilator of P will do
            n_found = -1;
            G = ec_add(G, sP, A, up);
        }
        if (n_found < 0) throw std::runtime_error("group-order search found no annihilator");
        // reduce to the exact order of P
        mpz_class ord = n_found;
        if (ord == 0) continue;
        for (const auto& [q, e] : factorize(ord).factors) {
            for (unsigned i = 0; i < e; ++i) {
                const mpz_class cand = ord / q;
                if (ec_mul(cand, P, A, up).inf) ord = cand;
                else break;
            }
        }
        mpz_class g;
        mpz_lcm(g.get_mpz_t(), L.get_mpz_t(), ord.get_mpz_t());
        L = g;
        // multiples of L in [lo, hi]
        mpz_class first = ((lo + L - 1) / L) * L;
        if (first > hi) throw std::runtime_error("no group order in the Hasse interval");
        if (first + L > hi) {
            const mpz_class trace = mpz_class(p) + 1 - first;
            return static_cast<long>(trace.get_si());
        }
    }
    throw std::runtime_error("point counting failed to pin the group order");
}

}  // namespace cmik::detail
