#pragma once
// Internal helpers: reduction of Weierstrass models at finite places with
// residue field F_p, including the short-form coordinate change used
// consistently with ecmodel's short_form (x -> 36 x + 3 b2 when the model is
// not already short, identity otherwise).

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <vector>

#include "cmik/arith.hpp"
#include "cmik/detail/fppoly.hpp"
#include "cmik/ecmodel.hpp"
#include "cmik/quadfield.hpp"

namespace cmik::detail {

struct ShortModelP {
    std::uint64_t p = 0;
    std::uint64_t A = 0, B = 0;         // y^2 = x^3 + Ax + B over F_p
    std::uint64_t scale = 1, shift = 0;  // x_short = scale * x_model + shift
};

// Roots of the base-field polynomial mod p: two when p splits, one when p
// ramifies, none when p is inert.  Ascending.  Requires odd p.
inline std::vector<std::uint64_t> field_roots_mod_p(const QuadField& F, long p) {
    const std::uint64_t up = static_cast<std::uint64_t>(p);
    std::vector<std::uint64_t> out;
    const std::uint64_t mres = mpz_fdiv_ui(mpz_class(F.m).get_mpz_t(), up);
    if (!F.half_integral()) {
        if (mres == 0) return {0};
        const std::uint64_t r = sqrt_mod(mres, up);
        if (r == up) return {};
        out = {r, up - r};
    } else {
        // x^2 - x - (m-1)/4 has discriminant m; roots (1 +- sqrt(m)) / 2.
        const std::uint64_t inv2 = invmod_u64(2, up);
        if (mres == 0) return {inv2};
        const std::uint64_t s = sqrt_mod(mres, up);
        if (s == up) return {};
        out = {mulmod_u64((1 + s) % up, inv2, up), mulmod_u64((1 + up - s) % up, inv2, up)};
    }
    if (out[0] > out[1]) std::swap(out[0], out[1]);
    if (out[0] == out[1]) out.pop_back();
    return out;
}

// (u + v*a) mod p with the generator a sent to `root`; nullopt when a
// denominator vanishes mod p.
inline std::optional<std::uint64_t> coeff_mod_p(const Coords& c, std::uint64_t root,
                                                std::uint64_t p) {
    auto one = [&](const mpq_class& q) -> std::optional<std::uint64_t> {
        if (mpz_divisible_ui_p(q.get_den().get_mpz_t(), static_cast<unsigned long>(p)))
            return std::nullopt;
        const std::uint64_t num = mpz_fdiv_ui(q.get_num().get_mpz_t(), p);
        const std::uint64_t den = mpz_fdiv_ui(q.get_den().get_mpz_t(), p);
        return mulmod_u64(num, invmod_u64(den, p), p);
    };
    auto u = one(c.first);
    auto v = one(c.second);
    if (!u || !v) return std::nullopt;
    return (*u + mulmod_u64(*v, root, p)) % p;
}

// Reduce a model at the place determined by `root` (ignored over Q);
// nullopt on bad reduction or a coefficient denominator divisible by p.
// Requires p >= 5.
inline std::optional<ShortModelP> reduce_model(const CurveModel& m, long p, std::uint64_t root) {
    const std::uint64_t up = static_cast<std::uint64_t>(p);
    std::uint64_t a[5];
    for (int i = 0; i < 5; ++i) {
        auto r = coeff_mod_p(m.a[static_cast<std::size_t>(i)], root, up);
        if (!r) return std::nullopt;
        a[i] = *r;
    }
    auto mul = [&](std::uint64_t x, std::uint64_t y) { return mulmod_u64(x, y, up); };
    auto sub = [&](std::uint64_t x, std::uint64_t y) { return (x + up - y % up) % up; };
    const std::uint64_t b2 = (mul(a[0], a[0]) + mul(4, a[1])) % up;
    const std::uint64_t b4 = (mul(2, a[3]) + mul(a[0], a[2])) % up;
    const std::uint64_t b6 = (mul(a[2], a[2]) + mul(4, a[4])) % up;
    const std::uint64_t b8 =
        sub((mul(mul(a[0], a[0]), a[4]) + mul(mul(4, a[1]), a[4]) + mul(a[1], mul(a[2], a[2]))) % up,
            (mul(mul(a[0], a[2]), a[3]) + mul(a[3], a[3])) % up);
    const std::uint64_t disc =
        sub(mul(mul(9, b2), mul(b4, b6)),
            (mul(mul(b2, b2), b8) + mul(8, mul(b4, mul(b4, b4))) + mul(27, mul(b6, b6))) % up);
    if (disc == 0) return std::nullopt;
    ShortModelP out;
    out.p = up;
    const bool already_short = m.a[0].first == 0 && m.a[0].second == 0 && m.a[1].first == 0 &&
                               m.a[1].second == 0 && m.a[2].first == 0 && m.a[2].second == 0;
    if (already_short) {
        out.A = a[3];
        out.B = a[4];
        out.scale = 1;
        out.shift = 0;
    } else {
        const std::uint64_t c4 = sub(mul(b2, b2), mul(24, b4));
        const std::uint64_t c6 =
            sub(mul(mul(36, b2), b4), (mul(b2, mul(b2, b2)) + mul(216, b6)) % up);
        out.A = mul(up - 27 % up, c4) % up;
        out.B = mul(up - 54 % up, c6) % up;
        out.scale = 36 % up;
        out.shift = mul(3, b2);
    }
    return out;
}

}  // namespace cmik::detail
