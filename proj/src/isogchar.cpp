// Reconstruction of the rational ell-isogeny kernel polynomial of a CM model
// and the eigenvalue of Frobenius acting on the kernel at good primes.
//
// The kernel polynomial is rebuilt from reductions: at a generic good prime
// the reduced curve has a unique Frobenius-stable ell-torsion line whose
// monic x-polynomial lives over F_p; Chinese remaindering with rational
// reconstruction recovers the global coefficients, which are then verified
// against the division polynomial (exact division for small ell over Q,
// divisibility at fresh primes otherwise).  At ell = 3 over Q the quartic
// x-part is solved for rational roots directly — the j = 0 family carries
// two rational kernels, and the smaller kernel abscissa is the documented
// canonical choice.

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "cmik/arith.hpp"
#include "cmik/detail/fppoly.hpp"
#include "cmik/detail/reduce.hpp"
#include "cmik/divpoly.hpp"
#include "cmik/ecmodel.hpp"
#include "cmik/frobverify.hpp"
#include "cmik/quadfield.hpp"

namespace cmik {

namespace {

using detail::FpPoly;
using detail::FqCtx;

constexpr const char* kFactorError = "kernel polynomial fails to factor as expected";
constexpr long kMaxEll = 60;          // resource cap for the mod-p ladders
constexpr long kPrimeScanCap = 200000;
constexpr int kMaxUsablePrimes = 60;
constexpr int kFreshChecks = 8;

// ---------------------------------------------------------------------------
// The integral scaled short model x2 = scale * x_model + shift
// ---------------------------------------------------------------------------

struct ScaledModel {
    QuadField F{5};
    bool over_Q = true;
    QuadInt A2, B2;      // y^2 = x^3 + A2 x + B2 with integral coordinates
    mpz_class scale;     // u^2, or 36 u^2 when the model needed completion
    QuadInt shift;       // u^2 * 3 b2, or 0

    ScaledModel() : A2(F, 0, 0), B2(F, 0, 0), shift(F, 0, 0) {}
};

ScaledModel build_scaled(const CurveModel& curve) {
    ScaledModel S;
    S.F = curve.base ? *curve.base : QuadField(5);
    S.over_Q = curve.over_Q();
    const CurveModel s = short_form(curve);
    QuadInt A(S.F, s.a[3].first, s.a[3].second);
    QuadInt B(S.F, s.a[4].first, s.a[4].second);
    mpz_class u(1);
    for (const mpq_class* q : {&s.a[3].first, &s.a[3].second, &s.a[4].first, &s.a[4].second})
        mpz_lcm(u.get_mpz_t(), u.get_mpz_t(), q->get_den().get_mpz_t());
    const QuadInt uu = QuadInt::from_rational(S.F, mpq_class(u));
    const QuadInt u2 = uu * uu;
    const QuadInt u4 = u2 * u2;
    S.A2 = u4 * A;
    S.B2 = u4 * u2 * B;
    const bool already_short = curve.a[0].first == 0 && curve.a[0].second == 0 &&
                               curve.a[1].first == 0 && curve.a[1].second == 0 &&
                               curve.a[2].first == 0 && curve.a[2].second == 0;
    if (already_short) {
        S.scale = u * u;
        S.shift = QuadInt(S.F, 0, 0);
    } else {
        QuadInt a1(S.F, curve.a[0].first, curve.a[0].second);
        QuadInt a2(S.F, curve.a[1].first, curve.a[1].second);
        const QuadInt b2 = a1 * a1 + QuadInt(S.F, 4, 0) * a2;
        S.scale = u * u * 36;
        S.shift = QuadInt(S.F, 3, 0) * b2 * u2;
    }
    return S;
}

struct RedScaled {
    std::uint64_t p = 0, root = 0, A = 0, B = 0;
};

std::optional<RedScaled> reduce_scaled(const ScaledModel& S, long p, std::uint64_t root) {
    const std::uint64_t up = static_cast<std::uint64_t>(p);
    auto a = detail::coeff_mod_p({S.A2.x(), S.A2.y()}, root, up);
    auto b = detail::coeff_mod_p({S.B2.x(), S.B2.y()}, root, up);
    if (!a || !b) return std::nullopt;
    // nonsingular: 4A^3 + 27B^2 != 0
    const std::uint64_t d =
        (mulmod_u64(4, mulmod_u64(*a, mulmod_u64(*a, *a, up), up), up) +
         mulmod_u64(27, mulmod_u64(*b, *b, up), up)) %
        up;
    if (d == 0) return std::nullopt;
    return RedScaled{up, root, *a, *b};
}

// ---------------------------------------------------------------------------
// Division-polynomial values over an extension field
// ---------------------------------------------------------------------------

// V[j] = P_j(x1) in F_q for j = 0..N, where P_j is the x-part of the j-th
// division polynomial of y^2 = x^3 + Ax + B (P_2 = 2).
std::vector<FpPoly> divpoly_values(const FqCtx& fq, const FpPoly& x1, std::uint64_t A,
                                   std::uint64_t B, long N) {
    const std::uint64_t p = fq.p;
    A %= p;
    B %= p;
    std::vector<FpPoly> V(static_cast<std::size_t>(std::max<long>(N, 4)) + 1);
    const FpPoly x2 = fq.mul(x1, x1);
    const FpPoly x3 = fq.mul(x2, x1);
    const FpPoly fx = fq.add(fq.add(x3, fq.smul(A, x1)), fq.scalar(B));
    V[0] = {};
    V[1] = {1};
    V[2] = {2};
    // 3x^4 + 6Ax^2 + 12Bx - A^2
    V[3] = fq.sub(fq.add(fq.add(fq.smul(3, fq.mul(x2, x2)), fq.smul(mulmod_u64(6, A, p), x2)),
                         fq.smul(mulmod_u64(12, B, p), x1)),
                  fq.scalar(mulmod_u64(A, A, p)));
    // 4(x^6 + 5Ax^4 + 20Bx^3 - 5A^2 x^2 - 4ABx - 8B^2 - A^3)
    {
        const std::uint64_t A2s = mulmod_u64(A, A, p);
        FpPoly t = fq.mul(x3, x3);
        t = fq.add(t, fq.smul(mulmod_u64(5, A, p), fq.mul(x2, x2)));
        t = fq.add(t, fq.smul(mulmod_u64(20, B, p), x3));
        t = fq.sub(t, fq.smul(mulmod_u64(5, A2s, p), x2));
        t = fq.sub(t, fq.smul(mulmod_u64(4, mulmod_u64(A, B, p), p), x1));
        t = fq.sub(t, fq.scalar((mulmod_u64(8, mulmod_u64(B, B, p), p) + mulmod_u64(A2s, A, p)) % p));
        V[4] = fq.smul(4, t);
    }
    const FpPoly f2 = fq.mul(fx, fx);
    const std::uint64_t inv2 = invmod_u64(2, p);
    for (long n = 5; n <= N; ++n) {
        const long m = n / 2;
        const auto& Vm = V[static_cast<std::size_t>(m)];
        if (n % 2 == 1) {
            const FpPoly t1 = fq.mul(V[static_cast<std::size_t>(m + 2)], fq.mul(Vm, fq.mul(Vm, Vm)));
            const auto& W = V[static_cast<std::size_t>(m + 1)];
            const FpPoly t2 = fq.mul(V[static_cast<std::size_t>(m - 1)], fq.mul(W, fq.mul(W, W)));
            V[static_cast<std::size_t>(n)] =
                (m % 2 == 0) ? fq.sub(fq.mul(f2, t1), t2) : fq.sub(t1, fq.mul(f2, t2));
        } else {
            const auto& Wm1 = V[static_cast<std::size_t>(m - 1)];
            const auto& Wp1 = V[static_cast<std::size_t>(m + 1)];
            const FpPoly t1 = fq.mul(V[static_cast<std::size_t>(m + 2)], fq.mul(Wm1, Wm1));
            const FpPoly t2 = fq.mul(V[static_cast<std::size_t>(m - 2)], fq.mul(Wp1, Wp1));
            V[static_cast<std::size_t>(n)] = fq.smul(inv2, fq.mul(Vm, fq.sub(t1, t2)));
        }
    }
    V.resize(static_cast<std::size_t>(N) + 1);
    return V;
}

// x-coordinates of jP for j = 1..nu where x(P) = x1, as elements of F_q;
// empty when an evaluation degenerates (defensive).
std::vector<FpPoly> multiple_xs(const FqCtx& fq, const FpPoly& x1, std::uint64_t A,
                                std::uint64_t B, long nu) {
    const auto V = divpoly_values(fq, x1, A, B, nu + 1);
    const FpPoly fx = fq.add(fq.add(fq.mul(fq.mul(x1, x1), x1), fq.smul(A % fq.p, x1)),
                             fq.scalar(B % fq.p));
    if (fx.empty()) return {};
    std::vector<FpPoly> xs;
    xs.reserve(static_cast<std::size_t>(nu));
    xs.push_back(x1);
    for (long j = 2; j <= nu; ++j) {
        const auto& Vj = V[static_cast<std::size_t>(j)];
        if (Vj.empty()) return {};
        FpPoly cross = fq.mul(V[static_cast<std::size_t>(j - 1)], V[static_cast<std::size_t>(j + 1)]);
        FpPoly den = fq.mul(Vj, Vj);
        if (j % 2 == 1) cross = fq.mul(cross, fx);
        else den = fq.mul(den, fx);
        xs.push_back(fq.sub(x1, fq.mul(cross, fq.inv(den))));
    }
    return xs;
}

// Kernel x-polynomial of the line through a point with x-coordinate a root
// of g, provided the line is Frobenius-stable (coefficients descend to F_p);
// nullopt otherwise.
std::optional<FpPoly> line_from_factor(std::uint64_t A, std::uint64_t B, long ell,
                                       std::uint64_t p, const FpPoly& g, const FpPoly& Pl) {
    const long nu = (ell - 1) / 2;
    FqCtx fq{p, detail::fp_monic(g, p)};
    const auto xs = multiple_xs(fq, fq.gen(), A, B, nu);
    if (static_cast<long>(xs.size()) != nu) return std::nullopt;
    // h(T) = prod (T - x_j) over F_q
    std::vector<FpPoly> h{FpPoly{1}};
    for (const FpPoly& xj : xs) {
        std::vector<FpPoly> nh(h.size() + 1);
        for (std::size_t i = 0; i < h.size(); ++i) {
            nh[i + 1] = fq.add(nh[i + 1], h[i]);
            nh[i] = fq.sub(nh[i], fq.mul(xj, h[i]));
        }
        h = std::move(nh);
    }
    FpPoly out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!fq.is_scalar(h[i])) return std::nullopt;
        out[i] = h[i].empty() ? 0 : h[i][0];
    }
    detail::fp_trim(out);
    if (detail::fp_deg(out) != nu) return std::nullopt;
    if (!detail::fp_rem(Pl, out, p).empty()) return std::nullopt;
    return out;
}

// The unique Frobenius-stable ell-torsion line of y^2 = x^3 + Ax + B mod p,
// or empty when there is none, more than one, or the setup degenerates.
FpPoly stable_line(std::uint64_t A, std::uint64_t B, long ell, std::uint64_t p) {
    const long nu = (ell - 1) / 2;
    auto P = detail::fp_divpoly_ladder(A, B, ell, p);
    FpPoly Pl = std::move(P[static_cast<std::size_t>(ell)]);
    if (detail::fp_deg(Pl) != (ell * ell - 1) / 2) return {};
    if (!detail::fp_is_squarefree(Pl, p)) return {};
    auto factors = detail::fp_factor_squarefree(Pl, p, nu);
    std::sort(factors.begin(), factors.end(), [](const FpPoly& a, const FpPoly& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    std::vector<FpPoly> lines;
    for (const FpPoly& g : factors) {
        auto h = line_from_factor(A, B, ell, p, g, Pl);
        if (!h) continue;
        if (std::find(lines.begin(), lines.end(), *h) == lines.end()) {
            lines.push_back(*h);
            if (lines.size() >= 2) return {};
        }
    }
    return lines.size() == 1 ? lines.front() : FpPoly{};
}

// ---------------------------------------------------------------------------
// Chinese remaindering with rational reconstruction
// ---------------------------------------------------------------------------

mpz_class crt_combine(const mpz_class& r, const mpz_class& M, std::uint64_t h, long p) {
    // x = r (mod M), x = h (mod p)
    const mpz_class pm(p);
    mpz_class minv;
    if (mpz_invert(minv.get_mpz_t(), M.get_mpz_t(), pm.get_mpz_t()) == 0)
        throw std::logic_error("CRT moduli not coprime");
    mpz_class t = ((mpz_class(static_cast<long>(h)) - r) * minv) % pm;
    if (t < 0) t += pm;
    return r + M * t;
}

std::optional<mpq_class> rat_reconstruct(const mpz_class& r, const mpz_class& M) {
    mpz_class a0 = M, a1 = ((r % M) + M) % M, b0 = 0, b1 = 1;
    while (a1 * a1 * 2 > M) {
        const mpz_class q = a0 / a1;
        mpz_class a2 = a0 - q * a1, b2 = b0 - q * b1;
        a0 = a1;
        a1 = a2;
        b0 = b1;
        b1 = b2;
    }
    if (b1 == 0) return std::nullopt;
    if (b1 < 0) {
        a1 = -a1;
        b1 = -b1;
    }
    if (b1 * b1 * 2 > M) return std::nullopt;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), a1.get_mpz_t(), b1.get_mpz_t());
    if (g != 1) return std::nullopt;
    mpq_class out(a1, b1);
    out.canonicalize();
    return out;
}

// ---------------------------------------------------------------------------
// Verification of a candidate kernel polynomial
// ---------------------------------------------------------------------------

// coefficients c_0..c_{nu-1} plus an implied monic leading 1
using KernelCoeffs = std::vector<QuadInt>;

// Divisibility h | P_ell at one place of residue field F_p; nullopt when the
// place is unusable.
std::optional<bool> kernel_divides_at(const ScaledModel& S, const KernelCoeffs& h, long ell,
                                      long q, std::uint64_t root) {
    auto rs = reduce_scaled(S, q, root);
    if (!rs) return std::nullopt;
    const std::uint64_t up = static_cast<std::uint64_t>(q);
    FpPoly hq(h.size() + 1);
    for (std::size_t i = 0; i < h.size(); ++i) {
        auto c = detail::coeff_mod_p({h[i].x(), h[i].y()}, root, up);
        if (!c) return std::nullopt;
        hq[i] = *c;
    }
    hq[h.size()] = 1;
    auto P = detail::fp_divpoly_ladder(rs->A, rs->B, ell, up);
    return detail::fp_rem(P[static_cast<std::size_t>(ell)], hq, up).empty();
}

bool verify_kernel(const ScaledModel& S, const KernelCoeffs& h, long ell, long first_fresh) {
    if (S.over_Q && ell <= 7) {
        // exact: h must divide the division polynomial x-part over Q
        std::vector<mpq_class> cs(h.size() + 1);
        for (std::size_t i = 0; i < h.size(); ++i) cs[i] = h[i].x();
        cs[h.size()] = 1;
        RatPoly hr(cs);
        const RatPoly psi = division_polynomial_ab(mpq_class(S.A2.x()), mpq_class(S.B2.x()), ell);
        return psi.divmod(hr).second.is_zero();
    }
    int checked = 0;
    for (long q = first_fresh; q < kPrimeScanCap && checked < kFreshChecks;) {
        mpz_class z(q), nx;
        mpz_nextprime(nx.get_mpz_t(), z.get_mpz_t());
        q = static_cast<long>(nx.get_si());
        if (q == ell) continue;
        std::vector<std::uint64_t> roots =
            S.over_Q ? std::vector<std::uint64_t>{0} : detail::field_roots_mod_p(S.F, q);
        if (roots.empty()) continue;
        bool usable = true, ok = true;
        for (const std::uint64_t r : roots) {
            auto v = kernel_divides_at(S, h, ell, q, r);
            if (!v) {
                usable = false;
                break;
            }
            ok = ok && *v;
        }
        if (!usable) continue;
        if (!ok) return false;
        ++checked;
    }
    return checked == kFreshChecks;
}

// ---------------------------------------------------------------------------
// CRT drivers
// ---------------------------------------------------------------------------

KernelCoeffs crt_kernel_q(const ScaledModel& S, long ell) {
    const long nu = (ell - 1) / 2;
    std::vector<mpz_class> res(static_cast<std::size_t>(nu), 0);
    mpz_class M(1);
    std::vector<mpq_class> prev;
    int stable = 0, usable = 0;
    long last_prime = 0;
    for (long p = 5; p < kPrimeScanCap && usable < kMaxUsablePrimes; p = [&] {
             mpz_class z(p), nx;
             mpz_nextprime(nx.get_mpz_t(), z.get_mpz_t());
             return static_cast<long>(nx.get_si());
         }()) {
        if (p == ell) continue;
        auto rs = reduce_scaled(S, p, 0);
        if (!rs) continue;
        const FpPoly hline = stable_line(rs->A, rs->B, ell, static_cast<std::uint64_t>(p));
        if (detail::fp_deg(hline) != nu) continue;
        for (long i = 0; i < nu; ++i)
            res[static_cast<std::size_t>(i)] =
                crt_combine(res[static_cast<std::size_t>(i)], M,
                            static_cast<std::size_t>(i) < hline.size() ? hline[static_cast<std::size_t>(i)] : 0, p);
        M *= p;
        ++usable;
        last_prime = p;
        std::vector<mpq_class> lift(static_cast<std::size_t>(nu));
        bool ok = true;
        for (long i = 0; i < nu; ++i) {
            auto rr = rat_reconstruct(res[static_cast<std::size_t>(i)], M);
            if (!rr) {
                ok = false;
                break;
            }
            lift[static_cast<std::size_t>(i)] = *rr;
        }
        if (!ok) {
            stable = 0;
            prev.clear();
            continue;
        }
        if (!prev.empty() && prev == lift) ++stable;
        else stable = 0;
        prev = lift;
        if (stable >= 2 && usable >= 3) {
            KernelCoeffs h;
            h.reserve(static_cast<std::size_t>(nu));
            for (const mpq_class& c : lift) h.push_back(QuadInt::from_rational(S.F, c));
            if (verify_kernel(S, h, ell, last_prime + 1)) return h;
            stable = 0;  // verification failed: keep accumulating
        }
    }
    throw std::runtime_error(kFactorError);
}

KernelCoeffs crt_kernel_k(const ScaledModel& S, long ell) {
    const long nu = (ell - 1) / 2;
    std::vector<mpz_class> res_u(static_cast<std::size_t>(nu), 0);
    std::vector<mpz_class> res_v(static_cast<std::size_t>(nu), 0);
    mpz_class M(1);
    std::vector<mpq_class> prev;
    int stable = 0, usable = 0;
    long last_prime = 0;
    for (long p = 5; p < kPrimeScanCap && usable < kMaxUsablePrimes; p = [&] {
             mpz_class z(p), nx;
             mpz_nextprime(nx.get_mpz_t(), z.get_mpz_t());
             return static_cast<long>(nx.get_si());
         }()) {
        if (p == ell) continue;
        const auto roots = detail::field_roots_mod_p(S.F, p);
        if (roots.size() != 2) continue;
        auto rs1 = reduce_scaled(S, p, roots[0]);
        auto rs2 = reduce_scaled(S, p, roots[1]);
        if (!rs1 || !rs2) continue;
        const std::uint64_t up = static_cast<std::uint64_t>(p);
        const FpPoly h1 = stable_line(rs1->A, rs1->B, ell, up);
        if (detail::fp_deg(h1) != nu) continue;
        const FpPoly h2 = stable_line(rs2->A, rs2->B, ell, up);
        if (detail::fp_deg(h2) != nu) continue;
        const std::uint64_t rdiff_inv = invmod_u64((roots[0] + up - roots[1]) % up, up);
        for (long i = 0; i < nu; ++i) {
            const std::uint64_t c1 = static_cast<std::size_t>(i) < h1.size() ? h1[static_cast<std::size_t>(i)] : 0;
            const std::uint64_t c2 = static_cast<std::size_t>(i) < h2.size() ? h2[static_cast<std::size_t>(i)] : 0;
            const std::uint64_t dv = mulmod_u64((c1 + up - c2) % up, rdiff_inv, up);
            const std::uint64_t du = (c1 + up - mulmod_u64(dv, roots[0], up)) % up;
            res_u[static_cast<std::size_t>(i)] = crt_combine(res_u[static_cast<std::size_t>(i)], M, du, p);
            res_v[static_cast<std::size_t>(i)] = crt_combine(res_v[static_cast<std::size_t>(i)], M, dv, p);
        }
        M *= p;
        ++usable;
        last_prime = p;
        std::vector<mpq_class> lift(static_cast<std::size_t>(2 * nu));
        bool ok = true;
        for (long i = 0; i < 2 * nu && ok; ++i) {
            const auto& src = i < nu ? res_u[static_cast<std::size_t>(i)]
                                     : res_v[static_cast<std::size_t>(i - nu)];
            auto rr = rat_reconstruct(src, M);
            if (!rr) ok = false;
            else lift[static_cast<std::size_t>(i)] = *rr;
        }
        if (!ok) {
            stable = 0;
            prev.clear();
            continue;
        }
        if (!prev.empty() && prev == lift) ++stable;
        else stable = 0;
        prev = lift;
        if (stable >= 2 && usable >= 3) {
            KernelCoeffs h;
            h.reserve(static_cast<std::size_t>(nu));
            for (long i = 0; i < nu; ++i)
                h.push_back(QuadInt(S.F, lift[static_cast<std::size_t>(i)],
                                    lift[static_cast<std::size_t>(i + nu)]));
            if (verify_kernel(S, h, ell, last_prime + 1)) return h;
            stable = 0;
        }
    }
    throw std::runtime_error(kFactorError);
}

// ---------------------------------------------------------------------------
// ell = 3 over Q: rational roots of the quartic x-part
// ---------------------------------------------------------------------------

std::optional<mpz_class> exact_cbrt(const mpz_class& z) {
    mpz_class a = abs(z), r;
    if (mpz_root(r.get_mpz_t(), a.get_mpz_t(), 3) == 0) return std::nullopt;
    return z < 0 ? mpz_class(-r) : r;
}

std::vector<Coords> kernel3_rational(const ScaledModel& S) {
    const mpz_class A = S.A2.x().get_num();
    const mpz_class B = S.B2.x().get_num();
    // P3 = 3x^4 + 6Ax^2 + 12Bx - A^2 in scaled coordinates
    auto eval = [&](const mpq_class& x) -> mpq_class {
        const mpq_class x2 = x * x;
        return 3 * x2 * x2 + 6 * mpq_class(A) * x2 + 12 * mpq_class(B) * x - mpq_class(A * A);
    };
    std::set<mpq_class> roots;
    if (A == 0) {
        roots.insert(mpq_class(0));
        if (auto c = exact_cbrt(-4 * B)) roots.insert(mpq_class(*c));
    } else {
        Factorization fac = factorize(A * A);
        std::vector<mpz_class> divs{1};
        for (const auto& [q, e] : fac.factors) {
            const std::size_t base = divs.size();
            mpz_class qe(1);
            for (unsigned i = 1; i <= e; ++i) {
                qe *= q;
                for (std::size_t j = 0; j < base; ++j) divs.push_back(divs[j] * qe);
            }
        }
        for (const mpz_class& n : divs) {
            for (int sgn_i : {1, -1}) {
                for (long den : {1L, 3L}) {
                    if (den == 3 && mpz_divisible_ui_p(n.get_mpz_t(), 3)) continue;
                    mpq_class cand(sgn_i * n, den);
                    cand.canonicalize();
                    if (eval(cand) == 0) roots.insert(cand);
                }
            }
        }
    }
    if (roots.empty()) throw std::runtime_error(kFactorError);
    // back to model coordinates and pick the canonical (smallest) kernel
    std::optional<mpq_class> best;
    for (const mpq_class& r : roots) {
        mpq_class xm = (r - S.shift.x()) / mpq_class(S.scale);
        if (!best) best = xm;
        else {
            const mpq_class ab = abs(xm), bb = abs(*best);
            if (ab < bb || (ab == bb && xm < *best)) best = xm;
        }
    }
    return {Coords{-*best, 0}, Coords{1, 0}};
}

// ---------------------------------------------------------------------------
// Coordinate change back to the model's x
// ---------------------------------------------------------------------------

std::vector<Coords> to_model_coords(const ScaledModel& S, const KernelCoeffs& h2) {
    const std::size_t nu = h2.size();
    const QuadInt sc = QuadInt::from_rational(S.F, mpq_class(S.scale));
    // h_model(X) = h2(scale X + shift) / scale^nu, via Horner
    std::vector<QuadInt> acc;  // ascending coefficients
    auto push_zero = [&] { return QuadInt(S.F, 0, 0); };
    for (std::size_t step = 0; step <= nu; ++step) {
        // coefficient of degree (nu - step) in h2: leading first
        const QuadInt c = (step == 0) ? QuadInt(S.F, 1, 0) : h2[nu - step];
        // acc = acc * (scale X + shift) + c
        std::vector<QuadInt> nacc(acc.size() + 1, push_zero());
        for (std::size_t i = 0; i < acc.size(); ++i) {
            nacc[i + 1] = nacc[i + 1] + acc[i] * sc;
            nacc[i] = nacc[i] + acc[i] * S.shift;
        }
        if (nacc.empty()) nacc.push_back(push_zero());
        nacc[0] = nacc[0] + c;
        acc = std::move(nacc);
    }
    QuadInt denom(S.F, 1, 0);
    for (std::size_t i = 0; i < nu; ++i) denom = denom * sc;
    std::vector<Coords> out;
    out.reserve(acc.size());
    for (const QuadInt& c : acc) {
        const QuadInt v = c / denom;
        out.emplace_back(v.x(), v.y());
    }
    return out;
}

}  // namespace

std::vector<Coords> isogeny_kernel_polynomial(const CurveModel& curve, long ell) {
    if (ell < 3 || ell % 2 == 0 || !is_prime(mpz_class(ell)))
        throw std::invalid_argument("ell must be an odd prime");
    if (ell > kMaxEll)
        throw std::invalid_argument("kernel reconstruction is capped at small ell");
    if (curve.delta_K != 0) {
        const long delta = curve.delta_K * curve.conductor_f * curve.conductor_f;
        if (delta % ell != 0)
            throw std::invalid_argument("ell must divide the CM discriminant of the model");
    }
    const Coords disc = model_discriminant(curve);
    if (disc.first == 0 && disc.second == 0)
        throw std::invalid_argument("singular model has no isogeny kernel");
    const ScaledModel S = build_scaled(curve);
    if (ell == 3 && S.over_Q) return kernel3_rational(S);
    const KernelCoeffs h2 = S.over_Q ? crt_kernel_q(S, ell) : crt_kernel_k(S, ell);
    return to_model_coords(S, h2);
}

std::vector<IsogenyCharSample> isogeny_character_values(const CurveModel& curve, long ell,
                                                        const std::vector<long>& primes) {
    const std::vector<Coords> h = isogeny_kernel_polynomial(curve, ell);
    const long nu = (ell - 1) / 2;
    std::vector<IsogenyCharSample> out;
    for (const long p : primes) {
        if (p < 5 || p == ell || !is_prime(mpz_class(p))) continue;
        const std::uint64_t up = static_cast<std::uint64_t>(p);
        std::uint64_t root = 0;
        if (!curve.over_Q()) {
            const auto roots = detail::field_roots_mod_p(*curve.base, p);
            if (roots.empty()) continue;
            root = roots.front();
        }
        const auto sm = detail::reduce_model(curve, p, root);
        if (!sm) continue;
        // kernel polynomial in short coordinates: hs(X) = scale^nu h((X - shift)/scale)
        FpPoly hp(h.size());
        bool ok = true;
        for (std::size_t i = 0; i < h.size(); ++i) {
            auto c = detail::coeff_mod_p(h[i], root, up);
            if (!c) {
                ok = false;
                break;
            }
            hp[i] = *c;
        }
        if (!ok) continue;
        detail::fp_trim(hp);
        if (detail::fp_deg(hp) != nu) continue;
        FpPoly hs;
        {
            const std::uint64_t sc_inv = invmod_u64(sm->scale, up);
            // linear substitution L(X) = sc_inv * X - sc_inv * shift, then
            // normalize by scale^nu to keep hs monic
            const std::uint64_t l1 = sc_inv;
            const std::uint64_t l0 = (up - mulmod_u64(sc_inv, sm->shift, up)) % up;
            FpPoly accp{hp.back()};
            for (std::size_t i = hp.size() - 1; i-- > 0;) {
                FpPoly nacc(accp.size() + 1, 0);
                for (std::size_t k = 0; k < accp.size(); ++k) {
                    nacc[k + 1] = (nacc[k + 1] + mulmod_u64(accp[k], l1, up)) % up;
                    nacc[k] = (nacc[k] + mulmod_u64(accp[k], l0, up)) % up;
                }
                nacc[0] = (nacc[0] + hp[i]) % up;
                accp = std::move(nacc);
            }
            std::uint64_t scpow = 1;
            for (long i = 0; i < nu; ++i) scpow = mulmod_u64(scpow, sm->scale, up);
            hs = detail::fp_smul(scpow, std::move(accp), up);
        }
        if (detail::fp_deg(hs) != nu || !detail::fp_is_squarefree(hs, up)) continue;
        auto factors = detail::fp_factor_squarefree(hs, up);
        if (factors.empty()) continue;
        std::sort(factors.begin(), factors.end(), [](const FpPoly& a, const FpPoly& b) {
            if (a.size() != b.size()) return a.size() < b.size();
            return a < b;
        });
        FqCtx fq{up, factors.front()};
        const FpPoly x1 = fq.gen();
        const auto V = divpoly_values(fq, x1, sm->A, sm->B, ell - 1);
        const FpPoly fx = fq.add(fq.add(fq.mul(fq.mul(x1, x1), x1), fq.smul(sm->A % up, x1)),
                                 fq.scalar(sm->B % up));
        if (fx.empty()) continue;
        const FpPoly z = detail::fp_powmod(x1, up, fq.modulus, up);
        long jmatch = 0;
        bool unique = true;
        {
            std::vector<FpPoly> xs;
            xs.push_back(x1);
            for (long j = 2; j <= nu; ++j) {
                const auto& Vj = V[static_cast<std::size_t>(j)];
                if (Vj.empty()) {
                    unique = false;
                    break;
                }
                FpPoly cross =
                    fq.mul(V[static_cast<std::size_t>(j - 1)], V[static_cast<std::size_t>(j + 1)]);
                FpPoly den = fq.mul(Vj, Vj);
                if (j % 2 == 1) cross = fq.mul(cross, fx);
                else den = fq.mul(den, fx);
                xs.push_back(fq.sub(x1, fq.mul(cross, fq.inv(den))));
            }
            if (unique) {
                for (long j = 1; j <= nu; ++j) {
                    if (xs[static_cast<std::size_t>(j - 1)] == z) {
                        if (jmatch != 0) {
                            unique = false;
                            break;
                        }
                        jmatch = j;
                    }
                }
            }
        }
        if (!unique || jmatch == 0) continue;
        // sign: Frob(P) = jP exactly when y(jP)/y = f(x1)^{(p-1)/2}
        const FpPoly fpow = detail::fp_powmod(fx, (up - 1) / 2, fq.modulus, up);
        const auto& Vj = V[static_cast<std::size_t>(jmatch)];
        FpPoly den = fq.smul(2, fq.mul(fq.mul(Vj, Vj), fq.mul(Vj, Vj)));
        if (jmatch % 2 == 0) den = fq.mul(den, fq.mul(fx, fx));
        const FpPoly R = fq.mul(V[static_cast<std::size_t>(2 * jmatch)], fq.inv(den));
        const long lambda = (R == fpow) ? jmatch : ell - jmatch;
        out.push_back(IsogenyCharSample{p, lambda});
    }
    return out;
}

}  // namespace cmik
