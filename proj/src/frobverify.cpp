// Frobenius sampling against candidate mod-ell^n images: point counting
// over residue fields, (trace, det) class consistency, and discrimination
// across candidate lists.

#include "cmik/frobverify.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cmik/arith.hpp"
#include "cmik/detail/fppoly.hpp"
#include "cmik/detail/reduce.hpp"

namespace cmik {

namespace {

using detail::FpPoly;
using detail::ShortModelP;

constexpr long kCharSumMax = 10000;   // character-sum counting up to here
constexpr long kBsgsFallbackMax = 2000000;
constexpr long kInertCap = 1200;      // direct F_{p^2} counting cap

long next_prime_after(long p) {
    mpz_class z(p), q;
    mpz_nextprime(q.get_mpz_t(), z.get_mpz_t());
    return static_cast<long>(q.get_si());
}

void check_prime(long p) {
    if (p < 5) throw std::invalid_argument("primes below 5 are skipped by policy");
    if (!is_prime(mpz_class(p))) throw std::invalid_argument("p must be prime");
}

long trace_short(const ShortModelP& sm) {
    const long p = static_cast<long>(sm.p);
    const mpz_class A(static_cast<long>(sm.A));
    const mpz_class B(static_cast<long>(sm.B));
    long a;
    if (p <= kCharSumMax) {
        a = detail::trace_by_char_sum(A, B, p);
    } else {
        try {
            a = detail::trace_bsgs(A, B, p);
        } catch (const std::exception&) {
            if (p > kBsgsFallbackMax) throw;
            a = detail::trace_by_char_sum(A, B, p);
        }
    }
    if (mpz_class(a) * a > mpz_class(4) * p)
        throw std::runtime_error("point count violates the Hasse bound");
    return a;
}

// Trace at an inert place: #E(F_{p^2}) by a quadratic-character sum over the
// residue field F_p[t]/(field polynomial).
long trace_inert(const CurveModel& m, long p) {
    if (p > kInertCap)
        throw std::invalid_argument("inert-place counting is capped to small primes");
    const std::uint64_t up = static_cast<std::uint64_t>(p);
    const QuadField& F = *m.base;
    FpPoly mod;  // the field polynomial mod p, monic quadratic
    if (!F.half_integral()) {
        mod = {(up - mpz_fdiv_ui(mpz_class(F.m).get_mpz_t(), up)) % up, 0, 1};
    } else {
        const mpz_class c((F.m - 1) / 4);
        mod = {(up - mpz_fdiv_ui(c.get_mpz_t(), up)) % up, up - 1, 1};
    }
    detail::FqCtx fq{up, mod};
    // coefficients u + v*a -> u + v*t
    FpPoly a[5];
    for (int i = 0; i < 5; ++i) {
        const Coords& c = m.a[static_cast<std::size_t>(i)];
        for (const mpq_class* q : {&c.first, &c.second})
            if (mpz_divisible_ui_p(q->get_den().get_mpz_t(), static_cast<unsigned long>(p)))
                throw std::domain_error("bad reduction at p");
        auto red = [&](const mpq_class& q) {
            const std::uint64_t num = mpz_fdiv_ui(q.get_num().get_mpz_t(), up);
            const std::uint64_t den = mpz_fdiv_ui(q.get_den().get_mpz_t(), up);
            return mulmod_u64(num, invmod_u64(den, up), up);
        };
        a[i] = FpPoly{red(c.first), red(c.second)};
        detail::fp_trim(a[i]);
    }
    // complete the square: (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    const FpPoly b2 = fq.add(fq.mul(a[0], a[0]), fq.smul(4, a[1]));
    const FpPoly b4v = fq.add(fq.smul(2, a[3]), fq.mul(a[0], a[2]));
    const FpPoly b6 = fq.add(fq.mul(a[2], a[2]), fq.smul(4, a[4]));
    const FpPoly g3 = fq.scalar(4);
    const FpPoly g1 = fq.smul(2, b4v);
    // singular check via the model discriminant mod the place
    {
        const FpPoly b8 = fq.sub(
            fq.add(fq.add(fq.mul(fq.mul(a[0], a[0]), a[4]), fq.smul(4, fq.mul(a[1], a[4]))),
                   fq.mul(a[1], fq.mul(a[2], a[2]))),
            fq.add(fq.mul(fq.mul(a[0], a[2]), a[3]), fq.mul(a[3], a[3])));
        const FpPoly disc =
            fq.sub(fq.smul(9, fq.mul(b2, fq.mul(b4v, b6))),
                   fq.add(fq.add(fq.mul(fq.mul(b2, b2), b8), fq.smul(8, fq.mul(b4v, fq.mul(b4v, b4v)))),
                          fq.smul(27, fq.mul(b6, b6))));
        if (disc.empty()) throw std::domain_error("bad reduction at p");
    }
    const std::uint64_t e = (up * up - 1) / 2;
    long chi_sum = 0;
    FpPoly x(2);
    for (std::uint64_t v = 0; v < up; ++v) {
        for (std::uint64_t u = 0; u < up; ++u) {
            x = {u, v};
            detail::fp_trim(x);
            // g(x) = 4x^3 + b2 x^2 + 2 b4 x + b6 via Horner
            FpPoly g = fq.add(fq.mul(fq.add(fq.mul(fq.add(fq.mul(g3, x), b2), x), g1), x), b6);
            if (g.empty()) continue;  // chi(0) = 0
            const FpPoly c = detail::fp_powmod(g, e, mod, up);
            if (detail::fp_deg(c) != 0) throw std::runtime_error("quadratic character failed");
            chi_sum += (c[0] == 1) ? 1 : -1;
        }
    }
    const long a_val = -chi_sum;  // #E = q + 1 + chi_sum, trace = q + 1 - #E
    if (mpz_class(a_val) * a_val > mpz_class(4) * p * p)
        throw std::runtime_error("point count violates the Hasse bound");
    return a_val;
}

std::pair<long, long> class_of(const GL2Mod& g) {
    const long m = static_cast<long>(g.m);
    const long tr = static_cast<long>((g.a + g.d) % g.m);
    return {tr, static_cast<long>(g.det()) % m};
}

}  // namespace

long trace_of_frobenius(const CurveModel& curve, long p) {
    check_prime(p);
    if (curve.over_Q()) {
        auto sm = detail::reduce_model(curve, p, 0);
        if (!sm) throw std::domain_error("bad reduction at p");
        return trace_short(*sm);
    }
    const auto roots = detail::field_roots_mod_p(*curve.base, p);
    if (!roots.empty()) {
        auto sm = detail::reduce_model(curve, p, roots.front());
        if (!sm) throw std::domain_error("bad reduction at p");
        return trace_short(*sm);
    }
    return trace_inert(curve, p);
}

std::vector<long> frobenius_traces(const CurveModel& curve, long p) {
    check_prime(p);
    if (curve.over_Q()) {
        auto sm = detail::reduce_model(curve, p, 0);
        if (!sm) throw std::domain_error("bad reduction at p");
        return {trace_short(*sm)};
    }
    std::vector<long> out;
    for (const std::uint64_t r : detail::field_roots_mod_p(*curve.base, p)) {
        auto sm = detail::reduce_model(curve, p, r);
        if (!sm) throw std::domain_error("bad reduction at p");
        out.push_back(trace_short(*sm));
    }
    return out;
}

FrobData sample_frobenius_data(const CurveModel& curve, long ell, long n, long prime_budget) {
    if (prime_budget < 100) throw std::invalid_argument("prime budget must be at least 100");
    if (ell < 2 || !is_prime(mpz_class(ell)) || n < 1)
        throw std::invalid_argument("need a prime ell and exponent n >= 1");
    FrobData out;
    out.ell = ell;
    out.n = n;
    out.modulus = 1;
    for (long i = 0; i < n; ++i) out.modulus *= ell;
    auto push = [&](long p, long a) {
        FrobSample s;
        s.p = p;
        s.trace = a;
        s.tr_mod = ((a % out.modulus) + out.modulus) % out.modulus;
        s.det_mod = p % out.modulus;
        out.samples.push_back(s);
    };
    long usable = 0;
    for (long p = 5; p <= prime_budget; p = next_prime_after(p)) {
        if (p == ell) continue;
        bool used = false;
        if (curve.over_Q()) {
            auto sm = detail::reduce_model(curve, p, 0);
            if (!sm) continue;
            push(p, trace_short(*sm));
            used = true;
        } else {
            for (const std::uint64_t r : detail::field_roots_mod_p(*curve.base, p)) {
                auto sm = detail::reduce_model(curve, p, r);
                if (!sm) continue;
                push(p, trace_short(*sm));
                used = true;
            }
        }
        if (used) ++usable;
    }
    if (usable < 30) throw std::runtime_error("fewer than 30 usable primes in the budget");
    return out;
}

std::string frob_samples_csv(const FrobData& data) {
    std::ostringstream os;
    os << "p,a_p,tr_mod,det_mod\n";
    for (const FrobSample& s : data.samples)
        os << s.p << ',' << s.trace << ',' << s.tr_mod << ',' << s.det_mod << '\n';
    return os.str();
}

ConsistencyVerdict consistency_check(const FrobData& data, const Subgroup& candidate) {
    if (static_cast<long>(candidate.modulus) != data.modulus)
        throw std::invalid_argument("data and candidate must share the same modulus");
    std::map<std::pair<long, long>, long> classes;
    for (const std::uint64_t key : candidate.elements) {
        const GL2Mod g = GL2Mod::unpack(key, candidate.modulus);
        ++classes[class_of(g)];
    }
    const double total = static_cast<double>(candidate.elements.size());
    ConsistencyVerdict v;
    v.sample_count = static_cast<long>(data.samples.size());
    v.flagged = data.samples.empty();
    std::set<std::pair<long, long>> observed;
    for (const FrobSample& s : data.samples) {
        const std::pair<long, long> cls{s.tr_mod, s.det_mod};
        observed.insert(cls);
        if (!classes.count(cls)) {
            v.consistent = false;
            if (v.witness_prime == 0) v.witness_prime = s.p;
        }
    }
    for (const auto& [cls, count] : classes) {
        if (static_cast<double>(count) / total < 0.05) continue;
        ++v.heavy_classes;
        if (observed.count(cls)) ++v.observed_heavy;
    }
    v.coverage = (v.heavy_classes > 0 && !data.samples.empty())
                     ? static_cast<double>(v.observed_heavy) / static_cast<double>(v.heavy_classes)
                     : 0.0;
    v.supported = v.consistent && v.heavy_classes > 0 && v.observed_heavy == v.heavy_classes &&
                  v.sample_count >= 300;
    return v;
}

DiscriminationReport discriminate(const FrobData& data, const std::vector<Subgroup>& candidates) {
    DiscriminationReport report;
    report.verdicts.reserve(candidates.size());
    for (const Subgroup& g : candidates) report.verdicts.push_back(consistency_check(data, g));
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (report.verdicts[i].consistent) report.survivors.push_back(i);
    if (report.survivors.empty())
        throw std::runtime_error("all candidates eliminated: data or table bug");
    // class distributions, for detecting candidates identical in (trace, det)
    auto distribution = [](const Subgroup& g) {
        std::map<std::pair<long, long>, long> d;
        for (const std::uint64_t key : g.elements) ++d[class_of(GL2Mod::unpack(key, g.modulus))];
        return d;
    };
    std::vector<std::map<std::pair<long, long>, long>> dists;
    dists.reserve(report.survivors.size());
    for (const std::size_t i : report.survivors) dists.push_back(distribution(candidates[i]));
    for (std::size_t x = 0; x < report.survivors.size(); ++x) {
        for (std::size_t y = x + 1; y < report.survivors.size(); ++y) {
            const std::size_t i = report.survivors[x], j = report.survivors[y];
            const auto &di = dists[x], &dj = dists[y];
            if (di.size() != dj.size()) continue;
            const mpz_class si(static_cast<long>(candidates[i].elements.size()));
            const mpz_class sj(static_cast<long>(candidates[j].elements.size()));
            bool same = true;
            for (const auto& [cls, count] : di) {
                auto it = dj.find(cls);
                if (it == dj.end() || mpz_class(count) * sj != mpz_class(it->second) * si) {
                    same = false;
                    break;
                }
            }
            if (same) report.ambiguous_pairs.emplace_back(i, j);
        }
    }
    return report;
}

}  // namespace cmik
