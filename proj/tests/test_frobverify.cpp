#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmik/arith.hpp"
#include "cmik/divpoly.hpp"
#include "cmik/ecmodel.hpp"
#include "cmik/frobverify.hpp"
#include "cmik/modgroup.hpp"

using namespace cmik;

namespace {

CurveModel short_curve(long A, long B) {
    CurveModel c;
    c.a[3] = {mpq_class(A), 0};
    c.a[4] = {mpq_class(B), 0};
    return c;
}

std::vector<long> kernel_q(const CurveModel& c, long ell) {
    std::vector<long> out;
    for (const Coords& co : isogeny_kernel_polynomial(c, ell)) {
        CHECK(co.second == 0);
        out.push_back(static_cast<long>(co.first.get_num().get_si()));
    }
    return out;
}

std::map<long, long> lambda_map(const std::vector<IsogenyCharSample>& vals) {
    std::map<long, long> m;
    for (const auto& v : vals) m[v.p] = v.lambda;
    return m;
}

}  // namespace

TEST_CASE("Frobenius traces at small primes: pinned counts and policy errors") {
    // y^2 = x^3 + x: #E(F_5) = 4 (three 2-torsion abscissas and infinity),
    // so the trace is 5 + 1 - 4 = +2.
    CHECK(trace_of_frobenius(short_curve(1, 0), 5) == 2);
    CHECK(trace_of_frobenius(short_curve(1, 0), 7) == 0);   // 7 = 3 mod 4: supersingular
    CHECK(trace_of_frobenius(short_curve(0, 16), 7) == -1);
    CHECK(trace_of_frobenius(short_curve(0, 16), 11) == 0);  // 11 = 2 mod 3
    CHECK(trace_of_frobenius(short_curve(0, 16), 13) == 5);  // 4*13 = 5^2 + 27

    CHECK_THROWS_WITH_AS(trace_of_frobenius(short_curve(1, 0), 3),
                         "primes below 5 are skipped by policy", std::invalid_argument);
    CHECK_THROWS_WITH_AS(trace_of_frobenius(short_curve(1, 0), 2),
                         "primes below 5 are skipped by policy", std::invalid_argument);
    CHECK_THROWS_WITH_AS(trace_of_frobenius(short_curve(1, 0), 49), "p must be prime",
                         std::invalid_argument);
    // disc(x^3 - 5x) = 8000: additive reduction at 5
    CHECK_THROWS_WITH_AS(trace_of_frobenius(short_curve(-5, 0), 5), "bad reduction at p",
                         std::domain_error);
}

TEST_CASE("Frobenius traces above the character-sum cutoff: order finding agrees with direct counts") {
    // All five values were frozen from independent full point counts.
    CHECK(trace_of_frobenius(short_curve(1, 0), 10009) == -6);  // 10009 = 3^2 + 100^2
    CHECK(trace_of_frobenius(short_curve(1, 0), 10007) == 0);   // 10007 = 3 mod 4
    CHECK(trace_of_frobenius(short_curve(-2, 0), 10009) == 6);
    CHECK(trace_of_frobenius(short_curve(0, 16), 11213) == 0);  // 11213 = 2 mod 3
    CHECK(trace_of_frobenius(short_curve(0, 16), 11239) == -109);
}

TEST_CASE("Frobenius traces at field places: split, inert, ramified behavior") {
    const CurveModel& E = registry_lookup(CMOrder(-3, 7));  // over Q(sqrt 21)

    // 11 is inert in Q(sqrt 21): no F_p place, and the F_{p^2} count was
    // frozen from a brute-force count over F_121 (supersingular: 2p).
    CHECK(frobenius_traces(E, 11).empty());
    CHECK(trace_of_frobenius(E, 11) == 22);

    // 17 splits in Q(sqrt 21) but is inert in the CM field Q(sqrt -3):
    // both residue places give trace zero.
    const auto t17 = frobenius_traces(E, 17);
    REQUIRE(t17.size() == 2);
    CHECK(t17[0] == 0);
    CHECK(t17[1] == 0);

    // The conjugate model swaps the two places of a split prime.
    for (long p : {5L, 17L, 37L, 41L, 43L}) {
        auto a = frobenius_traces(E, p);
        auto b = frobenius_traces(conjugate_model(E), p);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
    }

    // Norm(conductor) = 49: the model degenerates at 7.
    CHECK_THROWS_WITH_AS(trace_of_frobenius(E, 7), "bad reduction at p", std::domain_error);

    // The F_{p^2} count is quadratic in p and refuses large inert primes.
    long big_inert = 1201;
    while (kronecker(21, big_inert) != -1 || !is_prime(mpz_class(big_inert))) ++big_inert;
    CHECK_THROWS_WITH_AS(trace_of_frobenius(E, big_inert),
                         "inert-place counting is capped to small primes", std::invalid_argument);
}

TEST_CASE("Sampling: reduced columns, Hasse bound, zero-trace law, and prime policy") {
    const CurveModel E = short_curve(0, 16);  // CM discriminant -3
    const FrobData data = sample_frobenius_data(E, 3, 2, 3000);
    CHECK(data.ell == 3);
    CHECK(data.n == 2);
    CHECK(data.modulus == 9);
    CHECK(data.samples.size() > 300);
    for (const FrobSample& s : data.samples) {
        CHECK(s.p >= 5);
        CHECK(s.p != 3);
        CHECK(is_prime(mpz_class(s.p)));
        CHECK(s.trace * s.trace <= 4 * s.p);                       // Hasse
        CHECK(s.det_mod == s.p % 9);                               // det = p
        CHECK(s.tr_mod == ((s.trace % 9) + 9) % 9);
        if (kronecker(-3, s.p) == -1) CHECK(s.trace == 0);         // inert = trace zero
    }

    CHECK_THROWS_WITH_AS(sample_frobenius_data(E, 3, 2, 99), "prime budget must be at least 100",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(sample_frobenius_data(E, 4, 1, 500), "need a prime ell and exponent n >= 1",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(sample_frobenius_data(E, 3, 0, 500), "need a prime ell and exponent n >= 1",
                         std::invalid_argument);

    // Over Q(sqrt 21) only 11 primes below 100 have an F_p place with good
    // reduction: an impossible budget fails loudly.
    CHECK_THROWS_WITH_AS(sample_frobenius_data(registry_lookup(CMOrder(-3, 7)), 7, 1, 100),
                         "fewer than 30 usable primes in the budget", std::runtime_error);
}

TEST_CASE("Sampling a field curve: one sample per residue place") {
    const CurveModel& E = registry_lookup(CMOrder(-3, 7));
    const FrobData data = sample_frobenius_data(E, 7, 1, 2000);
    std::map<long, int> count;
    for (const FrobSample& s : data.samples) {
        ++count[s.p];
        CHECK(s.det_mod == s.p % 7);
        CHECK(s.trace * s.trace <= 4 * s.p);
    }
    CHECK(count[5] == 2);    // split in Q(sqrt 21)
    CHECK(count[17] == 2);
    CHECK(count.count(11) == 0);  // inert: skipped
    CHECK(count.count(7) == 0);   // p = ell: skipped
    for (const auto& [p, c] : count) CHECK(c == 2);  // every usable prime splits
}

TEST_CASE("CSV export of sampled data") {
    const FrobData data = sample_frobenius_data(short_curve(1, 0), 2, 3, 1000);
    const std::string csv = frob_samples_csv(data);
    CHECK(csv.rfind("p,a_p,tr_mod,det_mod\n5,2,2,5\n", 0) == 0);
    const std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == data.samples.size() + 1);
}

TEST_CASE("Consistency verdicts: witnesses, coverage, support, empty data") {
    const FrobData data = sample_frobenius_data(short_curve(0, 16), 3, 2, 3000);
    const CartanParams par = cartan_params(CMOrder(-3, 1), 3, 2);
    const Subgroup H1 = named_subgroup("G6.1", par, 9, Gamma::c1);
    const Subgroup C = cartan_group(par);
    const Subgroup N = normalizer_group(par);

    const ConsistencyVerdict vh = consistency_check(data, H1);
    CHECK(vh.consistent);
    CHECK(vh.witness_prime == 0);
    CHECK(vh.coverage == doctest::Approx(1.0));
    CHECK(vh.supported);
    CHECK_FALSE(vh.flagged);
    CHECK(vh.sample_count == static_cast<long>(data.samples.size()));

    // The Cartan subgroup alone has no trace-zero classes with unit
    // determinant, so the first inert prime (5) is a witness.
    const ConsistencyVerdict vc = consistency_check(data, C);
    CHECK_FALSE(vc.consistent);
    CHECK(vc.witness_prime == 5);
    CHECK_FALSE(vc.supported);

    // The full normalizer is consistent but over-wide: most of its heavy
    // trace classes never occur for this curve, so it is not "supported".
    const ConsistencyVerdict vn = consistency_check(data, N);
    CHECK(vn.consistent);
    CHECK(vn.coverage < 0.5);
    CHECK_FALSE(vn.supported);

    FrobData empty;
    empty.ell = 3;
    empty.n = 2;
    empty.modulus = 9;
    const ConsistencyVerdict ve = consistency_check(empty, H1);
    CHECK(ve.consistent);
    CHECK(ve.coverage == doctest::Approx(0.0));
    CHECK(ve.flagged);
    CHECK_FALSE(ve.supported);

    const Subgroup H27 = named_subgroup("G6.1", cartan_params(CMOrder(-3, 1), 3, 3), 27, Gamma::c1);
    CHECK_THROWS_WITH_AS(consistency_check(data, H27),
                         "data and candidate must share the same modulus", std::invalid_argument);
}

TEST_CASE("Discrimination: survivors, ambiguity, all-eliminated, monotone in data") {
    const CurveModel E = short_curve(0, 16);
    const FrobData big = sample_frobenius_data(E, 3, 2, 3000);
    const CartanParams par = cartan_params(CMOrder(-3, 1), 3, 2);
    const std::vector<Subgroup> cands = {
        named_subgroup("G6.1", par, 9, Gamma::c1),
        named_subgroup("G6.1", par, 9, Gamma::cm1),
        cartan_group(par),
        normalizer_group(par),
    };

    const DiscriminationReport rep = discriminate(big, cands);
    REQUIRE(rep.verdicts.size() == 4);
    CHECK(rep.survivors == std::vector<std::size_t>{0, 1, 3});
    CHECK(rep.verdicts[2].witness_prime == 5);
    // The two adjoined-involution groups share their (trace, det) statistics
    // element for element: sampling can never separate them.
    REQUIRE(rep.ambiguous_pairs.size() == 1);
    CHECK(rep.ambiguous_pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});

    CHECK_THROWS_WITH_AS(discriminate(big, {cartan_group(par)}),
                         "all candidates eliminated: data or table bug", std::runtime_error);

    // More primes can only shrink the surviving set.
    const FrobData small = sample_frobenius_data(E, 3, 2, 600);
    const DiscriminationReport rs = discriminate(small, cands);
    for (std::size_t idx : rep.survivors) {
        const bool alive_small =
            std::find(rs.survivors.begin(), rs.survivors.end(), idx) != rs.survivors.end();
        CHECK(alive_small);
    }
}

TEST_CASE("Rational isogeny kernels: pinned polynomials and exact divisibility") {
    // Degree-1 kernels, written lowest degree first with a monic lead.
    CHECK(kernel_q(registry_lookup(CMOrder(-3, 1)), 3) == std::vector<long>{0, 1});
    CHECK(kernel_q(registry_lookup(CMOrder(-3, 2)), 3) == std::vector<long>{-3, 1});
    CHECK(kernel_q(short_curve(0, 16), 3) == std::vector<long>{0, 1});  // picks x over x+4

    const CurveModel& E7 = registry_lookup(CMOrder(-7, 1));
    CHECK(kernel_q(E7, 7) == std::vector<long>{31213, -1029, -49, 1});

    const CurveModel T7 = quadratic_twist(E7, Coords{-7, 0});
    CHECK(kernel_q(T7, 7) == std::vector<long>{-10706059, -50421, 343, 1});

    // Independent check: the kernel divides the degree-24 division polynomial
    // computed by the exact rational-arithmetic path.
    const RatPoly psi7 = division_polynomial(E7, 7);
    std::vector<mpq_class> hc;
    for (const Coords& c : isogeny_kernel_polynomial(E7, 7)) hc.push_back(c.first);
    const RatPoly h(hc);
    CHECK(psi7.divmod(h).second.is_zero());
}

TEST_CASE("Isogeny kernel over a quadratic base field") {
    const CurveModel& E = registry_lookup(CMOrder(-3, 7));
    const std::vector<Coords> h = isogeny_kernel_polynomial(E, 7);
    REQUIRE(h.size() == 4);
    CHECK(h[0] == Coords{294581, -105569});
    CHECK(h[1] == Coords{11258, -4038});
    CHECK(h[2] == Coords{146, -50});
    CHECK(h[3] == Coords{1, 0});
}

TEST_CASE("Isogeny kernel argument validation and honest failure") {
    const CurveModel& E7 = registry_lookup(CMOrder(-7, 1));
    CHECK_THROWS_AS(isogeny_kernel_polynomial(E7, 2), std::invalid_argument);
    CHECK_THROWS_AS(isogeny_kernel_polynomial(E7, 9), std::invalid_argument);
    CHECK_THROWS_AS(isogeny_kernel_polynomial(E7, 5), std::invalid_argument);  // 5 does not divide -7
    CHECK_THROWS_AS(isogeny_kernel_polynomial(registry_lookup(CMOrder(-67, 1)), 67),
                    std::invalid_argument);  // above the supported range
    CHECK_THROWS_AS(isogeny_kernel_polynomial(short_curve(0, 0), 3), std::invalid_argument);

    // No rational ell-isogeny exists: the reconstruction must refuse rather
    // than invent one.
    CHECK_THROWS_WITH_AS(isogeny_kernel_polynomial(short_curve(1, 1), 5),
                         "kernel polynomial fails to factor as expected", std::runtime_error);
    CHECK_THROWS_WITH_AS(isogeny_kernel_polynomial(short_curve(0, 16), 7),
                         "kernel polynomial fails to factor as expected", std::runtime_error);
}

TEST_CASE("Kernel eigenvalues: frozen tables, identities, square classes") {
    const CurveModel& E7 = registry_lookup(CMOrder(-7, 1));
    std::vector<long> ps;
    for (long p = 5; p < 120; ++p)
        if (is_prime(mpz_class(p))) ps.push_back(p);

    const auto model = lambda_map(isogeny_character_values(E7, 7, ps));
    const std::map<long, long> model_pinned = {
        {5, 4},   {11, 2},  {13, 1},  {17, 2},  {19, 4},  {23, 4},  {29, 1},
        {31, 2},  {37, 4},  {41, 1},  {43, 1},  {47, 4},  {53, 2},  {59, 2},
        {61, 4},  {67, 2},  {71, 1},  {73, 2},  {79, 4},  {83, 1},  {89, 4},  {97, 1},
        {101, 2}, {103, 4}, {107, 4}, {109, 2}, {113, 1}};
    CHECK(model == model_pinned);

    const CurveModel T7 = quadratic_twist(E7, Coords{-7, 0});
    const auto twist = lambda_map(isogeny_character_values(T7, 7, ps));
    REQUIRE(twist.size() == model.size());

    const std::set<long> squares = {1, 2, 4};
    for (const auto& [p, lam] : model) {
        // The eigenvalue pair (lam, p/lam) sums to the trace and multiplies
        // to the determinant mod 7.
        const long other = (p % 7) * static_cast<long>(invmod_u64(
                               static_cast<std::uint64_t>(lam), 7)) % 7;
        const long ap = trace_of_frobenius(E7, p);
        CHECK((lam * other - p) % 7 == 0);
        CHECK((lam + other - ap) % 7 == 0);
        const bool inert = kronecker(-7, p) == -1;
        if (inert) {
            CHECK(ap == 0);
            CHECK((lam * lam + p) % 7 == 0);
            // model and twist take opposite square classes at inert primes...
            CHECK(squares.count(lam) == 1);
            CHECK(squares.count(twist.at(p)) == 0);
        } else {
            // ...and agree at split primes.
            CHECK(twist.at(p) == lam);
        }
    }

    // Unusable primes are skipped without error.
    const auto skim = isogeny_character_values(E7, 7, {2, 3, 4, 7, 9, 25, 11});
    REQUIRE(skim.size() == 1);
    CHECK(skim[0].p == 11);
    CHECK(skim[0].lambda == 2);
}

TEST_CASE("Kernel eigenvalues over a field curve separate the two normalizer cosets") {
    const CurveModel& E = registry_lookup(CMOrder(-3, 7));
    std::vector<long> ps;
    for (long p = 5; p < 200; ++p)
        if (is_prime(mpz_class(p))) ps.push_back(p);
    const auto vals = isogeny_character_values(E, 7, ps);
    CHECK(vals.size() >= 15);
    const std::set<long> squares = {1, 2, 4};
    for (const auto& v : vals) {
        if (kronecker(-147, v.p) == -1)
            CHECK(squares.count(v.lambda) == 0);  // inert eigenvalues all non-square
        else
            CHECK(squares.count(v.lambda) == 1);
    }
}
