// Exact division polynomials for short Weierstrass curves, the catalog of
// stated factorization identities for the three reference curves, and
// count-based lower bounds on division-field degrees.
//
// Irreducibility is certified at the strongest available tier per polynomial:
// a full-degree factor modulo a single prime where one exists, rational-root
// exclusion for cubics, and otherwise a root-subset integrality scan — all
// complex roots are found at 320-bit precision and every subset of size <= 4
// is rejected because some elementary symmetric function of the subset stays
// a fixed margin away from the integers, which rules out monic integer
// factors of degree <= 4.  For polynomials of degree <= 9 that is a complete
// irreducibility proof; for the degree-32 polynomials it is reported as a
// partial consistency result, together with uniform mod-p factorization
// degrees matched against point counts over extension fields.

#include "cmik/divpoly.hpp"

#include <mpfr.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "cmik/arith.hpp"
#include "cmik/detail/fppoly.hpp"
#include "cmik/quadfield.hpp"

namespace cmik {

namespace {

const mpq_class kZeroQ(0);

}  // namespace

// ---------------------------------------------------------------------------
// RatPoly
// ---------------------------------------------------------------------------

RatPoly::RatPoly(std::vector<mpq_class> coeffs) : coeffs_(std::move(coeffs)) {
    for (auto& c : coeffs_) c.canonicalize();
    trim();
}

RatPoly RatPoly::from_descending(const std::vector<mpz_class>& coeffs) {
    std::vector<mpq_class> asc(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        asc[coeffs.size() - 1 - i] = mpq_class(coeffs[i]);
    return RatPoly(std::move(asc));
}

void RatPoly::trim() {
    while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

mpq_class RatPoly::coeff(long i) const {
    if (i < 0 || i >= static_cast<long>(coeffs_.size())) return kZeroQ;
    return coeffs_[static_cast<std::size_t>(i)];
}

mpq_class RatPoly::leading() const {
    return coeffs_.empty() ? kZeroQ : coeffs_.back();
}

RatPoly RatPoly::operator+(const RatPoly& o) const {
    std::vector<mpq_class> out(std::max(coeffs_.size(), o.coeffs_.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i < coeffs_.size()) out[i] += coeffs_[i];
        if (i < o.coeffs_.size()) out[i] += o.coeffs_[i];
    }
    return RatPoly(std::move(out));
}

RatPoly RatPoly::operator-(const RatPoly& o) const {
    std::vector<mpq_class> out(std::max(coeffs_.size(), o.coeffs_.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i < coeffs_.size()) out[i] += coeffs_[i];
        if (i < o.coeffs_.size()) out[i] -= o.coeffs_[i];
    }
    return RatPoly(std::move(out));
}

RatPoly RatPoly::operator*(const RatPoly& o) const {
    if (is_zero() || o.is_zero()) return RatPoly();
    std::vector<mpq_class> out(coeffs_.size() + o.coeffs_.size() - 1);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        for (std::size_t j = 0; j < o.coeffs_.size(); ++j)
            out[i + j] += coeffs_[i] * o.coeffs_[j];
    return RatPoly(std::move(out));
}

RatPoly RatPoly::scaled(const mpq_class& c) const {
    std::vector<mpq_class> out(coeffs_);
    for (auto& v : out) v *= c;
    return RatPoly(std::move(out));
}

std::pair<RatPoly, RatPoly> RatPoly::divmod(const RatPoly& divisor) const {
    if (divisor.is_zero()) throw std::domain_error("division by the zero polynomial");
    RatPoly rem(*this);
    if (degree() < divisor.degree()) return {RatPoly(), rem};
    std::vector<mpq_class> quot(static_cast<std::size_t>(degree() - divisor.degree()) + 1);
    const mpq_class lead = divisor.leading();
    while (!rem.is_zero() && rem.degree() >= divisor.degree()) {
        const long shift = rem.degree() - divisor.degree();
        mpq_class factor = rem.leading() / lead;
        quot[static_cast<std::size_t>(shift)] = factor;
        std::vector<mpq_class> sub(static_cast<std::size_t>(rem.degree()) + 1);
        for (std::size_t i = 0; i < divisor.coeffs_.size(); ++i)
            sub[i + static_cast<std::size_t>(shift)] = divisor.coeffs_[i] * factor;
        rem = rem - RatPoly(std::move(sub));
    }
    return {RatPoly(std::move(quot)), rem};
}

RatPoly RatPoly::exact_quotient(const RatPoly& divisor) const {
    auto [q, r] = divmod(divisor);
    if (!r.is_zero()) throw std::domain_error("polynomial division left a remainder");
    return q;
}

mpq_class RatPoly::eval(const mpq_class& x) const {
    mpq_class acc(0);
    for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
    return acc;
}

RatPoly RatPoly::derivative() const {
    if (coeffs_.size() <= 1) return RatPoly();
    std::vector<mpq_class> out(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i)
        out[i - 1] = coeffs_[i] * mpq_class(static_cast<long>(i));
    return RatPoly(std::move(out));
}

std::string RatPoly::str(const std::string& var) const {
    if (is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = coeffs_.size(); i-- > 0;) {
        const mpq_class& c = coeffs_[i];
        if (c == 0) continue;
        const bool neg = c < 0;
        mpq_class a = neg ? mpq_class(-c) : c;
        if (first) {
            if (neg) os << "-";
            first = false;
        } else {
            os << (neg ? " - " : " + ");
        }
        const bool unit = (a == 1);
        if (i == 0) {
            os << a.get_str();
        } else {
            if (!unit) os << a.get_str() << "*";
            os << var;
            if (i > 1) os << "^" << i;
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Division polynomials
// ---------------------------------------------------------------------------

RatPoly division_polynomial_ab(const mpq_class& A, const mpq_class& B, long N) {
    if (N < 2 || N > 9) throw std::invalid_argument("division polynomial index must lie in 2..9");
    if (4 * A * A * A + 27 * B * B == 0) throw std::domain_error("curve is singular");

    const RatPoly f(std::vector<mpq_class>{B, A, 0, 1});
    const RatPoly f2 = f * f;

    std::array<RatPoly, 10> P;
    P[1] = RatPoly(std::vector<mpq_class>{1});
    P[2] = RatPoly(std::vector<mpq_class>{2});
    P[3] = RatPoly(std::vector<mpq_class>{-A * A, 12 * B, 6 * A, 0, 3});
    P[4] = RatPoly(std::vector<mpq_class>{-8 * B * B - A * A * A, -4 * A * B, -5 * A * A,
                                          20 * B, 5 * A, 0, 1})
               .scaled(4);

    for (long n = 5; n <= N; ++n) {
        const long m = n / 2;
        if (n % 2 == 1) {
            const RatPoly t1 = P[m + 2] * P[m] * P[m] * P[m];
            const RatPoly t2 = P[m - 1] * P[m + 1] * P[m + 1] * P[m + 1];
            P[n] = (m % 2 == 0) ? f2 * t1 - t2 : t1 - f2 * t2;
        } else {
            const RatPoly t1 = P[m + 2] * P[m - 1] * P[m - 1];
            const RatPoly t2 = P[m - 2] * P[m + 1] * P[m + 1];
            P[n] = (P[m] * (t1 - t2)).scaled(mpq_class(1, 2));
        }
    }
    return P[N];
}

RatPoly division_polynomial(const CurveModel& curve, long N) {
    if (!curve.over_Q())
        throw std::invalid_argument("division polynomials require a curve over Q");
    if (curve.a[0].first != 0 || curve.a[1].first != 0 || curve.a[2].first != 0)
        throw std::invalid_argument("division polynomials require a short-form curve");
    return division_polynomial_ab(curve.a[3].first, curve.a[4].first, N);
}

// ---------------------------------------------------------------------------
// Point counts over prime fields and their extensions
// ---------------------------------------------------------------------------

namespace {

using detail::FpPoly;
using detail::fp_ddf;
using detail::fp_deg;
using detail::fp_from_ratpoly;
using detail::fp_irreducible;
using detail::fp_is_squarefree;
using detail::trace_by_char_sum;

// #E(F_{p^k}) from the trace over F_p via the standard recurrence
// a_k = a_1 a_{k-1} - p a_{k-2}.
mpz_class count_over_extension(long p, long ap, long k) {
    mpz_class a_prev = 2, a_cur = ap;
    for (long i = 2; i <= k; ++i) {
        const mpz_class next = ap * a_cur - p * a_prev;
        a_prev = a_cur;
        a_cur = next;
    }
    mpz_class pk;
    mpz_ui_pow_ui(pk.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(k));
    if (k == 0) return mpz_class(0);
    return pk + 1 - (k == 1 ? mpz_class(ap) : a_cur);
}

// Smallest k <= kmax such that N^2 | #E(F_{p^k}) and N | p^k - 1 — both
// necessary for E[N] <= E(F_{p^k}), so k lower-bounds the order of the
// Frobenius at p on E[N].  Returns 0 if no such k exists below the cap.
long smallest_torsion_k(long p, long ap, long N, long kmax) {
    mpz_class a_prev = 2, a_cur = ap, pk = p;
    const mpz_class N2 = mpz_class(N) * N;
    for (long k = 1; k <= kmax; ++k) {
        if (k > 1) {
            const mpz_class next = ap * a_cur - p * a_prev;
            a_prev = a_cur;
            a_cur = next;
            pk *= p;
        }
        const mpz_class count = pk + 1 - a_cur;
        if (mpz_divisible_p(count.get_mpz_t(), N2.get_mpz_t()) &&
            mpz_divisible_ui_p(mpz_class(pk - 1).get_mpz_t(), static_cast<unsigned long>(N)))
            return k;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Root-subset integrality scan
// ---------------------------------------------------------------------------

constexpr mpfr_prec_t kScanPrec = 320;       // working bits for root finding
constexpr double kScanThreshold = 1e-3;      // min distance-to-integers margin
constexpr double kScanCoeffTol = 1e-25;      // max coefficient reconstruction error
constexpr int kScanMaxSubset = 4;            // factor degrees ruled out

class CF {
  public:
    CF() {
        mpfr_inits2(kScanPrec, re_, im_, static_cast<mpfr_ptr>(nullptr));
        mpfr_set_zero(re_, 1);
        mpfr_set_zero(im_, 1);
    }
    CF(double re, double im) : CF() {
        mpfr_set_d(re_, re, MPFR_RNDN);
        mpfr_set_d(im_, im, MPFR_RNDN);
    }
    explicit CF(const mpz_class& n) : CF() { mpfr_set_z(re_, n.get_mpz_t(), MPFR_RNDN); }
    CF(const CF& o) : CF() { assign(o); }
    CF& operator=(const CF& o) {
        assign(o);
        return *this;
    }
    ~CF() { mpfr_clears(re_, im_, static_cast<mpfr_ptr>(nullptr)); }

    CF operator+(const CF& o) const {
        CF out(*this);
        mpfr_add(out.re_, out.re_, o.re_, MPFR_RNDN);
        mpfr_add(out.im_, out.im_, o.im_, MPFR_RNDN);
        return out;
    }
    CF operator-(const CF& o) const {
        CF out(*this);
        mpfr_sub(out.re_, out.re_, o.re_, MPFR_RNDN);
        mpfr_sub(out.im_, out.im_, o.im_, MPFR_RNDN);
        return out;
    }
    CF operator*(const CF& o) const {
        CF out;
        mpfr_t t;
        mpfr_init2(t, kScanPrec);
        mpfr_mul(out.re_, re_, o.re_, MPFR_RNDN);
        mpfr_mul(t, im_, o.im_, MPFR_RNDN);
        mpfr_sub(out.re_, out.re_, t, MPFR_RNDN);
        mpfr_mul(out.im_, re_, o.im_, MPFR_RNDN);
        mpfr_mul(t, im_, o.re_, MPFR_RNDN);
        mpfr_add(out.im_, out.im_, t, MPFR_RNDN);
        mpfr_clear(t);
        return out;
    }
    CF operator/(const CF& o) const {
        CF out;
        mpfr_t n2, t;
        mpfr_inits2(kScanPrec, n2, t, static_cast<mpfr_ptr>(nullptr));
        mpfr_sqr(n2, o.re_, MPFR_RNDN);
        mpfr_sqr(t, o.im_, MPFR_RNDN);
        mpfr_add(n2, n2, t, MPFR_RNDN);
        // (a+bi)(c-di) / (c^2+d^2)
        mpfr_mul(out.re_, re_, o.re_, MPFR_RNDN);
        mpfr_mul(t, im_, o.im_, MPFR_RNDN);
        mpfr_add(out.re_, out.re_, t, MPFR_RNDN);
        mpfr_div(out.re_, out.re_, n2, MPFR_RNDN);
        mpfr_mul(out.im_, im_, o.re_, MPFR_RNDN);
        mpfr_mul(t, re_, o.im_, MPFR_RNDN);
        mpfr_sub(out.im_, out.im_, t, MPFR_RNDN);
        mpfr_div(out.im_, out.im_, n2, MPFR_RNDN);
        mpfr_clears(n2, t, static_cast<mpfr_ptr>(nullptr));
        return out;
    }

    // |value|^2 as a double (saturates; used only for convergence tests).
    double abs2() const {
        mpfr_t t, u;
        mpfr_inits2(kScanPrec, t, u, static_cast<mpfr_ptr>(nullptr));
        mpfr_sqr(t, re_, MPFR_RNDN);
        mpfr_sqr(u, im_, MPFR_RNDN);
        mpfr_add(t, t, u, MPFR_RNDN);
        const double d = mpfr_get_d(t, MPFR_RNDN);
        mpfr_clears(t, u, static_cast<mpfr_ptr>(nullptr));
        return d;
    }

    // Squared distance to the nearest rational integer.
    double int_dist2() const {
        mpfr_t t, u;
        mpfr_inits2(kScanPrec, t, u, static_cast<mpfr_ptr>(nullptr));
        mpfr_rint(t, re_, MPFR_RNDN);
        mpfr_sub(t, re_, t, MPFR_RNDN);
        mpfr_sqr(t, t, MPFR_RNDN);
        mpfr_sqr(u, im_, MPFR_RNDN);
        mpfr_add(t, t, u, MPFR_RNDN);
        const double d = mpfr_get_d(t, MPFR_RNDN);
        mpfr_clears(t, u, static_cast<mpfr_ptr>(nullptr));
        return d;
    }

  private:
    void assign(const CF& o) {
        mpfr_set(re_, o.re_, MPFR_RNDN);
        mpfr_set(im_, o.im_, MPFR_RNDN);
    }
    mpfr_t re_, im_;
};

CF cf_eval(const std::vector<mpz_class>& ascending, const CF& z) {
    CF acc(ascending.back());
    for (std::size_t i = ascending.size() - 1; i-- > 0;) acc = acc * z + CF(ascending[i]);
    return acc;
}

// Simultaneous (Weierstrass–Durand–Kerner) iteration for all complex roots of
// a monic squarefree integer polynomial.  Reports the maximum coefficient
// reconstruction error as the accuracy certificate.
std::vector<CF> all_complex_roots(const std::vector<mpz_class>& ascending, double& coeff_err) {
    const std::size_t n = ascending.size() - 1;
    std::vector<CF> z(n);
    {
        CF seed(0.4, 0.9), acc(1.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            acc = acc * seed;
            z[i] = acc;
        }
    }
    for (int iter = 0; iter < 600; ++iter) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CF den(1.0, 0.0);
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) den = den * (z[i] - z[j]);
            const CF delta = cf_eval(ascending, z[i]) / den;
            z[i] = z[i] - delta;
            worst = std::max(worst, delta.abs2());
        }
        if (worst < 1e-130) break;
    }
    // Expand prod (x - z_i) and compare against the exact coefficients.
    std::vector<CF> poly(1, CF(1.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<CF> next(poly.size() + 1);
        for (std::size_t j = 0; j < poly.size(); ++j) {
            next[j + 1] = next[j + 1] + poly[j];
            next[j] = next[j] - poly[j] * z[i];
        }
        poly = std::move(next);
    }
    coeff_err = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const CF diff = poly[i] - CF(ascending[i]);
        coeff_err = std::max(coeff_err, diff.abs2());
    }
    coeff_err = std::sqrt(coeff_err);
    return z;
}

struct ScanOutcome {
    bool ok = false;       // no subset of size <= kScanMaxSubset is near-integral
    double margin = 0.0;   // min over subsets of the max symmetric-function distance
    double coeff_err = 0.0;
};

void scan_recurse(const std::vector<CF>& roots, std::size_t start, int remaining,
                  const std::vector<CF>& es, double& min_margin2) {
    for (std::size_t i = start; i < roots.size(); ++i) {
        std::vector<CF> next(es.size() + 1);
        next[0] = es[0];
        for (std::size_t j = 1; j < next.size(); ++j) {
            next[j] = (j < es.size()) ? es[j] : CF();
            next[j] = next[j] + es[j - 1] * roots[i];
        }
        double worst = 0.0;
        for (std::size_t j = 1; j < next.size(); ++j)
            worst = std::max(worst, next[j].int_dist2());
        min_margin2 = std::min(min_margin2, worst);
        if (remaining > 1) scan_recurse(roots, i + 1, remaining - 1, next, min_margin2);
    }
}

// Rules out monic integer factors of degree 1..kScanMaxSubset: for every
// subset of roots of those sizes, at least one elementary symmetric function
// must stay clear of the integers by kScanThreshold.
ScanOutcome subset_integrality_scan(const std::vector<mpz_class>& ascending) {
    ScanOutcome out;
    const auto roots = all_complex_roots(ascending, out.coeff_err);
    double min2 = std::numeric_limits<double>::infinity();
    std::vector<CF> es(1, CF(1.0, 0.0));
    scan_recurse(roots, 0, kScanMaxSubset, es, min2);
    out.margin = std::sqrt(min2);
    out.ok = out.coeff_err < kScanCoeffTol && out.margin > kScanThreshold;
    return out;
}

// ---------------------------------------------------------------------------
// Polynomials over Q(sqrt 2) for the 2-division splittings
// ---------------------------------------------------------------------------

using QPoly = std::vector<QuadInt>;  // ascending

QPoly qp_mul(const QPoly& a, const QPoly& b) {
    const QuadField F = a.front().field();
    QPoly out(a.size() + b.size() - 1, QuadInt(F, 0, 0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] = out[i + j] + a[i] * b[j];
    return out;
}

bool qp_equals_rational(const QPoly& a, const RatPoly& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].y() != 0 || a[i].x() != b.coeff(static_cast<long>(i))) return false;
    return b.degree() < static_cast<long>(a.size());
}

// ---------------------------------------------------------------------------
// Frozen reference polynomials
// ---------------------------------------------------------------------------

RatPoly rp(const std::vector<long>& descending) {
    std::vector<mpz_class> z(descending.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = descending[i];
    return RatPoly::from_descending(z);
}

RatPoly rp_str(const std::vector<const char*>& descending) {
    std::vector<mpz_class> z(descending.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = mpz_class(descending[i]);
    return RatPoly::from_descending(z);
}

std::vector<mpz_class> ascending_ints(const RatPoly& a) {
    std::vector<mpz_class> out(a.coeffs().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (a.coeffs()[i].get_den() != 1)
            throw std::invalid_argument("expected integer coefficients");
        out[i] = a.coeffs()[i].get_num();
    }
    return out;
}

// Quotient psi_4 / (2 psi_2) = P_4 / 4 of the curve y^2 = x^3 + Ax + B.
RatPoly quarter_psi4(const mpq_class& A, const mpq_class& B) {
    return division_polynomial_ab(A, B, 4).scaled(mpq_class(1, 4));
}

// Quotient psi_8 / (2 psi_4) = P_8 / (2 P_4).
RatPoly psi8_quotient(const mpq_class& A, const mpq_class& B) {
    return division_polynomial_ab(A, B, 8).exact_quotient(
        division_polynomial_ab(A, B, 4).scaled(2));
}

bool has_rational_root(const RatPoly& monic_integer) {
    // A monic integer polynomial only has integer roots, dividing the
    // constant term.
    const mpz_class c0 = monic_integer.coeff(0).get_num();
    if (c0 == 0) return true;
    for (const mpz_class& d : [&] {
             std::vector<mpz_class> divs{1};
             for (const auto& [prime, mult] : factorize(abs(c0)).factors) {
                 const std::size_t sz = divs.size();
                 mpz_class pw = 1;
                 for (unsigned e = 1; e <= mult; ++e) {
                     pw *= prime;
                     for (std::size_t i = 0; i < sz; ++i) divs.push_back(divs[i] * pw);
                 }
             }
             return divs;
         }()) {
        if (monic_integer.eval(mpq_class(d)) == 0) return true;
        if (monic_integer.eval(mpq_class(-d)) == 0) return true;
    }
    return false;
}

std::string format_margin(double m) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", m);
    return std::string(buf);
}

// Degree-32 field-polynomial consistency: no rational root, no factor of
// degree <= 4, and at every sampled good prime with squarefree reduction the
// irreducible factors share one degree k that is a power of two at which the
// point counts allow full 8-torsion.
IdentityCheck f8_consistency(const std::string& id, const RatPoly& f8, const mpz_class& A,
                             const mpz_class& B) {
    IdentityCheck entry{id, false, ""};
    if (f8.degree() != 32 || f8.leading() != 1) {
        entry.details = "transcription is not a monic degree-32 polynomial";
        return entry;
    }
    if (has_rational_root(f8)) {
        entry.details = "unexpected rational root";
        return entry;
    }
    const ScanOutcome scan = subset_integrality_scan(ascending_ints(f8));
    if (!scan.ok) {
        entry.details = "root-subset scan failed (margin " + format_margin(scan.margin) + ")";
        return entry;
    }
    int validated = 0;
    for (long p : {5L, 7L, 11L, 13L, 17L, 19L, 23L, 29L, 31L, 37L}) {
        const FpPoly fp = fp_from_ratpoly(f8, static_cast<std::uint64_t>(p));
        if (fp_deg(fp) != 32 || !fp_is_squarefree(fp, static_cast<std::uint64_t>(p))) continue;
        const auto ddf = fp_ddf(fp, static_cast<std::uint64_t>(p));
        if (ddf.size() != 1) {
            entry.details = "mixed factor degrees modulo " + std::to_string(p);
            return entry;
        }
        const long k = ddf[0].first;
        if (k != 1 && k != 2 && k != 4 && k != 8) {
            entry.details = "factor degree " + std::to_string(k) + " modulo " +
                            std::to_string(p) + " is not a power of two <= 8";
            return entry;
        }
        const long ap = trace_by_char_sum(A, B, p);
        mpz_class pk;
        mpz_ui_pow_ui(pk.get_mpz_t(), static_cast<unsigned long>(p),
                      static_cast<unsigned long>(k));
        const bool count_ok =
            mpz_divisible_ui_p(count_over_extension(p, ap, k).get_mpz_t(), 64) != 0;
        const bool cyc_ok = mpz_divisible_ui_p(mpz_class(pk - 1).get_mpz_t(), 8) != 0;
        if (!count_ok || !cyc_ok) {
            entry.details = "point counts reject full 8-torsion at the Frobenius order, p = " +
                            std::to_string(p);
            return entry;
        }
        ++validated;
    }
    if (validated < 5) {
        entry.details = "fewer than 5 usable primes";
        return entry;
    }
    entry.pass = true;
    entry.details =
        "monic of degree 32; no rational root; no factor of degree <= 4 (root-subset scan "
        "margin " +
        format_margin(scan.margin) + " > 0.001); factor degrees modulo " +
        std::to_string(validated) +
        " good primes are uniform powers of two with 64 | #E(F_p^k) and 8 | p^k - 1; full "
        "irreducibility over Q not certified here";
    return entry;
}

}  // namespace

// ---------------------------------------------------------------------------
// The stated-factorization report
// ---------------------------------------------------------------------------

std::vector<IdentityCheck> verify_stated_factorizations() {
    std::vector<IdentityCheck> report;
    const auto push = [&report](const std::string& id, bool pass, const std::string& details) {
        report.push_back(IdentityCheck{id, pass, details});
    };

    const QuadField F2(2);
    const auto lin = [&F2](const mpq_class& cx, const mpq_class& cy) {
        return QPoly{QuadInt(F2, cx, cy), QuadInt(F2, 1, 0)};
    };

    // --- curve y^2 = x^3 - 4320x + 96768 (order of discriminant -8) ---
    {
        const mpq_class A(-4320), B(96768);
        const RatPoly cubic(std::vector<mpq_class>{B, A, 0, 1});
        const QPoly prod = qp_mul(qp_mul(lin(-48, 0), lin(24, -36)), lin(24, 36));
        push("m8.two_division", qp_equals_rational(prod, cubic),
             "x^3 - 4320*x + 96768 = (x - 48)(x + 24 - 36*s)(x + 24 + 36*s) with s^2 = 2; "
             "exact over Q(s)");

        const RatPoly g4 = rp({1, -96, -288});
        const RatPoly h4 = rp({1, 96, -12096, 801792, -19823616});
        push("m8.psi4_quotient", quarter_psi4(A, B) == g4 * h4,
             "psi_4/(2*psi_2) = (x^2 - 96*x - 288)(x^4 + 96*x^3 - 12096*x^2 + 801792*x - "
             "19823616); exact");

        const QPoly g4_split = qp_mul(lin(-48, -36), lin(-48, 36));
        push("m8.g4_roots", qp_equals_rational(g4_split, g4),
             "x^2 - 96*x - 288 = (x - 48 - 36*s)(x - 48 + 36*s) with s^2 = 2; exact");

        const RatPoly f4 = rp({1, 0, 0, 0, 6, 0, 0, 0, 1});
        const ScanOutcome f4scan = subset_integrality_scan(ascending_ints(f4));
        push("m8.f4_irreducible", f4scan.ok,
             "x^8 + 6*x^4 + 1 has no factor of degree <= 4: root-subset integrality scan at "
             "320-bit precision, margin " +
                 format_margin(f4scan.margin) + " > 0.001; irreducible over Q");

        const RatPoly g8 = rp({1, -384, 12672, -3207168, 411899904, -7102660608,
                               -769476132864, 34682896908288, -388338828705792});
        const RatPoly h8 = rp_str(
            {"1", "384", "-158976", "56512512", "-7079104512", "24747835392",
             "63992933646336", "-4473029639798784", "12820733270949888",
             "5032439944946122752", "439330094789318148096", "-59799350443180371738624",
             "2970590494588309390491648", "-90439384490338796276023296",
             "1886990776677187362767241216", "-24997776320539944296795602944",
             "154419254302981504530439471104"});
        const RatPoly q8 = psi8_quotient(A, B);
        push("m8.psi8_quotient", q8.degree() == 24 && q8 == g8 * h8,
             "psi_8/(2*psi_4) has degree 24 and equals the product of its degree-8 and "
             "degree-16 factors; exact");

        report.push_back(f8_consistency(
            "m8.f8_consistency",
            rp({1,     16,    128,   672,   2544,  7200,  15352, 24272, 26904, 17312, -304,
                -11984, -9672, -2720, -3592, -7552, -2798, 6224,  6368,  -672,  -2224, 3360,
                4952,  -1072, -4600, -1120, 1776,  752,   -264,  -96,   24,    0,     1}),
            mpz_class(-4320), mpz_class(96768)));
    }

    // --- curve y^2 = x^3 - 11x + 14 (order of discriminant -16) ---
    {
        const mpq_class A(-11), B(14);
        const RatPoly cubic(std::vector<mpq_class>{B, A, 0, 1});
        const QPoly prod = qp_mul(qp_mul(lin(-2, 0), lin(1, -2)), lin(1, 2));
        push("m16.two_division", qp_equals_rational(prod, cubic),
             "x^3 - 11*x + 14 = (x - 2)(x + 1 - 2*s)(x + 1 + 2*s) with s^2 = 2; exact over "
             "Q(s)");

        const RatPoly g4 = rp({1, 4, -42, 100, -79});
        const RatPoly split = rp({1, -1}) * rp({1, -3}) * g4;
        push("m16.psi4_quotient", quarter_psi4(A, B) == split,
             "psi_4/(2*psi_2) = (x - 1)(x - 3)(x^4 + 4*x^3 - 42*x^2 + 100*x - 79); exact");

        push("m16.g4_irreducible", fp_irreducible(fp_from_ratpoly(g4, 5), 5),
             "x^4 + 4*x^3 - 42*x^2 + 100*x - 79 is irreducible modulo 5 (full-degree "
             "factor)");

        const RatPoly f4 = rp({1, 0, -4, 0, 8, 0, -4, 0, 1});
        const ScanOutcome f4scan = subset_integrality_scan(ascending_ints(f4));
        push("m16.f4_irreducible", f4scan.ok,
             "x^8 - 4*x^6 + 8*x^4 - 4*x^2 + 1 has no factor of degree <= 4: root-subset "
             "integrality scan at 320-bit precision, margin " +
                 format_margin(f4scan.margin) + " > 0.001; irreducible over Q");

        const RatPoly g8 = rp({1, -12, 22, 20, -47});
        const RatPoly h8 = rp({1, -4, 22, -68, 65});
        const RatPoly j8 = rp({1, 16, -584, 6832, -36772, 49168, 510344, -3482064, 11645062,
                               -28318032, 64382728, -142838640, 260940508, -339130064,
                               286605624, -141090160, 30821569});
        const RatPoly q8 = psi8_quotient(A, B);
        const bool quartics_irr =
            fp_irreducible(fp_from_ratpoly(g8, 3), 3) && fp_irreducible(fp_from_ratpoly(h8, 3), 3);
        push("m16.psi8_quotient", q8.degree() == 24 && q8 == g8 * h8 * j8 && quartics_irr,
             "psi_8/(2*psi_4) has degree 24 and equals the product of its degree-4, degree-4 "
             "and degree-16 factors (both quartics irreducible modulo 3); exact");

        report.push_back(f8_consistency(
            "m16.f8_consistency",
            rp({1,      16,     120,    560,    1848,  4784,   11000, 25344, 59844, 133856,
                260768, 419392, 534920, 513536, 332032, 93856, -43548, -22112, 61056, 77728,
                20768,  -18304, 320,    21440,  8240,  -8256,  -1888, 3584,  800,   -1216,
                320,    0,      8}),
            mpz_class(-11), mpz_class(14)));
    }

    // --- twist family y^2 = x^3 + 16d (j = 0) ---
    {
        const std::vector<long> samples{1, 2, -3, 5};
        const RatPoly f9 = rp({1, -24, 3, 1});
        const RatPoly g9 = rp({1, 657, 6111, -3318, 19647, 12033, 3972, 684, 9, 1});

        bool psi3_ok = true, quot_ok = true, split_ok = true;
        for (long d : samples) {
            const mpq_class B = mpq_class(16) * d;
            const RatPoly psi3 = division_polynomial_ab(0, B, 3);
            const RatPoly stated(std::vector<mpq_class>{0, mpq_class(192) * d, 0, 0, 3});
            psi3_ok = psi3_ok && psi3 == stated;

            const RatPoly q9 = division_polynomial_ab(0, B, 9).exact_quotient(psi3.scaled(3));
            bool monomials = q9.degree() == 36;
            for (long i = 0; i <= q9.degree(); ++i)
                if (i % 3 != 0 && q9.coeff(i) != 0) monomials = false;
            quot_ok = quot_ok && monomials;

            // Substitute x^3 = 64 d z.
            std::vector<mpq_class> zc(13);
            mpq_class pw(1);
            for (long k = 0; k <= 12; ++k) {
                zc[static_cast<std::size_t>(k)] = q9.coeff(3 * k) * pw;
                pw *= mpq_class(64) * d;
            }
            mpq_class scale = mpz_class(mpz_class(1) << 72);
            for (int i = 0; i < 12; ++i) scale *= d;
            split_ok = split_ok && RatPoly(std::move(zc)) == (f9 * g9).scaled(scale);
        }
        push("j0.psi3", psi3_ok,
             "psi_3 of y^2 = x^3 + 16*d equals 3*x*(x^3 + 64*d) for d in {1, 2, -3, 5}; "
             "exact");
        push("j0.psi9_quotient", quot_ok,
             "psi_9/(3*psi_3) has degree 36 and only x^(3k) terms for d in {1, 2, -3, 5}; "
             "exact");
        push("j0.F9_split", split_ok,
             "substituting x^3 = 64*d*z turns psi_9/(3*psi_3) into 2^72 * d^12 * f9(z) * "
             "g9(z) with the stated cubic and degree-9 factors, for d in {1, 2, -3, 5}; "
             "exact");

        const bool f9_ok = !has_rational_root(f9) && fp_irreducible(fp_from_ratpoly(f9, 2), 2);
        push("j0.f9_irreducible", f9_ok,
             "z^3 - 24*z^2 + 3*z + 1 has no rational root and is irreducible modulo 2; "
             "irreducible over Q");

        const ScanOutcome g9scan = subset_integrality_scan(ascending_ints(g9));
        push("j0.g9_irreducible", g9scan.ok,
             "degree-9 factor has no factor of degree <= 4: root-subset integrality scan at "
             "320-bit precision, margin " +
                 format_margin(g9scan.margin) +
                 " > 0.001; irreducible over Q (no single-prime modular witness exists)");
    }

    return report;
}

std::string identity_report_json(const std::vector<IdentityCheck>& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& entry : report) {
        arr.push_back({{"identity_id", entry.identity_id},
                       {"status", entry.pass ? "pass" : "fail"},
                       {"details", entry.details}});
    }
    return arr.dump(2);
}

// ---------------------------------------------------------------------------
// Torsion degree bounds
// ---------------------------------------------------------------------------

namespace {

// Rescale y^2 = x^3 + Ax + B to an integral model (A u^4, B u^6), a curve
// isomorphic over Q with the same division fields.
void integral_model(const mpq_class& A, const mpq_class& B, mpz_class& Ai, mpz_class& Bi) {
    mpz_class u;
    mpz_lcm(u.get_mpz_t(), A.get_den().get_mpz_t(), B.get_den().get_mpz_t());
    const mpz_class u2 = u * u, u4 = u2 * u2;
    mpq_class a = A * mpq_class(u4);
    mpq_class b = B * mpq_class(u4 * u2);
    a.canonicalize();
    b.canonicalize();
    Ai = a.get_num();
    Bi = b.get_num();
}

bool is_perfect_square(const mpz_class& n) {
    return n >= 0 && mpz_perfect_square_p(n.get_mpz_t()) != 0;
}

// Exact degree of the splitting field of x^3 + Ax + B over Q.
long two_division_degree(const mpz_class& A, const mpz_class& B) {
    const RatPoly cubic(std::vector<mpq_class>{mpq_class(B), mpq_class(A), 0, 1});
    long roots = 0;
    mpz_class root_val = 0;
    if (B == 0) {
        roots = 1;  // x = 0
        if (is_perfect_square(-A)) roots = 3;
    } else {
        std::vector<mpz_class> divs{1};
        for (const auto& [prime, mult] : factorize(abs(B)).factors) {
            const std::size_t sz = divs.size();
            mpz_class pw = 1;
            for (unsigned e = 1; e <= mult; ++e) {
                pw *= prime;
                for (std::size_t i = 0; i < sz; ++i) divs.push_back(divs[i] * pw);
            }
        }
        for (const mpz_class& d : divs) {
            for (int sign : {1, -1}) {
                const mpz_class r = sign * d;
                if (cubic.eval(mpq_class(r)) == 0) {
                    ++roots;
                    root_val = r;
                }
            }
        }
    }
    if (roots >= 2) return 1;  // two rational roots force the third
    if (roots == 1) {
        // Residual quadratic x^2 + rx + (r^2 + A).
        const mpz_class disc = -3 * root_val * root_val - 4 * A;
        return is_perfect_square(disc) ? 1 : 2;
    }
    const mpz_class disc = -4 * A * A * A - 27 * B * B;
    return is_perfect_square(disc) ? 3 : 6;
}

constexpr long kTorsionPrimeCap = 48;  // good primes sampled per call
constexpr long kTorsionKMax = 100;     // extension degrees tried per prime

}  // namespace

long torsion_degree_bounds(const CurveModel& curve, long N, long prime_budget) {
    if (!curve.over_Q())
        throw std::invalid_argument("torsion degree bounds require a curve over Q");
    if (N != 2 && N != 3 && N != 4 && N != 8 && N != 9)
        throw std::invalid_argument("torsion level must be one of 2, 3, 4, 8, 9");

    const CurveModel shorty = short_form(curve);
    mpz_class A, B;
    integral_model(shorty.a[3].first, shorty.a[4].first, A, B);
    const mpz_class disc = -4 * A * A * A - 27 * B * B;
    if (disc == 0) throw std::domain_error("curve is singular");

    if (N == 2) return two_division_degree(A, B);

    mpz_class bound = 1;
    long sampled = 0;
    for (long p = 5; p <= prime_budget && sampled < kTorsionPrimeCap; ++p) {
        if (!is_prime(mpz_class(p))) continue;
        if (N % p == 0) continue;
        if (mpz_divisible_ui_p(disc.get_mpz_t(), static_cast<unsigned long>(p))) continue;
        const long ap = trace_by_char_sum(A, B, p);
        const long k = smallest_torsion_k(p, ap, N, kTorsionKMax);
        if (k == 0) continue;
        ++sampled;
        mpz_lcm_ui(bound.get_mpz_t(), bound.get_mpz_t(), static_cast<unsigned long>(k));
    }
    if (sampled == 0)
        throw std::runtime_error("no usable good prime below the budget");
    if (!bound.fits_slong_p())
        throw std::runtime_error("torsion degree bound overflow");
    return bound.get_si();
}

}  // namespace cmik
