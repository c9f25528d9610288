// Class polynomials of imaginary quadratic discriminants: enumerate reduced
// primitive binary quadratic forms, evaluate the modular j-function at each
// form's CM point with high-precision complex arithmetic, expand the product
// of (x - j_i), and snap the coefficients to integers with a hard residual
// tolerance.

#include <mpfr.h>

#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmik/ecmodel.hpp"

namespace cmik {

namespace {

constexpr mpfr_prec_t kPrec = 320;   // working bits; coefficients stay < 1e40
constexpr int kTerms = 64;           // q-series truncation; |q| <= e^(-pi*sqrt(3))
constexpr double kTolerance = 1e-10; // max residual before integer snapping

class Cx {
  public:
    Cx() {
        mpfr_inits2(kPrec, re_, im_, static_cast<mpfr_ptr>(nullptr));
        mpfr_set_zero(re_, 1);
        mpfr_set_zero(im_, 1);
    }
    explicit Cx(long n) : Cx() { mpfr_set_si(re_, n, MPFR_RNDN); }
    Cx(const Cx& o) : Cx() {
        mpfr_set(re_, o.re_, MPFR_RNDN);
        mpfr_set(im_, o.im_, MPFR_RNDN);
    }
    Cx& operator=(const Cx& o) {
        mpfr_set(re_, o.re_, MPFR_RNDN);
        mpfr_set(im_, o.im_, MPFR_RNDN);
        return *this;
    }
    ~Cx() { mpfr_clears(re_, im_, static_cast<mpfr_ptr>(nullptr)); }

    // r * (cos(theta) + i sin(theta))
    static Cx polar(const mpfr_t r, const mpfr_t theta) {
        Cx out;
        mpfr_cos(out.re_, theta, MPFR_RNDN);
        mpfr_sin(out.im_, theta, MPFR_RNDN);
        mpfr_mul(out.re_, out.re_, r, MPFR_RNDN);
        mpfr_mul(out.im_, out.im_, r, MPFR_RNDN);
        return out;
    }

    Cx operator+(const Cx& o) const {
        Cx out(*this);
        mpfr_add(out.re_, out.re_, o.re_, MPFR_RNDN);
        mpfr_add(out.im_, out.im_, o.im_, MPFR_RNDN);
        return out;
    }
    Cx operator-(const Cx& o) const {
        Cx out(*this);
        mpfr_sub(out.re_, out.re_, o.re_, MPFR_RNDN);
        mpfr_sub(out.im_, out.im_, o.im_, MPFR_RNDN);
        return out;
    }
    Cx operator*(const Cx& o) const {
        Cx out;
        mpfr_t t;
        mpfr_init2(t, kPrec);
        mpfr_mul(out.re_, re_, o.re_, MPFR_RNDN);
        mpfr_mul(t, im_, o.im_, MPFR_RNDN);
        mpfr_sub(out.re_, out.re_, t, MPFR_RNDN);
        mpfr_mul(out.im_, re_, o.im_, MPFR_RNDN);
        mpfr_mul(t, im_, o.re_, MPFR_RNDN);
        mpfr_add(out.im_, out.im_, t, MPFR_RNDN);
        mpfr_clear(t);
        return out;
    }
    Cx operator/(const Cx& o) const {
        // (a+bi)/(c+di) = (a+bi)(c-di) / (c^2+d^2)
        Cx conj;
        mpfr_set(conj.re_, o.re_, MPFR_RNDN);
        mpfr_neg(conj.im_, o.im_, MPFR_RNDN);
        Cx num = *this * conj;
        mpfr_t n2, t;
        mpfr_inits2(kPrec, n2, t, static_cast<mpfr_ptr>(nullptr));
        mpfr_sqr(n2, o.re_, MPFR_RNDN);
        mpfr_sqr(t, o.im_, MPFR_RNDN);
        mpfr_add(n2, n2, t, MPFR_RNDN);
        mpfr_div(num.re_, num.re_, n2, MPFR_RNDN);
        mpfr_div(num.im_, num.im_, n2, MPFR_RNDN);
        mpfr_clears(n2, t, static_cast<mpfr_ptr>(nullptr));
        return num;
    }
    Cx& operator+=(const Cx& o) {
        mpfr_add(re_, re_, o.re_, MPFR_RNDN);
        mpfr_add(im_, im_, o.im_, MPFR_RNDN);
        return *this;
    }
    Cx& operator-=(const Cx& o) {
        mpfr_sub(re_, re_, o.re_, MPFR_RNDN);
        mpfr_sub(im_, im_, o.im_, MPFR_RNDN);
        return *this;
    }
    Cx& scale(long k) {
        mpfr_mul_si(re_, re_, k, MPFR_RNDN);
        mpfr_mul_si(im_, im_, k, MPFR_RNDN);
        return *this;
    }

    // Distance of the value to the nearest Gaussian point with this integer
    // real part; writes the rounded real part into z.
    double snap(mpz_class& z) const {
        mpfr_t t;
        mpfr_init2(t, kPrec);
        mpfr_get_z(z.get_mpz_t(), re_, MPFR_RNDN);
        mpfr_sub_z(t, re_, z.get_mpz_t(), MPFR_RNDN);
        mpfr_abs(t, t, MPFR_RNDN);
        double dre = mpfr_get_d(t, MPFR_RNDN);
        mpfr_abs(t, im_, MPFR_RNDN);
        double dim = mpfr_get_d(t, MPFR_RNDN);
        mpfr_clear(t);
        return dre > dim ? dre : dim;
    }

  private:
    mpfr_t re_, im_;
};

struct Form {
    long a, b, c;
};

std::vector<Form> reduced_forms(long disc) {
    std::vector<Form> forms;
    for (long a = 1; a * a * 3 <= -disc; ++a) {
        for (long b = -a + 1; b <= a; ++b) {
            long num = b * b - disc;
            if (num % (4 * a) != 0) continue;
            long c = num / (4 * a);
            if (c < a) continue;
            if (a == c && b < 0) continue;
            if (std::gcd(std::gcd(a, b), c) != 1) continue;
            forms.push_back({a, b, c});
        }
    }
    return forms;
}

// j at the CM point tau = (-b + i*sqrt(|disc|)) / (2a), via the q-expansion
// j = E4^3 / delta with E4 = 1 + 240 sum sigma3(n) q^n and
// delta = q * prod (1 - q^n)^24.
Cx j_at_form(const Form& f, long disc) {
    mpfr_t pi, root, r, theta;
    mpfr_inits2(kPrec, pi, root, r, theta, static_cast<mpfr_ptr>(nullptr));
    mpfr_const_pi(pi, MPFR_RNDN);
    mpfr_sqrt_ui(root, static_cast<unsigned long>(-disc), MPFR_RNDN);
    // |q| = exp(-pi * sqrt(|disc|) / a), arg q = -pi * b / a
    mpfr_mul(r, pi, root, MPFR_RNDN);
    mpfr_div_si(r, r, f.a, MPFR_RNDN);
    mpfr_neg(r, r, MPFR_RNDN);
    mpfr_exp(r, r, MPFR_RNDN);
    mpfr_mul_si(theta, pi, -f.b, MPFR_RNDN);
    mpfr_div_si(theta, theta, f.a, MPFR_RNDN);
    Cx q = Cx::polar(r, theta);
    mpfr_clears(pi, root, r, theta, static_cast<mpfr_ptr>(nullptr));

    std::vector<long> sigma3(kTerms + 1, 0);
    for (long d = 1; d <= kTerms; ++d)
        for (long n = d; n <= kTerms; n += d) sigma3[n] += d * d * d;

    Cx e4(1), delta(1), qn(1);
    const Cx one(1);
    for (int n = 1; n <= kTerms; ++n) {
        qn = qn * q;
        Cx term = qn;
        term.scale(240 * sigma3[n]);
        e4 += term;
        Cx factor = one - qn;
        Cx f24 = factor * factor;       // ^2
        f24 = f24 * f24;                // ^4
        Cx f8 = f24 * f24;              // ^8
        f24 = f8 * f8 * f8;             // ^24
        delta = delta * f24;
    }
    delta = delta * q;
    return e4 * e4 * e4 / delta;
}

}  // namespace

HilbertPoly hilbert_class_polynomial(long disc) {
    if (disc >= 0 || ((disc % 4) + 4) % 4 > 1)
        throw std::invalid_argument("class polynomial needs a negative discriminant (0 or 1 mod 4)");
    if (disc < -427)
        throw std::invalid_argument("class polynomial restricted to |disc| <= 427");

    std::vector<Form> forms = reduced_forms(disc);
    std::vector<Cx> coeffs;
    coeffs.emplace_back(1);
    for (const Form& f : forms) {
        Cx j = j_at_form(f, disc);
        // multiply the accumulated polynomial by (x - j)
        std::vector<Cx> next(coeffs.size() + 1);
        for (size_t i = 0; i < coeffs.size(); ++i) {
            next[i + 1] += coeffs[i];
            next[i] -= coeffs[i] * j;
        }
        coeffs = std::move(next);
    }

    HilbertPoly out;
    out.coeffs.resize(coeffs.size());
    for (size_t i = 0; i < coeffs.size(); ++i) {
        double res = coeffs[i].snap(out.coeffs[i]);
        if (res > out.max_residual) out.max_residual = res;
    }
    if (out.max_residual > kTolerance)
        throw std::runtime_error("class polynomial rounding residual " +
                                 std::to_string(out.max_residual) + " exceeds tolerance");
    if (out.coeffs.back() != 1)
        throw std::logic_error("class polynomial failed to come out monic");
    return out;
}

}  // namespace cmik
