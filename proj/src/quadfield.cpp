#include "cmik/quadfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "cmik/arith.hpp"

namespace cmik {

namespace {

void require_same_field(const QuadField& a, const QuadField& b) {
    if (a != b) throw std::invalid_argument("QuadInt: mixed fields");
}

// c in a^2 = a + c (half-integral case only).
mpq_class gen_offset(const QuadField& f) { return mpq_class((f.m - 1) / 4); }

bool rational_square(const mpq_class& q, mpq_class* root = nullptr) {
    if (sgn(q) < 0) return false;
    mpq_class c = q;
    c.canonicalize();
    const mpz_class &num = c.get_num(), &den = c.get_den();
    if (mpz_perfect_square_p(num.get_mpz_t()) == 0 ||
        mpz_perfect_square_p(den.get_mpz_t()) == 0)
        return false;
    if (root) {
        mpz_class rn, rd;
        mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
        mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
        *root = mpq_class(rn) / mpq_class(rd);
    }
    return true;
}

std::string rational_str(const mpq_class& q) {
    mpq_class c = q;
    c.canonicalize();
    return c.get_str();
}

}  // namespace

QuadField::QuadField(long m_in) : m(m_in) {
    if (m < 2) throw std::invalid_argument("QuadField: m must exceed 1");
    Factorization f = factorize(static_cast<long long>(m));
    for (const auto& [p, e] : f.factors)
        if (e > 1) throw std::invalid_argument("QuadField: m must be square-free");
}

std::string QuadField::minpoly() const {
    std::ostringstream os;
    if (half_integral())
        os << "x^2-x-" << (m - 1) / 4;
    else
        os << "x^2-" << m;
    return os.str();
}

double QuadField::root() const {
    double s = std::sqrt(static_cast<double>(m));
    return half_integral() ? (1.0 + s) / 2.0 : s;
}

QuadInt::QuadInt(QuadField field, mpq_class x, mpq_class y)
    : field_(field), x_(std::move(x)), y_(std::move(y)) {
    x_.canonicalize();
    y_.canonicalize();
}

QuadInt::QuadInt(QuadField field, long x, long y)
    : QuadInt(field, mpq_class(x), mpq_class(y)) {}

QuadInt QuadInt::from_rational(QuadField field, mpq_class v) {
    return QuadInt(field, std::move(v), mpq_class(0));
}

QuadInt QuadInt::operator+(const QuadInt& o) const {
    require_same_field(field_, o.field_);
    return QuadInt(field_, x_ + o.x_, y_ + o.y_);
}

QuadInt QuadInt::operator-(const QuadInt& o) const {
    require_same_field(field_, o.field_);
    return QuadInt(field_, x_ - o.x_, y_ - o.y_);
}

QuadInt QuadInt::operator*(const QuadInt& o) const {
    require_same_field(field_, o.field_);
    if (field_.half_integral()) {
        mpq_class c = gen_offset(field_);
        return QuadInt(field_, x_ * o.x_ + c * y_ * o.y_,
                       x_ * o.y_ + y_ * o.x_ + y_ * o.y_);
    }
    return QuadInt(field_, x_ * o.x_ + field_.m * y_ * o.y_, x_ * o.y_ + y_ * o.x_);
}

QuadInt QuadInt::operator/(const QuadInt& o) const { return *this * o.inverse(); }

QuadInt QuadInt::operator-() const { return QuadInt(field_, -x_, -y_); }

QuadInt QuadInt::conjugate() const {
    if (field_.half_integral()) return QuadInt(field_, x_ + y_, -y_);
    return QuadInt(field_, x_, -y_);
}

QuadInt QuadInt::inverse() const {
    mpq_class n = norm();
    if (sgn(n) == 0) throw std::invalid_argument("QuadInt: inverse of zero");
    QuadInt c = conjugate();
    return QuadInt(field_, c.x_ / n, c.y_ / n);
}

mpq_class QuadInt::norm() const {
    if (field_.half_integral()) return x_ * x_ + x_ * y_ - gen_offset(field_) * y_ * y_;
    return x_ * x_ - field_.m * y_ * y_;
}

mpq_class QuadInt::trace() const {
    if (field_.half_integral()) return 2 * x_ + y_;
    return 2 * x_;
}

bool QuadInt::is_zero() const { return sgn(x_) == 0 && sgn(y_) == 0; }

bool QuadInt::is_integral() const { return x_.get_den() == 1 && y_.get_den() == 1; }

bool QuadInt::is_unit() const {
    if (!is_integral()) return false;
    mpq_class n = norm();
    return n == 1 || n == -1;
}

int QuadInt::sign_real() const {
    // Express the value as r + s*sqrt(m).
    mpq_class r = x_, s = y_;
    if (field_.half_integral()) {
        r += y_ / 2;
        s = y_ / 2;
    }
    int sr = sgn(r), ss = sgn(s);
    if (sr == 0 && ss == 0) return 0;
    if (sr >= 0 && ss >= 0) return 1;
    if (sr <= 0 && ss <= 0) return -1;
    // Opposite signs: compare r^2 against m*s^2 (never equal for nonzero s
    // since m is not a rational square).
    mpq_class lhs = r * r, rhs = field_.m * s * s;
    return (lhs > rhs) ? sr : ss;
}

double QuadInt::approx() const { return x_.get_d() + y_.get_d() * field_.root(); }

std::string QuadInt::str() const {
    if (sgn(y_) == 0) return rational_str(x_);
    std::string ypart;
    if (y_ == 1)
        ypart = "a";
    else if (y_ == -1)
        ypart = "-a";
    else
        ypart = rational_str(y_) + "*a";
    if (sgn(x_) == 0) return ypart;
    std::string out = rational_str(x_);
    if (sgn(y_) > 0) out += "+";
    return out + ypart;
}

bool QuadInt::operator==(const QuadInt& o) const {
    return field_ == o.field_ && x_ == o.x_ && y_ == o.y_;
}

QuadInt fundamental_unit(const QuadField& field) {
    const long m = field.m;
    const QuadInt one = QuadInt::from_rational(field, 1);
    for (long yy = 1; yy <= 200000; ++yy) {
        std::vector<QuadInt> hits;
        auto consider = [&](const mpz_class& xx) {
            QuadInt u(field, mpq_class(xx), mpq_class(yy));
            mpq_class n = u.norm();
            if (n != 1 && n != -1) return;
            if ((u - one).sign_real() > 0) hits.push_back(u);
        };
        mpz_class y2m = mpz_class(yy) * yy * m;
        for (int t : {1, -1}) {
            if (field.half_integral()) {
                // x^2 + x*y - c*y^2 = t  =>  (2x + y)^2 = m*y^2 + 4t.
                mpz_class d = y2m + 4 * t;
                if (d < 0 || mpz_perfect_square_p(d.get_mpz_t()) == 0) continue;
                mpz_class s;
                mpz_sqrt(s.get_mpz_t(), d.get_mpz_t());
                for (const mpz_class& num : {mpz_class(-yy + s), mpz_class(-yy - s)})
                    if (num % 2 == 0) consider(num / 2);
            } else {
                // x^2 = m*y^2 + t.
                mpz_class d = y2m + t;
                if (d < 0 || mpz_perfect_square_p(d.get_mpz_t()) == 0) continue;
                mpz_class s;
                mpz_sqrt(s.get_mpz_t(), d.get_mpz_t());
                consider(s);
                consider(-s);
            }
        }
        if (!hits.empty()) {
            QuadInt best = hits.front();
            for (const QuadInt& u : hits)
                if ((best - u).sign_real() > 0) best = u;
            return best;
        }
    }
    throw std::runtime_error("fundamental_unit: search exhausted");
}

PrimeFactor split_prime(long p, const QuadField& field) {
    if (p < 2 || !is_prime(mpz_class(p)))
        throw std::invalid_argument("split_prime: p must be a rational prime");
    long chi = kronecker(static_cast<long long>(field.disc()), static_cast<long long>(p));
    if (chi == -1) return {SplitKind::inert, QuadInt(field, p, 0)};
    SplitKind kind = (chi == 0) ? SplitKind::ramified : SplitKind::split;
    long bound = 10 * static_cast<long>(std::ceil(std::sqrt(static_cast<double>(p)))) + 10;
    for (long h = 1; h <= bound; ++h) {
        for (long xx = -h; xx <= h; ++xx) {
            for (long yy = -h; yy <= h; ++yy) {
                if (std::max(std::labs(xx), std::labs(yy)) != h) continue;
                QuadInt cand(field, xx, yy);
                mpq_class n = cand.norm();
                if (n != p && n != -p) continue;
                if (cand.sign_real() <= 0) continue;
                return {kind, cand};
            }
        }
    }
    throw std::runtime_error("split_prime: generator search exhausted at height bound");
}

std::vector<QuadInt> twist_candidates(const QuadField& field, const std::vector<long>& primes) {
    std::vector<long> ps = primes;
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

    std::vector<QuadInt> gens;
    gens.push_back(fundamental_unit(field));
    for (long p : ps) {
        PrimeFactor pf = split_prime(p, field);
        gens.push_back(pf.pi);
        if (pf.kind == SplitKind::split) {
            QuadInt c = pf.pi.conjugate();
            if (c.sign_real() < 0) c = -c;
            gens.push_back(c);
        }
    }

    std::vector<QuadInt> out;
    const size_t n = gens.size();
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
        for (int sign : {1, -1}) {
            QuadInt prod = QuadInt::from_rational(field, sign);
            for (size_t i = 0; i < n; ++i)
                if (mask & (size_t{1} << i)) prod = prod * gens[i];
            bool dup = false;
            for (const QuadInt& kept : out)
                if (same_square_class(prod, kept)) {
                    dup = true;
                    break;
                }
            if (!dup) out.push_back(prod);
        }
    }
    return out;
}

bool is_square(const QuadInt& alpha) {
    if (alpha.is_zero()) throw std::invalid_argument("is_square: zero input");
    mpq_class n = alpha.norm(), rootn;
    // A square has square norm over Q.
    if (!rational_square(n, &rootn)) return false;
    mpq_class tr = alpha.trace();
    for (int sign : {1, -1}) {
        mpq_class nx = sign * rootn;          // candidate norm of the square root
        mpq_class t2 = tr + 2 * nx;           // its squared trace
        if (sgn(t2) < 0) continue;
        if (sgn(t2) == 0) {
            // Trace-zero root: a rational multiple of sqrt(m), so alpha must
            // be rational with alpha/m a rational square.
            if (sgn(alpha.y()) != 0) continue;
            if (rational_square(alpha.x() / alpha.field().m)) return true;
            continue;
        }
        mpq_class t;
        if (!rational_square(t2, &t)) continue;
        // The root x satisfies x^2 - t*x + nx = 0, hence x = (alpha + nx)/t.
        QuadInt cand = QuadInt(alpha.field(), (alpha.x() + nx) / t, alpha.y() / t);
        if (cand * cand == alpha) return true;
    }
    return false;
}

bool same_square_class(const QuadInt& a, const QuadInt& b) {
    if (a.is_zero() || b.is_zero()) return false;
    return is_square(a * b);
}

}  // namespace cmik
