#pragma once

// Exact arithmetic in real quadratic fields Q(sqrt(m)) of class number 1.
//
// The ring of integers is Z[a] where a = (1+sqrt(m))/2 when m = 1 mod 4 and
// a = sqrt(m) otherwise.  Elements are stored as rational coordinate pairs
// (x, y) meaning x + y*a, so the same type covers both the ring and the
// field.  All predicates (signs, squareness, unit tests) are decided exactly
// over the rationals; floating point is only used for display.

#include <gmpxx.h>

#include <string>
#include <vector>

namespace cmik {

struct QuadField {
    long m = 5;  // square-free, > 1

    explicit QuadField(long m);

    // True when m = 1 mod 4, i.e. the ring generator is (1+sqrt(m))/2.
    bool half_integral() const { return m % 4 == 1; }
    long disc() const { return half_integral() ? m : 4 * m; }
    // Minimal polynomial of the ring generator: "x^2-x-c" with c = (m-1)/4
    // in the half-integral case, "x^2-m" otherwise.
    std::string minpoly() const;
    // Real value of the generator under the embedding sending sqrt(m) to the
    // positive root.  Display/diagnostic use only.
    double root() const;

    bool operator==(const QuadField& o) const { return m == o.m; }
    bool operator!=(const QuadField& o) const { return m != o.m; }
};

class QuadInt {
  public:
    QuadInt(QuadField field, mpq_class x, mpq_class y);
    QuadInt(QuadField field, long x, long y);
    static QuadInt from_rational(QuadField field, mpq_class v);

    const QuadField& field() const { return field_; }
    const mpq_class& x() const { return x_; }
    const mpq_class& y() const { return y_; }

    QuadInt operator+(const QuadInt& o) const;
    QuadInt operator-(const QuadInt& o) const;
    QuadInt operator*(const QuadInt& o) const;
    QuadInt operator/(const QuadInt& o) const;  // exact; throws on zero divisor
    QuadInt operator-() const;

    // Galois conjugate: a -> 1-a (half-integral) or a -> -a.
    QuadInt conjugate() const;
    QuadInt inverse() const;  // throws on zero

    mpq_class norm() const;   // product with the conjugate
    mpq_class trace() const;  // sum with the conjugate
    bool is_zero() const;
    bool is_integral() const;  // both coordinates are rational integers
    bool is_unit() const;      // integral with norm of absolute value 1

    // Exact sign (-1, 0, +1) under the positive embedding.
    int sign_real() const;
    // Floating approximation under the positive embedding.
    double approx() const;

    // Text form "x+y*a", e.g. "21-7*a", "a", "1/2+3/2*a".
    std::string str() const;

    bool operator==(const QuadInt& o) const;
    bool operator!=(const QuadInt& o) const { return !(*this == o); }

  private:
    QuadField field_;
    mpq_class x_, y_;
};

// Smallest unit greater than 1 under the positive embedding; generates the
// unit group modulo sign.  Found by exact search over the second coordinate.
QuadInt fundamental_unit(const QuadField& field);

enum class SplitKind { split, inert, ramified };

// One prime ideal above a rational prime p, described by a generator.  For
// inert p the generator is p itself; otherwise it is an integral element of
// norm +-p, normalized to the smallest coordinate height with positive
// embedding (ties broken lexicographically on the coordinates).
struct PrimeFactor {
    SplitKind kind;
    QuadInt pi;
};

// Splitting data for p. Throws std::invalid_argument if p is not prime and
// std::runtime_error if the bounded generator search is exhausted (the
// class-number-1 fields in scope always admit small generators).
PrimeFactor split_prime(long p, const QuadField& field);

// The candidate set {+-u^k0 * prod pi_i^k_i : k_j in {0,1}} where u is the
// fundamental unit and pi_i runs over one generator per prime ideal above
// each listed rational prime (both conjugates when the prime splits),
// deduplicated up to multiplication by squares.
std::vector<QuadInt> twist_candidates(const QuadField& field, const std::vector<long>& primes);

// Exact test for x^2 = alpha having a solution in the field.
// Throws std::invalid_argument on alpha = 0.
bool is_square(const QuadInt& alpha);

// True when a/b is a nonzero square, i.e. a and b generate the same class
// modulo squares.
bool same_square_class(const QuadInt& a, const QuadInt& b);

}  // namespace cmik
