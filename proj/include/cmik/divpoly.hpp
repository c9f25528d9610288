#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cmik/ecmodel.hpp"

namespace cmik {

// Dense univariate polynomial with exact rational coefficients.  The
// coefficient vector is stored lowest degree first and is kept free of
// trailing zeros, so the zero polynomial is the empty vector and the leading
// coefficient of a nonzero polynomial is always nonzero.
class RatPoly {
  public:
    RatPoly() = default;
    explicit RatPoly(std::vector<mpq_class> coeffs);
    // Convenience for literal tables written highest degree first.
    static RatPoly from_descending(const std::vector<mpz_class>& coeffs);

    long degree() const { return static_cast<long>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }
    mpq_class coeff(long i) const;
    const std::vector<mpq_class>& coeffs() const { return coeffs_; }
    mpq_class leading() const;

    bool operator==(const RatPoly& o) const { return coeffs_ == o.coeffs_; }
    bool operator!=(const RatPoly& o) const { return !(*this == o); }
    RatPoly operator+(const RatPoly& o) const;
    RatPoly operator-(const RatPoly& o) const;
    RatPoly operator*(const RatPoly& o) const;
    RatPoly scaled(const mpq_class& c) const;

    // Euclidean division; the remainder degree is below the divisor degree.
    // Throws std::domain_error when dividing by the zero polynomial.
    std::pair<RatPoly, RatPoly> divmod(const RatPoly& divisor) const;
    // Division that must leave no remainder; throws std::domain_error if the
    // remainder is nonzero.
    RatPoly exact_quotient(const RatPoly& divisor) const;

    mpq_class eval(const mpq_class& x) const;
    RatPoly derivative() const;
    std::string str(const std::string& var = "x") const;

  private:
    void trim();
    std::vector<mpq_class> coeffs_;
};

// The x-part P_N of the division polynomial psi_N of y^2 = x^3 + Ax + B,
// under the convention psi_N = P_N(x) for odd N and psi_N = P_N(x) * y for
// even N (so P_2 = 2 and the printed quotients psi_4 / (2 psi_2) = P_4 / 4
// and psi_8 / (2 psi_4) = P_8 / (2 P_4) are polynomials in x alone).
// Degrees: (N^2 - 1) / 2 for odd N and (N^2 - 4) / 2 for even N.
//
// The curve must be defined over Q, already in short form (a1 = a2 = a3 = 0)
// and nonsingular; N must lie in 2..9.  Violations raise std::invalid_argument
// (std::domain_error for a singular curve).
RatPoly division_polynomial(const CurveModel& curve, long N);

// Same computation directly from short-form coefficients.
RatPoly division_polynomial_ab(const mpq_class& A, const mpq_class& B, long N);

// One entry of the stated-factorization verification report.
struct IdentityCheck {
    std::string identity_id;
    bool pass = false;
    std::string details;
};

// Checks the fixed catalog of division-polynomial identities for the three
// reference curves y^2 = x^3 - 4320x + 96768, y^2 = x^3 - 11x + 14, and the
// family y^2 = x^3 + 16d: 2-division splittings over Q(sqrt 2), the quoted
// quotient factorizations of psi_4 / (2 psi_2), psi_8 / (2 psi_4) and
// psi_9 / (3 psi_3), and irreducibility certificates for the field-defining
// polynomials.  Every check is exact except the root-subset integrality
// scans, whose precision and acceptance threshold are fixed constants
// reported in the entry details.
std::vector<IdentityCheck> verify_stated_factorizations();

// Serializes a report as a JSON array of {identity_id, status, details},
// with status "pass" or "fail".
std::string identity_report_json(const std::vector<IdentityCheck>& report);

// Proven lower bound on the degree [Q(E[N]) : Q] of the N-division field of
// a nonsingular curve over Q, for N in {2, 3, 4, 8, 9}.
//
// N = 2 is exact: the degree of the splitting field of the 2-division cubic,
// read off from its rational roots and discriminant.
//
// For the other N, good primes p < prime_budget are sampled.  For each, the
// smallest k is found such that #E(F_{p^k}) is divisible by N^2 and p^k - 1
// is divisible by N - both necessary for full N-torsion over F_{p^k}, so k
// is a lower bound for the order of the Frobenius at p acting on E[N].  The
// returned bound is the lcm of these k.  Throws std::runtime_error when no
// good prime lies below the budget.
long torsion_degree_bounds(const CurveModel& curve, long N, long prime_budget);

}  // namespace cmik
