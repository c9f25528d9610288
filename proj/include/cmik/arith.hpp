#pragma once
// Exact elementary number theory over GMP integers: factorization,
// k-th-power-free decomposition, Kronecker symbols, 2-adic square classes,
// and small modular utilities shared by the rest of the library.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace cmik {

/* A signed integer split as sign * prod p_i^{e_i} with p_1 < p_2 < ... */
struct Factorization {
    int sign = 1;  // +1 or -1; factorize(0) is rejected, so never 0
    std::vector<std::pair<mpz_class, unsigned>> factors;

    mpz_class value() const;
    bool has_factor(const mpz_class& p) const;
    unsigned exponent_of(const mpz_class& p) const;
};

/* Factor n (trial division through 1e6, then Brent rho with strong
 * pseudoprime certification).  Throws std::domain_error on n = 0. */
Factorization factorize(const mpz_class& n);
Factorization factorize(long long n);

/* Write n = core * cofactor^k with core k-th-power-free and the sign kept on
 * core.  k must be one of 2, 3, 4, 6. */
std::pair<mpz_class, mpz_class> powerfree_part(const mpz_class& n, unsigned k);

/* Kronecker symbol (a|n), defined for all integers including n <= 0. */
int kronecker(const mpz_class& a, const mpz_class& n);
int kronecker(long long a, long long n);

/* Square class of an odd integer in the 2-adic units modulo squares, named by
 * the coset representative mod 8: "s" (1), "ns3" (3), "ns5" (5), "ns7" (7).
 * Throws std::domain_error for even input. */
std::string square_class_2adic(const mpz_class& u);

/* v_p(n) together with n / p^v.  Throws std::domain_error on n = 0. */
std::pair<unsigned, mpz_class> valuation(const mpz_class& n, const mpz_class& p);

bool is_prime(const mpz_class& n);

/* Multiplicative order of a modulo m (gcd(a, m) must be 1). */
unsigned long ord_mod(const mpz_class& a, const mpz_class& m);

/* uint64 modular helpers (128-bit intermediate products). */
std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m);
std::uint64_t powmod_u64(std::uint64_t a, std::uint64_t e, std::uint64_t m);
std::uint64_t invmod_u64(std::uint64_t a, std::uint64_t m);  // throws if not invertible

}  // namespace cmik
