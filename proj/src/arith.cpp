#include "cmik/arith.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace cmik {

mpz_class Factorization::value() const {
    mpz_class v = sign;
    for (const auto& [p, e] : factors) {
        mpz_class pe;
        mpz_pow_ui(pe.get_mpz_t(), p.get_mpz_t(), e);
        v *= pe;
    }
    return v;
}

bool Factorization::has_factor(const mpz_class& p) const {
    return exponent_of(p) != 0;
}

unsigned Factorization::exponent_of(const mpz_class& p) const {
    for (const auto& [q, e] : factors)
        if (q == p) return e;
    return 0;
}

namespace {

constexpr unsigned long kTrialBound = 1000000;

const std::vector<unsigned long>& small_primes() {
    static std::vector<unsigned long> primes = [] {
        std::vector<bool> comp(kTrialBound + 1, false);
        std::vector<unsigned long> out;
        for (unsigned long i = 2; i <= kTrialBound; ++i) {
            if (comp[i]) continue;
            out.push_back(i);
            for (unsigned long j = i * i; j <= kTrialBound; j += i) comp[j] = true;
        }
        return out;
    }();
    return primes;
}

bool probab_prime(const mpz_class& n) {
    return mpz_probab_prime_p(n.get_mpz_t(), 32) != 0;
}

/* Brent-cycle Pollard rho; returns a nontrivial factor of composite odd n. */
mpz_class rho_factor(const mpz_class& n) {
    gmp_randclass rng(gmp_randinit_default);
    rng.seed(0x5eedul);
    while (true) {
        mpz_class y = rng.get_z_range(n - 3) + 2;
        mpz_class c = rng.get_z_range(n - 1) + 1;
        mpz_class x = y, ys = y, q = 1, g = 1;
        const unsigned long m = 128;
        unsigned long r = 1;
        while (g == 1) {
            x = y;
            for (unsigned long i = 0; i < r; ++i) y = (y * y + c) % n;
            for (unsigned long k = 0; k < r && g == 1; k += m) {
                ys = y;
                for (unsigned long i = 0; i < std::min(m, r - k); ++i) {
                    y = (y * y + c) % n;
                    q = q * abs(x - y) % n;
                }
                g = gcd(q, n);
            }
            r <<= 1;
        }
        if (g == n) {
            g = 1;
            while (g == 1) {
                ys = (ys * ys + c) % n;
                g = gcd(abs(x - ys), n);
            }
        }
        if (g != n) return g;
    }
}

void factor_into(mpz_class n, std::map<mpz_class, unsigned>& out) {
    if (n == 1) return;
    if (probab_prime(n)) {
        ++out[n];
        return;
    }
    mpz_class d = rho_factor(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

}  // namespace

Factorization factorize(const mpz_class& n) {
    if (n == 0) throw std::domain_error("factorize: 0 has no factorization");
    Factorization f;
    f.sign = (n < 0) ? -1 : 1;
    mpz_class m = abs(n);
    std::map<mpz_class, unsigned> acc;
    for (unsigned long p : small_primes()) {
        if (mpz_class(p) * p > m) break;
        while (mpz_divisible_ui_p(m.get_mpz_t(), p)) {
            mpz_divexact_ui(m.get_mpz_t(), m.get_mpz_t(), p);
            ++acc[mpz_class(p)];
        }
    }
    factor_into(m, acc);
    f.factors.assign(acc.begin(), acc.end());
    return f;
}

Factorization factorize(long long n) { return factorize(mpz_class(static_cast<long>(n))); }

std::pair<mpz_class, mpz_class> powerfree_part(const mpz_class& n, unsigned k) {
    if (k != 2 && k != 3 && k != 4 && k != 6)
        throw std::invalid_argument("powerfree_part: k must be 2, 3, 4 or 6");
    Factorization f = factorize(n);  // throws on n = 0
    mpz_class core = f.sign, cof = 1;
    for (const auto& [p, e] : f.factors) {
        mpz_class pe;
        mpz_pow_ui(pe.get_mpz_t(), p.get_mpz_t(), e % k);
        core *= pe;
        mpz_pow_ui(pe.get_mpz_t(), p.get_mpz_t(), e / k);
        cof *= pe;
    }
    return {core, cof};
}

int kronecker(const mpz_class& a, const mpz_class& n) {
    return mpz_kronecker(a.get_mpz_t(), n.get_mpz_t());
}

int kronecker(long long a, long long n) {
    return kronecker(mpz_class(static_cast<long>(a)), mpz_class(static_cast<long>(n)));
}

std::string square_class_2adic(const mpz_class& u) {
    if (mpz_even_p(u.get_mpz_t()))
        throw std::domain_error("square_class_2adic: argument must be odd");
    unsigned long r = mpz_class(((u % 8) + 8) % 8).get_ui();
    switch (r) {
        case 1: return "s";
        case 3: return "ns3";
        case 5: return "ns5";
        default: return "ns7";
    }
}

std::pair<unsigned, mpz_class> valuation(const mpz_class& n, const mpz_class& p) {
    if (n == 0) throw std::domain_error("valuation: v_p(0) is infinite");
    if (p < 2) throw std::invalid_argument("valuation: p must be >= 2");
    unsigned v = 0;
    mpz_class m = n;
    while (mpz_divisible_p(m.get_mpz_t(), p.get_mpz_t())) {
        m /= p;
        ++v;
    }
    return {v, m};
}

bool is_prime(const mpz_class& n) { return n > 1 && probab_prime(n); }

unsigned long ord_mod(const mpz_class& a, const mpz_class& m) {
    if (m < 2) throw std::invalid_argument("ord_mod: modulus must be >= 2");
    mpz_class r = ((a % m) + m) % m;
    if (gcd(r, m) != 1) throw std::domain_error("ord_mod: argument not a unit");
    mpz_class x = r;
    unsigned long k = 1;
    while (x != 1) {
        x = x * r % m;
        ++k;
    }
    return k;
}

std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod_u64(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod_u64(r, a, m);
        a = mulmod_u64(a, a, m);
        e >>= 1;
    }
    return r;
}

std::uint64_t invmod_u64(std::uint64_t a, std::uint64_t m) {
    std::int64_t t = 0, nt = 1;
    std::uint64_t r = m, nr = a % m;
    while (nr != 0) {
        std::uint64_t q = r / nr;
        std::int64_t tmp = t - static_cast<std::int64_t>(q) * nt;
        t = nt;
        nt = tmp;
        std::uint64_t rtmp = r - q * nr;
        r = nr;
        nr = rtmp;
    }
    if (r != 1) throw std::domain_error("invmod_u64: argument not invertible");
    return t < 0 ? static_cast<std::uint64_t>(t + static_cast<std::int64_t>(m)) : static_cast<std::uint64_t>(t);
}

}  // namespace cmik
