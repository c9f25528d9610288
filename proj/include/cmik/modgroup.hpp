#pragma once
// Cartan orders, their normalizers, and the named subgroups occurring as
// mod-ℓ-power Galois images of CM elliptic curves, together with the
// "ℓ.ν.c-n.i.t" labeling scheme.
//
// Matrix convention: the order Z[τ] with τ² = φτ + δ acts on itself in the
// basis (1, τ); multiplication by a + bτ is the matrix
//     c_{δ,φ}(a, b) = ( a+bφ   b  )
//                     (  δb    a  )
// with determinant a² + abφ − δb² (the norm form).  The Cartan group
// C_{δ,φ}(m) consists of all c(a,b) with unit determinant; its normalizer is
// realized as N = C ∪ c₋₁·C with c₋₁ = (−1 0; φ 1), which satisfies
// c₋₁ c(a,b) c₋₁⁻¹ = c(a+φb, −b) for every modulus.  (The companion
// involution c₁ = (1 0; φ −1) conjugates C into itself only when the modulus
// divides 2φ²; for the one context with φ odd it fails beyond modulus 2, so
// c₋₁ is used as the canonical coset representative throughout.)

#include <cstdint>
#include <string>
#include <vector>

#include "cmik/cmorder.hpp"

namespace cmik {

// ---------------------------------------------------------------------------
// Matrices over Z/m
// ---------------------------------------------------------------------------

struct GL2Mod {
    uint32_t m = 0;              // modulus, 2 <= m < 2^16
    uint32_t a = 0, b = 0, c = 0, d = 0;  // row-major entries, reduced mod m

    GL2Mod() = default;
    GL2Mod(uint32_t mod, long long a_, long long b_, long long c_, long long d_);

    static GL2Mod identity(uint32_t mod);
    static GL2Mod scalar(uint32_t mod, long long s);

    long det() const;            // reduced to [0, m)
    bool det_unit() const;
    GL2Mod mul(const GL2Mod& o) const;
    GL2Mod inverse() const;      // throws std::domain_error if det not a unit
    GL2Mod reduce(uint32_t m2) const;  // m2 must divide m
    bool is_identity() const;

    // Entries packed as (a<<48)|(b<<32)|(c<<16)|d; total order on elements.
    uint64_t pack() const;
    static GL2Mod unpack(uint64_t key, uint32_t mod);

    bool operator==(const GL2Mod& o) const {
        return m == o.m && a == o.a && b == o.b && c == o.c && d == o.d;
    }
    bool operator!=(const GL2Mod& o) const { return !(*this == o); }
};

// ---------------------------------------------------------------------------
// Cartan parameters
// ---------------------------------------------------------------------------

struct CartanParams {
    CMOrder order;    // the imaginary quadratic order
    long ell = 0;     // prime
    long k = 0;       // exponent, modulus = ell^k
    long modulus = 0;
    long delta = 0;   // reduced to [0, modulus)
    long phi = 0;     // 0, or f mod modulus when disc ≡ 1 mod 4 and ell = 2
};

/* Parameters of the Cartan order at level ell^k.
 * With D = disc(order): if D ≡ 0 mod 4 or ell is odd, δ = D/4 (using the
 * inverse of 4 mod ell^k when 4 ∤ D) and φ = 0; otherwise (D ≡ 1 mod 4,
 * ell = 2) δ = ((dK − 1)/4)·f² and φ = f.
 * Throws std::invalid_argument unless ell is prime, k ≥ 1, ell^k < 2^16. */
CartanParams cartan_params(const CMOrder& order, long ell, long k);

// ---------------------------------------------------------------------------
// Subgroups as explicit element sets
// ---------------------------------------------------------------------------

struct Subgroup {
    uint32_t modulus = 0;
    std::vector<GL2Mod> generators;
    std::vector<uint64_t> elements;  // sorted packed entries, no duplicates

    size_t size() const { return elements.size(); }
    bool contains(const GL2Mod& g) const;
    bool contains_packed(uint64_t key) const;
    bool contains_subgroup(const Subgroup& h) const;     // h ⊆ *this
    bool same_elements(const Subgroup& h) const;

    // Image under reduction mod m2 (m2 | modulus); element set stays closed.
    Subgroup reduce(uint32_t m2) const;
};

/* Closure of a finite generating set under multiplication (BFS).
 * Throws std::invalid_argument on an empty set, mixed moduli, or a
 * generator whose determinant is not a unit. */
Subgroup close_generators(const std::vector<GL2Mod>& gens);

/* The Cartan group C_{δ,φ}(ell^k): all c(a,b) with unit determinant. */
Subgroup cartan_group(const CartanParams& params);

/* Its normalizer N = C ∪ c₋₁C.  |N| = 2|C| except in the single degenerate
 * case ell = 2, k = 1, φ even, where c₋₁ ≡ Id and N = C. */
Subgroup normalizer_group(const CartanParams& params);

/* Everything with unit determinant; used as the widest conjugacy ambient. */
Subgroup general_linear_group(uint32_t modulus);

// ---------------------------------------------------------------------------
// Adjoined involutions
// ---------------------------------------------------------------------------

enum class Gamma {
    none,
    c1,    // (1 0; φ −1)
    cm1,   // (−1 0; φ 1)
    cp1,   // (0 1; 1 0)
    cpm1,  // (0 −1; −1 0)
};

GL2Mod gamma_matrix(Gamma g, const CartanParams& params, uint32_t modulus);
std::string gamma_name(Gamma g);

/* Subgroups named in the classification theorems, dispatched on (order, ell):
 *
 *   order (−4,1), ell 2   "G2.1" ⟨−Id,3Id,c(1,2)⟩   "G2.2" ⟨−Id,3Id,c(2,1)⟩
 *                         "G4.1" ⟨5Id,c(1,2)⟩       "G4.2" ⟨5Id,c(−1,−2)⟩
 *                         "G4.3" ⟨−3Id,c(2,−1)⟩     "G4.4" ⟨−3Id,c(−2,1)⟩
 *                         γ ∈ {c1, cm1, cp1, cpm1}
 *   other orders, ell 2   "G2.1" ⟨5Id,c(1,1)⟩       "G2.2" ⟨5Id,c(−1,−1)⟩
 *                         "G2.3" ⟨3Id,c(1,1)⟩       "G2.4" ⟨3Id,c(−1,−1)⟩
 *                         γ ∈ {c1, cm1, cp1, cpm1}
 *   order (−3,1), ell 2   "C3"  = cubes of C         γ ∈ {cp1, cpm1}
 *   order (−3,1), ell 3   "G2.1" {c(a,b): a ≡ 1 mod 3}
 *                         "G3.1" {c(a,b): b ≡ 0 mod 3, a unit}
 *                         "G6.1" = G2.1 ∩ G3.1
 *                         "G3.2" ⟨2Id,c(1,1)⟩        "G3.3" ⟨2Id,M⟩
 *                         "G6.2" ⟨4Id,c(1,1)⟩        "G6.3" ⟨4Id,M⟩
 *                             with M = (−5/4  1/2; −3/8  −5/4)
 *                         "Z"   ⟨(−1/2  1; −3/4  −1/2)⟩
 *                         γ ∈ {c1, cm1}
 *   order (−3,1), ell>3   "C3"  = cubes of C
 *                         "G3.1" {M ∈ C: eigenvalue ratio a cube}  (split C)
 *                         γ ∈ {c1, cm1}
 *   other odd ell | disc  "G2.1" {c(a,b): a a square unit}
 *                         γ ∈ {c1, cm1}
 *
 * "C" and "N" are accepted for every context.  γ = none returns the bare
 * subgroup; otherwise the closure of the subgroup together with γ.
 * Throws std::invalid_argument for an unknown identifier in the context or a
 * γ outside the allowed set. */
Subgroup named_subgroup(const std::string& name, const CartanParams& params,
                        uint32_t modulus, Gamma adjoin = Gamma::none);

// ---------------------------------------------------------------------------
// Indexes, levels, labels
// ---------------------------------------------------------------------------

/* |G| / |H| after verifying H ⊆ G and equal moduli; throws otherwise. */
long subgroup_index(const Subgroup& h, const Subgroup& g);

/* Smallest ell-power n ≤ modulus such that H is the full preimage of its
 * reduction mod n inside `ambient` (equivalently: H contains every ambient
 * element ≡ Id mod n).  Returns the modulus n, not the exponent. */
long preimage_level(const Subgroup& h, const Subgroup& ambient, long ell);

struct CMLabel {
    long ell = 0;
    long nu = 0;
    std::string sqclass;   // "s", "ns" (odd ell) / "s","ns3","ns5","ns7" (2)
    long level = 1;
    long index = 1;
    long tiebreak = 1;
    bool calibrated = true;  // false when the tiebreak digit has no pinned row
    std::string str() const;  // "ell.nu.c-n.i.t"
    bool operator==(const CMLabel& o) const;
};

/* Label of a subgroup of the normalizer for (order, ell).  ν = v_ell(disc),
 * c = square class of disc/ell^ν.  The (n, i, t) digits come from a pinned
 * catalog of the subgroups occurring in the classification; a subgroup
 * outside the catalog falls back to its preimage level, exact index, t = 1,
 * and calibrated = false.  Throws std::invalid_argument when H is not
 * contained in the normalizer at H's modulus. */
CMLabel cm_label(const Subgroup& h, const CMOrder& order, long ell);

/* The level digit n of cm_label; catalog-pinned when recognized, otherwise
 * the preimage level inside the normalizer of (order, ell). */
long level_of_definition(const Subgroup& h, const CMOrder& order, long ell);

/* True iff some element of `ambient` conjugates h1 onto h2.  Distinct orders
 * return false immediately; equal element sets return true. */
bool conjugate_equal(const Subgroup& h1, const Subgroup& h2,
                     const Subgroup& ambient);

/* Modulus at which every subgroup in the classification is determined:
 * 32 for ell = 2, 27 for ell = 3, ell itself for ell > 3. */
long working_modulus(long ell);

// ---------------------------------------------------------------------------
// The pinned catalog (consumed by the classifier)
// ---------------------------------------------------------------------------

struct CatalogEntry {
    std::string name;        // display name, e.g. "<G4.1, c'_-1>" or "N"
    std::string base;        // named_subgroup identifier ("N" for the full group)
    Gamma gamma = Gamma::none;
    long level = 1;
    long index = 1;
    long tiebreak = 1;
    bool calibrated = true;  // tiebreak digit pinned to a printed table row
    bool degenerate = false; // closure collapses to the full normalizer;
                             // counted as a formal possibility, never matched
    Subgroup group;          // at working_modulus(ell)
};

/* Every subgroup the classification allows for (order, ell), with its pinned
 * label digits, at the working modulus.  Entry 0 is always the full
 * normalizer with digits 1.1.1.  Results are cached per (order, ell). */
const std::vector<CatalogEntry>& label_catalog(const CMOrder& order, long ell);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/* {"modulus": m, "generators": [[a,b,c,d], ...]} */
std::string subgroup_to_json(const Subgroup& g);
Subgroup subgroup_from_json(const std::string& text);

}  // namespace cmik
