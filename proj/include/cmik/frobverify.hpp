#pragma once

// Empirical verification of candidate mod-ell^n Galois images by Frobenius
// sampling: point counting over prime fields, consistency and discrimination
// of candidate subgroups against observed (trace, det) classes, and the
// isogeny-character eigenvalue computation that separates candidate pairs
// sharing identical class data.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cmik/ecmodel.hpp"
#include "cmik/modgroup.hpp"

namespace cmik {

// One sampled prime: the Frobenius trace a_p and the reduction of
// (trace, p) mod ell^n.  |trace| <= 2 sqrt(p) (Hasse) and det_mod = p mod
// ell^n hold by construction.
struct FrobSample {
    long p = 0;
    long trace = 0;
    long tr_mod = 0;
    long det_mod = 0;
};

// A sampling run at fixed prime power ell^n.
struct FrobData {
    long ell = 0;
    long n = 1;
    long modulus = 0;  // ell^n
    std::vector<FrobSample> samples;
};

// a_p = p + 1 - #E(F_p) at a good prime p >= 5.  Counting is by character
// sum for p <= 10^4 and baby-step giant-step above.  For models over a real
// quadratic field, a split or ramified p reduces at the place given by the
// smaller root of the field polynomial mod p; an inert p is counted over the
// norm form (residue field F_{p^2}), returning p^2 + 1 - #E(F_{p^2}).
// Throws std::invalid_argument for p < 5 or composite p, std::domain_error
// at primes of bad reduction (p divides the discriminant numerator or a
// coefficient denominator).
long trace_of_frobenius(const CurveModel& curve, long p);

// Traces at every place of residue field F_p above p: two entries when p
// splits in the base field (ordered by root), one when p is ramified or the
// model is over Q, none when p is inert.  Same error conditions as above.
std::vector<long> frobenius_traces(const CurveModel& curve, long p);

// Samples (trace, det) mod ell^n over good primes 5 <= p <= prime_budget,
// p != ell.  For quadratic-field models only split and ramified primes are
// sampled (one sample per place).  Throws std::invalid_argument for
// prime_budget < 100 and std::runtime_error when fewer than 30 usable primes
// are found.
FrobData sample_frobenius_data(const CurveModel& curve, long ell, long n, long prime_budget);

// CSV dump: header "p,a_p,tr_mod,det_mod" followed by one row per sample.
std::string frob_samples_csv(const FrobData& data);

// Outcome of testing sampled data against one candidate subgroup.
struct ConsistencyVerdict {
    bool consistent = true;
    long witness_prime = 0;   // first prime whose class no candidate element realizes
    double coverage = 0.0;    // fraction of heavy candidate classes observed
    long heavy_classes = 0;   // candidate (trace, det) classes of mass >= 5%
    long observed_heavy = 0;
    long sample_count = 0;
    bool supported = false;   // full heavy coverage with >= 300 samples
    bool flagged = false;     // empty data
};

// Tests every sampled (trace, det) class for realizability in the candidate
// and reports coverage of the candidate's heavy classes.  The candidate must
// share the data's modulus.
ConsistencyVerdict consistency_check(const FrobData& data, const Subgroup& candidate);

// Discrimination across a candidate list: verdicts are parallel to the
// input; survivors are the indices left consistent; ambiguous_pairs lists
// surviving pairs whose (trace, det) class distributions are identical, so
// no amount of class data can separate them.  Throws std::runtime_error when
// every candidate is eliminated.
struct DiscriminationReport {
    std::vector<ConsistencyVerdict> verdicts;
    std::vector<std::size_t> survivors;
    std::vector<std::pair<std::size_t, std::size_t>> ambiguous_pairs;
};

DiscriminationReport discriminate(const FrobData& data, const std::vector<Subgroup>& candidates);

// Monic kernel polynomial (ascending coefficients in the base field, degree
// (ell-1)/2) of the distinguished rational ell-isogeny of a CM model with
// odd ell dividing delta_K f^2.  Reconstructed from the Frobenius-stable
// line of the reduced curve at several primes and verified against the
// division polynomial; when several rational kernels exist (the j = 0 family
// at ell = 3) the one with the smallest kernel x-coordinate is used.  Throws
// std::invalid_argument on unsupported (curve, ell) and std::runtime_error
// ("kernel polynomial fails to factor as expected") when no rational kernel
// emerges.
std::vector<Coords> isogeny_kernel_polynomial(const CurveModel& curve, long ell);

// Eigenvalue of Frobenius on the rational ell-isogeny kernel at one prime.
struct IsogenyCharSample {
    long p = 0;
    long lambda = 0;  // in [1, ell-1]
};

// For each usable prime in `primes` (good reduction, p >= 5, p != ell, and
// residue field F_p for quadratic-field models), reduces the kernel
// polynomial mod p, picks a kernel point over a small extension, and reads
// off Frob(P) = lambda P.  Unusable primes are skipped silently.
std::vector<IsogenyCharSample> isogeny_character_values(const CurveModel& curve, long ell,
                                                        const std::vector<long>& primes);

}  // namespace cmik
