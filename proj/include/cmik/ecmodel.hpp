#pragma once

// Weierstrass curve models: the built-in registry of CM curves over Q and
// real quadratic fields, exact j-invariants, quadratic twists, canonical
// twist-parameter extraction, and class polynomials of imaginary quadratic
// discriminants.

#include <gmpxx.h>

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmik/cmorder.hpp"
#include "cmik/quadfield.hpp"

namespace cmik {

// Element coordinates (x, y) meaning x + y*a in the model's base field;
// y = 0 for models over Q.
using Coords = std::pair<mpq_class, mpq_class>;

struct CurveModel {
    std::optional<QuadField> base;  // nullopt: defined over Q
    std::array<Coords, 5> a{};      // a1, a2, a3, a4, a6
    long delta_K = 0;               // CM identity of the registry row (0 = user model)
    long conductor_f = 0;
    long conductor_norm = 0;        // norm of the conductor ideal; 0 when not recorded
    std::string source_id;          // catalog provenance string; empty for user input

    bool over_Q() const { return !base.has_value(); }
    bool is_registry() const { return delta_K != 0; }
    CMOrder order() const;  // throws std::logic_error when not a registry model
};

// The built-in table: one minimal model per CM order of class number 1 or 2,
// 42 rows, ordered by (delta_K, f).
const std::vector<CurveModel>& registry_models();
const CurveModel& registry_lookup(const CMOrder& order);

// Exact j-invariant as coordinates in the base field (y = 0 over Q).
// Throws std::invalid_argument on singular models.
Coords j_invariant(const CurveModel& m);
Coords model_discriminant(const CurveModel& m);

// Coefficients with the field generator replaced by its Galois conjugate.
// Throws std::invalid_argument for models over Q.
CurveModel conjugate_model(const CurveModel& m);

// Isomorphic short model y^2 = x^3 + Ax + B.
CurveModel short_form(const CurveModel& m);

// Quadratic twist by alpha (coordinates in the base field; the second
// coordinate must vanish for models over Q).  Applied to the short form:
// A -> alpha^2 A, B -> alpha^3 B.  Throws on alpha = 0.
CurveModel quadratic_twist(const CurveModel& m, const Coords& alpha);

// Canonical twist data for a model over Q whose j invariant matches one of
// the class-number-1 registry rows.
//   family "j1728": y^2 = x^3 + dx, d fourth-power-free;
//          tags -8,-4,-2,-1,1,2,4,8, t^2, -t^2, 2t^2, -2t^2, generic.
//   family "j0":    y^2 = x^3 + 16d with 16d sixth-power-free;
//          tags 1,-3,9,-27,81,-243, t^2, -3t^2, t^3, 3t^3, 9t^3, generic.
//   family "disc8"/"disc16": square-free d in y^2 = x^3 - 4320d^2 x + 96768d^3
//          resp. y^2 = x^3 - 11d^2 x + 14d^3; tags -2,-1,1,2, generic.
//   family "generic": square-free twist parameter relative to the matching
//          registry model; tag is its decimal value.
struct TwistClass {
    std::string family;
    std::string tag;
    mpq_class parameter;
};

TwistClass normalize_twist_parameter(const CurveModel& m);

// Monic integer polynomial whose roots are the j-invariants with CM by the
// order of the given discriminant, computed from the reduced quadratic forms
// at high floating precision and snapped to integers.  max_residual is the
// worst distance of any coefficient from an integer before snapping; a
// residual above 1e-10 throws std::runtime_error rather than rounding.
struct HilbertPoly {
    std::vector<mpz_class> coeffs;  // ascending degree, monic
    double max_residual = 0.0;
};

HilbertPoly hilbert_class_polynomial(long disc);

// Versioned JSON export of the registry ("models.json") and its loader.
std::string registry_to_json();
std::vector<CurveModel> registry_from_json(const std::string& text);

}  // namespace cmik
