#pragma once
// Imaginary quadratic orders O = Z + f*O_K identified by (fundamental
// discriminant dK, conductor f), with discriminant dK*f^2 < 0.

#include <stdexcept>

namespace cmik {

bool is_fundamental_discriminant(long d);

struct CMOrder {
    long dK = -3;  // fundamental discriminant, dK < 0
    long f = 1;    // conductor, f >= 1

    CMOrder() = default;
    CMOrder(long dK_, long f_) : dK(dK_), f(f_) {
        if (dK >= 0 || !is_fundamental_discriminant(dK))
            throw std::invalid_argument("CMOrder: dK must be a negative fundamental discriminant");
        if (f < 1) throw std::invalid_argument("CMOrder: conductor must be >= 1");
    }

    long disc() const { return dK * f * f; }

    bool operator==(const CMOrder& o) const { return dK == o.dK && f == o.f; }
    bool operator!=(const CMOrder& o) const { return !(*this == o); }
};

/* Split a negative discriminant (disc ≡ 0 or 1 mod 4) as dK * f^2.
 * Throws std::invalid_argument if disc is not a discriminant. */
CMOrder order_from_disc(long disc);

}  // namespace cmik
