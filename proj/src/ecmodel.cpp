#include "cmik/ecmodel.hpp"

#include <json.hpp>

#include <stdexcept>
#include <utility>

#include "cmik/arith.hpp"

namespace cmik {

namespace {

// One registry row: field modulus m (0 = rational), coordinate pairs for
// a1, a2, a3, a4, a6 (value x + y*a), provenance string, conductor norm
// (0 = not recorded).
struct RawRow {
    long dK;
    long f;
    long m;
    long long c[10];  // a1x, a1y, a2x, a2y, a3x, a3y, a4x, a4y, a6x, a6y
    const char* ref;
    long long cond_norm;
};

const RawRow kRows[] = {
    {-3, 1, 0, {0, 0, 0, 0, 0, 0, 0, 0, 16, 0}, "27.a4", 27},
    {-3, 2, 0, {0, 0, 0, 0, 0, 0, -15, 0, 22, 0}, "36.a2", 36},
    {-3, 3, 0, {0, 0, 0, 0, 0, 0, -480, 0, 4048, 0}, "27.a2", 27},
    {-3, 4, 3, {1, 1, -1, -1, 1, 1, -13, 4, -21, 11}, "2.2.12.1-16.1-a3", 16},
    {-3, 5, 5, {0, 0, 0, 0, 1, 0, -48, 6, -76, 109}, "2.2.5.1-2025.1-c1", 2025},
    {-3, 7, 21, {0, 0, -1, -1, 1, 0, -11618, 4131, -618025, 221331}, "2.2.21.1-49.1-a1", 49},
    {-4, 1, 0, {0, 0, 0, 0, 0, 0, 1, 0, 0, 0}, "64.a4", 64},
    {-4, 2, 0, {0, 0, 0, 0, 0, 0, -11, 0, 14, 0}, "32.a2", 32},
    {-4, 3, 3, {1, 1, -1, 1, 0, 1, -45, 25, -127, 72}, "2.2.12.1-9.1-a1", 9},
    {-4, 4, 2, {0, 1, 1, 0, 0, 0, -22, 15, -69, 46}, "2.2.8.1-32.1-a1", 32},
    {-4, 5, 5, {0, 0, 0, 0, 0, 0, -556, 117, -3640, 3920}, "", 0},
    {-7, 1, 0, {0, 0, 0, 0, 0, 0, -1715, 0, 33614, 0}, "49.a2", 49},
    {-7, 2, 0, {0, 0, 0, 0, 0, 0, -29155, 0, 1915998, 0}, "49.a1", 49},
    {-7, 4, 7, {1, 0, -1, 0, 1, 0, -715, -270, 8527, 3223}, "2.2.28.1-1.1-a3", 1},
    {-8, 1, 0, {0, 0, 0, 0, 0, 0, -4320, 0, 96768, 0}, "256.a2", 256},
    {-8, 2, 2, {0, 1, -1, -1, 0, 0, 2, 2, -5, -3}, "2.2.8.1-64.1-a1", 64},
    {-8, 3, 6, {0, 1, 1, 1, 1, 1, -161, 67, -1122, 458}, "2.2.24.1-1.1-a3", 1},
    {-11, 1, 0, {0, 0, 0, 0, 0, 0, -9504, 0, 365904, 0}, "121.b2", 121},
    {-11, 3, 33, {0, 0, 0, -1, 1, 0, -1030, -435, -18717, -7890}, "2.2.33.1-1.1-a1", 1},
    {-15, 1, 5, {1, 0, -1, 0, 0, 1, 0, -2, 0, 1}, "2.2.5.1-81.1-a1", 81},
    {-15, 2, 5, {0, 1, -1, -1, 1, 1, -14, -13, -6, -20}, "2.2.5.1-81.1-a5", 81},
    {-19, 1, 0, {0, 0, 0, 0, 0, 0, -608, 0, 5776, 0}, "361.a2", 361},
    {-20, 1, 5, {0, 0, 0, -1, 0, 0, -9, -1, -15, -6}, "2.2.5.1-4096.1-k1", 4096},
    {-24, 1, 2, {0, 1, 1, 0, 1, 0, -3, 1, 1, -1}, "2.2.8.1-81.1-b1", 81},
    {-35, 1, 5, {0, 0, -1, 0, 1, 0, 19, -14, -36, 21}, "2.2.5.1-2401.1-b1", 2401},
    {-40, 1, 5, {0, 0, 0, 0, 0, 0, -28, 6, -56, 16}, "", 4096},
    {-43, 1, 0, {0, 0, 0, 0, 0, 0, -13760, 0, 621264, 0}, "1849.b2", 1849},
    {-51, 1, 17, {0, 0, 0, 0, 1, 0, -12, -6, 19, 14}, "2.2.17.1-81.1-b1", 81},
    {-52, 1, 13, {0, 0, 0, 0, 0, 0, -35, 10, -76, 40}, "", 0},
    {-67, 1, 0, {0, 0, 0, 0, 0, 0, -117920, 0, 15585808, 0}, "4489.b2", 4489},
    {-88, 1, 2, {0, 1, 1, 0, 1, 0, -453, -193, 4008, 2233}, "", 0},
    {-91, 1, 13, {0, 0, 0, 0, 1, 0, -182, 84, -1213, 539}, "", 0},
    {-115, 1, 5, {0, 0, 0, 0, 1, 0, -368, 46, -6216, 2645}, "", 0},
    {-123, 1, 41, {0, 0, 0, 0, 1, 0, -210, -60, 1384, 560}, "2.2.41.1-81.1-c1", 81},
    {-148, 1, 37, {0, 0, 0, 0, 0, 0, -1615, 290, -23268, 8120}, "", 0},
    {-163, 1, 0, {0, 0, 0, 0, 0, 0, -34790720, 0, 78984748304, 0}, "26569.a2", 26569},
    {-187, 1, 17, {0, 0, 0, 0, 1, 0, -3520, 1430, 104090, -40898}, "", 0},
    {-232, 1, 29, {0, 0, 0, 0, 0, 0, -36310, 7280, -2492952, 960960}, "", 0},
    {-235, 1, 5, {0, 0, 0, 0, 1, 0, -17578, 4136, -962572, 324723}, "", 0},
    {-267, 1, 89, {0, 0, 0, 0, 1, 0, -8580, -1590, 359875, 92750}, "2.2.89.1-81.1-a1", 81},
    {-403, 1, 13, {0, 0, 0, 0, 1, 0, -427490, 186930, -135261471, 58571989}, "", 0},
    {-427, 1, 61, {0, 0, 0, 0, 1, 0, -137060, 30030, -25355528, 5787145}, "", 0},
};

CurveModel build_row(const RawRow& r) {
    CurveModel m;
    if (r.m != 0) m.base = QuadField(r.m);
    for (int i = 0; i < 5; ++i)
        m.a[i] = {mpq_class(static_cast<long>(r.c[2 * i])),
                  mpq_class(static_cast<long>(r.c[2 * i + 1]))};
    m.delta_K = r.dK;
    m.conductor_f = r.f;
    m.conductor_norm = static_cast<long>(r.cond_norm);
    m.source_id = r.ref;
    return m;
}

// All model arithmetic runs over QuadInt; rational models use a placeholder
// field with the second coordinate pinned to zero, which every ring operation
// preserves exactly.
QuadField work_field(const CurveModel& m) { return m.base ? *m.base : QuadField(5); }

QuadInt lift(const QuadField& F, const Coords& c) { return QuadInt(F, c.first, c.second); }

Coords drop(const QuadInt& v) { return {v.x(), v.y()}; }

struct ShortInvariants {
    QuadInt c4, c6, disc;
};

ShortInvariants invariants(const CurveModel& m) {
    QuadField F = work_field(m);
    auto k = [&F](long n) { return QuadInt(F, n, 0); };
    QuadInt a1 = lift(F, m.a[0]), a2 = lift(F, m.a[1]), a3 = lift(F, m.a[2]),
            a4 = lift(F, m.a[3]), a6 = lift(F, m.a[4]);
    QuadInt b2 = a1 * a1 + k(4) * a2;
    QuadInt b4 = k(2) * a4 + a1 * a3;
    QuadInt b6 = a3 * a3 + k(4) * a6;
    QuadInt b8 = a1 * a1 * a6 + k(4) * a2 * a6 - a1 * a3 * a4 + a2 * (a3 * a3) - a4 * a4;
    QuadInt c4 = b2 * b2 - k(24) * b4;
    QuadInt c6 = -(b2 * b2 * b2) + k(36) * b2 * b4 - k(216) * b6;
    QuadInt disc = -(b2 * b2) * b8 - k(8) * (b4 * b4 * b4) - k(27) * (b6 * b6) + k(9) * b2 * b4 * b6;
    return {c4, c6, disc};
}

void require_rational(const QuadInt& v, const char* what) {
    if (v.y() != 0) throw std::logic_error(std::string("expected rational value for ") + what);
}

// --- rational square/cube/power-free helpers ---------------------------------

bool rat_is_square(const mpq_class& q) {
    if (sgn(q) <= 0) return false;
    return mpz_perfect_square_p(q.get_num_mpz_t()) != 0 &&
           mpz_perfect_square_p(q.get_den_mpz_t()) != 0;
}

bool int_is_cube(const mpz_class& z) {
    if (z == 0) return true;
    mpz_class a = abs(z), r;
    return mpz_root(r.get_mpz_t(), a.get_mpz_t(), 3) != 0;
}

bool rat_is_cube(const mpq_class& q) {
    return int_is_cube(q.get_num()) && int_is_cube(q.get_den());
}

// Integer congruent to q modulo nonzero rational k-th powers.
mpz_class clear_to_integer(const mpq_class& q, unsigned k) {
    mpz_class scaled = q.get_num();
    for (unsigned i = 0; i + 1 < k; ++i) scaled *= q.get_den();
    return scaled;
}

mpz_class powerfree_residual(const mpq_class& q, unsigned k) {
    return powerfree_part(clear_to_integer(q, k), k).first;
}

const CurveModel& row_for(long dK, long f) { return registry_lookup(CMOrder(dK, f)); }

TwistClass classify_discfamily(const mpq_class& A, const mpq_class& B, const CurveModel& base_row,
                               const std::string& family) {
    // The two base rows are already short, so (a4, a6) are the reference (A0, B0).
    CurveModel s0 = short_form(base_row);
    mpq_class a0 = s0.a[3].first, b0 = s0.a[4].first;
    mpq_class alpha = (B / b0) / (A / a0);
    if (A != a0 * alpha * alpha || B != b0 * alpha * alpha * alpha)
        throw std::logic_error("inconsistent twist ratio for matched j invariant");
    mpz_class d = powerfree_residual(alpha, 2);
    TwistClass out;
    out.family = family;
    out.parameter = mpq_class(d);
    if (d == 1 || d == -1 || d == 2 || d == -2)
        out.tag = d.get_str();
    else
        out.tag = "generic";
    return out;
}

}  // namespace

CMOrder CurveModel::order() const {
    if (!is_registry()) throw std::logic_error("model does not carry a registry CM identity");
    return CMOrder(delta_K, conductor_f);
}

const std::vector<CurveModel>& registry_models() {
    static const std::vector<CurveModel> models = [] {
        std::vector<CurveModel> v;
        v.reserve(std::size(kRows));
        for (const RawRow& r : kRows) v.push_back(build_row(r));
        return v;
    }();
    return models;
}

const CurveModel& registry_lookup(const CMOrder& order) {
    for (const CurveModel& m : registry_models())
        if (m.delta_K == order.dK && m.conductor_f == order.f) return m;
    throw std::invalid_argument("no curve model for this order in the registry");
}

Coords j_invariant(const CurveModel& m) {
    auto inv = invariants(m);
    if (inv.disc.is_zero()) throw std::invalid_argument("singular model has no j invariant");
    QuadInt c4cubed = inv.c4 * inv.c4 * inv.c4;
    QuadInt j = c4cubed / inv.disc;
    if (m.over_Q()) require_rational(j, "j invariant of a rational model");
    return drop(j);
}

Coords model_discriminant(const CurveModel& m) { return drop(invariants(m).disc); }

CurveModel conjugate_model(const CurveModel& m) {
    if (m.over_Q()) throw std::invalid_argument("conjugate_model requires a quadratic field model");
    CurveModel out = m;
    for (auto& c : out.a) c = drop(lift(*m.base, c).conjugate());
    return out;
}

CurveModel short_form(const CurveModel& m) {
    if (m.a[0].first == 0 && m.a[0].second == 0 && m.a[1].first == 0 && m.a[1].second == 0 &&
        m.a[2].first == 0 && m.a[2].second == 0)
        return m;
    auto inv = invariants(m);
    QuadField F = work_field(m);
    CurveModel out = m;
    QuadInt A = QuadInt(F, -27, 0) * inv.c4;
    QuadInt B = QuadInt(F, -54, 0) * inv.c6;
    out.a = {Coords{0, 0}, Coords{0, 0}, Coords{0, 0}, drop(A), drop(B)};
    return out;
}

CurveModel quadratic_twist(const CurveModel& m, const Coords& alpha) {
    QuadField F = work_field(m);
    QuadInt al = lift(F, alpha);
    if (al.is_zero()) throw std::invalid_argument("twist parameter must be nonzero");
    if (m.over_Q() && alpha.second != 0)
        throw std::invalid_argument("twist of a rational model needs a rational parameter");
    CurveModel s = short_form(m);
    QuadInt A = lift(F, s.a[3]), B = lift(F, s.a[4]);
    CurveModel out;
    out.base = m.base;
    out.a = {Coords{0, 0}, Coords{0, 0}, Coords{0, 0}, drop(al * al * A), drop(al * al * al * B)};
    out.delta_K = m.delta_K;  // twisting preserves the CM order
    out.conductor_f = m.conductor_f;
    out.conductor_norm = 0;  // conductor of the twist is not tracked
    out.source_id = "";
    return out;
}

TwistClass normalize_twist_parameter(const CurveModel& m) {
    if (!m.over_Q())
        throw std::invalid_argument("twist-parameter normalization is defined over Q only");
    mpq_class j = j_invariant(m).first;
    CurveModel s = short_form(m);
    mpq_class A = s.a[3].first, B = s.a[4].first;

    if (j == 1728) {
        // y^2 = x^3 + dx with d fourth-power-free.
        if (B != 0) throw std::logic_error("j = 1728 model with nonzero short-form constant term");
        mpz_class d = powerfree_residual(A, 4);
        TwistClass out;
        out.family = "j1728";
        out.parameter = mpq_class(d);
        if (d == 1 || d == -1 || d == 2 || d == -2 || d == 4 || d == -4 || d == 8 || d == -8)
            out.tag = d.get_str();
        else if (rat_is_square(out.parameter))
            out.tag = "t^2";
        else if (rat_is_square(-out.parameter))
            out.tag = "-t^2";
        else if (rat_is_square(out.parameter / 2))
            out.tag = "2t^2";
        else if (rat_is_square(-out.parameter / 2))
            out.tag = "-2t^2";
        else
            out.tag = "generic";
        return out;
    }

    if (j == 0) {
        // y^2 = x^3 + 16d with 16d sixth-power-free; d may be rational.
        if (A != 0) throw std::logic_error("j = 0 model with nonzero short-form linear term");
        mpz_class sixteen_d = powerfree_residual(B, 6);
        mpq_class d = mpq_class(sixteen_d) / 16;
        TwistClass out;
        out.family = "j0";
        out.parameter = d;
        if (d == 1 || d == -3 || d == 9 || d == -27 || d == 81 || d == -243)
            out.tag = (d.get_num()).get_str();
        else if (rat_is_square(d))
            out.tag = "t^2";
        else if (rat_is_square(-3 * d))
            out.tag = "-3t^2";
        else if (rat_is_cube(d))
            out.tag = "t^3";
        else if (rat_is_cube(d / 3))
            out.tag = "3t^3";
        else if (rat_is_cube(d / 9))
            out.tag = "9t^3";
        else
            out.tag = "generic";
        return out;
    }

    if (j == 8000) return classify_discfamily(A, B, row_for(-8, 1), "disc8");
    if (j == 287496) return classify_discfamily(A, B, row_for(-4, 2), "disc16");

    // Remaining rational registry rows: twists classified by square class
    // relative to the registry model, with the odd prime ell dividing the
    // field discriminant singled out.
    for (const CurveModel& row : registry_models()) {
        if (!row.over_Q()) continue;
        mpq_class j0 = j_invariant(row).first;
        if (j0 == 0 || j0 == 1728 || j0 == 8000 || j0 == 287496) continue;
        if (j0 != j) continue;
        CurveModel s0 = short_form(row);
        mpq_class a0 = s0.a[3].first, b0 = s0.a[4].first;
        mpq_class alpha = (B / b0) / (A / a0);
        if (A != a0 * alpha * alpha || B != b0 * alpha * alpha * alpha)
            throw std::logic_error("inconsistent twist ratio for matched j invariant");
        mpz_class d = powerfree_part(clear_to_integer(alpha, 2), 2).first;
        long ellstar = -row.delta_K;  // the registry's odd dK values are primes
        TwistClass out;
        out.family = "generic";
        out.parameter = mpq_class(d);
        if (d == 1)
            out.tag = "model";
        else if (d == -ellstar)
            out.tag = "-ell*model";
        else
            out.tag = "other";
        return out;
    }
    throw std::invalid_argument("j invariant does not match any registry CM order");
}

// --- JSON registry -----------------------------------------------------------

namespace {

nlohmann::json coords_to_json(const Coords& c) {
    return nlohmann::json::array({c.first.get_str(), c.second.get_str()});
}

Coords coords_from_json(const nlohmann::json& v) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_string() || !v[1].is_string())
        throw std::runtime_error("registry JSON: coordinate pair must be [\"x\", \"y\"]");
    mpq_class x(v[0].get<std::string>()), y(v[1].get<std::string>());
    mpq_canonicalize(x.get_mpq_t());
    mpq_canonicalize(y.get_mpq_t());
    return {x, y};
}

}  // namespace

std::string registry_to_json() {
    nlohmann::json out;
    out["version"] = 1;
    out["generator"] = "a = (1+sqrt(m))/2 when m = 1 mod 4, else a = sqrt(m)";
    nlohmann::json models = nlohmann::json::array();
    static const char* keys[5] = {"a1", "a2", "a3", "a4", "a6"};
    for (const CurveModel& m : registry_models()) {
        nlohmann::json row;
        row["delta_K"] = m.delta_K;
        row["f"] = m.conductor_f;
        if (m.over_Q()) {
            row["field_m"] = "Q";
            row["minpoly"] = "x";
        } else {
            row["field_m"] = m.base->m;
            row["minpoly"] = m.base->minpoly();
        }
        for (int i = 0; i < 5; ++i) row[keys[i]] = coords_to_json(m.a[i]);
        row["j"] = coords_to_json(j_invariant(m));
        row["lmfdb_ref"] = m.source_id;
        row["conductor_norm"] = m.conductor_norm;
        models.push_back(std::move(row));
    }
    out["models"] = std::move(models);
    return out.dump(2) + "\n";
}

std::vector<CurveModel> registry_from_json(const std::string& text) {
    nlohmann::json in;
    try {
        in = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("registry JSON: parse failure: ") + e.what());
    }
    if (!in.is_object() || in.value("version", 0) != 1)
        throw std::runtime_error("registry JSON: unsupported or missing version");
    if (!in.contains("models") || !in["models"].is_array())
        throw std::runtime_error("registry JSON: missing model list");
    static const char* keys[5] = {"a1", "a2", "a3", "a4", "a6"};
    std::vector<CurveModel> out;
    for (const auto& row : in["models"]) {
        CurveModel m;
        try {
            m.delta_K = row.at("delta_K").get<long>();
            m.conductor_f = row.at("f").get<long>();
            if (row.at("field_m").is_string()) {
                if (row["field_m"].get<std::string>() != "Q")
                    throw std::runtime_error("field_m must be \"Q\" or an integer");
            } else {
                m.base = QuadField(row["field_m"].get<long>());
                if (m.base->minpoly() != row.value("minpoly", std::string()))
                    throw std::runtime_error("minpoly does not match field_m");
            }
            for (int i = 0; i < 5; ++i) m.a[i] = coords_from_json(row.at(keys[i]));
            m.source_id = row.value("lmfdb_ref", std::string());
            m.conductor_norm = row.value("conductor_norm", 0L);
            Coords j = coords_from_json(row.at("j"));
            if (j != j_invariant(m))
                throw std::runtime_error("stored j invariant disagrees with the model");
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(std::string("registry JSON: malformed row: ") + e.what());
        }
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace cmik
