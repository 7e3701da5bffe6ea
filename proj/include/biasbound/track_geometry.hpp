#pragma once

// Track-constrained positioning geometry: a receiver on a known curve,
// pseudorange residuals r_j >= 0 and the magnification coefficients that turn
// a clock-bias error |db| into a bound on the horizontal position error.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biasbound/core.hpp"

namespace biasbound::track {

inline constexpr double degenerate_threshold = 1e-9;

// ---------------------------------------------------------------------------
// Frame
// ---------------------------------------------------------------------------

enum class CurvatureSide { left, right, straight };

/// U along track, V toward the osculating centre, W = U x V, all in local
/// East-North-Up. A straight track carries R = +inf and V on the left.
struct FrenetFrame {
    Vec3 U;
    Vec3 V;
    Vec3 W;
    double R = std::numeric_limits<double>::infinity();
    Vec3 base_point;

    bool straight() const { return std::isinf(R); }
};

/// `track_azimuth` is measured clockwise from North, radians.
inline FrenetFrame frenet_frame(const Vec3& base_point, double track_azimuth, CurvatureSide side,
                                double radius = std::numeric_limits<double>::infinity()) {
    FrenetFrame f;
    f.base_point = base_point;
    const double sa = std::sin(track_azimuth);
    const double ca = std::cos(track_azimuth);
    f.U = {sa, ca, 0.0};
    if (side == CurvatureSide::straight) {
        f.R = std::numeric_limits<double>::infinity();
        f.V = {-ca, sa, 0.0};
    } else {
        if (!(radius > 0.0)) throw DomainError("osculating radius must be positive");
        f.R = radius;
        f.V = side == CurvatureSide::left ? Vec3{-ca, sa, 0.0} : Vec3{ca, -sa, 0.0};
    }
    f.W = cross(f.U, f.V);
    return f;
}

struct ArcProjection {
    double s = 0.0;
    double ds_du = 0.0;
    double ds_dv = 0.0;
};

/// Arc length s = R atan(u / (R - v)) of the point (u, v) projected onto the
/// osculating circle, with its analytic Jacobian. R = inf gives s = u.
inline ArcProjection arc_project(double u, double v, double R) {
    if (std::isinf(R) && R > 0.0) return {u, 1.0, 0.0};
    if (!(R > 0.0)) throw DomainError("osculating radius must be positive");
    if (!(v < R)) throw DomainError("arc projection needs v < R");
    const double d = R - v;
    const double q = d * d + u * u;
    return {R * std::atan(u / d), R * d / q, R * u / q};
}

// ---------------------------------------------------------------------------
// Satellite geometry
// ---------------------------------------------------------------------------

/// g = -(unit direction to the satellite), f = <g, U>, h = <g, V>.
struct SatGeometry {
    std::string sat_id;
    Vec3 g;
    double f = 0.0;
    double h = 0.0;
};

/// Geometry given directly by its cosines (g left unset).
inline SatGeometry from_cosines(std::string id, double f, double h) {
    SatGeometry s;
    s.sat_id = std::move(id);
    s.f = f;
    s.h = h;
    return s;
}

inline SatGeometry directional_cosines(std::string sat_id, const Vec3& unit_dir, const FrenetFrame& frame) {
    if (std::abs(norm(unit_dir) - 1.0) > 1e-9)
        throw DomainError("satellite direction for " + sat_id + " is not a unit vector");
    SatGeometry s;
    s.sat_id = std::move(sat_id);
    s.g = -unit_dir;
    s.f = dot(s.g, frame.U);
    s.h = dot(s.g, frame.V);
    return s;
}

inline std::vector<SatGeometry> directional_cosines(std::span<const Vec3> unit_dirs, const FrenetFrame& frame) {
    std::vector<SatGeometry> out;
    out.reserve(unit_dirs.size());
    for (std::size_t j = 0; j < unit_dirs.size(); ++j)
        out.push_back(directional_cosines("S" + std::to_string(j + 1), unit_dirs[j], frame));
    return out;
}

using SatTriple = std::array<SatGeometry, 3>;

/// Cofactors of the clock column: c1 = f2h3 - f3h2, c2 = f3h1 - f1h3, c3 = f1h2 - f2h1.
/// c_j is Im(conj(z_{j+1}) z_{j+2}) with z = f + i h, indices cyclic.
inline std::array<double, 3> clock_cofactors(const SatTriple& s) {
    return {s[1].f * s[2].h - s[2].f * s[1].h, s[2].f * s[0].h - s[0].f * s[2].h,
            s[0].f * s[1].h - s[1].f * s[0].h};
}

/// D = f1h2 - f2h1 + f2h3 - f3h2 + f3h1 - f1h3 = det [[f_j, h_j, 1]].
inline double determinant_d(const SatTriple& s) {
    return s[0].f * s[1].h - s[1].f * s[0].h + s[1].f * s[2].h - s[2].f * s[1].h + s[2].f * s[0].h -
           s[0].f * s[2].h;
}

// ---------------------------------------------------------------------------
// Solutions
// ---------------------------------------------------------------------------

struct PseudorangeDelta {
    std::string sat_id;
    double delta_rho = 0.0;  // m
    double epsilon = 0.0;    // m, modelled correction
    double residual() const { return delta_rho - epsilon; }
};

inline PseudorangeDelta residual_only(std::string id, double r) { return {std::move(id), r, 0.0}; }

enum class SolveKind { three_sat, virtual_sat };

struct SolveResult {
    double delta_u = 0.0;
    double delta_v = 0.0;
    double delta_b = 0.0;
    double determinant = 0.0;
    SolveKind kind = SolveKind::three_sat;
};

/// (du, dv, db) = adj([[f_j, h_j, 1]]) (drho - eps) / D.
inline SolveResult solve_three_sat(const SatTriple& s, const std::array<PseudorangeDelta, 3>& deltas) {
    const double D = determinant_d(s);
    if (!(std::abs(D) > degenerate_threshold))
        throw DegenerateError("three-satellite geometry is degenerate (|D| <= 1e-9)");
    const double r1 = deltas[0].residual(), r2 = deltas[1].residual(), r3 = deltas[2].residual();
    const double f1 = s[0].f, f2 = s[1].f, f3 = s[2].f;
    const double h1 = s[0].h, h2 = s[1].h, h3 = s[2].h;
    const auto c = clock_cofactors(s);

    SolveResult out;
    out.determinant = D;
    out.kind = SolveKind::three_sat;
    out.delta_u = ((h2 - h3) * r1 + (h3 - h1) * r2 + (h1 - h2) * r3) / D;
    out.delta_v = ((f3 - f2) * r1 + (f1 - f3) * r2 + (f2 - f1) * r3) / D;
    out.delta_b = (c[0] * r1 + c[1] * r2 + c[2] * r3) / D;
    return out;
}

/// Two physical satellites plus the on-track constraint (virtual satellite
/// with h3 -> inf and zero residual): [[f1, 1], [f2, 1]] (ds, db) = (r1, r2).
inline SolveResult solve_two_sat(const SatGeometry& s1, const SatGeometry& s2,
                                 const std::array<PseudorangeDelta, 2>& deltas) {
    const double dprime = s2.f - s1.f;
    if (!(std::abs(dprime) > degenerate_threshold))
        throw DegenerateError("two-satellite geometry is degenerate (|f2 - f1| <= 1e-9)");
    const double r1 = deltas[0].residual(), r2 = deltas[1].residual();
    SolveResult out;
    out.kind = SolveKind::virtual_sat;
    out.determinant = dprime;
    out.delta_u = (r1 - r2) / (s1.f - s2.f);
    out.delta_v = 0.0;
    out.delta_b = (s1.f * r2 - s2.f * r1) / (s1.f - s2.f);
    return out;
}

// ---------------------------------------------------------------------------
// Admissibility and magnification
// ---------------------------------------------------------------------------

using Permutation = std::array<int, 3>;

inline SatTriple permuted(const SatTriple& s, const Permutation& p) {
    return {s[static_cast<std::size_t>(p[0])], s[static_cast<std::size_t>(p[1])], s[static_cast<std::size_t>(p[2])]};
}

/// First ordering (lexicographic over the 6 permutations) under which
/// f_j h_{j+1} - f_{j+1} h_j > 0 for j = 1, 2, 3 cyclically.
inline std::optional<Permutation> sign_condition(const SatTriple& s) {
    Permutation p{0, 1, 2};
    do {
        const auto c = clock_cofactors(permuted(s, p));
        if (c[0] > 0.0 && c[1] > 0.0 && c[2] > 0.0) return p;
    } while (std::next_permutation(p.begin(), p.end()));
    return std::nullopt;
}

struct MagnificationUV {
    bool admissible = false;
    double m_u = 0.0;
    double m_v = 0.0;
    Permutation permutation{0, 1, 2};
};

inline MagnificationUV magnification_uv(const SatTriple& sats) {
    MagnificationUV out;
    const auto perm = sign_condition(sats);
    if (!perm) return out;
    out.permutation = *perm;
    const auto s = permuted(sats, *perm);
    const auto c = clock_cofactors(s);
    const double den = std::min({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])});
    if (!(den > 0.0)) return out;
    const double num_u = std::max({std::abs(s[1].h - s[2].h), std::abs(s[2].h - s[0].h), std::abs(s[0].h - s[1].h)});
    const double num_v = std::max({std::abs(s[1].f - s[2].f), std::abs(s[2].f - s[0].f), std::abs(s[0].f - s[1].f)});
    out.m_u = num_u / den;
    out.m_v = num_v / den;
    out.admissible = true;
    return out;
}

struct MagnificationS {
    bool admissible = false;
    double m_s = 0.0;
};

/// M_s = 1 / min(|f1|, |f2|), admissible only for f1 f2 < 0.
inline MagnificationS magnification_s(const SatGeometry& s1, const SatGeometry& s2) {
    if (!(s1.f * s2.f < 0.0)) return {};
    return {true, 1.0 / std::min(std::abs(s1.f), std::abs(s2.f))};
}

}  // namespace biasbound::track
