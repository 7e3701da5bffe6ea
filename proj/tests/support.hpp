#pragma once

// Random geometry generators shared by the unit and acceptance suites.

#include <array>
#include <cmath>
#include <random>

#include "biasbound/track_geometry.hpp"

namespace biasbound::testing {

/// (f, h) uniform in the unit disc.
inline track::SatGeometry random_cosines(std::mt19937_64& rng, const char* id) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    while (true) {
        const double f = u(rng), h = u(rng);
        if (f * f + h * h <= 1.0) return track::from_cosines(id, f, h);
    }
}

inline track::SatTriple random_triple(std::mt19937_64& rng) {
    return {random_cosines(rng, "A"), random_cosines(rng, "B"), random_cosines(rng, "C")};
}

/// Triple satisfying the sign condition, returned in its admissible order.
inline track::SatTriple random_admissible_triple(std::mt19937_64& rng) {
    while (true) {
        const auto t = random_triple(rng);
        if (auto p = track::sign_condition(t)) return track::permuted(t, *p);
    }
}

/// Pair with f1 < 0 < f2.
inline std::array<track::SatGeometry, 2> random_admissible_pair(std::mt19937_64& rng) {
    while (true) {
        auto a = random_cosines(rng, "A");
        auto b = random_cosines(rng, "B");
        if (a.f * b.f < 0.0) {
            if (a.f > 0.0) std::swap(a, b);
            return {a, b};
        }
    }
}

/// Strictly positive residual in (0, scale].
inline double positive_residual(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = 0.0;
    while (r == 0.0) r = u(rng);
    return scale * r;
}

/// Unit direction to a satellite above `mask_deg`, uniform in azimuth and
/// in sin(elevation), as East-North-Up.
inline Vec3 random_sky_direction(std::mt19937_64& rng, double mask_deg = 15.0) {
    std::uniform_real_distribution<double> az(0.0, 2.0 * constants::pi);
    std::uniform_real_distribution<double> sin_el(std::sin(deg2rad(mask_deg)), 1.0);
    const double s = sin_el(rng), c = std::sqrt(1.0 - s * s), a = az(rng);
    return {c * std::sin(a), c * std::cos(a), s};
}

}  // namespace biasbound::testing
