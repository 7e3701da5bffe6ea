#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <system_error>

namespace biasbound {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input outside the domain of an operation (bad PRN, v >= R, non-unit vector...).
struct DomainError : Error {
    using Error::Error;
};

/// Geometry or curvature for which no finite solution or bound exists.
struct DegenerateError : Error {
    using Error::Error;
};

/// Iterative solver gave up. Carries the last iterate.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& what, double last)
        : Error(what), last_iterate(last) {}
    double last_iterate;
};

/// Unreadable input file. Line is 1-based, 0 when not applicable.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line_no)
        : Error(line_no ? what + " (line " + std::to_string(line_no) + ")" : what),
          line(line_no) {}
    std::size_t line;
};

// ---------------------------------------------------------------------------
// Constants
// ---------------------------------------------------------------------------

namespace constants {
inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 2.99792458e8;        // m/s
inline constexpr double wgs84_a = 6378137.0;                  // m
inline constexpr double wgs84_f = 1.0 / 298.257223563;
inline constexpr double wgs84_b = wgs84_a * (1.0 - wgs84_f);  // 6356752.314245...
inline constexpr double wgs84_e2 = wgs84_f * (2.0 - wgs84_f);
inline constexpr double gps_mu = 3.986005e14;                 // m^3/s^2
inline constexpr double earth_rotation_rate = 7.2921151467e-5;  // rad/s
inline constexpr double seconds_per_week = 604800.0;
}  // namespace constants

inline constexpr double deg2rad(double d) { return d * constants::pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / constants::pi; }

// ---------------------------------------------------------------------------
// Vec3
// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

    friend constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }
    friend constexpr Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

inline constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    if (n == 0.0) throw DomainError("cannot normalize a zero vector");
    return a / n;
}

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form, always carrying a decimal point or
/// exponent ("2.0", "1.5e-07"). Output is identical for identical inputs.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw Error("number formatting failed");
    std::string s(buf.data(), end);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

}  // namespace biasbound
