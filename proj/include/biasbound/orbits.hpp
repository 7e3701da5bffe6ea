#pragma once

// GPS broadcast ephemerides: RINEX 2 navigation parsing, Kepler propagation,
// WGS-84 transforms and elevation-mask visibility.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "biasbound/core.hpp"

namespace biasbound::orbits {

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

struct GpsTime {
    int week = 0;
    double sow = 0.0;  // [0, 604800)

    static GpsTime from_seconds(double total) {
        const double w = std::floor(total / constants::seconds_per_week);
        GpsTime t{static_cast<int>(w), total - w * constants::seconds_per_week};
        if (t.sow >= constants::seconds_per_week) {
            t.sow -= constants::seconds_per_week;
            ++t.week;
        }
        return t;
    }

    /// Normalises seconds outside [0, 604800) into the week number.
    static GpsTime make(int week, double sow) {
        if (sow >= 0.0 && sow < constants::seconds_per_week) return {week, sow};
        const double shift = std::floor(sow / constants::seconds_per_week);
        return {week + static_cast<int>(shift), sow - shift * constants::seconds_per_week};
    }

    /// Seconds since the GPS epoch (1980-01-06 00:00:00).
    double total_seconds() const { return week * constants::seconds_per_week + sow; }

    friend double operator-(const GpsTime& a, const GpsTime& b) {
        return (a.week - b.week) * constants::seconds_per_week + (a.sow - b.sow);
    }
    friend GpsTime operator+(const GpsTime& a, double seconds) { return make(a.week, a.sow + seconds); }

    friend std::partial_ordering operator<=>(const GpsTime& a, const GpsTime& b) {
        if (a.week != b.week) return a.week <=> b.week;
        return a.sow <=> b.sow;
    }
    friend bool operator==(const GpsTime& a, const GpsTime& b) { return a.week == b.week && a.sow == b.sow; }
};

/// Calendar epoch on the GPS time scale (no leap-second shift).
inline GpsTime gps_time_from_calendar(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                                      double second = 0.0) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) throw DomainError("invalid calendar date");
    constexpr year_month_day gps_epoch{std::chrono::year{1980}, std::chrono::month{1}, std::chrono::day{6}};
    const auto days = (sys_days{ymd} - sys_days{gps_epoch}).count();
    return GpsTime::from_seconds(static_cast<double>(days) * 86400.0 + hour * 3600.0 + minute * 60.0 + second);
}

/// UTC calendar epoch converted with a fixed GPS - UTC offset (16 s in 2013).
inline GpsTime gps_time_from_utc(int year, unsigned month, unsigned day, int hour, int minute, double second,
                                 double leap_seconds) {
    return gps_time_from_calendar(year, month, day, hour, minute, second) + leap_seconds;
}

// ---------------------------------------------------------------------------
// Ephemeris
// ---------------------------------------------------------------------------

inline constexpr double default_validity_window = 4.0 * 3600.0;

struct EphemerisRecord {
    int prn = 0;
    GpsTime toc;
    GpsTime toe;
    double sqrt_a = 0.0;
    double e = 0.0;
    double m0 = 0.0;
    double delta_n = 0.0;
    double i0 = 0.0;
    double idot = 0.0;
    double omega0 = 0.0;
    double omega_dot = 0.0;
    double w_arg = 0.0;
    double cuc = 0.0, cus = 0.0;
    double crc = 0.0, crs = 0.0;
    double cic = 0.0, cis = 0.0;
    double health = 0.0;
    double iode = 0.0;
    double validity_window = default_validity_window;  // seconds, |t - toe| limit

    std::string sat_id() const {
        char buf[8];
        std::snprintf(buf, sizeof buf, "G%02d", prn);
        return buf;
    }

    /// Empty when the record is plausible, otherwise the reason it is not.
    std::optional<std::string> check() const {
        if (!(e >= 0.0 && e < 1.0)) return "eccentricity " + format_double(e) + " outside [0, 1)";
        if (!(sqrt_a > 0.0)) return "non-positive sqrt(A)";
        const double a = sqrt_a * sqrt_a;
        if (!(a >= 2.0e7 && a <= 3.5e7)) return "semi-major axis " + format_double(a) + " m implausible for GPS";
        if (!(toe.sow >= 0.0 && toe.sow < constants::seconds_per_week)) return "toe outside the week";
        return std::nullopt;
    }
};

// ---------------------------------------------------------------------------
// RINEX 2 navigation parsing
// ---------------------------------------------------------------------------

struct Diagnostic {
    std::size_t line = 0;
    std::string message;
};

struct NavParseResult {
    std::vector<EphemerisRecord> records;
    std::vector<Diagnostic> diagnostics;
    double version = 0.0;
    std::optional<int> leap_seconds;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string_view column(std::string_view line, std::size_t start, std::size_t width) {
    if (start >= line.size()) return {};
    return line.substr(start, std::min(width, line.size() - start));
}

/// Fortran-style real; accepts D/d/E exponents. nullopt for blank fields.
inline std::optional<double> parse_real(std::string_view field) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    std::string buf(field);
    for (auto& c : buf)
        if (c == 'D' || c == 'd') c = 'E';
    const char* first = buf.c_str();
    if (*first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, buf.c_str() + buf.size(), v);
    if (ec != std::errc{} || ptr != buf.c_str() + buf.size()) return std::nullopt;
    return v;
}

inline std::optional<int> parse_int(std::string_view field) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    int v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
    return v;
}

inline bool is_continuation(std::string_view line) {
    return line.size() < 3 ? trim(line).empty() : line.substr(0, 3) == "   ";
}

inline bool is_blank(std::string_view line) { return trim(line).empty(); }

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    return lines;
}

}  // namespace detail

struct NavParseOptions {
    double validity_window = default_validity_window;
};

/// Parses RINEX 2.x GPS navigation text. Malformed records are skipped with a
/// diagnostic; a missing or foreign header is fatal.
inline NavParseResult parse_rinex_nav(std::string_view text, const NavParseOptions& opt = {}) {
    using detail::column;
    using detail::parse_int;
    using detail::parse_real;

    const auto lines = detail::split_lines(text);
    NavParseResult out;
    if (lines.empty()) throw ParseError("empty navigation file", 0);

    const auto first = lines[0];
    if (first.find("RINEX VERSION / TYPE") == std::string_view::npos)
        throw ParseError("missing RINEX VERSION / TYPE header", 1);
    const auto version = parse_real(column(first, 0, 9));
    if (!version || *version < 2.0 || *version >= 3.0)
        throw ParseError("unsupported RINEX version (expected 2.x)", 1);
    const auto type = column(first, 20, 1);
    if (type != "N") throw ParseError("not a GPS navigation file (file type '" + std::string(type) + "')", 1);
    out.version = *version;

    std::size_t i = 1;
    bool header_done = false;
    for (; i < lines.size(); ++i) {
        const auto label = detail::trim(column(lines[i], 60, 20));
        if (label == "LEAP SECONDS") out.leap_seconds = parse_int(column(lines[i], 0, 6));
        if (label == "END OF HEADER") {
            header_done = true;
            ++i;
            break;
        }
    }
    if (!header_done) throw ParseError("missing END OF HEADER", lines.size());

    while (i < lines.size()) {
        const std::size_t start = i;
        const auto head = lines[i];
        if (detail::is_blank(head)) {
            ++i;
            continue;
        }
        if (detail::is_continuation(head)) {
            out.diagnostics.push_back({start + 1, "orphan continuation line skipped"});
            ++i;
            continue;
        }

        std::array<std::string_view, 7> orbit{};
        std::size_t n = 0;
        ++i;
        while (n < orbit.size() && i < lines.size() && detail::is_continuation(lines[i])) orbit[n++] = lines[i++];
        if (n < orbit.size()) {
            out.diagnostics.push_back({start + 1, "truncated record (" + std::to_string(n + 1) + " of 8 lines)"});
            continue;
        }

        auto field = [&](int orbit_line, int k) {
            return parse_real(column(orbit[static_cast<std::size_t>(orbit_line)], 3 + 19 * static_cast<std::size_t>(k), 19));
        };
        auto fail = [&](const std::string& why) { out.diagnostics.push_back({start + 1, why + "; record skipped"}); };

        const auto prn = parse_int(column(head, 0, 2));
        const auto yy = parse_int(column(head, 3, 2));
        const auto mon = parse_int(column(head, 6, 2));
        const auto day = parse_int(column(head, 9, 2));
        const auto hh = parse_int(column(head, 12, 2));
        const auto mi = parse_int(column(head, 15, 2));
        const auto ss = parse_real(column(head, 17, 5));
        if (!prn || !yy || !mon || !day || !hh || !mi || !ss) {
            fail("unreadable PRN / epoch");
            continue;
        }
        if (*prn < 1 || *mon < 1 || *mon > 12 || *day < 1 || *day > 31) {
            fail("PRN or epoch out of range");
            continue;
        }

        std::array<std::optional<double>, 28> v{};
        for (int l = 0; l < 7; ++l)
            for (int k = 0; k < 4; ++k) v[static_cast<std::size_t>(4 * l + k)] = field(l, k);
        // Required: orbit lines 1-4, IDOT and week on line 5, health on line 6.
        bool complete = true;
        for (std::size_t k = 0; k < 16; ++k) complete = complete && v[k].has_value();
        complete = complete && v[16] && v[18] && v[21];
        if (!complete) {
            fail("missing broadcast orbit field");
            continue;
        }

        EphemerisRecord r;
        r.prn = *prn;
        const int year = *yy < 80 ? 2000 + *yy : 1900 + *yy;
        try {
            r.toc = gps_time_from_calendar(year, static_cast<unsigned>(*mon), static_cast<unsigned>(*day), *hh, *mi,
                                           *ss);
        } catch (const DomainError&) {
            fail("invalid epoch date");
            continue;
        }
        r.iode = *v[0];
        r.crs = *v[1];
        r.delta_n = *v[2];
        r.m0 = *v[3];
        r.cuc = *v[4];
        r.e = *v[5];
        r.cus = *v[6];
        r.sqrt_a = *v[7];
        const double toe_sow = *v[8];
        r.cic = *v[9];
        r.omega0 = *v[10];
        r.cis = *v[11];
        r.i0 = *v[12];
        r.crc = *v[13];
        r.w_arg = *v[14];
        r.omega_dot = *v[15];
        r.idot = *v[16];
        r.toe = GpsTime{static_cast<int>(*v[18]), toe_sow};
        r.health = *v[21];
        r.validity_window = opt.validity_window;

        if (auto why = r.check()) {
            fail(*why);
            continue;
        }
        out.records.push_back(r);
    }
    return out;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline NavParseResult read_rinex_nav(const std::string& path, const NavParseOptions& opt = {}) {
    return parse_rinex_nav(read_text_file(path), opt);
}

// ---------------------------------------------------------------------------
// Precomputed positions (CSV)
// ---------------------------------------------------------------------------

struct PositionSample {
    std::string sat_id;
    GpsTime t;
    Vec3 ecef;
};

/// `sat_id,week,sow,x_m,y_m,z_m` with a header row.
inline std::vector<PositionSample> parse_position_csv(std::string_view text) {
    const auto lines = detail::split_lines(text);
    std::vector<PositionSample> out;
    if (lines.empty() || detail::trim(lines[0]) != "sat_id,week,sow,x_m,y_m,z_m")
        throw ParseError("expected header sat_id,week,sow,x_m,y_m,z_m", 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (detail::is_blank(lines[i])) continue;
        std::vector<std::string_view> cols;
        std::string_view rest = lines[i];
        while (true) {
            const auto comma = rest.find(',');
            cols.push_back(detail::trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cols.size() != 6) throw ParseError("expected 6 columns", i + 1);
        const auto week = detail::parse_int(cols[1]);
        const auto sow = detail::parse_real(cols[2]);
        const auto x = detail::parse_real(cols[3]);
        const auto y = detail::parse_real(cols[4]);
        const auto z = detail::parse_real(cols[5]);
        if (cols[0].empty() || !week || !sow || !x || !y || !z) throw ParseError("malformed position row", i + 1);
        out.push_back({std::string(cols[0]), GpsTime::make(*week, *sow), {*x, *y, *z}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kepler propagation
// ---------------------------------------------------------------------------

/// Eccentric anomaly E with E - e sin E = M, Newton iteration to |dE| <= 1e-12.
inline double solve_kepler(double mean_anomaly, double e, int max_iterations = 30) {
    if (!(e >= 0.0 && e < 1.0)) throw DomainError("eccentricity outside [0, 1)");
    // iterate on M wrapped to [-pi, pi], then restore the whole revolutions
    const double turns = std::round(mean_anomaly / (2.0 * constants::pi));
    const double M = mean_anomaly - turns * 2.0 * constants::pi;
    double E = e < 0.8 ? M : std::copysign(constants::pi, M);
    for (int it = 0; it < max_iterations; ++it) {
        const double dE = (E - e * std::sin(E) - M) / (1.0 - e * std::cos(E));
        E -= dE;
        if (std::abs(dE) <= 1e-12) return E + turns * 2.0 * constants::pi;
    }
    throw ConvergenceError("Kepler iteration did not converge", E + turns * 2.0 * constants::pi);
}

/// ECEF position (m) from broadcast elements, earth rotation during signal
/// flight not applied.
inline Vec3 sat_position_ecef(const EphemerisRecord& eph, const GpsTime& t) {
    const double tk = t - eph.toe;
    if (!(std::abs(tk) <= eph.validity_window))
        throw DomainError("stale ephemeris for " + eph.sat_id() + ": |t - toe| = " + format_double(std::abs(tk)) + " s");

    const double a = eph.sqrt_a * eph.sqrt_a;
    const double n = std::sqrt(constants::gps_mu / (a * a * a)) + eph.delta_n;
    const double M = eph.m0 + n * tk;
    const double E = solve_kepler(M, eph.e);

    const double nu = std::atan2(std::sqrt(1.0 - eph.e * eph.e) * std::sin(E), std::cos(E) - eph.e);
    const double phi = nu + eph.w_arg;
    const double s2 = std::sin(2.0 * phi);
    const double c2 = std::cos(2.0 * phi);
    const double u = phi + eph.cus * s2 + eph.cuc * c2;
    const double r = a * (1.0 - eph.e * std::cos(E)) + eph.crs * s2 + eph.crc * c2;
    const double inc = eph.i0 + eph.cis * s2 + eph.cic * c2 + eph.idot * tk;

    const double xp = r * std::cos(u);
    const double yp = r * std::sin(u);
    const double node = eph.omega0 + (eph.omega_dot - constants::earth_rotation_rate) * tk -
                        constants::earth_rotation_rate * eph.toe.sow;
    const double cn = std::cos(node), sn = std::sin(node), ci = std::cos(inc);
    return {xp * cn - yp * ci * sn, xp * sn + yp * ci * cn, yp * std::sin(inc)};
}

// ---------------------------------------------------------------------------
// Site and local frame
// ---------------------------------------------------------------------------

struct SiteLocation {
    double latitude = 0.0;   // deg
    double longitude = 0.0;  // deg
    double height = 0.0;     // m above the WGS-84 ellipsoid

    void validate() const {
        if (!(std::abs(latitude) <= 90.0)) throw DomainError("latitude outside [-90, 90]");
        if (!(longitude > -180.0 && longitude <= 180.0)) throw DomainError("longitude outside (-180, 180]");
        if (!std::isfinite(height)) throw DomainError("non-finite height");
    }
};

inline Vec3 geodetic_to_ecef(const SiteLocation& site) {
    site.validate();
    const double lat = deg2rad(site.latitude);
    const double lon = deg2rad(site.longitude);
    const double sl = std::sin(lat), cl = std::cos(lat);
    const double N = constants::wgs84_a / std::sqrt(1.0 - constants::wgs84_e2 * sl * sl);
    return {(N + site.height) * cl * std::cos(lon), (N + site.height) * cl * std::sin(lon),
            (N * (1.0 - constants::wgs84_e2) + site.height) * sl};
}

/// Rows are the East, North and Up unit vectors expressed in ECEF.
inline std::array<Vec3, 3> enu_rotation(const SiteLocation& site) {
    const double lat = deg2rad(site.latitude);
    const double lon = deg2rad(site.longitude);
    const double sl = std::sin(lat), cl = std::cos(lat), so = std::sin(lon), co = std::cos(lon);
    return {Vec3{-so, co, 0.0}, Vec3{-sl * co, -sl * so, cl}, Vec3{cl * co, cl * so, sl}};
}

struct EnuResult {
    Vec3 enu;
    double elevation = 0.0;  // deg
    double azimuth = 0.0;    // deg, [0, 360) clockwise from North
};

inline EnuResult ecef_to_enu(const SiteLocation& site, const Vec3& point) {
    const Vec3 d = point - geodetic_to_ecef(site);
    const auto rot = enu_rotation(site);
    EnuResult out;
    out.enu = {dot(rot[0], d), dot(rot[1], d), dot(rot[2], d)};
    const double range = norm(out.enu);
    if (range == 0.0) throw DomainError("point coincides with the site");
    out.elevation = rad2deg(std::asin(std::clamp(out.enu.z / range, -1.0, 1.0)));
    double az = rad2deg(std::atan2(out.enu.x, out.enu.y));
    if (az < 0.0) az += 360.0;
    out.azimuth = az;
    return out;
}

// ---------------------------------------------------------------------------
// Visibility
// ---------------------------------------------------------------------------

struct VisibleSat {
    std::string sat_id;
    Vec3 enu_unit_dir;  // site -> satellite
    double elevation = 0.0;
    double azimuth = 0.0;
    Vec3 g;  // -enu_unit_dir
};

struct VisibilityOptions {
    bool exclude_unhealthy = true;
};

/// Record with toe nearest to t within its validity window; later toe wins ties.
inline const EphemerisRecord* select_ephemeris(std::span<const EphemerisRecord> ephs, int prn, const GpsTime& t,
                                               bool healthy_only = true) {
    const EphemerisRecord* best = nullptr;
    double best_dt = INFINITY;
    for (const auto& e : ephs) {
        if (e.prn != prn) continue;
        if (healthy_only && e.health != 0.0) continue;
        const double dt = std::abs(t - e.toe);
        if (dt > e.validity_window) continue;
        if (dt < best_dt || (dt == best_dt && best && best->toe < e.toe)) {
            best = &e;
            best_dt = dt;
        }
    }
    return best;
}

inline VisibleSat make_visible(std::string id, const EnuResult& r) {
    VisibleSat v;
    v.sat_id = std::move(id);
    v.enu_unit_dir = normalized(r.enu);
    v.g = -v.enu_unit_dir;
    v.elevation = r.elevation;
    v.azimuth = r.azimuth;
    return v;
}

/// Satellites at or above `mask_deg`, one per PRN, sorted by sat_id.
inline std::vector<VisibleSat> visible_satellites(std::span<const EphemerisRecord> ephs, const SiteLocation& site,
                                                  const GpsTime& t, double mask_deg,
                                                  const VisibilityOptions& opt = {}) {
    if (ephs.empty()) throw Error("empty ephemeris set");
    if (!(mask_deg >= 0.0 && mask_deg < 90.0)) throw DomainError("elevation mask outside [0, 90)");
    std::map<int, bool> prns;
    for (const auto& e : ephs) prns[e.prn] = true;

    std::vector<VisibleSat> out;
    for (const auto& [prn, _] : prns) {
        const auto* eph = select_ephemeris(ephs, prn, t, opt.exclude_unhealthy);
        if (!eph) continue;
        const auto r = ecef_to_enu(site, sat_position_ecef(*eph, t));
        if (r.elevation >= mask_deg) out.push_back(make_visible(eph->sat_id(), r));
    }
    return out;
}

/// Same filter over precomputed positions taken at t (within half a second).
inline std::vector<VisibleSat> visible_satellites(std::span<const PositionSample> positions, const SiteLocation& site,
                                                  const GpsTime& t, double mask_deg) {
    if (positions.empty()) throw Error("empty position set");
    if (!(mask_deg >= 0.0 && mask_deg < 90.0)) throw DomainError("elevation mask outside [0, 90)");
    std::map<std::string, const PositionSample*> chosen;
    for (const auto& p : positions) {
        if (std::abs(p.t - t) > 0.5) continue;
        chosen[p.sat_id] = &p;
    }
    std::vector<VisibleSat> out;
    for (const auto& [id, p] : chosen) {
        const auto r = ecef_to_enu(site, p->ecef);
        if (r.elevation >= mask_deg) out.push_back(make_visible(id, r));
    }
    return out;
}

}  // namespace biasbound::orbits
