#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "biasbound/orbits.hpp"
#include "orbit_oracle.hpp"

using namespace biasbound;
using namespace biasbound::orbits;
using biasbound::testing::oracle_position;

namespace {

const std::string nav_path = std::string(BIASBOUND_TEST_DATA) + "/brdc2800.15n";

const NavParseResult& nav() {
    static const NavParseResult r = read_rinex_nav(nav_path);
    return r;
}

std::vector<std::string> file_lines() {
    const auto text = read_text_file(nav_path);
    std::vector<std::string> out;
    for (auto v : detail::split_lines(text)) out.emplace_back(v);
    return out;
}

std::size_t end_of_header(const std::vector<std::string>& lines) {
    for (std::size_t i = 0; i < lines.size(); ++i)
        if (lines[i].find("END OF HEADER") != std::string::npos) return i;
    return lines.size();
}

/// Header plus the first `n` records of the shipped file.
std::string header_and_records(std::size_t n) {
    const auto lines = file_lines();
    const auto h = end_of_header(lines);
    std::string out;
    for (std::size_t i = 0; i <= h + 8 * n && i < lines.size(); ++i) out += lines[i] + "\n";
    return out;
}

std::string replace_field(std::string text, std::size_t line_no, std::size_t col, const std::string& value) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < line_no; ++i) pos = text.find('\n', pos) + 1;
    text.replace(pos + col, value.size(), value);
    return text;
}

// Iterative inverse of the geodetic transform.
SiteLocation ecef_to_geodetic(const Vec3& p) {
    const double a = 6378137.0, f = 1.0 / 298.257223563, e2 = f * (2 - f);
    const double lon = std::atan2(p.y, p.x), rho = std::hypot(p.x, p.y);
    double lat = std::atan2(p.z, rho * (1 - e2)), h = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double N = a / std::sqrt(1 - e2 * std::sin(lat) * std::sin(lat));
        h = rho / std::cos(lat) - N;
        lat = std::atan2(p.z, rho * (1 - e2 * N / (N + h)));
    }
    return {rad2deg(lat), rad2deg(lon), h};
}

const SiteLocation madrid{40.4168, -3.7038, 650.0};

}  // namespace

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

TEST(GpsTime, CalendarExamples) {
    const auto epoch = gps_time_from_calendar(1980, 1, 6);
    EXPECT_EQ(epoch.week, 0);
    EXPECT_EQ(epoch.sow, 0.0);
    const auto t = gps_time_from_calendar(2015, 10, 7);
    EXPECT_EQ(t.week, 1865);
    EXPECT_EQ(t.sow, 3 * 86400.0);
    const auto utc = gps_time_from_utc(2015, 10, 7, 0, 0, 0.0, 17);
    EXPECT_EQ(utc - t, 17.0);
}

TEST(GpsTime, ArithmeticCrossesWeekBoundary) {
    const auto t = GpsTime::make(1865, 604790.0) + 20.0;
    EXPECT_EQ(t.week, 1866);
    EXPECT_NEAR(t.sow, 10.0, 1e-9);
    EXPECT_EQ(t - GpsTime::make(1865, 604790.0), 20.0);
    EXPECT_LT(GpsTime::make(1865, 5.0), GpsTime::make(1866, 0.0));
}

// ---------------------------------------------------------------------------
// RINEX parsing
// ---------------------------------------------------------------------------

TEST(RinexNav, HeaderOnlyFileHasNoRecords) {
    const auto r = parse_rinex_nav(header_and_records(0));
    EXPECT_TRUE(r.records.empty());
    EXPECT_TRUE(r.diagnostics.empty());
    EXPECT_DOUBLE_EQ(r.version, 2.0);
    EXPECT_EQ(r.leap_seconds, 17);
}

TEST(RinexNav, RecordCountMatchesBlockCount) {
    const auto lines = file_lines();
    std::size_t body = 0;
    for (std::size_t i = end_of_header(lines) + 1; i < lines.size(); ++i)
        if (!detail::is_blank(lines[i])) ++body;
    ASSERT_EQ(body % 8, 0u);
    EXPECT_EQ(nav().records.size(), body / 8);
    EXPECT_TRUE(nav().diagnostics.empty());
}

TEST(RinexNav, FirstRecordFields) {
    const auto& e = nav().records.front();
    EXPECT_EQ(e.prn, 1);
    EXPECT_EQ(e.sat_id(), "G01");
    EXPECT_EQ(e.toe.week, 1865);
    EXPECT_DOUBLE_EQ(e.toe.sow, 259200.0);
    EXPECT_DOUBLE_EQ(e.sqrt_a, 0.515366233826e4);
    EXPECT_DOUBLE_EQ(e.e, 0.475465832278e-2);
    EXPECT_DOUBLE_EQ(e.crs, -0.673437500000e2);
    EXPECT_DOUBLE_EQ(e.omega_dot, -0.804783528707e-8);
    EXPECT_DOUBLE_EQ(e.idot, 0.278583024704e-10);
    EXPECT_EQ(e.health, 0.0);
    EXPECT_EQ(e.toc.week, 1865);
    EXPECT_DOUBLE_EQ(e.toc.sow, 259200.0);
}

TEST(RinexNav, UnphysicalEccentricityIsSkippedWithDiagnostic) {
    auto text = header_and_records(2);
    const auto h = end_of_header(file_lines());
    // second orbit line of the first record, field 2: eccentricity
    text = replace_field(text, h + 3, 22, "0.150000000000D+01");
    const auto r = parse_rinex_nav(text);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].prn, 2);
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].line, h + 2);
}

TEST(RinexNav, TruncatedRecordResynchronizes) {
    const auto lines = file_lines();
    const auto h = end_of_header(lines);
    std::string text;
    for (std::size_t i = 0; i <= h + 4; ++i) text += lines[i] + "\n";  // header + half a record
    for (std::size_t i = h + 9; i <= h + 16; ++i) text += lines[i] + "\n";
    const auto r = parse_rinex_nav(text);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].prn, 2);
    EXPECT_EQ(r.diagnostics.size(), 1u);
}

TEST(RinexNav, BadHeaderIsFatalWithLine) {
    try {
        parse_rinex_nav("     3.04           N: GNSS NAV DATA    G: GPS              RINEX VERSION / TYPE\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 1u);
    }
    EXPECT_THROW(parse_rinex_nav("garbage\n"), ParseError);
    EXPECT_THROW(parse_rinex_nav(""), ParseError);
    auto no_end = header_and_records(0);
    no_end.replace(no_end.find("END OF HEADER"), 13, "COMMENT      ");
    EXPECT_THROW(parse_rinex_nav(no_end), ParseError);
    EXPECT_THROW(read_rinex_nav("/nonexistent/file.15n"), Error);
}

TEST(PositionCsv, ParsesAndRejectsForeignHeader) {
    const auto p = parse_position_csv("sat_id,week,sow,x_m,y_m,z_m\nG05,1865,259200,1.5e7,-2e7,3e6\n");
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].sat_id, "G05");
    EXPECT_EQ(p[0].t.week, 1865);
    EXPECT_EQ(p[0].ecef.y, -2e7);
    EXPECT_THROW(parse_position_csv("id,x,y,z\n"), ParseError);
    EXPECT_THROW(parse_position_csv("sat_id,week,sow,x_m,y_m,z_m\nG05,1865,abc,1,2,3\n"), ParseError);
}

// ---------------------------------------------------------------------------
// Kepler and propagation
// ---------------------------------------------------------------------------

TEST(Kepler, ResidualOverGrid) {
    for (double e : {0.0, 0.01, 0.1, 0.5, 0.9, 0.99}) {
        for (double M = -7.0; M <= 7.0; M += 0.05) {
            const double E = solve_kepler(M, e);
            EXPECT_NEAR(E - e * std::sin(E), M, 1e-11) << "e=" << e << " M=" << M;
        }
    }
}

TEST(Kepler, Errors) {
    EXPECT_THROW(solve_kepler(1.0, 1.0), DomainError);
    EXPECT_THROW(solve_kepler(1.0, -0.1), DomainError);
    try {
        solve_kepler(2.0, 0.99, 1);
        FAIL();
    } catch (const ConvergenceError& e) {
        EXPECT_TRUE(std::isfinite(e.last_iterate));
    }
}

TEST(Propagation, CircularUnperturbedOrbitKeepsRadius) {
    EphemerisRecord e;
    e.prn = 9;
    e.sqrt_a = 5153.7;
    e.i0 = deg2rad(55.0);
    e.toe = GpsTime::make(1865, 0.0);
    for (double dt = -14400.0; dt <= 14400.0; dt += 600.0) {
        const auto p = sat_position_ecef(e, e.toe + dt);
        EXPECT_NEAR(norm(p), 5153.7 * 5153.7, 1e-6);
        EXPECT_LE(std::abs(p.z), norm(p) * std::sin(deg2rad(55.0)) + 1e-6);
    }
    EXPECT_THROW(sat_position_ecef(e, e.toe + 14401.0), DomainError);
}

TEST(Propagation, MatchesIndependentModelOnRealFile) {
    for (const auto& e : nav().records) {
        for (double dt : {-7200.0, -1800.0, 0.0, 900.0, 7200.0}) {
            const auto t = e.toe + dt;
            EXPECT_LE(norm(sat_position_ecef(e, t) - oracle_position(e, t)), 1e-4) << e.sat_id();
        }
    }
}

TEST(Propagation, RadiusAndSpeedArePhysical) {
    for (const auto& e : nav().records) {
        const auto t = e.toe + 1234.0;
        const auto p = sat_position_ecef(e, t);
        EXPECT_GE(norm(p), 2.58e7);
        EXPECT_LE(norm(p), 2.72e7);
        // ECEF speed of GPS satellites, earth rotation included
        const double v = norm(sat_position_ecef(e, t + 0.5) - sat_position_ecef(e, t + -0.5));
        EXPECT_GE(v, 2500.0);
        EXPECT_LE(v, 4500.0);
    }
}

// ---------------------------------------------------------------------------
// Geodesy
// ---------------------------------------------------------------------------

TEST(Geodesy, ClosedFormPoints) {
    const auto eq = geodetic_to_ecef({0, 0, 0});
    EXPECT_NEAR(norm(eq - Vec3{6378137.0, 0, 0}), 0.0, 1e-6);
    const auto pole = geodetic_to_ecef({90, 0, 0});
    EXPECT_NEAR(pole.z, 6356752.314245, 1e-3);
    EXPECT_NEAR(std::hypot(pole.x, pole.y), 0.0, 1e-6);
    const auto raised = geodetic_to_ecef({0, 90, 1000});
    EXPECT_NEAR(norm(raised - Vec3{0, 6379137.0, 0}), 0.0, 1e-6);
    EXPECT_THROW(geodetic_to_ecef({91, 0, 0}), DomainError);
}

TEST(Geodesy, RoundTripsThroughIndependentInverse) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-179.9, 180.0), h(-400.0, 9000.0);
    for (int i = 0; i < 1000; ++i) {
        const SiteLocation s{lat(rng), lon(rng), h(rng)};
        const auto back = ecef_to_geodetic(geodetic_to_ecef(s));
        EXPECT_NEAR(back.latitude, s.latitude, 1e-9);
        EXPECT_NEAR(back.longitude, s.longitude, 1e-9);
        EXPECT_NEAR(back.height, s.height, 1e-4);
    }
}

TEST(Enu, ZenithEastAndDistance) {
    const auto base = geodetic_to_ecef(madrid);
    const auto rot = enu_rotation(madrid);
    const auto up = ecef_to_enu(madrid, base + 2e7 * rot[2]);
    EXPECT_NEAR(up.elevation, 90.0, 1e-9);
    const auto east = ecef_to_enu(madrid, base + 1e5 * rot[0]);
    EXPECT_NEAR(east.elevation, 0.0, 1e-9);
    EXPECT_NEAR(east.azimuth, 90.0, 1e-9);
    const auto south = ecef_to_enu(madrid, base - 1e5 * rot[1] + 1e5 * rot[2]);
    EXPECT_NEAR(south.azimuth, 180.0, 1e-9);
    EXPECT_NEAR(south.elevation, 45.0, 1e-9);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1e7);
    for (int i = 0; i < 100; ++i) {
        const Vec3 p{g(rng), g(rng), g(rng)};
        EXPECT_NEAR(norm(ecef_to_enu(madrid, p).enu), norm(p - base), 1e-6);
    }
    EXPECT_THROW(ecef_to_enu(madrid, base), DomainError);
}

// ---------------------------------------------------------------------------
// Visibility
// ---------------------------------------------------------------------------

TEST(Visibility, CountsOverTheDayAndMaskMonotonicity) {
    const auto& recs = nav().records;
    const auto day = gps_time_from_calendar(2015, 10, 7);
    for (double s = 0.0; s < 86400.0; s += 1800.0) {
        const auto t = day + s;
        const auto v15 = visible_satellites(recs, madrid, t, 15.0);
        const auto v30 = visible_satellites(recs, madrid, t, 30.0);
        EXPECT_GE(v15.size(), 5u);
        EXPECT_LE(v15.size(), 14u);
        std::set<std::string> ids15;
        for (const auto& v : v15) {
            ids15.insert(v.sat_id);
            EXPECT_GE(v.elevation, 15.0);
            EXPECT_NEAR(norm(v.enu_unit_dir), 1.0, 1e-12);
        }
        EXPECT_EQ(ids15.size(), v15.size());
        EXPECT_TRUE(std::is_sorted(v15.begin(), v15.end(),
                                   [](const VisibleSat& a, const VisibleSat& b) { return a.sat_id < b.sat_id; }));
        for (const auto& v : v30) EXPECT_TRUE(ids15.count(v.sat_id)) << v.sat_id;
    }
}

TEST(Visibility, DeterministicAndPositionsAgree) {
    const auto& recs = nav().records;
    const auto t = gps_time_from_calendar(2015, 10, 7, 13, 20);
    const auto a = visible_satellites(recs, madrid, t, 15.0);
    const auto b = visible_satellites(recs, madrid, t, 15.0);
    ASSERT_EQ(a.size(), b.size());
    std::vector<PositionSample> pos;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].sat_id, b[i].sat_id);
        EXPECT_EQ(a[i].elevation, b[i].elevation);
    }
    for (int prn = 1; prn <= 32; ++prn)
        if (const auto* e = select_ephemeris(recs, prn, t)) pos.push_back({e->sat_id(), t, sat_position_ecef(*e, t)});
    const auto c = visible_satellites(pos, madrid, t, 15.0);
    ASSERT_EQ(c.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(c[i].elevation, a[i].elevation, 1e-9);
}

TEST(Visibility, EphemerisSelectionPrefersNearestToe) {
    const auto& recs = nav().records;
    const auto t = gps_time_from_calendar(2015, 10, 7, 3, 10);
    const auto* e = select_ephemeris(recs, 5, t);
    ASSERT_NE(e, nullptr);
    for (const auto& r : recs)
        if (r.prn == 5 && r.health == 0.0) {
            EXPECT_LE(std::abs(t - e->toe), std::abs(t - r.toe));
        }
    EXPECT_EQ(select_ephemeris(recs, 5, gps_time_from_calendar(2016, 1, 1)), nullptr);
}

TEST(Visibility, Errors) {
    EXPECT_THROW(visible_satellites(std::span<const EphemerisRecord>{}, madrid, {}, 15.0), Error);
    EXPECT_THROW(visible_satellites(nav().records, madrid, gps_time_from_calendar(2015, 10, 7), 95.0), DomainError);
}
