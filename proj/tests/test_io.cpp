#include <gtest/gtest.h>

#include <sstream>

#include "biasbound/io.hpp"

using namespace biasbound;
using namespace biasbound::io;

namespace {

std::vector<scan::EpochResult> sample_series() {
    std::vector<scan::EpochResult> r(3);
    r[0].t = orbits::GpsTime::make(1865, 259217.0);
    r[0].n_visible = 8;
    r[0].best_m_s = 1.25;
    r[0].best_pair = std::make_pair("G05", "G12");
    r[1].t = orbits::GpsTime::make(1865, 259277.0);
    r[1].n_visible = 2;
    r[2].t = orbits::GpsTime::make(1865, 259337.5);
    r[2].n_visible = 9;
    r[2].best_m_s = 1.0 / 0.7;
    r[2].best_pair = std::make_pair("G01", "G30");
    return r;
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(2.0), "2.0");
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1e-20), "1e-20");
    EXPECT_EQ(format_double(INFINITY), "inf");
    EXPECT_EQ(format_double(-INFINITY), "-inf");
    const double x = 1.0 / 3.0;
    EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(SeriesCsv, LayoutAndRoundTrip) {
    const auto s = sample_series();
    std::ostringstream os;
    write_series_csv(os, s);
    const auto text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "week,sow,n_visible,best_m_s,sat_a,sat_b");
    EXPECT_NE(text.find("1865,259217.0,8,1.25,G05,G12\n"), std::string::npos);
    EXPECT_NE(text.find("1865,259277.0,2,,,\n"), std::string::npos);

    const auto back = read_series_csv(text);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(back[i].t.week, s[i].t.week);
        EXPECT_EQ(back[i].t.sow, s[i].t.sow);
        EXPECT_EQ(back[i].n_visible, s[i].n_visible);
        EXPECT_EQ(back[i].best_m_s, s[i].best_m_s);
        EXPECT_EQ(back[i].best_pair, s[i].best_pair);
    }
}

TEST(SeriesCsv, RejectsMalformedInput) {
    EXPECT_THROW(read_series_csv("a,b,c\n"), ParseError);
    try {
        read_series_csv("week,sow,n_visible,best_m_s,sat_a,sat_b\n1865,1.0,3,x,G1,G2\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2u);
    }
    EXPECT_THROW(read_series_csv("week,sow,n_visible,best_m_s,sat_a,sat_b\n1865,1.0\n"), ParseError);
}

TEST(SeriesJson, NullsForGaps) {
    const auto j = series_json(sample_series());
    ASSERT_EQ(j.size(), 3u);
    EXPECT_EQ(j[0]["sat_a"], "G05");
    EXPECT_EQ(j[0]["best_m_s"].get<double>(), 1.25);
    EXPECT_TRUE(j[1]["best_m_s"].is_null());
    EXPECT_FALSE(j[0].contains("all_pairs"));
}

TEST(HistogramCsv, Rows) {
    const std::vector<double> v{1.02, 1.07, 1.31, 3.4};
    const auto h = scan::histogram(std::span<const double>(v), 0.1);
    std::ostringstream os;
    write_histogram_csv(os, h);
    std::istringstream is(os.str());
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(is, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), 1u + 20u + 1u);
    EXPECT_EQ(rows[0], "bin_low,bin_high,rel_freq");
    EXPECT_EQ(rows[1], "1.0,1.1,0.5");
    EXPECT_EQ(rows[4], "1.3,1.4,0.25");
    EXPECT_EQ(rows.back(), "3.0,inf,0.25");

    const auto j = histogram_json(h);
    EXPECT_EQ(j["bins"].size(), 20u);
    EXPECT_EQ(j["count"], 4);
}

TEST(Geometry, ParsesCosinesAndAngles) {
    const auto doc = json::parse(R"({"track_azimuth": 90,
        "satellites": [{"sat_id": "A", "f": -0.5, "h": 0.1},
                       {"sat_id": "B", "elevation": 0, "azimuth": 270},
                       {"elevation": 90, "azimuth": 0}]})");
    const auto g = parse_geometry(doc);
    ASSERT_EQ(g.satellites.size(), 3u);
    EXPECT_EQ(g.satellites[0].f, -0.5);
    EXPECT_NEAR(g.satellites[1].f, 1.0, 1e-15);  // due West, track heading East
    EXPECT_NEAR(g.satellites[2].f, 0.0, 1e-15);
    EXPECT_EQ(g.satellites[2].sat_id, "S3");

    const auto list = parse_geometry(json::parse(R"([{"sat_id": 7, "f": 0.2, "h": 0.3}])"));
    EXPECT_EQ(list.satellites[0].sat_id, "7");
    const auto out = geometry_json(list.satellites);
    EXPECT_EQ(out[0]["h"].get<double>(), 0.3);
}

TEST(Geometry, Errors) {
    EXPECT_THROW(parse_geometry(json::parse(R"({"sats": []})")), ParseError);
    EXPECT_THROW(parse_geometry(json::parse(R"([{"f": 0.2}])")), ParseError);
    EXPECT_THROW(parse_geometry(json::parse(R"([3])")), ParseError);
    EXPECT_THROW(parse_geometry(json::parse(R"([{"f": 1.2, "h": 0.3}])")), DomainError);
}

TEST(SignalCsv, OneRowPerSample) {
    const signal::SampledSignal s({{1.0, -0.5}, {0.25, 0.0}}, 1e-6);
    std::ostringstream os;
    write_signal_csv(os, s);
    EXPECT_EQ(os.str(), "k,re,im\n1,1.0,-0.5\n2,0.25,0.0\n");
}
