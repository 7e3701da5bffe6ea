#pragma once

// CSV / JSON surfaces: scan time series, histograms, geometry files and
// sampled signals.

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasbound/core.hpp"
#include "biasbound/orbits.hpp"
#include "biasbound/scan.hpp"
#include "biasbound/signal_model.hpp"
#include "biasbound/track_geometry.hpp"

namespace biasbound::io {

using nlohmann::json;

inline constexpr std::string_view series_header = "week,sow,n_visible,best_m_s,sat_a,sat_b";
inline constexpr std::string_view histogram_header = "bin_low,bin_high,rel_freq";

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

inline void write_series_csv(std::ostream& os, std::span<const scan::EpochResult> results) {
    os << series_header << '\n';
    for (const auto& r : results) {
        os << r.t.week << ',' << format_double(r.t.sow) << ',' << r.n_visible << ',';
        if (r.best_m_s) os << format_double(*r.best_m_s);
        os << ',';
        if (r.best_pair) os << r.best_pair->first << ',' << r.best_pair->second;
        else os << ',';
        os << '\n';
    }
}

inline json series_json(std::span<const scan::EpochResult> results) {
    json arr = json::array();
    for (const auto& r : results) {
        json o;
        o["week"] = r.t.week;
        o["sow"] = r.t.sow;
        o["n_visible"] = r.n_visible;
        o["best_m_s"] = r.best_m_s ? json(*r.best_m_s) : json(nullptr);
        o["sat_a"] = r.best_pair ? json(r.best_pair->first) : json(nullptr);
        o["sat_b"] = r.best_pair ? json(r.best_pair->second) : json(nullptr);
        if (!r.all_pair_values.empty()) {
            json pairs = json::array();
            for (const auto& p : r.all_pair_values) pairs.push_back({{"sat_a", p.sat_a}, {"sat_b", p.sat_b}, {"m_s", p.m_s}});
            o["all_pairs"] = std::move(pairs);
        }
        arr.push_back(std::move(o));
    }
    return arr;
}

/// Reads the series CSV back. Only the columns of the header are restored.
inline std::vector<scan::EpochResult> read_series_csv(std::string_view text) {
    const auto lines = orbits::detail::split_lines(text);
    if (lines.empty() || orbits::detail::trim(lines[0]) != series_header)
        throw ParseError("expected header " + std::string(series_header), 1);
    std::vector<scan::EpochResult> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (orbits::detail::is_blank(lines[i])) continue;
        std::vector<std::string_view> cols;
        std::string_view rest = lines[i];
        while (true) {
            const auto comma = rest.find(',');
            cols.push_back(orbits::detail::trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cols.size() != 6) throw ParseError("expected 6 columns", i + 1);
        const auto week = orbits::detail::parse_int(cols[0]);
        const auto sow = orbits::detail::parse_real(cols[1]);
        const auto nvis = orbits::detail::parse_int(cols[2]);
        if (!week || !sow || !nvis) throw ParseError("malformed series row", i + 1);
        scan::EpochResult r;
        r.t = orbits::GpsTime::make(*week, *sow);
        r.n_visible = *nvis;
        if (!cols[3].empty()) {
            const auto m = orbits::detail::parse_real(cols[3]);
            if (!m) throw ParseError("malformed best_m_s", i + 1);
            r.best_m_s = *m;
            r.best_pair = std::make_pair(std::string(cols[4]), std::string(cols[5]));
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

inline void write_histogram_csv(std::ostream& os, const scan::Histogram& h) {
    os << histogram_header << '\n';
    if (h.underflow > 0.0)
        os << "-inf," << format_double(h.bin_edges.front()) << ',' << format_double(h.underflow) << '\n';
    for (std::size_t i = 0; i < h.relative_frequency.size(); ++i)
        os << format_double(h.bin_edges[i]) << ',' << format_double(h.bin_edges[i + 1]) << ','
           << format_double(h.relative_frequency[i]) << '\n';
    os << format_double(h.bin_edges.back()) << ",inf," << format_double(h.overflow) << '\n';
}

inline json histogram_json(const scan::Histogram& h) {
    json bins = json::array();
    for (std::size_t i = 0; i < h.relative_frequency.size(); ++i)
        bins.push_back({{"bin_low", h.bin_edges[i]}, {"bin_high", h.bin_edges[i + 1]}, {"rel_freq", h.relative_frequency[i]}});
    return {{"bins", bins}, {"underflow", h.underflow}, {"overflow", h.overflow}, {"count", h.count}};
}

// ---------------------------------------------------------------------------
// Geometry files
// ---------------------------------------------------------------------------

struct GeometryFile {
    double track_azimuth = 90.0;  // deg
    std::vector<track::SatGeometry> satellites;
};

/// Either a list of satellites or {"track_azimuth": deg, "satellites": [...]}.
/// Each satellite is {sat_id, f, h} or {sat_id, elevation, azimuth} in degrees.
inline GeometryFile parse_geometry(const json& doc) {
    GeometryFile out;
    const json* list = &doc;
    if (doc.is_object()) {
        if (doc.contains("track_azimuth")) out.track_azimuth = doc.at("track_azimuth").get<double>();
        if (!doc.contains("satellites")) throw ParseError("geometry object lacks \"satellites\"", 0);
        list = &doc.at("satellites");
    }
    if (!list->is_array()) throw ParseError("geometry satellites must be a JSON array", 0);
    const auto frame = track::frenet_frame({}, deg2rad(out.track_azimuth), track::CurvatureSide::straight);

    std::size_t idx = 0;
    for (const auto& s : *list) {
        ++idx;
        if (!s.is_object()) throw ParseError("satellite entry " + std::to_string(idx) + " is not an object", 0);
        std::string id = s.contains("sat_id") ? (s.at("sat_id").is_string() ? s.at("sat_id").get<std::string>()
                                                                              : s.at("sat_id").dump())
                                              : "S" + std::to_string(idx);
        if (s.contains("f") && s.contains("h")) {
            const double f = s.at("f").get<double>(), h = s.at("h").get<double>();
            if (!(f * f + h * h <= 1.0 + 1e-12))
                throw DomainError("satellite " + id + ": directional cosines outside the unit disc");
            out.satellites.push_back(track::from_cosines(std::move(id), f, h));
        } else if (s.contains("elevation") && s.contains("azimuth")) {
            const double el = deg2rad(s.at("elevation").get<double>());
            const double az = deg2rad(s.at("azimuth").get<double>());
            const Vec3 dir{std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el)};
            out.satellites.push_back(track::directional_cosines(std::move(id), dir, frame));
        } else {
            throw ParseError("satellite entry " + std::to_string(idx) + " needs {f, h} or {elevation, azimuth}", 0);
        }
    }
    return out;
}

inline json geometry_json(std::span<const track::SatGeometry> sats) {
    json arr = json::array();
    for (const auto& s : sats) arr.push_back({{"sat_id", s.sat_id}, {"f", s.f}, {"h", s.h}});
    return arr;
}

// ---------------------------------------------------------------------------
// Signals
// ---------------------------------------------------------------------------

/// Columns k, re, im with k = 1..N.
inline void write_signal_csv(std::ostream& os, const signal::SampledSignal& s) {
    os << "k,re,im\n";
    for (std::size_t k = 0; k < s.size(); ++k)
        os << (k + 1) << ',' << format_double(s[k].real()) << ',' << format_double(s[k].imag()) << '\n';
}

}  // namespace biasbound::io
