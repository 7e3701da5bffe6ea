#pragma once

// Day-long sweep of the along-track magnification coefficient M_s over real
// constellation geometry at a fixed track site.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "biasbound/core.hpp"
#include "biasbound/orbits.hpp"
#include "biasbound/track_geometry.hpp"

namespace biasbound::scan {

enum class PairPolicy { best_pair, all_pairs };

struct ScanConfig {
    orbits::SiteLocation site;
    double track_azimuth = 90.0;  // deg clockwise from North
    double mask = 15.0;           // deg
    double step = 60.0;           // s
    orbits::GpsTime start;
    orbits::GpsTime end;  // exclusive
    PairPolicy pair_policy = PairPolicy::best_pair;
    bool exclude_unhealthy = true;

    void validate() const {
        site.validate();
        if (!(step > 0.0)) throw DomainError("scan step must be positive");
        if (!(start < end)) throw DomainError("scan start must precede its end");
        if (!(mask >= 0.0 && mask < 90.0)) throw DomainError("elevation mask outside [0, 90)");
    }
};

struct PairValue {
    std::string sat_a;
    std::string sat_b;
    double m_s = 0.0;
};

struct EpochResult {
    orbits::GpsTime t;
    int n_visible = 0;
    std::optional<double> best_m_s;
    std::optional<std::pair<std::string, std::string>> best_pair;
    std::vector<PairValue> all_pair_values;  // filled for PairPolicy::all_pairs
    std::vector<std::string> visible;        // sorted satellite ids
};

/// Admissible pairs (f1 f2 < 0) among the given satellites; pair ids ordered
/// lexicographically, list sorted by (m_s, ids).
inline std::vector<PairValue> admissible_pairs(std::span<const track::SatGeometry> sats) {
    std::vector<PairValue> out;
    for (std::size_t i = 0; i < sats.size(); ++i) {
        for (std::size_t j = i + 1; j < sats.size(); ++j) {
            const auto m = track::magnification_s(sats[i], sats[j]);
            if (!m.admissible) continue;
            auto a = sats[i].sat_id, b = sats[j].sat_id;
            if (b < a) std::swap(a, b);
            out.push_back({std::move(a), std::move(b), m.m_s});
        }
    }
    std::sort(out.begin(), out.end(), [](const PairValue& x, const PairValue& y) {
        if (x.m_s != y.m_s) return x.m_s < y.m_s;
        if (x.sat_a != y.sat_a) return x.sat_a < y.sat_a;
        return x.sat_b < y.sat_b;
    });
    return out;
}

/// One epoch from the satellites' directional cosines.
inline EpochResult evaluate_epoch(const orbits::GpsTime& t, std::vector<track::SatGeometry> sats, PairPolicy policy) {
    std::sort(sats.begin(), sats.end(),
              [](const track::SatGeometry& a, const track::SatGeometry& b) { return a.sat_id < b.sat_id; });
    EpochResult r;
    r.t = t;
    r.n_visible = static_cast<int>(sats.size());
    for (const auto& s : sats) r.visible.push_back(s.sat_id);
    auto pairs = admissible_pairs(sats);
    if (!pairs.empty()) {
        r.best_m_s = pairs.front().m_s;
        r.best_pair = std::make_pair(pairs.front().sat_a, pairs.front().sat_b);
    }
    if (policy == PairPolicy::all_pairs) r.all_pair_values = std::move(pairs);
    return r;
}

inline std::vector<track::SatGeometry> track_cosines(std::span<const orbits::VisibleSat> vis,
                                                     const track::FrenetFrame& frame) {
    std::vector<track::SatGeometry> out;
    out.reserve(vis.size());
    for (const auto& v : vis) out.push_back(track::directional_cosines(v.sat_id, v.enu_unit_dir, frame));
    return out;
}

namespace detail {

template <class VisibleAt>
std::vector<EpochResult> sweep(const ScanConfig& cfg, VisibleAt&& visible_at) {
    const auto frame = track::frenet_frame({}, deg2rad(cfg.track_azimuth), track::CurvatureSide::straight);
    const double span = cfg.end - cfg.start;
    const auto n = static_cast<std::size_t>(std::ceil(span / cfg.step - 1e-9));
    std::vector<EpochResult> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto t = orbits::GpsTime::make(cfg.start.week, cfg.start.sow + static_cast<double>(k) * cfg.step);
        const auto vis = visible_at(t);
        out.push_back(evaluate_epoch(t, track_cosines(vis, frame), cfg.pair_policy));
    }
    return out;
}

}  // namespace detail

/// Epochs start, start + step, ... < end. Epochs with no admissible pair keep
/// an empty best_m_s.
inline std::vector<EpochResult> scan_ms(const ScanConfig& cfg, std::span<const orbits::EphemerisRecord> ephs) {
    cfg.validate();
    if (ephs.empty()) throw Error("empty ephemeris set");
    const bool overlaps = std::any_of(ephs.begin(), ephs.end(), [&](const orbits::EphemerisRecord& e) {
        return (e.toe + e.validity_window) >= cfg.start && (e.toe + (-e.validity_window)) < cfg.end;
    });
    if (!overlaps) throw Error("ephemerides do not overlap the scan span");
    const orbits::VisibilityOptions vopt{cfg.exclude_unhealthy};
    return detail::sweep(cfg, [&](const orbits::GpsTime& t) {
        return orbits::visible_satellites(ephs, cfg.site, t, cfg.mask, vopt);
    });
}

inline std::vector<EpochResult> scan_ms(const ScanConfig& cfg, std::span<const orbits::PositionSample> positions) {
    cfg.validate();
    if (positions.empty()) throw Error("empty position set");
    const bool overlaps = std::any_of(positions.begin(), positions.end(), [&](const orbits::PositionSample& p) {
        return p.t >= cfg.start && p.t < cfg.end;
    });
    if (!overlaps) throw Error("positions do not overlap the scan span");
    return detail::sweep(cfg, [&](const orbits::GpsTime& t) {
        return orbits::visible_satellites(positions, cfg.site, t, cfg.mask);
    });
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

struct Histogram {
    std::vector<double> bin_edges;           // n + 1 strictly increasing
    std::vector<double> relative_frequency;  // n
    double underflow = 0.0;                  // below bin_edges.front()
    double overflow = 0.0;                   // at or above bin_edges.back()
    std::size_t count = 0;
};

inline Histogram histogram(std::span<const double> values, double bin_width, double lo = 1.0, double hi = 3.0) {
    if (!(bin_width > 0.0)) throw DomainError("bin width must be positive");
    if (!(hi > lo)) throw DomainError("histogram range is empty");
    if (values.empty()) throw DomainError("no values to histogram");
    const auto nbins = static_cast<std::size_t>(std::llround(std::ceil((hi - lo) / bin_width - 1e-9)));

    Histogram h;
    // snapped to a 1e-12 grid so 1.0 + 7 * 0.1 prints as 1.7
    auto snap = [](double x) { return std::abs(x) < 1e3 ? std::round(x * 1e12) / 1e12 : x; };
    for (std::size_t i = 0; i <= nbins; ++i)
        h.bin_edges.push_back(std::min(hi, snap(lo + static_cast<double>(i) * bin_width)));
    std::vector<std::size_t> counts(nbins, 0);
    std::size_t under = 0, over = 0;
    for (double v : values) {
        if (v < lo) {
            ++under;
        } else if (v >= hi) {
            ++over;
        } else {
            // edges are recomputed, so check the neighbour for rounding at bin boundaries
            auto i = std::min(nbins - 1, static_cast<std::size_t>((v - lo) / bin_width));
            if (v < h.bin_edges[i] && i > 0) --i;
            else if (v >= h.bin_edges[i + 1] && i + 1 < nbins) ++i;
            ++counts[i];
        }
    }
    const double total = static_cast<double>(values.size());
    for (auto c : counts) h.relative_frequency.push_back(static_cast<double>(c) / total);
    h.underflow = static_cast<double>(under) / total;
    h.overflow = static_cast<double>(over) / total;
    h.count = values.size();
    return h;
}

inline std::vector<double> present_values(std::span<const EpochResult> results) {
    std::vector<double> v;
    for (const auto& r : results)
        if (r.best_m_s) v.push_back(*r.best_m_s);
    return v;
}

/// Counts the present best_m_s values; gaps are ignored.
inline Histogram histogram(std::span<const EpochResult> results, double bin_width, double lo = 1.0,
                           double hi = 3.0) {
    const auto v = present_values(results);
    if (v.empty()) throw DomainError("no epoch carries a magnification value");
    return histogram(std::span<const double>(v), bin_width, lo, hi);
}

}  // namespace biasbound::scan
