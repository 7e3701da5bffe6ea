// biasbound: command-line front end.
//
// Exit status: 0 success, 1 degenerate or inadmissible input, 2 usage or
// parse error. Data goes to stdout (or --output), diagnostics to stderr.

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "biasbound/biasbound.hpp"

using namespace biasbound;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_inadmissible = 1;
constexpr int exit_usage = 2;

/// Thrown for a valid run whose input admits no bound.
struct Inadmissible : Error {
    using Error::Error;
};

struct Output {
    std::string format;  // empty: subcommand default
    std::string path;

    std::string resolved(const char* fallback) const { return format.empty() ? fallback : format; }

    void write(const std::string& data) const {
        if (path.empty() || path == "-") {
            std::cout << data << std::flush;
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open output file " + path);
        out << data;
        if (!out) throw Error("write failed: " + path);
    }
};

void add_output_options(CLI::App* sub, Output& out, std::vector<std::string> formats) {
    sub->add_option("--format", out.format, "Output format")->check(CLI::IsMember(formats));
    sub->add_option("--output,-o", out.path, "Write to PATH instead of stdout");
}

/// key=value lines.
class TextRecord {
public:
    template <class T>
    TextRecord& add(const std::string& key, const T& value) {
        if constexpr (std::is_floating_point_v<T>) {
            ss_ << key << '=' << format_double(value) << '\n';
        } else {
            ss_ << key << '=' << value << '\n';
        }
        return *this;
    }
    std::string str() const { return ss_.str(); }

private:
    std::ostringstream ss_;
};

std::string csv_row(const std::vector<std::pair<std::string, std::string>>& fields) {
    std::string head, row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        head += (i ? "," : "") + fields[i].first;
        row += (i ? "," : "") + fields[i].second;
    }
    return head + "\n" + row + "\n";
}

// ---------------------------------------------------------------------------
// code
// ---------------------------------------------------------------------------

struct CodeArgs {
    int prn = 1;
    Output out;
};

int run_code(const CodeArgs& a) {
    const auto code = signal::generate_ca_code(a.prn);
    const auto fmt = a.out.resolved("text");
    std::ostringstream os;
    if (fmt == "json") {
        json chips = json::array();
        for (auto c : code.chips) chips.push_back(static_cast<int>(c));
        os << json{{"prn", a.prn}, {"chipping_rate", code.chipping_rate}, {"chips", chips}}.dump() << '\n';
    } else if (fmt == "csv") {
        os << "index,chip\n";
        for (std::size_t i = 0; i < code.size(); ++i) os << i << ',' << static_cast<int>(code.chips[i]) << '\n';
    } else {
        int first10 = 0;
        for (std::size_t i = 0; i < 10; ++i) first10 = (first10 << 1) | (code.chips[i] < 0 ? 1 : 0);
        std::string bits;
        for (auto c : code.chips) bits += c > 0 ? '+' : '-';
        std::ostringstream oct;
        oct << std::oct << first10;
        os << TextRecord().add("prn", a.prn).add("length", code.size()).add("first10_octal", oct.str()).add("chips", bits).str();
    }
    a.out.write(os.str());
    return exit_ok;
}

// ---------------------------------------------------------------------------
// interference / waveform
// ---------------------------------------------------------------------------

struct SignalArgs {
    int prn = 1;
    double tau_chips = 100.37;
    int samples_per_chip = 4;
    double smoothing = 0.1;

    signal::WaveformSpec spec() const {
        return signal::WaveformSpec::for_code(signal::generate_ca_code(prn), samples_per_chip, smoothing);
    }
};

void add_signal_options(CLI::App* sub, SignalArgs& s) {
    sub->add_option("--prn", s.prn, "GPS PRN 1-32")->check(CLI::Range(1, 32))->capture_default_str();
    sub->add_option("--tau", s.tau_chips, "True delay in chips")->capture_default_str();
    sub->add_option("--samples-per-chip", s.samples_per_chip)->check(CLI::Range(1, 64))->capture_default_str();
    sub->add_option("--smoothing", s.smoothing, "Chip-edge smoothing in chips")->capture_default_str();
}

struct InterferenceArgs {
    SignalArgs sig;
    double power = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string mode = "worst";
    Output out;
};

int run_interference(const InterferenceArgs& a) {
    const auto spec = a.sig.spec();
    const double tau = a.sig.tau_chips * spec.chip_duration();
    const signal::NoiseConfig noise{a.sigma, a.seed};
    signal::TauPerturbation r;
    if (a.mode == "worst") {
        r = signal::worst_mode_experiment(spec, tau, noise, a.power);
    } else {
        // random direction, drawn from a stream separate from the noise
        auto dir = signal::complex_gaussian_noise(spec.num_samples, spec.sampling_period, {1.0, a.seed ^ 0x9e3779b97f4a7c15ULL});
        const auto dy = signal::Complex(std::sqrt(a.power) / signal::norm(dir), 0.0) * dir;
        r = signal::perturbation_experiment(spec, tau, noise, dy);
    }
    const double emp = r.delta_tau_empirical.value_or(NAN);
    const double ratio = std::abs(emp) / r.delta_tau_bound;

    const auto fmt = a.out.resolved("text");
    std::ostringstream os;
    if (fmt == "json") {
        os << json{{"prn", a.sig.prn},     {"mode", a.mode},   {"power", a.power},
                   {"sigma", a.sigma},     {"seed", a.seed},   {"tau0", r.tau0},
                   {"m_tau", r.m_tau},     {"interference_norm", r.interference_norm},
                   {"delta_tau_bound", r.delta_tau_bound}, {"delta_tau_empirical", emp},
                   {"ratio", ratio}}
                  .dump()
           << '\n';
    } else if (fmt == "csv") {
        os << csv_row({{"tau0", format_double(r.tau0)},
                       {"m_tau", format_double(r.m_tau)},
                       {"interference_norm", format_double(r.interference_norm)},
                       {"delta_tau_bound", format_double(r.delta_tau_bound)},
                       {"delta_tau_empirical", format_double(emp)},
                       {"ratio", format_double(ratio)}});
    } else {
        os << TextRecord()
                  .add("tau0", r.tau0)
                  .add("m_tau", r.m_tau)
                  .add("interference_norm", r.interference_norm)
                  .add("delta_tau_bound", r.delta_tau_bound)
                  .add("delta_tau_empirical", emp)
                  .add("ratio", ratio)
                  .str();
    }
    a.out.write(os.str());
    return exit_ok;
}

struct WaveformArgs {
    SignalArgs sig;
    int order = 0;
    Output out;
};

int run_waveform(const WaveformArgs& a) {
    const auto spec = a.sig.spec();
    const auto w = signal::sample_waveform(spec, a.sig.tau_chips * spec.chip_duration(), a.order);
    std::ostringstream os;
    if (a.out.resolved("csv") == "json") {
        json re = json::array(), im = json::array();
        for (const auto& s : w.samples()) {
            re.push_back(s.real());
            im.push_back(s.imag());
        }
        os << json{{"sampling_period", w.sampling_period()}, {"re", re}, {"im", im}}.dump() << '\n';
    } else {
        io::write_signal_csv(os, w);
    }
    a.out.write(os.str());
    return exit_ok;
}

// ---------------------------------------------------------------------------
// track
// ---------------------------------------------------------------------------

struct TrackArgs {
    std::string geometry;
    Output out;
};

int run_track(const TrackArgs& a) {
    json doc;
    try {
        doc = json::parse(orbits::read_text_file(a.geometry));
    } catch (const json::exception& e) {
        throw ParseError(a.geometry + ": " + e.what(), 0);
    }
    const auto g = io::parse_geometry(doc);
    const auto& s = g.satellites;
    const auto fmt = a.out.resolved("text");
    std::ostringstream os;
    bool admissible = false;

    if (s.size() == 2) {
        const auto m = track::magnification_s(s[0], s[1]);
        admissible = m.admissible;
        if (fmt == "json") {
            os << json{{"satellites", io::geometry_json(s)},
                       {"admissible", m.admissible},
                       {"m_s", m.admissible ? json(m.m_s) : json(nullptr)}}
                      .dump()
               << '\n';
        } else if (fmt == "csv") {
            os << csv_row({{"sat_a", s[0].sat_id},
                           {"sat_b", s[1].sat_id},
                           {"admissible", m.admissible ? "true" : "false"},
                           {"m_s", m.admissible ? format_double(m.m_s) : ""}});
        } else {
            TextRecord t;
            t.add("admissible", m.admissible ? "true" : "false");
            if (m.admissible) t.add("m_s", m.m_s);
            os << t.str();
        }
    } else if (s.size() == 3) {
        const track::SatTriple t3{s[0], s[1], s[2]};
        const double d = track::determinant_d(t3);
        if (std::abs(d) <= 1e-9) throw DegenerateError("degenerate geometry: D = " + format_double(d));
        const auto perm = track::sign_condition(t3);
        const auto m = track::magnification_uv(t3);
        admissible = m.admissible;
        std::string perm_str = "none";
        if (perm) perm_str = std::to_string((*perm)[0]) + " " + std::to_string((*perm)[1]) + " " + std::to_string((*perm)[2]);
        if (fmt == "json") {
            os << json{{"satellites", io::geometry_json(s)},
                       {"d", d},
                       {"permutation", perm ? json(*perm) : json(nullptr)},
                       {"admissible", m.admissible},
                       {"m_u", m.admissible ? json(m.m_u) : json(nullptr)},
                       {"m_v", m.admissible ? json(m.m_v) : json(nullptr)}}
                      .dump()
               << '\n';
        } else if (fmt == "csv") {
            os << csv_row({{"d", format_double(d)},
                           {"permutation", perm_str},
                           {"admissible", m.admissible ? "true" : "false"},
                           {"m_u", m.admissible ? format_double(m.m_u) : ""},
                           {"m_v", m.admissible ? format_double(m.m_v) : ""}});
        } else {
            TextRecord t;
            t.add("d", d).add("permutation", perm_str).add("admissible", m.admissible ? "true" : "false");
            if (m.admissible) t.add("m_u", m.m_u).add("m_v", m.m_v);
            os << t.str();
        }
    } else {
        throw ParseError("geometry must list 2 or 3 satellites, got " + std::to_string(s.size()), 0);
    }
    a.out.write(os.str());
    if (!admissible)
        throw Inadmissible(s.size() == 2 ? "inadmissible: both satellites on the same side of the track normal"
                                         : "inadmissible: no ordering satisfies the sign condition");
    return exit_ok;
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

struct ScanArgs {
    std::string nav;
    std::string positions;
    double lat = 0.0, lon = 0.0, height = 0.0;
    double azimuth = 90.0;
    double mask = 15.0;
    double step = 60.0;
    std::string date;  // YYYY-MM-DD, UTC
    std::optional<double> leap_seconds;
    std::string policy = "best-pair";
    bool include_unhealthy = false;
    Output out;
};

std::optional<int> to_int(std::string_view s) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Start of the UTC day `date` as GPS time.
orbits::GpsTime utc_day_start(const std::string& date, double leap) {
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') throw DomainError("--date expects YYYY-MM-DD");
    const auto y = to_int(std::string_view(date).substr(0, 4));
    const auto m = to_int(std::string_view(date).substr(5, 2));
    const auto d = to_int(std::string_view(date).substr(8, 2));
    if (!y || !m || !d || *m < 1 || *d < 1) throw DomainError("--date expects YYYY-MM-DD");
    return orbits::gps_time_from_utc(*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d), 0, 0, 0.0, leap);
}

/// UTC day holding most of the given epochs.
orbits::GpsTime busiest_utc_day(const std::vector<orbits::GpsTime>& epochs, double leap) {
    std::map<long long, int> days;
    for (const auto& t : epochs) ++days[static_cast<long long>(std::floor((t.total_seconds() - leap) / 86400.0))];
    long long best = 0;
    int count = -1;
    for (const auto& [day, n] : days) {
        if (n > count) {
            best = day;
            count = n;
        }
    }
    return orbits::GpsTime::from_seconds(static_cast<double>(best) * 86400.0 + leap);
}

int run_scan(const ScanArgs& a) {
    scan::ScanConfig cfg;
    cfg.site = {a.lat, a.lon, a.height};
    cfg.track_azimuth = a.azimuth;
    cfg.mask = a.mask;
    cfg.step = a.step;
    cfg.pair_policy = a.policy == "all-pairs" ? scan::PairPolicy::all_pairs : scan::PairPolicy::best_pair;
    cfg.exclude_unhealthy = !a.include_unhealthy;

    std::vector<scan::EpochResult> results;
    if (!a.nav.empty()) {
        const auto parsed = orbits::read_rinex_nav(a.nav);
        for (const auto& d : parsed.diagnostics) std::cerr << a.nav << ':' << d.line << ": " << d.message << '\n';
        const double leap = a.leap_seconds.value_or(parsed.leap_seconds.value_or(16));
        std::vector<orbits::GpsTime> epochs;
        for (const auto& r : parsed.records) epochs.push_back(r.toc);
        if (epochs.empty()) throw Error(a.nav + ": no usable ephemeris records");
        cfg.start = a.date.empty() ? busiest_utc_day(epochs, leap) : utc_day_start(a.date, leap);
        cfg.end = cfg.start + 86400.0;
        results = scan::scan_ms(cfg, parsed.records);
    } else {
        const auto pos = orbits::parse_position_csv(orbits::read_text_file(a.positions));
        if (pos.empty()) throw Error(a.positions + ": no position samples");
        const double leap = a.leap_seconds.value_or(16);
        std::vector<orbits::GpsTime> epochs;
        for (const auto& p : pos) epochs.push_back(p.t);
        cfg.start = a.date.empty() ? busiest_utc_day(epochs, leap) : utc_day_start(a.date, leap);
        cfg.end = cfg.start + 86400.0;
        results = scan::scan_ms(cfg, pos);
    }

    std::ostringstream os;
    if (a.out.resolved("csv") == "json") os << io::series_json(results).dump() << '\n';
    else io::write_series_csv(os, results);
    a.out.write(os.str());

    std::size_t gaps = 0;
    for (const auto& r : results) gaps += r.best_m_s ? 0 : 1;
    if (gaps) std::cerr << "biasbound: " << gaps << " of " << results.size() << " epochs have no admissible pair\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// hist
// ---------------------------------------------------------------------------

struct HistArgs {
    std::string series;
    double bin_width = 0.1;
    double lo = 1.0;
    double hi = 3.0;
    Output out;
};

int run_hist(const HistArgs& a) {
    const auto series = io::read_series_csv(orbits::read_text_file(a.series));
    if (scan::present_values(series).empty()) throw Inadmissible("no epoch in the series carries a magnification value");
    const auto h = scan::histogram(std::span<const scan::EpochResult>(series), a.bin_width, a.lo, a.hi);
    std::ostringstream os;
    if (a.out.resolved("csv") == "json") os << io::histogram_json(h).dump() << '\n';
    else io::write_histogram_csv(os, h);
    a.out.write(os.str());
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bias bounds for satellite navigation: interference-induced delay bias and track-constrained position error"};
    app.require_subcommand(1);

    CodeArgs code;
    auto* c = app.add_subcommand("code", "GPS C/A code chips");
    c->add_option("--prn", code.prn, "GPS PRN 1-32")->required()->check(CLI::Range(1, 32));
    add_output_options(c, code.out, {"text", "csv", "json"});

    InterferenceArgs intf;
    auto* i = app.add_subcommand("interference", "ML delay shift under a power-bounded interference");
    add_signal_options(i, intf.sig);
    i->add_option("--power", intf.power, "Interference power ||dy||^2")->required()->check(CLI::PositiveNumber);
    i->add_option("--sigma", intf.sigma, "Noise std per real component")->check(CLI::NonNegativeNumber)->capture_default_str();
    i->add_option("--seed", intf.seed, "Noise seed")->capture_default_str();
    i->add_option("--mode", intf.mode, "Interference direction")->check(CLI::IsMember({"worst", "random"}))->capture_default_str();
    add_output_options(i, intf.out, {"text", "csv", "json"});

    WaveformArgs wave;
    auto* w = app.add_subcommand("waveform", "Sampled waveform or its delay derivatives");
    add_signal_options(w, wave.sig);
    w->add_option("--order", wave.order, "Derivative order")->check(CLI::Range(0, 2))->capture_default_str();
    add_output_options(w, wave.out, {"csv", "json"});

    TrackArgs trk;
    auto* t = app.add_subcommand("track", "Magnification coefficients for a 2- or 3-satellite geometry");
    t->add_option("--geometry", trk.geometry, "JSON geometry file")->required();
    add_output_options(t, trk.out, {"text", "csv", "json"});

    ScanArgs sc;
    auto* s = app.add_subcommand("scan", "Day-long M_s time series at a track site");
    auto* nav_opt = s->add_option("--nav", sc.nav, "RINEX 2 GPS navigation file");
    auto* pos_opt = s->add_option("--positions", sc.positions, "CSV sat_id,week,sow,x_m,y_m,z_m");
    nav_opt->excludes(pos_opt);
    s->add_option("--lat", sc.lat, "Site latitude, deg")->required();
    s->add_option("--lon", sc.lon, "Site longitude, deg")->required();
    s->add_option("--height", sc.height, "Ellipsoidal height, m")->capture_default_str();
    s->add_option("--azimuth", sc.azimuth, "Track azimuth, deg from North")->capture_default_str();
    s->add_option("--mask", sc.mask, "Elevation mask, deg")->capture_default_str();
    s->add_option("--step", sc.step, "Epoch step, s")->capture_default_str();
    s->add_option("--date", sc.date, "UTC day YYYY-MM-DD (default: the file's main day)");
    s->add_option("--leap-seconds", sc.leap_seconds, "GPS - UTC, s (default: file header, else 16)");
    s->add_option("--policy", sc.policy)->check(CLI::IsMember({"best-pair", "all-pairs"}))->capture_default_str();
    s->add_flag("--include-unhealthy", sc.include_unhealthy, "Keep satellites flagged unhealthy");
    add_output_options(s, sc.out, {"csv", "json"});

    HistArgs hist;
    auto* h = app.add_subcommand("hist", "Relative-frequency histogram of a scan series");
    h->add_option("--series", hist.series, "Series CSV from `scan`")->required();
    h->add_option("--bin-width", hist.bin_width)->capture_default_str();
    h->add_option("--min", hist.lo)->capture_default_str();
    h->add_option("--max", hist.hi)->capture_default_str();
    add_output_options(h, hist.out, {"csv", "json"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*c) return run_code(code);
        if (*i) return run_interference(intf);
        if (*w) return run_waveform(wave);
        if (*t) return run_track(trk);
        if (*s) {
            if (sc.nav.empty() && sc.positions.empty()) throw DomainError("scan needs --nav or --positions");
            return run_scan(sc);
        }
        if (*h) return run_hist(hist);
    } catch (const Inadmissible& e) {
        std::cerr << "biasbound: " << e.what() << '\n';
        return exit_inadmissible;
    } catch (const DegenerateError& e) {
        std::cerr << "biasbound: " << e.what() << '\n';
        return exit_inadmissible;
    } catch (const ConvergenceError& e) {
        std::cerr << "biasbound: " << e.what() << " (last iterate " << format_double(e.last_iterate) << ")\n";
        return exit_inadmissible;
    } catch (const ParseError& e) {
        std::cerr << "biasbound: parse error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "biasbound: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}
