#pragma once

// Code-spread baseband signal model, maximum-likelihood delay estimation and
// the first-order worst-case delay bias under a power-bounded interference.
//
// Sign conventions. Samples are w(kT - tau), k = 1..N, and w' denotes the
// derivative of w with respect to its own argument, so d/dtau w(kT - tau) =
// -w'(kT - tau). With L(tau) = -||z - w_tau||^2 / (2 sigma^2) + const,
//
//   sigma^2 dL/dtau   =  Re<w - z, w'>
//   sigma^2 d2L/dtau2 = -(||w'||^2 + Re<w - z, w''>)
//
// and a small interference dy moves the stationary point by
//
//   dtau = -Re<dy, w'> / (||w'||^2 + Re<w - z, w''>),
//
// hence |dtau| <= M_tau ||dy|| with M_tau = ||w'|| / | ||w'||^2 + Re<w - z, w''> |,
// equality for dy parallel to w'.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "biasbound/core.hpp"

namespace biasbound::signal {

using Complex = std::complex<double>;

inline constexpr std::size_t ca_code_length = 1023;
inline constexpr double ca_chipping_rate = 1.023e6;  // chips/s

// ---------------------------------------------------------------------------
// C/A code
// ---------------------------------------------------------------------------

struct ChipSequence {
    std::vector<std::int8_t> chips;  // +1 / -1
    int prn_id = 0;
    double chipping_rate = ca_chipping_rate;

    std::size_t size() const { return chips.size(); }
    double chip_duration() const { return 1.0 / chipping_rate; }
    double period() const { return static_cast<double>(chips.size()) / chipping_rate; }
};

namespace detail {
// G2 phase-selector taps (1-based stage numbers) for PRN 1..32.
inline constexpr std::array<std::array<int, 2>, 32> ca_g2_taps{{
    {2, 6}, {3, 7}, {4, 8}, {5, 9}, {1, 9}, {2, 10}, {1, 8}, {2, 9},
    {3, 10}, {2, 3}, {3, 4}, {5, 6}, {6, 7}, {7, 8}, {8, 9}, {9, 10},
    {1, 4}, {2, 5}, {3, 6}, {4, 7}, {5, 8}, {6, 9}, {1, 3}, {4, 6},
    {5, 7}, {6, 8}, {7, 9}, {8, 10}, {1, 6}, {2, 7}, {3, 8}, {4, 9},
}};
}  // namespace detail

/// 1023-chip GPS C/A Gold code, chips mapped {0 -> +1, 1 -> -1}.
inline ChipSequence generate_ca_code(int prn) {
    if (prn < 1 || prn > 32) throw DomainError("unsupported PRN " + std::to_string(prn) + " (expected 1..32)");
    const auto [tap_a, tap_b] = detail::ca_g2_taps[static_cast<std::size_t>(prn - 1)];

    std::array<int, 10> g1{};
    std::array<int, 10> g2{};
    g1.fill(1);
    g2.fill(1);

    ChipSequence code;
    code.prn_id = prn;
    code.chips.reserve(ca_code_length);
    for (std::size_t i = 0; i < ca_code_length; ++i) {
        const int bit = g1[9] ^ g2[tap_a - 1] ^ g2[tap_b - 1];
        code.chips.push_back(bit == 0 ? std::int8_t{1} : std::int8_t{-1});

        // G1 = 1 + x^3 + x^10, G2 = 1 + x^2 + x^3 + x^6 + x^8 + x^9 + x^10
        const int f1 = g1[2] ^ g1[9];
        const int f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
        std::rotate(g1.rbegin(), g1.rbegin() + 1, g1.rend());
        std::rotate(g2.rbegin(), g2.rbegin() + 1, g2.rend());
        g1[0] = f1;
        g2[0] = f2;
    }
    return code;
}

// ---------------------------------------------------------------------------
// Sampled signals
// ---------------------------------------------------------------------------

class SampledSignal {
public:
    SampledSignal() = default;

    SampledSignal(std::vector<Complex> samples, double sampling_period)
        : samples_(std::move(samples)), sampling_period_(sampling_period) {
        if (!(sampling_period_ > 0.0)) throw DomainError("sampling period must be positive");
        for (const auto& s : samples_) {
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
                throw DomainError("signal contains a non-finite sample");
        }
    }

    static SampledSignal zeros(std::size_t n, double sampling_period) {
        return SampledSignal(std::vector<Complex>(n), sampling_period);
    }

    std::size_t size() const { return samples_.size(); }
    double sampling_period() const { return sampling_period_; }
    std::span<const Complex> samples() const { return samples_; }
    const Complex& operator[](std::size_t k) const { return samples_[k]; }

    friend SampledSignal operator+(const SampledSignal& a, const SampledSignal& b) {
        require_same_length(a, b);
        std::vector<Complex> out(a.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.samples_[k] + b.samples_[k];
        return SampledSignal(std::move(out), a.sampling_period_);
    }

    friend SampledSignal operator-(const SampledSignal& a, const SampledSignal& b) {
        require_same_length(a, b);
        std::vector<Complex> out(a.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.samples_[k] - b.samples_[k];
        return SampledSignal(std::move(out), a.sampling_period_);
    }

    friend SampledSignal operator*(Complex c, const SampledSignal& a) {
        std::vector<Complex> out(a.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = c * a.samples_[k];
        return SampledSignal(std::move(out), a.sampling_period_);
    }

    static void require_same_length(const SampledSignal& a, const SampledSignal& b) {
        if (a.size() != b.size())
            throw DomainError("signal length mismatch: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    }

private:
    std::vector<Complex> samples_;
    double sampling_period_ = 1.0;
};

/// <a, b> = sum_k conj(a_k) b_k
inline Complex inner(const SampledSignal& a, const SampledSignal& b) {
    SampledSignal::require_same_length(a, b);
    Complex acc{};
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::conj(a[k]) * b[k];
    return acc;
}

/// Re<a, b>, the inner product of the signals viewed as real 2N-vectors.
inline double real_inner(const SampledSignal& a, const SampledSignal& b) {
    SampledSignal::require_same_length(a, b);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k].real() * b[k].real() + a[k].imag() * b[k].imag();
    return acc;
}

inline double norm(const SampledSignal& a) { return std::sqrt(real_inner(a, a)); }

inline double max_abs(const SampledSignal& a) {
    double m = 0.0;
    for (const auto& s : a.samples()) m = std::max(m, std::abs(s));
    return m;
}

// ---------------------------------------------------------------------------
// Waveform
// ---------------------------------------------------------------------------

struct WaveformSpec {
    ChipSequence code;
    double amplitude = 1.0;        // r
    double phase = 0.0;            // phi, radians
    double pulse_smoothing = 0.0;  // Gaussian kernel std applied to chip edges, seconds
    double sampling_period = 0.0;  // T, seconds
    std::size_t num_samples = 0;

    /// One code period at `samples_per_chip`, chip edges smoothed by
    /// `smoothing_chips` chip durations.
    static WaveformSpec for_code(ChipSequence code, int samples_per_chip = 4, double smoothing_chips = 0.1) {
        WaveformSpec spec;
        const double tc = code.chip_duration();
        spec.num_samples = code.size() * static_cast<std::size_t>(samples_per_chip);
        spec.sampling_period = code.period() / static_cast<double>(spec.num_samples);
        spec.pulse_smoothing = smoothing_chips * tc;
        spec.code = std::move(code);
        return spec;
    }

    double chip_duration() const { return code.chip_duration(); }
    double code_period() const { return code.period(); }

    void validate() const {
        if (code.chips.empty()) throw DomainError("waveform has an empty code");
        if (!(amplitude > 0.0)) throw DomainError("amplitude must be positive");
        if (!(pulse_smoothing > 0.0))
            throw DomainError("pulse smoothing must be positive: w' is undefined at sharp chip edges");
        if (!(sampling_period > 0.0)) throw DomainError("sampling period must be positive");
        if (static_cast<double>(num_samples) * sampling_period < code_period() * (1.0 - 1e-12))
            throw DomainError("samples do not cover a full code period");
    }
};

namespace detail {

inline double gauss_pdf(double u) {
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * u * u);
}

inline double gauss_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

/// Smoothed periodic chip train and its first two derivatives with respect to
/// time, evaluated at chip-unit position x. Derivatives are per chip^n.
struct PulseTrain {
    const ChipSequence& code;
    double s;  // kernel std in chips
    int reach;

    PulseTrain(const ChipSequence& c, double smoothing_chips)
        : code(c), s(smoothing_chips), reach(static_cast<int>(std::ceil(9.0 * smoothing_chips)) + 1) {}

    int chip(long j) const {
        const long n = static_cast<long>(code.size());
        long m = j % n;
        if (m < 0) m += n;
        return code.chips[static_cast<std::size_t>(m)];
    }

    std::array<double, 3> eval(double x, int max_order) const {
        const double n = static_cast<double>(code.size());
        x = std::fmod(x, n);
        if (x < 0.0) x += n;
        const long k = static_cast<long>(std::floor(x));

        std::array<double, 3> out{0.0, 0.0, 0.0};
        for (long j = k - reach; j <= k + reach; ++j) {
            const double u0 = (x - static_cast<double>(j)) / s;
            const double u1 = u0 - 1.0 / s;
            out[0] += chip(j) * (gauss_cdf(u0) - gauss_cdf(u1));
        }
        if (max_order >= 1) {
            // Derivatives only see chip transitions: sum_j (c_j - c_{j-1}) phi(u_j).
            for (long j = k - reach; j <= k + reach + 1; ++j) {
                const int jump = chip(j) - chip(j - 1);
                if (jump == 0) continue;
                const double u = (x - static_cast<double>(j)) / s;
                const double p = gauss_pdf(u);
                out[1] += jump * p / s;
                if (max_order >= 2) out[2] += -jump * u * p / (s * s);
            }
        }
        return out;
    }
};

}  // namespace detail

/// Samples of w, w' and w'' at kT - tau, k = 1..N.
struct WaveformSamples {
    SampledSignal w;
    SampledSignal w1;
    SampledSignal w2;
};

inline WaveformSamples sample_waveform_all(const WaveformSpec& spec, double tau, int max_order = 2) {
    spec.validate();
    const double tc = spec.chip_duration();
    const detail::PulseTrain train(spec.code, spec.pulse_smoothing / tc);
    const Complex gain = std::polar(spec.amplitude, spec.phase);

    std::vector<Complex> w(spec.num_samples), w1, w2;
    if (max_order >= 1) w1.resize(spec.num_samples);
    if (max_order >= 2) w2.resize(spec.num_samples);
    for (std::size_t i = 0; i < spec.num_samples; ++i) {
        const double t = static_cast<double>(i + 1) * spec.sampling_period - tau;
        const auto v = train.eval(t / tc, max_order);
        w[i] = gain * v[0];
        if (max_order >= 1) w1[i] = gain * (v[1] / tc);
        if (max_order >= 2) w2[i] = gain * (v[2] / (tc * tc));
    }
    WaveformSamples out;
    out.w = SampledSignal(std::move(w), spec.sampling_period);
    if (max_order >= 1) out.w1 = SampledSignal(std::move(w1), spec.sampling_period);
    if (max_order >= 2) out.w2 = SampledSignal(std::move(w2), spec.sampling_period);
    return out;
}

/// w(kT - tau) for derivative_order 0, w'(kT - tau) for 1, w''(kT - tau) for 2.
inline SampledSignal sample_waveform(const WaveformSpec& spec, double tau, int derivative_order) {
    if (derivative_order < 0 || derivative_order > 2)
        throw DomainError("derivative order must be 0, 1 or 2");
    auto all = sample_waveform_all(spec, tau, derivative_order);
    switch (derivative_order) {
        case 0: return std::move(all.w);
        case 1: return std::move(all.w1);
        default: return std::move(all.w2);
    }
}

// ---------------------------------------------------------------------------
// Maximum-likelihood delay
// ---------------------------------------------------------------------------

struct DelayWindow {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

struct DelayEstimate {
    double tau = 0.0;
    /// |dL/dtau| / ||w'||^2 with time measured in chips.
    double stationarity = 0.0;
    int iterations = 0;
};

struct EstimatorOptions {
    int max_iterations = 50;
    double step_tolerance_chips = 1e-12;
    double stationarity_tolerance = 1e-9;
};

namespace detail {

struct Stationarity {
    double slope;      // Re<w - z, w'>
    double curvature;  // ||w'||^2 + Re<w - z, w''>  (= -d slope / dtau)
    double w1_norm2;
};

inline Stationarity stationarity_at(const SampledSignal& z, const WaveformSpec& spec, double tau) {
    const auto s = sample_waveform_all(spec, tau, 2);
    const auto residual = s.w - z;
    const double w1n2 = real_inner(s.w1, s.w1);
    return {real_inner(residual, s.w1), w1n2 + real_inner(residual, s.w2), w1n2};
}

}  // namespace detail

/// Quarter-chip grid search on ||z - w_tau||^2 over the window, then
/// bracketed Newton refinement of the stationarity condition dL/dtau = 0.
inline DelayEstimate ml_delay_estimate(const SampledSignal& z, const WaveformSpec& spec, DelayWindow window,
                                       const EstimatorOptions& opt = {}) {
    spec.validate();
    if (z.size() != spec.num_samples)
        throw DomainError("received signal length " + std::to_string(z.size()) + " does not match waveform length " +
                          std::to_string(spec.num_samples));
    const double tc = spec.chip_duration();
    if (!(window.width() > 0.0)) throw DomainError("empty delay search window");
    if (window.width() < 2.0 * tc * (1.0 - 1e-12)) throw DomainError("delay search window narrower than 2 chips");

    const double grid_step = tc / 4.0;
    const auto n_grid = static_cast<std::size_t>(std::floor(window.width() / grid_step * (1.0 + 1e-12))) + 1;
    std::size_t best = 0;
    double best_cost = INFINITY;
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double tau = window.lo + static_cast<double>(i) * grid_step;
        const auto w = sample_waveform(spec, tau, 0);
        const auto d = z - w;
        const double cost = real_inner(d, d);
        if (cost < best_cost) {
            best_cost = cost;
            best = i;
        }
    }
    const double centre = window.lo + static_cast<double>(best) * grid_step;
    double a = std::max(window.lo, centre - grid_step);
    double b = std::min(window.hi, centre + grid_step);

    // slope > 0 left of a maximum, < 0 right of it
    const double slope_a = detail::stationarity_at(z, spec, a).slope;
    const double slope_b = detail::stationarity_at(z, spec, b).slope;
    if (slope_a < 0.0 || slope_b > 0.0 || (slope_a == 0.0 && slope_b == 0.0))
        throw DomainError("no stationary point of the likelihood inside the search window");
    if (slope_a == 0.0) return {a, 0.0, 0};
    if (slope_b == 0.0) return {b, 0.0, 0};

    double tau = centre;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const auto st = detail::stationarity_at(z, spec, tau);
        if (st.slope > 0.0) a = tau;
        else if (st.slope < 0.0) b = tau;

        double next = st.curvature > 0.0 ? tau + st.slope / st.curvature : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        const double step = next - tau;
        tau = next;
        if (std::abs(step) <= opt.step_tolerance_chips * tc || st.slope == 0.0) {
            const auto fin = detail::stationarity_at(z, spec, tau);
            const double resid = std::abs(fin.slope) / (fin.w1_norm2 * tc);
            if (resid > opt.stationarity_tolerance)
                throw ConvergenceError("delay refinement stalled above the stationarity tolerance", tau);
            return {tau, resid, it};
        }
    }
    throw ConvergenceError("delay refinement did not converge in " + std::to_string(opt.max_iterations) +
                               " iterations",
                           tau);
}

// ---------------------------------------------------------------------------
// Magnification coefficient and worst interference
// ---------------------------------------------------------------------------

/// M_tau = ||w'|| / | ||w'||^2 + Re<w - z, w''> |, all signals at the
/// unperturbed optimum. Seconds of delay per unit interference norm.
inline double magnification_tau(const SampledSignal& z, const SampledSignal& w, const SampledSignal& w1,
                                const SampledSignal& w2) {
    SampledSignal::require_same_length(z, w);
    SampledSignal::require_same_length(w, w1);
    SampledSignal::require_same_length(w1, w2);
    const double w1n2 = real_inner(w1, w1);
    const double curvature = w1n2 + real_inner(w - z, w2);
    if (!(std::abs(curvature) >= 1e-12 * w1n2))
        throw DegenerateError("likelihood curvature vanishes: no first-order delay bound");
    return std::sqrt(w1n2) / std::abs(curvature);
}

/// The power-constrained interference that maximises the first-order delay
/// bias: sqrt(power) * w' / ||w'||.
inline SampledSignal worst_interference(const SampledSignal& w1, double power) {
    if (!(power > 0.0)) throw DomainError("interference power must be positive");
    const double n = norm(w1);
    if (n == 0.0) throw DegenerateError("derivative signal is identically zero");
    return Complex(std::sqrt(power) / n, 0.0) * w1;
}

// ---------------------------------------------------------------------------
// Simulation harness
// ---------------------------------------------------------------------------

struct NoiseConfig {
    double sigma = 0.0;  // per real component
    std::uint64_t seed = 0;
};

/// Circularly symmetric complex Gaussian noise, std `sigma` per component.
inline SampledSignal complex_gaussian_noise(std::size_t n, double sampling_period, const NoiseConfig& cfg) {
    if (!(cfg.sigma >= 0.0)) throw DomainError("noise sigma must be non-negative");
    std::vector<Complex> out(n);
    if (cfg.sigma > 0.0) {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> gauss(0.0, cfg.sigma);
        for (auto& v : out) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            v = {re, im};
        }
    }
    return SampledSignal(std::move(out), sampling_period);
}

struct TauPerturbation {
    double tau0 = 0.0;
    double m_tau = 0.0;
    double delta_tau_bound = 0.0;
    std::optional<double> delta_tau_empirical;
    double interference_norm = 0.0;
};

/// Search window of +/- 2 chips around `tau`.
inline DelayWindow window_around(const WaveformSpec& spec, double tau) {
    const double tc = spec.chip_duration();
    return {tau - 2.0 * tc, tau + 2.0 * tc};
}

/// z = w(. - tau_true) + n
inline SampledSignal simulate_received(const WaveformSpec& spec, double tau_true, const NoiseConfig& noise) {
    return sample_waveform(spec, tau_true, 0) +
           complex_gaussian_noise(spec.num_samples, spec.sampling_period, noise);
}

/// Unperturbed estimate tau0 and the signals M_tau is evaluated with.
struct Unperturbed {
    SampledSignal z;
    DelayEstimate estimate;
    WaveformSamples at_tau0;
    double m_tau = 0.0;
};

inline Unperturbed unperturbed_solution(const WaveformSpec& spec, double tau_true, const NoiseConfig& noise) {
    Unperturbed u;
    u.z = simulate_received(spec, tau_true, noise);
    u.estimate = ml_delay_estimate(u.z, spec, window_around(spec, tau_true));
    u.at_tau0 = sample_waveform_all(spec, u.estimate.tau, 2);
    u.m_tau = magnification_tau(u.z, u.at_tau0.w, u.at_tau0.w1, u.at_tau0.w2);
    return u;
}

/// Estimates tau0 from z = w + n and tau0 + dtau from z + interference.
inline TauPerturbation perturbation_experiment(const WaveformSpec& spec, double tau_true, const NoiseConfig& noise,
                                               const SampledSignal& interference) {
    if (interference.size() != spec.num_samples)
        throw DomainError("interference length does not match the generated signal");
    const auto base = unperturbed_solution(spec, tau_true, noise);
    const auto perturbed = ml_delay_estimate(base.z + interference, spec, window_around(spec, tau_true));

    TauPerturbation out;
    out.tau0 = base.estimate.tau;
    out.m_tau = base.m_tau;
    out.interference_norm = norm(interference);
    out.delta_tau_bound = out.m_tau * out.interference_norm;
    out.delta_tau_empirical = perturbed.tau - base.estimate.tau;
    return out;
}

/// Same experiment with the interference chosen as the worst mode at tau0.
inline TauPerturbation worst_mode_experiment(const WaveformSpec& spec, double tau_true, const NoiseConfig& noise,
                                             double power) {
    const auto base = unperturbed_solution(spec, tau_true, noise);
    return perturbation_experiment(spec, tau_true, noise, worst_interference(base.at_tau0.w1, power));
}

}  // namespace biasbound::signal
