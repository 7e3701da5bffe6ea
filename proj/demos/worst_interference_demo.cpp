// Delay shift of the ML estimate against the first-order bound M_tau ||dy||,
// for the worst interference direction and for random directions of the same
// power.
//
//   worst_interference_demo [prn] [sigma]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "biasbound/signal_model.hpp"

using namespace biasbound;
using namespace biasbound::signal;

int main(int argc, char** argv) {
    const int prn = argc > 1 ? std::atoi(argv[1]) : 1;
    const double sigma = argc > 2 ? std::atof(argv[2]) : 0.0;

    const auto spec = WaveformSpec::for_code(generate_ca_code(prn));
    const double tc = spec.chip_duration();
    const double tau_true = 100.37 * tc;
    const auto base = unperturbed_solution(spec, tau_true, {sigma, 7});
    const double wn = norm(base.at_tau0.w);

    std::printf("PRN %d, sigma %g: tau0 = %.6f chips, M_tau = %.4e s per unit norm\n", prn, sigma,
                base.estimate.tau / tc, base.m_tau);
    std::printf("%10s %14s %14s %10s %12s\n", "|dy|/|w|", "bound [chip]", "worst [chip]", "ratio", "random max");

    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (double rel : {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}) {
        const double size = rel * wn;
        const auto dy = worst_interference(base.at_tau0.w1, size * size);
        const auto est = ml_delay_estimate(base.z + dy, spec, window_around(spec, tau_true));
        const double shift = est.tau - base.estimate.tau;
        const double bound = base.m_tau * size;

        double random_max = 0.0;
        for (int k = 0; k < 20; ++k) {
            std::vector<Complex> v(spec.num_samples);
            for (auto& x : v) x = {g(rng), g(rng)};
            SampledSignal r(std::move(v), spec.sampling_period);
            r = Complex(size / norm(r), 0.0) * r;
            const auto e = ml_delay_estimate(base.z + r, spec, window_around(spec, tau_true));
            random_max = std::max(random_max, std::abs(e.tau - base.estimate.tau) / bound);
        }
        std::printf("%10.0e %14.4e %14.4e %10.5f %12.4f\n", rel, bound / tc, std::abs(shift) / tc,
                    std::abs(shift) / bound, random_max);
    }
}
