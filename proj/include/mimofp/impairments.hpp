#pragma once

#include "mimofp/rng.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimofp {

// One transmitter's hardware impairment set. phase_noise_dbc_hz is a one-sided
// PSD level at the calibration offset (sample_rate/100 by default);
// -inf disables the stage. AM/AM and AM/PM pairs are Saleh (alpha, beta)
// parameters, AM/PM in radians.
struct DeviceProfile {
    std::string device_id;
    double phase_noise_dbc_hz = -std::numeric_limits<double>::infinity();
    double cfo_hz = 0.0;
    double iq_gain_imb = 0.0;  // linear deviation g
    double iq_phase_imb = 0.0; // radians
    double amam_alpha = 1.0, amam_beta = 0.0;
    double ampm_alpha = 0.0, ampm_beta = 0.0;
    double dc_i = 0.0, dc_q = 0.0;
};

inline void validate(const DeviceProfile& p) {
    if (!(p.amam_alpha > 0.0) || p.amam_beta < 0.0 || p.ampm_beta < 0.0)
        throw std::invalid_argument("profile '" + p.device_id + "': bad Saleh parameters");
    if (!(p.phase_noise_dbc_hz < 0.0))
        throw std::invalid_argument("profile '" + p.device_id + "': phase noise level must be < 0 dBc/Hz");
}

struct Signal {
    std::vector<std::complex<double>> samples;
    double sample_rate = 20e6;
};

inline void check_signal(const Signal& x) {
    if (!(x.sample_rate > 0.0))
        throw std::invalid_argument("signal: sample_rate must be positive");
}

// y = mu x + nu conj(x), mu = (1 + (1+g) e^{j phi})/2, nu = (1 - (1+g) e^{j phi})/2
inline Signal iq_imbalance(const Signal& x, double g, double phi) {
    const std::complex<double> e = (1.0 + g) * std::polar(1.0, phi);
    const std::complex<double> mu = 0.5 * (1.0 + e);
    const std::complex<double> nu = 0.5 * (1.0 - e);
    Signal y = x;
    for (auto& v : y.samples) v = mu * v + nu * std::conj(v);
    return y;
}

inline Signal dc_offset(const Signal& x, double di, double dq) {
    const std::complex<double> d(di, dq);
    Signal y = x;
    for (auto& v : y.samples) v += d;
    return y;
}

// Saleh memoryless PA: |y| = a_a r / (1 + b_a r^2), extra phase a_p r^2 / (1 + b_p r^2)
inline Signal saleh_pa(const Signal& x, double amam_alpha, double amam_beta,
                       double ampm_alpha, double ampm_beta) {
    Signal y = x;
    for (auto& v : y.samples) {
        const double r2 = std::norm(v);
        const double gain = amam_alpha / (1.0 + amam_beta * r2);
        const double dphi = ampm_alpha * r2 / (1.0 + ampm_beta * r2);
        v = v * gain * std::polar(1.0, dphi);
    }
    return y;
}

inline Signal cfo(const Signal& x, double f_off) {
    check_signal(x);
    Signal y = x;
    const double w = 2.0 * M_PI * f_off / x.sample_rate;
    for (size_t k = 0; k < y.samples.size(); ++k)
        y.samples[k] *= std::polar(1.0, w * static_cast<double>(k));
    return y;
}

// Multiplies by e^{j theta[k]} with theta a single-pole-filtered white Gaussian
// process. The filter pole sits a decade below the calibration offset and the
// drive variance is set so the one-sided PSD of theta equals level_dbc_hz at
// offset_hz (default sample_rate/100).
inline Signal phase_noise(const Signal& x, double level_dbc_hz, Rng& rng,
                          double offset_hz = 0.0) {
    check_signal(x);
    if (std::isinf(level_dbc_hz) && level_dbc_hz < 0.0) return x; // disabled
    if (!(level_dbc_hz < 0.0))
        throw std::invalid_argument("phase_noise: level must be < 0 dBc/Hz");
    const double fs = x.sample_rate;
    const double foff = offset_hz > 0.0 ? offset_hz : fs / 100.0;
    const double fpole = foff / 10.0;
    const double a = std::exp(-2.0 * M_PI * fpole / fs);
    const double w = 2.0 * M_PI * foff / fs;
    const double hmag2 = std::norm(1.0 - a * std::polar(1.0, -w));
    const double target = std::pow(10.0, level_dbc_hz / 10.0); // rad^2/Hz, one-sided
    const double sw2 = target * fs * hmag2 / 2.0;
    const double sw = std::sqrt(sw2);

    Signal y = x;
    double theta = std::sqrt(sw2 / (1.0 - a * a)) * rng.gauss(); // stationary start
    for (auto& v : y.samples) {
        v *= std::polar(1.0, theta);
        theta = a * theta + sw * rng.gauss();
    }
    return y;
}

// fixed chain: IQ imbalance -> DC offset -> PA -> phase noise -> CFO.
// pn_offset_hz overrides the phase noise calibration offset (0 keeps the
// stage default of sample_rate/100); dataset manifests record the choice.
inline Signal apply_device(const DeviceProfile& p, const Signal& x, Rng& rng,
                           double pn_offset_hz = 0.0) {
    if (x.samples.empty()) throw std::invalid_argument("apply_device: empty signal");
    validate(p);
    Signal y = iq_imbalance(x, p.iq_gain_imb, p.iq_phase_imb);
    y = dc_offset(y, p.dc_i, p.dc_q);
    y = saleh_pa(y, p.amam_alpha, p.amam_beta, p.ampm_alpha, p.ampm_beta);
    y = phase_noise(y, p.phase_noise_dbc_hz, rng, pn_offset_hz);
    y = cfo(y, p.cfo_hz);
    return y;
}

// the ten simulated devices (DV1..DV10)
inline std::vector<DeviceProfile> default_profiles() {
    // device_id, pn dBc/Hz, cfo Hz, iq gain, iq phase, amam a/b, ampm a/b, dc i, dc q
    return {
        {"DV1", -60.00, 20.000, 0.080, 0.100, 2.1587, 1.1517, 4.0033, 9.104, 0.100, 0.1500},
        {"DV2", -60.15, 20.010, 0.100, 0.090, 2.1687, 1.1617, 4.1033, 9.124, 0.110, 0.1400},
        {"DV3", -59.90, 20.200, 0.090, 0.090, 2.1789, 1.1317, 4.0933, 9.151, 0.100, 0.1100},
        {"DV4", -60.10, 20.000, 0.108, 0.109, 2.1987, 1.1217, 4.1033, 9.194, 0.100, 0.1000},
        {"DV5", -60.00, 20.090, 0.100, 0.000, 2.1587, 1.1717, 4.0930, 9.094, 0.089, 0.1008},
        {"DV6", -59.95, 20.100, 0.120, 0.150, 2.1487, 1.1117, 4.1033, 9.156, 0.100, 0.0980},
        {"DV7", -59.93, 20.110, 0.110, 0.110, 2.1897, 1.1237, 4.1133, 9.135, 0.111, 0.1011},
        {"DV8", -60.13, 20.099, 0.101, 0.140, 2.1387, 1.1627, 4.1533, 9.096, 0.120, 0.0990},
        {"DV9", -59.89, 19.900, 0.099, 0.080, 2.1548, 1.1917, 4.09833, 9.10056, 0.090, 0.0999},
        {"DV10", -59.91, 19.980, 0.111, 0.105, 2.1777, 1.09874, 4.0987, 9.123, 0.101, 0.10015},
    };
}

} // namespace mimofp
