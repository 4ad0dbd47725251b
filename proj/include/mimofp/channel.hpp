#pragma once

#include "mimofp/impairments.hpp"
#include "mimofp/numerics.hpp"
#include "mimofp/rng.hpp"
#include "mimofp/stbc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mimofp {

// Bessel J0: power series for |x| < 12, leading asymptotic form beyond
inline double bessel_j0(double x) {
    x = std::fabs(x);
    if (x < 12.0) {
        const double q = -0.25 * x * x;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k <= 40; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
        }
        return sum;
    }
    return std::sqrt(2.0 / (M_PI * x)) * std::cos(x - M_PI / 4.0);
}

struct RayleighSpec {
    double apg_db = 0.0;          // average path gain E|h|^2 in dB
    double mds_hz = 0.0;          // maximum Doppler shift
    double block_interval_s = 1.0; // time between successive channel draws
};

inline void validate(const RayleighSpec& s) {
    if (s.mds_hz < 0.0) throw std::invalid_argument("rayleigh: mds must be >= 0");
    if (!(s.block_interval_s > 0.0))
        throw std::invalid_argument("rayleigh: block_interval must be > 0");
}

struct MimoChannel {
    CMatrix H; // L x M
    RayleighSpec spec;
};

// y = x + n, circular complex Gaussian with per-sample variance
// P_x 10^(-snr/10); snr = +inf passes the signal through untouched
inline Signal awgn(const Signal& x, double snr_db, Rng& rng) {
    if (std::isinf(snr_db) && snr_db > 0.0) return x;
    double p = 0.0;
    for (const auto& v : x.samples) p += std::norm(v);
    if (x.samples.empty() || p == 0.0)
        throw std::invalid_argument("awgn: input power is zero, SNR undefined");
    p /= static_cast<double>(x.samples.size());
    const double sigma = std::sqrt(p * std::pow(10.0, -snr_db / 10.0));
    Signal y = x;
    for (auto& v : y.samples) v += sigma * rng.cgauss();
    return y;
}

inline MimoChannel draw_rayleigh(int L, int M, double apg_db, Rng& rng,
                                 RayleighSpec spec = {}) {
    if (L < 1 || M < 1) throw std::invalid_argument("draw_rayleigh: L, M must be >= 1");
    spec.apg_db = apg_db;
    validate(spec);
    const double scale = std::sqrt(std::pow(10.0, apg_db / 10.0));
    Eigen::MatrixXcd h(L, M);
    for (Index j = 0; j < M; ++j)
        for (Index i = 0; i < L; ++i) h(i, j) = scale * rng.cgauss();
    return MimoChannel{CMatrix(std::move(h)), spec};
}

// first-order Gauss-Markov step with Clarke coefficient J0(2 pi f_d dt),
// clamped to [0,1]; the stationary per-entry power stays at the APG
inline MimoChannel evolve(const MimoChannel& ch, Rng& rng) {
    validate(ch.spec);
    if (ch.spec.mds_hz == 0.0) return ch;
    double rho = bessel_j0(2.0 * M_PI * ch.spec.mds_hz * ch.spec.block_interval_s);
    rho = std::min(1.0, std::max(0.0, rho));
    const double scale = std::sqrt(std::pow(10.0, ch.spec.apg_db / 10.0));
    const double wgt = std::sqrt(1.0 - rho * rho);
    Eigen::MatrixXcd h(ch.H.rows(), ch.H.cols());
    for (Index j = 0; j < h.cols(); ++j)
        for (Index i = 0; i < h.rows(); ++i)
            h(i, j) = rho * ch.H(i, j) + wgt * scale * rng.cgauss();
    return MimoChannel{CMatrix(std::move(h)), ch.spec};
}

// R = (I_K (x) H) C X + N; the channel is held static over the K epochs and
// all l block columns
inline CMatrix transmit_block(const MimoChannel& ch, const StbcCode& code,
                              const Eigen::MatrixXd& X, double noise_sigma, Rng& rng) {
    if (ch.H.cols() != code.M)
        throw std::invalid_argument("transmit_block: channel/code antenna mismatch");
    if (X.rows() != 2 * code.n)
        throw std::invalid_argument("transmit_block: X must have 2n rows");
    CMatrix big = kron(CMatrix::identity(code.K), ch.H);
    Eigen::MatrixXcd r = big.mat() * stacked_code(code).mat() * X.cast<Complex>();
    if (noise_sigma > 0.0) {
        for (Index j = 0; j < r.cols(); ++j)
            for (Index i = 0; i < r.rows(); ++i) r(i, j) += noise_sigma * rng.cgauss();
    }
    return CMatrix(std::move(r));
}

// pointwise arithmetic mean across receive antennas
inline Signal simo_average(const std::vector<Signal>& received) {
    if (received.empty()) throw std::invalid_argument("simo_average: empty antenna list");
    const size_t n = received[0].samples.size();
    for (const auto& s : received)
        if (s.samples.size() != n || s.sample_rate != received[0].sample_rate)
            throw std::invalid_argument("simo_average: mismatched signals");
    Signal out;
    out.sample_rate = received[0].sample_rate;
    out.samples.assign(n, {0.0, 0.0});
    for (const auto& s : received)
        for (size_t k = 0; k < n; ++k) out.samples[k] += s.samples[k];
    const double inv = 1.0 / static_cast<double>(received.size());
    for (auto& v : out.samples) v *= inv;
    return out;
}

} // namespace mimofp
