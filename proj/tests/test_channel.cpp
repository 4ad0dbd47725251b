#include <catch2/catch_amalgamated.hpp>

#include <mimofp/channel.hpp>

#include <cmath>

using namespace mimofp;

TEST_CASE("bessel j0 against the stdlib") {
    for (double x : {0.0, 0.5, 1.0, 2.404825557695773, 5.0, 11.9, 14.0, 30.0}) {
        const double want = std::cyl_bessel_j(0.0, x);
        const double tol = x < 12.0 ? 1e-12 : 2e-2; // asymptotic branch is approximate
        CHECK(bessel_j0(x) == Catch::Approx(want).margin(tol));
    }
    CHECK(bessel_j0(0.0) == 1.0);
}

TEST_CASE("awgn disabled and error paths") {
    Signal x{std::vector<Complex>(64, Complex(1.0, 0.0)), 20e6};
    Rng rng(41);
    Signal y = awgn(x, std::numeric_limits<double>::infinity(), rng);
    for (size_t k = 0; k < x.samples.size(); ++k) CHECK(y.samples[k] == x.samples[k]);

    Signal z{std::vector<Complex>(8, Complex(0.0, 0.0)), 20e6};
    CHECK_THROWS_AS(awgn(z, 10.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(awgn(Signal{}, 10.0, rng), std::invalid_argument);
}

TEST_CASE("awgn empirical variance at 0 and 20 dB") {
    const size_t n = 1000000;
    Signal x{std::vector<Complex>(n, Complex(1.0, 0.0)), 20e6};
    for (double snr : {0.0, 20.0}) {
        Rng rng(42 + static_cast<std::uint64_t>(snr));
        Signal y = awgn(x, snr, rng);
        double var = 0.0;
        Complex mean = 0.0;
        for (size_t k = 0; k < n; ++k) {
            const Complex d = y.samples[k] - x.samples[k];
            var += std::norm(d);
            mean += d;
        }
        var /= static_cast<double>(n);
        const double want = std::pow(10.0, -snr / 10.0);
        CHECK(var == Catch::Approx(want).epsilon(0.03));
        // mean-zero: |empirical mean| < 4 sigma / sqrt(N)
        CHECK(std::abs(mean) / static_cast<double>(n) <
              4.0 * std::sqrt(want) / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("draw_rayleigh power and determinism") {
    for (double apg : {0.0, -20.0}) {
        Rng rng(43);
        double p = 0.0;
        const int draws = 12500; // 12500 draws x 8 entries = 1e5 samples
        for (int t = 0; t < draws; ++t) {
            MimoChannel ch = draw_rayleigh(4, 2, apg, rng);
            p += ch.H.mat().squaredNorm();
        }
        p /= static_cast<double>(draws) * 8.0;
        CHECK(p == Catch::Approx(std::pow(10.0, apg / 10.0)).epsilon(0.02));
    }
    Rng a(44), b(44);
    MimoChannel c1 = draw_rayleigh(3, 3, -10.0, a);
    MimoChannel c2 = draw_rayleigh(3, 3, -10.0, b);
    CHECK((c1.H.mat() - c2.H.mat()).norm() == 0.0);
    CHECK_THROWS_AS(draw_rayleigh(0, 2, 0.0, a), std::invalid_argument);
}

TEST_CASE("evolve static and stationary") {
    Rng rng(45);
    MimoChannel ch = draw_rayleigh(2, 3, -5.0, rng, RayleighSpec{0.0, 0.0, 1.0});
    MimoChannel ch2 = evolve(ch, rng);
    CHECK((ch2.H.mat() - ch.H.mat()).norm() == 0.0); // mds = 0: exact identity

    // J0(0) = 1 path through a zero product of mds and interval is the same
    MimoChannel ch3 = draw_rayleigh(2, 3, -5.0, rng, RayleighSpec{-5.0, 0.0, 2.0});
    CHECK((evolve(ch3, rng).H.mat() - ch3.H.mat()).norm() == 0.0);

    // long-run stationary power within 2%
    RayleighSpec spec{-3.0, 0.2, 1.0};
    MimoChannel c = draw_rayleigh(2, 2, -3.0, rng, spec);
    double p = 0.0;
    const int steps = 10000;
    for (int t = 0; t < steps; ++t) {
        c = evolve(c, rng);
        p += c.H.mat().squaredNorm();
    }
    p /= static_cast<double>(steps) * 4.0;
    CHECK(p == Catch::Approx(std::pow(10.0, -0.3)).epsilon(0.02));
}

TEST_CASE("transmit_block identity channel single alamouti block") {
    StbcCode code = alamouti();
    MimoChannel ch{CMatrix::identity(2), RayleighSpec{}};
    Rng rng(46);
    Eigen::VectorXcd s(2);
    s << Complex(0.3, -0.4), Complex(-1.1, 0.2);
    Eigen::MatrixXd X(4, 1);
    X << s.real(), s.imag();
    Rng nz(1);
    CMatrix r = transmit_block(ch, code, X, 0.0, nz);
    REQUIRE(r.rows() == 4);
    REQUIRE(r.cols() == 1);
    CMatrix cm = encode(code, s); // with H = I the epochs stack the code columns
    CHECK(std::abs(r(0, 0) - cm(0, 0)) < 1e-14);
    CHECK(std::abs(r(1, 0) - cm(1, 0)) < 1e-14);
    CHECK(std::abs(r(2, 0) - cm(0, 1)) < 1e-14);
    CHECK(std::abs(r(3, 0) - cm(1, 1)) < 1e-14);
}

TEST_CASE("transmit_block agrees with the per-epoch route") {
    StbcCode code = tarokh_g3();
    Rng rng(47);
    MimoChannel ch = draw_rayleigh(3, 3, 0.0, rng);
    const int l = 5;
    Eigen::MatrixXd X(8, l);
    for (int j = 0; j < l; ++j)
        for (int i = 0; i < 8; ++i) X(i, j) = rng.gauss();
    Rng nz(2);
    CMatrix r = transmit_block(ch, code, X, 0.0, nz);
    REQUIRE(r.rows() == 24);
    REQUIRE(r.cols() == l);
    for (int b = 0; b < l; ++b)
        for (int k = 0; k < code.K; ++k) {
            Eigen::VectorXcd ecol =
                ch.H.mat() * (code_block(code, k).mat() * X.col(b).cast<Complex>());
            for (int i = 0; i < 3; ++i)
                CHECK(std::abs(r(k * 3 + i, b) - ecol(i)) < 1e-12);
        }
}

TEST_CASE("transmit_block dims and linearity") {
    StbcCode code = tarokh_g3();
    Rng rng(48);
    MimoChannel ch = draw_rayleigh(3, 3, 0.0, rng);
    Eigen::MatrixXd x1(8, 64), x2(8, 64);
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 8; ++i) {
            x1(i, j) = rng.gauss();
            x2(i, j) = rng.gauss();
        }
    Rng nz(3);
    CMatrix r1 = transmit_block(ch, code, x1, 0.0, nz);
    CHECK(r1.rows() == 24);
    CHECK(r1.cols() == 64);
    CMatrix r2 = transmit_block(ch, code, x2, 0.0, nz);
    CMatrix r12 = transmit_block(ch, code, x1 + x2, 0.0, nz);
    CHECK((r12.mat() - r1.mat() - r2.mat()).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(transmit_block(ch, code, Eigen::MatrixXd::Zero(7, 4), 0.0, nz),
                    std::invalid_argument);
    MimoChannel bad{CMatrix::identity(2), RayleighSpec{}};
    CHECK_THROWS_AS(transmit_block(bad, code, x1, 0.0, nz), std::invalid_argument);
}

TEST_CASE("simo_average identity cases and errors") {
    Rng rng(49);
    Signal x{std::vector<Complex>(33, Complex(0.5, -0.25)), 20e6};
    Signal one = simo_average({x});
    for (size_t k = 0; k < x.samples.size(); ++k) CHECK(one.samples[k] == x.samples[k]);
    Signal same = simo_average({x, x, x});
    for (size_t k = 0; k < x.samples.size(); ++k)
        CHECK(std::abs(same.samples[k] - x.samples[k]) < 1e-15);
    CHECK_THROWS_AS(simo_average({}), std::invalid_argument);
    Signal shorter{std::vector<Complex>(32), 20e6};
    CHECK_THROWS_AS(simo_average({x, shorter}), std::invalid_argument);
}

TEST_CASE("simo_average noise reduction and SNR gain") {
    const size_t n = 1000000;
    Signal s{std::vector<Complex>(n, Complex(1.0, 0.0)), 20e6};
    for (int L : {2, 4}) {
        Rng rng(50 + static_cast<std::uint64_t>(L));
        std::vector<Signal> rx;
        for (int i = 0; i < L; ++i) {
            Signal y = s;
            for (auto& v : y.samples) v += rng.cgauss();
            rx.push_back(std::move(y));
        }
        Signal avg = simo_average(rx);
        double resid = 0.0;
        for (size_t k = 0; k < n; ++k) resid += std::norm(avg.samples[k] - s.samples[k]);
        resid /= static_cast<double>(n);
        CHECK(resid == Catch::Approx(1.0 / L).epsilon(0.03));
        const double gain_db = 10.0 * std::log10(1.0 / resid);
        CHECK(gain_db == Catch::Approx(10.0 * std::log10(L)).margin(0.2));
    }
}
