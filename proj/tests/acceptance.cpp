// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. argv[1] optionally names the CLI binary (used by the determinism
// criterion; skipped with a FAIL if absent).

#include <mimofp/harness.hpp>

#include "fd_check.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

using namespace mimofp;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int criterion, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] criterion %2d: %s (%.1f s)\n", pass ? "PASS" : "FAIL", criterion,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v, int prec = 3) {
    char b[64];
    std::snprintf(b, sizeof b, "%.*f", prec, v);
    return b;
}

// ---- criterion 1: identifiability table ------------------------------------
void criterion1() {
    Timer t;
    IdentifiabilityReport ra = identifiability(alamouti());
    IdentifiabilityReport rg = identifiability(tarokh_g3());
    const Index rank_a = numerical_rank(stacked_code(alamouti()));
    const Index rank_g = numerical_rank(stacked_code(tarokh_g3()));
    const bool ok = ra.rho == 4 && rg.rho == 1 && rank_a == 4 && rank_g == 8 && t.s() < 5.0;
    report(1, ok,
           "rho(O1)=" + std::to_string(ra.rho) + " rho(O3)=" + std::to_string(rg.rho) +
               " rank(C)=" + std::to_string(rank_a) + "," + std::to_string(rank_g) +
               " vs published 4,1,4,8",
           t.s());
}

// ---- criterion 2: r_min witnesses ------------------------------------------
void criterion2() {
    Timer t;
    RminResult a = search_rmin(alamouti(), WitnessMode::gamma, 10000, 77);
    RminResult g = search_rmin(tarokh_g3(), WitnessMode::gamma, 10000, 77);
    const bool gamma_ok = a.best_rank == 1 && g.best_rank == 1 &&
                          rank_witness(alamouti(), a.witness, WitnessMode::gamma) == 1 &&
                          rank_witness(tarokh_g3(), g.witness, WitnessMode::gamma) == 1;

    // gamma_phi for O1: the published value is 2. A generic admissible u is a
    // rank-2 witness; the search itself reaches 1 under this implementation's
    // block convention, in which case the report must carry the flag instead
    // of failing silently (spec open question).
    RminResult ap = search_rmin(alamouti(), WitnessMode::gamma_phi, 10000, 77);
    Rng rng(7);
    Eigen::MatrixXcd u(16, 1);
    for (Index i = 0; i < 16; ++i) u(i, 0) = rng.cgauss();
    const bool rank2_witness_exists =
        rank_witness(alamouti(), CMatrix(u), WitnessMode::gamma_phi) == 2;
    bool prime_ok;
    std::string prime_note;
    if (ap.best_rank == 2) {
        prime_ok = rank2_witness_exists;
        prime_note = "r'(O1)=2 matches the published table";
    } else {
        auto rows = run_identifiability_report({"alamouti"}, 2000, 7);
        const bool flagged = !rows.empty() && rows[0].flags.find("r_min'") != std::string::npos;
        prime_ok = rank2_witness_exists && flagged;
        prime_note = "rank-2 witness exhibited; search best=" +
                     std::to_string(ap.best_rank) +
                     std::string(flagged ? ", convention mismatch flagged in the report"
                                         : ", REPORT FLAG MISSING");
    }
    report(2, gamma_ok && prime_ok,
           "r_min witnesses: O1=" + std::to_string(a.best_rank) +
               " O3=" + std::to_string(g.best_rank) + "; " + prime_note,
           t.s());
}

// ---- criteria 3 and 4: noiseless blind estimation, minimum-antenna rule ----
struct BlindRun {
    double err;
    Index amb;
};

BlindRun blind_once(int L, std::uint64_t seed, double noise_sigma = 0.0,
                    double amb_tol = 1e-6) {
    StbcCode code = tarokh_g3();
    Rng rng(seed);
    Eigen::MatrixXcd h(L, 3);
    for (Index i = 0; i < h.size(); ++i) h(i % L, i / L) = rng.cgauss();
    Eigen::MatrixXd X(8, 64);
    for (int b = 0; b < 64; ++b) {
        Eigen::VectorXcd s = qpsk_block(4, rng);
        X.col(b) << s.real(), s.imag();
    }
    Rng nz = rng.substream(1);
    CMatrix R = transmit_block(MimoChannel{CMatrix(h), RayleighSpec{}}, code, X, noise_sigma,
                               nz);
    ChannelEstimate est = estimate(R, code, L, amb_tol);
    Eigen::VectorXcd hv = Eigen::Map<Eigen::VectorXcd>(h.data(), h.size());
    return {alignment_error(est.h_hat, hv), est.ambiguity_dim};
}

void criterion3() {
    Timer t;
    int good = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        BlindRun r = blind_once(3, 1000 + s);
        worst = std::max(worst, r.err);
        if (r.err < 1e-8) ++good;
    }
    const bool ok = good == 100 && t.s() < 30.0;
    report(3, ok,
           "noiseless blind estimation: " + std::to_string(good) +
               "/100 seeds below 1e-8 (worst " + fmt(worst, 12) + ")",
           t.s());
}

void criterion4() {
    Timer t;
    int amb_l2 = 0, amb_l3 = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        if (blind_once(2, 2000 + s).amb >= 2) ++amb_l2;
        if (blind_once(3, 3000 + s).amb == 1) ++amb_l3;
    }
    report(4, amb_l2 == 100 && amb_l3 == 100,
           "ambiguity_dim>=2 with L=2 in " + std::to_string(amb_l2) +
               "/100, ==1 with L=3 in " + std::to_string(amb_l3) + "/100",
           t.s());
}

// ---- criterion 5: noisy estimation monotonicity ----------------------------
void criterion5() {
    Timer t;
    std::vector<double> medians;
    for (double snr : {0.0, 10.0, 20.0, 30.0}) {
        std::vector<double> errs;
        for (std::uint64_t s = 0; s < 50; ++s) {
            BlindRun clean = blind_once(3, 4000 + s);
            (void)clean;
            // noise sigma from the clean received power at this seed
            StbcCode code = tarokh_g3();
            Rng rng(4000 + s);
            Eigen::MatrixXcd h(3, 3);
            for (Index i = 0; i < h.size(); ++i) h(i % 3, i / 3) = rng.cgauss();
            Eigen::MatrixXd X(8, 64);
            for (int b = 0; b < 64; ++b) {
                Eigen::VectorXcd sq = qpsk_block(4, rng);
                X.col(b) << sq.real(), sq.imag();
            }
            Rng nz = rng.substream(1);
            CMatrix clean_r = transmit_block(MimoChannel{CMatrix(h), RayleighSpec{}}, code, X,
                                             0.0, nz);
            const double p =
                clean_r.mat().squaredNorm() / static_cast<double>(clean_r.size());
            const double sigma = std::sqrt(p * std::pow(10.0, -snr / 10.0));
            Rng nz2 = rng.substream(2);
            Eigen::MatrixXcd noisy = clean_r.mat();
            for (Index j = 0; j < noisy.cols(); ++j)
                for (Index i = 0; i < noisy.rows(); ++i) noisy(i, j) += sigma * nz2.cgauss();
            ChannelEstimate est = estimate(CMatrix(noisy), code, 3, 1e-2);
            Eigen::VectorXcd hv = Eigen::Map<Eigen::VectorXcd>(h.data(), h.size());
            errs.push_back(alignment_error(est.h_hat, hv));
        }
        std::sort(errs.begin(), errs.end());
        medians.push_back(errs[25]);
    }
    const bool mono = medians[0] > medians[1] && medians[1] > medians[2] &&
                      medians[2] > medians[3];
    const bool ok = mono && medians[2] < 0.05;
    report(5, ok,
           "median alignment error " + fmt(medians[0]) + " > " + fmt(medians[1]) + " > " +
               fmt(medians[2]) + " > " + fmt(medians[3]) + " across 0/10/20/30 dB, 20 dB < 0.05",
           t.s());
}

// ---- criterion 6: SIMO averaging -------------------------------------------
void criterion6() {
    Timer t;
    bool ok = true;
    std::string detail = "residual power vs sigma^2/L:";
    const size_t n = 1000000;
    Signal s{std::vector<Complex>(n, Complex(1.0, 0.0)), 20e6};
    for (int L : {2, 4, 6, 10}) {
        Rng rng(600 + static_cast<std::uint64_t>(L));
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
        const double rel = std::fabs(resid - 1.0 / L) * L;
        const double gain_err = std::fabs(10.0 * std::log10(1.0 / resid) -
                                          10.0 * std::log10(static_cast<double>(L)));
        ok = ok && rel < 0.03 && gain_err < 0.2;
        detail += " L=" + std::to_string(L) + ":" + fmt(resid, 4);
    }
    report(6, ok, detail, t.s());
}

// ---- criterion 7: CNN gradient check ----------------------------------------
void criterion7() {
    Timer t;
    double worst = 0.0;
    long total = 0;
    for (std::uint64_t seed : {100ULL, 101ULL, 102ULL}) {
        CnnModel m = cnn::init(40 + seed);
        Rng rng(seed);
        Eigen::MatrixXd X(2, 320);
        for (Index i = 0; i < 2; ++i)
            for (int j = 0; j < 320; ++j) X(i, j) = 1.5 * rng.gauss();
        std::vector<int> labels(2);
        for (auto& v : labels) v = static_cast<int>(rng.uniform_index(10));
        fdcheck::FdChecker chk(m, X, labels);
        fdcheck::Result r = chk.check_all(1e-5);
        worst = std::max(worst, r.max_rel_err);
        total += r.checked;
    }
    // ln 10 at the uniform prediction
    CnnModel m = cnn::init(1);
    auto [loss, g] = cnn::loss_and_grads(m, Eigen::MatrixXd::Zero(4, 320), {0, 1, 2, 3});
    (void)g;
    const bool ln10_ok = std::fabs(loss - std::log(10.0)) < 1e-9;
    const bool ok = worst < 1e-4 && total == 3 * 505076 && ln10_ok;
    report(7, ok,
           "FD rel err < 1e-4 for all " + std::to_string(total) + " parameter checks (worst " +
               fmt(worst, 10) + "); uniform loss = ln 10",
           t.s());
}

// ---- criterion 8: RDTG arithmetic -------------------------------------------
void criterion8() {
    Timer t;
    const double v = rdtg(44.0, 18.0);
    report(8, std::fabs(v - 59.09) < 0.01, "rdtg(44, 18) = " + fmt(v, 4), t.s());
}

// ---- criterion 9: desk-scale directional reproduction -----------------------
struct DeskParams {
    int fpd = 200;     // frames per device
    int epochs = 15;
    double lr = 1e-4;
    int batch = 64;
};

struct AwgnSeedResult {
    double siso, simo6;
};

AwgnSeedResult run9a_seed(std::uint64_t seed, const DeskParams& p) {
    auto profiles = default_profiles();
    Rng root(seed);
    double acc[2] = {0, 0};
    int slot = 0;
    for (int L : {1, 6}) {
        Dataset tr = split(
            gen_awgn_dataset(profiles, 20.0, L, p.fpd, root.substream(1, L).seed()),
            root.substream(2, L).seed());
        TrainConfig tc;
        tc.learning_rate = p.lr;
        tc.batch_size = p.batch;
        tc.epochs = p.epochs;
        tc.seed = root.substream(3, L).seed();
        TrainResult res = train(cnn::init(root.substream(4, L).seed()), tr, tc);
        Dataset te = split(
            gen_awgn_dataset(profiles, 10.0, L, p.fpd, root.substream(5, L).seed()),
            root.substream(6, L).seed());
        acc[slot++] = evaluate(res.model, te.frames, te.split.test);
    }
    return {acc[0], acc[1]};
}

struct RayleighSeedResult {
    double siso_same, mimo_same;   // test accuracy, same channel (APG -20)
    double siso_rdtg, mimo_rdtg;   // RDTG against test APG +20
};

RayleighSeedResult run9bc_seed(std::uint64_t seed, const DeskParams& p) {
    auto profiles = default_profiles();
    StbcCode code = tarokh_g3();
    Rng root(seed);
    RayleighSeedResult out{};
    for (int sys = 0; sys < 2; ++sys) {
        RayleighGenConfig gc;
        gc.apg_db = -20.0;
        gc.mode = sys == 0 ? RayleighMode::siso : RayleighMode::mimo_blind;
        const int L = sys == 0 ? 1 : 3;
        Dataset tr = split(gen_rayleigh_dataset(profiles, code, L, gc, p.fpd,
                                                root.substream(11, sys).seed()),
                           root.substream(12, sys).seed());
        TrainConfig tc;
        tc.learning_rate = p.lr;
        tc.batch_size = p.batch;
        tc.epochs = p.epochs;
        tc.seed = root.substream(13, sys).seed();
        TrainResult res = train(cnn::init(root.substream(14, sys).seed()), tr, tc);
        const double same = evaluate(res.model, tr.frames, tr.split.test);
        RayleighGenConfig tg = gc;
        tg.apg_db = 20.0;
        Dataset te = split(gen_rayleigh_dataset(profiles, code, L, tg, p.fpd,
                                                root.substream(15, sys).seed()),
                           root.substream(16, sys).seed());
        const double diff = evaluate(res.model, te.frames, te.split.test);
        const double r = same > 0.0 ? rdtg(same, diff) : 100.0;
        if (sys == 0) {
            out.siso_same = same;
            out.siso_rdtg = r;
        } else {
            out.mimo_same = same;
            out.mimo_rdtg = r;
        }
    }
    return out;
}

void criterion9() {
    Timer t;
    DeskParams p;
    const std::uint64_t seeds[3] = {1, 2, 3};
    int pass_a = 0, pass_b = 0, pass_c = 0;
    std::string detail_a, detail_b, detail_c;
    for (std::uint64_t s : seeds) {
        AwgnSeedResult a = run9a_seed(s, p);
        if (a.simo6 >= a.siso + 10.0) ++pass_a;
        detail_a += " [" + fmt(a.simo6, 1) + " vs " + fmt(a.siso, 1) + "]";
    }
    for (std::uint64_t s : seeds) {
        RayleighSeedResult r = run9bc_seed(s, p);
        if (r.mimo_same >= r.siso_same + 15.0) ++pass_b;
        if (r.mimo_rdtg <= r.siso_rdtg - 25.0) ++pass_c;
        detail_b += " [" + fmt(r.mimo_same, 1) + " vs " + fmt(r.siso_same, 1) + "]";
        detail_c += " [" + fmt(r.mimo_rdtg, 1) + " vs " + fmt(r.siso_rdtg, 1) + "]";
    }
    const bool ok =
        pass_a >= 2 && pass_b >= 2 && pass_c >= 2 && t.s() < 1800.0;
    report(9, ok,
           "(a) AWGN test@10dB simo_6 vs siso" + detail_a + " " + std::to_string(pass_a) +
               "/3; (b) same-channel APG-20 mimo vs siso" + detail_b + " " +
               std::to_string(pass_b) + "/3; (c) RDTG mimo vs siso" + detail_c + " " +
               std::to_string(pass_c) + "/3",
           t.s());
}

// ---- criterion 10: LLTF structure -------------------------------------------
void criterion10() {
    Timer t;
    Signal x = lltf();
    bool rep = true, cp = true;
    for (int i = 0; i < 64; ++i) rep = rep && x.samples[32 + i] == x.samples[96 + i];
    for (int i = 0; i < 32; ++i) cp = cp && x.samples[i] == x.samples[64 + i];
    report(10, rep && cp && x.samples.size() == 160,
           std::string("symbol repetition ") + (rep ? "exact" : "BROKEN") +
               ", cyclic prefix " + (cp ? "exact" : "BROKEN"),
           t.s());
}

// ---- criterion 11: CLI determinism ------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void criterion11(const char* cli) {
    Timer t;
    if (cli == nullptr) {
        report(11, false, "CLI path not supplied on argv", t.s());
        return;
    }
    const fs::path base = fs::temp_directory_path() / "mimofp_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);
    const fs::path cfgp = base / "cfg.json";
    Json cfg;
    cfg["schema_version"] = 1;
    cfg["experiment"] = "awgn_sweep";
    cfg["devices"] = "default10";
    cfg["L_rx"] = {1, 2};
    cfg["train_snr_db"] = 25.0;
    cfg["test_snr_db"] = {25.0, 10.0};
    cfg["frames_per_device"] = 10;
    cfg["train"] = {{"learning_rate", 1e-3}, {"batch_size", 16}, {"epochs", 1}};
    cfg["seed"] = 12;
    cfg["dataset"] = {{"type", "rayleigh"}, {"name", "dsA"}, {"mode", "mimo_blind"},
                      {"apg_db", -10.0}, {"L_rx", 3}, {"frames_per_device", 10}};
    {
        std::ofstream f(cfgp);
        f << cfg.dump(2);
    }
    auto run = [&](const std::string& sub, const fs::path& out) {
        const std::string cmd = std::string(cli) + " " + sub + " --config " + cfgp.string() +
                                " --out " + out.string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    bool ok = true;
    std::string detail;
    for (const char* sub : {"gen", "sweep-awgn"}) {
        const fs::path o1 = base / (std::string(sub) + "_1");
        const fs::path o2 = base / (std::string(sub) + "_2");
        if (!run(sub, o1) || !run(sub, o2)) {
            ok = false;
            detail += std::string(sub) + ": run failed; ";
            continue;
        }
        for (const auto& e : fs::directory_iterator(o1)) {
            const auto name = e.path().filename();
            if (name.string().find("timing") != std::string::npos) continue; // wall-clock sidecar
            if (slurp(e.path()) != slurp(o2 / name)) {
                ok = false;
                detail += name.string() + " differs; ";
            } else {
                detail += name.string() + " identical; ";
            }
        }
    }
    report(11, ok, detail.empty() ? "no outputs compared" : detail, t.s());
    fs::remove_all(base);
}

} // namespace

int main(int argc, char** argv) {
    Timer total;
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    criterion11(argc > 1 ? argv[1] : nullptr);
    std::printf("%d/11 criteria passed (total %.0f s)\n", 11 - g_failures, total.s());
    return g_failures == 0 ? 0 : 1;
}
