#pragma once

#include "mimofp/blind.hpp"
#include "mimofp/channel.hpp"
#include "mimofp/impairments.hpp"
#include "mimofp/rng.hpp"
#include "mimofp/stbc.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace mimofp {

using Json = nlohmann::json;

constexpr int kFrameLen = 160;

// 2 x 160 real tensor, row 0 in-phase, row 1 quadrature; float32 so that the
// on-disk blob round-trips bit-exactly
struct Frame {
    std::array<float, 2 * kFrameLen> tensor{};
    int label = 0;
};

struct SplitIndices {
    std::vector<int> train, val, test;
};

struct Dataset {
    std::vector<Frame> frames;
    SplitIndices split;
    Json manifest;
};

// Legacy long training field of the 802.11 preamble: 32-sample cyclic prefix
// followed by two repetitions of the 64-point IDFT of the fixed +-1 subcarrier
// sequence. Normalised to unit mean power; 160 samples at 20 MHz.
inline Signal lltf() {
    static const int seq[53] = {// subcarriers -26..26, DC = 0
        1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,
        0,
        1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1};
    std::array<std::complex<double>, 64> sym{};
    const double scale = 1.0 / std::sqrt(52.0);
    for (int m = 0; m < 64; ++m) {
        std::complex<double> acc = 0.0;
        for (int k = -26; k <= 26; ++k) {
            const int v = seq[k + 26];
            if (v == 0) continue;
            acc += static_cast<double>(v) *
                   std::polar(1.0, 2.0 * M_PI * k * m / 64.0);
        }
        sym[static_cast<size_t>(m)] = scale * acc;
    }
    Signal out;
    out.sample_rate = 20e6;
    out.samples.resize(kFrameLen);
    for (int i = 0; i < 32; ++i) out.samples[static_cast<size_t>(i)] = sym[static_cast<size_t>(32 + i)];
    for (int i = 0; i < 64; ++i) {
        out.samples[static_cast<size_t>(32 + i)] = sym[static_cast<size_t>(i)];
        out.samples[static_cast<size_t>(96 + i)] = sym[static_cast<size_t>(i)];
    }
    return out;
}

// i.i.d. uniform over {(+-1 +- j)/sqrt(2)}
inline Eigen::VectorXcd qpsk_block(int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("qpsk_block: n must be >= 1");
    Eigen::VectorXcd s(n);
    const double a = 0.7071067811865475244;
    for (int i = 0; i < n; ++i) {
        const std::uint64_t bits = rng.next_u64();
        s(i) = {(bits & 1) ? a : -a, (bits & 2) ? a : -a};
    }
    return s;
}

inline Frame to_frame(const std::vector<std::complex<double>>& x, int label) {
    if (x.size() != kFrameLen)
        throw std::invalid_argument("to_frame: expected exactly 160 samples");
    Frame f;
    f.label = label;
    for (int k = 0; k < kFrameLen; ++k) {
        f.tensor[static_cast<size_t>(k)] = static_cast<float>(x[static_cast<size_t>(k)].real());
        f.tensor[static_cast<size_t>(kFrameLen + k)] =
            static_cast<float>(x[static_cast<size_t>(k)].imag());
    }
    return f;
}

namespace detail {

inline Json profile_json(const DeviceProfile& p) {
    return Json{{"device_id", p.device_id},
                {"phase_noise_dbc_hz", p.phase_noise_dbc_hz},
                {"cfo_hz", p.cfo_hz},
                {"iq_gain_imb", p.iq_gain_imb},
                {"iq_phase_imb", p.iq_phase_imb},
                {"amam", {p.amam_alpha, p.amam_beta}},
                {"ampm", {p.ampm_alpha, p.ampm_beta}},
                {"dc_i", p.dc_i},
                {"dc_q", p.dc_q}};
}

inline DeviceProfile profile_from_json(const Json& j) {
    DeviceProfile p;
    p.device_id = j.at("device_id").get<std::string>();
    p.phase_noise_dbc_hz = j.at("phase_noise_dbc_hz").get<double>();
    p.cfo_hz = j.at("cfo_hz").get<double>();
    p.iq_gain_imb = j.at("iq_gain_imb").get<double>();
    p.iq_phase_imb = j.at("iq_phase_imb").get<double>();
    p.amam_alpha = j.at("amam").at(0).get<double>();
    p.amam_beta = j.at("amam").at(1).get<double>();
    p.ampm_alpha = j.at("ampm").at(0).get<double>();
    p.ampm_beta = j.at("ampm").at(1).get<double>();
    p.dc_i = j.at("dc_i").get<double>();
    p.dc_q = j.at("dc_q").get<double>();
    return p;
}

inline Json snr_json(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0.0) return Json("inf");
    return Json(snr_db);
}

inline double snr_from_json(const Json& j) {
    if (j.is_string() && j.get<std::string>() == "inf")
        return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

inline Json common_manifest(const std::vector<DeviceProfile>& profiles, int frames_per_device,
                            std::uint64_t seed) {
    Json m;
    m["format_version"] = 1;
    m["seed"] = seed;
    m["frames_per_device"] = frames_per_device;
    m["chain_order"] = {"iq_imbalance", "dc_offset", "saleh_pa", "phase_noise", "cfo"};
    Json devs = Json::array();
    for (const auto& p : profiles) devs.push_back(profile_json(p));
    m["devices"] = devs;
    m["sample_rate"] = 20e6;
    return m;
}

} // namespace detail

// Substream layout shared by the generators (and by tests that reproduce
// single frames): frame stream = master.substream(1, device, frame, attempt);
// within it, key 1 drives symbol/waveform randomness, key 2 the channel draw,
// key 3 its evolution, key (4, antenna) the impairment chain and key (5, i)
// or (2, i) the receiver noise as noted per mode.

// per frame: LLTF -> device chain -> L_rx noisy copies -> average -> 2 x 160
inline Dataset gen_awgn_dataset(const std::vector<DeviceProfile>& profiles, double snr_db,
                                int L_rx, int frames_per_device, std::uint64_t seed,
                                double pn_offset_hz = 20.0) {
    if (frames_per_device < 10)
        throw std::invalid_argument("gen_awgn_dataset: need at least 10 frames per device");
    if (L_rx < 1) throw std::invalid_argument("gen_awgn_dataset: L_rx must be >= 1");
    Dataset ds;
    Rng root(seed);
    const Signal ref = lltf();
    for (size_t d = 0; d < profiles.size(); ++d) {
        for (int f = 0; f < frames_per_device; ++f) {
            Rng fs = root.substream(1, d, static_cast<std::uint64_t>(f), 0);
            Rng pn = fs.substream(1);
            Signal y = apply_device(profiles[d], ref, pn, pn_offset_hz);
            std::vector<Signal> copies;
            copies.reserve(static_cast<size_t>(L_rx));
            for (int i = 0; i < L_rx; ++i) {
                Rng nz = fs.substream(2, static_cast<std::uint64_t>(i));
                copies.push_back(awgn(y, snr_db, nz));
            }
            ds.frames.push_back(to_frame(simo_average(copies).samples, static_cast<int>(d)));
        }
    }
    Json m = detail::common_manifest(profiles, frames_per_device, seed);
    m["kind"] = "awgn";
    m["channel"] = {{"snr_db", detail::snr_json(snr_db)}, {"L_rx", L_rx}};
    m["pn_offset_hz"] = pn_offset_hz;
    m["frame_normalization"] = "none";
    ds.manifest = std::move(m);
    return ds;
}

enum class RayleighMode { mimo_blind, siso };

struct RayleighGenConfig {
    double apg_db = 0.0;
    double mds_hz = 0.0;
    double block_interval_s = 1.0;
    double ref_snr_db = 40.0; // AWGN floor relative to the transmit power
    double pn_offset_hz = 20.0;
    int blocks_per_frame = 40;
    RayleighMode mode = RayleighMode::mimo_blind;
};

namespace detail {

// one mimo_blind frame: QPSK blocks -> STBC -> per-antenna impairments ->
// per-block Rayleigh channel (Gauss-Markov across blocks) -> blind estimate ->
// equalised symbols, unit-RMS normalised
inline std::vector<std::complex<double>> rayleigh_mimo_frame(
    const DeviceProfile& prof, const StbcCode& code, int L_rx, const RayleighGenConfig& cfg,
    const std::vector<Eigen::VectorXcd>& blocks, Rng& fs) {
    const int n = code.n, K = code.K, M = code.M, l = cfg.blocks_per_frame;

    // encode, then run the impairment chain along each antenna's time series
    std::vector<CMatrix> coded;
    coded.reserve(static_cast<size_t>(l));
    for (int b = 0; b < l; ++b) coded.push_back(encode(code, blocks[static_cast<size_t>(b)]));
    double tx_power = 0.0;
    std::vector<std::vector<std::complex<double>>> streams(
        static_cast<size_t>(M), std::vector<std::complex<double>>(static_cast<size_t>(K * l)));
    for (int m = 0; m < M; ++m)
        for (int b = 0; b < l; ++b)
            for (int k = 0; k < K; ++k)
                streams[static_cast<size_t>(m)][static_cast<size_t>(b * K + k)] =
                    coded[static_cast<size_t>(b)](m, k);
    for (int m = 0; m < M; ++m) {
        Rng ir = fs.substream(4, static_cast<std::uint64_t>(m));
        Signal s{streams[static_cast<size_t>(m)], 20e6};
        Signal imp = apply_device(prof, s, ir, cfg.pn_offset_hz);
        streams[static_cast<size_t>(m)] = std::move(imp.samples);
        for (const auto& v : streams[static_cast<size_t>(m)]) tx_power += std::norm(v);
    }
    tx_power /= static_cast<double>(M * K * l);
    const double noise_sigma = std::sqrt(tx_power * std::pow(10.0, -cfg.ref_snr_db / 10.0));

    Rng chd = fs.substream(2);
    Rng ev = fs.substream(3);
    Rng nz = fs.substream(5);
    RayleighSpec spec{cfg.apg_db, cfg.mds_hz, cfg.block_interval_s};
    MimoChannel ch = draw_rayleigh(L_rx, M, cfg.apg_db, chd, spec);
    Eigen::MatrixXcd R(static_cast<Index>(K) * L_rx, l);
    for (int b = 0; b < l; ++b) {
        if (b > 0) ch = evolve(ch, ev);
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXcd col(M);
            for (int m = 0; m < M; ++m)
                col(m) = streams[static_cast<size_t>(m)][static_cast<size_t>(b * K + k)];
            Eigen::VectorXcd rx = ch.H.mat() * col;
            for (int i = 0; i < L_rx; ++i)
                R(static_cast<Index>(k) * L_rx + i, b) = rx(i) + noise_sigma * nz.cgauss();
        }
    }

    ChannelEstimate est = estimate(CMatrix(R), code, L_rx, 1e-2);
    CMatrix xh = equalize(CMatrix(R), est.h_hat, code, L_rx); // throws when unrecoverable
    std::vector<std::complex<double>> syms(static_cast<size_t>(n * l));
    double power = 0.0;
    for (int b = 0; b < l; ++b)
        for (int i = 0; i < n; ++i) {
            const std::complex<double> v = xh(i, b) + std::complex<double>(0, 1) * xh(n + i, b);
            syms[static_cast<size_t>(b * n + i)] = v;
            power += std::norm(v);
        }
    // The blind scalar ambiguity leaves an arbitrary per-frame scale and
    // rotation. Fix the convention: fourth-power phase estimate snaps the
    // QPSK grid to its canonical orientation (a 90-degree fold remains),
    // then unit-RMS scaling.
    std::complex<double> m4 = 0.0;
    for (const auto& v : syms) m4 += v * v * v * v;
    if (std::abs(m4) > 0.0) {
        const double theta = (std::arg(m4) - M_PI) / 4.0;
        const std::complex<double> rot = std::polar(1.0, -theta);
        for (auto& v : syms) v *= rot;
    }
    power = std::sqrt(power / static_cast<double>(syms.size()));
    if (power == 0.0) throw std::runtime_error("rayleigh frame: zero recovered power");
    for (auto& v : syms) v /= power;
    return syms;
}

// one siso frame: QPSK stream -> device chain -> evolving scalar gain + AWGN
inline std::vector<std::complex<double>> rayleigh_siso_frame(const DeviceProfile& prof,
                                                             int n_per_block,
                                                             const RayleighGenConfig& cfg,
                                                             const Eigen::VectorXcd& syms,
                                                             Rng& fs) {
    Signal s{std::vector<std::complex<double>>(syms.data(), syms.data() + kFrameLen), 20e6};
    Rng ir = fs.substream(2);
    Signal imp = apply_device(prof, s, ir, cfg.pn_offset_hz);
    double tx_power = 0.0;
    for (const auto& v : imp.samples) tx_power += std::norm(v);
    tx_power /= static_cast<double>(imp.samples.size());
    const double noise_sigma = std::sqrt(tx_power * std::pow(10.0, -cfg.ref_snr_db / 10.0));

    Rng chd = fs.substream(3);
    Rng nz = fs.substream(4);
    RayleighSpec spec{cfg.apg_db, cfg.mds_hz, cfg.block_interval_s};
    MimoChannel ch = draw_rayleigh(1, 1, cfg.apg_db, chd, spec);
    std::vector<std::complex<double>> out(static_cast<size_t>(kFrameLen));
    for (int t = 0; t < kFrameLen; ++t) {
        if (t > 0 && t % n_per_block == 0) ch = evolve(ch, chd);
        out[static_cast<size_t>(t)] =
            ch.H(0, 0) * imp.samples[static_cast<size_t>(t)] + noise_sigma * nz.cgauss();
    }
    return out;
}

} // namespace detail

inline Dataset gen_rayleigh_dataset(const std::vector<DeviceProfile>& profiles,
                                    const StbcCode& code, int L_rx,
                                    const RayleighGenConfig& cfg, int frames_per_device,
                                    std::uint64_t seed) {
    if (frames_per_device < 10)
        throw std::invalid_argument("gen_rayleigh_dataset: need at least 10 frames per device");
    if (cfg.mode == RayleighMode::mimo_blind) {
        RminResult rm = search_rmin(code, WitnessMode::gamma, 2000, 12345);
        const int min_l = min_rx_antennas(code, static_cast<int>(rm.best_rank));
        if (L_rx < min_l)
            throw std::invalid_argument("gen_rayleigh_dataset: blind estimation with '" +
                                        code.name + "' needs at least " +
                                        std::to_string(min_l) + " receive antennas");
    }
    if (cfg.blocks_per_frame * code.n != kFrameLen)
        throw std::invalid_argument(
            "gen_rayleigh_dataset: blocks_per_frame * n must equal 160");
    Dataset ds;
    Rng root(seed);
    // every frame carries the same QPSK payload (the Rayleigh-mode analogue of
    // the fixed LLTF probe); frames differ only in channel, noise and the
    // impairment chain's stochastic stage
    Rng prng = root.substream(7);
    std::vector<Eigen::VectorXcd> payload;
    payload.reserve(static_cast<size_t>(cfg.blocks_per_frame));
    for (int b = 0; b < cfg.blocks_per_frame; ++b)
        payload.push_back(qpsk_block(code.n, prng));
    Eigen::VectorXcd payload_flat(static_cast<Index>(cfg.blocks_per_frame) * code.n);
    for (int b = 0; b < cfg.blocks_per_frame; ++b)
        payload_flat.segment(static_cast<Index>(b) * code.n, code.n) =
            payload[static_cast<size_t>(b)];
    long resampled = 0;
    for (size_t d = 0; d < profiles.size(); ++d) {
        for (int f = 0; f < frames_per_device; ++f) {
            for (std::uint64_t attempt = 0;; ++attempt) {
                if (attempt >= 200)
                    throw std::runtime_error("gen_rayleigh_dataset: frame unrecoverable after "
                                             "200 attempts");
                Rng fs = root.substream(1, d, static_cast<std::uint64_t>(f), attempt);
                try {
                    std::vector<std::complex<double>> syms =
                        cfg.mode == RayleighMode::mimo_blind
                            ? detail::rayleigh_mimo_frame(profiles[d], code, L_rx, cfg,
                                                          payload, fs)
                            : detail::rayleigh_siso_frame(profiles[d], code.n, cfg,
                                                          payload_flat, fs);
                    ds.frames.push_back(to_frame(syms, static_cast<int>(d)));
                    break;
                } catch (const std::runtime_error&) {
                    ++resampled; // deep fade or rank-deficient equaliser: try next substream
                }
            }
        }
    }
    Json m = detail::common_manifest(profiles, frames_per_device, seed);
    m["kind"] = "rayleigh";
    m["mode"] = cfg.mode == RayleighMode::mimo_blind ? "mimo_blind" : "siso";
    m["channel"] = {{"apg_db", cfg.apg_db},
                    {"mds_hz", cfg.mds_hz},
                    {"block_interval_s", cfg.block_interval_s},
                    {"ref_snr_db", cfg.ref_snr_db},
                    {"pn_offset_hz", cfg.pn_offset_hz},
                    {"L_rx", L_rx},
                    {"code", code.name},
                    {"blocks_per_frame", cfg.blocks_per_frame}};
    m["frame_normalization"] =
        cfg.mode == RayleighMode::mimo_blind ? "qpsk_phase_unit_rms" : "none";
    m["payload"] = "fixed_qpsk_substream_7";
    m["resampled_frames"] = resampled;
    ds.manifest = std::move(m);
    return ds;
}

// stratified 80/10/10 split, deterministic for a fixed seed
inline Dataset split(Dataset ds, std::uint64_t seed) {
    if (ds.frames.size() < 10) throw std::invalid_argument("split: need at least 10 frames");
    ds.split.train.clear();
    ds.split.val.clear();
    ds.split.test.clear();
    int max_label = 0;
    for (const auto& f : ds.frames) max_label = std::max(max_label, f.label);
    Rng root(seed);
    for (int lab = 0; lab <= max_label; ++lab) {
        std::vector<int> idx;
        for (size_t i = 0; i < ds.frames.size(); ++i)
            if (ds.frames[i].label == lab) idx.push_back(static_cast<int>(i));
        Rng sh = root.substream(2, static_cast<std::uint64_t>(lab));
        for (size_t i = idx.size(); i > 1; --i) // Fisher-Yates
            std::swap(idx[i - 1], idx[sh.uniform_index(i)]);
        const size_t nlab = idx.size();
        const size_t nval = static_cast<size_t>(std::lround(0.1 * static_cast<double>(nlab)));
        const size_t ntest = nval;
        const size_t ntrain = nlab - nval - ntest;
        for (size_t i = 0; i < ntrain; ++i) ds.split.train.push_back(idx[i]);
        for (size_t i = ntrain; i < ntrain + nval; ++i) ds.split.val.push_back(idx[i]);
        for (size_t i = ntrain + nval; i < nlab; ++i) ds.split.test.push_back(idx[i]);
    }
    ds.manifest["split"] = {{"seed", seed},
                            {"train", ds.split.train.size()},
                            {"val", ds.split.val.size()},
                            {"test", ds.split.test.size()}};
    return ds;
}

// <prefix>.manifest.json + <prefix>.frames.bin ("MFPB", version byte, u32
// frame count, then per frame a u16 label and 320 float32 little-endian values)
inline void save(const Dataset& ds, const std::string& prefix) {
    {
        std::ofstream mf(prefix + ".manifest.json");
        if (!mf) throw std::runtime_error("save: cannot write " + prefix + ".manifest.json");
        mf << ds.manifest.dump(2) << "\n";
    }
    std::ofstream bf(prefix + ".frames.bin", std::ios::binary);
    if (!bf) throw std::runtime_error("save: cannot write " + prefix + ".frames.bin");
    const char magic[4] = {'M', 'F', 'P', 'B'};
    bf.write(magic, 4);
    const unsigned char version = 1;
    bf.write(reinterpret_cast<const char*>(&version), 1);
    const std::uint32_t count = static_cast<std::uint32_t>(ds.frames.size());
    bf.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& f : ds.frames) {
        const std::uint16_t lab = static_cast<std::uint16_t>(f.label);
        bf.write(reinterpret_cast<const char*>(&lab), 2);
        bf.write(reinterpret_cast<const char*>(f.tensor.data()),
                 static_cast<std::streamsize>(f.tensor.size() * sizeof(float)));
    }
    // split indices ride along so a loaded dataset trains identically
    const std::uint32_t marks[3] = {static_cast<std::uint32_t>(ds.split.train.size()),
                                    static_cast<std::uint32_t>(ds.split.val.size()),
                                    static_cast<std::uint32_t>(ds.split.test.size())};
    bf.write(reinterpret_cast<const char*>(marks), sizeof(marks));
    for (const auto* part : {&ds.split.train, &ds.split.val, &ds.split.test})
        for (int i : *part) {
            const std::uint32_t v = static_cast<std::uint32_t>(i);
            bf.write(reinterpret_cast<const char*>(&v), 4);
        }
    if (!bf) throw std::runtime_error("save: short write to " + prefix + ".frames.bin");
}

inline Dataset load(const std::string& prefix) {
    Dataset ds;
    {
        std::ifstream mf(prefix + ".manifest.json");
        if (!mf) throw std::runtime_error("load: cannot open " + prefix + ".manifest.json");
        ds.manifest = Json::parse(mf);
    }
    std::ifstream bf(prefix + ".frames.bin", std::ios::binary);
    if (!bf) throw std::runtime_error("load: cannot open " + prefix + ".frames.bin");
    char magic[4];
    bf.read(magic, 4);
    if (!bf || std::memcmp(magic, "MFPB", 4) != 0)
        throw std::runtime_error("load: bad magic in " + prefix + ".frames.bin");
    unsigned char version = 0;
    bf.read(reinterpret_cast<char*>(&version), 1);
    if (version != 1)
        throw std::runtime_error("load: unsupported frames.bin version " +
                                 std::to_string(static_cast<int>(version)));
    std::uint32_t count = 0;
    bf.read(reinterpret_cast<char*>(&count), 4);
    ds.frames.resize(count);
    for (auto& f : ds.frames) {
        std::uint16_t lab = 0;
        bf.read(reinterpret_cast<char*>(&lab), 2);
        f.label = lab;
        bf.read(reinterpret_cast<char*>(f.tensor.data()),
                static_cast<std::streamsize>(f.tensor.size() * sizeof(float)));
    }
    std::uint32_t marks[3] = {0, 0, 0};
    bf.read(reinterpret_cast<char*>(marks), sizeof(marks));
    if (!bf) throw std::runtime_error("load: truncated " + prefix + ".frames.bin");
    for (auto [part, count2] : {std::pair{&ds.split.train, marks[0]},
                                std::pair{&ds.split.val, marks[1]},
                                std::pair{&ds.split.test, marks[2]}}) {
        part->resize(count2);
        for (auto& i : *part) {
            std::uint32_t v = 0;
            bf.read(reinterpret_cast<char*>(&v), 4);
            i = static_cast<int>(v);
        }
    }
    if (!bf) throw std::runtime_error("load: truncated split table in " + prefix);
    return ds;
}

} // namespace mimofp
