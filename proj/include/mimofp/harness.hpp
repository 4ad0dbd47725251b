#pragma once

#include "mimofp/blind.hpp"
#include "mimofp/channel.hpp"
#include "mimofp/classifier.hpp"
#include "mimofp/stbc.hpp"
#include "mimofp/waveform.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mimofp {

// config problems exit the CLI with code 2, runtime failures with 3
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_keys(const Json& j, const std::set<std::string>& allowed,
                         const std::string& ctx) {
    if (!j.is_object()) throw ConfigError("config: " + ctx + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (allowed.find(it.key()) == allowed.end())
            throw ConfigError("config: unknown key '" + it.key() + "' in " + ctx);
}

template <typename T>
T get_or(const Json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
}

inline std::vector<double> num_list(const Json& j, const std::string& key) {
    std::vector<double> out;
    for (const auto& v : j.at(key)) out.push_back(detail::snr_from_json(v));
    if (out.empty()) throw ConfigError("config: '" + key + "' must be a nonempty list");
    return out;
}

inline std::string fmt6(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace detail

struct ExperimentConfig {
    std::string experiment;
    std::vector<DeviceProfile> profiles;
    std::string code_name = "tarokh_g3";
    std::vector<int> l_rx_list{1, 2, 6};          // awgn systems
    double train_snr_db = 20.0;
    std::vector<double> test_snr_db{20, 15, 10, 5, 0, -10};
    std::vector<double> train_apg_db{-20, -10, 0, 10, 20};
    std::vector<double> test_apg_db{-20, -10, 0, 10, 20};
    double apg_fixed_mds_hz = 0.0;
    std::vector<double> train_mds_hz{1.0 / 2000, 1.0 / 1000, 1.0 / 100, 1.0 / 10, 1.0};
    std::vector<double> test_mds_hz{1.0 / 2000, 1.0 / 1000, 1.0 / 100, 1.0 / 10, 1.0};
    double mds_fixed_apg_db = -20.0;
    int rayleigh_l_rx = 3;
    double ref_snr_db = 40.0;
    int blocks_per_frame = 40;
    double block_interval_s = 1.0;
    std::vector<double> blind_snr_db{std::numeric_limits<double>::infinity(), 30, 20, 10, 0};
    int blind_trials = 100;
    int blind_blocks = 64;
    int ident_trials = 10000;
    std::vector<std::string> ident_codes{"alamouti", "tarokh_g3"};
    int frames_per_device = 500;
    TrainConfig train_cfg;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    Json raw; // normalised config for serialisation

    // gen/train/eval payloads
    Json dataset, fit, eval_cfg;
};

inline StbcCode code_by_name(const std::string& name) {
    if (name == "alamouti") return alamouti();
    if (name == "tarokh_g3") return tarokh_g3();
    throw ConfigError("config: unknown code '" + name + "'");
}

inline ExperimentConfig parse_config(const Json& j) {
    detail::require_keys(j, {"schema_version", "experiment", "devices", "code", "L_rx",
                             "train_snr_db", "test_snr_db", "apg", "mds", "rayleigh",
                             "blind_demo", "identifiability", "frames_per_device", "train",
                             "seed", "out_dir", "dataset", "fit", "eval"},
                         "top level");
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
        throw ConfigError("config: schema_version must be 1");
    ExperimentConfig c;
    c.raw = j;
    c.experiment = detail::get_or<std::string>(j, "experiment", "");
    if (j.contains("devices")) {
        if (j.at("devices").is_string()) {
            if (j.at("devices").get<std::string>() != "default10")
                throw ConfigError("config: unknown device set '" +
                                  j.at("devices").get<std::string>() + "'");
            c.profiles = default_profiles();
        } else {
            for (const auto& p : j.at("devices")) c.profiles.push_back(detail::profile_from_json(p));
        }
    } else {
        c.profiles = default_profiles();
    }
    c.code_name = detail::get_or<std::string>(j, "code", c.code_name);
    if (j.contains("L_rx")) {
        c.l_rx_list.clear();
        for (const auto& v : j.at("L_rx")) c.l_rx_list.push_back(v.get<int>());
        if (c.l_rx_list.empty()) throw ConfigError("config: L_rx must be nonempty");
    }
    c.train_snr_db = j.contains("train_snr_db")
                         ? detail::snr_from_json(j.at("train_snr_db"))
                         : c.train_snr_db;
    if (j.contains("test_snr_db")) c.test_snr_db = detail::num_list(j, "test_snr_db");
    if (j.contains("apg")) {
        const Json& a = j.at("apg");
        detail::require_keys(a, {"train", "test", "mds_hz"}, "apg");
        if (a.contains("train")) c.train_apg_db = detail::num_list(a, "train");
        if (a.contains("test")) c.test_apg_db = detail::num_list(a, "test");
        c.apg_fixed_mds_hz = detail::get_or<double>(a, "mds_hz", c.apg_fixed_mds_hz);
    }
    if (j.contains("mds")) {
        const Json& a = j.at("mds");
        detail::require_keys(a, {"train", "test", "apg_db"}, "mds");
        if (a.contains("train")) c.train_mds_hz = detail::num_list(a, "train");
        if (a.contains("test")) c.test_mds_hz = detail::num_list(a, "test");
        c.mds_fixed_apg_db = detail::get_or<double>(a, "apg_db", c.mds_fixed_apg_db);
    }
    if (j.contains("rayleigh")) {
        const Json& a = j.at("rayleigh");
        detail::require_keys(a, {"L_rx", "ref_snr_db", "blocks_per_frame", "block_interval_s"},
                             "rayleigh");
        c.rayleigh_l_rx = detail::get_or<int>(a, "L_rx", c.rayleigh_l_rx);
        c.ref_snr_db = detail::get_or<double>(a, "ref_snr_db", c.ref_snr_db);
        c.blocks_per_frame = detail::get_or<int>(a, "blocks_per_frame", c.blocks_per_frame);
        c.block_interval_s = detail::get_or<double>(a, "block_interval_s", c.block_interval_s);
    }
    if (j.contains("blind_demo")) {
        const Json& a = j.at("blind_demo");
        detail::require_keys(a, {"snr_db", "trials", "l_blocks", "L_rx"}, "blind_demo");
        if (a.contains("snr_db")) c.blind_snr_db = detail::num_list(a, "snr_db");
        c.blind_trials = detail::get_or<int>(a, "trials", c.blind_trials);
        c.blind_blocks = detail::get_or<int>(a, "l_blocks", c.blind_blocks);
        if (a.contains("L_rx")) c.rayleigh_l_rx = a.at("L_rx").get<int>();
    }
    if (j.contains("identifiability")) {
        const Json& a = j.at("identifiability");
        detail::require_keys(a, {"trials", "codes"}, "identifiability");
        c.ident_trials = detail::get_or<int>(a, "trials", c.ident_trials);
        if (a.contains("codes")) {
            c.ident_codes.clear();
            for (const auto& v : a.at("codes")) c.ident_codes.push_back(v.get<std::string>());
        }
    }
    c.frames_per_device = detail::get_or<int>(j, "frames_per_device", c.frames_per_device);
    if (j.contains("train")) {
        const Json& a = j.at("train");
        detail::require_keys(a, {"learning_rate", "batch_size", "epochs"}, "train");
        c.train_cfg.learning_rate = detail::get_or<double>(a, "learning_rate", 1e-4);
        c.train_cfg.batch_size = detail::get_or<int>(a, "batch_size", 64);
        c.train_cfg.epochs = detail::get_or<int>(a, "epochs", 30);
        if (!(c.train_cfg.learning_rate > 0.0) || c.train_cfg.batch_size < 1)
            throw ConfigError("config: bad train section");
    }
    c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
    c.out_dir = detail::get_or<std::string>(j, "out_dir", c.out_dir);
    c.dataset = j.contains("dataset") ? j.at("dataset") : Json();
    c.fit = j.contains("fit") ? j.at("fit") : Json();
    c.eval_cfg = j.contains("eval") ? j.at("eval") : Json();
    return c;
}

inline Json serialize_config(const ExperimentConfig& c) { return c.raw; }

inline Json preset_config(const std::string& name) {
    Json j;
    j["schema_version"] = 1;
    j["devices"] = "default10";
    j["seed"] = 1;
    j["out_dir"] = "out";
    const bool paper = name.rfind("paper-", 0) == 0;
    j["frames_per_device"] = paper ? 5000 : 500;
    j["train"] = {{"learning_rate", 1e-4}, {"batch_size", 64}, {"epochs", 30}};
    const std::string kind = paper ? name.substr(6) : (name.rfind("desk-", 0) == 0 ? name.substr(5) : name);
    if (kind == "awgn") {
        j["experiment"] = "awgn_sweep";
        j["L_rx"] = {1, 2, 6};
        j["train_snr_db"] = 20.0;
        j["test_snr_db"] = {20.0, 15.0, 10.0, 5.0, 0.0, -10.0};
    } else if (kind == "apg") {
        j["experiment"] = "apg_sweep";
        j["code"] = "tarokh_g3";
        j["apg"] = {{"train", {-20.0, -10.0, 0.0, 10.0, 20.0}},
                    {"test", {-20.0, -10.0, 0.0, 10.0, 20.0}},
                    {"mds_hz", 0.0}};
    } else if (kind == "mds") {
        j["experiment"] = "mds_sweep";
        j["code"] = "tarokh_g3";
        j["mds"] = {{"train", {5e-4, 1e-3, 1e-2, 1e-1, 1.0}},
                    {"test", {5e-4, 1e-3, 1e-2, 1e-1, 1.0}},
                    {"apg_db", -20.0}};
    } else if (kind == "blind") {
        j["experiment"] = "blind_demo";
        j["code"] = "tarokh_g3";
    } else if (kind == "identifiability") {
        j["experiment"] = "identifiability_report";
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return j;
}

struct ResultRow {
    std::string experiment;
    std::string system;
    int l_rx = 1;
    double train_param = 0.0, test_param = 0.0;
    double train_acc = 0.0, test_acc = 0.0;
    std::optional<double> rdtg_pct;
    std::optional<double> simo_gain;
    double wall_s = 0.0;
    std::uint64_t seed = 0;
};

inline std::string results_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "experiment,system,l_rx,train_param,test_param,train_acc,test_acc,rdtg,simo_gain,seed\n";
    for (const auto& r : rows) {
        os << r.experiment << ',' << r.system << ',' << r.l_rx << ','
           << detail::fmt6(r.train_param) << ',' << detail::fmt6(r.test_param) << ','
           << detail::fmt6(r.train_acc) << ',' << detail::fmt6(r.test_acc) << ','
           << (r.rdtg_pct ? detail::fmt6(*r.rdtg_pct) : std::string()) << ','
           << (r.simo_gain ? detail::fmt6(*r.simo_gain) : std::string()) << ',' << r.seed
           << "\n";
    }
    return os.str();
}

inline std::string timing_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "experiment,system,l_rx,train_param,test_param,wall_s\n";
    for (const auto& r : rows)
        os << r.experiment << ',' << r.system << ',' << r.l_rx << ','
           << detail::fmt6(r.train_param) << ',' << detail::fmt6(r.test_param) << ','
           << detail::fmt6(r.wall_s) << "\n";
    return os.str();
}

namespace detail {

inline double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace detail

// Figures 1-2 style experiment: train per L at the fixed training SNR, test
// across the SNR grid; emits the SIMO-over-SISO gain against the L=1 baseline.
inline std::vector<ResultRow> run_awgn_sweep(const ExperimentConfig& cfg) {
    std::vector<int> ls = cfg.l_rx_list;
    if (std::find(ls.begin(), ls.end(), 1) == ls.end()) ls.insert(ls.begin(), 1);
    std::sort(ls.begin(), ls.end());
    Rng root(cfg.seed);
    std::vector<ResultRow> rows;
    std::map<double, double> siso_acc; // test param -> SISO accuracy

    for (size_t li = 0; li < ls.size(); ++li) {
        const int L = ls[li];
        const double t0 = detail::now_s();
        Dataset train_ds = split(gen_awgn_dataset(cfg.profiles, cfg.train_snr_db, L,
                                                  cfg.frames_per_device,
                                                  root.substream(10, li).seed()),
                                 root.substream(20, li).seed());
        TrainConfig tc = cfg.train_cfg;
        tc.seed = root.substream(30, li).seed();
        TrainResult tr = train(cnn::init(root.substream(40, li).seed()), train_ds, tc);
        const double train_acc = evaluate(tr.model, train_ds.frames, train_ds.split.train);
        const double acc_same = evaluate(tr.model, train_ds.frames, train_ds.split.test);
        const double t_train = detail::now_s() - t0;

        for (size_t ti = 0; ti < cfg.test_snr_db.size(); ++ti) {
            const double tsnr = cfg.test_snr_db[ti];
            ResultRow r;
            r.experiment = "awgn_sweep";
            r.system = L == 1 ? "siso" : "simo_" + std::to_string(L);
            r.l_rx = L;
            r.train_param = cfg.train_snr_db;
            r.test_param = tsnr;
            r.train_acc = train_acc;
            r.seed = cfg.seed;
            const double t1 = detail::now_s();
            if (tsnr == cfg.train_snr_db) {
                r.test_acc = acc_same;
                r.wall_s = t_train;
            } else {
                Dataset test_ds = split(gen_awgn_dataset(cfg.profiles, tsnr, L,
                                                         cfg.frames_per_device,
                                                         root.substream(11, li, ti).seed()),
                                        root.substream(21, li, ti).seed());
                r.test_acc = evaluate(tr.model, test_ds.frames, test_ds.split.test);
                if (acc_same > 0.0) r.rdtg_pct = rdtg(acc_same, r.test_acc);
                r.wall_s = detail::now_s() - t1;
            }
            if (L == 1)
                siso_acc[tsnr] = r.test_acc;
            else if (siso_acc.count(tsnr))
                r.simo_gain = r.test_acc - siso_acc[tsnr];
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

namespace detail {

// shared machinery for the Rayleigh sweeps: grid of train/test channel
// parameters for the siso and mimo_blind systems
inline std::vector<ResultRow> rayleigh_sweep(const ExperimentConfig& cfg,
                                             const std::string& experiment,
                                             const std::vector<double>& train_grid,
                                             const std::vector<double>& test_grid,
                                             bool sweep_apg) {
    StbcCode code = code_by_name(cfg.code_name);
    Rng root(cfg.seed);
    std::vector<ResultRow> rows;
    const std::vector<RayleighMode> systems{RayleighMode::siso, RayleighMode::mimo_blind};
    for (size_t si = 0; si < systems.size(); ++si) {
        const RayleighMode mode = systems[si];
        for (size_t gi = 0; gi < train_grid.size(); ++gi) {
            RayleighGenConfig gc;
            gc.apg_db = sweep_apg ? train_grid[gi] : cfg.mds_fixed_apg_db;
            gc.mds_hz = sweep_apg ? cfg.apg_fixed_mds_hz : train_grid[gi];
            gc.block_interval_s = cfg.block_interval_s;
            gc.ref_snr_db = cfg.ref_snr_db;
            gc.blocks_per_frame = cfg.blocks_per_frame;
            gc.mode = mode;
            const int L = mode == RayleighMode::mimo_blind ? cfg.rayleigh_l_rx : 1;
            const double t0 = now_s();
            Dataset train_ds = split(gen_rayleigh_dataset(cfg.profiles, code, L, gc,
                                                          cfg.frames_per_device,
                                                          root.substream(10, si, gi).seed()),
                                     root.substream(20, si, gi).seed());
            TrainConfig tc = cfg.train_cfg;
            tc.seed = root.substream(30, si, gi).seed();
            TrainResult tr = train(cnn::init(root.substream(40, si, gi).seed()), train_ds, tc);
            const double train_acc = evaluate(tr.model, train_ds.frames, train_ds.split.train);
            const double acc_same = evaluate(tr.model, train_ds.frames, train_ds.split.test);
            const double t_train = now_s() - t0;

            for (size_t ti = 0; ti < test_grid.size(); ++ti) {
                ResultRow r;
                r.experiment = experiment;
                r.system = mode == RayleighMode::mimo_blind ? "mimo_blind" : "siso";
                r.l_rx = L;
                r.train_param = train_grid[gi];
                r.test_param = test_grid[ti];
                r.train_acc = train_acc;
                r.seed = cfg.seed;
                const double t1 = now_s();
                if (test_grid[ti] == train_grid[gi]) {
                    r.test_acc = acc_same;
                    r.wall_s = t_train;
                } else {
                    RayleighGenConfig tg = gc;
                    if (sweep_apg)
                        tg.apg_db = test_grid[ti];
                    else
                        tg.mds_hz = test_grid[ti];
                    Dataset test_ds =
                        split(gen_rayleigh_dataset(cfg.profiles, code, L, tg,
                                                   cfg.frames_per_device,
                                                   root.substream(11, si, ti).seed()),
                              root.substream(21, si, ti).seed());
                    r.test_acc = evaluate(tr.model, test_ds.frames, test_ds.split.test);
                    if (acc_same > 0.0) r.rdtg_pct = rdtg(acc_same, r.test_acc);
                    r.wall_s = now_s() - t1;
                }
                rows.push_back(std::move(r));
            }
        }
    }
    return rows;
}

} // namespace detail

inline std::vector<ResultRow> run_apg_sweep(const ExperimentConfig& cfg) {
    return detail::rayleigh_sweep(cfg, "apg_sweep", cfg.train_apg_db, cfg.test_apg_db, true);
}

inline std::vector<ResultRow> run_mds_sweep(const ExperimentConfig& cfg) {
    return detail::rayleigh_sweep(cfg, "mds_sweep", cfg.train_mds_hz, cfg.test_mds_hz, false);
}

// Monte-Carlo diagnostic of the blind estimator: per SNR, median and 90th
// percentile alignment error and the median ambiguity dimension
inline std::string run_blind_demo(const ExperimentConfig& cfg) {
    StbcCode code = code_by_name(cfg.code_name);
    const int L = cfg.rayleigh_l_rx;
    const int l = cfg.blind_blocks;
    Rng root(cfg.seed);
    std::ostringstream os;
    os << "snr_db,median_err,p90_err,median_ambiguity_dim\n";
    for (double snr : cfg.blind_snr_db) {
        std::vector<double> errs;
        std::vector<double> ambs;
        for (int t = 0; t < cfg.blind_trials; ++t) {
            Rng rs = root.substream(50, static_cast<std::uint64_t>(t));
            Eigen::MatrixXcd h(L, code.M);
            for (Index i = 0; i < h.size(); ++i) h(i / code.M, i % code.M) = rs.cgauss();
            MimoChannel ch{CMatrix(h), RayleighSpec{}};
            Eigen::MatrixXd X(2 * code.n, l);
            for (int b = 0; b < l; ++b) {
                Eigen::VectorXcd s = qpsk_block(code.n, rs);
                X.col(b) << s.real(), s.imag();
            }
            CMatrix clean = transmit_block(ch, code, X, 0.0, rs);
            double sigma = 0.0;
            if (!std::isinf(snr)) {
                const double p = clean.mat().squaredNorm() / static_cast<double>(clean.size());
                sigma = std::sqrt(p * std::pow(10.0, -snr / 10.0));
            }
            Eigen::MatrixXcd noisy = clean.mat();
            if (sigma > 0.0)
                for (Index j = 0; j < noisy.cols(); ++j)
                    for (Index i = 0; i < noisy.rows(); ++i) noisy(i, j) += sigma * rs.cgauss();
            const double amb_tol = std::isinf(snr) ? 1e-6 : 1e-2;
            ChannelEstimate est = estimate(CMatrix(noisy), code, L, amb_tol);
            Eigen::VectorXcd htrue = Eigen::Map<Eigen::VectorXcd>(h.data(), h.size());
            errs.push_back(alignment_error(est.h_hat, htrue));
            ambs.push_back(static_cast<double>(est.ambiguity_dim));
        }
        std::sort(errs.begin(), errs.end());
        std::sort(ambs.begin(), ambs.end());
        const size_t n = errs.size();
        os << detail::fmt6(snr) << ',' << detail::fmt6(errs[n / 2]) << ','
           << detail::fmt6(errs[(n * 9) / 10]) << ',' << detail::fmt6(ambs[n / 2]) << "\n";
    }
    return os.str();
}

struct IdentifiabilityRow {
    std::string name;
    int M, n, K;
    Index rho;
    Index r_min, r_min_prime;
    Index rank_c;
    int min_rx;
    std::string flags;
};

// Table-1 style report. Known codes carry expected r_min'/rho values; a
// mismatch is flagged in the output instead of aborting the run.
inline std::vector<IdentifiabilityRow> run_identifiability_report(
    const std::vector<std::string>& names, int trials, std::uint64_t seed) {
    std::vector<IdentifiabilityRow> rows;
    for (size_t ci = 0; ci < names.size(); ++ci) {
        StbcCode code = code_by_name(names[ci]);
        IdentifiabilityRow row;
        row.name = code.name;
        row.M = code.M;
        row.n = code.n;
        row.K = code.K;
        row.rank_c = numerical_rank(stacked_code(code));
        IdentifiabilityReport rep = identifiability(code);
        row.rho = rep.rho;
        std::string flags;
        try {
            RminResult rm = search_rmin(code, WitnessMode::gamma, trials,
                                        Rng(seed).substream(60, ci).seed());
            row.r_min = rm.best_rank;
        } catch (const std::runtime_error&) {
            row.r_min = -1;
            flags += "r_min search failed; ";
        }
        try {
            RminResult rp = search_rmin(code, WitnessMode::gamma_phi, trials,
                                        Rng(seed).substream(61, ci).seed());
            row.r_min_prime = rp.best_rank;
        } catch (const std::runtime_error&) {
            row.r_min_prime = -1;
            flags += "r_min' search failed; ";
        }
        row.min_rx = row.r_min >= 1 ? min_rx_antennas(code, static_cast<int>(row.r_min)) : -1;
        // published reference values for the registered generic codes
        struct Expect { const char* name; Index rho, rmin, rminp; };
        static const Expect known[] = {{"alamouti", 4, 1, 2}, {"tarokh_g3", 1, 1, 3}};
        for (const auto& k : known) {
            if (row.name != k.name) continue;
            if (row.rho != k.rho)
                flags += "rho mismatch (expected " + std::to_string(k.rho) + "); ";
            if (row.r_min != k.rmin)
                flags += "r_min mismatch (expected " + std::to_string(k.rmin) + "); ";
            if (row.r_min_prime != k.rminp)
                flags += "r_min' of " + std::to_string(row.r_min_prime) + " departs from the "
                         "published " + std::to_string(k.rminp) +
                         " (gamma_phi block convention, see README); ";
        }
        row.flags = flags;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string identifiability_csv(const std::vector<IdentifiabilityRow>& rows) {
    std::ostringstream os;
    os << "code,M,n,K,rho,r_min,r_min_prime,rank_c,min_rx_antennas,flags\n";
    for (const auto& r : rows)
        os << r.name << ',' << r.M << ',' << r.n << ',' << r.K << ',' << r.rho << ','
           << r.r_min << ',' << r.r_min_prime << ',' << r.rank_c << ',' << r.min_rx << ",\""
           << r.flags << "\"\n";
    return os.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << contents;
}

} // namespace mimofp
