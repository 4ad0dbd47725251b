// Command-line front end: dataset generation, CNN training/evaluation, the
// channel-mismatch sweep experiments, the blind-estimator diagnostic and the
// STBC identifiability report.

#include <CLI11.hpp>

#include <mimofp/harness.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace mimofp;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment config");
    cmd->add_option("--preset", o.preset,
                    "named preset (desk-awgn, desk-apg, desk-mds, desk-blind, "
                    "identifiability; paper-* variants)");
    cmd->add_option("--seed", o.seed, "override the config seed");
    cmd->add_option("--out", o.out_dir, "override the output directory");
}

ExperimentConfig load_config(const CommonOpts& o) {
    Json j;
    if (!o.config_path.empty()) {
        std::ifstream f(o.config_path);
        if (!f) throw ConfigError("cannot open config " + o.config_path);
        try {
            j = Json::parse(f);
        } catch (const Json::exception& e) {
            throw ConfigError(std::string("config parse: ") + e.what());
        }
    } else if (!o.preset.empty()) {
        j = preset_config(o.preset);
    } else {
        throw ConfigError("either --config or --preset is required");
    }
    ExperimentConfig cfg = parse_config(j);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    return cfg;
}

void ensure_out(const ExperimentConfig& cfg) { fs::create_directories(cfg.out_dir); }

Dataset generate_from_config(const ExperimentConfig& cfg, std::string& name) {
    const Json& d = cfg.dataset;
    if (d.is_null()) throw ConfigError("config: 'dataset' section required for gen");
    detail::require_keys(d, {"type", "name", "snr_db", "L_rx", "mode", "apg_db", "mds_hz",
                             "ref_snr_db", "blocks_per_frame", "block_interval_s",
                             "frames_per_device"},
                         "dataset");
    name = detail::get_or<std::string>(d, "name", "dataset");
    const std::string type = d.at("type").get<std::string>();
    const int fpd = detail::get_or<int>(d, "frames_per_device", cfg.frames_per_device);
    if (type == "awgn") {
        const double snr = d.contains("snr_db") ? detail::snr_from_json(d.at("snr_db")) : 20.0;
        const int L = detail::get_or<int>(d, "L_rx", 1);
        Dataset ds = gen_awgn_dataset(cfg.profiles, snr, L, fpd, cfg.seed);
        return split(std::move(ds), Rng(cfg.seed).substream(2).seed());
    }
    if (type == "rayleigh") {
        RayleighGenConfig gc;
        gc.apg_db = detail::get_or<double>(d, "apg_db", 0.0);
        gc.mds_hz = detail::get_or<double>(d, "mds_hz", 0.0);
        gc.ref_snr_db = detail::get_or<double>(d, "ref_snr_db", cfg.ref_snr_db);
        gc.blocks_per_frame = detail::get_or<int>(d, "blocks_per_frame", cfg.blocks_per_frame);
        gc.block_interval_s = detail::get_or<double>(d, "block_interval_s", cfg.block_interval_s);
        const std::string mode = detail::get_or<std::string>(d, "mode", "mimo_blind");
        if (mode != "mimo_blind" && mode != "siso")
            throw ConfigError("dataset.mode must be mimo_blind or siso");
        gc.mode = mode == "siso" ? RayleighMode::siso : RayleighMode::mimo_blind;
        const int L = detail::get_or<int>(d, "L_rx",
                                          gc.mode == RayleighMode::siso ? 1 : cfg.rayleigh_l_rx);
        Dataset ds = gen_rayleigh_dataset(cfg.profiles, code_by_name(cfg.code_name), L, gc,
                                          fpd, cfg.seed);
        return split(std::move(ds), Rng(cfg.seed).substream(2).seed());
    }
    throw ConfigError("dataset.type must be awgn or rayleigh");
}

int cmd_gen(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    ensure_out(cfg);
    std::string name;
    Dataset ds = generate_from_config(cfg, name);
    const std::string prefix = (fs::path(cfg.out_dir) / name).string();
    save(ds, prefix);
    std::printf("wrote %s.manifest.json + %s.frames.bin (%zu frames)\n", prefix.c_str(),
                prefix.c_str(), ds.frames.size());
    return 0;
}

int cmd_train(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    ensure_out(cfg);
    const Json& t = cfg.fit;
    if (t.is_null()) throw ConfigError("config: 'fit' section required for train");
    detail::require_keys(t, {"dataset", "name"}, "fit");
    const std::string prefix = t.at("dataset").get<std::string>();
    const std::string name = detail::get_or<std::string>(t, "name", "model");
    Dataset ds = load(prefix);
    if (ds.split.train.empty())
        throw ConfigError("dataset at " + prefix + " has no split; regenerate with gen");
    TrainConfig tc = cfg.train_cfg;
    tc.seed = Rng(cfg.seed).substream(3).seed();
    TrainResult r = train(cnn::init(Rng(cfg.seed).substream(4).seed()), ds, tc);
    const std::string ckpt = (fs::path(cfg.out_dir) / (name + ".ckpt")).string();
    save_model(r.model, ckpt);
    std::ostringstream hist;
    hist << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& e : r.history)
        hist << e.epoch << ',' << detail::fmt6(e.train_loss) << ',' << detail::fmt6(e.train_acc)
             << ',' << detail::fmt6(e.val_loss) << ',' << detail::fmt6(e.val_acc) << "\n";
    write_file((fs::path(cfg.out_dir) / (name + ".history.csv")).string(), hist.str());
    std::printf("wrote %s (best val acc %.6g%%)\n", ckpt.c_str(),
                evaluate(r.model, ds.frames, ds.split.val));
    return 0;
}

int cmd_eval(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    ensure_out(cfg);
    const Json& e = cfg.eval_cfg;
    if (e.is_null()) throw ConfigError("config: 'eval' section required for eval");
    detail::require_keys(e, {"checkpoint", "dataset", "split"}, "eval");
    CnnModel m = load_model(e.at("checkpoint").get<std::string>());
    Dataset ds = load(e.at("dataset").get<std::string>());
    const std::string which = detail::get_or<std::string>(e, "split", "test");
    const std::vector<int>* idx = &ds.split.test;
    if (which == "train") idx = &ds.split.train;
    else if (which == "val") idx = &ds.split.val;
    else if (which != "test") throw ConfigError("eval.split must be train, val or test");
    const double acc = evaluate(m, ds.frames, *idx);
    std::printf("accuracy on %s split: %.6g%%\n", which.c_str(), acc);
    std::ostringstream os;
    os << "split,accuracy\n" << which << ',' << detail::fmt6(acc) << "\n";
    write_file((fs::path(cfg.out_dir) / "eval.csv").string(), os.str());
    return 0;
}

int run_sweep(const CommonOpts& o, const std::string& kind) {
    ExperimentConfig cfg = load_config(o);
    ensure_out(cfg);
    std::vector<ResultRow> rows;
    if (kind == "awgn") rows = run_awgn_sweep(cfg);
    else if (kind == "apg") rows = run_apg_sweep(cfg);
    else rows = run_mds_sweep(cfg);
    const std::string base = (fs::path(cfg.out_dir) / ("results_" + kind)).string();
    write_file(base + ".csv", results_csv(rows));
    write_file(base + ".timing.csv", timing_csv(rows));
    std::printf("wrote %s.csv (%zu rows)\n", base.c_str(), rows.size());
    return 0;
}

int cmd_blind_demo(const CommonOpts& o) {
    ExperimentConfig cfg = load_config(o);
    ensure_out(cfg);
    const std::string csv = run_blind_demo(cfg);
    const std::string path = (fs::path(cfg.out_dir) / "blind_demo.csv").string();
    write_file(path, csv);
    std::fputs(csv.c_str(), stdout);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_identifiability(const CommonOpts& o) {
    CommonOpts opts = o;
    if (opts.config_path.empty() && opts.preset.empty()) opts.preset = "identifiability";
    ExperimentConfig cfg = load_config(opts);
    ensure_out(cfg);
    auto rows = run_identifiability_report(cfg.ident_codes, cfg.ident_trials, cfg.seed);
    std::printf("%-12s %-9s %4s %6s %7s %7s %7s  %s\n", "code", "(M,n,K)", "rho", "r_min",
                "r_min'", "rank_c", "min_rx", "flags");
    for (const auto& r : rows)
        std::printf("%-12s (%d,%d,%d)  %4ld %6ld %7ld %7ld %7d  %s\n", r.name.c_str(), r.M,
                    r.n, r.K, static_cast<long>(r.rho), static_cast<long>(r.r_min),
                    static_cast<long>(r.r_min_prime), static_cast<long>(r.rank_c), r.min_rx,
                    r.flags.empty() ? "-" : r.flags.c_str());
    const std::string path = (fs::path(cfg.out_dir) / "identifiability.csv").string();
    write_file(path, identifiability_csv(rows));
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIMO-enabled RF fingerprinting simulation toolkit"};
    app.require_subcommand(1);

    CommonOpts gen_o, train_o, eval_o, awgn_o, apg_o, mds_o, blind_o, ident_o;
    add_common(app.add_subcommand("gen", "generate a dataset"), gen_o);
    add_common(app.add_subcommand("train", "train the CNN on a dataset"), train_o);
    add_common(app.add_subcommand("eval", "evaluate a checkpoint on a dataset"), eval_o);
    add_common(app.add_subcommand("sweep-awgn", "AWGN train/test SNR sweep"), awgn_o);
    add_common(app.add_subcommand("sweep-apg", "Rayleigh APG sweep"), apg_o);
    add_common(app.add_subcommand("sweep-mds", "Rayleigh Doppler sweep"), mds_o);
    add_common(app.add_subcommand("blind-demo", "blind estimator accuracy demo"), blind_o);
    add_common(app.add_subcommand("identifiability", "STBC identifiability report"), ident_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("gen")) return cmd_gen(gen_o);
        if (app.got_subcommand("train")) return cmd_train(train_o);
        if (app.got_subcommand("eval")) return cmd_eval(eval_o);
        if (app.got_subcommand("sweep-awgn")) return run_sweep(awgn_o, "awgn");
        if (app.got_subcommand("sweep-apg")) return run_sweep(apg_o, "apg");
        if (app.got_subcommand("sweep-mds")) return run_sweep(mds_o, "mds");
        if (app.got_subcommand("blind-demo")) return cmd_blind_demo(blind_o);
        if (app.got_subcommand("identifiability")) return cmd_identifiability(ident_o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
