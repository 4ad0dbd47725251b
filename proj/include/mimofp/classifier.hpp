#pragma once

#include "mimofp/rng.hpp"
#include "mimofp/waveform.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimofp {

// Architecture (valid convolutions, 1x2 max pooling along time):
//   2x160 -> conv1 50 @ 1x7 -> ReLU -> pool -> 2x77x50
//          -> conv2 50 @ 2x7x50 -> ReLU -> pool -> 1x35x50 -> 1750
//          -> fc 256 -> ReLU -> fc 80 -> ReLU -> softmax 10
struct CnnModel {
    Eigen::MatrixXd w_conv1; // 50 x 7
    Eigen::VectorXd b_conv1; // 50
    Eigen::MatrixXd w_conv2; // 50 x 700 (row r, offset dt, channel: (r*7+dt)*50+ch)
    Eigen::VectorXd b_conv2; // 50
    Eigen::MatrixXd w_fc1;   // 256 x 1750 (flatten index: pos*50+ch)
    Eigen::VectorXd b_fc1;
    Eigen::MatrixXd w_fc2;   // 80 x 256
    Eigen::VectorXd b_fc2;
    Eigen::MatrixXd w_out;   // 10 x 80
    Eigen::VectorXd b_out;
};

struct CnnGradients {
    Eigen::MatrixXd w_conv1, w_conv2, w_fc1, w_fc2, w_out;
    Eigen::VectorXd b_conv1, b_conv2, b_fc1, b_fc2, b_out;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 64;
    int epochs = 30;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0, train_acc = 0.0;
    double val_loss = 0.0, val_acc = 0.0;
};

namespace cnn {

constexpr int kRows = 2, kCols = 160;
constexpr int kF1 = 50, kK1 = 7, kT1 = 154, kP1 = 77;
constexpr int kF2 = 50, kPatch2 = 2 * 7 * kF1, kT2 = 71, kP2 = 35;
constexpr int kFlat = kP2 * kF2; // 1750
constexpr int kFc1 = 256, kFc2 = 80, kClasses = 10;

inline CnnModel init(std::uint64_t seed) {
    Rng rng(seed);
    auto he = [&rng](Eigen::MatrixXd& w, int fan_in) {
        const double lim = std::sqrt(6.0 / fan_in);
        for (Index i = 0; i < w.rows(); ++i)
            for (Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-lim, lim);
    };
    CnnModel m;
    m.w_conv1.resize(kF1, kK1);
    he(m.w_conv1, kK1);
    m.b_conv1 = Eigen::VectorXd::Zero(kF1);
    m.w_conv2.resize(kF2, kPatch2);
    he(m.w_conv2, kPatch2);
    m.b_conv2 = Eigen::VectorXd::Zero(kF2);
    m.w_fc1.resize(kFc1, kFlat);
    he(m.w_fc1, kFlat);
    m.b_fc1 = Eigen::VectorXd::Zero(kFc1);
    m.w_fc2.resize(kFc2, kFc1);
    he(m.w_fc2, kFc1);
    m.b_fc2 = Eigen::VectorXd::Zero(kFc2);
    m.w_out.resize(kClasses, kFc2);
    he(m.w_out, kFc2);
    m.b_out = Eigen::VectorXd::Zero(kClasses);
    return m;
}

struct ForwardCache {
    Eigen::MatrixXd p1;       // (B*2*154) x 7
    Eigen::MatrixXd z1;       // (B*2*154) x 50
    Eigen::MatrixXd pool1;    // (B*2*77) x 50
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> arg1;
    Eigen::MatrixXd p2;       // (B*71) x 700
    Eigen::MatrixXd z2;       // (B*71) x 50
    Eigen::MatrixXd flat;     // B x 1750
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> arg2; // (B*35) x 50
    Eigen::MatrixXd z3, a3;   // B x 256
    Eigen::MatrixXd z4, a4;   // B x 80
    Eigen::MatrixXd z5;       // B x 10 logits
    Eigen::MatrixXd probs;    // B x 10
};

// X: B x 320, one frame per row ([I row, Q row] concatenated)
inline void forward_impl(const CnnModel& m, const Eigen::MatrixXd& X, ForwardCache& c) {
    const Index B = X.rows();
    if (X.cols() != kRows * kCols)
        throw std::invalid_argument("forward: expected B x 320 input");

    c.p1.resize(B * kRows * kT1, kK1);
    for (Index b = 0; b < B; ++b)
        for (int r = 0; r < kRows; ++r)
            for (int t = 0; t < kT1; ++t)
                for (int k = 0; k < kK1; ++k)
                    c.p1(((b * kRows) + r) * kT1 + t, k) = X(b, r * kCols + t + k);
    c.z1.noalias() = c.p1 * m.w_conv1.transpose();
    c.z1.rowwise() += m.b_conv1.transpose();

    c.pool1.resize(B * kRows * kP1, kF1);
    c.arg1.resize(B * kRows * kP1, kF1);
    for (Index row = 0; row < B * kRows; ++row) {
        for (int t = 0; t < kP1; ++t) {
            const Index src = row * kT1 + 2 * t;
            const Index dst = row * kP1 + t;
            for (int ch = 0; ch < kF1; ++ch) {
                const double a = std::max(0.0, c.z1(src, ch));
                const double b2 = std::max(0.0, c.z1(src + 1, ch));
                c.pool1(dst, ch) = a >= b2 ? a : b2;
                c.arg1(dst, ch) = a >= b2 ? 0 : 1;
            }
        }
    }

    c.p2.resize(B * kT2, kPatch2);
    for (Index b = 0; b < B; ++b)
        for (int t = 0; t < kT2; ++t) {
            const Index dst = b * kT2 + t;
            for (int r = 0; r < kRows; ++r)
                for (int dt = 0; dt < kK1; ++dt) {
                    const Index src = (b * kRows + r) * kP1 + t + dt;
                    const int base = (r * kK1 + dt) * kF1;
                    for (int ch = 0; ch < kF1; ++ch)
                        c.p2(dst, base + ch) = c.pool1(src, ch);
                }
        }
    c.z2.noalias() = c.p2 * m.w_conv2.transpose();
    c.z2.rowwise() += m.b_conv2.transpose();

    c.flat.resize(B, kFlat);
    c.arg2.resize(B * kP2, kF2);
    for (Index b = 0; b < B; ++b)
        for (int u = 0; u < kP2; ++u) {
            const Index src = b * kT2 + 2 * u;
            for (int ch = 0; ch < kF2; ++ch) {
                const double a = std::max(0.0, c.z2(src, ch));
                const double b2 = std::max(0.0, c.z2(src + 1, ch));
                c.flat(b, u * kF2 + ch) = a >= b2 ? a : b2;
                c.arg2(b * kP2 + u, ch) = a >= b2 ? 0 : 1;
            }
        }

    c.z3.noalias() = c.flat * m.w_fc1.transpose();
    c.z3.rowwise() += m.b_fc1.transpose();
    c.a3 = c.z3.cwiseMax(0.0);
    c.z4.noalias() = c.a3 * m.w_fc2.transpose();
    c.z4.rowwise() += m.b_fc2.transpose();
    c.a4 = c.z4.cwiseMax(0.0);
    c.z5.noalias() = c.a4 * m.w_out.transpose();
    c.z5.rowwise() += m.b_out.transpose();

    c.probs.resize(B, kClasses);
    for (Index b = 0; b < B; ++b) {
        const double mx = c.z5.row(b).maxCoeff();
        double sum = 0.0;
        for (int j = 0; j < kClasses; ++j) {
            const double e = std::exp(c.z5(b, j) - mx);
            c.probs(b, j) = e;
            sum += e;
        }
        c.probs.row(b) /= sum;
    }
}

inline Eigen::MatrixXd forward(const CnnModel& m, const Eigen::MatrixXd& X) {
    ForwardCache c;
    forward_impl(m, X, c);
    return c.probs;
}

inline double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
    double loss = 0.0;
    for (Index b = 0; b < probs.rows(); ++b)
        loss -= std::log(std::max(probs(b, labels[static_cast<size_t>(b)]), 1e-300));
    return loss / static_cast<double>(probs.rows());
}

inline CnnGradients backward_impl(const CnnModel& m, const ForwardCache& c,
                                  const std::vector<int>& labels) {
    const Index B = c.probs.rows();
    CnnGradients g;
    Eigen::MatrixXd dz5 = c.probs;
    for (Index b = 0; b < B; ++b) dz5(b, labels[static_cast<size_t>(b)]) -= 1.0;
    dz5 /= static_cast<double>(B);

    g.w_out.noalias() = dz5.transpose() * c.a4;
    g.b_out = dz5.colwise().sum().transpose();
    Eigen::MatrixXd da4 = dz5 * m.w_out;
    Eigen::MatrixXd dz4 = (c.z4.array() > 0.0).select(da4, 0.0);

    g.w_fc2.noalias() = dz4.transpose() * c.a3;
    g.b_fc2 = dz4.colwise().sum().transpose();
    Eigen::MatrixXd da3 = dz4 * m.w_fc2;
    Eigen::MatrixXd dz3 = (c.z3.array() > 0.0).select(da3, 0.0);

    g.w_fc1.noalias() = dz3.transpose() * c.flat;
    g.b_fc1 = dz3.colwise().sum().transpose();
    Eigen::MatrixXd dflat = dz3 * m.w_fc1; // B x 1750

    // pool2 backward into conv2 activations
    Eigen::MatrixXd dz2 = Eigen::MatrixXd::Zero(B * kT2, kF2);
    for (Index b = 0; b < B; ++b)
        for (int u = 0; u < kP2; ++u) {
            const Index src = b * kT2 + 2 * u;
            for (int ch = 0; ch < kF2; ++ch) {
                const Index win = src + c.arg2(b * kP2 + u, ch);
                if (c.z2(win, ch) > 0.0) dz2(win, ch) += dflat(b, u * kF2 + ch);
            }
        }

    g.w_conv2.noalias() = dz2.transpose() * c.p2;
    g.b_conv2 = dz2.colwise().sum().transpose();
    Eigen::MatrixXd dp2 = dz2 * m.w_conv2; // (B*71) x 700

    // scatter conv2 patches back onto pool1, then pool1 backward into conv1
    Eigen::MatrixXd dpool1 = Eigen::MatrixXd::Zero(B * kRows * kP1, kF1);
    for (Index b = 0; b < B; ++b)
        for (int t = 0; t < kT2; ++t) {
            const Index src = b * kT2 + t;
            for (int r = 0; r < kRows; ++r)
                for (int dt = 0; dt < kK1; ++dt) {
                    const Index dst = (b * kRows + r) * kP1 + t + dt;
                    const int base = (r * kK1 + dt) * kF1;
                    for (int ch = 0; ch < kF1; ++ch)
                        dpool1(dst, ch) += dp2(src, base + ch);
                }
        }
    Eigen::MatrixXd dz1 = Eigen::MatrixXd::Zero(B * kRows * kT1, kF1);
    for (Index row = 0; row < B * kRows; ++row)
        for (int t = 0; t < kP1; ++t) {
            const Index pr = row * kP1 + t;
            for (int ch = 0; ch < kF1; ++ch) {
                const Index win = row * kT1 + 2 * t + c.arg1(pr, ch);
                if (c.z1(win, ch) > 0.0) dz1(win, ch) += dpool1(pr, ch);
            }
        }
    g.w_conv1.noalias() = dz1.transpose() * c.p1;
    g.b_conv1 = dz1.colwise().sum().transpose();
    return g;
}

inline std::pair<double, CnnGradients> loss_and_grads(const CnnModel& m,
                                                      const Eigen::MatrixXd& X,
                                                      const std::vector<int>& labels) {
    if (labels.size() != static_cast<size_t>(X.rows()))
        throw std::invalid_argument("loss_and_grads: label count mismatch");
    for (int lab : labels)
        if (lab < 0 || lab >= kClasses)
            throw std::invalid_argument("loss_and_grads: label out of range");
    ForwardCache c;
    forward_impl(m, X, c);
    return {cross_entropy(c.probs, labels), backward_impl(m, c, labels)};
}

} // namespace cnn

inline Eigen::MatrixXd frames_to_batch(const std::vector<Frame>& frames,
                                       const std::vector<int>& idx) {
    Eigen::MatrixXd X(static_cast<Index>(idx.size()), 2 * kFrameLen);
    for (size_t b = 0; b < idx.size(); ++b)
        for (int k = 0; k < 2 * kFrameLen; ++k)
            X(static_cast<Index>(b), k) =
                static_cast<double>(frames[static_cast<size_t>(idx[b])].tensor[static_cast<size_t>(k)]);
    return X;
}

inline std::vector<int> frame_labels(const std::vector<Frame>& frames,
                                     const std::vector<int>& idx) {
    std::vector<int> out(idx.size());
    for (size_t i = 0; i < idx.size(); ++i)
        out[i] = frames[static_cast<size_t>(idx[i])].label;
    return out;
}

// percentage of argmax-correct predictions
inline double evaluate(const CnnModel& m, const std::vector<Frame>& frames,
                       const std::vector<int>& idx) {
    if (idx.empty()) throw std::invalid_argument("evaluate: empty index set");
    long correct = 0;
    const size_t chunk = 256;
    for (size_t off = 0; off < idx.size(); off += chunk) {
        std::vector<int> part(idx.begin() + static_cast<long>(off),
                              idx.begin() + static_cast<long>(std::min(off + chunk, idx.size())));
        Eigen::MatrixXd probs = cnn::forward(m, frames_to_batch(frames, part));
        for (Index b = 0; b < probs.rows(); ++b) {
            Index arg = 0;
            probs.row(b).maxCoeff(&arg);
            if (arg == frames[static_cast<size_t>(part[static_cast<size_t>(b)])].label) ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(idx.size());
}

// percentage drop in testing accuracy when the testing channel differs
inline double rdtg(double acc_same, double acc_diff) {
    if (acc_same <= 0.0)
        throw std::invalid_argument("rdtg: undefined for non-positive same-channel accuracy");
    return 100.0 * (acc_same - acc_diff) / acc_same;
}

struct TrainResult {
    CnnModel model; // best-validation-accuracy snapshot
    std::vector<EpochStats> history;
};

namespace detail {

struct AdamState {
    CnnGradients m, v;
    long t = 0;
    bool ready = false;
};

inline void adam_update_one(Eigen::MatrixXd& w, const Eigen::MatrixXd& g, Eigen::MatrixXd& m,
                            Eigen::MatrixXd& v, const TrainConfig& cfg, double bc1, double bc2) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v.array().matrix() + (1.0 - cfg.beta2) * g.array().square().matrix();
    w.array() -= cfg.learning_rate * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + cfg.epsilon);
}

inline void adam_update_one(Eigen::VectorXd& w, const Eigen::VectorXd& g, Eigen::VectorXd& m,
                            Eigen::VectorXd& v, const TrainConfig& cfg, double bc1, double bc2) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v.array().matrix() + (1.0 - cfg.beta2) * g.array().square().matrix();
    w.array() -= cfg.learning_rate * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + cfg.epsilon);
}

inline void adam_step(CnnModel& model, const CnnGradients& g, AdamState& st,
                      const TrainConfig& cfg) {
    if (!st.ready) {
        auto zero_like = [](const CnnModel& mm, CnnGradients& gg) {
            gg.w_conv1 = Eigen::MatrixXd::Zero(mm.w_conv1.rows(), mm.w_conv1.cols());
            gg.w_conv2 = Eigen::MatrixXd::Zero(mm.w_conv2.rows(), mm.w_conv2.cols());
            gg.w_fc1 = Eigen::MatrixXd::Zero(mm.w_fc1.rows(), mm.w_fc1.cols());
            gg.w_fc2 = Eigen::MatrixXd::Zero(mm.w_fc2.rows(), mm.w_fc2.cols());
            gg.w_out = Eigen::MatrixXd::Zero(mm.w_out.rows(), mm.w_out.cols());
            gg.b_conv1 = Eigen::VectorXd::Zero(mm.b_conv1.size());
            gg.b_conv2 = Eigen::VectorXd::Zero(mm.b_conv2.size());
            gg.b_fc1 = Eigen::VectorXd::Zero(mm.b_fc1.size());
            gg.b_fc2 = Eigen::VectorXd::Zero(mm.b_fc2.size());
            gg.b_out = Eigen::VectorXd::Zero(mm.b_out.size());
        };
        zero_like(model, st.m);
        zero_like(model, st.v);
        st.ready = true;
    }
    ++st.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
    adam_update_one(model.w_conv1, g.w_conv1, st.m.w_conv1, st.v.w_conv1, cfg, bc1, bc2);
    adam_update_one(model.b_conv1, g.b_conv1, st.m.b_conv1, st.v.b_conv1, cfg, bc1, bc2);
    adam_update_one(model.w_conv2, g.w_conv2, st.m.w_conv2, st.v.w_conv2, cfg, bc1, bc2);
    adam_update_one(model.b_conv2, g.b_conv2, st.m.b_conv2, st.v.b_conv2, cfg, bc1, bc2);
    adam_update_one(model.w_fc1, g.w_fc1, st.m.w_fc1, st.v.w_fc1, cfg, bc1, bc2);
    adam_update_one(model.b_fc1, g.b_fc1, st.m.b_fc1, st.v.b_fc1, cfg, bc1, bc2);
    adam_update_one(model.w_fc2, g.w_fc2, st.m.w_fc2, st.v.w_fc2, cfg, bc1, bc2);
    adam_update_one(model.b_fc2, g.b_fc2, st.m.b_fc2, st.v.b_fc2, cfg, bc1, bc2);
    adam_update_one(model.w_out, g.w_out, st.m.w_out, st.v.w_out, cfg, bc1, bc2);
    adam_update_one(model.b_out, g.b_out, st.m.b_out, st.v.b_out, cfg, bc1, bc2);
}

} // namespace detail

// Adam training over the dataset's train split with per-epoch validation;
// returns the best-validation snapshot. Deterministic for a fixed config.
inline TrainResult train(const CnnModel& m0, const Dataset& ds, const TrainConfig& cfg) {
    if (ds.split.train.empty() || ds.split.val.empty())
        throw std::invalid_argument("train: dataset split not populated");
    CnnModel model = m0;
    detail::AdamState adam;
    Rng root(cfg.seed);
    TrainResult out;
    out.model = model;
    double best_val = -1.0;

    std::vector<int> order = ds.split.train;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng sh = root.substream(3, static_cast<std::uint64_t>(epoch));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[sh.uniform_index(i)]);

        double loss_sum = 0.0;
        long correct = 0;
        long seen = 0;
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            std::vector<int> idx(
                order.begin() + static_cast<long>(off),
                order.begin() +
                    static_cast<long>(std::min(off + static_cast<size_t>(cfg.batch_size),
                                               order.size())));
            Eigen::MatrixXd X = frames_to_batch(ds.frames, idx);
            std::vector<int> labels = frame_labels(ds.frames, idx);
            cnn::ForwardCache cache;
            cnn::forward_impl(model, X, cache);
            const double loss = cnn::cross_entropy(cache.probs, labels);
            CnnGradients grads = cnn::backward_impl(model, cache, labels);
            detail::adam_step(model, grads, adam, cfg);
            loss_sum += loss * static_cast<double>(idx.size());
            for (Index b = 0; b < cache.probs.rows(); ++b) {
                Index arg = 0;
                cache.probs.row(b).maxCoeff(&arg);
                if (arg == labels[static_cast<size_t>(b)]) ++correct;
            }
            seen += static_cast<long>(idx.size());
        }

        EpochStats st;
        st.epoch = epoch;
        st.train_loss = loss_sum / static_cast<double>(seen);
        st.train_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(seen);
        Eigen::MatrixXd vp = cnn::forward(model, frames_to_batch(ds.frames, ds.split.val));
        st.val_loss = cnn::cross_entropy(vp, frame_labels(ds.frames, ds.split.val));
        long vc = 0;
        for (Index b = 0; b < vp.rows(); ++b) {
            Index arg = 0;
            vp.row(b).maxCoeff(&arg);
            if (arg == ds.frames[static_cast<size_t>(ds.split.val[static_cast<size_t>(b)])].label)
                ++vc;
        }
        st.val_acc = 100.0 * static_cast<double>(vc) / static_cast<double>(vp.rows());
        out.history.push_back(st);
        if (st.val_acc > best_val) {
            best_val = st.val_acc;
            out.model = model;
        }
    }
    return out;
}

// versioned binary checkpoint: "MFPC", version byte, architecture descriptor,
// then all parameters as 64-bit little-endian reals
inline void save_model(const CnnModel& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_model: cannot write " + path);
    f.write("MFPC", 4);
    const unsigned char version = 1;
    f.write(reinterpret_cast<const char*>(&version), 1);
    const std::uint32_t arch[9] = {2, 160, cnn::kF1, cnn::kK1, cnn::kF2,
                                   cnn::kPatch2, cnn::kFc1, cnn::kFc2, cnn::kClasses};
    f.write(reinterpret_cast<const char*>(arch), sizeof(arch));
    auto put = [&f](const Eigen::MatrixXd& w) {
        f.write(reinterpret_cast<const char*>(w.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(w.size())));
    };
    put(m.w_conv1); put(m.b_conv1);
    put(m.w_conv2); put(m.b_conv2);
    put(m.w_fc1); put(m.b_fc1);
    put(m.w_fc2); put(m.b_fc2);
    put(m.w_out); put(m.b_out);
    if (!f) throw std::runtime_error("save_model: short write to " + path);
}

inline CnnModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_model: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "MFPC", 4) != 0)
        throw std::runtime_error("load_model: bad magic in " + path);
    unsigned char version = 0;
    f.read(reinterpret_cast<char*>(&version), 1);
    if (version != 1) throw std::runtime_error("load_model: unsupported checkpoint version");
    std::uint32_t arch[9];
    f.read(reinterpret_cast<char*>(arch), sizeof(arch));
    const std::uint32_t want[9] = {2, 160, cnn::kF1, cnn::kK1, cnn::kF2,
                                   cnn::kPatch2, cnn::kFc1, cnn::kFc2, cnn::kClasses};
    if (std::memcmp(arch, want, sizeof(arch)) != 0)
        throw std::runtime_error("load_model: architecture descriptor mismatch");
    CnnModel m = cnn::init(0);
    auto get = [&f](Eigen::MatrixXd& w) {
        f.read(reinterpret_cast<char*>(w.data()),
               static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(w.size())));
    };
    auto getv = [&f](Eigen::VectorXd& w) {
        f.read(reinterpret_cast<char*>(w.data()),
               static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(w.size())));
    };
    get(m.w_conv1); getv(m.b_conv1);
    get(m.w_conv2); getv(m.b_conv2);
    get(m.w_fc1); getv(m.b_fc1);
    get(m.w_fc2); getv(m.b_fc2);
    get(m.w_out); getv(m.b_out);
    if (!f) throw std::runtime_error("load_model: truncated checkpoint " + path);
    return m;
}

} // namespace mimofp
