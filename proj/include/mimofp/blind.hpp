#pragma once

#include "mimofp/numerics.hpp"
#include "mimofp/stbc.hpp"

#include <ostream>
#include <stdexcept>

namespace mimofp {

// estimated channel vector (vec of H^, column-major, unit norm) plus the full
// singular spectrum of the blind-equation operator and its null-space
// dimension at the working tolerance
struct ChannelEstimate {
    Eigen::VectorXcd h_hat;
    Eigen::VectorXd sigma;
    Index ambiguity_dim = 0;
    int L = 0;
    int M = 0;
};

struct DeltaMatrix {
    CMatrix delta; // (2n (KL - 2n)) x (L M)
    int L = 0;
};

// orthonormal basis of the estimated noise subspace: left singular vectors
// signal_dim+1 .. KL of R
inline CMatrix noise_subspace(const CMatrix& R, Index signal_dim) {
    if (R.rows() <= signal_dim)
        throw std::invalid_argument("noise_subspace: received dimension KL=" +
                                    std::to_string(R.rows()) +
                                    " leaves no nontrivial left null space");
    if (R.cols() < signal_dim)
        throw std::invalid_argument("noise_subspace: need at least signal_dim block columns");
    return left_null_basis(R, R.rows() - signal_dim);
}

// Delta = sum_k C_k^T (x) (N_L^H E_k); E_k selects rows L(k-1)+1 .. Lk
inline DeltaMatrix build_delta(const StbcCode& code, const CMatrix& N_L, int L) {
    if (N_L.rows() != static_cast<Index>(code.K) * L)
        throw std::invalid_argument("build_delta: N_L must have KL rows");
    const Index w = N_L.cols();
    Eigen::MatrixXcd delta =
        Eigen::MatrixXcd::Zero(2 * code.n * w, static_cast<Index>(L) * code.M);
    for (int k = 0; k < code.K; ++k) {
        CMatrix blk = N_L.block(static_cast<Index>(k) * L, 0, L, w); // E_k^T N_L
        delta += kron(code_block(code, k).transpose(), blk.adjoint()).mat();
    }
    DeltaMatrix out;
    out.delta = CMatrix(std::move(delta));
    out.L = L;
    return out;
}

// Subspace blind estimate: h^ is the right singular vector of Delta with the
// smallest singular value, unit norm, first significant entry rotated to the
// positive real axis. When KL <= 2n no noise subspace exists and every h is
// consistent, so the estimate degenerates to total ambiguity (dim LM).
inline ChannelEstimate estimate(const CMatrix& R, const StbcCode& code, int L,
                                double amb_tol = 1e-6) {
    ChannelEstimate est;
    est.L = L;
    est.M = code.M;
    const Index lm = static_cast<Index>(L) * code.M;
    if (R.rows() != static_cast<Index>(code.K) * L)
        throw std::invalid_argument("estimate: R must have KL rows");
    if (R.rows() <= 2 * code.n) {
        est.h_hat = Eigen::VectorXcd::Zero(lm);
        est.h_hat(lm - 1) = 1.0;
        est.sigma = Eigen::VectorXd::Zero(lm);
        est.ambiguity_dim = lm;
        return est;
    }
    CMatrix nl = noise_subspace(R, 2 * code.n);
    DeltaMatrix dm = build_delta(code, nl, L);
    SvdResult s = svd(dm.delta);
    est.h_hat = s.V.mat().col(lm - 1);
    est.sigma = s.sigma;
    const double smax = s.sigma.size() > 0 ? s.sigma(0) : 0.0;
    est.ambiguity_dim = 0;
    for (Index i = 0; i < s.sigma.size(); ++i)
        if (s.sigma(i) < amb_tol * smax || smax == 0.0) ++est.ambiguity_dim;
    if (s.sigma.size() < lm) // wide Delta cannot constrain the extra directions
        est.ambiguity_dim += lm - s.sigma.size();
    if (est.ambiguity_dim < 1) est.ambiguity_dim = 1;

    est.h_hat.normalize();
    for (Index i = 0; i < est.h_hat.size(); ++i) {
        if (std::abs(est.h_hat(i)) > 1e-9) {
            est.h_hat *= std::polar(1.0, -std::arg(est.h_hat(i)));
            break;
        }
    }
    return est;
}

// least-squares alpha for ||alpha h_hat - h_true||
inline Complex align_scale(const Eigen::VectorXcd& h_hat, const Eigen::VectorXcd& h_true) {
    if (h_hat.size() != h_true.size())
        throw std::invalid_argument("align_scale: length mismatch");
    const double denom = h_hat.squaredNorm();
    if (denom == 0.0) throw std::invalid_argument("align_scale: zero estimate");
    return h_hat.dot(h_true) / denom; // Eigen dot conjugates the left argument
}

// relative alignment error min_alpha ||alpha h_hat - h_true|| / ||h_true||
inline double alignment_error(const Eigen::VectorXcd& h_hat, const Eigen::VectorXcd& h_true) {
    const Complex a = align_scale(h_hat, h_true);
    return (a * h_hat - h_true).norm() / h_true.norm();
}

// Recover X^ (2n x l, complex) from R given the estimated channel vector.
// With h^ = alpha h and no noise the solution is x / alpha; rows keep the
// [s_R; s_I] split of the transmitted blocks.
inline CMatrix equalize(const CMatrix& R, const Eigen::VectorXcd& h_hat,
                        const StbcCode& code, int L) {
    if (h_hat.size() != static_cast<Index>(L) * code.M)
        throw std::invalid_argument("equalize: h_hat must have length LM");
    if (R.rows() != static_cast<Index>(code.K) * L)
        throw std::invalid_argument("equalize: R must have KL rows");
    Eigen::MatrixXcd hm = Eigen::Map<const Eigen::MatrixXcd>(h_hat.data(), L, code.M);
    CMatrix design =
        CMatrix(Eigen::MatrixXcd(kron(CMatrix::identity(code.K), CMatrix(hm)).mat() *
                                 stacked_code(code).mat()));
    if (numerical_rank(design, 1e-9) < 2 * code.n)
        throw std::runtime_error("equalize: design matrix rank-deficient, block unrecoverable");
    return least_squares(design, R);
}

inline void dump_spectrum_csv(const ChannelEstimate& est, std::ostream& os) {
    os << "index,sigma\n";
    for (Index i = 0; i < est.sigma.size(); ++i) os << i << "," << est.sigma(i) << "\n";
}

} // namespace mimofp
