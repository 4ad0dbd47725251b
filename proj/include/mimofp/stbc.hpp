#pragma once

#include "mimofp/numerics.hpp"
#include "mimofp/rng.hpp"

#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace mimofp {

// Linear space-time block code: n symbols mapped to an M x K code matrix whose
// k-th column is [A_k  jB_k] [s_R; s_I].
struct StbcCode {
    std::string name;
    int M = 0; // transmit antennas
    int n = 0; // symbols per block
    int K = 0; // time epochs per block
    std::vector<Eigen::MatrixXd> A; // K matrices, M x n
    std::vector<Eigen::MatrixXd> B; // K matrices, M x n
};

// C_k = [A_k  jB_k], M x 2n
inline CMatrix code_block(const StbcCode& c, int k) {
    Eigen::MatrixXcd out(c.M, 2 * c.n);
    out.leftCols(c.n) = c.A[static_cast<size_t>(k)].cast<Complex>();
    out.rightCols(c.n) = Complex(0, 1) * c.B[static_cast<size_t>(k)].cast<Complex>();
    return CMatrix(std::move(out));
}

// C = [C_1; ...; C_K], MK x 2n
inline CMatrix stacked_code(const StbcCode& c) {
    Eigen::MatrixXcd out(c.M * c.K, 2 * c.n);
    for (int k = 0; k < c.K; ++k)
        out.block(k * c.M, 0, c.M, 2 * c.n) = code_block(c, k).mat();
    return CMatrix(std::move(out));
}

// C~ = [C_1 ... C_K], M x 2nK
inline CMatrix code_tilde(const StbcCode& c) {
    Eigen::MatrixXcd out(c.M, 2 * c.n * c.K);
    for (int k = 0; k < c.K; ++k)
        out.block(0, k * 2 * c.n, c.M, 2 * c.n) = code_block(c, k).mat();
    return CMatrix(std::move(out));
}

inline StbcCode make_stbc(std::string name, int M, int n, int K,
                          std::vector<Eigen::MatrixXd> A, std::vector<Eigen::MatrixXd> B) {
    if (M < 1 || n < 1 || K < 1)
        throw std::invalid_argument("stbc: dimensions must be positive");
    if (A.size() != static_cast<size_t>(K) || B.size() != static_cast<size_t>(K))
        throw std::invalid_argument("stbc: need K encoder matrix pairs");
    for (int k = 0; k < K; ++k) {
        if (A[static_cast<size_t>(k)].rows() != M || A[static_cast<size_t>(k)].cols() != n ||
            B[static_cast<size_t>(k)].rows() != M || B[static_cast<size_t>(k)].cols() != n)
            throw std::invalid_argument("stbc: A_k/B_k must be M x n");
    }
    StbcCode c{std::move(name), M, n, K, std::move(A), std::move(B)};
    if (numerical_rank(code_tilde(c)) != M)
        throw std::invalid_argument("stbc '" + c.name +
                                    "': C~ is row-rank deficient (redundant transmit antennas)");
    return c;
}

inline StbcCode alamouti() {
    Eigen::MatrixXd a1 = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd a2(2, 2);
    a2 << 0, -1, 1, 0;
    return make_stbc("alamouti", 2, 2, 2, {a1, a2}, {a1, -a2});
}

// Tarokh rate-1/2 complex orthogonal design for 3 antennas, (M,n,K) = (3,4,8).
// Generator rows over the 8 epochs:
//   s1 -s2 -s3 -s4  s1* -s2* -s3* -s4*
//   s2  s1  s4 -s3  s2*  s1*  s4* -s3*
//   s3 -s4  s1  s2  s3* -s4*  s1*  s2*
inline StbcCode tarokh_g3() {
    struct Entry { int sym; int sign; bool conj; };
    static const Entry gen[3][8] = {
        {{1, 1, false}, {2, -1, false}, {3, -1, false}, {4, -1, false},
         {1, 1, true}, {2, -1, true}, {3, -1, true}, {4, -1, true}},
        {{2, 1, false}, {1, 1, false}, {4, 1, false}, {3, -1, false},
         {2, 1, true}, {1, 1, true}, {4, 1, true}, {3, -1, true}},
        {{3, 1, false}, {4, -1, false}, {1, 1, false}, {2, 1, false},
         {3, 1, true}, {4, -1, true}, {1, 1, true}, {2, 1, true}},
    };
    const int M = 3, n = 4, K = 8;
    std::vector<Eigen::MatrixXd> A(K, Eigen::MatrixXd::Zero(M, n));
    std::vector<Eigen::MatrixXd> B(K, Eigen::MatrixXd::Zero(M, n));
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k) {
            const Entry& e = gen[m][k];
            A[static_cast<size_t>(k)](m, e.sym - 1) = e.sign;
            B[static_cast<size_t>(k)](m, e.sym - 1) = e.conj ? -e.sign : e.sign;
        }
    }
    return make_stbc("tarokh_g3", M, n, K, std::move(A), std::move(B));
}

// code matrix for one symbol vector, M x K; column k = A_k s_R + j B_k s_I
inline CMatrix encode(const StbcCode& c, const Eigen::VectorXcd& s) {
    if (s.size() != c.n)
        throw std::invalid_argument("encode: expected " + std::to_string(c.n) + " symbols");
    Eigen::VectorXd sr = s.real(), si = s.imag();
    Eigen::MatrixXcd out(c.M, c.K);
    for (int k = 0; k < c.K; ++k)
        out.col(k) = (c.A[static_cast<size_t>(k)] * sr).cast<Complex>() +
                     Complex(0, 1) * (c.B[static_cast<size_t>(k)] * si).cast<Complex>();
    return CMatrix(std::move(out));
}

struct IdentifiabilityReport {
    CMatrix gamma;       // 2nKM x 4n^2
    CMatrix phi;         // 2nM x 4n^2
    Index rho = 0;       // rank([gamma; phi]) - rank(gamma)
    Index rank_gamma = 0;
    Index rank_gamma_phi = 0;
};

namespace detail {

// Gamma block k:  I_{2n} (x) C_k  -  sum_i (C_i^H (C~C~^H)^-1 C_k)^T (x) C_i
// Phi:            sum_i (C_i^H (C~C~^H)^-1 C_1)^T (x) C_i
inline void build_gamma_phi(const StbcCode& c, CMatrix& gamma, CMatrix& phi) {
    const int M = c.M, n = c.n, K = c.K;
    CMatrix ct = code_tilde(c);
    Eigen::MatrixXcd gram = ct.mat() * ct.mat().adjoint();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
    if (!lu.isInvertible())
        throw std::invalid_argument("identifiability: C~C~^H is singular");
    Eigen::MatrixXcd W = lu.inverse();

    std::vector<CMatrix> C;
    C.reserve(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) C.push_back(code_block(c, k));

    const Index bw = 4 * static_cast<Index>(n) * n;
    const Index bh = 2 * static_cast<Index>(n) * M;
    Eigen::MatrixXcd g(bh * K, bw);
    CMatrix eye2n = CMatrix::identity(2 * n);
    for (int k = 0; k < K; ++k) {
        Eigen::MatrixXcd blk = kron(eye2n, C[static_cast<size_t>(k)]).mat();
        for (int i = 0; i < K; ++i) {
            Eigen::MatrixXcd mix =
                (C[static_cast<size_t>(i)].mat().adjoint() * W * C[static_cast<size_t>(k)].mat())
                    .transpose();
            blk -= kron(CMatrix(mix), C[static_cast<size_t>(i)]).mat();
        }
        g.block(k * bh, 0, bh, bw) = blk;
    }
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(bh, bw);
    for (int i = 0; i < K; ++i) {
        Eigen::MatrixXcd mix =
            (C[static_cast<size_t>(i)].mat().adjoint() * W * C[0].mat()).transpose();
        p += kron(CMatrix(mix), C[static_cast<size_t>(i)]).mat();
    }
    gamma = CMatrix(std::move(g));
    phi = CMatrix(std::move(p));
}

} // namespace detail

inline IdentifiabilityReport identifiability(const StbcCode& c) {
    IdentifiabilityReport rep;
    detail::build_gamma_phi(c, rep.gamma, rep.phi);
    Eigen::MatrixXcd gp(rep.gamma.rows() + rep.phi.rows(), rep.gamma.cols());
    gp << rep.gamma.mat(), rep.phi.mat();
    rep.rank_gamma = numerical_rank(rep.gamma, 1e-9);
    rep.rank_gamma_phi = numerical_rank(CMatrix(std::move(gp)), 1e-9);
    rep.rho = rep.rank_gamma_phi - rep.rank_gamma;
    return rep;
}

enum class WitnessMode { gamma, gamma_phi };

namespace detail {

// witness matrix: the M x . reshape of (Gamma u), with the Phi image appended
// as M x 2n extra columns in gamma_phi mode
inline CMatrix witness_matrix(const CMatrix& gamma, const CMatrix& phi, WitnessMode mode,
                              int M, const CMatrix& u) {
    Eigen::VectorXcd z = gamma.mat() * u.mat().col(0);
    if (mode == WitnessMode::gamma_phi) {
        Eigen::VectorXcd zp = phi.mat() * u.mat().col(0);
        Eigen::VectorXcd both(z.size() + zp.size());
        both << z, zp;
        z.swap(both);
    }
    return unvec(CMatrix(Eigen::MatrixXcd(z)), M, z.size() / M);
}

inline bool witness_admissible(const CMatrix& gamma, const CMatrix& phi, WitnessMode mode,
                               const CMatrix& u) {
    const double un = u.norm();
    if (un == 0.0) return false;
    if (mode == WitnessMode::gamma)
        return (gamma.mat() * u.mat().col(0)).norm() > 1e-9 * gamma.norm() * un;
    const double zn = (gamma.mat() * u.mat().col(0)).norm() +
                      (phi.mat() * u.mat().col(0)).norm();
    return zn > 1e-9 * (gamma.norm() + phi.norm()) * un;
}

} // namespace detail

// numerical rank of the reshaped witness Z built from Gamma u (and Phi u in
// gamma_phi mode); u must lie outside the corresponding null space
inline Index rank_witness(const StbcCode& c, const CMatrix& u, WitnessMode mode,
                          double rel_tol = 1e-9) {
    CMatrix gamma, phi;
    detail::build_gamma_phi(c, gamma, phi);
    if (u.cols() != 1 || u.rows() != gamma.cols())
        throw std::invalid_argument("rank_witness: u must be a length-4n^2 column vector");
    if (!detail::witness_admissible(gamma, phi, mode, u))
        throw std::invalid_argument("rank_witness: u lies in the excluded null space");
    return numerical_rank(detail::witness_matrix(gamma, phi, mode, c.M, u), rel_tol);
}

struct RminResult {
    Index best_rank = 0; // upper bound on r_min (resp. r'_min)
    CMatrix witness;     // achieves best_rank through rank_witness
};

namespace detail {

inline Index rank_of(const Eigen::MatrixXcd& m, double tol = 1e-9) {
    return numerical_rank(CMatrix(m), tol);
}

// orthonormal basis of the null space of m (columns)
inline Eigen::MatrixXcd null_basis(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> s(m, Eigen::ComputeFullV);
    const auto& sv = s.singularValues();
    Index r = 0;
    if (sv.size() > 0 && sv(0) > 0.0)
        for (Index i = 0; i < sv.size(); ++i)
            if (sv(i) > 1e-9 * sv(0)) ++r;
    return s.matrixV().rightCols(m.cols() - r);
}

} // namespace detail

// Heuristic search for the minimum witness rank. Three stages: complex
// Gaussian sampling, a targeted construction that pins the witness column
// space against randomly drawn left-null directions, and a final coordinate
// perturbation polish on the best candidate. Deterministic for a fixed seed.
inline RminResult search_rmin(const StbcCode& c, WitnessMode mode, int trials,
                              std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("search_rmin: trials must be >= 1");
    CMatrix gamma, phi;
    detail::build_gamma_phi(c, gamma, phi);
    const Index dim = gamma.cols();
    const int M = c.M;
    Rng root(seed);

    auto admissible = [&](const CMatrix& u) {
        return detail::witness_admissible(gamma, phi, mode, u);
    };
    auto wrank = [&](const CMatrix& u) {
        return numerical_rank(detail::witness_matrix(gamma, phi, mode, M, u), 1e-9);
    };

    Index best = std::numeric_limits<Index>::max();
    CMatrix best_u;

    // stage 1: sampling
    Rng samp = root.substream(1);
    int admitted = 0;
    for (int t = 0; t < trials; ++t) {
        Eigen::MatrixXcd v(dim, 1);
        for (Index i = 0; i < dim; ++i) v(i, 0) = Complex(samp.gauss(), samp.gauss());
        CMatrix u(std::move(v));
        if (!admissible(u)) continue;
        ++admitted;
        Index r = wrank(u);
        if (r < best) {
            best = r;
            best_u = u;
        }
    }
    if (admitted == 0)
        throw std::runtime_error("search_rmin: no admissible u in " + std::to_string(trials) +
                                 " draws");

    // stage 2: targeted construction. A witness of rank <= r has M-r
    // independent left-null directions w; for fixed w the constraint
    // w^H Z(u) = 0 is linear in u, so candidates come from a null-space solve.
    Eigen::MatrixXcd stacked(gamma.rows() + (mode == WitnessMode::gamma_phi ? phi.rows() : 0),
                             dim);
    stacked.topRows(gamma.rows()) = gamma.mat();
    if (mode == WitnessMode::gamma_phi) stacked.bottomRows(phi.rows()) = phi.mat();
    const Index nblocks = stacked.rows() / M;

    Rng ctor = root.substream(2);
    for (Index target = best - 1; target >= 1; --target) {
        bool found = false;
        const int attempts = 24;
        for (int t = 0; t < attempts && !found; ++t) {
            Eigen::MatrixXcd wdirs(M, M - target);
            for (Index i = 0; i < wdirs.size(); ++i)
                wdirs(i / (M - target), i % (M - target)) = Complex(ctor.gauss(), ctor.gauss());
            Eigen::MatrixXcd sys((M - target) * nblocks, dim);
            for (Index j = 0; j < nblocks; ++j)
                sys.block(j * (M - target), 0, M - target, dim) =
                    wdirs.adjoint() * stacked.block(j * M, 0, M, dim);
            Eigen::MatrixXcd ns = detail::null_basis(sys);
            if (ns.cols() == 0) continue;
            for (int combo = 0; combo < 12 && !found; ++combo) {
                Eigen::MatrixXcd coef(ns.cols(), 1);
                for (Index i = 0; i < ns.cols(); ++i)
                    coef(i, 0) = Complex(ctor.gauss(), ctor.gauss());
                CMatrix u(Eigen::MatrixXcd(ns * coef));
                if (!admissible(u)) continue;
                Index r = wrank(u);
                if (r <= target) {
                    best = r;
                    best_u = u;
                    found = true;
                }
            }
        }
        if (!found) break; // lower targets only get harder
        if (best < target) target = best; // skip past ranks the find already beat
    }

    // stage 3: coordinate perturbation polish; tries to push sigma_best of the
    // witness below the rank tolerance
    if (best > 1) {
        CMatrix cand = best_u;
        auto ratio = [&](const CMatrix& u) {
            Eigen::JacobiSVD<Eigen::MatrixXcd> s(
                detail::witness_matrix(gamma, phi, mode, M, u).mat());
            const auto& sv = s.singularValues();
            return sv(0) > 0.0 ? sv(best - 1) / sv(0) : 1.0;
        };
        double cur = ratio(cand);
        double step = 0.5;
        for (int sweep = 0; sweep < 12 && cur > 1e-10; ++sweep) {
            bool improved = false;
            for (Index i = 0; i < dim; ++i) {
                for (Complex d : {Complex(step, 0), Complex(-step, 0), Complex(0, step),
                                  Complex(0, -step)}) {
                    CMatrix trial = cand;
                    trial(i, 0) += d;
                    if (!admissible(trial)) continue;
                    double r = ratio(trial);
                    if (r < cur) {
                        cur = r;
                        cand = trial;
                        improved = true;
                    }
                }
            }
            if (!improved) step *= 0.25;
        }
        if (admissible(cand)) {
            Index r = wrank(cand);
            if (r < best) {
                best = r;
                best_u = cand;
            }
        }
    }

    return RminResult{best, best_u};
}

// L >= M - r_min + 1
inline int min_rx_antennas(const StbcCode& c, int r_min) {
    if (r_min < 1 || r_min > c.M)
        throw std::invalid_argument("min_rx_antennas: r_min out of range");
    return c.M - r_min + 1;
}

// structured text dump of the codebook for documentation tests
inline std::string codebook_dump(const StbcCode& c) {
    std::ostringstream os;
    os << "code " << c.name << " M=" << c.M << " n=" << c.n << " K=" << c.K << "\n";
    auto put = [&os](const char* tag, int k, const Eigen::MatrixXd& m) {
        os << tag << k + 1 << " =";
        for (Index i = 0; i < m.rows(); ++i) {
            os << (i == 0 ? " [" : "; ");
            for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
        }
        os << "]\n";
    };
    for (int k = 0; k < c.K; ++k) put("A", k, c.A[static_cast<size_t>(k)]);
    for (int k = 0; k < c.K; ++k) put("B", k, c.B[static_cast<size_t>(k)]);
    return os.str();
}

} // namespace mimofp
