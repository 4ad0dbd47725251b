#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace mimofp {

using Complex = std::complex<double>;
using Index = Eigen::Index;

// Dense complex matrix, column-major, finite entries. The one carrier type for
// received matrices, code matrices, channels and the blind-equation operator.
class CMatrix {
public:
    CMatrix() : m_(0, 0) {}
    CMatrix(Index rows, Index cols) : m_(Eigen::MatrixXcd::Zero(rows, cols)) {}
    explicit CMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) { require_finite(); }

    static CMatrix identity(Index n) { return CMatrix(Eigen::MatrixXcd::Identity(n, n)); }

    Index rows() const { return m_.rows(); }
    Index cols() const { return m_.cols(); }
    Index size() const { return m_.size(); }

    Complex& operator()(Index i, Index j) { return m_(i, j); }
    const Complex& operator()(Index i, Index j) const { return m_(i, j); }

    const Eigen::MatrixXcd& mat() const { return m_; }
    Eigen::MatrixXcd& mat() { return m_; }

    CMatrix adjoint() const { return CMatrix(m_.adjoint().eval()); }
    CMatrix transpose() const { return CMatrix(m_.transpose().eval()); }
    double norm() const { return m_.norm(); }

    CMatrix operator*(const CMatrix& o) const { return CMatrix(m_ * o.m_); }
    CMatrix operator+(const CMatrix& o) const { return CMatrix(m_ + o.m_); }
    CMatrix operator-(const CMatrix& o) const { return CMatrix(m_ - o.m_); }
    CMatrix operator*(Complex s) const { return CMatrix(m_ * s); }

    CMatrix block(Index i, Index j, Index r, Index c) const {
        return CMatrix(m_.block(i, j, r, c).eval());
    }

private:
    void require_finite() const {
        if (!m_.allFinite())
            throw std::invalid_argument("CMatrix: non-finite entry");
    }

    Eigen::MatrixXcd m_;
};

struct SvdResult {
    CMatrix U;            // full left singular vectors
    Eigen::VectorXd sigma; // descending, non-negative
    CMatrix V;            // full right singular vectors
};

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b.mat();
    return CMatrix(std::move(out));
}

// column-major stacking
inline CMatrix vec(const CMatrix& a) {
    Eigen::MatrixXcd out(a.size(), 1);
    Index k = 0;
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) out(k++, 0) = a(i, j);
    return CMatrix(std::move(out));
}

inline CMatrix unvec(const CMatrix& v, Index rows, Index cols) {
    if (v.cols() != 1 || v.rows() != rows * cols)
        throw std::invalid_argument("unvec: length " + std::to_string(v.rows()) +
                                    " does not reshape to " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    Eigen::MatrixXcd out(rows, cols);
    Index k = 0;
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = v(k++, 0);
    return CMatrix(std::move(out));
}

inline SvdResult svd(const CMatrix& a) {
    if (a.size() == 0) throw std::invalid_argument("svd: empty matrix");
    Eigen::JacobiSVD<Eigen::MatrixXcd> s(a.mat(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (s.info() != Eigen::Success)
        throw std::runtime_error("svd: did not converge");
    return SvdResult{CMatrix(s.matrixU()), s.singularValues(), CMatrix(s.matrixV())};
}

inline Index numerical_rank(const CMatrix& a, double rel_tol = 1e-9) {
    if (rel_tol <= 0.0 || rel_tol >= 1.0)
        throw std::invalid_argument("numerical_rank: rel_tol must be in (0,1)");
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> s(a.mat());
    const auto& sv = s.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++r;
    return r;
}

// last `dim` left singular vectors; orthonormal basis of the (estimated) left
// null space when the matrix has nullity >= dim
inline CMatrix left_null_basis(const CMatrix& a, Index dim) {
    if (dim > a.rows())
        throw std::invalid_argument("left_null_basis: dim exceeds row count");
    if (dim == 0) return CMatrix(a.rows(), 0);
    SvdResult s = svd(a);
    return s.U.block(0, a.rows() - dim, a.rows(), dim);
}

// minimum-norm least squares via SVD pseudo-inverse, relative cutoff 1e-10
inline CMatrix least_squares(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("least_squares: row mismatch");
    Eigen::JacobiSVD<Eigen::MatrixXcd> s(a.mat(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = s.singularValues();
    const double cut = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    Eigen::MatrixXcd x = s.matrixV() * inv.asDiagonal() *
                         (s.matrixU().adjoint() * b.mat());
    return CMatrix(std::move(x));
}

} // namespace mimofp
