#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "blends/errors.hpp"
#include "blends/types.hpp"

namespace blends {

inline Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return s;
}

/// Rotation matrix of a rotation vector (Rodrigues).
inline Mat3 so3_exp(const Vec3& phi) {
    const double angle = phi.norm();
    if (angle < 1e-12) return Mat3::Identity() + skew(phi);
    return Eigen::AngleAxisd(angle, phi / angle).toRotationMatrix();
}

/// Rotation vector of a rotation matrix.
inline Vec3 so3_log(const Mat3& R) {
    const Eigen::AngleAxisd aa(R);
    return aa.angle() * aa.axis();
}

/// Re-orthonormalizes a nearly orthonormal rotation matrix.
inline Mat3 orthonormalize(const Mat3& R) {
    Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 out = svd.matrixU() * svd.matrixV().transpose();
    if (out.determinant() < 0.0) {
        Mat3 u = svd.matrixU();
        u.col(2) *= -1.0;
        out = u * svd.matrixV().transpose();
    }
    return out;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

/// True when a symmetric matrix admits a Cholesky factorization.
template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& m) {
    using Plain = typename Derived::PlainObject;
    Eigen::LLT<Plain> llt(m.eval());
    return llt.info() == Eigen::Success;
}

/// (A + Aᵀ) / 2, evaluated into a new matrix so `A = symmetric_part(A)` is safe.
template <int N>
Eigen::Matrix<double, N, N> symmetric_part(const Eigen::Matrix<double, N, N>& A) {
    return 0.5 * (A + A.transpose());
}

/// Symmetrizes P and adds diagonal jitter until it is positive definite.
///
/// Jitter is relative to each diagonal entry (1e-12 * |P_ii|, absolute 1e-12 for
/// non-positive entries) and grows tenfold per retry.
template <int N>
Eigen::Matrix<double, N, N> symmetrize_and_condition(const Eigen::Matrix<double, N, N>& P) {
    if (!P.allFinite()) throw NumericalError("symmetrize_and_condition: non-finite covariance");
    Eigen::Matrix<double, N, N> S = 0.5 * (P + P.transpose());
    if (is_positive_definite(S)) return S;
    Eigen::Matrix<double, N, 1> base(S.rows());
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
        const double d = S(i, i);
        base[i] = d > 0.0 ? 1e-12 * d : 1e-12;
    }
    double scale = 1.0;
    for (int attempt = 0; attempt < 16; ++attempt, scale *= 10.0) {
        Eigen::Matrix<double, N, N> J = S;
        J.diagonal() += scale * base;
        if (is_positive_definite(J)) return J;
    }
    throw NumericalError("symmetrize_and_condition: covariance cannot be made positive definite");
}

/// Inverse of a symmetric positive definite matrix via equilibrated Cholesky.
template <int N>
Eigen::Matrix<double, N, N> spd_inverse(const Eigen::Matrix<double, N, N>& A) {
    const Eigen::Matrix<double, N, 1> d = A.diagonal().cwiseAbs().cwiseSqrt();
    if ((d.array() <= 0.0).any()) throw NumericalError("spd_inverse: zero diagonal");
    const Eigen::Matrix<double, N, 1> dinv = d.cwiseInverse();
    const Eigen::Matrix<double, N, N> As = dinv.asDiagonal() * A * dinv.asDiagonal();
    Eigen::LLT<Eigen::Matrix<double, N, N>> llt(0.5 * (As + As.transpose()));
    if (llt.info() != Eigen::Success) throw NumericalError("spd_inverse: matrix not positive definite");
    const Eigen::Matrix<double, N, N> Is = llt.solve(Eigen::Matrix<double, N, N>::Identity());
    Eigen::Matrix<double, N, N> out = dinv.asDiagonal() * Is * dinv.asDiagonal();
    return 0.5 * (out + out.transpose());
}

/// Solves A x = b for symmetric positive definite A via equilibrated Cholesky.
template <int N, int M>
Eigen::Matrix<double, N, M> spd_solve(const Eigen::Matrix<double, N, N>& A, const Eigen::Matrix<double, N, M>& b) {
    const Eigen::Matrix<double, N, 1> d = A.diagonal().cwiseAbs().cwiseSqrt();
    if ((d.array() <= 0.0).any()) throw NumericalError("spd_solve: zero diagonal");
    const Eigen::Matrix<double, N, 1> dinv = d.cwiseInverse();
    const Eigen::Matrix<double, N, N> As = dinv.asDiagonal() * A * dinv.asDiagonal();
    Eigen::LLT<Eigen::Matrix<double, N, N>> llt(0.5 * (As + As.transpose()));
    if (llt.info() != Eigen::Success) throw NumericalError("spd_solve: matrix not positive definite");
    return dinv.asDiagonal() * llt.solve(dinv.asDiagonal() * b);
}

/// Factor L with L Lᵀ = A for a symmetric positive semidefinite A.
///
/// Negative eigenvalues from round-off are clamped to zero. The factor is computed on the
/// diagonally equilibrated matrix so mixed-unit blocks keep their relative precision.
template <int N>
Eigen::Matrix<double, N, N> psd_factor(const Eigen::Matrix<double, N, N>& A) {
    Eigen::Matrix<double, N, 1> d(A.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double a = A(i, i);
        d[i] = a > 0.0 ? std::sqrt(a) : 1.0;
    }
    const Eigen::Matrix<double, N, N> As = d.cwiseInverse().asDiagonal() * A * d.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> es(0.5 * (As + As.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("psd_factor: eigendecomposition failed");
    const Eigen::Matrix<double, N, 1> lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return d.asDiagonal() * es.eigenvectors() * lam.asDiagonal();
}

}  // namespace blends
