#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "blends/types.hpp"

namespace oracle {

/// Matrix exponential by scaling and squaring with a degree-20 Taylor series.
template <typename Mat>
Mat expm(const Mat& A) {
    const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Mat B = A / std::ldexp(1.0, s);
    Mat term = Mat::Identity(A.rows(), A.cols());
    Mat sum = term;
    for (int k = 1; k <= 20; ++k) {
        term = term * B / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

/// WGS-84 geodetic to ECEF, written out independently of the library.
inline Eigen::Vector3d ecef(double lat, double lon, double h) {
    const double a = 6378137.0;
    const double f = 1.0 / 298.257223563;
    const double e2 = f * (2.0 - f);
    const double n = a / std::sqrt(1.0 - e2 * std::sin(lat) * std::sin(lat));
    return {(n + h) * std::cos(lat) * std::cos(lon), (n + h) * std::cos(lat) * std::sin(lon),
            (n * (1.0 - e2) + h) * std::sin(lat)};
}

/// Meridian radius from the central-difference ECEF arc length per radian of latitude.
inline double meridian_radius_numeric(double lat) {
    const double d = 1e-6;
    return (ecef(lat + d, 0.0, 0.0) - ecef(lat - d, 0.0, 0.0)).norm() / (2.0 * d);
}

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
template <int N>
Eigen::Matrix<double, N, N> random_spd(std::mt19937_64& rng, double lo = 0.1, double hi = 10.0) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    Eigen::Matrix<double, N, N> A;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) A(i, j) = g(rng);
    Eigen::HouseholderQR<Eigen::Matrix<double, N, N>> qr(A);
    const Eigen::Matrix<double, N, N> Q = qr.householderQ();
    Eigen::Matrix<double, N, 1> lam;
    for (int i = 0; i < N; ++i) lam[i] = std::exp(u(rng));
    const Eigen::Matrix<double, N, N> P = Q * lam.asDiagonal() * Q.transpose();
    return 0.5 * (P + P.transpose());
}

template <int R, int C>
Eigen::Matrix<double, R, C> random_matrix(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Eigen::Matrix<double, R, C> A;
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) A(i, j) = g(rng);
    return A;
}

/// Covariance with the mixed units of the navigation error state (rad^2 for horizontal position).
inline blends::Mat15 random_nav_covariance(std::mt19937_64& rng) {
    blends::Vec15 s;
    s << 1e-7, 1e-7, 1.0, 0.1, 0.1, 0.1, 1e-2, 1e-2, 5e-2, 1e-2, 1e-2, 1e-2, 1e-4, 1e-4, 1e-4;
    const blends::Mat15 C = random_spd<15>(rng, 0.05, 5.0);
    const blends::Mat15 P = s.asDiagonal() * C * s.asDiagonal();
    return 0.5 * (P + P.transpose());
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace oracle
