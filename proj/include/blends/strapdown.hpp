#pragma once

#include <cmath>

#include "blends/errors.hpp"
#include "blends/geodesy.hpp"
#include "blends/linalg.hpp"
#include "blends/types.hpp"

namespace blends {

/// White-noise densities of the IMU error model.
///
/// sigma_a, sigma_g are measurement noise densities (m/s/sqrt(s), rad/sqrt(s));
/// sigma_ab, sigma_gb drive the bias random walks (m/s^2/sqrt(s), rad/s/sqrt(s)).
struct ImuNoiseSpec {
    Vec3 sigma_a = Vec3::Constant(1e-2);
    Vec3 sigma_g = Vec3::Constant(1e-3);
    Vec3 sigma_ab = Vec3::Constant(1e-4);
    Vec3 sigma_gb = Vec3::Constant(1e-5);

    /// Density equivalent to a per-sample standard deviation at sample period dt.
    static double density_from_sample_std(double sigma, double dt) { return sigma * std::sqrt(dt); }

    void validate() const {
        const auto positive = [](const Vec3& v) { return (v.array() > 0.0).all() && v.allFinite(); };
        if (!positive(sigma_a) || !positive(sigma_g) || !positive(sigma_ab) || !positive(sigma_gb)) {
            throw ArgumentError("ImuNoiseSpec: all noise intensities must be positive");
        }
    }

    Mat12 continuous_q() const {
        Eigen::Matrix<double, 12, 1> d;
        d << sigma_a.cwiseAbs2(), sigma_g.cwiseAbs2(), sigma_ab.cwiseAbs2(), sigma_gb.cwiseAbs2();
        return d.asDiagonal();
    }
};

struct SystemMatrices {
    Mat15 F = Mat15::Zero();
    Mat15x12 G = Mat15x12::Zero();
    Mat15 Phi = Mat15::Identity();
    Mat15x12 noise_factor = Mat15x12::Zero();  ///< N with Qd = N Nᵀ

    Mat15 Qd() const { return noise_factor * noise_factor.transpose(); }
};

/// One strapdown step using the IMU sample at the start of the interval.
inline NominalState propagate_nominal(const NominalState& x, const ImuSample& u, double dt) {
    if (!(dt > 0.0)) throw ArgumentError("propagate_nominal: dt must be positive");
    NominalState y = x;
    const Vec3 f = u.f_b - x.b_a;
    const Vec3 w = u.w_b - x.b_g;
    y.att = x.att * so3_exp(w * dt);
    y.vel_ned = x.vel_ned + (x.att * f + wgs84::gravity_ned()) * dt;
    const Vec3 rate = geo_rate_scale(x.pos).cwiseProduct(0.5 * (x.vel_ned + y.vel_ned));
    y.pos = Geodetic::from_vec(x.pos.vec() + rate * dt);
    return y;
}

/// Continuous-time error dynamics F and noise routing G about the nominal state.
inline void error_dynamics(const NominalState& x, const ImuSample& u, Mat15& F, Mat15x12& G) {
    using namespace slot;
    const Mat3& C = x.att;
    F.setZero();
    F.block<3, 3>(kPos, kVel) = geo_rate_scale(x.pos).asDiagonal();
    F.block<3, 3>(kVel, kAtt) = -skew(C * (u.f_b - x.b_a));
    F.block<3, 3>(kVel, kAccBias) = -C;
    F.block<3, 3>(kAtt, kGyroBias) = -C;

    G.setZero();
    G.block<3, 3>(kVel, 0) = C;
    G.block<3, 3>(kAtt, 3) = C;
    G.block<3, 3>(kAccBias, 6) = Mat3::Identity();
    G.block<3, 3>(kGyroBias, 9) = Mat3::Identity();
}

/// Builds F, G, the first-order transition Phi = I + F dt and Qd = qd_scale * G Q Gᵀ dt.
inline SystemMatrices linearize(const NominalState& x, const ImuSample& u, const ImuNoiseSpec& noise, double dt,
                                double qd_scale = 0.5) {
    if (!(dt >= 0.0)) throw ArgumentError("linearize: dt must be non-negative");
    if (!(qd_scale >= 0.0)) throw ArgumentError("linearize: qd_scale must be non-negative");
    SystemMatrices m;
    error_dynamics(x, u, m.F, m.G);
    m.Phi = Mat15::Identity() + m.F * dt;
    Eigen::Matrix<double, 12, 1> d;
    d << noise.sigma_a, noise.sigma_g, noise.sigma_ab, noise.sigma_gb;
    m.noise_factor = std::sqrt(qd_scale * dt) * m.G * d.asDiagonal();
    return m;
}

}  // namespace blends
