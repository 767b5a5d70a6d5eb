#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "blends/errors.hpp"

namespace blends {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;
using Mat15x12 = Eigen::Matrix<double, 15, 12>;
using Mat3x15 = Eigen::Matrix<double, 3, 15>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

/// Error-state vector: [dp (rad, rad, m), dv (m/s), deps (rad), dba (m/s^2), dbg (rad/s)].
using ErrorState15 = Vec15;
/// Error-state covariance. Symmetric positive definite by construction.
using Cov15 = Mat15;

/// Slot offsets into ErrorState15. Every module indexes through these.
namespace slot {
inline constexpr int kPos = 0;
inline constexpr int kVel = 3;
inline constexpr int kAtt = 6;
inline constexpr int kAccBias = 9;
inline constexpr int kGyroBias = 12;
inline constexpr int kDim = 15;
}  // namespace slot

/// Geodetic position: latitude and longitude in radians, altitude in meters.
struct Geodetic {
    double lat = 0.0;
    double lon = 0.0;
    double alt = 0.0;

    Vec3 vec() const { return {lat, lon, alt}; }
    static Geodetic from_vec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

struct ImuSample {
    double t = 0.0;
    Vec3 f_b = Vec3::Zero();  ///< specific force, body frame, m/s^2
    Vec3 w_b = Vec3::Zero();  ///< angular rate, body frame, rad/s
};

struct GnssFix {
    double t = 0.0;
    Geodetic pos;
    Vec3 r_diag = Vec3::Ones();  ///< N/E/D variances, m^2
};

/// Full navigation state. `att` rotates body vectors into NED.
struct NominalState {
    Geodetic pos;
    Vec3 vel_ned = Vec3::Zero();
    Mat3 att = Mat3::Identity();
    Vec3 b_a = Vec3::Zero();
    Vec3 b_g = Vec3::Zero();
};

/// Backward filter in information form: info = P_b^-1, s = info * dx_b.
struct BackwardInfo {
    Mat15 info = Mat15::Zero();
    Vec15 s = Vec15::Zero();
};

/// Per-epoch output of the learned correction stage.
struct CorrectionRecord {
    double t = 0.0;
    Mat15 D_f = Mat15::Identity();
    Mat15 D_b = Mat15::Identity();
    Vec15 c = Vec15::Zero();
};

/// Per-slot correction bounds that contract from `m_wide` to `m_base` over `warmup_epochs`.
struct BoundSchedule {
    Vec15 m_wide = Vec15::Ones();
    Vec15 m_base = Vec15::Ones();
    double warmup_epochs = 1000.0;
    double power = 2.0;

    void validate() const {
        for (int i = 0; i < slot::kDim; ++i) {
            if (!(m_base[i] > 0.0) || !(m_base[i] <= m_wide[i])) {
                throw ArgumentError("BoundSchedule: require 0 < m_base <= m_wide at slot " + std::to_string(i));
            }
        }
        if (!(warmup_epochs >= 1.0)) throw ArgumentError("BoundSchedule: warmup_epochs must be >= 1");
        if (!(power > 0.0)) throw ArgumentError("BoundSchedule: power must be > 0");
    }

    /// Mobile-robot correction bounds (wide / base per slot group).
    static BoundSchedule mobile_robot() {
        return make(3e-7, 2e-7, 50.0, 1.0, 2.0, 0.5, 0.5, 0.2, 0.05, 0.002);
    }

    /// Quadrotor correction bounds: wider velocity and bias ranges for agile flight.
    static BoundSchedule quadrotor() {
        return make(3e-7, 2e-7, 50.0, 1.0, 15.0, 5.0, 0.5, 0.1, 0.05, 0.01);
    }

private:
    static BoundSchedule make(double pxy_w, double pxy_b, double pz_w, double pz_b, double v_w, double v_b,
                              double ba_w, double ba_b, double bg_w, double bg_b) {
        constexpr double pi = std::numbers::pi;
        BoundSchedule s;
        s.m_wide << pxy_w, pxy_w, pz_w, v_w, v_w, v_w, pi, pi, pi, ba_w, ba_w, ba_w, bg_w, bg_w, bg_w;
        s.m_base << pxy_b, pxy_b, pz_b, v_b, v_b, v_b, pi / 180.0, pi / 180.0, pi / 180.0, ba_b, ba_b, ba_b,
            bg_b, bg_b, bg_b;
        return s;
    }
};

}  // namespace blends
