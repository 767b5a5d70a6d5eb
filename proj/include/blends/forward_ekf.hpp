#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "blends/errors.hpp"
#include "blends/geodesy.hpp"
#include "blends/linalg.hpp"
#include "blends/strapdown.hpp"
#include "blends/types.hpp"

namespace blends {

struct FilterConfig {
    ImuNoiseSpec noise;
    double qd_scale = 0.5;
    /// Initial 1-sigma per error slot. Position entries are in meters and converted to radians.
    Vec15 p0_std = (Vec15() << 1.0, 1.0, 1.0, 0.1, 0.1, 0.1, 0.01, 0.01, 0.05, 0.05, 0.05, 0.05, 1e-3, 1e-3,
                    1e-3).finished();
    Vec3 init_vel = Vec3::Zero();
    Mat3 init_att = Mat3::Identity();
    Vec3 init_b_a = Vec3::Zero();
    Vec3 init_b_g = Vec3::Zero();
    /// When unset the nominal starts at the first GNSS fix, which is then not used as an update.
    std::optional<Geodetic> init_pos;
};

/// Everything the smoothers and the fusion stage need from one forward epoch.
///
/// `Phi` and `noise_factor` describe the transition from the previous epoch into this one.
/// `nominal_prior` is the propagated nominal before the update; `nominal` is after the reset.
struct ForwardEpoch {
    double t = 0.0;
    NominalState nominal_prior;
    NominalState nominal;
    Vec15 dx_minus = Vec15::Zero();
    Vec15 dx_plus = Vec15::Zero();
    Mat15 P_minus = Mat15::Identity();
    Mat15 P_plus = Mat15::Identity();
    Mat15 Phi = Mat15::Identity();
    Mat15x12 noise_factor = Mat15x12::Zero();
    bool updated = false;
    Vec3 dz = Vec3::Zero();
    Mat3 R = Mat3::Identity();

    Mat15 Qd() const { return noise_factor * noise_factor.transpose(); }
};

struct FilterTrace {
    std::vector<ForwardEpoch> epochs;

    std::size_t size() const { return epochs.size(); }
    const ForwardEpoch& operator[](std::size_t k) const { return epochs[k]; }
};

inline Mat3x15 position_observation() {
    Mat3x15 H = Mat3x15::Zero();
    H.block<3, 3>(0, slot::kPos).setIdentity();
    return H;
}

/// Position residual z_ins - z_gnss in (rad, rad, m).
inline Vec3 position_residual(const NominalState& nominal, const GnssFix& fix) {
    return nominal.pos.vec() - fix.pos.vec();
}

/// GNSS variances converted from m^2 to the (rad^2, rad^2, m^2) units of the position slots.
inline Mat3 position_noise(const NominalState& nominal, const GnssFix& fix) {
    if (!(fix.r_diag.array() > 0.0).all()) throw ArgumentError("GNSS r_diag must be positive");
    const Vec3 s = geo_rate_scale(nominal.pos).cwiseAbs();
    return fix.r_diag.cwiseProduct(s.cwiseAbs2()).asDiagonal();
}

inline Mat15 initial_covariance(const Geodetic& pos, const Vec15& p0_std) {
    Vec15 s = p0_std;
    s.head<3>() = s.head<3>().cwiseProduct(geo_rate_scale(pos).cwiseAbs());
    return s.cwiseAbs2().asDiagonal();
}

struct Prediction {
    Vec15 dx_minus;
    Mat15 P_minus;
};

inline Prediction predict(const Vec15& dx_plus, const Mat15& P_plus, const Mat15& Phi, const Mat15& Qd) {
    return {Phi * dx_plus, symmetrize_and_condition<15>(Phi * P_plus * Phi.transpose() + Qd)};
}

inline Prediction predict(const Vec15& dx_plus, const Mat15& P_plus, const SystemMatrices& sys) {
    return predict(dx_plus, P_plus, sys.Phi, sys.Qd());
}

struct UpdateResult {
    Vec15 dx_plus;
    Mat15 P_plus;
    Vec3 dz;
    Mat3 R;
    Eigen::Matrix<double, 15, 3> K;
};

/// Kalman update with a residual and noise already in error-state units.
inline UpdateResult update(const Vec15& dx_minus, const Mat15& P_minus, const Vec3& dz, const Mat3& R) {
    const Mat3x15 H = position_observation();
    const Mat3 S = H * P_minus * H.transpose() + R;
    Eigen::LLT<Mat3> llt(S);
    if (llt.info() != Eigen::Success || !S.allFinite()) {
        throw NumericalError("update: innovation covariance not positive definite");
    }
    const Eigen::Matrix<double, 15, 3> PHt = P_minus * H.transpose();
    const Eigen::Matrix<double, 15, 3> K = llt.solve(PHt.transpose()).transpose();
    UpdateResult r;
    r.K = K;
    r.dz = dz;
    r.R = R;
    r.dx_plus = dx_minus + K * (dz - H * dx_minus);
    r.P_plus = symmetrize_and_condition<15>((Mat15::Identity() - K * H) * P_minus);
    return r;
}

inline UpdateResult update(const Vec15& dx_minus, const Mat15& P_minus, const GnssFix& fix,
                           const NominalState& nominal) {
    return update(dx_minus, P_minus, position_residual(nominal, fix), position_noise(nominal, fix));
}

/// x = x_nom - dx, with the attitude corrected by the rotation Exp(-deps).
inline NominalState apply_correction(const NominalState& nominal, const Vec15& dx) {
    using namespace slot;
    NominalState x = nominal;
    x.pos = Geodetic::from_vec(nominal.pos.vec() - dx.segment<3>(kPos));
    x.vel_ned = nominal.vel_ned - dx.segment<3>(kVel);
    x.att = so3_exp(-dx.segment<3>(kAtt)) * nominal.att;
    x.b_a = nominal.b_a - dx.segment<3>(kAccBias);
    x.b_g = nominal.b_g - dx.segment<3>(kGyroBias);
    return x;
}

/// Folds the error estimate into the nominal; the error state restarts at zero.
inline NominalState apply_and_reset(const NominalState& nominal, const Vec15& dx_plus) {
    return apply_correction(nominal, dx_plus);
}

/// Index of the IMU epoch each fix is applied at, or -1 when no epoch lies within half a period.
inline std::vector<long> align_fixes(std::span<const ImuSample> imu, std::span<const GnssFix> gnss) {
    std::vector<long> at(imu.size(), -1);
    std::size_t k = 0;
    for (std::size_t j = 0; j < gnss.size(); ++j) {
        const double t = gnss[j].t;
        while (k + 1 < imu.size() && std::abs(imu[k + 1].t - t) <= std::abs(imu[k].t - t)) ++k;
        const double period = imu.size() > 1 ? (k + 1 < imu.size() ? imu[k + 1].t - imu[k].t : imu[k].t - imu[k - 1].t)
                                             : 0.0;
        const double tol = 0.5 * period * (1.0 + 1e-9) + 1e-12;
        if (std::abs(imu[k].t - t) <= tol && at[k] < 0) at[k] = static_cast<long>(j);
    }
    return at;
}

/// Forward error-state EKF over the full IMU stream.
inline FilterTrace run_forward(std::span<const ImuSample> imu, std::span<const GnssFix> gnss,
                               const FilterConfig& cfg) {
    if (imu.empty()) throw ArgumentError("run_forward: empty IMU stream");
    for (std::size_t k = 1; k < imu.size(); ++k) {
        if (!(imu[k].t > imu[k - 1].t)) throw ArgumentError("run_forward: IMU time not strictly increasing");
    }
    for (std::size_t j = 1; j < gnss.size(); ++j) {
        if (!(gnss[j].t > gnss[j - 1].t)) throw ArgumentError("run_forward: GNSS time not strictly increasing");
    }
    std::vector<long> fix_at = align_fixes(imu, gnss);

    NominalState x;
    if (cfg.init_pos) {
        x.pos = *cfg.init_pos;
    } else {
        if (gnss.empty()) throw ArgumentError("run_forward: no GNSS fix to initialize position");
        x.pos = gnss.front().pos;
        for (auto& j : fix_at) {
            if (j == 0) j = -1;
        }
    }
    x.vel_ned = cfg.init_vel;
    x.att = cfg.init_att;
    x.b_a = cfg.init_b_a;
    x.b_g = cfg.init_b_g;

    FilterTrace trace;
    trace.epochs.resize(imu.size());
    ForwardEpoch& e0 = trace.epochs[0];
    e0.t = imu[0].t;
    e0.nominal_prior = x;
    e0.P_minus = initial_covariance(x.pos, cfg.p0_std);
    e0.P_plus = e0.P_minus;
    if (fix_at[0] >= 0) {
        const UpdateResult u = update(e0.dx_minus, e0.P_minus, gnss[fix_at[0]], x);
        e0.dx_plus = u.dx_plus;
        e0.P_plus = u.P_plus;
        e0.updated = true;
        e0.dz = u.dz;
        e0.R = u.R;
    }
    e0.nominal = apply_and_reset(x, e0.dx_plus);

    for (std::size_t k = 1; k < imu.size(); ++k) {
        const ForwardEpoch& prev = trace.epochs[k - 1];
        ForwardEpoch& e = trace.epochs[k];
        const double dt = imu[k].t - imu[k - 1].t;
        const SystemMatrices sys = linearize(prev.nominal, imu[k - 1], cfg.noise, dt, cfg.qd_scale);
        e.t = imu[k].t;
        e.Phi = sys.Phi;
        e.noise_factor = sys.noise_factor;
        e.nominal_prior = propagate_nominal(prev.nominal, imu[k - 1], dt);
        const Prediction p = predict(Vec15::Zero(), prev.P_plus, sys);
        e.dx_minus = p.dx_minus;
        e.P_minus = p.P_minus;
        if (fix_at[k] >= 0) {
            const UpdateResult u = update(e.dx_minus, e.P_minus, gnss[fix_at[k]], e.nominal_prior);
            e.dx_plus = u.dx_plus;
            e.P_plus = u.P_plus;
            e.updated = true;
            e.dz = u.dz;
            e.R = u.R;
        } else {
            e.dx_plus = e.dx_minus;
            e.P_plus = e.P_minus;
        }
        e.nominal = apply_and_reset(e.nominal_prior, e.dx_plus);
    }
    return trace;
}

}  // namespace blends
