#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "blends/errors.hpp"
#include "blends/geodesy.hpp"
#include "blends/types.hpp"

namespace blends {

template <int N>
struct RmseResult {
    Eigen::Matrix<double, N, 1> per_axis;
    double norm = 0.0;
};

/// Per-component RMSE and the RMSE of the vector norm.
template <int N>
RmseResult<N> rmse(std::span<const Eigen::Matrix<double, N, 1>> errors) {
    if (errors.empty()) throw ArgumentError("rmse: empty sequence");
    Eigen::Matrix<double, N, 1> acc = Eigen::Matrix<double, N, 1>::Zero();
    for (const auto& e : errors) acc += e.cwiseAbs2();
    acc /= static_cast<double>(errors.size());
    return {acc.cwiseSqrt(), std::sqrt(acc.sum())};
}

template <int N>
RmseResult<N> rmse(const std::vector<Eigen::Matrix<double, N, 1>>& errors) {
    return rmse<N>(std::span<const Eigen::Matrix<double, N, 1>>(errors));
}

inline double rmse(std::span<const double> errors) {
    if (errors.empty()) throw ArgumentError("rmse: empty sequence");
    double acc = 0.0;
    for (double e : errors) acc += e * e;
    return std::sqrt(acc / static_cast<double>(errors.size()));
}

/// RMSE of the horizontal (north, east) error magnitude.
inline double horizontal_rmse(const std::vector<Vec3>& ned_errors) {
    if (ned_errors.empty()) throw ArgumentError("horizontal_rmse: empty sequence");
    double acc = 0.0;
    for (const auto& e : ned_errors) acc += e.head<2>().squaredNorm();
    return std::sqrt(acc / static_cast<double>(ned_errors.size()));
}

/// Magnitude of the mean horizontal error vector (the systematic offset).
inline double horizontal_mean_error(const std::vector<Vec3>& ned_errors) {
    if (ned_errors.empty()) throw ArgumentError("horizontal_mean_error: empty sequence");
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (const auto& e : ned_errors) m += e.head<2>();
    return (m / static_cast<double>(ned_errors.size())).norm();
}

/// Percent covariance improvement 100 (tr_ref - tr_test) / tr_ref per epoch.
inline std::vector<double> pci(std::span<const double> tr_ref, std::span<const double> tr_test) {
    if (tr_ref.size() != tr_test.size()) throw ArgumentError("pci: sequences not aligned");
    std::vector<double> out(tr_ref.size());
    for (std::size_t k = 0; k < tr_ref.size(); ++k) {
        if (!(tr_ref[k] > 0.0)) throw ArgumentError("pci: nonpositive reference trace at epoch " + std::to_string(k));
        out[k] = 100.0 * (tr_ref[k] - tr_test[k]) / tr_ref[k];
    }
    return out;
}

/// Fraction of epochs with |error| <= k sigma (inclusive).
inline double sigma_coverage(std::span<const double> errors, std::span<const double> variances, double k) {
    if (errors.size() != variances.size()) throw ArgumentError("sigma_coverage: sequences not aligned");
    if (errors.empty()) throw ArgumentError("sigma_coverage: empty sequence");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!(variances[i] > 0.0)) throw ArgumentError("sigma_coverage: nonpositive variance at " + std::to_string(i));
        if (std::abs(errors[i]) <= k * std::sqrt(variances[i])) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(errors.size());
}

/// Roll, pitch, yaw (ZYX) of a body-to-NED rotation.
inline Vec3 euler_angles(const Mat3& C) {
    return {std::atan2(C(2, 1), C(2, 2)), -std::asin(std::clamp(C(2, 0), -1.0, 1.0)), std::atan2(C(1, 0), C(0, 0))};
}

inline double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

/// Per-epoch estimate errors: position in NED meters about `origin`, velocity, and Euler angles.
struct StateErrors {
    std::vector<Vec3> pos;
    std::vector<Vec3> vel;
    std::vector<Vec3> att;
};

inline StateErrors state_errors(std::span<const NominalState> est, std::span<const NominalState> truth,
                                const Geodetic& origin) {
    if (est.size() != truth.size()) throw ArgumentError("state_errors: sequences not aligned");
    StateErrors out;
    out.pos.reserve(est.size());
    out.vel.reserve(est.size());
    out.att.reserve(est.size());
    for (std::size_t k = 0; k < est.size(); ++k) {
        out.pos.push_back(geo_to_ned(est[k].pos, origin) - geo_to_ned(truth[k].pos, origin));
        out.vel.push_back(est[k].vel_ned - truth[k].vel_ned);
        const Vec3 d = euler_angles(est[k].att) - euler_angles(truth[k].att);
        out.att.emplace_back(wrap_angle(d.x()), wrap_angle(d.y()), wrap_angle(d.z()));
    }
    return out;
}

/// RMSE per axis keyed p_N, p_E, p_D, v_N, v_E, v_D, phi, theta, psi plus horizontal summaries.
inline std::map<std::string, double> error_summary(const StateErrors& e) {
    const auto p = rmse<3>(e.pos);
    const auto v = rmse<3>(e.vel);
    const auto a = rmse<3>(e.att);
    return {{"p_N", p.per_axis.x()},
            {"p_E", p.per_axis.y()},
            {"p_D", p.per_axis.z()},
            {"v_N", v.per_axis.x()},
            {"v_E", v.per_axis.y()},
            {"v_D", v.per_axis.z()},
            {"phi", a.per_axis.x()},
            {"theta", a.per_axis.y()},
            {"psi", a.per_axis.z()},
            {"horizontal_rmse", horizontal_rmse(e.pos)},
            {"horizontal_mean_error", horizontal_mean_error(e.pos)}};
}

}  // namespace blends
