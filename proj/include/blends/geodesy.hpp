#pragma once

#include <cmath>
#include <numbers>

#include "blends/errors.hpp"
#include "blends/types.hpp"

namespace blends::wgs84 {

inline constexpr double kA = 6378137.0;
inline constexpr double kF = 1.0 / 298.257223563;
inline constexpr double kE2 = kF * (2.0 - kF);
inline constexpr double kGravity = 9.80665;

inline void check_latitude(double lat) {
    if (!std::isfinite(lat) || std::abs(lat) >= std::numbers::pi / 2.0 - 1e-9) {
        throw DomainError("latitude at or beyond the pole");
    }
}

/// Meridian radius of curvature R_N.
inline double meridian_radius(double lat) {
    const double s = std::sin(lat);
    const double w = 1.0 - kE2 * s * s;
    return kA * (1.0 - kE2) / (w * std::sqrt(w));
}

/// Prime-vertical radius of curvature R_E.
inline double transverse_radius(double lat) {
    const double s = std::sin(lat);
    return kA / std::sqrt(1.0 - kE2 * s * s);
}

inline Vec3 gravity_ned() { return {0.0, 0.0, kGravity}; }

}  // namespace blends::wgs84

namespace blends {

/// d(lat, lon, h)/dt = T_geo * v_ned.
inline Vec3 geo_rate_scale(const Geodetic& p) {
    wgs84::check_latitude(p.lat);
    return {1.0 / (wgs84::meridian_radius(p.lat) + p.alt),
            1.0 / ((wgs84::transverse_radius(p.lat) + p.alt) * std::cos(p.lat)), -1.0};
}

/// Local NED displacement of p relative to ref using the radii of curvature at ref.
inline Vec3 geo_to_ned(const Geodetic& p, const Geodetic& ref) {
    wgs84::check_latitude(ref.lat);
    const double rn = wgs84::meridian_radius(ref.lat) + ref.alt;
    const double re = wgs84::transverse_radius(ref.lat) + ref.alt;
    return {(p.lat - ref.lat) * rn, (p.lon - ref.lon) * re * std::cos(ref.lat), -(p.alt - ref.alt)};
}

/// Inverse of geo_to_ned for the same reference.
inline Geodetic ned_to_geo(const Vec3& ned, const Geodetic& ref) {
    wgs84::check_latitude(ref.lat);
    const double rn = wgs84::meridian_radius(ref.lat) + ref.alt;
    const double re = wgs84::transverse_radius(ref.lat) + ref.alt;
    return {ref.lat + ned.x() / rn, ref.lon + ned.y() / (re * std::cos(ref.lat)), ref.alt - ned.z()};
}

}  // namespace blends
