#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "blends/errors.hpp"
#include "blends/geodesy.hpp"
#include "blends/linalg.hpp"
#include "blends/types.hpp"

namespace blends {

enum class Pattern { kLawnmower, kSquare, kCircle, kSine, kZigzag, kInfinity };

inline Pattern parse_pattern(std::string_view s) {
    if (s == "lawnmower") return Pattern::kLawnmower;
    if (s == "square") return Pattern::kSquare;
    if (s == "circle") return Pattern::kCircle;
    if (s == "sine") return Pattern::kSine;
    if (s == "zigzag") return Pattern::kZigzag;
    if (s == "infinity") return Pattern::kInfinity;
    throw ArgumentError("unsupported trajectory pattern: " + std::string(s));
}

/// Planar constant-altitude trajectory description. Lengths in meters, times in seconds.
struct TrajectorySpec {
    Pattern pattern = Pattern::kLawnmower;
    double duration = 400.0;
    double speed = 2.0;
    /// Time spent in each corner turn (lawnmower, square, zigzag).
    double turn_duration = 10.0;
    /// Lawnmower: full north extent apex to apex. Square: side length. Zigzag: straight leg length.
    double leg_length = 80.0 + 40.0 / std::numbers::pi;
    double radius = 20.0;      ///< circle radius, infinity half-width
    double amplitude = 10.0;   ///< sine
    double wavelength = 80.0;  ///< sine
    double period = 60.0;      ///< infinity
    Geodetic origin{32.0 * std::numbers::pi / 180.0, 34.8 * std::numbers::pi / 180.0, 50.0};

    void validate() const {
        if (!(duration > 0.0)) throw ArgumentError("TrajectorySpec: duration must be positive");
        if (!(speed > 0.0) || !(turn_duration > 0.0) || !(leg_length > 0.0) || !(radius > 0.0) ||
            !(amplitude > 0.0) || !(wavelength > 0.0) || !(period > 0.0)) {
            throw ArgumentError("TrajectorySpec: geometry must be positive");
        }
        wgs84::check_latitude(origin.lat);
    }
};

struct TruthSample {
    double t = 0.0;
    NominalState state;
};

/// Local-frame kinematics at one instant: NED position, velocity and heading.
struct PlanarPose {
    Vec3 ned = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    double heading = 0.0;
};

namespace detail {

/// Constant-speed path built from straight segments (curvature 0) and arcs, repeated cyclically.
struct PathSegment {
    double length;
    double curvature;  ///< positive turns clockwise seen from above (heading increases)
};

class SegmentPath {
public:
    SegmentPath(std::vector<PathSegment> segs, Vec3 start, double heading0, double speed)
        : segs_(std::move(segs)), start_(std::move(start)), heading0_(heading0), speed_(speed) {
        for (const auto& s : segs_) cycle_ += s.length;
        // Net displacement and heading change of one cycle.
        Vec3 p = Vec3::Zero();
        double h = 0.0;
        for (const auto& s : segs_) advance(p, h, s, s.length);
        cycle_shift_ = p;
        cycle_turn_ = h;
    }

    PlanarPose at(double t) const {
        double dist = speed_ * t;
        const double cycles = std::floor(dist / cycle_);
        dist -= cycles * cycle_;
        Vec3 p = Vec3::Zero();
        double h = 0.0;
        const auto n = static_cast<long>(cycles);
        for (long i = 0; i < n; ++i) {
            p += Eigen::AngleAxisd(h, Vec3::UnitZ()).toRotationMatrix() * cycle_shift_;
            h += cycle_turn_;
        }
        for (const auto& s : segs_) {
            const double d = std::min(dist, s.length);
            advance(p, h, s, d);
            dist -= d;
            if (dist <= 0.0) break;
        }
        const double heading = heading0_ + h;
        const Mat3 r0 = Eigen::AngleAxisd(heading0_, Vec3::UnitZ()).toRotationMatrix();
        PlanarPose pose;
        pose.ned = start_ + r0 * p;
        pose.heading = heading;
        pose.vel = speed_ * Vec3(std::cos(heading), std::sin(heading), 0.0);
        return pose;
    }

private:
    static void advance(Vec3& p, double& h, const PathSegment& s, double d) {
        if (s.curvature == 0.0) {
            p += d * Vec3(std::cos(h), std::sin(h), 0.0);
        } else {
            const double k = s.curvature;
            p += Vec3((std::sin(h + k * d) - std::sin(h)) / k, (std::cos(h) - std::cos(h + k * d)) / k, 0.0);
            h += k * d;
        }
    }

    std::vector<PathSegment> segs_;
    Vec3 start_;
    double heading0_;
    double speed_;
    double cycle_ = 0.0;
    Vec3 cycle_shift_ = Vec3::Zero();
    double cycle_turn_ = 0.0;
};

}  // namespace detail

/// Pose of the pattern at time t in the local NED frame anchored at the origin.
inline PlanarPose pattern_pose(const TrajectorySpec& spec, double t) {
    using detail::PathSegment;
    constexpr double pi = std::numbers::pi;
    const double v = spec.speed;
    switch (spec.pattern) {
        case Pattern::kLawnmower: {
            const double r = v * spec.turn_duration / pi;
            const double straight = spec.leg_length - 2.0 * r;
            if (!(straight > 0.0)) throw ArgumentError("lawnmower: leg_length too short for the turn radius");
            detail::SegmentPath path({{straight, 0.0}, {pi * r, 1.0 / r}, {straight, 0.0}, {pi * r, -1.0 / r}},
                                     Vec3(r, 0.0, 0.0), 0.0, v);
            return path.at(t);
        }
        case Pattern::kSquare: {
            const double r = v * spec.turn_duration / (pi / 2.0);
            const double straight = spec.leg_length - 2.0 * r;
            if (!(straight > 0.0)) throw ArgumentError("square: side too short for the turn radius");
            detail::SegmentPath path({{straight, 0.0}, {0.5 * pi * r, 1.0 / r}}, Vec3::Zero(), 0.0, v);
            return path.at(t);
        }
        case Pattern::kZigzag: {
            const double r = v * spec.turn_duration / (pi / 2.0);
            detail::SegmentPath path(
                {{spec.leg_length, 0.0}, {0.5 * pi * r, -1.0 / r}, {spec.leg_length, 0.0}, {0.5 * pi * r, 1.0 / r}},
                Vec3::Zero(), pi / 4.0, v);
            return path.at(t);
        }
        case Pattern::kCircle: {
            const double r = spec.radius;
            const double h = v * t / r;
            PlanarPose p;
            p.ned = Vec3(r * std::sin(h), r * (1.0 - std::cos(h)), 0.0);
            p.heading = h;
            p.vel = v * Vec3(std::cos(h), std::sin(h), 0.0);
            return p;
        }
        case Pattern::kSine: {
            const double n = v * t;
            const double k = 2.0 * pi / spec.wavelength;
            PlanarPose p;
            p.ned = Vec3(n, spec.amplitude * std::sin(k * n), 0.0);
            p.vel = Vec3(v, spec.amplitude * k * v * std::cos(k * n), 0.0);
            p.heading = std::atan2(p.vel.y(), p.vel.x());
            return p;
        }
        case Pattern::kInfinity: {
            const double a = spec.radius;
            const double w = 2.0 * pi / spec.period;
            PlanarPose p;
            p.ned = Vec3(a * std::sin(w * t), 0.5 * a * std::sin(2.0 * w * t), 0.0);
            p.vel = Vec3(a * w * std::cos(w * t), a * w * std::cos(2.0 * w * t), 0.0);
            p.heading = std::atan2(p.vel.y(), p.vel.x());
            return p;
        }
    }
    throw ArgumentError("unsupported trajectory pattern");
}

/// Truth sampled every dt over [0, duration]; yaw follows the path heading, roll = pitch = 0.
///
/// Position is integrated from the path velocity with the same rule as propagate_nominal, so
/// noise-free IMU samples reproduce the truth exactly.
inline std::vector<TruthSample> generate_truth(const TrajectorySpec& spec, double dt) {
    spec.validate();
    if (!(dt > 0.0)) throw ArgumentError("generate_truth: dt must be positive");
    const double steps = spec.duration / dt;
    const auto n = static_cast<std::size_t>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(n)) > 1e-6) throw ArgumentError("generate_truth: dt must divide duration");
    std::vector<TruthSample> out(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const PlanarPose p = pattern_pose(spec, t);
        TruthSample& s = out[k];
        s.t = t;
        s.state.vel_ned = p.vel;
        if (k == 0) {
            s.state.pos = ned_to_geo(p.ned, spec.origin);
        } else {
            const NominalState& prev = out[k - 1].state;
            const Vec3 rate = geo_rate_scale(prev.pos).cwiseProduct(0.5 * (prev.vel_ned + p.vel));
            s.state.pos = Geodetic::from_vec(prev.pos.vec() + rate * dt);
        }
        s.state.att = Eigen::AngleAxisd(p.heading, Vec3::UnitZ()).toRotationMatrix();
    }
    return out;
}

/// Counter-based generator: SplitMix64 finalizer over (seed, stream, counter), Box-Muller normals.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
        return mix(mix(seed_ ^ mix(stream)) + counter);
    }

    /// Uniform in (0, 1).
    double uniform(std::uint64_t stream, std::uint64_t counter) const {
        return (static_cast<double>(bits(stream, counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal draw number `index` of `stream`.
    double normal(std::uint64_t stream, std::uint64_t index) const {
        const double u1 = uniform(stream, 2 * index);
        const double u2 = uniform(stream, 2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t seed_;
};

struct SensorNoiseSpec {
    double gyro_std = 0.0316;             ///< rad/s per sample
    double accel_std = 32.2e-3 * wgs84::kGravity;  ///< m/s^2 per sample
    Vec3 gnss_mu = Vec3::Zero();          ///< constant NED bias, m
    double gnss_std = 0.5;                ///< m, each axis
    double imu_rate = 100.0;
    double gnss_rate = 10.0;
    std::uint64_t seed = 1;
    Vec3 accel_bias = Vec3::Zero();
    Vec3 gyro_bias = Vec3::Zero();

    void validate() const {
        if (!(imu_rate > 0.0) || !(gnss_rate > 0.0)) throw ArgumentError("SensorNoiseSpec: rates must be positive");
        if (!(gnss_rate <= imu_rate)) throw ArgumentError("SensorNoiseSpec: GNSS rate exceeds IMU rate");
        if (!(gyro_std >= 0.0) || !(accel_std >= 0.0) || !(gnss_std >= 0.0)) {
            throw ArgumentError("SensorNoiseSpec: standard deviations must be non-negative");
        }
    }
};

namespace rng_stream {
inline constexpr std::uint64_t kAccel = 1;
inline constexpr std::uint64_t kGyro = 2;
inline constexpr std::uint64_t kGnss = 3;
}  // namespace rng_stream

/// IMU samples whose noise-free part reproduces the truth under propagate_nominal.
inline std::vector<ImuSample> synthesize_imu(const std::vector<TruthSample>& truth, const SensorNoiseSpec& noise) {
    noise.validate();
    if (truth.size() < 2) throw ArgumentError("synthesize_imu: need at least two truth samples");
    const CounterRng rng(noise.seed);
    std::vector<ImuSample> out(truth.size());
    for (std::size_t k = 0; k + 1 < truth.size(); ++k) {
        const NominalState& a = truth[k].state;
        const NominalState& b = truth[k + 1].state;
        const double dt = truth[k + 1].t - truth[k].t;
        out[k].t = truth[k].t;
        out[k].f_b = a.att.transpose() * ((b.vel_ned - a.vel_ned) / dt - wgs84::gravity_ned());
        out[k].w_b = so3_log(a.att.transpose() * b.att) / dt;
    }
    out.back().t = truth.back().t;
    out.back().f_b = out[out.size() - 2].f_b;
    out.back().w_b = out[out.size() - 2].w_b;
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (int i = 0; i < 3; ++i) {
            const std::uint64_t idx = 3 * k + static_cast<std::uint64_t>(i);
            out[k].f_b[i] += noise.accel_bias[i] + noise.accel_std * rng.normal(rng_stream::kAccel, idx);
            out[k].w_b[i] += noise.gyro_bias[i] + noise.gyro_std * rng.normal(rng_stream::kGyro, idx);
        }
    }
    return out;
}

/// GNSS fixes at gnss_rate: truth plus constant NED bias plus white noise. The reported
/// variance is gnss_std^2 only (floored at 1e-6 m^2); the bias is not reported.
inline std::vector<GnssFix> synthesize_gnss(const std::vector<TruthSample>& truth, const SensorNoiseSpec& noise) {
    noise.validate();
    const CounterRng rng(noise.seed);
    const double ratio = noise.imu_rate / noise.gnss_rate;
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9) {
        throw ArgumentError("synthesize_gnss: IMU rate must be an integer multiple of the GNSS rate");
    }
    const double var = std::max(noise.gnss_std * noise.gnss_std, 1e-6);
    std::vector<GnssFix> out;
    out.reserve(truth.size() / stride + 1);
    for (std::size_t k = 0, j = 0; k < truth.size(); k += stride, ++j) {
        Vec3 e = noise.gnss_mu;
        for (int i = 0; i < 3; ++i) {
            e[i] += noise.gnss_std * rng.normal(rng_stream::kGnss, 3 * j + static_cast<std::uint64_t>(i));
        }
        GnssFix f;
        f.t = truth[k].t;
        f.pos = ned_to_geo(e, truth[k].state.pos);
        f.r_diag = Vec3::Constant(var);
        out.push_back(f);
    }
    return out;
}

}  // namespace blends
