#pragma once

#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blends/errors.hpp"
#include "blends/forward_ekf.hpp"
#include "blends/fusion.hpp"
#include "blends/simkit.hpp"
#include "blends/types.hpp"

namespace blends {

enum class Mode { kSimulate, kEkf, kTfs, kRtss, kBlends, kMotivationStudy };

inline Mode parse_mode(const std::string& s) {
    if (s == "simulate") return Mode::kSimulate;
    if (s == "ekf") return Mode::kEkf;
    if (s == "tfs") return Mode::kTfs;
    if (s == "rtss") return Mode::kRtss;
    if (s == "blends") return Mode::kBlends;
    if (s == "motivation-study") return Mode::kMotivationStudy;
    throw ConfigError("unknown mode '" + s + "'");
}

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::kSimulate: return "simulate";
        case Mode::kEkf: return "ekf";
        case Mode::kTfs: return "tfs";
        case Mode::kRtss: return "rtss";
        case Mode::kBlends: return "blends";
        case Mode::kMotivationStudy: return "motivation-study";
    }
    return "unknown";
}

struct ProviderSpec {
    enum class Kind { kZero, kFile, kOracle } kind = Kind::kZero;
    std::string path;
};

inline ProviderSpec parse_provider(const std::string& s) {
    if (s == "zero") return {ProviderSpec::Kind::kZero, {}};
    if (s == "oracle") return {ProviderSpec::Kind::kOracle, {}};
    if (s.rfind("file:", 0) == 0 && s.size() > 5) return {ProviderSpec::Kind::kFile, s.substr(5)};
    throw ConfigError("unknown provider '" + s + "' (expected zero, oracle or file:<path>)");
}

struct RunConfig {
    Mode mode = Mode::kMotivationStudy;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    TrajectorySpec trajectory;
    SensorNoiseSpec sensors;

    /// Filter noise model. Measurement densities default to the sensor per-sample stds.
    std::optional<double> accel_noise_density;
    std::optional<double> gyro_noise_density;
    double accel_bias_rw = 1e-4;
    double gyro_bias_rw = 1e-5;
    double qd_scale = 0.5;
    Vec15 p0_std = FilterConfig{}.p0_std;
    /// Initial velocity and attitude come from the first truth sample when truth is available.
    Vec3 init_vel = Vec3::Zero();
    Vec3 init_euler = Vec3::Zero();

    BlendsConfig blends;
    /// Horizontal position bound (rad) used by the oracle provider.
    double oracle_position_bound = 1e-6;
    ProviderSpec provider;

    std::optional<std::string> imu_path;
    std::optional<std::string> gnss_path;
    std::optional<std::string> truth_path;

    bool export_net_inputs = false;
    double burn_in = 5.0;
    std::vector<double> study_biases = {0.0, 1.5, 3.0};
};

namespace detail {

inline Vec3 vec3_from(const nlohmann::json& j, const char* name) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(name) + ": expected an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Vec15 vec15_from(const nlohmann::json& j, const char* name) {
    if (!j.is_array() || j.size() != 15) throw ConfigError(std::string(name) + ": expected an array of 15 numbers");
    Vec15 v;
    for (int i = 0; i < 15; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace detail

/// Parses a JSON run configuration. Missing keys keep their defaults.
inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::read_opt;
    constexpr double deg = std::numbers::pi / 180.0;
    RunConfig c;
    try {
        if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
        read_opt(j, "seed", c.seed);
        read_opt(j, "out", c.out_dir);
        if (j.contains("provider")) c.provider = parse_provider(j.at("provider").get<std::string>());
        read_opt(j, "export_net_inputs", c.export_net_inputs);
        read_opt(j, "burn_in", c.burn_in);
        read_opt(j, "study_biases", c.study_biases);

        if (j.contains("trajectory")) {
            const auto& t = j.at("trajectory");
            if (t.contains("pattern")) c.trajectory.pattern = parse_pattern(t.at("pattern").get<std::string>());
            read_opt(t, "duration", c.trajectory.duration);
            read_opt(t, "speed", c.trajectory.speed);
            read_opt(t, "turn_duration", c.trajectory.turn_duration);
            read_opt(t, "leg_length", c.trajectory.leg_length);
            read_opt(t, "radius", c.trajectory.radius);
            read_opt(t, "amplitude", c.trajectory.amplitude);
            read_opt(t, "wavelength", c.trajectory.wavelength);
            read_opt(t, "period", c.trajectory.period);
            if (t.contains("origin")) {
                const auto& o = t.at("origin");
                c.trajectory.origin = {o.at("lat_deg").get<double>() * deg, o.at("lon_deg").get<double>() * deg,
                                       o.value("alt", 0.0)};
            }
        }
        if (j.contains("sensors")) {
            const auto& s = j.at("sensors");
            read_opt(s, "gyro_std", c.sensors.gyro_std);
            read_opt(s, "accel_std", c.sensors.accel_std);
            if (s.contains("accel_std_mg")) c.sensors.accel_std = s.at("accel_std_mg").get<double>() * 1e-3 * wgs84::kGravity;
            if (s.contains("gnss_mu")) c.sensors.gnss_mu = detail::vec3_from(s.at("gnss_mu"), "sensors.gnss_mu");
            read_opt(s, "gnss_std", c.sensors.gnss_std);
            read_opt(s, "imu_rate", c.sensors.imu_rate);
            read_opt(s, "gnss_rate", c.sensors.gnss_rate);
            if (s.contains("accel_bias")) c.sensors.accel_bias = detail::vec3_from(s.at("accel_bias"), "sensors.accel_bias");
            if (s.contains("gyro_bias")) c.sensors.gyro_bias = detail::vec3_from(s.at("gyro_bias"), "sensors.gyro_bias");
            if (s.contains("rng") && s.at("rng").get<std::string>() != "splitmix64-boxmuller") {
                throw ConfigError("sensors.rng: only 'splitmix64-boxmuller' is supported");
            }
        }
        if (j.contains("filter")) {
            const auto& f = j.at("filter");
            if (f.contains("accel_noise_density")) c.accel_noise_density = f.at("accel_noise_density").get<double>();
            if (f.contains("gyro_noise_density")) c.gyro_noise_density = f.at("gyro_noise_density").get<double>();
            read_opt(f, "accel_bias_rw", c.accel_bias_rw);
            read_opt(f, "gyro_bias_rw", c.gyro_bias_rw);
            read_opt(f, "qd_scale", c.qd_scale);
            if (f.contains("p0_std")) c.p0_std = detail::vec15_from(f.at("p0_std"), "filter.p0_std");
            if (f.contains("init_vel")) c.init_vel = detail::vec3_from(f.at("init_vel"), "filter.init_vel");
            if (f.contains("init_euler_deg")) c.init_euler = detail::vec3_from(f.at("init_euler_deg"), "filter.init_euler_deg") * deg;
        }
        if (j.contains("blends")) {
            const auto& b = j.at("blends");
            const std::string preset = b.value("preset", std::string("mobile_robot"));
            if (preset == "mobile_robot") {
                c.blends.schedule = BoundSchedule::mobile_robot();
            } else if (preset == "quadrotor") {
                c.blends.schedule = BoundSchedule::quadrotor();
            } else {
                throw ConfigError("blends.preset: unknown preset '" + preset + "'");
            }
            if (b.contains("m_wide")) c.blends.schedule.m_wide = detail::vec15_from(b.at("m_wide"), "blends.m_wide");
            if (b.contains("m_base")) c.blends.schedule.m_base = detail::vec15_from(b.at("m_base"), "blends.m_base");
            read_opt(b, "warmup_epochs", c.blends.schedule.warmup_epochs);
            read_opt(b, "power", c.blends.schedule.power);
            read_opt(b, "inference_epoch", c.blends.inference_epoch);
            read_opt(b, "window", c.blends.window);
            read_opt(b, "oracle_position_bound", c.oracle_position_bound);
        }
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            if (p.contains("imu")) c.imu_path = p.at("imu").get<std::string>();
            if (p.contains("gnss")) c.gnss_path = p.at("gnss").get<std::string>();
            if (p.contains("truth")) c.truth_path = p.at("truth").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    c.sensors.seed = c.seed;
    try {
        c.trajectory.validate();
        c.sensors.validate();
        c.blends.schedule.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (c.imu_path.has_value() != c.gnss_path.has_value()) {
        throw ConfigError("paths: imu and gnss must be given together");
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
        return parse_config(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace blends
