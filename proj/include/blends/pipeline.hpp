#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blends/backward_info.hpp"
#include "blends/config.hpp"
#include "blends/forward_ekf.hpp"
#include "blends/fusion.hpp"
#include "blends/io.hpp"
#include "blends/metrics.hpp"
#include "blends/simkit.hpp"
#include "blends/smoothers.hpp"

namespace blends {

struct Dataset {
    std::vector<ImuSample> imu;
    std::vector<GnssFix> gnss;
    std::vector<TruthSample> truth;  ///< empty for logs without reference
    Geodetic origin;
    Vec3 gnss_bias = Vec3::Zero();   ///< known only for simulated data
};

inline Dataset simulate_dataset(const TrajectorySpec& traj, const SensorNoiseSpec& sensors) {
    Dataset d;
    d.truth = generate_truth(traj, 1.0 / sensors.imu_rate);
    d.imu = synthesize_imu(d.truth, sensors);
    d.gnss = synthesize_gnss(d.truth, sensors);
    d.origin = traj.origin;
    d.gnss_bias = sensors.gnss_mu;
    return d;
}

inline Dataset load_dataset(const RunConfig& cfg) {
    Dataset d;
    d.imu = csv::read_imu(*cfg.imu_path);
    d.gnss = csv::read_gnss(*cfg.gnss_path);
    if (cfg.truth_path) d.truth = csv::read_truth(*cfg.truth_path);
    if (d.imu.empty()) throw ArgumentError("IMU log is empty");
    d.origin = d.truth.empty() ? (d.gnss.empty() ? Geodetic{} : d.gnss.front().pos) : d.truth.front().state.pos;
    return d;
}

inline FilterConfig make_filter_config(const RunConfig& cfg, const Dataset& data) {
    FilterConfig f;
    const double dt = data.imu.size() > 1 ? data.imu[1].t - data.imu[0].t : 1.0 / cfg.sensors.imu_rate;
    const double sa = cfg.accel_noise_density.value_or(ImuNoiseSpec::density_from_sample_std(cfg.sensors.accel_std, dt));
    const double sg = cfg.gyro_noise_density.value_or(ImuNoiseSpec::density_from_sample_std(cfg.sensors.gyro_std, dt));
    f.noise.sigma_a = Vec3::Constant(std::max(sa, 1e-9));
    f.noise.sigma_g = Vec3::Constant(std::max(sg, 1e-9));
    f.noise.sigma_ab = Vec3::Constant(cfg.accel_bias_rw);
    f.noise.sigma_gb = Vec3::Constant(cfg.gyro_bias_rw);
    f.noise.validate();
    f.qd_scale = cfg.qd_scale;
    f.p0_std = cfg.p0_std;
    if (!data.truth.empty()) {
        f.init_vel = data.truth.front().state.vel_ned;
        f.init_att = data.truth.front().state.att;
    } else {
        f.init_vel = cfg.init_vel;
        f.init_att = (Eigen::AngleAxisd(cfg.init_euler.z(), Vec3::UnitZ()) *
                      Eigen::AngleAxisd(cfg.init_euler.y(), Vec3::UnitY()) *
                      Eigen::AngleAxisd(cfg.init_euler.x(), Vec3::UnitX()))
                         .toRotationMatrix();
    }
    return f;
}

struct EstimatorSet {
    bool ekf = true;
    bool tfs = false;
    bool rtss = false;
    bool blends = false;
};

struct EstimatorRun {
    FilterTrace forward;
    std::vector<BackwardInfo> backward;
    std::map<std::string, std::vector<SmoothedEpoch>> estimates;
};

inline std::vector<SmoothedEpoch> forward_estimates(const FilterTrace& fwd) {
    std::vector<SmoothedEpoch> out(fwd.size());
    for (std::size_t k = 0; k < fwd.size(); ++k) {
        out[k].t = fwd[k].t;
        out[k].x_s = fwd[k].nominal;
        out[k].P_s = fwd[k].P_plus;
    }
    return out;
}

/// Schedule the oracle runs under: the configured bounds with the horizontal position slots widened.
inline BlendsConfig oracle_blends_config(const RunConfig& cfg) {
    BlendsConfig b = cfg.blends;
    for (int i = 0; i < 2; ++i) {
        b.schedule.m_wide[i] = std::max(b.schedule.m_wide[i], cfg.oracle_position_bound);
        b.schedule.m_base[i] = std::max(b.schedule.m_base[i], cfg.oracle_position_bound);
    }
    return b;
}

inline std::unique_ptr<CorrectionProvider> make_provider(const RunConfig& cfg, const Dataset& data,
                                                         BlendsConfig& blends_cfg) {
    blends_cfg = cfg.blends;
    switch (cfg.provider.kind) {
        case ProviderSpec::Kind::kZero: return std::make_unique<ZeroProvider>();
        case ProviderSpec::Kind::kFile:
            return std::make_unique<FileProvider>(csv::read_correction_records(cfg.provider.path));
        case ProviderSpec::Kind::kOracle: {
            blends_cfg = oracle_blends_config(cfg);
            const Vec15 c = OracleProvider::gnss_bias_correction(data.gnss_bias, data.origin);
            return std::make_unique<OracleProvider>(c, blends_cfg.schedule, blends_cfg.inference_epoch);
        }
    }
    throw ConfigError("unknown provider");
}

/// Runs the forward filter and whichever smoothers are requested on one dataset.
inline EstimatorRun run_estimators(const Dataset& data, const RunConfig& cfg, const EstimatorSet& which,
                                   CorrectionProvider* provider = nullptr, const BlendsConfig* blends_cfg = nullptr) {
    EstimatorRun run;
    const FilterConfig fcfg = make_filter_config(cfg, data);
    try {
        run.forward = run_forward(data.imu, data.gnss, fcfg);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("forward: ") + e.what());
    }
    if (which.ekf) run.estimates["ekf"] = forward_estimates(run.forward);
    if (which.tfs || which.blends || cfg.export_net_inputs) {
        try {
            run.backward = run_backward(run.forward);
        } catch (const Error& e) {
            throw Error(e.code(), std::string("backward: ") + e.what());
        }
    }
    try {
        if (which.tfs) run.estimates["tfs"] = tfs_smooth(run.forward, run.backward);
        if (which.rtss) run.estimates["rtss"] = rtss_smooth(run.forward);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("smoother: ") + e.what());
    }
    if (which.blends) {
        if (provider == nullptr || blends_cfg == nullptr) throw ArgumentError("blends: no correction provider");
        try {
            run.estimates["blends"] = run_blends(run.forward, run.backward, *provider, *blends_cfg);
        } catch (const Error& e) {
            throw Error(e.code(), std::string("blends: ") + e.what());
        }
    }
    return run;
}

inline std::vector<NominalState> states_of(const std::vector<SmoothedEpoch>& est) {
    std::vector<NominalState> out;
    out.reserve(est.size());
    for (const auto& e : est) out.push_back(e.x_s);
    return out;
}

/// Truth states aligned to estimate epochs by time.
inline std::vector<NominalState> aligned_truth(const std::vector<TruthSample>& truth,
                                               const std::vector<SmoothedEpoch>& est) {
    std::vector<NominalState> out;
    out.reserve(est.size());
    std::size_t j = 0;
    for (const auto& e : est) {
        while (j + 1 < truth.size() && std::abs(truth[j + 1].t - e.t) <= std::abs(truth[j].t - e.t)) ++j;
        if (truth.empty() || std::abs(truth[j].t - e.t) > 1e-6) {
            throw ArgumentError("truth does not cover estimate epoch t=" + std::to_string(e.t));
        }
        out.push_back(truth[j].state);
    }
    return out;
}

inline StateErrors estimate_errors(const Dataset& data, const std::vector<SmoothedEpoch>& est) {
    const auto states = states_of(est);
    const auto truth = aligned_truth(data.truth, est);
    return state_errors(states, truth, data.origin);
}

/// Fraction of epochs whose NED position error lies within k sigma, per axis.
inline Vec3 position_coverage(const Dataset& data, const std::vector<SmoothedEpoch>& est, double k) {
    const StateErrors e = estimate_errors(data, est);
    Vec3 out;
    std::vector<double> err(est.size());
    std::vector<double> var(est.size());
    for (int axis = 0; axis < 3; ++axis) {
        for (std::size_t i = 0; i < est.size(); ++i) {
            const Vec3 s = geo_rate_scale(est[i].x_s.pos).cwiseAbs();
            err[i] = e.pos[i][axis];
            var[i] = est[i].P_s(axis, axis) / (s[axis] * s[axis]);
        }
        out[axis] = sigma_coverage(err, var, k);
    }
    return out;
}

inline std::vector<double> covariance_traces(const std::vector<SmoothedEpoch>& est) {
    std::vector<double> out;
    out.reserve(est.size());
    for (const auto& e : est) out.push_back(e.P_s.trace());
    return out;
}

inline nlohmann::json summarize(const Dataset& data, const EstimatorRun& run, const RunConfig& cfg) {
    nlohmann::json j;
    for (const auto& [name, est] : run.estimates) {
        nlohmann::json e;
        if (!data.truth.empty()) {
            for (const auto& [k, v] : error_summary(estimate_errors(data, est))) e[k] = v;
            const Vec3 cov = position_coverage(data, est, 2.0);
            e["coverage_2sigma"] = {{"p_N", cov.x()}, {"p_E", cov.y()}, {"p_D", cov.z()}};
        }
        e["epochs"] = est.size();
        j["estimators"][name] = e;
    }
    const auto ekf = run.estimates.find("ekf");
    if (ekf != run.estimates.end()) {
        const auto ref = covariance_traces(ekf->second);
        for (const auto& [name, est] : run.estimates) {
            if (name == "ekf") continue;
            const auto p = pci(ref, covariance_traces(est));
            double min_after = std::numeric_limits<double>::infinity();
            double mean = 0.0;
            std::size_t n = 0;
            for (std::size_t k = 0; k < p.size(); ++k) {
                if (est[k].t - est.front().t < cfg.burn_in) continue;
                min_after = std::min(min_after, p[k]);
                mean += p[k];
                ++n;
            }
            if (n > 0) j["estimators"][name]["pci"] = {{"mean", mean / static_cast<double>(n)}, {"min_after_burn_in", min_after}};
        }
    }
    return j;
}

/// North/east plot data for the truth, the GNSS fixes and every estimator.
inline void write_trajectory_2d(const std::string& path, const Dataset& data, const EstimatorRun& run) {
    std::string header = "t";
    const bool truth = !data.truth.empty();
    if (truth) header += ",truth_n,truth_e";
    for (const auto& [name, est] : run.estimates) header += "," + name + "_n," + name + "_e";
    csv::Writer w(path, header);
    const auto& any = run.estimates.begin()->second;
    const auto truth_states = truth ? aligned_truth(data.truth, any) : std::vector<NominalState>{};
    std::vector<double> row;
    for (std::size_t k = 0; k < any.size(); ++k) {
        row.clear();
        row.push_back(any[k].t);
        if (truth) {
            const Vec3 p = geo_to_ned(truth_states[k].pos, data.origin);
            row.push_back(p.x());
            row.push_back(p.y());
        }
        for (const auto& [name, est] : run.estimates) {
            const Vec3 p = geo_to_ned(est[k].x_s.pos, data.origin);
            row.push_back(p.x());
            row.push_back(p.y());
        }
        w.row(row);
    }
    csv::Writer g(std::filesystem::path(path).replace_filename("gnss_2d.csv").string(), "t,gnss_n,gnss_e");
    for (const auto& f : data.gnss) {
        const Vec3 p = geo_to_ned(f.pos, data.origin);
        const std::array<double, 3> v{f.t, p.x(), p.y()};
        g.row(v);
    }
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

inline void write_run_outputs(const std::filesystem::path& dir, const Dataset& data, const EstimatorRun& run,
                              const RunConfig& cfg) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, est] : run.estimates) csv::write_estimates((dir / (name + ".csv")).string(), est);
    if (!run.estimates.empty()) write_trajectory_2d((dir / "trajectory_2d.csv").string(), data, run);
    if (cfg.export_net_inputs) csv::write_net_inputs((dir / "net_inputs.csv").string(), run.forward, run.backward);
    write_json((dir / "summary.json").string(), summarize(data, run, cfg));
}

inline void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
    std::filesystem::create_directories(dir);
    csv::write_imu((dir / "imu.csv").string(), data.imu);
    csv::write_gnss((dir / "gnss.csv").string(), data.gnss);
    if (!data.truth.empty()) csv::write_truth((dir / "truth.csv").string(), data.truth);
}

inline std::string bias_dir_name(double mu) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "mu_%.1f", mu);
    return buf;
}

/// Executes the configured mode and writes all outputs under cfg.out_dir.
inline void run_pipeline(const RunConfig& cfg, const std::function<void(const std::string&)>& log = {}) {
    const auto say = [&](const std::string& m) {
        if (log) log(m);
    };
    const std::filesystem::path out(cfg.out_dir);
    SensorNoiseSpec sensors = cfg.sensors;
    sensors.seed = cfg.seed;

    if (cfg.mode == Mode::kMotivationStudy) {
        nlohmann::json study;
        for (double mu : cfg.study_biases) {
            SensorNoiseSpec s = sensors;
            s.gnss_mu = Vec3(mu, 0.0, 0.0);
            say("motivation study: simulating mu = " + std::to_string(mu));
            const Dataset data = simulate_dataset(cfg.trajectory, s);
            const EstimatorRun run = run_estimators(data, cfg, {true, true, true, false});
            const std::string name = bias_dir_name(mu);
            write_run_outputs(out / name, data, run, cfg);
            study[name] = summarize(data, run, cfg);
        }
        std::filesystem::create_directories(out);
        write_json((out / "summary.json").string(), study);
        return;
    }

    const Dataset data = cfg.imu_path ? load_dataset(cfg) : simulate_dataset(cfg.trajectory, sensors);
    if (cfg.mode == Mode::kSimulate) {
        say("writing simulated dataset");
        write_dataset(out, data);
        return;
    }
    EstimatorSet which;
    which.tfs = cfg.mode == Mode::kTfs || cfg.mode == Mode::kBlends;
    which.rtss = cfg.mode == Mode::kRtss;
    which.blends = cfg.mode == Mode::kBlends;
    std::unique_ptr<CorrectionProvider> provider;
    BlendsConfig bcfg = cfg.blends;
    if (which.blends) provider = make_provider(cfg, data, bcfg);
    say("running " + to_string(cfg.mode) + " over " + std::to_string(data.imu.size()) + " IMU epochs");
    const EstimatorRun run = run_estimators(data, cfg, which, provider.get(), &bcfg);
    write_run_outputs(out, data, run, cfg);
}

}  // namespace blends
