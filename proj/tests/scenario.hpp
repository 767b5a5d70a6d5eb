#pragma once

#include <map>

#include "blends/blends.hpp"

namespace scenario {

/// 400 s lawnmower at 100 Hz IMU / 10 Hz GNSS with a constant north GNSS bias.
inline blends::RunConfig lawnmower_config(double mu, std::uint64_t seed = 1) {
    blends::RunConfig cfg;
    cfg.seed = seed;
    cfg.sensors.seed = seed;
    cfg.sensors.gnss_mu = blends::Vec3(mu, 0.0, 0.0);
    return cfg;
}

struct Run {
    blends::RunConfig cfg;
    blends::Dataset data;
    blends::FilterTrace forward;
    std::vector<blends::BackwardInfo> backward;
};

/// Simulated dataset with forward and backward passes, computed once per bias value.
inline const Run& lawnmower(double mu) {
    static std::map<double, Run> cache;
    auto it = cache.find(mu);
    if (it == cache.end()) {
        Run r;
        r.cfg = lawnmower_config(mu);
        r.data = blends::simulate_dataset(r.cfg.trajectory, r.cfg.sensors);
        r.forward = blends::run_forward(r.data.imu, r.data.gnss, blends::make_filter_config(r.cfg, r.data));
        r.backward = blends::run_backward(r.forward);
        it = cache.emplace(mu, std::move(r)).first;
    }
    return it->second;
}

}  // namespace scenario
