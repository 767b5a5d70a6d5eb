#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "blends/blends.hpp"
#include "oracles.hpp"
#include "scenario.hpp"

using namespace blends;

namespace {

NominalState level_state(double yaw) {
    NominalState x;
    x.pos = {32.0 * std::numbers::pi / 180.0, 34.8 * std::numbers::pi / 180.0, 50.0};
    x.vel_ned = Vec3(2.0, 0.0, 0.0);
    x.att = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
    return x;
}

std::vector<Vec3> ned_errors(const FilterTrace& fwd, const Dataset& data) {
    std::vector<Vec3> out;
    for (std::size_t k = 0; k < fwd.size(); ++k) {
        out.push_back(geo_to_ned(fwd[k].nominal.pos, data.origin) - geo_to_ned(data.truth[k].state.pos, data.origin));
    }
    return out;
}

}  // namespace

TEST(Predict, ResetStateStaysZero) {
    std::mt19937_64 rng(1);
    const Mat15 Phi = Mat15::Identity() + 0.01 * oracle::random_matrix<15, 15>(rng);
    const Prediction p = predict(Vec15::Zero(), oracle::random_nav_covariance(rng), Phi, Mat15::Zero());
    EXPECT_TRUE(p.dx_minus.isZero(0.0));
}

TEST(Predict, IdentityTransitionAddsProcessNoise) {
    std::mt19937_64 rng(2);
    const Mat15 P = oracle::random_spd<15>(rng);
    const Prediction p = predict(Vec15::Zero(), P, Mat15::Identity(), Mat15(0.1 * Mat15::Identity()));
    EXPECT_LT(oracle::rel_diff(p.P_minus, P + 0.1 * Mat15::Identity()), 1e-15);
}

TEST(Update, ScalarAnalogue) {
    Mat15 P = Mat15::Identity();
    const UpdateResult u = update(Vec15::Zero(), P, Vec3(1.0, 0.0, 0.0), Mat3::Identity());
    EXPECT_DOUBLE_EQ(u.K(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(u.P_plus(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(u.dx_plus[0], 0.5);
    EXPECT_DOUBLE_EQ(u.P_plus(3, 3), 1.0);
}

TEST(Update, HugeNoiseIsZeroGain) {
    const NominalState x = level_state(0.3);
    const Mat15 P = initial_covariance(x.pos, FilterConfig{}.p0_std);
    Vec15 dx = Vec15::Zero();
    dx[2] = 0.2;
    GnssFix fix;
    fix.pos = ned_to_geo(Vec3(1.0, -2.0, 0.5), x.pos);
    fix.r_diag = Vec3::Constant(1e12);
    const UpdateResult u = update(dx, P, fix, x);
    EXPECT_LT((u.dx_plus - dx).norm() / dx.norm(), 1e-6);
    EXPECT_LT(oracle::rel_diff(u.P_plus, P), 1e-6);
}

TEST(Update, BiasedFixPullsNorthByThreeMeters) {
    const auto truth = generate_truth(TrajectorySpec{}, 0.01);
    const NominalState x = truth[0].state;
    Vec15 p0 = FilterConfig{}.p0_std;
    p0.head<3>().setConstant(10.0);
    const Mat15 P = initial_covariance(x.pos, p0);
    GnssFix fix;
    fix.pos = ned_to_geo(Vec3(3.0, 0.0, 0.0), x.pos);
    fix.r_diag = Vec3::Constant(0.25);
    const UpdateResult u = update(Vec15::Zero(), P, fix, x);
    const double rn = wgs84::meridian_radius(x.pos.lat) + x.pos.alt;
    // x = x_nom - dx: a fix 3 m north drives the north slot to about -3 m in radians.
    EXPECT_NEAR(-u.dx_plus[0] * rn, 3.0, 0.3);
    EXPECT_NEAR(geo_to_ned(apply_and_reset(x, u.dx_plus).pos, x.pos).x(), 3.0, 0.3);
}

TEST(Update, MatchesJosephForm) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat15 P = oracle::random_nav_covariance(rng);
        const Mat3 R = oracle::random_spd<3>(rng, 1e-14, 1e-13);
        const Vec3 dz = 1e-7 * oracle::random_matrix<3, 1>(rng);
        const UpdateResult u = update(Vec15::Zero(), P, dz, R);
        const Mat3x15 H = position_observation();
        const Mat15 A = Mat15::Identity() - u.K * H;
        const Mat15 joseph = A * P * A.transpose() + u.K * R * u.K.transpose();
        EXPECT_LT(oracle::rel_diff(u.P_plus, joseph), 1e-9);
    }
}

TEST(Update, SingularInnovationThrows) {
    Mat15 P = Mat15::Zero();
    EXPECT_THROW(update(Vec15::Zero(), P, Vec3::Zero(), Mat3::Zero()), NumericalError);
}

TEST(ApplyAndReset, ZeroCorrectionIsIdentity) {
    const NominalState x = level_state(0.4);
    const NominalState y = apply_and_reset(x, Vec15::Zero());
    EXPECT_EQ(y.pos.vec(), x.pos.vec());
    EXPECT_EQ(y.vel_ned, x.vel_ned);
    EXPECT_EQ(y.att, x.att);
}

TEST(ApplyAndReset, AltitudeSign) {
    const NominalState x = level_state(0.4);
    Vec15 dx = Vec15::Zero();
    dx[slot::kPos + 2] = 1.0;
    EXPECT_DOUBLE_EQ(apply_and_reset(x, dx).pos.alt, x.pos.alt - 1.0);
}

TEST(ApplyAndReset, HeadingMatchesExactComposition) {
    const NominalState x = level_state(0.4);
    Vec15 dx = Vec15::Zero();
    dx[slot::kAtt + 2] = 1e-3;
    const Mat3 att = apply_and_reset(x, dx).att;
    const Mat3 exact = Eigen::AngleAxisd(-1e-3, Vec3::UnitZ()).toRotationMatrix() * x.att;
    EXPECT_LT((att - exact).norm(), 1e-12);
    EXPECT_NEAR(std::abs(std::atan2(att(1, 0), att(0, 0)) - 0.4), 1e-3, 1e-9);
}

TEST(AlignFixes, NearestEpochWithinHalfPeriod) {
    std::vector<ImuSample> imu(5);
    for (int k = 0; k < 5; ++k) imu[k].t = 0.01 * k;
    std::vector<GnssFix> gnss(3);
    gnss[0].t = 0.0049;
    gnss[1].t = 0.0251;
    gnss[2].t = 0.5;
    const auto at = align_fixes(imu, gnss);
    EXPECT_EQ(at[0], 0);
    EXPECT_EQ(at[3], 1);
    EXPECT_EQ(at[1], -1);
    EXPECT_EQ(at[2], -1);
    EXPECT_EQ(at[4], -1);
}

TEST(RunForward, EmptyImuThrows) {
    const std::vector<ImuSample> imu;
    const std::vector<GnssFix> gnss(1);
    EXPECT_THROW(run_forward(imu, gnss, FilterConfig{}), ArgumentError);
}

TEST(RunForward, NonIncreasingTimeThrows) {
    std::vector<ImuSample> imu(3);
    imu[1].t = 0.01;
    imu[2].t = 0.01;
    const std::vector<GnssFix> gnss(1);
    EXPECT_THROW(run_forward(imu, gnss, FilterConfig{}), ArgumentError);
}

TEST(RunForward, NoiselessRunTracksTruth) {
    RunConfig cfg;
    cfg.trajectory.duration = 60.0;
    cfg.sensors.gyro_std = 0.0;
    cfg.sensors.accel_std = 0.0;
    cfg.sensors.gnss_std = 0.0;
    const Dataset data = simulate_dataset(cfg.trajectory, cfg.sensors);
    const FilterTrace fwd = run_forward(data.imu, data.gnss, make_filter_config(cfg, data));
    const auto r = rmse<3>(ned_errors(fwd, data));
    EXPECT_LT(r.norm, 1e-3);
}

TEST(RunForward, ZeroNoiseKeepsCorrectionsTiny) {
    RunConfig cfg;
    cfg.trajectory.duration = 60.0;
    cfg.sensors.gyro_std = 0.0;
    cfg.sensors.accel_std = 0.0;
    cfg.sensors.gnss_std = 0.0;
    cfg.qd_scale = 0.0;
    const Dataset data = simulate_dataset(cfg.trajectory, cfg.sensors);
    const FilterTrace fwd = run_forward(data.imu, data.gnss, make_filter_config(cfg, data));
    double worst = 0.0;
    for (const auto& e : fwd.epochs) worst = std::max(worst, e.dx_plus.cwiseAbs().maxCoeff());
    EXPECT_LT(worst, 1e-9);
}

TEST(RunForward, UpdatesNeverIncreaseTrace) {
    const auto& run = scenario::lawnmower(0.0);
    std::size_t updates = 0;
    for (const auto& e : run.forward.epochs) {
        if (!e.updated) continue;
        ++updates;
        ASSERT_LE(e.P_plus.trace(), e.P_minus.trace()) << "t = " << e.t;
    }
    EXPECT_EQ(updates, run.data.gnss.size() - 1);
}

TEST(RunForward, UnbiasedHorizontalRmse) {
    const auto& run = scenario::lawnmower(0.0);
    EXPECT_LT(horizontal_rmse(ned_errors(run.forward, run.data)), 0.5);
}

TEST(RunForward, BiasedMeanErrorIsInherited) {
    const auto& run = scenario::lawnmower(3.0);
    const double m = horizontal_mean_error(ned_errors(run.forward, run.data));
    EXPECT_GE(m, 2.7);
    EXPECT_LE(m, 3.3);
}
