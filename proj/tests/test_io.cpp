#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "blends/blends.hpp"
#include "oracles.hpp"

using namespace blends;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory per test.
fs::path scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    const fs::path dir = fs::temp_directory_path() / "blends_io_tests" /
                         (std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string error_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const FormatError& e) {
        return e.what();
    }
    return "";
}

Dataset small_dataset() {
    TrajectorySpec spec;
    spec.duration = 5.0;
    return simulate_dataset(spec, SensorNoiseSpec{});
}

}  // namespace

TEST(CsvRoundTrip, ImuIsBitIdentical) {
    const fs::path p = scratch() / "imu.csv";
    const Dataset d = small_dataset();
    csv::write_imu(p.string(), d.imu);
    const auto back = csv::read_imu(p.string());
    ASSERT_EQ(back.size(), d.imu.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        EXPECT_EQ(back[k].t, d.imu[k].t);
        EXPECT_EQ(back[k].f_b, d.imu[k].f_b);
        EXPECT_EQ(back[k].w_b, d.imu[k].w_b);
    }
}

TEST(CsvRoundTrip, GnssIsBitIdentical) {
    const fs::path p = scratch() / "gnss.csv";
    const Dataset d = small_dataset();
    csv::write_gnss(p.string(), d.gnss);
    const auto back = csv::read_gnss(p.string());
    ASSERT_EQ(back.size(), d.gnss.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        EXPECT_EQ(back[k].t, d.gnss[k].t);
        EXPECT_EQ(back[k].pos.vec(), d.gnss[k].pos.vec());
        EXPECT_EQ(back[k].r_diag, d.gnss[k].r_diag);
    }
}

TEST(CsvRoundTrip, TruthPreservesState) {
    const fs::path p = scratch() / "truth.csv";
    const Dataset d = small_dataset();
    csv::write_truth(p.string(), d.truth);
    const auto back = csv::read_truth(p.string());
    ASSERT_EQ(back.size(), d.truth.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        EXPECT_EQ(back[k].t, d.truth[k].t);
        EXPECT_EQ(back[k].state.pos.vec(), d.truth[k].state.pos.vec());
        EXPECT_EQ(back[k].state.vel_ned, d.truth[k].state.vel_ned);
        EXPECT_LT((back[k].state.att - d.truth[k].state.att).norm(), 1e-15);
    }
}

TEST(CsvRoundTrip, ExtremeValuesSurvive) {
    const fs::path p = scratch() / "imu.csv";
    std::vector<ImuSample> imu(1);
    imu[0].t = 0.1;
    imu[0].f_b = Vec3(1.0 / 3.0, -5e-324, 1.7976931348623157e308);
    imu[0].w_b = Vec3(std::nextafter(1.0, 2.0), -0.0, 1e-300);
    csv::write_imu(p.string(), imu);
    const auto back = csv::read_imu(p.string());
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].f_b, imu[0].f_b);
    EXPECT_EQ(back[0].w_b, imu[0].w_b);
}

TEST(CsvRead, ShuffledTimeNamesFirstOffendingLine) {
    const fs::path p = scratch() / "imu.csv";
    write_text(p, "t,fx,fy,fz,wx,wy,wz\n0,0,0,-9.8,0,0,0\n0.02,0,0,-9.8,0,0,0\n0.01,0,0,-9.8,0,0,0\n"
                  "0.005,0,0,-9.8,0,0,0\n");
    const std::string msg = error_message([&] { csv::read_imu(p.string()); });
    EXPECT_NE(msg.find(":4:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("time"), std::string::npos) << msg;
}

TEST(CsvRead, SingleRowFile) {
    const fs::path p = scratch() / "gnss.csv";
    write_text(p, "t,lat,lon,alt,rn,re,rd\n1.5,0.55,0.6,12.5,0.25,0.25,0.25\n");
    const auto g = csv::read_gnss(p.string());
    ASSERT_EQ(g.size(), 1u);
    EXPECT_EQ(g[0].t, 1.5);
    EXPECT_EQ(g[0].pos.alt, 12.5);
    EXPECT_EQ(g[0].r_diag, Vec3::Constant(0.25));
}

TEST(CsvRead, CrlfAndBlankLinesAccepted) {
    const fs::path p = scratch() / "imu.csv";
    write_text(p, "t,fx,fy,fz,wx,wy,wz\r\n0,1,2,3,4,5,6\r\n\r\n0.01,1,2,3,4,5,6\r\n");
    EXPECT_EQ(csv::read_imu(p.string()).size(), 2u);
}

TEST(CsvRead, WrongHeaderThrows) {
    const fs::path p = scratch() / "imu.csv";
    write_text(p, "t,fx,fy,fz,wx,wy\n0,0,0,0,0,0\n");
    EXPECT_NE(error_message([&] { csv::read_imu(p.string()); }).find(":1:"), std::string::npos);
}

TEST(CsvRead, MissingColumnNamesLine) {
    const fs::path p = scratch() / "imu.csv";
    write_text(p, "t,fx,fy,fz,wx,wy,wz\n0,0,0,0,0,0,0\n0.01,0,0,0,0,0\n");
    EXPECT_NE(error_message([&] { csv::read_imu(p.string()); }).find(":3:"), std::string::npos);
}

TEST(CsvRead, MalformedNumberNamesLine) {
    const fs::path p = scratch() / "imu.csv";
    write_text(p, "t,fx,fy,fz,wx,wy,wz\n0,0,0,abc,0,0,0\n");
    EXPECT_NE(error_message([&] { csv::read_imu(p.string()); }).find(":2:"), std::string::npos);
}

TEST(CsvRead, MissingFileThrows) {
    EXPECT_THROW(csv::read_imu((scratch() / "absent.csv").string()), FormatError);
}

TEST(CsvRead, NonPositiveGnssVarianceThrows) {
    const fs::path p = scratch() / "gnss.csv";
    write_text(p, "t,lat,lon,alt,rn,re,rd\n0,0.5,0.6,10,0.25,0,0.25\n");
    EXPECT_THROW(csv::read_gnss(p.string()), FormatError);
}

TEST(CsvRead, ZeroQuaternionThrows) {
    const fs::path p = scratch() / "truth.csv";
    write_text(p, "t,lat,lon,alt,vn,ve,vd,q0,q1,q2,q3\n0,0.5,0.6,10,0,0,0,0,0,0,0\n");
    EXPECT_THROW(csv::read_truth(p.string()), FormatError);
}

TEST(CorrectionRecords, IdentityRoundTripsExactly) {
    const fs::path p = scratch() / "records.csv";
    CorrectionRecord r;
    r.t = 0.25;
    r.D_f = Mat15::Identity();
    r.D_b = Mat15::Identity();
    r.c = Vec15::Zero();
    const std::vector<CorrectionRecord> in{r};
    csv::write_correction_records(p.string(), in);
    const auto out = csv::read_correction_records(p.string());
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].t, r.t);
    EXPECT_EQ(out[0].D_f, r.D_f);
    EXPECT_EQ(out[0].D_b, r.D_b);
    EXPECT_EQ(out[0].c, r.c);
}

TEST(CorrectionRecords, RandomRecordsAreLossless) {
    const fs::path p = scratch() / "records.csv";
    std::mt19937_64 rng(3);
    std::vector<CorrectionRecord> in(5);
    for (std::size_t k = 0; k < in.size(); ++k) {
        in[k].t = 0.01 * static_cast<double>(k);
        in[k].D_f = oracle::random_matrix<15, 15>(rng);
        in[k].D_b = oracle::random_matrix<15, 15>(rng);
        in[k].c = oracle::random_matrix<15, 1>(rng);
    }
    csv::write_correction_records(p.string(), in);
    const auto out = csv::read_correction_records(p.string());
    ASSERT_EQ(out.size(), in.size());
    for (std::size_t k = 0; k < in.size(); ++k) {
        EXPECT_EQ(out[k].D_f, in[k].D_f);
        EXPECT_EQ(out[k].D_b, in[k].D_b);
        EXPECT_EQ(out[k].c, in[k].c);
    }
}

TEST(CorrectionRecords, ColumnMajorLayout) {
    const fs::path p = scratch() / "records.csv";
    CorrectionRecord r;
    r.D_f = Mat15::Zero();
    r.D_f(1, 0) = 7.0;
    r.D_b = Mat15::Zero();
    r.D_b(0, 1) = 9.0;
    r.c = Vec15::Unit(14);
    csv::write_correction_records(p.string(), std::vector<CorrectionRecord>{r});
    std::ifstream in(p);
    std::string header;
    std::string row;
    std::getline(in, header);
    std::getline(in, row);
    std::vector<std::string> f;
    std::stringstream ss(row);
    for (std::string s; std::getline(ss, s, ',');) f.push_back(s);
    ASSERT_EQ(f.size(), 466u);
    EXPECT_EQ(f[2], "7");
    EXPECT_EQ(f[1 + 225 + 15], "9");
    EXPECT_EQ(f[465], "1");
}

TEST(CorrectionRecords, WrongWidthThrows) {
    const fs::path p = scratch() / "records.csv";
    std::string row = "0";
    for (int i = 0; i < 463; ++i) row += ",0";
    write_text(p, csv::record_header() + "\n" + row + "\n");
    const std::string msg = error_message([&] { csv::read_correction_records(p.string()); });
    EXPECT_NE(msg.find("466"), std::string::npos) << msg;
    EXPECT_NE(msg.find("464"), std::string::npos) << msg;
}

TEST(NetInputs, OneRowPerEpoch) {
    const fs::path p = scratch() / "net.csv";
    const Dataset d = small_dataset();
    RunConfig cfg;
    const FilterTrace fwd = run_forward(d.imu, d.gnss, make_filter_config(cfg, d));
    const auto bwd = run_backward(fwd);
    csv::write_net_inputs(p.string(), fwd, bwd);
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, csv::net_input_header());
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 480);
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, fwd.size());
}

TEST(Estimates, HeaderHasCovarianceDiagonal) {
    const fs::path p = scratch() / "est.csv";
    std::vector<SmoothedEpoch> est(2);
    est[0].P_s = Mat15::Identity();
    est[1].t = 1.0;
    est[1].P_s = 2.0 * Mat15::Identity();
    csv::write_estimates(p.string(), est);
    std::ifstream in(p);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("t,lat,lon,alt,vn,ve,vd,q0,q1,q2,q3,var_dlat", 0), 0u);
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), 25);
}
