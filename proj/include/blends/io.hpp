#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blends/errors.hpp"
#include "blends/fusion.hpp"
#include "blends/simkit.hpp"
#include "blends/types.hpp"

namespace blends::csv {

inline const std::string kImuHeader = "t,fx,fy,fz,wx,wy,wz";
inline const std::string kGnssHeader = "t,lat,lon,alt,rn,re,rd";
inline const std::string kTruthHeader = "t,lat,lon,alt,vn,ve,vd,q0,q1,q2,q3";
inline constexpr int kRecordWidth = 1 + 225 + 225 + 15;

inline const std::vector<std::string>& variance_columns() {
    static const std::vector<std::string> cols = {
        "var_dlat", "var_dlon", "var_dalt", "var_dv_n", "var_dv_e", "var_dv_d", "var_deps_x", "var_deps_y",
        "var_deps_z", "var_dba_x", "var_dba_y", "var_dba_z", "var_dbg_x", "var_dbg_y", "var_dbg_z"};
    return cols;
}

inline std::string estimate_header() {
    std::string h = kTruthHeader;
    for (const auto& c : variance_columns()) h += "," + c;
    return h;
}

inline std::string record_header() {
    std::string h = "t";
    for (int i = 0; i < 225; ++i) h += ",Df" + std::to_string(i);
    for (int i = 0; i < 225; ++i) h += ",Db" + std::to_string(i);
    for (int i = 0; i < 15; ++i) h += ",c" + std::to_string(i);
    return h;
}

inline std::string net_input_header() {
    std::string h = "t";
    for (int i = 0; i < kNetInputSize; ++i) h += ",u" + std::to_string(i);
    return h;
}

/// Appends v with 17 significant digits.
inline void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

class Writer {
public:
    Writer(const std::string& path, const std::string& header) : path_(path), out_(path) {
        if (!out_) throw ArgumentError("cannot open for writing: " + path);
        out_ << header << '\n';
    }

    template <typename Range>
    void row(const Range& values) {
        line_.clear();
        bool first = true;
        for (double v : values) {
            if (!first) line_ += ',';
            first = false;
            append_number(line_, v);
        }
        line_ += '\n';
        out_ << line_;
        if (!out_) throw ArgumentError("write failed: " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
    std::string line_;
};

/// Line-oriented reader that validates the header and the column count of every row.
class Reader {
public:
    Reader(const std::string& path, const std::string& header, std::size_t width) : path_(path), in_(path), width_(width) {
        if (!in_) throw FormatError(path + ": cannot open");
        std::string line;
        if (!std::getline(in_, line)) throw FormatError(path + ":1: missing header");
        strip(line);
        if (line != header) throw FormatError(path + ":1: unexpected header, expected '" + header.substr(0, 60) + "'");
        line_no_ = 1;
    }

    /// Reads the next non-empty row into `values`; false at end of file.
    bool next(std::vector<double>& values) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            strip(line);
            if (line.empty()) continue;
            values.clear();
            std::string_view rest(line);
            while (true) {
                const auto comma = rest.find(',');
                const std::string_view field = rest.substr(0, comma);
                double v = 0.0;
                const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
                if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
                    fail("malformed number '" + std::string(field) + "'");
                }
                values.push_back(v);
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
            if (values.size() != width_) {
                fail("expected " + std::to_string(width_) + " values, found " + std::to_string(values.size()));
            }
            return true;
        }
        return false;
    }

    std::size_t line() const { return line_no_; }
    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(path_ + ":" + std::to_string(line_no_) + ": " + what);
    }

private:
    static void strip(std::string& s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    }

    std::string path_;
    std::ifstream in_;
    std::size_t width_;
    std::size_t line_no_ = 0;
};

/// Quaternion (w, x, y, z) with w >= 0 of a body-to-NED rotation.
inline Eigen::Vector4d to_quaternion(const Mat3& C) {
    Eigen::Quaterniond q(C);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return {q.w(), q.x(), q.y(), q.z()};
}

inline Mat3 from_quaternion(double w, double x, double y, double z) {
    Eigen::Quaterniond q(w, x, y, z);
    if (!(q.norm() > 0.0)) throw FormatError("zero quaternion");
    return q.normalized().toRotationMatrix();
}

inline void check_time(Reader& r, double t, double& last, bool& have) {
    if (!std::isfinite(t)) r.fail("non-finite time");
    if (have && !(t > last)) r.fail("time not strictly increasing");
    last = t;
    have = true;
}

inline void write_imu(const std::string& path, std::span<const ImuSample> imu) {
    Writer w(path, kImuHeader);
    for (const auto& s : imu) {
        const std::array<double, 7> v{s.t, s.f_b.x(), s.f_b.y(), s.f_b.z(), s.w_b.x(), s.w_b.y(), s.w_b.z()};
        w.row(v);
    }
}

inline std::vector<ImuSample> read_imu(const std::string& path) {
    Reader r(path, kImuHeader, 7);
    std::vector<ImuSample> out;
    std::vector<double> v;
    double last = 0.0;
    bool have = false;
    while (r.next(v)) {
        check_time(r, v[0], last, have);
        out.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
    }
    return out;
}

inline void write_gnss(const std::string& path, std::span<const GnssFix> gnss) {
    Writer w(path, kGnssHeader);
    for (const auto& f : gnss) {
        const std::array<double, 7> v{f.t, f.pos.lat, f.pos.lon, f.pos.alt, f.r_diag.x(), f.r_diag.y(), f.r_diag.z()};
        w.row(v);
    }
}

inline std::vector<GnssFix> read_gnss(const std::string& path) {
    Reader r(path, kGnssHeader, 7);
    std::vector<GnssFix> out;
    std::vector<double> v;
    double last = 0.0;
    bool have = false;
    while (r.next(v)) {
        check_time(r, v[0], last, have);
        if (!(std::abs(v[1]) <= std::numbers::pi / 2.0)) r.fail("latitude out of range");
        if (!(v[4] > 0.0 && v[5] > 0.0 && v[6] > 0.0)) r.fail("variances must be positive");
        GnssFix f;
        f.t = v[0];
        f.pos = {v[1], v[2], v[3]};
        f.r_diag = Vec3(v[4], v[5], v[6]);
        out.push_back(f);
    }
    return out;
}

inline std::array<double, 11> state_columns(double t, const NominalState& s) {
    const Eigen::Vector4d q = to_quaternion(s.att);
    return {t, s.pos.lat, s.pos.lon, s.pos.alt, s.vel_ned.x(), s.vel_ned.y(), s.vel_ned.z(), q[0], q[1], q[2], q[3]};
}

inline void write_truth(const std::string& path, std::span<const TruthSample> truth) {
    Writer w(path, kTruthHeader);
    for (const auto& s : truth) w.row(state_columns(s.t, s.state));
}

inline std::vector<TruthSample> read_truth(const std::string& path) {
    Reader r(path, kTruthHeader, 11);
    std::vector<TruthSample> out;
    std::vector<double> v;
    double last = 0.0;
    bool have = false;
    while (r.next(v)) {
        check_time(r, v[0], last, have);
        TruthSample s;
        s.t = v[0];
        s.state.pos = {v[1], v[2], v[3]};
        s.state.vel_ned = Vec3(v[4], v[5], v[6]);
        try {
            s.state.att = from_quaternion(v[7], v[8], v[9], v[10]);
        } catch (const FormatError&) {
            r.fail("zero quaternion");
        }
        out.push_back(s);
    }
    return out;
}

/// Smoothed or filtered estimates with the diagonal of their error covariance.
inline void write_estimates(const std::string& path, std::span<const SmoothedEpoch> est) {
    Writer w(path, estimate_header());
    std::vector<double> v(26);
    for (const auto& e : est) {
        const auto s = state_columns(e.t, e.x_s);
        std::copy(s.begin(), s.end(), v.begin());
        for (int i = 0; i < 15; ++i) v[11 + static_cast<std::size_t>(i)] = e.P_s(i, i);
        w.row(v);
    }
}

inline void write_correction_records(const std::string& path, std::span<const CorrectionRecord> records) {
    Writer w(path, record_header());
    std::vector<double> v(kRecordWidth);
    for (const auto& r : records) {
        v[0] = r.t;
        std::copy(r.D_f.data(), r.D_f.data() + 225, v.begin() + 1);
        std::copy(r.D_b.data(), r.D_b.data() + 225, v.begin() + 226);
        std::copy(r.c.data(), r.c.data() + 15, v.begin() + 451);
        w.row(v);
    }
}

inline std::vector<CorrectionRecord> read_correction_records(const std::string& path) {
    Reader r(path, record_header(), kRecordWidth);
    std::vector<CorrectionRecord> out;
    std::vector<double> v;
    while (r.next(v)) {
        CorrectionRecord rec;
        rec.t = v[0];
        std::copy(v.begin() + 1, v.begin() + 226, rec.D_f.data());
        std::copy(v.begin() + 226, v.begin() + 451, rec.D_b.data());
        std::copy(v.begin() + 451, v.end(), rec.c.data());
        out.push_back(rec);
    }
    return out;
}

/// One 480-value network input row per epoch, prefixed with its time.
inline void write_net_inputs(const std::string& path, const FilterTrace& fwd, const std::vector<BackwardInfo>& bwd) {
    check_aligned(fwd, bwd);
    Writer w(path, net_input_header());
    std::vector<double> v(1 + kNetInputSize);
    for (std::size_t k = 0; k < fwd.size(); ++k) {
        const NetInputRow u = net_input_row(fwd, bwd, k);
        v[0] = fwd[k].t;
        std::copy(u.data(), u.data() + kNetInputSize, v.begin() + 1);
        w.row(v);
    }
}

}  // namespace blends::csv
