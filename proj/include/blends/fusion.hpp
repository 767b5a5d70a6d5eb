#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "blends/backward_info.hpp"
#include "blends/errors.hpp"
#include "blends/forward_ekf.hpp"
#include "blends/geodesy.hpp"
#include "blends/linalg.hpp"
#include "blends/smoothers.hpp"
#include "blends/types.hpp"

namespace blends {

inline constexpr int kNetInputSize = 480;
using NetInputRow = Eigen::Matrix<double, kNetInputSize, 1>;

/// u_k = [dx_f, dx_b, vec(P_f), vec(P_b)] with column-major vec.
inline NetInputRow make_net_input(const Vec15& dx_f, const Mat15& P_f, const Vec15& dx_b, const Mat15& P_b) {
    NetInputRow u;
    u.segment<15>(0) = dx_f;
    u.segment<15>(15) = dx_b;
    u.segment<225>(30) = P_f.reshaped();
    u.segment<225>(255) = P_b.reshaped();
    return u;
}

/// Input row of epoch k. The backward half is zero while the backward pass has no position information.
inline NetInputRow net_input_row(const FilterTrace& fwd, const std::vector<BackwardInfo>& bwd, std::size_t k) {
    const ForwardEpoch& e = fwd[k];
    if (backward_available(bwd[k])) {
        const BackwardEstimate b = recover(bwd[k]);
        return make_net_input(e.dx_plus, e.P_plus, b.dx, b.P);
    }
    return make_net_input(e.dx_plus, e.P_plus, Vec15::Zero(), Mat15::Zero());
}

/// rho(e) = clamp(e / e_w, 0, 1)^p.
inline double ramp(const BoundSchedule& s, double epoch) {
    return std::pow(std::clamp(epoch / s.warmup_epochs, 0.0, 1.0), s.power);
}

/// m(e) = (1 - rho) m_wide + rho m_base.
inline Vec15 bound_vector(const BoundSchedule& s, double epoch) {
    const double rho = ramp(s, epoch);
    return (1.0 - rho) * s.m_wide + rho * s.m_base;
}

/// c = tanh(c_hat) ⊙ m(e).
inline Vec15 bounded_correction(const Vec15& c_hat, const BoundSchedule& s, double epoch) {
    s.validate();
    return c_hat.array().tanh().matrix().cwiseProduct(bound_vector(s, epoch));
}

/// D = I + alpha tanh(D_hat).
inline Mat15 near_identity(const Mat15& D_hat, double alpha = 1e-8) {
    return Mat15::Identity() + alpha * D_hat.array().tanh().matrix();
}

inline bool full_rank(const Mat15& D) { return D.allFinite() && std::abs(D.determinant()) > 1e-30; }

struct ModifiedCovariances {
    Mat15 P_f;
    Mat15 P_b;
};

/// Congruence P̃ = D P Dᵀ for both filters.
inline ModifiedCovariances modify_covariances(const Mat15& P_f, const Mat15& P_b, const CorrectionRecord& rec) {
    if (!full_rank(rec.D_f) || !full_rank(rec.D_b)) throw ArgumentError("modify_covariances: rank-deficient D");
    return {symmetrize_and_condition<15>(rec.D_f * P_f * rec.D_f.transpose()),
            symmetrize_and_condition<15>(rec.D_b * P_b * rec.D_b.transpose())};
}

/// Fused estimate with modified covariances and an additive correction, both filters in covariance form.
///
/// dx = P̃_s (P̃_f⁻¹ dx_f + P̃_b⁻¹ dx_b) + c and P̃_s gains c cᵀ.
inline FusedEstimate blends_fuse_epoch(const Vec15& dx_f, const Mat15& Pt_f, const Vec15& dx_b, const Mat15& Pt_b,
                                       const Vec15& c) {
    FusedEstimate f = tfs_fuse_covariance_form(dx_f, Pt_f, dx_b, Pt_b);
    f.dx += c;
    f.P += c * c.transpose();
    return f;
}

/// Gain-form BLENDS covariance K̃_f P̃_f K̃_fᵀ + K̃_b P̃_b K̃_bᵀ + c cᵀ.
inline Mat15 blends_covariance_gain_form(const Mat15& Pt_f, const Mat15& Pt_b, const Vec15& c) {
    return gain_form_covariance(Pt_f, Pt_b, optimal_gains(Pt_f, Pt_b)) + c * c.transpose();
}

/// BLENDS fusion at one epoch with the backward filter in information form.
///
/// With D_f = D_b = I and c = 0 this performs exactly the same arithmetic as tfs_fuse_epoch.
inline FusedEstimate blends_fuse_epoch(const Vec15& dx_f, const Mat15& P_f, const BackwardInfo& b,
                                       const CorrectionRecord& rec) {
    if (!full_rank(rec.D_f) || !full_rank(rec.D_b)) throw ArgumentError("blends_fuse_epoch: rank-deficient D");
    const Mat15 Pt_f = symmetrize_and_condition<15>(rec.D_f * P_f * rec.D_f.transpose());
    FusedEstimate f;
    if (backward_available(b)) {
        const Mat15 Db_inv = rec.D_b.inverse();
        const Mat15 L = Db_inv.transpose() * psd_factor<15>(b.info);
        Vec15 s = b.s;
        const Mat15 E = Db_inv - Mat15::Identity();
        if (!E.isZero(0.0)) s += b.info * (E * recover(b).dx);
        f = fuse_information(dx_f, Pt_f, L, Db_inv.transpose() * s);
    } else {
        f = fuse_information(dx_f, Pt_f, Mat15::Zero(), Vec15::Zero());
    }
    f.dx += rec.c;
    f.P += rec.c * rec.c.transpose();
    return f;
}

/// Source of per-epoch correction records for one window of epochs.
class CorrectionProvider {
public:
    virtual ~CorrectionProvider() = default;
    virtual std::vector<CorrectionRecord> corrections(std::size_t first_epoch, std::span<const double> times,
                                                      std::span<const NetInputRow> inputs) = 0;
    /// Whether corrections() reads the input rows; lets callers skip assembling them.
    virtual bool needs_inputs() const { return false; }
};

/// D_f = D_b = I and c = 0 at every epoch.
class ZeroProvider final : public CorrectionProvider {
public:
    std::vector<CorrectionRecord> corrections(std::size_t, std::span<const double> times,
                                              std::span<const NetInputRow>) override {
        std::vector<CorrectionRecord> out(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) out[i].t = times[i];
        return out;
    }
};

/// Serves records loaded up front, one per epoch in order.
class FileProvider final : public CorrectionProvider {
public:
    explicit FileProvider(std::vector<CorrectionRecord> records) : records_(std::move(records)) {}

    std::vector<CorrectionRecord> corrections(std::size_t first_epoch, std::span<const double> times,
                                              std::span<const NetInputRow>) override {
        if (first_epoch + times.size() > records_.size()) {
            throw ProviderError(first_epoch, "correction file has " + std::to_string(records_.size()) +
                                                 " records, trajectory needs more");
        }
        return {records_.begin() + static_cast<long>(first_epoch),
                records_.begin() + static_cast<long>(first_epoch + times.size())};
    }

private:
    std::vector<CorrectionRecord> records_;
};

/// Emits a fixed correction in error-state units, passed through the bounded tanh output.
class OracleProvider final : public CorrectionProvider {
public:
    OracleProvider(const Vec15& c_target, const BoundSchedule& schedule, double inference_epoch)
        : schedule_(schedule), epoch_(inference_epoch) {
        schedule_.validate();
        const Vec15 m = bound_vector(schedule_, epoch_);
        constexpr double kEdge = 1.0 - 1e-15;
        c_hat_ = c_target.cwiseQuotient(m).cwiseMax(-kEdge).cwiseMin(kEdge).array().atanh().matrix();
    }

    /// Correction that removes a constant GNSS bias (meters, NED) near `ref`.
    static Vec15 gnss_bias_correction(const Vec3& bias_ned, const Geodetic& ref) {
        Vec15 c = Vec15::Zero();
        c.segment<3>(slot::kPos) = geo_rate_scale(ref).cwiseProduct(bias_ned);
        return c;
    }

    std::vector<CorrectionRecord> corrections(std::size_t, std::span<const double> times,
                                              std::span<const NetInputRow>) override {
        const Vec15 c = bounded_correction(c_hat_, schedule_, epoch_);
        std::vector<CorrectionRecord> out(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            out[i].t = times[i];
            out[i].c = c;
        }
        return out;
    }

private:
    BoundSchedule schedule_;
    double epoch_;
    Vec15 c_hat_;
};

struct BlendsConfig {
    BoundSchedule schedule = BoundSchedule::mobile_robot();
    /// Training epoch whose bounds are used at inference.
    double inference_epoch = 1000.0;
    std::size_t window = 150;
};

inline void validate_record(const CorrectionRecord& r, double t, const Vec15& m, std::size_t epoch) {
    if (!(std::abs(r.t - t) <= 1e-6 * std::max(1.0, std::abs(t)))) {
        throw ProviderError(epoch, "record time " + std::to_string(r.t) + " does not match epoch time " +
                                       std::to_string(t));
    }
    if (!r.c.allFinite() || (r.c.cwiseAbs().array() > m.array()).any()) {
        throw ProviderError(epoch, "correction exceeds its bound");
    }
    if (!full_rank(r.D_f) || !full_rank(r.D_b)) throw ProviderError(epoch, "rank-deficient covariance modification");
}

/// BLENDS inference over a full trajectory, requesting records window by window.
inline std::vector<SmoothedEpoch> run_blends(const FilterTrace& fwd, const std::vector<BackwardInfo>& bwd,
                                             CorrectionProvider& provider, const BlendsConfig& cfg) {
    check_aligned(fwd, bwd);
    cfg.schedule.validate();
    if (cfg.window == 0) throw ArgumentError("run_blends: window must be positive");
    const Vec15 m = bound_vector(cfg.schedule, cfg.inference_epoch);
    std::vector<SmoothedEpoch> out(fwd.size());
    std::vector<double> times;
    std::vector<NetInputRow> rows;
    for (std::size_t first = 0; first < fwd.size(); first += cfg.window) {
        const std::size_t n = std::min(cfg.window, fwd.size() - first);
        times.resize(n);
        rows.clear();
        for (std::size_t i = 0; i < n; ++i) times[i] = fwd[first + i].t;
        if (provider.needs_inputs()) {
            rows.reserve(n);
            for (std::size_t i = 0; i < n; ++i) rows.push_back(net_input_row(fwd, bwd, first + i));
        }
        std::vector<CorrectionRecord> recs;
        try {
            recs = provider.corrections(first, times, rows);
        } catch (const ProviderError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ProviderError(first, ex.what());
        }
        if (recs.size() != n) {
            throw ProviderError(first, "provider returned " + std::to_string(recs.size()) + " records for " +
                                           std::to_string(n) + " epochs");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = first + i;
            validate_record(recs[i], times[i], m, k);
            const ForwardEpoch& e = fwd[k];
            FusedEstimate f;
            try {
                f = blends_fuse_epoch(Vec15::Zero(), e.P_plus, bwd[k], recs[i]);
            } catch (const Error& ex) {
                throw ProviderError(k, ex.what());
            }
            SmoothedEpoch& s = out[k];
            s.t = e.t;
            s.dx_s = f.dx;
            s.P_s = f.P;
            s.x_s = apply_correction(e.nominal, s.dx_s);
        }
    }
    return out;
}

}  // namespace blends
