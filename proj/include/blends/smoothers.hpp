#pragma once

#include <vector>

#include "blends/backward_info.hpp"
#include "blends/errors.hpp"
#include "blends/forward_ekf.hpp"
#include "blends/linalg.hpp"
#include "blends/types.hpp"

namespace blends {

struct SmoothedEpoch {
    double t = 0.0;
    NominalState x_s;
    Vec15 dx_s = Vec15::Zero();
    Mat15 P_s = Mat15::Identity();
};

struct FusedEstimate {
    Vec15 dx = Vec15::Zero();
    Mat15 P = Mat15::Identity();
};

/// Adds backward information (info_b = L Lᵀ, s_b) to a forward estimate (dx_f, P_f).
///
/// P_s = P_f - P_f L (I + Lᵀ P_f L)⁻¹ Lᵀ P_f is the Woodbury form of (P_f⁻¹ + info_b)⁻¹ and
/// dx_s = P_s (P_f⁻¹ dx_f + s_b). A zero factor returns the forward estimate exactly.
inline FusedEstimate fuse_information(const Vec15& dx_f, const Mat15& P_f, const Mat15& L, const Vec15& s_b) {
    const Mat15 PL = P_f * L;
    const Mat15 C = Mat15::Identity() + L.transpose() * PL;
    Eigen::LLT<Mat15> llt(0.5 * (C + C.transpose()));
    if (llt.info() != Eigen::Success) throw NumericalError("fuse_information: singular combined information");
    const Mat15 W = llt.matrixL().solve(PL.transpose()).transpose();
    FusedEstimate out;
    out.P = P_f - W * W.transpose();
    out.P = symmetric_part<15>(out.P);
    const Vec15 x_f = dx_f - PL * llt.solve(L.transpose() * dx_f);
    out.dx = x_f + out.P * s_b;
    return out;
}

/// Two-filter fusion with the backward filter in information form.
inline FusedEstimate tfs_fuse_epoch(const Vec15& dx_f, const Mat15& P_f, const BackwardInfo& b) {
    return fuse_information(dx_f, P_f, psd_factor<15>(b.info), b.s);
}

/// Two-filter fusion in additive information form: P_s = (P_f⁻¹ + P_b⁻¹)⁻¹, dx_s = P_s(P_f⁻¹dx_f + P_b⁻¹dx_b).
inline FusedEstimate tfs_fuse_covariance_form(const Vec15& dx_f, const Mat15& P_f, const Vec15& dx_b,
                                              const Mat15& P_b) {
    const Mat15 If = spd_inverse<15>(P_f);
    const Mat15 Ib = spd_inverse<15>(P_b);
    FusedEstimate out;
    out.P = spd_inverse<15>(Mat15(If + Ib));
    out.dx = out.P * (If * dx_f + Ib * dx_b);
    return out;
}

struct OptimalGains {
    Mat15 K_f;
    Mat15 K_b;
};

/// K_f = P_b (P_f + P_b)⁻¹, K_b = I - K_f.
inline OptimalGains optimal_gains(const Mat15& P_f, const Mat15& P_b) {
    const Mat15 S = P_f + P_b;
    const Mat15 K_f = spd_solve<15, 15>(S, P_b).transpose();
    return {K_f, Mat15::Identity() - K_f};
}

/// P_s = K_f P_f K_fᵀ + K_b P_b K_bᵀ.
inline Mat15 gain_form_covariance(const Mat15& P_f, const Mat15& P_b, const OptimalGains& g) {
    const Mat15 P = g.K_f * P_f * g.K_f.transpose() + g.K_b * P_b * g.K_b.transpose();
    return 0.5 * (P + P.transpose());
}

/// Full-state fusion x_s = P_s (P_f⁻¹ x_f + P_b⁻¹ x_b) over generic state vectors.
///
/// Evaluated in extended precision: information-weighting absolute states amplifies rounding by |x| / sigma.
template <int N>
Eigen::Matrix<double, N, 1> tfs_full_state_fuse(const Eigen::Matrix<double, N, 1>& x_f,
                                                const Eigen::Matrix<double, N, 1>& x_b,
                                                const Eigen::Matrix<double, N, N>& P_f,
                                                const Eigen::Matrix<double, N, N>& P_b) {
    using MatL = Eigen::Matrix<long double, N, N>;
    using VecL = Eigen::Matrix<long double, N, 1>;
    const auto inverse = [](const MatL& P) {
        Eigen::LLT<MatL> llt(P);
        if (llt.info() != Eigen::Success) throw NumericalError("tfs_full_state_fuse: covariance not positive definite");
        return MatL(llt.solve(MatL::Identity()));
    };
    const MatL If = inverse(P_f.template cast<long double>());
    const MatL Ib = inverse(P_b.template cast<long double>());
    Eigen::LLT<MatL> llt(If + Ib);
    if (llt.info() != Eigen::Success) throw NumericalError("tfs_full_state_fuse: singular combined information");
    const VecL rhs = If * x_f.template cast<long double>() + Ib * x_b.template cast<long double>();
    return llt.solve(rhs).template cast<double>();
}

/// Error-state fusion about a shared nominal, mapped back to a full state: x_s = x_nom - dx_s.
template <int N>
Eigen::Matrix<double, N, 1> tfs_error_state_fuse(const Eigen::Matrix<double, N, 1>& x_nom,
                                                 const Eigen::Matrix<double, N, 1>& dx_f,
                                                 const Eigen::Matrix<double, N, 1>& dx_b,
                                                 const Eigen::Matrix<double, N, N>& P_f,
                                                 const Eigen::Matrix<double, N, N>& P_b) {
    return x_nom - tfs_full_state_fuse<N>(dx_f, dx_b, P_f, P_b);
}

inline void check_aligned(const FilterTrace& fwd, const std::vector<BackwardInfo>& bwd) {
    if (fwd.size() != bwd.size()) throw ArgumentError("smoother: forward and backward traces are not aligned");
    if (fwd.size() == 0) throw ArgumentError("smoother: empty trace");
}

/// Two-filter smoother. Epochs without backward position information keep the forward estimate.
inline std::vector<SmoothedEpoch> tfs_smooth(const FilterTrace& fwd, const std::vector<BackwardInfo>& bwd) {
    check_aligned(fwd, bwd);
    std::vector<SmoothedEpoch> out(fwd.size());
    for (std::size_t k = 0; k < fwd.size(); ++k) {
        const ForwardEpoch& e = fwd[k];
        SmoothedEpoch& s = out[k];
        s.t = e.t;
        if (backward_available(bwd[k])) {
            const FusedEstimate f = tfs_fuse_epoch(Vec15::Zero(), e.P_plus, bwd[k]);
            s.dx_s = f.dx;
            s.P_s = f.P;
        } else {
            s.P_s = e.P_plus;
        }
        s.x_s = apply_correction(e.nominal, s.dx_s);
    }
    return out;
}

/// Rauch-Tung-Striebel smoother over the stored forward pass.
///
/// Runs in the frame of each epoch's propagated nominal, where dx_minus, dx_plus live.
inline std::vector<SmoothedEpoch> rtss_smooth(const FilterTrace& fwd) {
    if (fwd.size() == 0) throw ArgumentError("rtss_smooth: empty trace");
    const std::size_t n = fwd.size();
    std::vector<SmoothedEpoch> out(n);
    out[n - 1].t = fwd[n - 1].t;
    out[n - 1].dx_s = fwd[n - 1].dx_plus;
    out[n - 1].P_s = fwd[n - 1].P_plus;
    out[n - 1].x_s = fwd[n - 1].nominal;
    for (std::size_t k = n - 1; k-- > 0;) {
        const ForwardEpoch& e = fwd[k];
        const ForwardEpoch& next = fwd[k + 1];
        const Mat15 K = spd_solve<15, 15>(next.P_minus, Mat15(next.Phi * e.P_plus)).transpose();
        SmoothedEpoch& s = out[k];
        s.t = e.t;
        s.dx_s = e.dx_plus + K * (out[k + 1].dx_s - next.dx_minus);
        s.P_s = symmetrize_and_condition<15>(e.P_plus + K * (out[k + 1].P_s - next.P_minus) * K.transpose());
        s.x_s = apply_correction(e.nominal_prior, s.dx_s);
    }
    return out;
}

}  // namespace blends
