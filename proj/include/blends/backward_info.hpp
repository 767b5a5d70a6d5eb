#pragma once

#include <cmath>
#include <vector>

#include "blends/errors.hpp"
#include "blends/forward_ekf.hpp"
#include "blends/linalg.hpp"
#include "blends/types.hpp"

namespace blends {

/// Zero information: the backward pass starts with no prior.
inline BackwardInfo init_backward() { return {}; }

/// Information-form measurement update: info += Hᵀ R⁻¹ H, s += Hᵀ R⁻¹ dz.
template <int M>
BackwardInfo backward_update(const BackwardInfo& b, const Eigen::Matrix<double, M, 15>& H,
                             const Eigen::Matrix<double, M, 1>& dz, const Eigen::Matrix<double, M, M>& R) {
    Eigen::LLT<Eigen::Matrix<double, M, M>> llt(0.5 * (R + R.transpose()));
    if (llt.info() != Eigen::Success || !R.allFinite()) throw NumericalError("backward_update: singular R");
    const Eigen::Matrix<double, M, 15> RiH = llt.solve(H);
    BackwardInfo out = b;
    out.info += H.transpose() * RiH;
    out.info = symmetric_part<15>(out.info);
    out.s += RiH.transpose() * dz;
    return out;
}

/// Moves the information one transition back: P_{k-1} = Φ⁻¹ (P_k + Qd) Φ⁻ᵀ.
///
/// Qd is supplied as a factor N with Qd = N Nᵀ; the combination is done with the
/// Woodbury identity so zero information stays exactly zero.
inline BackwardInfo backward_propagate(const BackwardInfo& b, const Mat15& Phi, const Mat15x12& noise_factor) {
    if (!Phi.allFinite() || !(std::abs(Phi.determinant()) > 1e-30)) {
        throw NumericalError("backward_propagate: singular transition matrix");
    }
    const Mat15x12 IN = b.info * noise_factor;
    const Mat12 C = Mat12::Identity() + noise_factor.transpose() * IN;
    Eigen::LLT<Mat12> llt(0.5 * (C + C.transpose()));
    if (llt.info() != Eigen::Success) throw NumericalError("backward_propagate: process-noise combination failed");
    const Mat15 M = b.info - IN * llt.solve(IN.transpose());
    const Vec15 m = b.s - IN * llt.solve(noise_factor.transpose() * b.s);
    BackwardInfo out;
    out.info = Phi.transpose() * M * Phi;
    out.info = symmetric_part<15>(out.info);
    out.s = Phi.transpose() * m;
    return out;
}

inline BackwardInfo backward_propagate(const BackwardInfo& b, const Mat15& Phi, const Mat15& Qd) {
    return backward_propagate(b, Phi, Mat15x12(psd_factor<15>(Qd).leftCols<12>()));
}

/// Re-expresses information held relative to x_nom as relative to x_nom + shift.
inline BackwardInfo shift_reference(const BackwardInfo& b, const Vec15& shift) {
    BackwardInfo out = b;
    out.s = b.s + b.info * shift;
    return out;
}

/// True once the position block of the information matrix is positive definite.
inline bool backward_available(const BackwardInfo& b) {
    const Mat3 pp = b.info.block<3, 3>(slot::kPos, slot::kPos);
    if (!pp.allFinite()) return false;
    Eigen::LLT<Mat3> llt(pp);
    return llt.info() == Eigen::Success;
}

struct BackwardEstimate {
    Vec15 dx = Vec15::Zero();
    Mat15 P = Mat15::Zero();
};

/// Recovers (dx_b, P_b) from information form with a diagonally equilibrated solve.
///
/// Directions without information are regularized by 1e-12 in equilibrated units, which
/// leaves them with a very large but finite variance.
inline BackwardEstimate recover(const BackwardInfo& b) {
    if (!backward_available(b)) throw NumericalError("recover: backward information unavailable");
    Vec15 d;
    for (int i = 0; i < 15; ++i) {
        const double a = b.info(i, i);
        d[i] = a > 0.0 ? std::sqrt(a) : 1.0;
    }
    const Vec15 dinv = d.cwiseInverse();
    Mat15 As = dinv.asDiagonal() * b.info * dinv.asDiagonal();
    As = symmetric_part<15>(As);
    Mat15 inv;
    Vec15 y;
    Eigen::LLT<Mat15> llt(As);
    if (llt.info() == Eigen::Success) {
        inv = llt.solve(Mat15::Identity());
        y = llt.solve(dinv.asDiagonal() * b.s);
    } else {
        As.diagonal().array() += 1e-12;
        Eigen::LDLT<Mat15> ldlt(As);
        if (ldlt.info() != Eigen::Success) throw NumericalError("recover: information solve failed");
        inv = ldlt.solve(Mat15::Identity());
        y = ldlt.solve(dinv.asDiagonal() * b.s);
    }
    BackwardEstimate e;
    e.P = dinv.asDiagonal() * inv * dinv.asDiagonal();
    e.P = symmetric_part<15>(e.P);
    e.dx = dinv.asDiagonal() * y;
    return e;
}

/// The only forward quantities the backward pass reads, per epoch.
struct BackwardStep {
    Mat15 Phi = Mat15::Identity();           ///< transition from the previous epoch into this one
    Mat15x12 noise_factor = Mat15x12::Zero();  ///< Qd = N Nᵀ for the same transition
    Vec15 reference_shift = Vec15::Zero();   ///< reset applied at this epoch (propagated nominal minus stored nominal)
    bool updated = false;
    Vec3 dz = Vec3::Zero();
    Mat3 R = Mat3::Identity();
};

inline std::vector<BackwardStep> backward_inputs(const FilterTrace& trace) {
    std::vector<BackwardStep> steps(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const ForwardEpoch& e = trace[k];
        steps[k] = {e.Phi, e.noise_factor, e.dx_plus, e.updated, e.dz, e.R};
    }
    return steps;
}

/// Backward information filter over all epochs.
///
/// Element k is the backward prior at epoch k: it carries the measurements after k only and is
/// expressed relative to the stored (post-reset) forward nominal of epoch k.
inline std::vector<BackwardInfo> run_backward(const std::vector<BackwardStep>& steps) {
    if (steps.empty()) throw ArgumentError("run_backward: no epochs");
    const Mat3x15 H = position_observation();
    std::vector<BackwardInfo> out(steps.size());
    BackwardInfo b = init_backward();
    for (std::size_t i = steps.size(); i-- > 0;) {
        const BackwardStep& st = steps[i];
        out[i] = b;
        b = shift_reference(b, st.reference_shift);
        if (st.updated) b = backward_update<3>(b, H, st.dz, st.R);
        if (i > 0) b = backward_propagate(b, st.Phi, st.noise_factor);
    }
    return out;
}

inline std::vector<BackwardInfo> run_backward(const FilterTrace& trace) { return run_backward(backward_inputs(trace)); }

}  // namespace blends
