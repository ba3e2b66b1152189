#pragma once

#include "wwbo/bo.hpp"
#include "wwbo/spectral.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace wwbo {

// Wave system state in holomorphic conformal coordinates. The stored fields
// carry the oscillatory part only: strictly negative spectrum, zero mean. The
// mean of the conformal map is tracked separately in w0 because the flow moves
// it, and freezing it to zero breaks energy bookkeeping well above roundoff.
// The mean of Q is pure gauge and pinned to zero.
struct WWState {
    SpectralField W; // interface parametrization
    SpectralField Q; // holomorphic velocity potential
    cd w0 = 0.0;
    double t = 0.0;

    SpectralField full_W() const; // W with the tracked mean restored
};

// Derived fields of the evolution equations. Divisions are pointwise in sample
// space; products and quotients are dealiased before any projection.
struct AuxFields {
    SpectralField Wa, Qa; // cached derivatives of the stored fields
    SpectralField J;      // |1+W_a|^2, real, bounded below by the floor check
    SpectralField F;
    SpectralField F1;
    SpectralField Fb; // F - i(c/2) F1
    SpectralField T1;
};

struct WWRhs {
    SpectralField dW, dQ;   // projected to negative spectrum, zero mean
    cd dw0 = 0.0;           // mean drift of W, fed to the tracked w0
    SpectralField dWu, dQu; // unprojected right sides, for conservation oracles
};

AuxFields ww_aux(const WWState& s, const PhysParams& p);
WWRhs ww_rhs(const WWState& s, const PhysParams& p);

// one four-stage step with the exact per-mode linear propagator as
// integrating factor; throws on CFL violation or non-finite output
WWState ww_step(const WWState& s, double dt, const PhysParams& p, bool filter = false);

struct WWRunOptions {
    double dt = 4e-3;
    bool filter = false; // exponential damping of the top 10% of modes
    // optional conserved-quantity monitors; the closed forms live upstream of
    // this module, so the caller installs them
    std::function<double(const WWState&)> energy_fn;
    std::function<double(const WWState&)> momentum_fn;
};

struct WWRunReport {
    double energy_drift = -1.0; // relative; -1 when no monitor was installed
    double momentum_drift = -1.0;
    double holo_drift = 0.0;  // strictly-positive-spectrum leakage of the rhs
    double min_jacobian = 0.0; // min |1+W_a| seen over the run
    double min_taylor = 0.0;   // min (g + au)/g seen over the run
    long steps = 0;
};

// checkpointed trajectory; lands exactly on each requested time. Initial data
// is clipped to the dealias band and re-projected once on entry. Per-step
// monitors enforce the non-degeneracy and Taylor-sign floors.
std::vector<WWState> ww_run(const WWState& s0, double t_final, const PhysParams& p,
                            const std::vector<double>& checkpoints,
                            const WWRunOptions& opt = {}, WWRunReport* report = nullptr);

// exact flow of the linearization around zero, mode by mode; w0 is constant
// and the generated Q mean is dropped as gauge
WWState linear_evolve(const WWState& s0, double t, const PhysParams& p);

struct OmegaBranches {
    double plus = 0.0;
    double minus = 0.0;
    double quad = 0.0; // long-wave quadratic approximation of the upper branch
};
// frequencies of the linearized system at wavenumber xi <= 0
OmegaBranches omega_branches(double xi, const PhysParams& p);

// Differentiated variables. The undifferentiated W (mean restored) rides along
// because the advection and frequency-shift displays use it directly.
struct DiffState {
    SpectralField W;
    SpectralField Wb; // W_alpha
    SpectralField R;  // Q_alpha / (1 + W_alpha)
    double t = 0.0;
    // filled by diff_aux
    SpectralField b, b1, bu; // advection speed, bu = b - i(c/2) b1, real
    SpectralField a, a1, au; // frequency shift, au = a + (c/2) a1, real
    SpectralField N;
    bool filled = false;
};

DiffState to_diff_vars(const WWState& s, const PhysParams& p);
DiffState diff_aux(DiffState d, const PhysParams& p);

// residual of the differentiated system given explicit time derivatives of
// the undifferentiated pair; vanishes to dealiasing accuracy when (dW, dQ)
// come from ww_rhs
std::pair<SpectralField, SpectralField>
diff_residual_from(const WWState& s, const SpectralField& dW, const SpectralField& dQ,
                   const PhysParams& p);
std::pair<SpectralField, SpectralField> diff_rhs_residual(const WWState& s,
                                                          const PhysParams& p);

struct LinState {
    SpectralField w;
    SpectralField r; // good unknown, r = q - R w
    double t = 0.0;
    cd w0 = 0.0;     // linearized counterpart of the tracked mean of W
};

struct LinRhs {
    SpectralField dw;
    SpectralField dr;
    cd dw0 = 0.0; // velocity of the linearized mean, mirrors WWRhs::dw0
};

// right side of the evolution linearized around a background state; tracks the
// zero mode of the perturbation alongside the mean-free pair, matching the
// (W, Q, w0) bookkeeping of the nonlinear flow
LinRhs lin_rhs(const LinState& l, const WWState& bg, const PhysParams& p);

// cubic-in-time interpolation of a stored trajectory; the exact linear phase
// is removed before interpolating, so checkpoint spacing only has to resolve
// the slow nonlinear modulation
WWState background_at(const std::vector<WWState>& trajectory, double t,
                      const PhysParams& p);

struct LinRunReport {
    std::vector<std::pair<double, double>> growth; // (t, ||(w,r)|| in L2 x Hdot1/2)
    double max_growth = 1.0;                       // relative to the initial norm
};

// linearized flow over a read-only background trajectory, same stepping rule
// as ww_run (the linear parts coincide)
LinState lin_run(const LinState& l0, const std::vector<WWState>& trajectory,
                 const PhysParams& p, double t_final, double dt,
                 LinRunReport* report = nullptr);

} // namespace wwbo
