#pragma once

#include "wwbo/spectral.hpp"

#include <string>

namespace wwbo {

struct PhysParams {
    double g = 1.0;      // gravity
    double c = 1.0;      // vorticity, assumed positive
    double lambda = 1.0; // BO coupling, physically = c
    double eps = 0.1;    // scale
    double b = 1.0;      // truncation constant
    double T = 0.5;      // effective BO time
    double delta_floor = 0.1; // non-degeneracy / Taylor-sign monitor floor

    void validate() const;
};

struct BOState {
    SpectralField U; // real field
    double t = 0.0;
};

struct TruncatedBO {
    SpectralField Ut;   // lowpass(U, b/eps)
    SpectralField fres; // forcing the truncated field satisfies BO with
    double cutoff = 0.0;
    double t = 0.0;
};

// The rescaled, projected, velocity-shifted approximate BO solution on the
// water-wave grid, with its time derivative and the lifted forcing, all
// produced spectrally in one pass so residual audits need no differencing.
struct YEpsField {
    SpectralField Y;
    SpectralField dY;   // exact time derivative of Y
    SpectralField fres; // lifted forcing; equals the equation residual of Y
    double t = 0.0;
};

struct BORunReport {
    double mean_drift = 0.0; // absolute
    double l2_drift = 0.0;   // relative
    double hm_drift = 0.0;   // relative, m = 3
};

SpectralField bo_rhs(const BOState& s, const PhysParams& p);

// integrating-factor four-stage step: the dispersive multiplier is advanced by
// its exact exponential, the transport nonlinearity by the classical rule
BOState bo_step(const BOState& s, double dt, const PhysParams& p);

std::vector<BOState> bo_run(const BOState& s0, double t_final, const PhysParams& p,
                            const std::vector<double>& checkpoints, double dt = 0.02,
                            BORunReport* report = nullptr);

TruncatedBO truncate(const BOState& s, const PhysParams& p);

// Y(t,x) = -i P[eps * Ut(eps^2 t, eps x - (g/c) eps t)], realized spectrally on
// a grid of period L/eps. The state inside tb must already be at BO time eps^2 t.
YEpsField build_tilde_Y(const TruncatedBO& tb, const PhysParams& p, double t, const Grid& ww);

// residual of the velocity-shifted approximate BO equation, evaluated from the
// stored exact time derivative
SpectralField tilde_Y_residual(const YEpsField& y, const PhysParams& p);

// audit fallback: residual with dY replaced by a centered difference of two
// adjacent checkpoints; throws if the differencing is too coarse to trust
SpectralField tilde_Y_residual_fd(const YEpsField& ya, const YEpsField& yb, const PhysParams& p);

// deterministic initial data: a few O(1) low modes plus an algebraic spectral
// tail |u_j| ~ j^{-tail_power} so truncation errors stay measurable, normalized
// to unit H^m. tail_to < 0 extends the tail to just inside the dealias cutoff.
SpectralField bo_initial_data(const Grid& g, int m = 3, unsigned seed = 12345,
                              int low_modes = 3, double tail_power = 4.5, int tail_to = -1);

} // namespace wwbo
