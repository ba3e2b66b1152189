#pragma once

#include "wwbo/bo.hpp"
#include "wwbo/wavetank.hpp"

#include <string>
#include <utility>
#include <vector>

namespace wwbo {

// Cubic Taylor heads of the three composite nonlinearities, expanded in the
// oscillatory pair (W, Q) around the flat state. The tracked mean w0 is not
// part of the expansion; only the stored zero-mean fields enter.
struct CubicTruncations {
    SpectralField F3;
    SpectralField F13;
    SpectralField T13;
};

CubicTruncations cubic_truncations(const WWState& s);

// Quadratic sources of the evolution split as linear part plus source:
//   W_t + Q_a = G2 + (cubic and higher)
//   Q_t + icQ - igW = K2 + (cubic and higher)
std::pair<SpectralField, SpectralField> quadratic_sources(const WWState& s,
                                                          const PhysParams& p);

// Right- and left-moving components of the linearized flow. The split is
// per-mode: Y^{+/-} = (W - (c -/+ sqrt(c^2+4g|k|))/(2g) Q) / 2.
struct BranchPair {
    SpectralField Yplus;
    SpectralField Yminus;
};

BranchPair diagonalize(const WWState& s, const PhysParams& p);
// exact inverse of diagonalize; w0 of the result is zero
WWState undiagonalize(const BranchPair& bp, const PhysParams& p);

// slaving of the left-moving branch to the right-moving one; output is
// holomorphic and mean-free (single-mode inputs land entirely on the mean
// and come back as zero)
SpectralField y_minus_ansatz(const SpectralField& yplus);

// A candidate wave state assembled from a driving field, together with the
// residuals it leaves in the two evolution equations.
struct ApproxWW {
    WWState state;        // the assembled pair
    YEpsField source;     // driving field with its exact time derivative
    SpectralField gres;   // residual of the W equation, holomorphic zero-mean
    SpectralField kres;   // residual of the Q equation, holomorphic zero-mean
    double gnorm_h1 = 0.0;
    double knorm_hhalf = 0.0;
    double res_norm = 0.0;  // gnorm_h1 + knorm_hhalf
    double mean_rate = 0.0; // |mean W-velocity| the frozen mean ignores
    bool degenerate = false;
};

// assemble (W, Q) from the driving field by the fixed multiplier stencil plus
// one quadratic correction, then fill the residual slots
ApproxWW build_approx_ww(const YEpsField& y, const PhysParams& p);

// refresh gres/kres and their norms: the time derivative of the state is
// chain-ruled through the stored dY, the model velocity comes from the full
// right side. Degeneracy of the state is reported, not thrown.
ApproxWW residual_gk(ApproxWW a, const PhysParams& p);

// Dimensionless readiness ratios of an initial pair at scale eps.
struct PreparednessReport {
    double pair_ratio = 0.0;           // ||(W,Q)||_H / eps^{1/2}
    std::vector<double> deriv_ratios;  // ||d^j (W_a, R)||_H / eps^{j+3/2}
    double coupling_ratio = 0.0;       // ||W - (c/g) Q||_{Hdot 1/2} / eps^{3/2}
    double threshold = 0.0;
    bool well_prepared = false;
};

PreparednessReport well_preparedness(const WWState& s, const PhysParams& p,
                                     int m = 3, double threshold = 10.0);

// JSON records for run logs, keyed by run id
std::string residual_record_json(const ApproxWW& a, const std::string& run_id);
std::string preparedness_record_json(const PreparednessReport& r, const std::string& run_id);

} // namespace wwbo
