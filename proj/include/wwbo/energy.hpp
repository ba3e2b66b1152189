#pragma once

#include "wwbo/wavetank.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace wwbo {

// Conserved quantities of the nonlinear flow, evaluated by spectral
// quadrature on the sample grid. Both series terminate: the energy has an
// exactly quartic top term, the momentum an exactly cubic one. The mean of W
// is restored before sampling; the Q mean is gauge and never enters.
double hamiltonian(const WWState& s, const PhysParams& p);
double momentum(const WWState& s, const PhysParams& p);

// quadratic invariants of the linearization around rest, for any pair of
// fields in the energy space
double e0_pair(const SpectralField& w, const SpectralField& q, const PhysParams& p);
double p0_pair(const SpectralField& w, const SpectralField& q, const PhysParams& p);

// sup norms of a field split into sharp dyadic shells; shell j holds mode
// magnitudes in (2^{j-1}, 2^j], shell 0 the first mode
std::vector<double> dyadic_block_sups(const SpectralField& f);

// Pointwise control norms of a background. All inf norms are grid sups; the
// two BMO seminorms are replaced by their sup-norm upper bounds, and the
// L^inf cap B^0_{inf,2} entry is scored as the largest shell sup plus the l2
// sum of shell sups. Surrogate choices are fixed here and nowhere else.
struct ControlNorms {
    double A = 0.0;
    double B = 0.0;
    double Amhalf = 0.0; // half a derivative below A
    double Am1 = 0.0;    // a full derivative below A
    double Abar = 0.0;   // A + c Amhalf + c^2 Am1
    double Bbar = 0.0;   // B + c A + c^2 Amhalf
};
ControlNorms control_norms(const DiffState& d, const PhysParams& p);

// nearly cubic energy of a linearized pair over a background; requires the
// background fields filled by diff_aux
double e_lin3(const LinState& l, const DiffState& d, const PhysParams& p);

// the five cubic quadratures of the refined growth bound at differentiation
// order n, with velocity factors in their reduced form R
std::array<double, 5> cubic_components(const DiffState& d, const WWState& s,
                                       const PhysParams& p, int n);

// One row of scalar diagnostics for a state. Elin3 is meaningful only when a
// linearized pair was supplied and is NaN otherwise. E0 scores the
// differentiated pair, the quantity the growth audits track.
struct EnergyReport {
    double t = 0.0;
    double E = 0.0;
    double P = 0.0;
    double E0 = 0.0;
    double Elin3 = 0.0;
    std::array<double, 5> I{};
    ControlNorms cn;
    double taylor_min = 0.0;   // min over the grid of g + a
    double jacobian_min = 0.0; // min over the grid of |1 + W_alpha|
    double tail_fraction = 0.0; // spectral mass of W_alpha above (2/3) kmax

    std::map<std::string, double> as_map() const;
    static std::string csv_header();
    std::string csv_row() const;
};

EnergyReport energy_report(const WWState& s, const PhysParams& p,
                           const LinState* lin = nullptr, int n = 1);

// Fits the measured growth of the differentiated pair's homogeneous energy
// against the refined bound's right side evaluated from control norms along
// a checkpointed trajectory. The fit is through the origin; the max ratio is
// the worst single checkpoint.
struct GrowthAudit {
    double constant_fit = 0.0;
    double constant_max = 0.0;
    double growth_ratio = 1.0; // max over time of e(t)/e(0)
    double max_rate = 0.0;     // largest |de/dt| seen
    int samples = 0;
};
GrowthAudit refined_estimate_audit(const std::vector<WWState>& trajectory,
                                   const PhysParams& p, int n);

} // namespace wwbo
