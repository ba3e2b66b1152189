#include "wwbo/bridge.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wwbo {

namespace {

// pointwise composite -> field clipped to the dealias band
SpectralField band_field(const Grid& g, cvec samples) {
    return dealias(from_samples(g, std::move(samples)));
}

double root_disc(double k, const PhysParams& p) {
    return std::sqrt(p.c * p.c + 4.0 * p.g * std::abs(k));
}

} // namespace

CubicTruncations cubic_truncations(const WWState& s) {
    const Grid& g = *s.W.grid;
    const int n = g.n();
    SpectralField Wa = deriv(s.W);
    SpectralField Qa = deriv(s.Q);

    // Each slot is the Taylor head of the corresponding quotient; conjugation
    // placement follows the expansion of the defining expressions, and the
    // projection is kept exactly where the expansion leaves a mixed product.
    cvec qw(n), mix2(n), cub1(n), cub2(n), cub3(n);
    cvec w2(n), wcc(n), t2(n), t3(n);
    for (int i = 0; i < n; ++i) {
        cd w = s.W.samples[i], wa = Wa.samples[i], qa = Qa.samples[i];
        cd wac = std::conj(wa), qac = std::conj(qa);
        qw[i] = qa * wa;
        mix2[i] = qa * wac - qac * wa;
        cub1[i] = qa * wa * wa;
        cub2[i] = qa * (std::norm(wa) + wac * wac);
        cub3[i] = qac * (wa * wa + std::norm(wa));
        w2[i] = std::norm(w);
        wcc[i] = w * wac * wac + std::conj(w) * wa * wa;
        t2[i] = w * qac - std::conj(w) * qa;
        t3[i] = std::conj(w) * wa * qa - w * wac * qac;
    }
    CubicTruncations ct;
    ct.F3 = Qa - band_field(g, std::move(qw)) - project_neg(band_field(g, std::move(mix2))) +
            band_field(g, std::move(cub1)) + project_neg(band_field(g, std::move(cub2))) -
            project_neg(band_field(g, std::move(cub3)));
    ct.F13 = s.W - deriv(project_neg(band_field(g, std::move(w2)))) +
             project_neg(band_field(g, std::move(wcc)));
    ct.T13 = project_neg(band_field(g, std::move(t2))) + project_neg(band_field(g, std::move(t3)));
    return ct;
}

std::pair<SpectralField, SpectralField> quadratic_sources(const WWState& s,
                                                          const PhysParams& p) {
    const Grid& g = *s.W.grid;
    const int n = g.n();
    SpectralField Wa = deriv(s.W);
    SpectralField Qa = deriv(s.Q);
    const cd ic2(0.0, 0.5 * p.c);

    cvec w2(n), wwa(n), gmix(n), qq(n), q2(n), wqa(n), kmix(n);
    for (int i = 0; i < n; ++i) {
        cd w = s.W.samples[i], wa = Wa.samples[i], qa = Qa.samples[i];
        w2[i] = std::norm(w);
        wwa[i] = w * wa;
        gmix[i] = qa * std::conj(wa) - std::conj(qa) * wa;
        qq[i] = qa * qa;
        q2[i] = std::norm(qa);
        wqa[i] = w * qa;
        kmix[i] = w * std::conj(qa) - std::conj(w) * qa;
    }
    SpectralField G2 = cd(-1.0) * ic2 * deriv(project_neg(band_field(g, std::move(w2)))) +
                       ic2 * band_field(g, std::move(wwa)) +
                       project_neg(band_field(g, std::move(gmix)));
    SpectralField K2 = cd(-1.0) * band_field(g, std::move(qq)) -
                       project_neg(band_field(g, std::move(q2))) +
                       ic2 * band_field(g, std::move(wqa)) +
                       ic2 * project_neg(band_field(g, std::move(kmix)));
    return {std::move(G2), std::move(K2)};
}

BranchPair diagonalize(const WWState& s, const PhysParams& p) {
    const Grid& g = *s.W.grid;
    const int n = g.n();
    cvec yp(n), ym(n);
    for (int i = 0; i < n; ++i) {
        double sq = root_disc(g.k(i), p);
        cd wh = s.W.spectrum[i], qh = s.Q.spectrum[i];
        yp[i] = 0.5 * (wh - (p.c - sq) / (2.0 * p.g) * qh);
        ym[i] = 0.5 * (wh - (p.c + sq) / (2.0 * p.g) * qh);
    }
    return {from_spectrum(g, std::move(yp)), from_spectrum(g, std::move(ym))};
}

WWState undiagonalize(const BranchPair& bp, const PhysParams& p) {
    const Grid& g = *bp.Yplus.grid;
    const int n = g.n();
    cvec wh(n), qh(n);
    for (int i = 0; i < n; ++i) {
        // the multiplier gap is sqrt(c^2+4g|k|)/g >= c/g, so the inversion
        // is well conditioned at every mode including k = 0
        double sq = root_disc(g.k(i), p);
        cd d = bp.Yplus.spectrum[i] - bp.Yminus.spectrum[i];
        qh[i] = 2.0 * p.g / sq * d;
        wh[i] = bp.Yplus.spectrum[i] + bp.Yminus.spectrum[i] + p.c / (2.0 * p.g) * qh[i];
    }
    WWState s;
    s.W = from_spectrum(g, std::move(wh));
    s.Q = from_spectrum(g, std::move(qh));
    return s;
}

SpectralField y_minus_ansatz(const SpectralField& yplus) {
    const Grid& g = *yplus.grid;
    const int n = g.n();
    SpectralField ya = deriv(yplus);
    cvec prod(n);
    for (int i = 0; i < n; ++i) prod[i] = yplus.samples[i] * std::conj(ya.samples[i]);
    return holo(cd(-2.0) * band_field(g, std::move(prod)));
}

ApproxWW build_approx_ww(const YEpsField& y, const PhysParams& p) {
    p.validate();
    const Grid& g = *y.Y.grid;
    const int n = g.n();
    const double gg = p.g, c = p.c;
    SpectralField Ya = deriv(y.Y);
    SpectralField Yaa = deriv(y.Y, 2);

    cvec prod(n);
    for (int i = 0; i < n; ++i) prod[i] = y.Y.samples[i] * std::conj(Ya.samples[i]);
    SpectralField quad = holo(band_field(g, std::move(prod)));

    ApproxWW a;
    a.state.W = holo(cd(2.0) * y.Y + cd(0.0, -2.0 * gg / (c * c)) * Ya +
                     cd(-6.0 * gg * gg / std::pow(c, 4)) * Yaa);
    a.state.Q = holo(cd(2.0 * gg / c) * y.Y + cd(0.0, -4.0 * gg * gg / std::pow(c, 3)) * Ya +
                     cd(-12.0 * std::pow(gg, 3) / std::pow(c, 5)) * Yaa +
                     cd(4.0 * gg / c) * quad);
    a.state.t = y.t;
    a.source = y;
    return residual_gk(std::move(a), p);
}

ApproxWW residual_gk(ApproxWW a, const PhysParams& p) {
    p.validate();
    const Grid& g = *a.state.W.grid;
    const int n = g.n();
    const double gg = p.g, c = p.c;
    const YEpsField& y = a.source;

    SpectralField Wa = deriv(a.state.W);
    double mj = std::numeric_limits<double>::infinity();
    for (const auto& v : Wa.samples) mj = std::min(mj, std::abs(1.0 + v));
    if (!(mj > p.delta_floor)) {
        a.degenerate = true;
        a.gres = zero_field(g);
        a.kres = zero_field(g);
        a.gnorm_h1 = a.knorm_hhalf = a.res_norm =
            std::numeric_limits<double>::infinity();
        return a;
    }
    a.degenerate = false;

    // time derivative of the assembled pair, chain-ruled through the stored
    // dY so no checkpoint differencing enters the residual
    SpectralField Ya = deriv(y.Y);
    SpectralField dYa = deriv(y.dY);
    SpectralField dYaa = deriv(y.dY, 2);
    cvec prod(n);
    for (int i = 0; i < n; ++i)
        prod[i] = y.dY.samples[i] * std::conj(Ya.samples[i]) +
                  y.Y.samples[i] * std::conj(dYa.samples[i]);
    SpectralField dquad = holo(band_field(g, std::move(prod)));

    SpectralField dWt = cd(2.0) * y.dY + cd(0.0, -2.0 * gg / (c * c)) * dYa +
                        cd(-6.0 * gg * gg / std::pow(c, 4)) * dYaa;
    SpectralField dQt = cd(2.0 * gg / c) * y.dY +
                        cd(0.0, -4.0 * gg * gg / std::pow(c, 3)) * dYa +
                        cd(-12.0 * std::pow(gg, 3) / std::pow(c, 5)) * dYaa +
                        cd(4.0 * gg / c) * dquad;

    // the equations act on the holomorphic sector; the mean velocity the
    // frozen pair ignores is reported separately
    WWRhs r = ww_rhs(a.state, p);
    a.gres = holo(dWt - r.dWu);
    a.kres = holo(dQt - r.dQu);
    a.mean_rate = std::abs(r.dw0);
    a.gnorm_h1 = norm_h(a.gres, 1.0);
    a.knorm_hhalf = norm_hdot(a.kres, 0.5);
    a.res_norm = a.gnorm_h1 + a.knorm_hhalf;
    return a;
}

PreparednessReport well_preparedness(const WWState& s, const PhysParams& p, int m,
                                     double threshold) {
    p.validate();
    if (m < 1) throw std::invalid_argument("well_preparedness: m must be >= 1");
    PreparednessReport r;
    r.threshold = threshold;
    const double se = std::sqrt(p.eps);
    r.pair_ratio = norm_energy_pair(s.W, s.Q) / se;

    DiffState d = to_diff_vars(s, p);
    double scale = se * p.eps;
    for (int j = 0; j < m; ++j) {
        SpectralField wj = j ? deriv(d.Wb, j) : d.Wb;
        SpectralField rj = j ? deriv(d.R, j) : d.R;
        r.deriv_ratios.push_back(norm_energy_pair(wj, rj) / scale);
        scale *= p.eps;
    }

    SpectralField cpl = s.W - cd(p.c / p.g) * s.Q;
    r.coupling_ratio = norm_hdot(cpl, 0.5) / (se * p.eps);

    r.well_prepared = r.pair_ratio <= threshold && r.coupling_ratio <= threshold;
    for (double v : r.deriv_ratios)
        if (!(v <= threshold)) r.well_prepared = false;
    return r;
}

std::string residual_record_json(const ApproxWW& a, const std::string& run_id) {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["t"] = a.state.t;
    j["g_h1"] = a.gnorm_h1;
    j["k_hhalf"] = a.knorm_hhalf;
    j["residual"] = a.res_norm;
    j["mean_rate"] = a.mean_rate;
    j["degenerate"] = a.degenerate;
    return j.dump();
}

std::string preparedness_record_json(const PreparednessReport& r,
                                     const std::string& run_id) {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["pair"] = r.pair_ratio;
    j["derivs"] = r.deriv_ratios;
    j["coupling"] = r.coupling_ratio;
    j["threshold"] = r.threshold;
    j["well_prepared"] = r.well_prepared;
    return j.dump();
}

} // namespace wwbo
