#include "wwbo/bo.hpp"

#include <cmath>
#include <random>

namespace wwbo {

void PhysParams::validate() const {
    if (!(g > 0) || !(c > 0) || !(b > 0) || !(T > 0))
        throw std::invalid_argument("PhysParams: g, c, b, T must be positive");
    if (!(eps > 0) || !(eps < 1))
        throw std::invalid_argument("PhysParams: eps must be in (0,1)");
    if (!(delta_floor > 0) || !(delta_floor < 1))
        throw std::invalid_argument("PhysParams: delta_floor must be in (0,1)");
}

namespace {

// keep a nominally real field exactly real: discard imaginary roundoff
cvec real_samples(const SpectralField& f) {
    cvec s(f.n());
    for (int i = 0; i < f.n(); ++i) s[i] = cd(f.samples[i].real(), 0.0);
    return s;
}

// nonlinear part lambda * U U_x, dealiased, computed in sample space
cvec bo_nonlinear_hat(const Grid& g, const cvec& uhat, const PhysParams& p) {
    cvec dhat(uhat);
    for (int i = 0; i < g.n(); ++i) dhat[i] *= cd(0.0, g.k(i));
    cvec u = g.to_samples(uhat);
    cvec ux = g.to_samples(dhat);
    cvec prod(g.n());
    for (int i = 0; i < g.n(); ++i)
        prod[i] = cd(p.lambda * u[i].real() * ux[i].real(), 0.0);
    cvec h = g.to_spectrum(prod);
    const double cut = (2.0 / 3.0) * g.kmax();
    for (int i = 0; i < g.n(); ++i)
        if (std::abs(g.k(i)) > cut) h[i] = 0.0;
    return h;
}

void check_finite(const cvec& h, const char* who) {
    for (const auto& v : h)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::runtime_error(std::string(who) + ": non-finite value, aborting");
}

} // namespace

SpectralField bo_rhs(const BOState& s, const PhysParams& p) {
    const Grid& g = *s.U.grid;
    const double disp = p.g * p.g / (p.c * p.c * p.c);
    // H d^2/dx^2 has symbol i k|k|
    cvec h = bo_nonlinear_hat(g, s.U.spectrum, p);
    for (int i = 0; i < g.n(); ++i) {
        double k = g.k(i);
        h[i] += cd(0.0, disp * k * std::abs(k)) * s.U.spectrum[i];
    }
    return from_spectrum(g, std::move(h));
}

BOState bo_step(const BOState& s, double dt, const PhysParams& p) {
    const Grid& g = *s.U.grid;
    if (!(dt > 0)) throw std::invalid_argument("bo_step: dt must be positive");
    double umax = 0;
    for (const auto& v : s.U.samples) umax = std::max(umax, std::abs(v.real()));
    if (std::abs(p.lambda) * umax * dt > g.spacing())
        throw std::runtime_error("bo_step: CFL violation (dt too large for max|lambda U|)");

    const double disp = p.g * p.g / (p.c * p.c * p.c);
    const int n = g.n();
    cvec Eh(n), Ef(n);
    for (int i = 0; i < n; ++i) {
        double ph = disp * g.k(i) * std::abs(g.k(i));
        Eh[i] = std::exp(cd(0.0, ph * dt * 0.5));
        Ef[i] = std::exp(cd(0.0, ph * dt));
    }

    const cvec& u = s.U.spectrum;
    cvec k1 = bo_nonlinear_hat(g, u, p);

    cvec tmp(n);
    for (int i = 0; i < n; ++i) tmp[i] = Eh[i] * (u[i] + 0.5 * dt * k1[i]);
    cvec k2 = bo_nonlinear_hat(g, tmp, p);

    for (int i = 0; i < n; ++i) tmp[i] = Eh[i] * u[i] + 0.5 * dt * k2[i];
    cvec k3 = bo_nonlinear_hat(g, tmp, p);

    for (int i = 0; i < n; ++i) tmp[i] = Ef[i] * u[i] + dt * Eh[i] * k3[i];
    cvec k4 = bo_nonlinear_hat(g, tmp, p);

    cvec out(n);
    for (int i = 0; i < n; ++i)
        out[i] = Ef[i] * u[i] +
                 dt / 6.0 * (Ef[i] * k1[i] + 2.0 * Eh[i] * (k2[i] + k3[i]) + k4[i]);
    check_finite(out, "bo_step");

    BOState next;
    next.U = from_spectrum(g, std::move(out));
    next.U.samples = real_samples(next.U);
    next.U = from_samples(g, std::move(next.U.samples));
    next.t = s.t + dt;
    return next;
}

std::vector<BOState> bo_run(const BOState& s0, double t_final, const PhysParams& p,
                            const std::vector<double>& checkpoints, double dt,
                            BORunReport* report) {
    if (t_final < 0) throw std::invalid_argument("bo_run: t_final must be nonnegative");
    std::vector<double> marks(checkpoints);
    if (marks.empty() || marks.back() < t_final) marks.push_back(t_final);

    double mean0 = mean(s0.U).real();
    double l20 = norm_l2(s0.U);
    double hm0 = norm_h(s0.U, 3.0);

    std::vector<BOState> out;
    BOState cur = s0;
    if (t_final == 0) {
        out.push_back(cur);
        if (report) *report = {};
        return out;
    }
    for (double target : marks) {
        double seg = target - cur.t;
        if (seg < 0) throw std::invalid_argument("bo_run: checkpoints must be increasing");
        if (seg > 0) {
            int steps = std::max(1, (int)std::ceil(seg / dt - 1e-12));
            double h = seg / steps;
            for (int i = 0; i < steps; ++i) cur = bo_step(cur, h, p);
            cur.t = target; // kill accumulation roundoff
        }
        out.push_back(cur);
    }
    if (report) {
        const BOState& last = out.back();
        report->mean_drift = std::abs(mean(last.U).real() - mean0);
        report->l2_drift = std::abs(norm_l2(last.U) - l20) / (l20 > 0 ? l20 : 1.0);
        report->hm_drift = std::abs(norm_h(last.U, 3.0) - hm0) / (hm0 > 0 ? hm0 : 1.0);
    }
    return out;
}

TruncatedBO truncate(const BOState& s, const PhysParams& p) {
    p.validate();
    const Grid& g = *s.U.grid;
    double K = p.b / p.eps;
    if (K > g.kmax())
        throw std::invalid_argument("truncate: cutoff b/eps above grid Nyquist");
    TruncatedBO tb;
    tb.cutoff = K;
    tb.t = s.t;
    tb.Ut = lowpass(s.U, K);
    // full quadratic term, truncated, minus the truncated field's own term
    cvec full = bo_nonlinear_hat(g, s.U.spectrum, p);
    cvec lown = bo_nonlinear_hat(g, tb.Ut.spectrum, p);
    cvec h(g.n());
    for (int i = 0; i < g.n(); ++i) {
        cd f = (std::abs(g.k(i)) <= K) ? full[i] : cd(0.0);
        h[i] = f - lown[i];
    }
    tb.fres = from_spectrum(g, std::move(h));
    return tb;
}

namespace {

// the rescaling map: mode j of a BO-grid field lands at mode j of the target
// grid (period L/eps), scaled by -i*eps on negative modes, frame phase applied
cvec lift_spectrum(const cvec& bo_hat, const Grid& gbo, const Grid& ww,
                   const PhysParams& p, double t) {
    cvec h(ww.n(), cd(0.0));
    int jmax = std::min(gbo.n() / 2 - 1, ww.n() / 2 - 1);
    double top = 0;
    for (int j = 1; j < gbo.n() / 2; ++j) top = std::max(top, std::abs(bo_hat[gbo.slot_of(-j)]));
    for (int j = jmax + 1; j < gbo.n() / 2; ++j)
        if (std::abs(bo_hat[gbo.slot_of(-j)]) > 1e-12 * top)
            throw std::invalid_argument("build_tilde_Y: target grid cannot represent mapped modes");
    for (int j = 1; j <= jmax; ++j) {
        cd v = bo_hat[gbo.slot_of(-j)];
        if (v == cd(0.0)) continue;
        double xi = ww.k(ww.slot_of(-j));
        h[ww.slot_of(-j)] = cd(0.0, -p.eps) * v * std::exp(cd(0.0, -xi * (p.g / p.c) * t));
    }
    return h;
}

} // namespace

YEpsField build_tilde_Y(const TruncatedBO& tb, const PhysParams& p, double t, const Grid& ww) {
    p.validate();
    const Grid& gbo = *tb.Ut.grid;
    if (std::abs(ww.length() - gbo.length() / p.eps) > 1e-9 * ww.length())
        throw std::invalid_argument("build_tilde_Y: target grid period must be L/eps");
    // every retained BO mode must exist on the target grid
    int jcut = (int)std::floor(tb.cutoff * gbo.length() / (2 * M_PI) + 1e-9);
    if (jcut > ww.n() / 2 - 1)
        throw std::invalid_argument("build_tilde_Y: target grid cannot represent mapped modes");

    YEpsField y;
    y.t = t;
    y.Y = from_spectrum(ww, lift_spectrum(tb.Ut.spectrum, gbo, ww, p, t));

    // dY = lift of eps^2 Ut_s - (g/c) eps Ut_y with Ut_s = bo_rhs(Ut) + fres
    BOState tmp{tb.Ut, tb.t};
    SpectralField us = bo_rhs(tmp, p);
    cvec arg(gbo.n());
    for (int i = 0; i < gbo.n(); ++i) {
        cd uy = cd(0.0, gbo.k(i)) * tb.Ut.spectrum[i];
        arg[i] = p.eps * p.eps * (us.spectrum[i] + tb.fres.spectrum[i]) - (p.g / p.c) * p.eps * uy;
    }
    y.dY = from_spectrum(ww, lift_spectrum(arg, gbo, ww, p, t));

    cvec fa(gbo.n());
    for (int i = 0; i < gbo.n(); ++i) fa[i] = p.eps * p.eps * tb.fres.spectrum[i];
    y.fres = from_spectrum(ww, lift_spectrum(fa, gbo, ww, p, t));
    return y;
}

namespace {

SpectralField residual_from(const SpectralField& Y, const SpectralField& dY, const PhysParams& p) {
    const Grid& g = *Y.grid;
    SpectralField Ya = deriv(Y);
    SpectralField Yaa = deriv(Y, 2);
    SpectralField Yc = conj(Y);
    SpectralField Yca = conj(Ya);
    cd ic(0.0, p.c);
    SpectralField nl = cd(-1.0) * ic * dealias(Y * Ya) + ic * project_neg(dealias(Yc * Ya)) +
                       ic * project_neg(dealias(Y * Yca));
    double disp = p.g * p.g / (p.c * p.c * p.c);
    SpectralField lin = (p.g / p.c) * deriv(Y) - cd(0.0, disp) * Yaa;
    return dY + lin + nl;
}

} // namespace

SpectralField tilde_Y_residual(const YEpsField& y, const PhysParams& p) {
    return residual_from(y.Y, y.dY, p);
}

SpectralField tilde_Y_residual_fd(const YEpsField& ya, const YEpsField& yb, const PhysParams& p) {
    double dt = yb.t - ya.t;
    if (!(dt > 0)) throw std::invalid_argument("tilde_Y_residual_fd: checkpoints not increasing");
    const Grid& g = *ya.Y.grid;
    cvec d(g.n());
    for (int i = 0; i < g.n(); ++i)
        d[i] = (yb.Y.spectrum[i] - ya.Y.spectrum[i]) / dt;
    SpectralField dY = from_spectrum(g, std::move(d));
    // midpoint field for the algebraic terms
    cvec m(g.n());
    for (int i = 0; i < g.n(); ++i) m[i] = 0.5 * (ya.Y.spectrum[i] + yb.Y.spectrum[i]);
    SpectralField Ym = from_spectrum(g, std::move(m));
    SpectralField out = residual_from(Ym, dY, p);
    // error estimate: centered-difference truncation (phase speeds dominate)
    // plus roundoff amplification from the division by dt
    double disp = p.g * p.g / std::pow(p.c, 3);
    double curv2 = 0, ynorm2 = 0;
    for (int i = 0; i < g.n(); ++i) {
        double k = std::abs(g.k(i));
        double w = (p.g / p.c) * k + disp * k * k;
        double a2 = std::norm(Ym.spectrum[i]);
        curv2 += w * w * w * w * w * w * a2;
        ynorm2 += a2;
    }
    double L = g.length();
    double est = dt * dt / 6.0 * std::sqrt(L * curv2) +
                 4.0 * std::numeric_limits<double>::epsilon() * std::sqrt(L * ynorm2) / dt;
    double scale = norm_l2(out);
    if (est > 1e-3 * scale)
        throw std::runtime_error("tilde_Y_residual_fd: checkpoint spacing too coarse for differencing");
    return out;
}

SpectralField bo_initial_data(const Grid& g, int m, unsigned seed, int low_modes,
                              double tail_power, int tail_to) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int cut = (int)std::floor((2.0 / 3.0) * (g.n() / 2));
    int jmax = tail_to < 0 ? cut - 5 : tail_to;
    if (jmax > cut) throw std::invalid_argument("bo_initial_data: tail beyond dealias cutoff");
    cvec h(g.n(), cd(0.0));
    for (int j = 1; j <= jmax; ++j) {
        double mag = (j <= low_modes) ? 1.0 : 0.5 * std::pow((double)j, -tail_power);
        double phase = 2 * M_PI * u(rng);
        cd v = mag * std::exp(cd(0.0, phase));
        h[g.slot_of(-j)] = v;
        h[g.slot_of(j)] = std::conj(v);
    }
    SpectralField f = from_spectrum(g, std::move(h));
    double s = norm_h(f, (double)m);
    return (1.0 / s) * f;
}

} // namespace wwbo
