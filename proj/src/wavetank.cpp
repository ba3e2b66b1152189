#include "wwbo/wavetank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wwbo {

namespace {

// pointwise composite -> field clipped to the dealias band
SpectralField band_field(const Grid& g, cvec samples) {
    return dealias(from_samples(g, std::move(samples)));
}

void check_finite_field(const SpectralField& f, const char* who) {
    for (const auto& v : f.spectrum)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::runtime_error(std::string(who) + ": non-finite field, aborting");
}

double min_jacobian_samples(const SpectralField& wa) {
    double mj = std::numeric_limits<double>::infinity();
    for (const auto& v : wa.samples) mj = std::min(mj, std::abs(1.0 + v));
    return mj;
}

void require_nondegenerate(const SpectralField& wa, double floor, const char* who) {
    double mj = min_jacobian_samples(wa);
    if (!(mj > floor))
        throw std::runtime_error(std::string(who) + ": interface degeneracy (min|1+W_a| = " +
                                 std::to_string(mj) + ", floor " + std::to_string(floor) + ")");
}

} // namespace

SpectralField WWState::full_W() const {
    SpectralField f = W;
    f.spectrum[0] += w0;
    for (auto& v : f.samples) v += w0;
    return f;
}

AuxFields ww_aux(const WWState& s, const PhysParams& p) {
    const Grid& g = *s.W.grid;
    const int n = g.n();
    AuxFields ax;
    ax.Wa = deriv(s.W);
    ax.Qa = deriv(s.Q);
    require_nondegenerate(ax.Wa, p.delta_floor, "ww_aux");

    SpectralField Wf = s.full_W();
    cvec js(n), fs(n), f1s(n), t1s(n);
    for (int i = 0; i < n; ++i) {
        cd opw = 1.0 + ax.Wa.samples[i];
        cd opwc = std::conj(opw);
        double jj = std::norm(opw);
        cd qa = ax.Qa.samples[i];
        cd wf = Wf.samples[i];
        js[i] = jj;
        fs[i] = (qa - std::conj(qa)) / jj;
        f1s[i] = wf / opwc + std::conj(wf) / opw;
        t1s[i] = wf * std::conj(qa) / opwc - std::conj(wf) * qa / opw;
    }
    ax.J = band_field(g, std::move(js));
    ax.F = project_neg(band_field(g, std::move(fs)));
    ax.F1 = project_neg(band_field(g, std::move(f1s)));
    ax.T1 = project_neg(band_field(g, std::move(t1s)));
    ax.Fb = ax.F - cd(0.0, 0.5 * p.c) * ax.F1;
    return ax;
}

namespace {

WWRhs rhs_core(const WWState& s, const PhysParams& p, AuxFields* keep) {
    const Grid& g = *s.W.grid;
    const int n = g.n();
    AuxFields ax = ww_aux(s, p);
    SpectralField Wf = s.full_W();

    cvec adv(n), fq(n), sq(n);
    for (int i = 0; i < n; ++i) {
        cd opw = 1.0 + ax.Wa.samples[i];
        adv[i] = opw * ax.Fb.samples[i];
        fq[i] = ax.Fb.samples[i] * ax.Qa.samples[i];
        sq[i] = std::norm(ax.Qa.samples[i]) / std::norm(opw);
    }
    const cd ic2(0.0, 0.5 * p.c), ic(0.0, p.c), ig(0.0, p.g);
    WWRhs r;
    r.dWu = cd(-1.0) * band_field(g, std::move(adv)) - ic2 * Wf;
    r.dQu = ig * Wf - band_field(g, std::move(fq)) - ic * s.Q -
            project_neg(band_field(g, std::move(sq))) + ic2 * ax.T1;
    r.dW = holo(r.dWu);
    r.dQ = holo(r.dQu);
    r.dw0 = mean(r.dWu);
    if (keep) *keep = std::move(ax);
    return r;
}

} // namespace

WWRhs ww_rhs(const WWState& s, const PhysParams& p) { return rhs_core(s, p, nullptr); }

namespace {

// exp(dt L_k) for L_k = [[0, -ik], [ig, -ic]] on every negative-frequency
// slot; identity elsewhere. Both eigenvalues are purely imaginary and their
// gap is at least c, so the two-point exponential formula is stable at all k.
struct ModeFlow {
    cvec m00, m01, m10, m11;
};

ModeFlow make_flow(const Grid& g, double dt, const PhysParams& p) {
    const int n = g.n();
    ModeFlow f{cvec(n, cd(1.0)), cvec(n, cd(0.0)), cvec(n, cd(0.0)), cvec(n, cd(1.0))};
    for (int i = 0; i < n; ++i) {
        if (g.jindex(i) >= 0) continue;
        double k = g.k(i);
        double s = std::sqrt(p.c * p.c + 4.0 * p.g * std::abs(k));
        cd mup(0.0, 0.5 * (s - p.c));
        cd mum(0.0, -0.5 * (s + p.c));
        cd ep = std::exp(mup * dt), em = std::exp(mum * dt);
        cd l01(0.0, -k), l10(0.0, p.g), l11(0.0, -p.c);
        cd den = mup - mum;
        f.m00[i] = (ep * (-mum) - em * (-mup)) / den;
        f.m01[i] = (ep - em) * l01 / den;
        f.m10[i] = (ep - em) * l10 / den;
        f.m11[i] = (ep * (l11 - mum) - em * (l11 - mup)) / den;
    }
    return f;
}

void flow_apply(const ModeFlow& f, cvec& wh, cvec& qh) {
    for (size_t i = 0; i < wh.size(); ++i) {
        cd w = wh[i], q = qh[i];
        wh[i] = f.m00[i] * w + f.m01[i] * q;
        qh[i] = f.m10[i] * w + f.m11[i] * q;
    }
}

// subtract the linear symbol so the stages only see the nonlinear remainder
void subtract_linear(const Grid& g, const PhysParams& p, const cvec& wh, const cvec& qh,
                     cvec& dwh, cvec& dqh) {
    for (int i = 0; i < g.n(); ++i) {
        if (g.jindex(i) >= 0) continue;
        dwh[i] -= cd(0.0, -g.k(i)) * qh[i];
        dqh[i] -= cd(0.0, p.g) * wh[i] + cd(0.0, -p.c) * qh[i];
    }
}

struct StepMeta {
    double max_fb = 0.0;    // advection speed scale, for the CFL guard
    double min_jac = 0.0;
    double holo_leak = 0.0; // relative strictly-positive content of the rhs
};

struct SVec {
    cvec w, q;
    cd w0 = 0.0;
};

double pos_leak(const Grid& g, const cvec& ah, const cvec& bh) {
    double pos = 0.0, tot = 0.0;
    for (int i = 0; i < g.n(); ++i) {
        double m = std::norm(ah[i]) + std::norm(bh[i]);
        tot += m;
        if (g.jindex(i) > 0) pos += m;
    }
    return tot > 0 ? std::sqrt(pos / tot) : 0.0;
}

SVec nonlin(const Grid& g, const PhysParams& p, const WWState& u, StepMeta* meta) {
    AuxFields ax;
    WWRhs r = rhs_core(u, p, meta ? &ax : nullptr);
    if (meta) {
        meta->max_fb = norm_linf(ax.Fb);
        meta->min_jac = min_jacobian_samples(ax.Wa);
        meta->holo_leak = pos_leak(g, r.dWu.spectrum, r.dQu.spectrum);
    }
    SVec v{std::move(r.dW.spectrum), std::move(r.dQ.spectrum), r.dw0};
    subtract_linear(g, p, u.W.spectrum, u.Q.spectrum, v.w, v.q);
    return v;
}

WWState state_from(const Grid& g, cvec wh, cvec qh, cd w0, double t) {
    WWState s;
    s.W = from_spectrum(g, std::move(wh));
    s.Q = from_spectrum(g, std::move(qh));
    s.w0 = w0;
    s.t = t;
    return s;
}

double filter_sigma(int j, int n) {
    const double half = n / 2;
    const double cut = 0.9 * half;
    double aj = std::abs(j);
    if (aj <= cut) return 1.0;
    double x = (aj - cut) / (half - cut);
    return std::exp(-36.0 * std::log(10.0) * x * x * x * x); // 1e-36 at Nyquist
}

WWState step_core(const WWState& s, double dt, const PhysParams& p, bool filter,
                  StepMeta* meta_out) {
    const Grid& g = *s.W.grid;
    if (!(dt > 0)) throw std::invalid_argument("ww_step: dt must be positive");
    const int n = g.n();

    StepMeta meta;
    SVec k1 = nonlin(g, p, s, &meta);
    if (meta.max_fb * dt > g.spacing())
        throw std::runtime_error("ww_step: CFL violation (dt too large for max|Fb|)");

    ModeFlow Eh = make_flow(g, 0.5 * dt, p);
    ModeFlow Ef = make_flow(g, dt, p);

    const cvec& uw = s.W.spectrum;
    const cvec& uq = s.Q.spectrum;
    cvec ehw = uw, ehq = uq;
    flow_apply(Eh, ehw, ehq);
    cvec efw = uw, efq = uq;
    flow_apply(Ef, efw, efq);

    cvec tw(n), tq(n);
    for (int i = 0; i < n; ++i) {
        tw[i] = uw[i] + 0.5 * dt * k1.w[i];
        tq[i] = uq[i] + 0.5 * dt * k1.q[i];
    }
    flow_apply(Eh, tw, tq);
    SVec k2 = nonlin(g, p, state_from(g, tw, tq, s.w0 + 0.5 * dt * k1.w0, s.t + 0.5 * dt),
                     nullptr);

    for (int i = 0; i < n; ++i) {
        tw[i] = ehw[i] + 0.5 * dt * k2.w[i];
        tq[i] = ehq[i] + 0.5 * dt * k2.q[i];
    }
    SVec k3 = nonlin(g, p, state_from(g, tw, tq, s.w0 + 0.5 * dt * k2.w0, s.t + 0.5 * dt),
                     nullptr);

    cvec k3w = k3.w, k3q = k3.q;
    flow_apply(Eh, k3w, k3q);
    for (int i = 0; i < n; ++i) {
        tw[i] = efw[i] + dt * k3w[i];
        tq[i] = efq[i] + dt * k3q[i];
    }
    SVec k4 = nonlin(g, p, state_from(g, tw, tq, s.w0 + dt * k3.w0, s.t + dt), nullptr);

    cvec k1w = std::move(k1.w), k1q = std::move(k1.q);
    flow_apply(Ef, k1w, k1q);
    cvec k23w(n), k23q(n);
    for (int i = 0; i < n; ++i) {
        k23w[i] = k2.w[i] + k3.w[i];
        k23q[i] = k2.q[i] + k3.q[i];
    }
    flow_apply(Eh, k23w, k23q);

    cvec ow(n), oq(n);
    for (int i = 0; i < n; ++i) {
        ow[i] = efw[i] + dt / 6.0 * (k1w[i] + 2.0 * k23w[i] + k4.w[i]);
        oq[i] = efq[i] + dt / 6.0 * (k1q[i] + 2.0 * k23q[i] + k4.q[i]);
    }
    if (filter) {
        for (int i = 0; i < n; ++i) {
            double sig = filter_sigma(g.jindex(i), n);
            ow[i] *= sig;
            oq[i] *= sig;
        }
    }
    cd w0 = s.w0 + dt / 6.0 * (k1.w0 + 2.0 * (k2.w0 + k3.w0) + k4.w0);

    WWState next = state_from(g, std::move(ow), std::move(oq), w0, s.t + dt);
    check_finite_field(next.W, "ww_step");
    check_finite_field(next.Q, "ww_step");
    if (meta_out) *meta_out = meta;
    return next;
}

// absorb any supplied mean into w0, clip to the dealias band, drop gauge
WWState sanitized(const WWState& s) {
    WWState c;
    c.W = holo(dealias(s.W));
    c.Q = holo(dealias(s.Q));
    c.w0 = s.w0 + mean(s.W);
    c.t = s.t;
    return c;
}

} // namespace

WWState ww_step(const WWState& s, double dt, const PhysParams& p, bool filter) {
    return step_core(s, dt, p, filter, nullptr);
}

std::vector<WWState> ww_run(const WWState& s0, double t_final, const PhysParams& p,
                            const std::vector<double>& checkpoints,
                            const WWRunOptions& opt, WWRunReport* report) {
    p.validate();
    if (t_final < s0.t) throw std::invalid_argument("ww_run: t_final precedes initial time");
    if (!(opt.dt > 0)) throw std::invalid_argument("ww_run: dt must be positive");

    WWState cur = sanitized(s0);
    check_finite_field(cur.W, "ww_run");
    check_finite_field(cur.Q, "ww_run");

    WWRunReport rep;
    rep.min_jacobian = std::numeric_limits<double>::infinity();
    rep.min_taylor = std::numeric_limits<double>::infinity();
    double e0 = 0.0, p0 = 0.0;
    if (opt.energy_fn) {
        e0 = opt.energy_fn(cur);
        rep.energy_drift = 0.0;
    }
    if (opt.momentum_fn) {
        p0 = opt.momentum_fn(cur);
        rep.momentum_drift = 0.0;
    }

    auto floors = [&](const WWState& st) {
        DiffState d = diff_aux(to_diff_vars(st, p), p);
        double mt = std::numeric_limits<double>::infinity();
        for (const auto& v : d.au.samples) mt = std::min(mt, (p.g + v.real()) / p.g);
        rep.min_taylor = std::min(rep.min_taylor, mt);
        if (!(mt > p.delta_floor))
            throw std::runtime_error("ww_run: Taylor sign failure (min(g+a) = " +
                                     std::to_string(mt) + " of g, floor " +
                                     std::to_string(p.delta_floor) + ")");
    };
    auto conserved = [&](const WWState& st) {
        if (opt.energy_fn) {
            double e = opt.energy_fn(st);
            rep.energy_drift =
                std::max(rep.energy_drift, std::abs(e - e0) / std::max(std::abs(e0), 1e-300));
        }
        if (opt.momentum_fn) {
            double m = opt.momentum_fn(st);
            rep.momentum_drift =
                std::max(rep.momentum_drift, std::abs(m - p0) / std::max(std::abs(p0), 1e-300));
        }
    };
    floors(cur);

    std::vector<double> marks(checkpoints);
    if (marks.empty() || marks.back() < t_final) marks.push_back(t_final);

    std::vector<WWState> out;
    for (double target : marks) {
        double seg = target - cur.t;
        if (seg < -1e-12) throw std::invalid_argument("ww_run: checkpoints must be increasing");
        if (seg > 0) {
            int steps = std::max(1, (int)std::ceil(seg / opt.dt - 1e-12));
            double h = seg / steps;
            for (int i = 0; i < steps; ++i) {
                StepMeta meta;
                cur = step_core(cur, h, p, opt.filter, &meta);
                rep.min_jacobian = std::min(rep.min_jacobian, meta.min_jac);
                rep.holo_drift = std::max(rep.holo_drift, meta.holo_leak);
                floors(cur);
                conserved(cur);
                ++rep.steps;
            }
            cur.t = target; // kill accumulation roundoff
        }
        out.push_back(cur);
    }
    if (report) *report = rep;
    return out;
}

WWState linear_evolve(const WWState& s0, double t, const PhysParams& p) {
    p.validate();
    const Grid& g = *s0.W.grid;
    cvec wh = s0.W.spectrum, qh = s0.Q.spectrum;
    ModeFlow M = make_flow(g, t, p);
    flow_apply(M, wh, qh);
    return state_from(g, std::move(wh), std::move(qh), s0.w0, s0.t + t);
}

OmegaBranches omega_branches(double xi, const PhysParams& p) {
    if (xi > 0) throw std::invalid_argument("omega_branches: wavenumber must be <= 0");
    OmegaBranches w;
    if (xi == 0) {
        w.plus = 0.0;
        w.minus = -p.c;
        w.quad = 0.0;
        return w;
    }
    double s = std::sqrt(p.c * p.c + 4.0 * p.g * std::abs(xi));
    w.plus = 0.5 * (s - p.c);
    w.minus = -0.5 * (s + p.c);
    w.quad = -(p.g / p.c) * xi - (p.g * p.g / (p.c * p.c * p.c)) * xi * xi;
    return w;
}

DiffState to_diff_vars(const WWState& s, const PhysParams& p) {
    const Grid& g = *s.W.grid;
    const int n = g.n();
    DiffState d;
    d.W = s.full_W();
    d.Wb = deriv(s.W);
    require_nondegenerate(d.Wb, p.delta_floor, "to_diff_vars");
    SpectralField Qa = deriv(s.Q);
    cvec r(n);
    for (int i = 0; i < n; ++i) r[i] = Qa.samples[i] / (1.0 + d.Wb.samples[i]);
    d.R = band_field(g, std::move(r));
    d.t = s.t;
    return d;
}

DiffState diff_aux(DiffState d, const PhysParams& p) {
    const Grid& g = *d.Wb.grid;
    const int n = g.n();
    SpectralField Ra = deriv(d.R);
    cvec bs(n), b1s(n), as(n), ns(n);
    for (int i = 0; i < n; ++i) {
        cd opw = 1.0 + d.Wb.samples[i];
        cd opwc = std::conj(opw);
        cd R = d.R.samples[i];
        cd rav = Ra.samples[i];
        cd wf = d.W.samples[i];
        bs[i] = R / opwc;                                       // = Q_a / J
        b1s[i] = wf / opwc;
        as[i] = R * std::conj(rav);
        ns[i] = wf * std::conj(rav) - std::conj(d.Wb.samples[i]) * R;
    }
    // each display has the form P[x] (+/-) Pbar[conj x]; Pbar[conj x] = conj(P[x])
    SpectralField Pb_ = project_neg(band_field(g, std::move(bs)));
    SpectralField Pb1 = project_neg(band_field(g, std::move(b1s)));
    SpectralField Pa = project_neg(band_field(g, std::move(as)));
    SpectralField Pn = project_neg(band_field(g, std::move(ns)));
    d.b = Pb_ + conj(Pb_);
    d.b1 = Pb1 - conj(Pb1);
    d.bu = d.b - cd(0.0, 0.5 * p.c) * d.b1;
    d.a = cd(0.0, 1.0) * (conj(Pa) - Pa);
    d.N = Pn + conj(Pn);
    d.a1 = d.R + conj(d.R) - d.N;
    d.au = d.a + cd(0.5 * p.c) * d.a1;
    d.filled = true;
    return d;
}

std::pair<SpectralField, SpectralField>
diff_residual_from(const WWState& s, const SpectralField& dW, const SpectralField& dQ,
                   const PhysParams& p) {
    const Grid& g = *s.W.grid;
    const int n = g.n();
    DiffState d = diff_aux(to_diff_vars(s, p), p);
    SpectralField Wb_t = deriv(dW);
    SpectralField dQa = deriv(dQ);
    SpectralField Ra = deriv(d.R);
    SpectralField Wba = deriv(d.Wb);
    SpectralField ba = deriv(d.b);
    SpectralField b1a = deriv(d.b1);

    const cd ic2(0.0, 0.5 * p.c), ic(0.0, p.c), ii(0.0, 1.0);
    cvec rts(n), rw(n), rr(n);
    for (int i = 0; i < n; ++i) {
        cd opw = 1.0 + d.Wb.samples[i];
        cd opwc = std::conj(opw);
        cd wb = d.Wb.samples[i];
        cd R = d.R.samples[i];
        cd rav = Ra.samples[i];
        rts[i] = (dQa.samples[i] - R * Wb_t.samples[i]) / opw;
        cd mu = rav / opwc + std::conj(rav) / opw - ba.samples[i] +
                ic2 * (b1a.samples[i] + std::conj(wb) - wb);
        rw[i] = d.bu.samples[i] * Wba.samples[i] + opw * rav / opwc - opw * mu -
                ic2 * wb * (wb - std::conj(wb));
        rr[i] = d.bu.samples[i] * rav + ic * R -
                ii * (p.g * wb - d.a.samples[i]) / opw -
                ic2 * (R * wb + std::conj(R) * wb + d.N.samples[i]) / opw;
    }
    SpectralField resW = Wb_t + band_field(g, std::move(rw));
    SpectralField resR = band_field(g, std::move(rts)) + band_field(g, std::move(rr));
    return {std::move(resW), std::move(resR)};
}

std::pair<SpectralField, SpectralField> diff_rhs_residual(const WWState& s,
                                                          const PhysParams& p) {
    WWRhs r = ww_rhs(s, p);
    return diff_residual_from(s, r.dWu, r.dQu, p);
}

LinRhs lin_rhs(const LinState& l, const WWState& bg, const PhysParams& p) {
    const Grid& g = *l.w.grid;
    const int n = g.n();
    DiffState d = diff_aux(to_diff_vars(bg, p), p);
    SpectralField wa = deriv(l.w);
    SpectralField ra = deriv(l.r);
    SpectralField Ra = deriv(d.R);

    cvec m(n), m1(n), m2(n), nn(n), q1(n), q2(n), q3(n), g1x(n);
    // The mean of the linearized W velocity does not survive the rearrangement
    // into the (w, r) source terms: r couples to the projected W equation, so
    // the lost zero mode has to be restored through the R channel below.  Only
    // the F and F1 cores contribute to that mean.
    cd dfm = 0.0, df1m = 0.0;
    for (int i = 0; i < n; ++i) {
        cd opw = 1.0 + d.Wb.samples[i];
        cd opwc = std::conj(opw);
        double jj = std::norm(opw);
        cd den2 = opw * opw;
        cd wv = l.w.samples[i], wav = wa.samples[i], rav = ra.samples[i];
        cd R = d.R.samples[i], Rc = std::conj(R), Rav = Ra.samples[i];
        cd wfc = std::conj(d.W.samples[i]);
        cd wb = d.Wb.samples[i];
        m[i] = (rav + Rav * wv) / jj + Rc * wav / den2;
        m1[i] = wv / opwc - wfc * wav / den2;
        m2[i] = Rc * wv - (wfc * rav + wfc * Rav * wv) / opw;
        nn[i] = Rc * (rav + Rav * wv) / opw;
        q1[i] = rav / opwc;
        q2[i] = Rav * wv / opwc;
        q3[i] = (p.g + d.au.samples[i].real()) * wv / opw;
        g1x[i] = (std::conj(wb) - wb) * wv / opwc;

        cd qav = rav + Rav * wv + R * wav;
        cd Qav = R * opw;
        cd dj = opwc * wav + opw * std::conj(wav);
        dfm += (qav - std::conj(qav)) / jj - (Qav - std::conj(Qav)) * dj / (jj * jj);
        df1m += wv / opwc - std::conj(wfc) * std::conj(wav) / (opwc * opwc) +
                std::conj(wv) / opw - wfc * wav / den2;
    }
    dfm /= double(n);
    df1m /= double(n);
    SpectralField fm = band_field(g, std::move(m));
    SpectralField fm1 = band_field(g, std::move(m1));
    SpectralField fm2 = band_field(g, std::move(m2));
    SpectralField fn = band_field(g, std::move(nn));

    SpectralField innG = project_neg(conj(fm)) + project_pos(fm);
    SpectralField innG1 = project_neg(conj(fm1)) - project_pos(fm1);
    cvec gc(n), gone(n);
    for (int i = 0; i < n; ++i) {
        cd opw = 1.0 + d.Wb.samples[i];
        gc[i] = opw * innG.samples[i];
        gone[i] = -opw * innG1.samples[i] + g1x[i];
    }
    SpectralField Gc = band_field(g, std::move(gc));
    SpectralField G1 = band_field(g, std::move(gone));
    SpectralField Kc = project_pos(fn) - project_neg(conj(fn));
    SpectralField K1 = project_pos(fm2) + project_neg(conj(fm2));

    const cd ic2(0.0, 0.5 * p.c), ic(0.0, p.c), ii(0.0, 1.0);
    SpectralField Gu = Gc - ic2 * G1;
    SpectralField Ku = Kc - ic2 * K1;

    cvec bw(n), br(n);
    for (int i = 0; i < n; ++i) {
        bw[i] = d.bu.samples[i] * wa.samples[i];
        br[i] = d.bu.samples[i] * ra.samples[i];
    }
    SpectralField dw = cd(-1.0) * band_field(g, std::move(bw)) -
                       project_neg(band_field(g, std::move(q1))) -
                       project_neg(band_field(g, std::move(q2))) + project_neg(Gu);
    SpectralField dr = cd(-1.0) * band_field(g, std::move(br)) - ic * l.r +
                       ii * project_neg(band_field(g, std::move(q3))) + project_neg(Ku);

    // mean of the linearized W velocity; w and Wb are mean-free, so only the
    // projector halves of the cores survive at wavenumber zero
    cd mu = -0.5 * dfm + cd(0.0, 0.25 * p.c) * df1m;

    if (l.w0 != cd(0.0)) {
        // a mean in the direction acts through the undifferentiated W slots of
        // the F1 and T1 cores; linearize those directly
        cvec c0(n), t0(n);
        for (int i = 0; i < n; ++i) {
            cd opw = 1.0 + d.Wb.samples[i];
            c0[i] = l.w0 / std::conj(opw) + std::conj(l.w0) / opw;
            t0[i] = l.w0 * std::conj(d.R.samples[i]) - std::conj(l.w0) * d.R.samples[i];
        }
        SpectralField F10 = project_neg(band_field(g, std::move(c0)));
        SpectralField T10 = project_neg(band_field(g, std::move(t0)));
        cvec dwu0(n), dqu0(n);
        for (int i = 0; i < n; ++i) {
            cd opw = 1.0 + d.Wb.samples[i];
            dwu0[i] = ic2 * (opw * F10.samples[i] - l.w0);
            dqu0[i] = cd(0.0, p.g) * l.w0 + ic2 * F10.samples[i] * d.R.samples[i] * opw +
                      ic2 * T10.samples[i];
        }
        SpectralField W0f = band_field(g, std::move(dwu0));
        SpectralField Q0f = band_field(g, std::move(dqu0));
        mu += W0f.spectrum[0];
        cvec x0(n);
        for (int i = 0; i < n; ++i)
            x0[i] = Q0f.samples[i] - d.R.samples[i] * W0f.samples[i];
        dw = dw + W0f;
        dr = dr + band_field(g, std::move(x0));
    }

    cvec mr(n);
    for (int i = 0; i < n; ++i) mr[i] = mu * d.R.samples[i];
    dr = dr + band_field(g, std::move(mr));

    return {holo(dw), holo(dr), mu};
}

WWState background_at(const std::vector<WWState>& trajectory, double t,
                      const PhysParams& p) {
    if (trajectory.size() < 4)
        throw std::invalid_argument("background_at: need at least 4 checkpoints");
    const Grid& g = *trajectory.front().W.grid;
    const double t0 = trajectory.front().t, t1 = trajectory.back().t;
    if (t < t0 - 1e-9 || t > t1 + 1e-9)
        throw std::invalid_argument("background_at: time outside the stored background");

    size_t hi = 0;
    while (hi + 1 < trajectory.size() && trajectory[hi].t < t) ++hi;
    size_t i0 = (hi >= 2) ? hi - 2 : 0;
    i0 = std::min(i0, trajectory.size() - 4);

    cvec wacc(g.n(), cd(0.0)), qacc(g.n(), cd(0.0));
    cd w0acc = 0.0;
    for (size_t j = i0; j < i0 + 4; ++j) {
        double lj = 1.0;
        for (size_t k = i0; k < i0 + 4; ++k) {
            if (k == j) continue;
            lj *= (t - trajectory[k].t) / (trajectory[j].t - trajectory[k].t);
        }
        cvec wh = trajectory[j].W.spectrum, qh = trajectory[j].Q.spectrum;
        ModeFlow M = make_flow(g, t - trajectory[j].t, p);
        flow_apply(M, wh, qh);
        for (int i = 0; i < g.n(); ++i) {
            wacc[i] += lj * wh[i];
            qacc[i] += lj * qh[i];
        }
        w0acc += lj * trajectory[j].w0;
    }
    return state_from(g, std::move(wacc), std::move(qacc), w0acc, t);
}

LinState lin_run(const LinState& l0, const std::vector<WWState>& trajectory,
                 const PhysParams& p, double t_final, double dt, LinRunReport* report) {
    p.validate();
    if (!(dt > 0)) throw std::invalid_argument("lin_run: dt must be positive");
    if (t_final < l0.t) throw std::invalid_argument("lin_run: t_final precedes initial time");
    const Grid& g = *l0.w.grid;
    const int n = g.n();

    LinState cur{holo(dealias(l0.w)), holo(dealias(l0.r)), l0.t, l0.w0};
    double norm0 = norm_energy_pair(cur.w, cur.r);
    LinRunReport rep;
    rep.growth.emplace_back(cur.t, norm0);

    auto nl = [&](const LinState& l, double ts) {
        WWState bg = background_at(trajectory, ts, p);
        LinRhs rr = lin_rhs(l, bg, p);
        SVec v{std::move(rr.dw.spectrum), std::move(rr.dr.spectrum), rr.dw0};
        subtract_linear(g, p, l.w.spectrum, l.r.spectrum, v.w, v.q);
        return v;
    };

    double seg = t_final - l0.t;
    int steps = seg > 0 ? std::max(1, (int)std::ceil(seg / dt - 1e-12)) : 0;
    double h = steps > 0 ? seg / steps : 0.0;
    for (int sidx = 0; sidx < steps; ++sidx) {
        ModeFlow Eh = make_flow(g, 0.5 * h, p);
        ModeFlow Ef = make_flow(g, h, p);
        const cvec& uw = cur.w.spectrum;
        const cvec& uq = cur.r.spectrum;
        SVec k1 = nl(cur, cur.t);

        cvec ehw = uw, ehq = uq;
        flow_apply(Eh, ehw, ehq);
        cvec efw = uw, efq = uq;
        flow_apply(Ef, efw, efq);

        cvec tw(n), tq(n);
        for (int i = 0; i < n; ++i) {
            tw[i] = uw[i] + 0.5 * h * k1.w[i];
            tq[i] = uq[i] + 0.5 * h * k1.q[i];
        }
        flow_apply(Eh, tw, tq);
        SVec k2 = nl({from_spectrum(g, tw), from_spectrum(g, tq), cur.t + 0.5 * h,
                      cur.w0 + 0.5 * h * k1.w0},
                     cur.t + 0.5 * h);
        for (int i = 0; i < n; ++i) {
            tw[i] = ehw[i] + 0.5 * h * k2.w[i];
            tq[i] = ehq[i] + 0.5 * h * k2.q[i];
        }
        SVec k3 = nl({from_spectrum(g, tw), from_spectrum(g, tq), cur.t + 0.5 * h,
                      cur.w0 + 0.5 * h * k2.w0},
                     cur.t + 0.5 * h);
        cvec k3w = k3.w, k3q = k3.q;
        flow_apply(Eh, k3w, k3q);
        for (int i = 0; i < n; ++i) {
            tw[i] = efw[i] + h * k3w[i];
            tq[i] = efq[i] + h * k3q[i];
        }
        SVec k4 = nl({from_spectrum(g, tw), from_spectrum(g, tq), cur.t + h,
                      cur.w0 + h * k3.w0},
                     cur.t + h);

        cvec k1w = std::move(k1.w), k1q = std::move(k1.q);
        flow_apply(Ef, k1w, k1q);
        cvec k23w(n), k23q(n);
        for (int i = 0; i < n; ++i) {
            k23w[i] = k2.w[i] + k3.w[i];
            k23q[i] = k2.q[i] + k3.q[i];
        }
        flow_apply(Eh, k23w, k23q);
        cvec ow(n), oq(n);
        for (int i = 0; i < n; ++i) {
            ow[i] = efw[i] + h / 6.0 * (k1w[i] + 2.0 * k23w[i] + k4.w[i]);
            oq[i] = efq[i] + h / 6.0 * (k1q[i] + 2.0 * k23q[i] + k4.q[i]);
        }
        cur.w = from_spectrum(g, std::move(ow));
        cur.r = from_spectrum(g, std::move(oq));
        cur.w0 += h / 6.0 * (k1.w0 + 2.0 * (k2.w0 + k3.w0) + k4.w0);
        cur.t = l0.t + (sidx + 1) * h;
        check_finite_field(cur.w, "lin_run");
        check_finite_field(cur.r, "lin_run");
        double nrm = norm_energy_pair(cur.w, cur.r);
        rep.growth.emplace_back(cur.t, nrm);
        rep.max_growth = std::max(rep.max_growth, nrm / std::max(norm0, 1e-300));
    }
    cur.t = t_final;
    if (report) *report = rep;
    return cur;
}

} // namespace wwbo
