#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wwbo/bo.hpp"

#include <cmath>
#include <vector>

using namespace wwbo;

namespace {

double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = x.size();
    for (int i = 0; i < n; ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SpectralField single_cos(const Grid& g) {
    cvec s(g.n());
    for (int i = 0; i < g.n(); ++i) s[i] = std::cos(g.x(i));
    return from_samples(g, std::move(s));
}

// plain classical RK4 on the whole rhs, dispersion included: the independent
// route used to validate the integrating-factor stepper
BOState rk4_full(const BOState& s, double dt, const PhysParams& p) {
    const Grid& g = *s.U.grid;
    auto add = [&](const cvec& u, double a, const SpectralField& k) {
        cvec o(u);
        for (int i = 0; i < g.n(); ++i) o[i] += a * k.spectrum[i];
        return o;
    };
    SpectralField k1 = bo_rhs(s, p);
    BOState s2{from_spectrum(g, add(s.U.spectrum, dt / 2, k1)), s.t + dt / 2};
    SpectralField k2 = bo_rhs(s2, p);
    BOState s3{from_spectrum(g, add(s.U.spectrum, dt / 2, k2)), s.t + dt / 2};
    SpectralField k3 = bo_rhs(s3, p);
    BOState s4{from_spectrum(g, add(s.U.spectrum, dt, k3)), s.t + dt};
    SpectralField k4 = bo_rhs(s4, p);
    cvec out(s.U.spectrum);
    for (int i = 0; i < g.n(); ++i)
        out[i] += dt / 6.0 *
                  (k1.spectrum[i] + 2.0 * k2.spectrum[i] + 2.0 * k3.spectrum[i] + k4.spectrum[i]);
    return {from_spectrum(g, std::move(out)), s.t + dt};
}

} // namespace

TEST_CASE("params validation") {
    PhysParams p;
    CHECK_NOTHROW(p.validate());
    PhysParams bad = p;
    bad.c = -1;
    CHECK_THROWS(bad.validate());
    bad = p;
    bad.eps = 1.5;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("bo_rhs basics") {
    Grid g(64, 2 * M_PI);
    PhysParams p;

    // constants are annihilated
    BOState c0{from_samples(g, cvec(g.n(), cd(0.7))), 0.0};
    CHECK(norm_linf(bo_rhs(c0, p)) < 1e-13);

    // single mode, lambda = 0: (g^2/c^3) H d^2 cos = -sin
    PhysParams p0 = p;
    p0.lambda = 0;
    BOState sc{single_cos(g), 0.0};
    SpectralField r = bo_rhs(sc, p0);
    for (int i = 0; i < g.n(); ++i)
        CHECK(std::abs(r.samples[i] - cd(-std::sin(g.x(i)), 0)) < 1e-12);

    // transport term against the padded-grid product oracle
    Grid g2(128, 2 * M_PI);
    std::vector<int> modes = {1, 2, 3, 5, 8};
    cvec h(g.n(), cd(0.0)), h2(g2.n(), cd(0.0));
    for (int j : modes) {
        cd v = std::exp(cd(0, 0.31 * j));
        h[g.slot_of(-j)] = v;
        h[g.slot_of(j)] = std::conj(v);
        h2[g2.slot_of(-j)] = v;
        h2[g2.slot_of(j)] = std::conj(v);
    }
    PhysParams pt = p;
    pt.lambda = 2.0;
    BOState a{from_spectrum(g, h), 0.0};
    BOState b{from_spectrum(g2, h2), 0.0};
    PhysParams lam0 = pt;
    lam0.lambda = 0;
    SpectralField nl_small = bo_rhs(a, pt) - bo_rhs(a, lam0);
    SpectralField nl_big = bo_rhs(b, pt) - bo_rhs(b, lam0);
    for (int j = 1; j <= 16; ++j) {
        CHECK(std::abs(nl_small.spectrum[g.slot_of(-j)] - nl_big.spectrum[g2.slot_of(-j)]) < 1e-12);
    }
}

TEST_CASE("bo_step fixed points and exact linear flow") {
    Grid g(64, 2 * M_PI);
    PhysParams p;

    BOState c0{from_samples(g, cvec(g.n(), cd(0.4))), 0.0};
    BOState c1 = bo_step(c0, 0.01, p);
    CHECK(norm_linf(c1.U - c0.U) < 1e-14);
    CHECK(c1.t == doctest::Approx(0.01));

    // lambda = 0: exact phase rotation
    PhysParams p0 = p;
    p0.lambda = 0;
    p0.g = 1.3;
    p0.c = 0.9;
    BOState sc{single_cos(g), 0.0};
    double dt = 0.3;
    BOState s1 = bo_step(sc, dt, p0);
    double disp = p0.g * p0.g / std::pow(p0.c, 3);
    cd want = 0.5 * std::exp(cd(0, disp * (-1.0) * 1.0 * dt)); // mode -1: k|k| = -1
    CHECK(std::abs(s1.U.spectrum[g.slot_of(-1)] - want) < 1e-13);

    // CFL guard
    BOState big{from_samples(g, cvec(g.n(), cd(50.0))), 0.0};
    CHECK_THROWS(bo_step(big, 1.0, p));
}

TEST_CASE("bo_step self-convergence is fourth order") {
    Grid g(256, 2 * M_PI * 4);
    PhysParams p;
    p.lambda = 1.0;
    // amplified so the finest-step error stays above the roundoff floor
    SpectralField u0 = cd(8.0) * bo_initial_data(g, 3, 7, 3, 4.5, 60);
    double tf = 0.5;
    auto run = [&](double dt) {
        BOState s{u0, 0.0};
        int steps = (int)std::round(tf / dt);
        for (int i = 0; i < steps; ++i) s = bo_step(s, dt, p);
        return s.U;
    };
    SpectralField ref = run(tf / 2048);
    double e1 = norm_l2(run(tf / 32) - ref);
    double e2 = norm_l2(run(tf / 64) - ref);
    double e4 = norm_l2(run(tf / 128) - ref);
    CHECK(e1 / e2 > 12.0);
    CHECK(e2 / e4 > 12.0);
}

TEST_CASE("integrating-factor route agrees with direct integration") {
    Grid g(128, 2 * M_PI * 2);
    PhysParams p;
    p.g = 1.1;
    p.c = 0.8;
    SpectralField u0 = bo_initial_data(g, 3, 9, 3, 4.5, 30);
    double tf = 0.1;
    BOState a{u0, 0.0}, b{u0, 0.0};
    int na = 100;
    for (int i = 0; i < na; ++i) a = bo_step(a, tf / na, p);
    int nb = 4000; // direct route needs small dt for the stiff dispersion
    for (int i = 0; i < nb; ++i) b = rk4_full(b, tf / nb, p);
    CHECK(norm_l2(a.U - b.U) < 1e-8 * norm_l2(u0));
}

TEST_CASE("bo_run conservation") {
    Grid g(1024, 2 * M_PI * 64);
    PhysParams p;
    SpectralField u0 = bo_initial_data(g, 3, 12345, 3, 4.5, 300);
    BORunReport rep;
    auto states = bo_run({u0, 0.0}, 10.0, p, {}, 0.02, &rep);
    CHECK(states.back().t == doctest::Approx(10.0));
    CHECK(rep.l2_drift < 1e-8);
    CHECK(rep.mean_drift < 1e-10);
    CHECK(is_real_field(states.back().U));

    // t_final = 0 returns the initial state
    auto s0 = bo_run({u0, 0.0}, 0.0, p, {});
    CHECK(norm_linf(s0[0].U - u0) == 0.0);
}

TEST_CASE("lambda = 0 run is an isometry in Hdot^s") {
    Grid g(256, 2 * M_PI * 4);
    PhysParams p;
    p.lambda = 0;
    SpectralField u0 = bo_initial_data(g, 3, 5, 3, 4.5, 60);
    BOState s{u0, 0.0};
    for (int i = 0; i < 20; ++i) s = bo_step(s, 0.05, p);
    for (double sv : {0.0, 0.5, 1.0, 2.0})
        CHECK(std::abs(norm_hdot(s.U, sv) - norm_hdot(u0, sv)) < 1e-12 * norm_hdot(u0, sv));
}

TEST_CASE("projected evolution cross-check") {
    // advancing z = -i P U by the projected right side must agree with
    // projecting a full step, since u = -2 Im z reconstructs u exactly
    Grid g(256, 2 * M_PI * 4);
    PhysParams p;
    SpectralField u0 = bo_initial_data(g, 3, 21, 3, 4.5, 60);
    double dt = 1e-3;

    auto zrhs = [&](const SpectralField& z) {
        // reconstruct u = -2 Im z, then project the full rhs
        cvec us(g.n());
        for (int i = 0; i < g.n(); ++i) us[i] = cd(-2.0 * z.samples[i].imag(), 0.0);
        BOState u{from_samples(g, std::move(us)), 0.0};
        return cd(0, -1) * project_neg(bo_rhs(u, p));
    };
    SpectralField z = cd(0, -1) * project_neg(u0);
    // one classical step on z
    SpectralField k1 = zrhs(z);
    SpectralField k2 = zrhs(z + cd(dt / 2) * k1);
    SpectralField k3 = zrhs(z + cd(dt / 2) * k2);
    SpectralField k4 = zrhs(z + cd(dt) * k3);
    SpectralField z1 = z + cd(dt / 6) * (k1 + cd(2) * k2 + cd(2) * k3 + k4);

    BOState u1 = bo_step({u0, 0.0}, dt, p);
    SpectralField z1b = cd(0, -1) * project_neg(u1.U);
    CHECK(norm_l2(z1 - z1b) < 1e-11 * norm_l2(z));

    // recovery identity
    double err = 0;
    for (int i = 0; i < g.n(); ++i)
        err = std::max(err, std::abs(-2.0 * z.samples[i].imag() - u0.samples[i].real()));
    CHECK(err < 1e-12);
}

TEST_CASE("truncate splits the field and forcing") {
    Grid g(2048, 2 * M_PI * 64);
    PhysParams p;
    p.eps = 0.1;

    // band-limited data below the cutoff: forcing is only commutator leakage
    SpectralField low = bo_initial_data(g, 3, 3, 3, 4.5, 40);
    TruncatedBO tb0 = truncate({low, 0.0}, p);
    CHECK(norm_l2(tb0.Ut - low) < 1e-13);
    CHECK(norm_l2(tb0.fres) < 1e-12);

    SpectralField u0 = bo_initial_data(g, 3, 12345, 3, 4.5, 660);
    TruncatedBO tb = truncate({u0, 0.0}, p);
    double K = p.b / p.eps;
    // tail bound against the direct spectral sum
    CHECK(norm_l2(u0 - tb.Ut) <= std::pow(K, -3.0) * norm_hdot(u0, 3.0));
    // cutoff above Nyquist rejected
    PhysParams tiny = p;
    tiny.eps = 1e-4;
    CHECK_THROWS(truncate({u0, 0.0}, tiny));
}

TEST_CASE("forcing norms scale with the stated exponents") {
    Grid g(2048, 2 * M_PI * 64);
    PhysParams p;
    SpectralField u0 = bo_initial_data(g, 3, 12345, 3, 4.5, 660);
    std::vector<double> epss = {0.2, 0.141, 0.1};
    std::vector<double> fl2, fh1, du;
    for (double e : epss) {
        PhysParams pe = p;
        pe.eps = e;
        TruncatedBO tb = truncate({u0, 0.0}, pe);
        fl2.push_back(norm_l2(tb.fres));
        fh1.push_back(norm_hdot(tb.fres, 1.0));
        du.push_back(norm_l2(u0 - tb.Ut));
    }
    int m = 3;
    CHECK(slope_fit(epss, fl2) >= m - 1 - 0.3);
    CHECK(slope_fit(epss, fh1) >= m - 2 - 0.3);
    CHECK(slope_fit(epss, du) >= m - 0.3);
}

TEST_CASE("build_tilde_Y maps modes, scales, and phases") {
    Grid gbo(256, 2 * M_PI * 4);
    PhysParams p;
    p.eps = 0.25;
    p.g = 1.2;
    p.c = 0.9;
    Grid ww(256, gbo.length() / p.eps);

    // zero in, zero out
    cvec z(gbo.n(), cd(0.0));
    TruncatedBO tb0{from_spectrum(gbo, z), from_spectrum(gbo, z), p.b / p.eps, 0.0};
    YEpsField y0 = build_tilde_Y(tb0, p, 0.3, ww);
    CHECK(norm_linf(y0.Y) < 1e-15);

    // 2cos(y) has modes +-1 with coefficient 1; the projection keeps -1 only
    cvec h(gbo.n(), cd(0.0));
    h[gbo.slot_of(-1)] = 1.0;
    h[gbo.slot_of(1)] = 1.0;
    TruncatedBO tb{from_spectrum(gbo, h), from_spectrum(gbo, z), p.b / p.eps, 0.0};
    double t = 0.7;
    YEpsField y = build_tilde_Y(tb, p, t, ww);
    int nonzero = 0;
    for (int i = 0; i < ww.n(); ++i)
        if (std::abs(y.Y.spectrum[i]) > 1e-15) ++nonzero;
    CHECK(nonzero == 1);
    double xi = ww.k(ww.slot_of(-1));
    cd want = cd(0, -p.eps) * std::exp(cd(0, -xi * (p.g / p.c) * t));
    CHECK(std::abs(y.Y.spectrum[ww.slot_of(-1)] - want) < 1e-14);

    // grid mismatch rejected
    Grid wrong(256, gbo.length() / p.eps * 1.5);
    CHECK_THROWS(build_tilde_Y(tb, p, 0.0, wrong));
}

TEST_CASE("tilde_Y frequency support and derivative scaling") {
    Grid g(2048, 2 * M_PI * 64);
    PhysParams p;
    SpectralField u0 = bo_initial_data(g, 3, 12345, 3, 4.5, 660);
    std::vector<double> epss = {0.2, 0.141, 0.1};
    std::vector<std::vector<double>> dnorm(4);
    for (double e : epss) {
        PhysParams pe = p;
        pe.eps = e;
        TruncatedBO tb = truncate({u0, 0.0}, pe);
        int nww = 1;
        int J = (int)std::floor(pe.b / pe.eps * g.length() / (2 * M_PI) + 1e-9);
        while (nww < 4 * J) nww *= 2;
        Grid ww(nww, g.length() / pe.eps);
        YEpsField y = build_tilde_Y(tb, pe, 0.0, ww);

        // support in [-2b, 0)
        CHECK(is_holomorphic(y.Y));
        for (int i = 0; i < ww.n(); ++i)
            if (ww.k(i) < -2 * pe.b - 1e-12) CHECK(std::abs(y.Y.spectrum[i]) < 1e-15);

        for (int d = 0; d <= 3; ++d) dnorm[d].push_back(norm_l2(deriv(y.Y, d)));
    }
    for (int d = 0; d <= 3; ++d) {
        double s = slope_fit(epss, dnorm[d]);
        CHECK(s >= d + 0.5 - 0.2);
        CHECK(s <= d + 0.5 + 0.2);
    }
}

TEST_CASE("tilde_Y residual identity and scaling") {
    Grid g(2048, 2 * M_PI * 64);
    PhysParams p;
    // amplified so the quadratic forcing stays clear of evaluation roundoff:
    // slopes are amplitude-invariant
    SpectralField u0 = cd(40.0) * bo_initial_data(g, 3, 12345, 3, 4.5, 660);
    std::vector<double> epss = {0.2, 0.141, 0.1};
    std::vector<double> rh1;
    for (double e : epss) {
        PhysParams pe = p;
        pe.eps = e;
        TruncatedBO tb = truncate({u0, 0.0}, pe);
        int J = (int)std::floor(pe.b / pe.eps * g.length() / (2 * M_PI) + 1e-9);
        int nww = 1;
        while (nww < 4 * J) nww *= 2;
        Grid ww(nww, g.length() / pe.eps);
        YEpsField y = build_tilde_Y(tb, pe, 0.4, ww);

        // the equation residual equals the lifted forcing
        SpectralField res = tilde_Y_residual(y, pe);
        CHECK(norm_l2(res - y.fres) < 1e-3 * norm_l2(y.fres));
        rh1.push_back(norm_h(res, 1.0));
    }
    int m = 3;
    CHECK(slope_fit(epss, rh1) >= m + 1.5 - 0.3);
}

TEST_CASE("tilde_Y residual by differencing checkpoints") {
    Grid g(512, 2 * M_PI * 16);
    PhysParams p;
    p.eps = 0.2;
    // heavy tail keeps the forcing well above the differencing error floor
    SpectralField u0 = bo_initial_data(g, 3, 33, 3, 2.5, 100);
    PhysParams pe = p;
    BOState s{u0, 0.0};
    double dt_ww = 5e-4; // water-wave time spacing between adjacent builds
    // BO time advances by eps^2 dt; differencing straddles the midpoint
    BOState s1 = bo_step(s, pe.eps * pe.eps * dt_ww, pe);
    BOState s2 = bo_step(s1, pe.eps * pe.eps * dt_ww, pe);
    TruncatedBO ta = truncate(s, pe);
    TruncatedBO tm = truncate(s1, pe);
    TruncatedBO tb = truncate(s2, pe);
    int J = (int)std::floor(pe.b / pe.eps * g.length() / (2 * M_PI) + 1e-9);
    int nww = 1;
    while (nww < 4 * J) nww *= 2;
    Grid ww(nww, g.length() / pe.eps);
    YEpsField ya = build_tilde_Y(ta, pe, 0.0, ww);
    YEpsField ym = build_tilde_Y(tm, pe, dt_ww, ww);
    YEpsField yb = build_tilde_Y(tb, pe, 2 * dt_ww, ww);
    SpectralField fd = tilde_Y_residual_fd(ya, yb, pe);
    SpectralField exact = tilde_Y_residual(ym, pe);
    // centered differencing resolves the midpoint residual to a part in 1e3
    CHECK(norm_l2(fd - exact) < 1e-3 * norm_l2(exact));

    // too-coarse spacing is rejected (same field, far-apart timestamps)
    YEpsField yfar{ya.Y, ya.dY, ya.fres, 50.0};
    CHECK_THROWS(tilde_Y_residual_fd(ya, yfar, pe));
}

TEST_CASE("untruncated build is solver-accurate") {
    // with the cutoff above the whole spectrum, the construction reproduces an
    // exact BO solution and the residual sits at solver accuracy, not at the
    // truncation scaling
    Grid g(512, 2 * M_PI * 16);
    PhysParams p;
    p.eps = 0.5;
    // band-limit the data to half the cutoff so the quadratic product also fits
    SpectralField u0 = bo_initial_data(g, 3, 44, 3, 4.5, 15);
    TruncatedBO tb = truncate({u0, 0.0}, p);
    CHECK(norm_l2(tb.Ut - u0) == 0.0);
    CHECK(norm_l2(tb.fres) < 1e-11 * norm_l2(u0));
}
