#include "wwbo/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wwbo {

namespace {

SpectralField half_deriv(const SpectralField& f) {
    return multiplier_apply(f, [](double k) { return cd(std::sqrt(std::abs(k))); });
}

} // namespace

double hamiltonian(const WWState& st, const PhysParams& p) {
    p.validate();
    const Grid& g = *st.W.grid;
    SpectralField Wf = st.full_W();
    SpectralField Wa = deriv(st.W);
    SpectralField Qa = deriv(st.Q);
    double acc = 0;
    for (int i = 0; i < g.n(); ++i) {
        double eta = Wf.samples[i].imag();
        double xa = 1.0 + Wa.samples[i].real();
        acc += 2.0 * p.g * eta * eta * xa +
               std::real(cd(0.0, -1.0) * st.Q.samples[i] * std::conj(Qa.samples[i])) +
               2.0 * p.c * Qa.samples[i].real() * eta * eta +
               (2.0 * p.c * p.c / 3.0) * eta * eta * eta * xa;
    }
    return acc * g.spacing();
}

double momentum(const WWState& st, const PhysParams& p) {
    p.validate();
    const Grid& g = *st.W.grid;
    SpectralField Wf = st.full_W();
    SpectralField Wa = deriv(st.W);
    double acc = 0;
    for (int i = 0; i < g.n(); ++i) {
        double eta = Wf.samples[i].imag();
        acc += 4.0 * st.Q.samples[i].real() * Wa.samples[i].imag() -
               2.0 * p.c * eta * eta * (1.0 + Wa.samples[i].real());
    }
    return acc * g.spacing();
}

double e0_pair(const SpectralField& w, const SpectralField& q, const PhysParams& p) {
    SpectralField qa = deriv(q);
    double acc = 0;
    for (int i = 0; i < w.n(); ++i)
        acc += p.g * std::norm(w.samples[i]) +
               std::imag(q.samples[i] * std::conj(qa.samples[i]));
    return acc * w.grid->spacing();
}

double p0_pair(const SpectralField& w, const SpectralField& q, const PhysParams& p) {
    SpectralField wa = deriv(w);
    double acc = 0;
    for (int i = 0; i < w.n(); ++i)
        acc += 2.0 * std::imag(std::conj(q.samples[i]) * wa.samples[i]) -
               p.c * std::norm(w.samples[i]);
    return acc * w.grid->spacing();
}

std::vector<double> dyadic_block_sups(const SpectralField& f) {
    const Grid& g = *f.grid;
    int top = 0;
    while ((1 << top) < g.n() / 2) ++top;
    std::vector<double> sups(top + 1, 0.0);
    for (int j = 0; j <= top; ++j) {
        cvec h(g.n(), cd(0.0));
        bool any = false;
        for (int i = 0; i < g.n(); ++i) {
            int m = std::abs(g.jindex(i));
            int shell = 0;
            while ((1 << shell) < m) ++shell;
            if (shell == j && f.spectrum[i] != cd(0.0)) {
                h[i] = f.spectrum[i];
                any = true;
            }
        }
        if (any) sups[j] = norm_linf(from_spectrum(g, std::move(h)));
    }
    return sups;
}

namespace {

double shell_score(const SpectralField& f) {
    std::vector<double> sups = dyadic_block_sups(f);
    double mx = 0, l2 = 0;
    for (double v : sups) {
        mx = std::max(mx, v);
        l2 += v * v;
    }
    return mx + std::sqrt(l2);
}

} // namespace

ControlNorms control_norms(const DiffState& d, const PhysParams& p) {
    ControlNorms cn;
    double supY = 0;
    for (const auto& v : d.Wb.samples) supY = std::max(supY, std::abs(v / (1.0 + v)));
    cn.A = norm_linf(d.Wb) + supY + shell_score(half_deriv(d.R));
    cn.B = norm_linf(half_deriv(d.Wb)) + norm_linf(deriv(d.R));
    cn.Amhalf = norm_linf(half_deriv(d.W)) + norm_linf(d.R);
    cn.Am1 = norm_linf(d.W);
    cn.Abar = cn.A + p.c * cn.Amhalf + p.c * p.c * cn.Am1;
    cn.Bbar = cn.B + p.c * cn.A + p.c * p.c * cn.Amhalf;
    return cn;
}

double e_lin3(const LinState& l, const DiffState& d, const PhysParams& p) {
    if (!d.filled) throw std::invalid_argument("e_lin3: background fields not filled");
    const Grid& g = *l.w.grid;
    SpectralField ra = deriv(l.r);
    double acc = 0;
    for (int i = 0; i < g.n(); ++i) {
        cd w = l.w.samples[i], r = l.r.samples[i];
        acc += (p.g + d.au.samples[i].real()) * std::norm(w) +
               std::imag(r * std::conj(ra.samples[i])) +
               2.0 * std::imag(d.R.samples[i] * w * ra.samples[i]) -
               2.0 * std::real(std::conj(d.Wb.samples[i]) * w * w);
    }
    return acc * g.spacing();
}

std::array<double, 5> cubic_components(const DiffState& d, const WWState& s,
                                       const PhysParams& p, int n) {
    p.validate();
    if (n < 0) throw std::invalid_argument("cubic_components: order must be >= 0");
    const SpectralField& W = s.W; // mean-free part; the antiderivative needs it so
    const SpectralField& Q = s.Q;
    SpectralField Wc = conj(W), Qc = conj(Q);
    SpectralField WpW = W + Wc;
    SpectralField aW = antideriv(W);
    SpectralField amW = aW - conj(aW);
    SpectralField Wbn = deriv(d.Wb, n);
    SpectralField Rn1 = deriv(d.R, n + 1);
    SpectralField Wbnc = conj(Wbn), Rn1c = conj(Rn1);
    auto dn1 = [&](const SpectralField& f) { return deriv(f, n + 1); };
    const cd i1(0.0, 1.0);

    std::array<double, 5> I{};
    I[0] = 2.0 * std::real(integral(cd(-1.0) * Wbnc * dn1(WpW * d.Wb) +
                                    i1 * Rn1c * dn1(WpW * d.R)));
    I[1] = p.c * std::real(integral(
               cd(-1.0) * Wbnc * dn1(d.Wb * (Q + Qc) + d.R * WpW) +
               Rn1c * dn1(cd(0.5) * (W * W) + W * Wc) +
               (i1 / p.g) * Rn1c * dn1(Q * d.R + Qc * d.R)));
    I[2] = p.c * p.c *
           std::real(integral(
               i1 * Wbnc * dn1(d.Wb * amW + W * W + cd(0.5) * (W * Wc)) -
               cd(0.5 / p.g) * Wbnc * dn1(Q * d.R + Qc * d.R) +
               cd(1.0 / p.g) * Rn1c * dn1(d.R * amW) +
               cd(0.5 / p.g) * Rn1c * dn1(W * Q + W * Qc)));
    I[3] = (p.c * p.c * p.c / (2.0 * p.g)) *
           std::imag(integral(Rn1c * dn1(amW * W) -
                              Wbnc * dn1(W * (Q + Qc) + amW * d.R)));
    I[4] = (std::pow(p.c, 4) / (2.0 * p.g * p.g)) *
           std::real(integral(Wbn * dn1(amW * W)));
    return I;
}

std::map<std::string, double> EnergyReport::as_map() const {
    return {{"t", t},
            {"E", E},
            {"P", P},
            {"E0", E0},
            {"Elin3", Elin3},
            {"I0", I[0]},
            {"I1", I[1]},
            {"I2", I[2]},
            {"I3", I[3]},
            {"I4", I[4]},
            {"A", cn.A},
            {"B", cn.B},
            {"Amhalf", cn.Amhalf},
            {"Am1", cn.Am1},
            {"Abar", cn.Abar},
            {"Bbar", cn.Bbar},
            {"taylor_min", taylor_min},
            {"jacobian_min", jacobian_min},
            {"tail_fraction", tail_fraction}};
}

std::string EnergyReport::csv_header() {
    return "t,E,P,E0,Elin3,I0,I1,I2,I3,I4,A,B,Amhalf,Am1,Abar,Bbar,"
           "taylor_min,jacobian_min,tail_fraction";
}

std::string EnergyReport::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << t << ',' << E << ',' << P << ',' << E0 << ',' << Elin3;
    for (double v : I) os << ',' << v;
    os << ',' << cn.A << ',' << cn.B << ',' << cn.Amhalf << ',' << cn.Am1 << ','
       << cn.Abar << ',' << cn.Bbar << ',' << taylor_min << ',' << jacobian_min
       << ',' << tail_fraction;
    return os.str();
}

EnergyReport energy_report(const WWState& s, const PhysParams& p, const LinState* lin,
                           int n) {
    p.validate();
    EnergyReport r;
    r.t = s.t;
    r.E = hamiltonian(s, p);
    r.P = momentum(s, p);
    DiffState d = diff_aux(to_diff_vars(s, p), p);
    r.E0 = e0_pair(d.Wb, d.R, p);
    r.Elin3 = lin ? e_lin3(*lin, d, p) : std::numeric_limits<double>::quiet_NaN();
    r.I = cubic_components(d, s, p, n);
    r.cn = control_norms(d, p);
    double tmin = std::numeric_limits<double>::infinity();
    double jmin = tmin;
    for (int i = 0; i < s.W.n(); ++i) {
        tmin = std::min(tmin, p.g + d.au.samples[i].real());
        jmin = std::min(jmin, std::abs(1.0 + d.Wb.samples[i]));
    }
    r.taylor_min = tmin;
    r.jacobian_min = jmin;
    double tail = 0, total = 0;
    double cut = (2.0 / 3.0) * s.W.grid->kmax();
    for (int i = 0; i < s.W.n(); ++i) {
        double m = std::norm(d.Wb.spectrum[i]);
        total += m;
        if (std::abs(s.W.grid->k(i)) > cut) tail += m;
    }
    r.tail_fraction = total > 0 ? std::sqrt(tail / total) : 0.0;
    return r;
}

GrowthAudit refined_estimate_audit(const std::vector<WWState>& trajectory,
                                   const PhysParams& p, int n) {
    p.validate();
    GrowthAudit out;
    size_t m = trajectory.size();
    if (m < 3) return out;

    std::vector<double> e(m), rhs(m), tt(m);
    for (size_t i = 0; i < m; ++i) {
        const WWState& s = trajectory[i];
        DiffState d = diff_aux(to_diff_vars(s, p), p);
        double en = norm_energy_pair_dot(d.Wb, d.R, n);
        en *= en;
        double en1;
        if (n == 0) {
            en1 = std::abs(hamiltonian(s, p));
        } else {
            en1 = norm_energy_pair_dot(d.Wb, d.R, n - 1);
            en1 *= en1;
        }
        ControlNorms cn = control_norms(d, p);
        double c = p.c;
        double coef = c * c * cn.A * cn.B + std::pow(c, 3) * cn.A * cn.A +
                      std::pow(c, 3) * cn.B * cn.Amhalf +
                      std::pow(c, 4) * cn.A * cn.Amhalf +
                      std::pow(c, 4) * cn.Am1 * cn.B +
                      std::pow(c, 5) * cn.A * cn.Am1;
        e[i] = en;
        rhs[i] = coef * std::sqrt(en * en1) + cn.Abar * cn.Bbar * en;
        tt[i] = s.t;
    }

    double num = 0, den = 0;
    for (size_t i = 1; i + 1 < m; ++i) {
        double de = (e[i + 1] - e[i - 1]) / (tt[i + 1] - tt[i - 1]);
        out.max_rate = std::max(out.max_rate, std::abs(de));
        if (rhs[i] > 0) {
            out.constant_max = std::max(out.constant_max, std::abs(de) / rhs[i]);
            num += std::abs(de) * rhs[i];
            den += rhs[i] * rhs[i];
        }
        ++out.samples;
    }
    out.constant_fit = den > 0 ? num / den : 0.0;
    if (e[0] > 0)
        out.growth_ratio = *std::max_element(e.begin(), e.end()) / e[0];
    return out;
}

} // namespace wwbo
