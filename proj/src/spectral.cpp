#include "wwbo/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace wwbo {

namespace {
// FFTW planner is not thread-safe; creation and destruction are serialized.
std::mutex planner_mtx;

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }
} // namespace

Grid::Grid(int n, double length) : n_(n), L_(length) {
    if (!power_of_two(n) || n < 16)
        throw std::invalid_argument("Grid: n must be a power of two >= 16");
    if (!(length > 0.0))
        throw std::invalid_argument("Grid: length must be positive");
    k_.resize(n);
    j_.resize(n);
    x_.resize(n);
    const double dk = 2.0 * M_PI / L_;
    for (int i = 0; i < n; ++i) {
        int j = (i < n / 2) ? i : i - n;
        j_[i] = j;
        k_[i] = dk * j;
        x_[i] = L_ * i / n;
    }
    k_max_ = dk * (n / 2);

    std::lock_guard<std::mutex> lk(planner_mtx);
    buf_in_ = reinterpret_cast<cd*>(fftw_malloc(sizeof(fftw_complex) * n));
    buf_out_ = reinterpret_cast<cd*>(fftw_malloc(sizeof(fftw_complex) * n));
    plan_fwd_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf_in_),
                                 reinterpret_cast<fftw_complex*>(buf_out_),
                                 FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf_in_),
                                 reinterpret_cast<fftw_complex*>(buf_out_),
                                 FFTW_BACKWARD, FFTW_ESTIMATE);
}

Grid::~Grid() {
    std::lock_guard<std::mutex> lk(planner_mtx);
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
    fftw_free(buf_in_);
    fftw_free(buf_out_);
}

cvec Grid::to_spectrum(const cvec& samples) const {
    if ((int)samples.size() != n_)
        throw std::invalid_argument("to_spectrum: size mismatch");
    cvec out(n_);
    std::lock_guard<std::mutex> lk(mtx_);
    std::memcpy(buf_in_, samples.data(), sizeof(cd) * n_);
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    const double inv = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] = buf_out_[i] * inv;
    return out;
}

cvec Grid::to_samples(const cvec& spectrum) const {
    if ((int)spectrum.size() != n_)
        throw std::invalid_argument("to_samples: size mismatch");
    cvec out(n_);
    std::lock_guard<std::mutex> lk(mtx_);
    std::memcpy(buf_in_, spectrum.data(), sizeof(cd) * n_);
    fftw_execute(static_cast<fftw_plan>(plan_bwd_));
    std::memcpy(out.data(), buf_out_, sizeof(cd) * n_);
    return out;
}

SpectralField from_samples(const Grid& g, cvec samples) {
    SpectralField f;
    f.grid = &g;
    f.spectrum = g.to_spectrum(samples);
    f.samples = std::move(samples);
    return f;
}

SpectralField from_spectrum(const Grid& g, cvec spectrum) {
    SpectralField f;
    f.grid = &g;
    f.samples = g.to_samples(spectrum);
    f.spectrum = std::move(spectrum);
    return f;
}

SpectralField zero_field(const Grid& g) {
    SpectralField f;
    f.grid = &g;
    f.samples.assign(g.n(), cd(0.0));
    f.spectrum.assign(g.n(), cd(0.0));
    return f;
}

SpectralField multiplier_apply(const SpectralField& f, const std::function<cd(double)>& m) {
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i) {
        cd v = m(f.grid->k(i));
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("multiplier_apply: symbol not finite at a grid wavenumber");
        h[i] *= v;
    }
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField hilbert(const SpectralField& f) {
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i) {
        double k = f.grid->k(i);
        h[i] *= (k > 0) ? cd(0, -1) : (k < 0 ? cd(0, 1) : cd(0, 0));
    }
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField project_neg(const SpectralField& f) {
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i) {
        double k = f.grid->k(i);
        if (k > 0) h[i] = 0.0;
        else if (k == 0) h[i] *= 0.5;
    }
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField project_pos(const SpectralField& f) {
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i) {
        double k = f.grid->k(i);
        if (k < 0) h[i] = 0.0;
        else if (k == 0) h[i] *= 0.5;
    }
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField lowpass(const SpectralField& f, double K) {
    if (!(K > 0)) throw std::invalid_argument("lowpass: K must be positive");
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i)
        if (std::abs(f.grid->k(i)) > K) h[i] = 0.0;
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField dealias(const SpectralField& f) {
    const double cut = (2.0 / 3.0) * f.grid->kmax();
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i)
        if (std::abs(f.grid->k(i)) > cut) h[i] = 0.0;
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField deriv(const SpectralField& f, int order) {
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i) {
        cd ik(0.0, f.grid->k(i));
        cd w = 1.0;
        for (int p = 0; p < order; ++p) w *= ik;
        h[i] *= w;
    }
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField antideriv(const SpectralField& f) {
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i) {
        double k = f.grid->k(i);
        h[i] = (k == 0.0) ? cd(0.0) : h[i] / cd(0.0, k);
    }
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField conj(const SpectralField& f) {
    cvec s(f.samples);
    for (auto& v : s) v = std::conj(v);
    return from_samples(*f.grid, std::move(s));
}

SpectralField holo(const SpectralField& f) {
    cvec h(f.spectrum);
    for (int i = 0; i < f.n(); ++i) {
        double k = f.grid->k(i);
        if (k >= 0) h[i] = 0.0;
    }
    return from_spectrum(*f.grid, std::move(h));
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    SpectralField f;
    f.grid = a.grid;
    f.samples.resize(a.n());
    f.spectrum.resize(a.n());
    for (int i = 0; i < a.n(); ++i) {
        f.samples[i] = a.samples[i] + b.samples[i];
        f.spectrum[i] = a.spectrum[i] + b.spectrum[i];
    }
    return f;
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    SpectralField f;
    f.grid = a.grid;
    f.samples.resize(a.n());
    f.spectrum.resize(a.n());
    for (int i = 0; i < a.n(); ++i) {
        f.samples[i] = a.samples[i] - b.samples[i];
        f.spectrum[i] = a.spectrum[i] - b.spectrum[i];
    }
    return f;
}

SpectralField operator*(const SpectralField& a, const SpectralField& b) {
    cvec s(a.n());
    for (int i = 0; i < a.n(); ++i) s[i] = a.samples[i] * b.samples[i];
    return from_samples(*a.grid, std::move(s));
}

SpectralField operator*(cd a, const SpectralField& f) {
    SpectralField g;
    g.grid = f.grid;
    g.samples.resize(f.n());
    g.spectrum.resize(f.n());
    for (int i = 0; i < f.n(); ++i) {
        g.samples[i] = a * f.samples[i];
        g.spectrum[i] = a * f.spectrum[i];
    }
    return g;
}

SpectralField pointwise_div(const SpectralField& a, const SpectralField& b) {
    cvec s(a.n());
    for (int i = 0; i < a.n(); ++i) s[i] = a.samples[i] / b.samples[i];
    return from_samples(*a.grid, std::move(s));
}

cd mean(const SpectralField& f) { return f.spectrum[0]; }
cd integral(const SpectralField& f) { return f.length() * f.spectrum[0]; }

double norm_l2(const SpectralField& f) {
    double s = 0;
    for (const auto& c : f.spectrum) s += std::norm(c);
    return std::sqrt(f.length() * s);
}

double norm_hdot(const SpectralField& f, double s) {
    if (s < 0 && std::abs(f.spectrum[0]) > 1e-12 * (norm_l2(f) + 1e-300))
        throw std::invalid_argument("norm_hdot: negative s requires zero-mean input");
    double acc = 0;
    for (int i = 0; i < f.n(); ++i) {
        double k = f.grid->k(i);
        if (k == 0.0) continue;
        acc += std::pow(std::abs(k), 2 * s) * std::norm(f.spectrum[i]);
    }
    return std::sqrt(f.length() * acc);
}

double norm_h(const SpectralField& f, double s) {
    double acc = 0;
    for (int i = 0; i < f.n(); ++i) {
        double k = f.grid->k(i);
        acc += std::pow(1.0 + k * k, s) * std::norm(f.spectrum[i]);
    }
    return std::sqrt(f.length() * acc);
}

double norm_linf(const SpectralField& f) {
    double m = 0;
    for (const auto& v : f.samples) m = std::max(m, std::abs(v));
    return m;
}

double norm_energy_pair(const SpectralField& w, const SpectralField& q) {
    double a = norm_l2(w), b = norm_hdot(q, 0.5);
    return std::sqrt(a * a + b * b);
}

double norm_energy_pair_dot(const SpectralField& w, const SpectralField& q, int nderiv) {
    SpectralField wn = nderiv ? deriv(w, nderiv) : w;
    SpectralField qn = nderiv ? deriv(q, nderiv) : q;
    return norm_energy_pair(wn, qn);
}

bool is_holomorphic(const SpectralField& f, double tol) {
    double scale = 0;
    for (const auto& c : f.spectrum) scale = std::max(scale, std::abs(c));
    if (scale == 0) return true;
    for (int i = 0; i < f.n(); ++i)
        if (f.grid->k(i) >= 0 && std::abs(f.spectrum[i]) > tol * scale) return false;
    return true;
}

bool is_real_field(const SpectralField& f, double tol) {
    double scale = 0;
    for (const auto& c : f.spectrum) scale = std::max(scale, std::abs(c));
    if (scale == 0) return true;
    for (int i = 0; i < f.n(); ++i) {
        int j = f.grid->jindex(i);
        if (j == -f.n() / 2) continue; // unpaired Nyquist slot
        cd a = f.spectrum[i];
        cd b = std::conj(f.spectrum[f.grid->slot_of(-j)]);
        if (std::abs(a - b) > tol * scale) return false;
    }
    return true;
}

} // namespace wwbo
