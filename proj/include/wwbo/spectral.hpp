#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

// Periodic Fourier toolbox. Conventions used throughout:
//   spectrum[slot of mode k] = (1/L) * int_0^L f(a) e^{-ika} da   (discrete: fft/n)
//   wavenumbers k_j = 2*pi*j/L, j in FFTW index order 0,1,...,n/2-1,-n/2,...,-1
//   Plancherel: int |f|^2 = L * sum |f_hat|^2

namespace wwbo {

using cd = std::complex<double>;
using cvec = std::vector<cd>;

class Grid {
public:
    // n must be a power of two >= 16, length > 0
    Grid(int n, double length);
    ~Grid();
    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    int n() const { return n_; }
    double length() const { return L_; }
    double spacing() const { return L_ / n_; }
    double k(int slot) const { return k_[slot]; }
    int jindex(int slot) const { return j_[slot]; }
    double x(int slot) const { return x_[slot]; }
    const std::vector<double>& wavenumbers() const { return k_; }
    // largest represented |k|
    double kmax() const { return k_max_; }
    // slot holding signed mode index j (j in [-n/2, n/2-1])
    int slot_of(int j) const { return j >= 0 ? j : j + n_; }

    cvec to_spectrum(const cvec& samples) const;
    cvec to_samples(const cvec& spectrum) const;

private:
    int n_;
    double L_, k_max_;
    std::vector<double> k_, x_;
    std::vector<int> j_;
    mutable std::mutex mtx_; // guards buf_ during execute
    void* plan_fwd_;
    void* plan_bwd_;
    cd* buf_in_;
    cd* buf_out_;
};

// A periodic field with synchronized point samples and Fourier coefficients.
struct SpectralField {
    const Grid* grid = nullptr;
    cvec samples;
    cvec spectrum;

    int n() const { return grid->n(); }
    double length() const { return grid->length(); }
};

SpectralField from_samples(const Grid& g, cvec samples);
SpectralField from_spectrum(const Grid& g, cvec spectrum);
SpectralField zero_field(const Grid& g);

// core multiplier ops
SpectralField multiplier_apply(const SpectralField& f, const std::function<cd(double)>& m);
SpectralField hilbert(const SpectralField& f);          // -i sign(k), 0 at k=0
SpectralField project_neg(const SpectralField& f);      // 1 (k<0), 1/2 (k=0), 0 (k>0)
SpectralField project_pos(const SpectralField& f);      // complement: P + Pbar = I
SpectralField lowpass(const SpectralField& f, double K);// sharp cutoff |k| <= K
SpectralField dealias(const SpectralField& f);          // zero |k| > (2/3) kmax
SpectralField deriv(const SpectralField& f, int order = 1);
SpectralField antideriv(const SpectralField& f);        // 1/(ik), zero-mean in and out
SpectralField conj(const SpectralField& f);
SpectralField holo(const SpectralField& f);             // project_neg then zero the mean

// pointwise algebra (dealiasing is the caller's job where it matters)
SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(const SpectralField& a, const SpectralField& b);
SpectralField operator*(cd a, const SpectralField& f);
SpectralField pointwise_div(const SpectralField& a, const SpectralField& b);

cd mean(const SpectralField& f);       // spectrum at k=0
cd integral(const SpectralField& f);   // L * mean

// norms; Hdot^s excludes the zero mode and for s < 0 requires zero-mean input
double norm_l2(const SpectralField& f);
double norm_hdot(const SpectralField& f, double s);
double norm_h(const SpectralField& f, double s);   // weight (1+k^2)^s on |f_hat|^2
double norm_linf(const SpectralField& f);
// energy space H = L^2 x Hdot^{1/2} and its homogeneous ladder
double norm_energy_pair(const SpectralField& w, const SpectralField& q);
double norm_energy_pair_dot(const SpectralField& w, const SpectralField& q, int nderiv);

bool is_holomorphic(const SpectralField& f, double tol = 1e-10);
bool is_real_field(const SpectralField& f, double tol = 1e-10);

} // namespace wwbo
