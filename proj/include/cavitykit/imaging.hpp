// All-optical pipeline: longitudinal-pump steady state via the cavity kernel,
// substrate magnification and Gaussian-PSF imaging chain, 2-D Gaussian width
// extraction, and the quadrature-difference kernel-width estimate.
#pragma once

#include <complex>
#include <vector>

#include "cavitykit/greens.hpp"

namespace cavitykit {

// Square complex field grid centered on the cavity axis.
struct FieldMap {
    int n = 0;           // samples per axis
    double dx = 0.0;     // um per sample (same both axes)
    std::vector<Cx> values;  // row-major, index = ix * n + iy

    static FieldMap zeros(int n, double extent);
    double coord(int i) const { return (i - 0.5 * (n - 1)) * dx; }
    double extent() const { return n * dx; }
    Cx& at(int ix, int iy) { return values[(std::size_t)ix * n + iy]; }
    const Cx& at(int ix, int iy) const { return values[(std::size_t)ix * n + iy]; }
};

struct OpticsChain {
    double magnification = 1.0;  // m < 1 demagnifies
    double psf_sigma = 0.0;      // Gaussian PSF width at the camera plane, um
};

// Gaussian pump beam E(r) = exp(-|r - center|^2 / waist^2), normalized to
// unit power sum(|E|^2) dA = 1.
FieldMap make_gaussian_pump(int n, double extent, double waist, Vec2 center);

// Steady-state intracavity field from a longitudinal pump: the kernel apply
// Phi = i kappa_t (2/(pi w0^2)) Int D(r, r') E_p(r') dr'. Implemented as a
// sum of separable local/mirror Gaussian kernels over the t-quadrature nodes,
// so the full matrix apply costs a few hundred small matrix products.
// Throws GridTooCoarse when the sampling cannot resolve the kernel.
FieldMap steady_state_field(const FieldMap& pump, const CavityParams& cavity,
                            const QuadratureSpec& spec);

// Spectral route: Phi = i kappa_t sum_mu W_mu f_mu Xi_mu. Oracle for the
// kernel apply and the exact path for the single-mode surrogate.
FieldMap spectral_apply(const FieldMap& pump, const CavityParams& cavity, int n_max);

// Overlap f_mu = Int Xi_mu E_p of the pump with one (orthonormalized) mode.
Cx longitudinal_overlap(const FieldMap& pump, ModeIndex mode, double w0);

// Camera-plane intensity: coordinate rescale by m, Gaussian PSF convolution
// of the field, then |.|^2.
FieldMap transmission_image(const FieldMap& field, const OpticsChain& chain);

struct GaussianBlob {
    double sigma_major = 0.0;
    double sigma_minor = 0.0;
    double angle = 0.0;  // radians, major axis vs x
    Vec2 center{};
    double amplitude = 0.0;
    double offset = 0.0;
};

// Rotated 2-D Gaussian fit of a single-blob intensity map.
GaussianBlob extract_gaussian_width(const FieldMap& intensity);

// sigma(D)^2 = (sigma_ccd^2 - sigma_psf^2)/m^2 - sigma_pump^2. All widths are
// field (not intensity) Gaussian sigmas. Throws NegativeRadicand.
double greens_width_estimate(double sigma_ccd, double sigma_psf, double sigma_pump,
                             double magnification);

inline double hwhm_from_sigma(double sigma) {
    return sigma * std::sqrt(2.0 * std::log(2.0));
}

}  // namespace cavitykit
