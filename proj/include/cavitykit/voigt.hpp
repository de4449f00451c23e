#pragma once

#include <complex>

namespace cavitykit {

// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im(z) >= 0, Humlicek's
// four-region rational approximation (relative accuracy ~1e-4, standard for
// line-shape fitting).
std::complex<double> faddeeva_w(std::complex<double> z);

// Area-normalized Voigt profile with Gaussian sigma and Lorentzian HWHM gamma.
double voigt_profile(double x, double sigma, double gamma);

// Olivero-Longbothum HWHM of the Voigt profile.
double voigt_hwhm(double sigma, double gamma);

}  // namespace cavitykit
