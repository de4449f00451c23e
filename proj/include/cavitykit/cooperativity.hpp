// Cooperativity enhancement C_mm/C: the on-center kernel value for point
// particles and extended clouds, with special-function closed forms (Lerch
// transcendent, Appell F1) cross-checking the direct quadrature, plus the
// hard-cutoff model used to count participating modes.
#pragma once

#include <complex>

#include "cavitykit/greens.hpp"

namespace cavitykit {

enum class EnhancementMethod { Quadrature, LerchClosedForm, AppellClosedForm };

struct EnhancementResult {
    double ratio = 0.0;     // C_mm / C
    double c_mm = 0.0;      // ratio * c_single
    EnhancementMethod method = EnhancementMethod::Quadrature;
    double c_single = 5.2;  // g0^2/(kappa gamma_perp) anchor for this cavity
};

struct EnhancementPair {
    EnhancementResult quadrature;
    EnhancementResult closed_form;
};

// Lerch transcendent P(z, 1, a) = sum z^n / (n + a). Direct series for
// |z| <= 0.99, integral representation Int_0^1 t^{a-1}/(1 - z t) dt beyond.
Cx lerch_phi1(Cx z, Cx a);

// Appell F1(a, b1, b2, 1 + a, x, y) through its one-dimensional integral
// representation a * Int_0^1 s^{a-1} (1-sx)^{-b1} (1-sy)^{-b2} ds, valid for
// the c = a + 1 case used here (x, y real < 1).
Cx appell_f1_row(Cx a, double b1, double b2, double x, double y);

// Point particle at the cavity center. Requires alpha > 0 (the alpha = 0
// point kernel diverges); returns both the quadrature and the Lerch routes.
EnhancementPair enhancement_point(const CavityParams& cavity,
                                  const QuadratureSpec& spec, double c_single = 5.2);

// Isotropic Gaussian cloud at the center (sigma_x = sigma_y).
EnhancementPair enhancement_cloud_iso(const CavityParams& cavity,
                                      const CloudParams& cloud,
                                      const QuadratureSpec& spec,
                                      double c_single = 5.2);

// Anisotropic cloud; the closed form pairs two Appell F1 evaluations.
EnhancementPair enhancement_cloud_aniso(const CavityParams& cavity,
                                        const CloudParams& cloud,
                                        const QuadratureSpec& spec,
                                        double c_single = 5.2);

// Hard-cutoff degenerate model: exact sum over l, m <= M (M even) with the
// n = 0 mod 4 selection, plus the published large-M asymptote
// M/pi + 2/pi + sqrt(2). The exact sum is authoritative; see tests for the
// measured gap between the two.
struct SquareCutoff {
    double exact = 0.0;
    double asymptote = 0.0;
};
SquareCutoff square_cutoff_enhancement(int M);

// Smallest even M whose exact hard-cutoff enhancement reaches c_ratio, and
// the participating-mode count ceil((M+1)^2 / 4).
struct ModeCount {
    int m_cutoff = 0;
    long modes = 0;
};
ModeCount effective_mode_count(double c_ratio);

}  // namespace cavitykit
