// Cavity Green's-function kernels on the even confocal resonance: the Mehler
// closed form, the {+-t, +-it} symmetrization that enforces the n = 0 mod 4
// mode selection, the t-integral giving the synthetic-mode kernel, and the
// Gaussian-smeared finite-size kernels for one and two kernel insertions.
//
// Every kernel is available through two independent routes (KernelMethod):
// direct quadrature of the closed forms and brute-force mode sums. The two
// must agree within the configured cross-check tolerance; tests enforce it.
#pragma once

#include <complex>
#include <vector>

#include "cavitykit/cavity_model.hpp"
#include "cavitykit/quadrature.hpp"

namespace cavitykit {

enum class KernelMethod { ModeSum, Quadrature, ClosedForm };

struct KernelSample {
    std::complex<double> value;
    Vec2 r{};
    Vec2 r_prime{};
    KernelMethod method = KernelMethod::Quadrature;
    double rel_err_est = 0.0;
};

using Cx = std::complex<double>;

// Generating-function kernel sum_mu Xi_mu(r) Xi_mu(r') t^n in closed form.
// Supports complex t exactly (needed for the +-it symmetrization terms);
// throws SingularKernel when |1 - t^2| is below `floor`.
Cx mehler_kernel(Vec2 r, Vec2 r_prime, Cx t, double w0, double floor = 1e-12);

// Average of the four Mehler evaluations at {t, -t, it, -it}; keeps only
// mode families with n = 0 mod 4.
Cx symmetrize(Vec2 r, Vec2 r_prime, double t, double w0);

// Point kernel D(r, r') = (e^{u alpha}/eps_t) Int_0^{e^-alpha} G_sym t^{u-1} dt.
// Diverges logarithmically at alpha = 0 when r = r' or r = -r' (the local or
// mirror peak); such inputs are rejected with DivergentIntegral.
KernelSample greens_point(Vec2 r, Vec2 r_prime, const CavityParams& cavity,
                          const QuadratureSpec& spec);

// Brute-force double sum over l + m <= n_max using mode_weight and the
// normalized mode functions.
Cx mode_sum_oracle(Vec2 r, Vec2 r_prime, const CavityParams& cavity, int n_max);

// Gaussian-smeared kernel <D> over two identical clouds centered at r_i, r_j.
// Anisotropic clouds (sigma_x != sigma_y) factor per axis.
KernelSample greens_cloud(Vec2 r_i, Vec2 r_j, const CloudParams& cloud,
                          const CavityParams& cavity, const QuadratureSpec& spec,
                          KernelMethod method = KernelMethod::Quadrature);

// Triple-density smeared double-kernel integral <D D> (the dispersive-shift
// term), via the double (t, t') quadrature or the double mode sum.
KernelSample greens_dispersive(Vec2 r_i, Vec2 r_j, Vec2 r_k,
                               const CloudParams& cloud, const CavityParams& cavity,
                               const QuadratureSpec& spec,
                               KernelMethod method = KernelMethod::Quadrature);

// Density-mode overlaps I_mu = Int rho Xi_mu and J_{mu,nu} = Int rho Xi Xi,
// evaluated by 2-D grid quadrature. Cross-check oracles for the smeared
// kernels; the production paths use 1-D factorized overlaps instead.
double overlap_I(ModeIndex mode, const CloudParams& cloud, double w0);
double overlap_J(ModeIndex a, ModeIndex b, const CloudParams& cloud, double w0);

// Smeared closed-form kernels at a single t (exposed for tests and for the
// imaging apply). 1-D per-axis factors; t may be any of the symmetrization
// branches (real or purely imaginary).
Cx gprime_1d(double xi, double xj, Cx t, double gamma, double w0);
Cx gdisp_1d(double xi, double xj, double xk, Cx t, Cx tp, double gamma, double w0);
Cx gprime_sym(Vec2 ri, Vec2 rj, double t, double gx, double gy, double w0);
Cx gdisp_sym(Vec2 ri, Vec2 rj, Vec2 rk, double t, double tp, double gx, double gy,
             double w0);

// 1-D density-mode overlaps along one axis: Ix_l = Int rho(x - x0) h_l e^{-x^2/w0^2}
// and the Gram matrix Jx_{l,l'} = Int rho h_l h_l' e^{-2x^2/w0^2}, for all
// l <= lmax at once. Building blocks of the factorized mode sums.
std::vector<double> axis_mode_overlaps(double sigma, double x0, double w0, int lmax);
std::vector<std::vector<double>> axis_mode_gram(double sigma, double x0, double w0,
                                                int lmax);

// Difference between the full four-branch symmetrization and the {+-t}-only
// (even parity) version of the point kernel: the nonlocal cosine-type
// contribution. Reported as a diagnostic, no claims attached.
Cx nonlocal_term(Vec2 r, Vec2 r_prime, const CavityParams& cavity,
                 const QuadratureSpec& spec);

// HWHM of the field profile Re D(x xhat, 0) / Re D(0,0), in um. This is the
// synthetic-mode waist: both the microscope resolution and the
// photon-mediated interaction range.
double kernel_field_hwhm(const CavityParams& cavity, const QuadratureSpec& spec);

// Per-cloud tables of 1-D mode overlaps powering the fast ModeSum route:
// S_n = sum_{l+m=n} (Ix_l Iy_m)^2 for the first-order kernel and the family
// matrix Q for the dispersive double sum. Built once per (cloud, position);
// evaluation against any (epsilon, alpha, detuning) is then a short weighted
// sum, which is what makes the global fit and bootstrap affordable.
class CloudModeTable {
  public:
    CloudModeTable(const CloudParams& cloud, double w0, int n_max_first = 0,
                   int n_max_disp = 0);

    Cx eval_first(const CavityParams& cavity) const;   // <D>
    Cx eval_disp(const CavityParams& cavity) const;    // <D D>
    int n_first() const { return n1_; }
    int n_disp() const { return n2_; }
    double tail_estimate() const { return tail_rel_; }

  private:
    int n1_ = 0;
    int n2_ = 0;
    double tail_rel_ = 0.0;
    std::vector<double> s_n_;               // indexed by family j, n = 4j
    std::vector<std::vector<double>> q_;    // family-by-family dispersive table
};

}  // namespace cavitykit
