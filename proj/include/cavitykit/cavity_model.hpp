// Domain types and scalar building blocks: cavity geometry/loss/dispersion,
// Hermite-Gauss transverse mode functions, mode weights for the even confocal
// resonance, and the cloud energies entering the self-organization threshold.
#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "cavitykit/errors.hpp"
#include "cavitykit/units.hpp"

namespace cavitykit {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    double dot(Vec2 b) const { return x * b.x + y * b.y; }
    double norm2() const { return x * x + y * y; }
};

struct ModeIndex {
    int l = 0;
    int m = 0;
    int n() const { return l + m; }
};

// Cavity geometry, loss and mode-spectrum parameters. Frequencies are angular
// (rad/s); delta_c is the signed pump-cavity detuning and is negative in
// operation. delta_0 is a global offset added to every recorded detuning.
struct CavityParams {
    double w0 = 35.0;          // fundamental waist, um
    double kappa = 0.0;        // field decay rate
    double epsilon = 0.0;      // dispersion per transverse mode index
    double alpha = 0.0;        // exponential mode cutoff, >= 0
    double delta_c = 0.0;      // pump-cavity detuning (negative)
    double delta_0 = 0.0;      // global detuning offset
    double g0 = 0.0;           // single-atom coupling
    double wavelength = 0.780; // um
    int n_max = 600;           // truncation order for brute-force sums
    bool single_mode = false;  // surrogate: all weight on the n = 0 mode

    double delta_eff() const { return delta_c + delta_0; }
    double epsilon_tilde() const { return -epsilon / delta_eff(); }
    double kappa_tilde() const { return kappa / delta_eff(); }
    std::complex<double> u() const {
        return std::complex<double>(1.0, kappa_tilde()) / epsilon_tilde();
    }

    // Throws ConfigError on violated invariants (dispersive regime, signs).
    void validate() const;
};

// BEC probe: transverse position (midplane, z0 = 0), Gaussian widths mapped
// from the Thomas-Fermi radii, atom number and trap/collision parameters.
struct CloudParams {
    Vec2 center{0.0, 0.0};     // um
    double sigma_x = 1.0;      // um
    double sigma_y = 1.0;      // um
    double n_atoms = 1.0;
    std::array<double, 3> trap_freqs{0.0, 0.0, 0.0};  // angular, rad/s
    double scattering_length = 100.0 * units::bohr_radius / units::um_to_m;  // um
    double atom_mass = units::rb87_mass;  // kg

    void validate(double w0) const;
};

struct PumpParams {
    double rabi = 0.0;     // transverse pump Rabi strength, rad/s
    double delta_a = 0.0;  // atomic detuning, rad/s (large and negative)
};

// Scalar energies of the trapped cloud, all as angular frequencies.
// e_trap and e_int carry the atom-number factor; e_dw is per atom.
struct CloudEnergies {
    double e_recoil = 0.0;
    double mu_tf = 0.0;
    double e_trap = 0.0;
    double e_int = 0.0;
    double e_dw = 0.0;
};

// Bare Hermite-Gauss product H_l(sqrt2 x/w0) H_m(sqrt2 y/w0) exp(-r^2/w0^2),
// evaluated by the three-term recurrence. Total function.
double hermite_gauss(ModeIndex mode, Vec2 point, double w0);

// Mode function with the 1/sqrt(2^n l! m!) normalization folded into the
// recurrence, so that sums over mode families reproduce the Mehler generating
// function and stay finite up to n ~ 1000. Xi_00(0) = 1.
double mode_function(ModeIndex mode, Vec2 point, double w0);

// Fills out[k] with the scaled Hermite value h_k(xi), k = 0..out.size()-1,
// where h_k = H_k / sqrt(2^k k!). Stable to large k.
void hermite_scaled_all(double xi, std::span<double> out);

// Weight of one mode in the even-resonance synthetic-mode superposition:
// exp(-alpha n) / (1 + eps_tilde n + i kap_tilde) carrying the midplane
// quadrature selection, which vanishes unless n = 0 mod 4.
std::complex<double> mode_weight(ModeIndex mode, const CavityParams& cavity);

// Finite-size factor gamma = (1 - 2 sigma^2/w0^2) / (1 + 2 sigma^2/w0^2).
double gamma_factor(double sigma, double w0);

CloudEnergies cloud_energies(const CloudParams& cloud, double wavelength_um);

// Thomas-Fermi helpers. mu_tf_from_radii returns the chemical potential as an
// angular frequency given atom number and the three TF radii (um); radii and
// trap frequencies are related by R_i = sqrt(2 mu / (m w_i^2)).
double mu_tf_from_radii(double n_atoms, double rx_um, double ry_um, double rz_um,
                        double scattering_length_um, double atom_mass);
std::array<double, 3> trap_freqs_from_tf_radii(double n_atoms, double rx_um,
                                               double ry_um, double rz_um,
                                               double scattering_length_um,
                                               double atom_mass);
std::array<double, 3> tf_radii_from_trap(const CloudParams& cloud);

}  // namespace cavitykit
