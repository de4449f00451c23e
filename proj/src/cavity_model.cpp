#include "cavitykit/cavity_model.hpp"

#include <cmath>

namespace cavitykit {

using units::hbar;
using units::pi;
using units::um_to_m;

void CavityParams::validate() const {
    if (w0 <= 0.0) throw ConfigError("cavity: w0 must be positive");
    if (kappa <= 0.0) throw ConfigError("cavity: kappa must be positive");
    if (epsilon < 0.0) throw ConfigError("cavity: epsilon must be >= 0");
    if (alpha < 0.0) throw ConfigError("cavity: alpha must be >= 0");
    if (wavelength <= 0.0) throw ConfigError("cavity: wavelength must be positive");
    if (delta_eff() >= 0.0)
        throw ConfigError("cavity: delta_c + delta_0 must be negative (red detuning)");
    if (!single_mode) {
        if (epsilon_tilde() <= 0.0)
            throw ConfigError("cavity: epsilon_tilde = -epsilon/delta_c must be positive");
        if (std::abs(kappa_tilde()) >= 1.0)
            throw ConfigError("cavity: |kappa/delta_c| must be < 1 (dispersive regime)");
    }
}

void CloudParams::validate(double w0) const {
    if (sigma_x <= 0.0 || sigma_y <= 0.0)
        throw ConfigError("cloud: sigma_x, sigma_y must be positive");
    if (n_atoms < 1.0) throw ConfigError("cloud: n_atoms must be >= 1");
    const double r0 = std::sqrt(center.norm2());
    if (r0 >= w0 * std::sqrt(pi) / 2.0)
        throw ConfigError("cloud: |r0| must be < w0 sqrt(pi)/2 (single-quadrature window)");
}

namespace {

// Bare physicists' Hermite polynomial by the H_{k+1} = 2 xi H_k - 2 k H_{k-1}
// recurrence.
double hermite_bare(int n, double xi) {
    if (n == 0) return 1.0;
    double hkm1 = 1.0;
    double hk = 2.0 * xi;
    for (int k = 1; k < n; ++k) {
        const double hkp1 = 2.0 * xi * hk - 2.0 * k * hkm1;
        hkm1 = hk;
        hk = hkp1;
    }
    return hk;
}

double hermite_scaled(int n, double xi) {
    if (n == 0) return 1.0;
    double hkm1 = 1.0;
    double hk = std::sqrt(2.0) * xi;
    for (int k = 1; k < n; ++k) {
        const double hkp1 =
            (std::sqrt(2.0) * xi * hk - std::sqrt(double(k)) * hkm1) / std::sqrt(double(k + 1));
        hkm1 = hk;
        hk = hkp1;
    }
    return hk;
}

}  // namespace

double hermite_gauss(ModeIndex mode, Vec2 point, double w0) {
    const double xix = std::sqrt(2.0) * point.x / w0;
    const double xiy = std::sqrt(2.0) * point.y / w0;
    return hermite_bare(mode.l, xix) * hermite_bare(mode.m, xiy) *
           std::exp(-point.norm2() / (w0 * w0));
}

double mode_function(ModeIndex mode, Vec2 point, double w0) {
    const double xix = std::sqrt(2.0) * point.x / w0;
    const double xiy = std::sqrt(2.0) * point.y / w0;
    return hermite_scaled(mode.l, xix) * hermite_scaled(mode.m, xiy) *
           std::exp(-point.norm2() / (w0 * w0));
}

void hermite_scaled_all(double xi, std::span<double> out) {
    if (out.empty()) return;
    out[0] = 1.0;
    if (out.size() == 1) return;
    out[1] = std::sqrt(2.0) * xi;
    for (std::size_t k = 1; k + 1 < out.size(); ++k) {
        out[k + 1] = (std::sqrt(2.0) * xi * out[k] - std::sqrt(double(k)) * out[k - 1]) /
                     std::sqrt(double(k + 1));
    }
}

std::complex<double> mode_weight(ModeIndex mode, const CavityParams& cavity) {
    const int n = mode.n();
    if (cavity.single_mode)
        return n == 0 ? 1.0 / std::complex<double>(1.0, cavity.kappa_tilde()) : 0.0;
    // cos^2(n pi/4) cos^2(n pi/2) selects n = 0 mod 4 with unit weight
    if (n % 4 != 0) return 0.0;
    return std::exp(-cavity.alpha * n) /
           std::complex<double>(1.0 + cavity.epsilon_tilde() * n, cavity.kappa_tilde());
}

double gamma_factor(double sigma, double w0) {
    const double s = 2.0 * sigma * sigma / (w0 * w0);
    return (1.0 - s) / (1.0 + s);
}

double mu_tf_from_radii(double n_atoms, double rx_um, double ry_um, double rz_um,
                        double scattering_length_um, double atom_mass) {
    const double a = scattering_length_um * um_to_m;
    const double vol = rx_um * ry_um * rz_um * um_to_m * um_to_m * um_to_m;
    return 15.0 * hbar * a * n_atoms / (2.0 * atom_mass * vol);  // mu/hbar, rad/s
}

std::array<double, 3> trap_freqs_from_tf_radii(double n_atoms, double rx_um,
                                               double ry_um, double rz_um,
                                               double scattering_length_um,
                                               double atom_mass) {
    const double mu = mu_tf_from_radii(n_atoms, rx_um, ry_um, rz_um,
                                       scattering_length_um, atom_mass) * hbar;
    std::array<double, 3> w{};
    const std::array<double, 3> r{rx_um, ry_um, rz_um};
    for (int i = 0; i < 3; ++i)
        w[i] = std::sqrt(2.0 * mu / (atom_mass * r[i] * r[i] * um_to_m * um_to_m));
    return w;
}

std::array<double, 3> tf_radii_from_trap(const CloudParams& cloud) {
    const double mu = cloud_energies(cloud, 0.780).mu_tf * hbar;
    std::array<double, 3> r{};
    for (int i = 0; i < 3; ++i)
        r[i] = std::sqrt(2.0 * mu / (cloud.atom_mass * cloud.trap_freqs[i] * cloud.trap_freqs[i])) /
               um_to_m;
    return r;
}

CloudEnergies cloud_energies(const CloudParams& cloud, double wavelength_um) {
    CloudEnergies e;
    const double k = 2.0 * pi / (wavelength_um * um_to_m);
    e.e_recoil = hbar * k * k / (2.0 * cloud.atom_mass);
    // mu_TF = (15 hbar^2 a N wx wy wz)^{2/5} m^{1/5} / 2, returned as mu/hbar
    const double a = cloud.scattering_length * um_to_m;
    const double prod = cloud.trap_freqs[0] * cloud.trap_freqs[1] * cloud.trap_freqs[2];
    const double mu_energy =
        0.5 * std::pow(15.0 * hbar * hbar * a * cloud.n_atoms * prod, 0.4) *
        std::pow(cloud.atom_mass, 0.2);
    e.mu_tf = mu_energy / hbar;
    e.e_trap = (3.0 / 7.0) * e.mu_tf * cloud.n_atoms;
    e.e_int = (2.0 / 7.0) * e.mu_tf * cloud.n_atoms;
    e.e_dw = 2.0 * e.e_recoil + (8.0 / 7.0) * e.mu_tf;
    return e;
}

}  // namespace cavitykit
