#include "cavitykit/threshold.hpp"

#include <algorithm>
#include <cmath>

#include "cavitykit/parallel.hpp"

namespace cavitykit {

namespace {

struct CavBracket {
    Cx first;       // <D>
    Cx disp_addend; // (N g0^2 / 2 dA dC) <D D>
};

CavBracket cav_bracket(const CloudParams& cloud, const CavityParams& cavity,
                       const PumpParams& pump, const QuadratureSpec& spec,
                       const ThresholdOptions& opts) {
    CavBracket b;
    const Vec2 r0 = cloud.center;
    b.first = greens_cloud(r0, r0, cloud, cavity, spec, opts.method).value;
    b.disp_addend = 0.0;
    if (opts.include_dispersive) {
        const Cx dd = greens_dispersive(r0, r0, r0, cloud, cavity, spec, opts.method).value;
        const double coef =
            cloud.n_atoms * cavity.g0 * cavity.g0 / (2.0 * pump.delta_a * cavity.delta_eff());
        b.disp_addend = coef * dd;
    }
    return b;
}

}  // namespace

Cx e_cav(const CloudParams& cloud, const CavityParams& cavity, const PumpParams& pump,
         double omega, const QuadratureSpec& spec, const ThresholdOptions& opts) {
    cavity.validate();
    const CavBracket b = cav_bracket(cloud, cavity, pump, spec, opts);
    const double n = cloud.n_atoms;
    const double pref = n * n * cavity.g0 * cavity.g0 * omega * omega /
                        (2.0 * pump.delta_a * pump.delta_a * cavity.delta_eff());
    return pref * (b.first + b.disp_addend);
}

ThresholdResult critical_pump(const CloudParams& cloud, const CavityParams& cavity,
                              const PumpParams& pump, const QuadratureSpec& spec,
                              const ThresholdOptions& opts) {
    cavity.validate();
    cloud.validate(cavity.w0);
    const CavBracket b = cav_bracket(cloud, cavity, pump, spec, opts);
    const double n = cloud.n_atoms;
    const double pref_per_omega2 = n * n * cavity.g0 * cavity.g0 /
                                   (2.0 * pump.delta_a * pump.delta_a * cavity.delta_eff());
    const Cx e_per_omega2 = pref_per_omega2 * (b.first + b.disp_addend);
    if (e_per_omega2.real() >= 0.0)
        throw NoThreshold("critical_pump: Re{E_cav}/Omega^2 >= 0 (no red-detuned threshold)");

    const double e_dw = opts.frozen_e_dw
                            ? *opts.frozen_e_dw
                            : cloud_energies(cloud, cavity.wavelength).e_dw;
    const double omega_c_sq = n * e_dw / (-2.0 * e_per_omega2.real());

    ThresholdResult out;
    out.omega_c = std::sqrt(omega_c_sq);
    out.omega_c_sq_norm = omega_c_sq * n / opts.n0_reference;
    out.e_cav_per_omega_sq = e_per_omega2;
    out.first_order = b.first;
    out.dispersive = b.disp_addend;
    out.enhancement = b.first.real();
    return out;
}

StabilityReport stability_matrix(const CloudParams& cloud, const CavityParams& cavity,
                                 const PumpParams& pump, double omega,
                                 const QuadratureSpec& spec,
                                 const ThresholdOptions& opts) {
    const CloudEnergies en = cloud_energies(cloud, cavity.wavelength);
    const double ner = cloud.n_atoms * en.e_recoil;
    const double eint = en.e_int;
    const Cx ec = e_cav(cloud, cavity, pump, omega, spec, opts);
    const Cx ecs = std::conj(ec);

    StabilityReport rep;
    Eigen::Matrix4cd& m = rep.matrix;
    m.setZero();
    m(0, 0) = 2.0 * ner + 2.0 * eint + ecs;
    m(0, 3) = 2.0 * eint + ecs;
    m(1, 1) = 2.0 * ner + 2.0 * eint + ec;
    m(1, 2) = 2.0 * eint + ec;
    m(2, 1) = -(2.0 * eint + ec);
    m(2, 2) = -(2.0 * ner + 2.0 * eint + ec);
    m(3, 0) = -(2.0 * eint + ecs);
    m(3, 3) = -(2.0 * ner + 2.0 * eint + ecs);

    const Cx radicand = 4.0 * ner * (ner + ec + 2.0 * eint);
    const Cx s = std::sqrt(radicand);
    rep.analytic_eigs = {s, -s, std::conj(s), -std::conj(s)};

    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> solver(m, false);
    for (int i = 0; i < 4; ++i) rep.numeric_eigs[i] = solver.eigenvalues()(i);

    auto key = [](const Cx& z) { return std::make_pair(z.real(), z.imag()); };
    std::sort(rep.analytic_eigs.begin(), rep.analytic_eigs.end(),
              [&](const Cx& a, const Cx& b) { return key(a) < key(b); });
    std::sort(rep.numeric_eigs.begin(), rep.numeric_eigs.end(),
              [&](const Cx& a, const Cx& b) { return key(a) < key(b); });

    rep.unstable = radicand.real() < 0.0;
    double slow = 0.0;
    for (const Cx& e : rep.analytic_eigs) slow = std::max(slow, std::abs(e.imag()));
    rep.slow_rate = rep.unstable ? 0.0 : slow;
    return rep;
}

std::vector<ScanRow> scan_detuning(const CloudParams& cloud,
                                   const CavityParams& cavity_base,
                                   const PumpParams& pump,
                                   std::span<const double> detunings,
                                   const QuadratureSpec& spec,
                                   const ThresholdOptions& opts) {
    std::vector<ScanRow> rows(detunings.size());
    parallel_for(detunings.size(), [&](std::size_t i) {
        CavityParams cav = cavity_base;
        cav.delta_c = detunings[i];
        ScanRow row;
        row.x = detunings[i];
        try {
            const ThresholdResult t = critical_pump(cloud, cav, pump, spec, opts);
            row.omega_c = t.omega_c;
            row.omega_c_norm = std::sqrt(cloud.n_atoms / opts.n0_reference) * t.omega_c;
            row.enhancement = t.enhancement;
            row.ok = true;
        } catch (const DomainError&) {
            row.ok = false;
        }
        rows[i] = row;
    });
    return rows;
}

std::vector<ScanRow> scan_position(const CloudParams& cloud_template,
                                   const CavityParams& cavity,
                                   const PumpParams& pump,
                                   std::span<const double> x_positions,
                                   const QuadratureSpec& spec,
                                   const ThresholdOptions& opts) {
    const double limit = cavity.w0 * std::sqrt(units::pi) / 2.0;
    for (double x : x_positions)
        if (std::abs(x) >= limit)
            throw ConfigError("scan_position: |x| must be < w0 sqrt(pi)/2");
    std::vector<ScanRow> rows(x_positions.size());
    parallel_for(x_positions.size(), [&](std::size_t i) {
        CloudParams cl = cloud_template;
        cl.center = {x_positions[i], cloud_template.center.y};
        ScanRow row;
        row.x = x_positions[i];
        try {
            const ThresholdResult t = critical_pump(cl, cavity, pump, spec, opts);
            row.omega_c = t.omega_c;
            row.omega_c_norm = std::sqrt(cl.n_atoms / opts.n0_reference) * t.omega_c;
            row.enhancement = t.enhancement;
            row.ok = true;
        } catch (const DomainError&) {
            row.ok = false;
        }
        rows[i] = row;
    });
    return rows;
}

}  // namespace cavitykit
