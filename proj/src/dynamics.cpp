#include "cavitykit/dynamics.hpp"

#include <cmath>

#include "cavitykit/greens.hpp"

namespace cavitykit {

ModeBasis ModeBasis::build(const CloudParams& cloud, double w0, int n_max) {
    ModeBasis basis;
    basis.n_max = n_max;
    for (int n = 0; n <= n_max; n += 4)
        for (int l = 0; l <= n; ++l) basis.modes.push_back({l, n - l});

    const int lmax = n_max;
    const auto ix = axis_mode_overlaps(cloud.sigma_x, cloud.center.x, w0, lmax);
    const auto iy = axis_mode_overlaps(cloud.sigma_y, cloud.center.y, w0, lmax);
    const auto jx = axis_mode_gram(cloud.sigma_x, cloud.center.x, w0, lmax);
    const auto jy = axis_mode_gram(cloud.sigma_y, cloud.center.y, w0, lmax);

    const int m = basis.size();
    basis.overlap_i.resize(m);
    basis.o_factor.resize(m);
    basis.overlap_j.resize(m, m);
    for (int a = 0; a < m; ++a) {
        const ModeIndex& ma = basis.modes[a];
        basis.overlap_i(a) = ix[ma.l] * iy[ma.m];
        basis.o_factor(a) = ((ma.n() / 4) % 2 == 0) ? 1.0 : -1.0;  // cos(n pi/4)
        for (int b = 0; b < m; ++b) {
            const ModeIndex& mb = basis.modes[b];
            basis.overlap_j(a, b) = jx[ma.l][mb.l] * jy[ma.m][mb.m];
        }
    }
    return basis;
}

double RampProtocol::omega_at(double t) const {
    if (knots.empty()) return 0.0;
    if (t <= knots.front().first) return knots.front().second;
    if (t >= knots.back().first) return knots.back().second;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const auto& [t0, w0] = knots[i];
        const auto& [t1, w1] = knots[i + 1];
        if (t >= t0 && t <= t1)
            return w0 + (w1 - w0) * (t - t0) / std::max(t1 - t0, 1e-300);
    }
    return knots.back().second;
}

MeanFieldState seeded_state(const ModeBasis& basis, double seed_amplitude) {
    MeanFieldState s;
    s.psi_f = seed_amplitude;
    s.psi_0 = std::sqrt(1.0 - seed_amplitude * seed_amplitude);
    s.psi_b = 0.0;
    s.alphas = Eigen::VectorXcd::Zero(basis.size());
    return s;
}

StateDeriv eom_rhs(const MeanFieldState& state, const ModeBasis& basis,
                   const CloudEnergies& en, const CloudParams& cloud,
                   const CavityParams& cavity, const PumpParams& pump,
                   double omega_now) {
    const int m = basis.size();
    const double n_atoms = cloud.n_atoms;
    const double c = n_atoms * cavity.g0 * omega_now / (std::sqrt(2.0) * pump.delta_a);
    const double d = n_atoms * cavity.g0 * cavity.g0 / (2.0 * pump.delta_a);
    const double eta = en.e_trap + 2.0 * en.e_int;  // makes the normal state stationary
    const Cx i_unit(0.0, 1.0);

    const Cx psi0 = state.psi_0, psif = state.psi_f, psib = state.psi_b;
    const Cx order = psi0 * std::conj(psif) + std::conj(psi0) * psib;

    StateDeriv dv;
    dv.alphas.resize(m);
    // coherent mode sums
    Cx sum_io_alpha = 0.0;
    Cx sum_io_alpha_conj = 0.0;
    Eigen::VectorXcd jalpha = Eigen::VectorXcd::Zero(m);
    for (int a = 0; a < m; ++a) {
        const Cx io = basis.overlap_i(a) * basis.o_factor(a);
        sum_io_alpha += io * state.alphas(a);
        sum_io_alpha_conj += io * std::conj(state.alphas(a));
    }
    for (int a = 0; a < m; ++a) {
        Cx acc = 0.0;
        for (int b = 0; b < m; ++b)
            acc += basis.overlap_j(a, b) * basis.o_factor(b) * state.alphas(b);
        jalpha(a) = acc;
    }

    for (int a = 0; a < m; ++a) {
        const double delta_mu = cavity.delta_eff() - cavity.epsilon * basis.modes[a].n();
        const Cx io = basis.overlap_i(a) * basis.o_factor(a);
        const Cx rhs = -Cx(delta_mu, cavity.kappa) * state.alphas(a) + c * io * order +
                       d * basis.o_factor(a) * jalpha(a);
        dv.alphas(a) = -i_unit * rhs;
    }

    const double p0 = std::norm(psi0), pf = std::norm(psif), pb = std::norm(psib);
    const Cx rhs0 = (en.e_trap + en.e_int * (2.0 * p0 + 4.0 * pf + 4.0 * pb) - eta) * psi0 +
                    4.0 * en.e_int * std::conj(psi0) * psif * psib +
                    c * (sum_io_alpha * psif + sum_io_alpha_conj * psib);
    const Cx rhsf =
        (2.0 * n_atoms * en.e_recoil + en.e_trap +
         en.e_int * (4.0 * p0 + 3.0 * pf + 6.0 * pb) - eta) * psif +
        2.0 * en.e_int * psi0 * psi0 * std::conj(psib) + c * psi0 * sum_io_alpha_conj;
    const Cx rhsb =
        (2.0 * n_atoms * en.e_recoil + en.e_trap +
         en.e_int * (4.0 * p0 + 6.0 * pf + 3.0 * pb) - eta) * psib +
        2.0 * en.e_int * psi0 * psi0 * std::conj(psif) + c * psi0 * sum_io_alpha;

    dv.psi_0 = -i_unit * rhs0;
    dv.psi_f = -i_unit * rhsf;
    dv.psi_b = -i_unit * rhsb;
    return dv;
}

Eigen::VectorXcd adiabatic_mode_amplitudes(const MeanFieldState& state,
                                           const ModeBasis& basis,
                                           const CloudParams& cloud,
                                           const CavityParams& cavity,
                                           const PumpParams& pump, double omega_now) {
    const int m = basis.size();
    const double d = cloud.n_atoms * cavity.g0 * cavity.g0 / (2.0 * pump.delta_a);
    // expansion validity: dispersive mixing must stay perturbative
    double worst = 0.0;
    for (int a = 0; a < m; ++a) {
        const double delta_mu = cavity.delta_eff() - cavity.epsilon * basis.modes[a].n();
        worst = std::max(worst, std::abs(d * basis.overlap_j(a, a) /
                                         Cx(delta_mu, cavity.kappa)));
    }
    if (worst > 0.3)
        throw PerturbationInvalid(
            "adiabatic_mode_amplitudes: dispersive mixing parameter exceeds 0.3");

    const double c = cloud.n_atoms * cavity.g0 * omega_now / (std::sqrt(2.0) * pump.delta_a);
    const Cx order = state.psi_0 * std::conj(state.psi_f) +
                     std::conj(state.psi_0) * state.psi_b;
    Eigen::VectorXcd out(m);
    for (int a = 0; a < m; ++a) {
        const double da = cavity.delta_eff() - cavity.epsilon * basis.modes[a].n();
        const Cx den_a = Cx(da, cavity.kappa);
        Cx corr = 0.0;
        for (int b = 0; b < m; ++b) {
            const double db = cavity.delta_eff() - cavity.epsilon * basis.modes[b].n();
            corr += basis.overlap_j(a, b) * basis.overlap_i(b) * basis.o_factor(a) *
                    basis.o_factor(b) * basis.o_factor(b) / (den_a * Cx(db, cavity.kappa));
        }
        out(a) = c * order *
                 (basis.overlap_i(a) * basis.o_factor(a) / den_a + d * corr);
    }
    return out;
}

double flux_proxy(const MeanFieldState& state, double kappa) {
    return 2.0 * kappa * state.alphas.squaredNorm();
}

namespace {

// Dormand-Prince 5(4) coefficients
constexpr double A21 = 1.0 / 5.0;
constexpr double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0;
constexpr double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0;
constexpr double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0,
                 A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0;
constexpr double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0,
                 A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0;
constexpr double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0,
                 B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0;
constexpr double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0,
                 E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0;

using Vec = Eigen::VectorXcd;

Vec pack(const MeanFieldState& s) {
    Vec v(3 + s.alphas.size());
    v(0) = s.psi_0;
    v(1) = s.psi_f;
    v(2) = s.psi_b;
    v.tail(s.alphas.size()) = s.alphas;
    return v;
}

MeanFieldState unpack(const Vec& v, double t) {
    MeanFieldState s;
    s.psi_0 = v(0);
    s.psi_f = v(1);
    s.psi_b = v(2);
    s.alphas = v.tail(v.size() - 3);
    s.time = t;
    return s;
}

}  // namespace

Trajectory integrate(const MeanFieldState& state0, const ModeBasis& basis,
                     const CloudParams& cloud, const CavityParams& cavity,
                     const PumpParams& pump, const RampProtocol& ramp, double tol,
                     double dt_out) {
    const CloudEnergies en = cloud_energies(cloud, cavity.wavelength);
    auto rhs = [&](double t, const Vec& v) {
        const MeanFieldState s = unpack(v, t);
        const StateDeriv d = eom_rhs(s, basis, en, cloud, cavity, pump, ramp.omega_at(t));
        Vec out(v.size());
        out(0) = d.psi_0;
        out(1) = d.psi_f;
        out(2) = d.psi_b;
        out.tail(d.alphas.size()) = d.alphas;
        return out;
    };

    const double t_end = ramp.duration();
    const double h_min = std::max(t_end * 1e-14, 1e-18);
    double t = state0.time;
    Vec y = pack(state0);
    // initial step from the photon scale
    double h = std::min(dt_out, 0.1 / (std::abs(cavity.delta_eff()) + cavity.kappa + 1.0));

    Trajectory traj;
    auto record = [&](double tt, const Vec& vv) {
        TrajectorySample sample;
        sample.state = unpack(vv, tt);
        sample.omega = ramp.omega_at(tt);
        sample.flux = flux_proxy(sample.state, cavity.kappa);
        traj.samples.push_back(std::move(sample));
    };
    record(t, y);
    double next_out = t + dt_out;

    Vec k1 = rhs(t, y);
    while (t < t_end) {
        h = std::min(h, t_end - t);
        if (next_out <= t_end) h = std::min(h, next_out - t);  // land on sample times
        if (h < h_min) throw StepSizeUnderflow("integrate: step size underflow");

        const Vec k2 = rhs(t + A21 * h, y + h * (A21 * k1));
        const Vec k3 = rhs(t + 0.3 * h, y + h * (A31 * k1 + A32 * k2));
        const Vec k4 = rhs(t + 0.8 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        const Vec k5 =
            rhs(t + 8.0 / 9.0 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        const Vec k6 =
            rhs(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        const Vec ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        const Vec k7 = rhs(t + h, ynew);
        const Vec err_vec =
            h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

        double err = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc = tol * (1.0 + std::max(std::abs(y(i)), std::abs(ynew(i))));
            err = std::max(err, std::abs(err_vec(i)) / sc);
        }
        if (err <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7;  // FSAL
            if (std::abs(t - next_out) < 1e-12 * std::max(1.0, std::abs(t)) ||
                t >= next_out) {
                record(t, y);
                next_out += dt_out;
            }
        }
        const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
        h *= fac;
    }
    if (traj.samples.back().state.time < t_end - 1e-12 * t_end) record(t, y);
    return traj;
}

OnsetResult detect_onset(const Trajectory& traj, double threshold_flux) {
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        if (traj.samples[i].flux >= threshold_flux) {
            OnsetResult out;
            if (i == 0) {
                out.onset_time = traj.samples[0].state.time;
                out.onset_omega = traj.samples[0].omega;
                return out;
            }
            const auto& lo = traj.samples[i - 1];
            const auto& hi = traj.samples[i];
            const double f =
                (threshold_flux - lo.flux) / std::max(hi.flux - lo.flux, 1e-300);
            out.onset_time =
                lo.state.time + f * (hi.state.time - lo.state.time);
            const double w =
                lo.omega + f * (hi.omega - lo.omega);
            out.onset_omega = w;
            return out;
        }
    }
    throw NoOnset("detect_onset: flux proxy never crossed the threshold");
}

}  // namespace cavitykit
