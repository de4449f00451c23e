// Time-domain mean-field model: coupled equations for the condensate
// components (psi_0, psi_F, psi_B) and the even-resonance mode amplitudes,
// with adiabatic elimination of the photons as a closed form, an adaptive
// embedded Runge-Kutta integrator, and superradiant-onset detection on the
// photon-flux proxy.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cavitykit/cavity_model.hpp"

namespace cavitykit {

// Truncated even-resonance mode set (n = 0 mod 4 up to n_max) with its
// density overlaps I_mu, J_{mu,nu} and longitudinal factors O_mu = (-1)^{n/4}.
struct ModeBasis {
    std::vector<ModeIndex> modes;
    Eigen::VectorXd overlap_i;     // I_mu
    Eigen::MatrixXd overlap_j;     // J_{mu,nu}
    Eigen::VectorXd o_factor;      // O_mu
    int n_max = 0;

    static ModeBasis build(const CloudParams& cloud, double w0, int n_max);
    int size() const { return (int)modes.size(); }
};

struct MeanFieldState {
    Cx psi_0{1.0, 0.0};
    Cx psi_f{0.0, 0.0};
    Cx psi_b{0.0, 0.0};
    Eigen::VectorXcd alphas;
    double time = 0.0;

    double atomic_norm() const {
        return std::norm(psi_0) + std::norm(psi_f) + std::norm(psi_b);
    }
};

struct RampProtocol {
    std::vector<std::pair<double, double>> knots;  // (t, Omega)
    double seed_amplitude = 1e-6;

    double omega_at(double t) const;
    double duration() const { return knots.empty() ? 0.0 : knots.back().first; }
};

// Normal state with a small symmetry-breaking seed on psi_F; mean-field
// superradiance never starts from the exact normal state.
MeanFieldState seeded_state(const ModeBasis& basis, double seed_amplitude);

struct StateDeriv {
    Cx psi_0, psi_f, psi_b;
    Eigen::VectorXcd alphas;
};

StateDeriv eom_rhs(const MeanFieldState& state, const ModeBasis& basis,
                   const CloudEnergies& energies, const CloudParams& cloud,
                   const CavityParams& cavity, const PumpParams& pump,
                   double omega_now);

// Instantaneous photon steady state including the first-order dispersive
// correction. Throws PerturbationInvalid when the mode-mixing expansion
// parameter exceeds 0.3.
Eigen::VectorXcd adiabatic_mode_amplitudes(const MeanFieldState& state,
                                           const ModeBasis& basis,
                                           const CloudParams& cloud,
                                           const CavityParams& cavity,
                                           const PumpParams& pump, double omega_now);

double flux_proxy(const MeanFieldState& state, double kappa);

struct TrajectorySample {
    MeanFieldState state;
    double omega = 0.0;
    double flux = 0.0;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
};

// Adaptive Dormand-Prince 5(4) integration with dense sampling every dt_out.
Trajectory integrate(const MeanFieldState& state0, const ModeBasis& basis,
                     const CloudParams& cloud, const CavityParams& cavity,
                     const PumpParams& pump, const RampProtocol& ramp, double tol,
                     double dt_out);

struct OnsetResult {
    double onset_time = 0.0;
    double onset_omega = 0.0;
};

// First crossing of the flux proxy above threshold_flux. Throws NoOnset.
OnsetResult detect_onset(const Trajectory& traj, double threshold_flux);

}  // namespace cavitykit
