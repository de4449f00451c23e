// Superradiant-threshold prediction: the cavity interaction energy E_cav,
// the critical pump strength from -2 Re{E_cav} = N E_dw, the 4x4 linear
// stability system around the normal state, and detuning/position scans.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cavitykit/greens.hpp"

namespace cavitykit {

struct ThresholdOptions {
    bool include_dispersive = true;
    KernelMethod method = KernelMethod::Quadrature;
    double n0_reference = 3e5;           // N_0 for normalized pump strengths
    std::optional<double> frozen_e_dw;   // override E_dw (angular), for scaling checks
};

struct ThresholdResult {
    double omega_c = 0.0;                 // critical Rabi strength, rad/s
    double omega_c_sq_norm = 0.0;         // (N/N0) * omega_c^2
    Cx e_cav_per_omega_sq{};              // E_cav / Omega^2
    Cx first_order{};                     // <D> integral
    Cx dispersive{};                      // (N g0^2 / 2 dA dC) <D D> addend
    double enhancement = 0.0;             // Re <D>, the C_mm/C scale for this cloud
};

// E_cav at pump strength omega. Scales exactly as omega^2.
Cx e_cav(const CloudParams& cloud, const CavityParams& cavity,
         const PumpParams& pump, double omega, const QuadratureSpec& spec,
         const ThresholdOptions& opts = {});

// Critical pump strength. Throws NoThreshold when Re{E_cav/Omega^2} >= 0.
ThresholdResult critical_pump(const CloudParams& cloud, const CavityParams& cavity,
                              const PumpParams& pump, const QuadratureSpec& spec,
                              const ThresholdOptions& opts = {});

struct StabilityReport {
    Eigen::Matrix4cd matrix;
    std::array<Cx, 4> analytic_eigs;
    std::array<Cx, 4> numeric_eigs;
    bool unstable = false;
    double slow_rate = 0.0;  // kappa-driven imaginary part, reported but unused
};

// Builds the stability matrix literally, solves it numerically, and compares
// with the analytic eigenvalues +-sqrt(4 N E_r (N E_r + E_cav + 2 E_int)).
// The unstable flag follows the real part of the radicand only; the slow
// kappa-driven rate is reported separately and never drives the decision.
StabilityReport stability_matrix(const CloudParams& cloud, const CavityParams& cavity,
                                 const PumpParams& pump, double omega,
                                 const QuadratureSpec& spec,
                                 const ThresholdOptions& opts = {});

struct ScanRow {
    double x = 0.0;            // detuning (rad/s) or position (um)
    double omega_c = 0.0;
    double omega_c_norm = 0.0; // sqrt(N/N0) * omega_c
    double enhancement = 0.0;
    bool ok = false;
};

std::vector<ScanRow> scan_detuning(const CloudParams& cloud,
                                   const CavityParams& cavity_base,
                                   const PumpParams& pump,
                                   std::span<const double> detunings,
                                   const QuadratureSpec& spec,
                                   const ThresholdOptions& opts = {});

std::vector<ScanRow> scan_position(const CloudParams& cloud_template,
                                   const CavityParams& cavity,
                                   const PumpParams& pump,
                                   std::span<const double> x_positions,
                                   const QuadratureSpec& spec,
                                   const ThresholdOptions& opts = {});

}  // namespace cavitykit
