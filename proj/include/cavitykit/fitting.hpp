// Global parameter extraction from threshold datasets: the rearranged
// threshold observable y = E_dw/(N Omega_c^2), bounded damped Gauss-Newton
// over {epsilon, alpha, delta_0, A_i}, bootstrap resampling, synthetic
// dataset generation, and resolution extraction by Voigt deconvolution.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cavitykit/threshold.hpp"

namespace cavitykit {

enum class ScanKind { DetuningScan, PositionScan };

struct ScanRowData {
    ScanKind kind = ScanKind::DetuningScan;
    double x = 0.0;           // detuning (rad/s) for detuning rows, position (um) otherwise
    double delta_c = 0.0;     // recorded detuning for this row (rad/s)
    double omega_c_sq = 0.0;  // measured critical strength squared, (rad/s)^2
    double n_atoms = 1.0;     // N at threshold
    CloudParams cloud;        // shape, trap and position (center.x = x for position rows)
    double weight = 1.0;
};

struct ScanDataset {
    std::vector<ScanRowData> rows;
    int amplitude_index = 0;
    CavityParams cavity_ref;  // shared geometry/loss; epsilon/alpha/delta_0 come from the fit
    PumpParams pump_ref;
};

struct FitParams {
    double epsilon = 0.0;  // rad/s
    double alpha = 0.0;
    double delta_0 = 0.0;  // rad/s
    std::vector<double> amplitudes;
};

struct FitOptions {
    KernelMethod model_method = KernelMethod::ModeSum;
    bool include_dispersive = true;
    int max_iterations = 120;
    double fd_rel_step = 1e-6;
    double chi2_rel_tol = 1e-12;
    double epsilon_min = 2.0 * units::pi * 1e3;  // 1 kHz cyclic floor
};

struct FitResult {
    FitParams params;
    double sigma_epsilon = 0.0;
    double sigma_alpha = 0.0;   // one-sided when alpha sits on the bound
    double sigma_delta_0 = 0.0;
    Eigen::MatrixXd covariance; // shape-parameter block (epsilon, alpha, delta_0)
    double chi2_reduced = 0.0;
    int n_iterations = 0;
};

// Precomputed per-row mode tables so the model evaluates in microseconds for
// any (epsilon, alpha, delta_0). Built once per dataset collection and shared
// by fit, Jacobian and bootstrap passes.
class FitWorkspace {
  public:
    explicit FitWorkspace(const std::vector<ScanDataset>& datasets,
                          const FitOptions& opts = {});

    // y_model before the per-dataset amplitude factor.
    double model(std::size_t flat_row, double epsilon, double alpha,
                 double delta_0) const;
    double observed(std::size_t flat_row) const;  // y = E_dw/(N Omega^2)
    double weight(std::size_t flat_row) const;
    int amplitude_index(std::size_t flat_row) const;
    std::size_t rows() const { return index_.size(); }
    int n_amplitudes() const { return n_amp_; }

  private:
    struct RowRef {
        const ScanRowData* row;
        const ScanDataset* ds;
        int table;  // index into tables_ (ModeSum) or -1 (quadrature route)
        double y;
        double e_dw;
    };
    std::vector<RowRef> index_;
    std::vector<CloudModeTable> tables_;
    FitOptions opts_;
    int n_amp_ = 0;
};

// Weighted residual vector r_k = w_k (y_k - A_i model_k).
std::vector<double> residuals(const FitParams& params,
                              const std::vector<ScanDataset>& datasets,
                              const FitOptions& opts = {});
std::vector<double> residuals(const FitParams& params, const FitWorkspace& ws);

FitResult fit_global(const std::vector<ScanDataset>& datasets, const FitParams& init,
                     const FitOptions& opts = {});

struct BootstrapResult {
    std::vector<FitParams> ensemble;
    FitParams mean;
    FitParams median;
    Eigen::MatrixXd covariance;  // (epsilon, alpha, delta_0) block
    int n_failed = 0;
};

BootstrapResult bootstrap(const std::vector<ScanDataset>& datasets,
                          const FitParams& init, int n_resamples, std::uint64_t seed,
                          const FitOptions& opts = {});

// Test seam: resampler(replica, n_rows) returns per-row multiplicities.
BootstrapResult bootstrap_with_sampler(
    const std::vector<ScanDataset>& datasets, const FitParams& init, int n_resamples,
    const std::function<std::vector<int>(int, std::size_t)>& resampler,
    const FitOptions& opts = {});

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct DatasetDesign {
    ScanKind kind = ScanKind::DetuningScan;
    CloudParams cloud;          // shape and traps; center.x overridden for position scans
    double n_atoms = 3e5;
    double delta_c = 0.0;       // fixed detuning for position scans (rad/s)
    std::vector<double> xs;     // detunings (rad/s) or positions (um)
    double amplitude = 1.0;     // true A_i
};

struct ScanDesign {
    std::vector<DatasetDesign> datasets;
    CavityParams cavity_ref;
    PumpParams pump_ref;
};

struct SynthesisReport {
    std::vector<ScanDataset> datasets;
    int dropped_rows = 0;  // rows without a threshold
};

SynthesisReport synthesize_dataset(const FitParams& truth, const ScanDesign& design,
                                   double noise_frac, std::uint64_t seed,
                                   const FitOptions& opts = {});

// ---------------------------------------------------------------------------
// Profile analysis
// ---------------------------------------------------------------------------

struct DeconvolutionResult {
    double hwhm_total = 0.0;    // HWHM of the smeared interaction peak, um
    double hwhm_lorentz = 0.0;  // deconvolved kernel HWHM (the resolution), um
    double lorentz_unc = 0.0;
};

// Fits a Voigt with the Gaussian component pinned to the density-kernel width
// (sigma_x/sqrt(2) in scan coordinates; the mirror-peak argument doubles all
// widths on output) and a free Lorentzian. Throws FitDegenerate when the
// Lorentzian width is consistent with zero.
DeconvolutionResult voigt_deconvolve(std::span<const double> xs,
                                     std::span<const double> ys,
                                     const CloudParams& cloud);

// Offset-Gaussian peak fit; returns the fitted center (the shift) and writes
// the centered coordinates back. Throws NoPeak.
double peak_offset_correction(std::span<double> xs, std::span<const double> ys);

}  // namespace cavitykit
