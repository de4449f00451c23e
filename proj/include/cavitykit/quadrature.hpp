// Composite midpoint quadrature on a geometrically refined panel grid.
// The kernel integrands peak at the upper endpoint t = e^{-alpha}, so panel
// lengths shrink geometrically toward it; accuracy is driven by doubling the
// midpoint count per panel until successive estimates agree.
#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "cavitykit/errors.hpp"

namespace cavitykit {

struct QuadratureSpec {
    int panels = 80;
    double refinement_ratio = 1.18;   // geometric panel-length ratio, > 1
    double target_rel_err = 1e-8;
    int initial_points = 4;           // midpoints per panel at the first pass
    int max_doublings = 8;

    void validate() const {
        if (panels < 4) throw ConfigError("quadrature: panels must be >= 4");
        if (refinement_ratio <= 1.0)
            throw ConfigError("quadrature: refinement_ratio must be > 1");
        if (target_rel_err <= 0.0 || target_rel_err > 1e-3)
            throw ConfigError("quadrature: target_rel_err must be in (0, 1e-3]");
    }

    // A spec suited to the smooth double (t, t') cloud integrals: fewer
    // panels, looser target.
    static QuadratureSpec for_double_integral() {
        return QuadratureSpec{48, 1.15, 1e-6, 2, 6};
    }
};

// Panel edges on [0, upper] with lengths in geometric progression, the
// smallest panel adjacent to `upper`.
std::vector<double> panel_edges(double upper, int panels, double ratio);

struct QuadResult {
    std::complex<double> value;
    double rel_err_est = 0.0;
};

// Integrates f over [0, upper] on the clustered grid; throws
// QuadratureNotConverged if the panel-doubling estimate misses the target.
QuadResult integrate_clustered(const std::function<std::complex<double>(double)>& f,
                               double upper, const QuadratureSpec& spec);

// Same machinery for a tensor-product double integral over [0,u1] x [0,u2].
QuadResult integrate_clustered_2d(
    const std::function<std::complex<double>(double, double)>& f, double u1,
    double u2, const QuadratureSpec& spec);

}  // namespace cavitykit
