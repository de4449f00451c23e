#include "cavitykit/cooperativity.hpp"

#include <cmath>
#include <vector>

namespace cavitykit {

namespace {

// Geometric midpoint grid on [0, 1] clustered at 1, for the near-singular
// special-function integrands.
Cx integrate_unit_clustered(const std::function<Cx(double)>& f, double target) {
    QuadratureSpec spec;
    spec.panels = 96;
    spec.refinement_ratio = 1.35;
    spec.target_rel_err = target;
    spec.max_doublings = 10;
    return integrate_clustered(f, 1.0, spec).value;
}

}  // namespace

Cx lerch_phi1(Cx z, Cx a) {
    if (a.real() <= 0.0) throw ConfigError("lerch_phi1: Re(a) must be positive");
    const bool real_z = z.imag() == 0.0;
    if (std::abs(z) >= 1.0 && !(real_z && z.real() < 1.0))
        throw ConfigError("lerch_phi1: need |z| < 1 or real z < 1");
    if (std::abs(z) <= 0.99) {
        Cx sum = 0.0;
        Cx zn = 1.0;
        const long cap = 10'000'000;
        for (long n = 0; n < cap; ++n) {
            const Cx term = zn / (a + double(n));
            sum += term;
            if (n > 8 && std::abs(term) < 1e-17 * std::abs(sum)) return sum;
            zn *= z;
        }
        throw SeriesNotConverged("lerch_phi1: series cap reached");
    }
    auto f = [&](double t) { return std::exp((a - 1.0) * std::log(t)) / (1.0 - z * t); };
    return integrate_unit_clustered(f, 1e-10);
}

Cx appell_f1_row(Cx a, double b1, double b2, double x, double y) {
    if (x >= 1.0 || y >= 1.0) throw ConfigError("appell_f1_row: need x, y < 1");
    auto f = [&](double s) {
        return std::exp((a - 1.0) * std::log(s)) *
               std::pow(Cx(1.0 - s * x, 0.0), -b1) * std::pow(Cx(1.0 - s * y, 0.0), -b2);
    };
    return a * integrate_unit_clustered(f, 1e-10);
}

namespace {

EnhancementResult make_result(double ratio, EnhancementMethod m, double c_single) {
    return {ratio, ratio * c_single, m, c_single};
}

}  // namespace

EnhancementPair enhancement_point(const CavityParams& cavity,
                                  const QuadratureSpec& spec, double c_single) {
    if (cavity.single_mode) {
        const double kt = cavity.kappa_tilde();
        const double r = 1.0 / (1.0 + kt * kt);
        return {make_result(r, EnhancementMethod::Quadrature, c_single),
                make_result(r, EnhancementMethod::LerchClosedForm, c_single)};
    }
    if (cavity.alpha <= 0.0)
        throw DivergentIntegral("enhancement_point: alpha = 0 point value diverges");
    const double quad =
        greens_point({0, 0}, {0, 0}, cavity, spec).value.real();
    const double et = cavity.epsilon_tilde();
    const Cx closed = lerch_phi1(std::exp(-4.0 * cavity.alpha), cavity.u() / 4.0) / (4.0 * et);
    return {make_result(quad, EnhancementMethod::Quadrature, c_single),
            make_result(closed.real(), EnhancementMethod::LerchClosedForm, c_single)};
}

EnhancementPair enhancement_cloud_iso(const CavityParams& cavity,
                                      const CloudParams& cloud,
                                      const QuadratureSpec& spec, double c_single) {
    if (cloud.sigma_x != cloud.sigma_y)
        throw ConfigError("enhancement_cloud_iso: requires sigma_x = sigma_y");
    const double g = gamma_factor(cloud.sigma_x, cavity.w0);
    const double quad =
        greens_cloud({0, 0}, {0, 0}, cloud, cavity, spec).value.real();
    const double et = cavity.epsilon_tilde();
    const Cx closed = (1.0 + g) * (1.0 + g) / (16.0 * et) *
                      lerch_phi1(std::pow(g, 4) * std::exp(-4.0 * cavity.alpha),
                                 cavity.u() / 4.0);
    return {make_result(quad, EnhancementMethod::Quadrature, c_single),
            make_result(closed.real(), EnhancementMethod::LerchClosedForm, c_single)};
}

EnhancementPair enhancement_cloud_aniso(const CavityParams& cavity,
                                        const CloudParams& cloud,
                                        const QuadratureSpec& spec, double c_single) {
    const double gx = gamma_factor(cloud.sigma_x, cavity.w0);
    const double gy = gamma_factor(cloud.sigma_y, cavity.w0);
    if (gx <= -1.0 || gx >= 1.0 || gy <= -1.0 || gy >= 1.0)
        throw ConfigError("enhancement_cloud_aniso: gamma outside (-1, 1)");
    const double quad =
        greens_cloud({0, 0}, {0, 0}, cloud, cavity, spec).value.real();
    const double et = cavity.epsilon_tilde();
    const Cx u = cavity.u();
    const double x = gx * gx * std::exp(-2.0 * cavity.alpha);
    const double y = gy * gy * std::exp(-2.0 * cavity.alpha);
    const Cx closed = (1.0 + gx) * (1.0 + gy) / (8.0 * u * et) *
                      (appell_f1_row(u / 2.0, 0.5, 0.5, -x, -y) +
                       appell_f1_row(u / 2.0, 0.5, 0.5, x, y));
    return {make_result(quad, EnhancementMethod::Quadrature, c_single),
            make_result(closed.real(), EnhancementMethod::AppellClosedForm, c_single)};
}

SquareCutoff square_cutoff_enhancement(int M) {
    if (M < 0 || M % 2 != 0 || M > 200)
        throw ConfigError("square_cutoff_enhancement: M must be even in [0, 200]");
    // h_{2p}(0)^2 = C(2p, p)/4^p via the ratio recurrence (2p-1)/(2p)
    const int P = M / 2;
    std::vector<double> c(P + 1);
    c[0] = 1.0;
    for (int p = 1; p <= P; ++p) c[p] = c[p - 1] * (2.0 * p - 1.0) / (2.0 * p);
    double exact = 0.0;
    for (int p = 0; p <= P; ++p)
        for (int q = 0; q <= P; ++q)
            if ((p + q) % 2 == 0) exact += c[p] * c[q];
    const double asym = M / units::pi + 2.0 / units::pi + std::sqrt(2.0);
    return {exact, asym};
}

ModeCount effective_mode_count(double c_ratio) {
    if (c_ratio < 1.0) throw ConfigError("effective_mode_count: c_ratio must be >= 1");
    int M = 0;
    while (M <= 200 && square_cutoff_enhancement(M).exact < c_ratio) M += 2;
    const long modes = (long)std::ceil((M + 1.0) * (M + 1.0) / 4.0);
    return {M, modes};
}

}  // namespace cavitykit
