#include "cavitykit/imaging.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "nlls.hpp"

namespace cavitykit {

FieldMap FieldMap::zeros(int n, double extent) {
    FieldMap f;
    f.n = n;
    f.dx = extent / n;
    f.values.assign((std::size_t)n * n, Cx{0.0, 0.0});
    return f;
}

FieldMap make_gaussian_pump(int n, double extent, double waist, Vec2 center) {
    FieldMap f = FieldMap::zeros(n, extent);
    double power = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = f.coord(i) - center.x;
            const double y = f.coord(j) - center.y;
            const double v = std::exp(-(x * x + y * y) / (waist * waist));
            f.at(i, j) = v;
            power += v * v;
        }
    const double norm = 1.0 / std::sqrt(power * f.dx * f.dx);
    for (auto& v : f.values) v *= norm;
    return f;
}

namespace {

using Mat = Eigen::MatrixXcd;

Mat to_matrix(const FieldMap& f) {
    Mat m(f.n, f.n);
    for (int i = 0; i < f.n; ++i)
        for (int j = 0; j < f.n; ++j) m(i, j) = f.at(i, j);
    return m;
}

FieldMap from_matrix(const Mat& m, double dx) {
    FieldMap f;
    f.n = (int)m.rows();
    f.dx = dx;
    f.values.resize((std::size_t)f.n * f.n);
    for (int i = 0; i < f.n; ++i)
        for (int j = 0; j < f.n; ++j) f.at(i, j) = m(i, j);
    return f;
}

// Per-branch separable kernel coefficients: G_b(r,r',t) =
// amp * exp(-lam |r-r'|^2/(2 w0^2)) * exp(-mu |r+r'|^2/(2 w0^2)).
struct BranchCoef {
    Cx amp, lam, mu;
};

std::array<BranchCoef, 4> branch_coefs(double t) {
    const Cx it(0.0, t);
    const double omt2 = 1.0 - t * t;
    const double opt2 = 1.0 + t * t;
    std::array<BranchCoef, 4> b;
    b[0] = {1.0 / omt2, Cx((1.0 + t) / (1.0 - t)), Cx((1.0 - t) / (1.0 + t))};
    b[1] = {1.0 / omt2, Cx((1.0 - t) / (1.0 + t)), Cx((1.0 + t) / (1.0 - t))};
    b[2] = {1.0 / opt2, (1.0 + it) * (1.0 + it) / opt2, (1.0 - it) * (1.0 - it) / opt2};
    b[3] = {1.0 / opt2, (1.0 - it) * (1.0 - it) / opt2, (1.0 + it) * (1.0 + it) / opt2};
    return b;
}

}  // namespace

FieldMap spectral_apply(const FieldMap& pump, const CavityParams& cavity, int n_max) {
    const int n = pump.n;
    const double w0 = cavity.w0;
    const int lmax = cavity.single_mode ? 0 : n_max;
    // orthonormal 1-D axis functions phi_l(x) on the grid
    Eigen::MatrixXd phi(lmax + 1, n);
    std::vector<double> h(lmax + 1);
    const double axis_norm = std::pow(2.0 / units::pi, 0.25) / std::sqrt(w0);
    for (int i = 0; i < n; ++i) {
        const double x = pump.coord(i);
        hermite_scaled_all(std::sqrt(2.0) * x / w0, h);
        const double damp = std::exp(-x * x / (w0 * w0));
        for (int l = 0; l <= lmax; ++l) phi(l, i) = axis_norm * h[l] * damp;
    }
    const Mat e = to_matrix(pump);
    const Mat overlaps = phi * e * phi.transpose() * (pump.dx * pump.dx);
    // weight and resynthesize
    const Cx ikt = Cx(0.0, 1.0) * cavity.kappa_tilde();
    Mat weighted = Mat::Zero(lmax + 1, lmax + 1);
    for (int l = 0; l <= lmax; ++l)
        for (int m = 0; m <= lmax; ++m) {
            const Cx w = mode_weight({l, m}, cavity);
            weighted(l, m) = ikt * w * overlaps(l, m);
        }
    const Mat out = phi.transpose() * weighted * phi;
    return from_matrix(out, pump.dx);
}

Cx longitudinal_overlap(const FieldMap& pump, ModeIndex mode, double w0) {
    const double axis_norm = std::pow(2.0 / units::pi, 0.25) / std::sqrt(w0);
    Cx sum = 0.0;
    std::vector<double> hx(mode.l + 1), hy(mode.m + 1);
    for (int i = 0; i < pump.n; ++i) {
        const double x = pump.coord(i);
        hermite_scaled_all(std::sqrt(2.0) * x / w0, hx);
        const double fx = axis_norm * hx[mode.l] * std::exp(-x * x / (w0 * w0));
        for (int j = 0; j < pump.n; ++j) {
            const double y = pump.coord(j);
            hermite_scaled_all(std::sqrt(2.0) * y / w0, hy);
            const double fy = axis_norm * hy[mode.m] * std::exp(-y * y / (w0 * w0));
            sum += fx * fy * pump.at(i, j);
        }
    }
    return sum * pump.dx * pump.dx;
}

FieldMap steady_state_field(const FieldMap& pump, const CavityParams& cavity,
                            const QuadratureSpec& spec) {
    const double w0 = cavity.w0;
    if (pump.extent() < 4.0 * w0)
        throw GridTooCoarse("steady_state_field: pump grid must cover >= 4 w0");
    if (cavity.single_mode) return spectral_apply(pump, cavity, 0);

    const double w_eff = kernel_field_hwhm(cavity, spec);
    if (pump.dx > w_eff / 4.0)
        throw GridTooCoarse("steady_state_field: grid spacing exceeds w_eff/4");

    const int n = pump.n;
    const Cx u = cavity.u();
    const double upper = std::exp(-cavity.alpha);
    // fixed t-grid; the apply integrand is smooth once folded with the pump
    QuadratureSpec aspec = spec;
    aspec.panels = std::min(spec.panels, 48);
    const auto edges = panel_edges(upper, aspec.panels, aspec.refinement_ratio);
    const int per_panel = 6;

    const Mat e = to_matrix(pump);
    Mat acc = Mat::Zero(n, n);
    Eigen::VectorXd xs(n);
    for (int i = 0; i < n; ++i) xs(i) = pump.coord(i);

    const Cx pref = Cx(0.0, 1.0) * cavity.kappa_tilde() * 2.0 / (units::pi * w0 * w0) *
                    std::exp(u * cavity.alpha) / cavity.epsilon_tilde() *
                    (pump.dx * pump.dx);

    Mat kx(n, n);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double h = (edges[p + 1] - edges[p]) / per_panel;
        for (int q = 0; q < per_panel; ++q) {
            const double t = edges[p] + (q + 0.5) * h;
            const Cx tw = std::exp((u - 1.0) * std::log(t)) * h * 0.25;
            for (const BranchCoef& b : branch_coefs(t)) {
                const Cx cl = b.lam / (2.0 * w0 * w0);
                const Cx cm = b.mu / (2.0 * w0 * w0);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double dm = xs(i) - xs(j);
                        const double dp = xs(i) + xs(j);
                        kx(i, j) = std::exp(-cl * (dm * dm) - cm * (dp * dp));
                    }
                acc.noalias() += (tw * b.amp) * (kx * e * kx.transpose());
            }
        }
    }
    acc *= pref;
    return from_matrix(acc, pump.dx);
}

FieldMap transmission_image(const FieldMap& field, const OpticsChain& chain) {
    if (chain.magnification <= 0.0)
        throw ConfigError("transmission_image: magnification must be positive");
    FieldMap out = field;
    out.dx = field.dx * chain.magnification;

    if (chain.psf_sigma > 0.0) {
        const int n = out.n;
        const int halfw = std::min(n - 1, (int)std::ceil(6.0 * chain.psf_sigma / out.dx));
        std::vector<double> kern(2 * halfw + 1);
        double ksum = 0.0;
        for (int k = -halfw; k <= halfw; ++k) {
            kern[k + halfw] =
                std::exp(-(k * out.dx) * (k * out.dx) / (2.0 * chain.psf_sigma * chain.psf_sigma));
            ksum += kern[k + halfw];
        }
        for (auto& v : kern) v /= ksum;
        // separable convolution of the field
        FieldMap tmp = out;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Cx s = 0.0;
                for (int k = -halfw; k <= halfw; ++k) {
                    const int ii = i + k;
                    if (ii < 0 || ii >= n) continue;
                    s += kern[k + halfw] * out.at(ii, j);
                }
                tmp.at(i, j) = s;
            }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Cx s = 0.0;
                for (int k = -halfw; k <= halfw; ++k) {
                    const int jj = j + k;
                    if (jj < 0 || jj >= n) continue;
                    s += kern[k + halfw] * tmp.at(i, jj);
                }
                out.at(i, j) = s;
            }
    }
    for (auto& v : out.values) v = Cx(std::norm(v), 0.0);
    return out;
}

GaussianBlob extract_gaussian_width(const FieldMap& intensity) {
    const int n = intensity.n;
    // moment-based initialization
    double vmin = intensity.values.front().real(), vmax = vmin;
    for (const auto& v : intensity.values) {
        vmin = std::min(vmin, v.real());
        vmax = std::max(vmax, v.real());
    }
    if (!(vmax > vmin)) throw FitDegenerate("extract_gaussian_width: flat map");
    double tot = 0.0, mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double w = std::max(0.0, intensity.at(i, j).real() - vmin);
            tot += w;
            mx += w * intensity.coord(i);
            my += w * intensity.coord(j);
        }
    mx /= tot;
    my /= tot;
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double w = std::max(0.0, intensity.at(i, j).real() - vmin);
            const double dx = intensity.coord(i) - mx;
            const double dy = intensity.coord(j) - my;
            cxx += w * dx * dx;
            cxy += w * dx * dy;
            cyy += w * dy * dy;
        }
    cxx /= tot;
    cxy /= tot;
    cyy /= tot;

    // quadratic-form parameterization: model = off + amp exp(-(a dx^2 + 2b dx dy + c dy^2)/2)
    const double det = cxx * cyy - cxy * cxy;
    if (det <= 0.0) throw FitDegenerate("extract_gaussian_width: degenerate moments");
    Eigen::VectorXd q0(7);
    q0 << vmax - vmin, mx, my, cyy / det, -cxy / det, cxx / det, vmin;

    detail::NllsProblem prob;
    prob.residual = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r((std::size_t)n * n);
        std::size_t idx = 0;
        for (int i = 0; i < n; ++i) {
            const double dx = intensity.coord(i) - q(1);
            for (int j = 0; j < n; ++j) {
                const double dy = intensity.coord(j) - q(2);
                const double quad = q(3) * dx * dx + 2.0 * q(4) * dx * dy + q(5) * dy * dy;
                const double m = q(6) + q(0) * std::exp(-0.5 * std::max(quad, -700.0));
                r(idx++) = intensity.at(i, j).real() - m;
            }
        }
        return r;
    };
    detail::NllsResult res;
    try {
        res = detail::levenberg_marquardt(prob, q0);
    } catch (const MaxIterations&) {
        throw FitDegenerate("extract_gaussian_width: fit did not converge");
    }
    const double a = res.q(3), b = res.q(4), c = res.q(5);
    const double tr = a + c;
    const double disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
    const double l1 = 0.5 * (tr - disc);  // smaller eigenvalue -> major axis
    const double l2 = 0.5 * (tr + disc);
    if (l1 <= 0.0 || res.q(0) <= 0.0)
        throw FitDegenerate("extract_gaussian_width: non-positive-definite result");

    GaussianBlob blob;
    blob.amplitude = res.q(0);
    blob.center = {res.q(1), res.q(2)};
    blob.offset = res.q(6);
    blob.sigma_major = 1.0 / std::sqrt(l1);
    blob.sigma_minor = 1.0 / std::sqrt(l2);
    blob.angle = 0.5 * std::atan2(2.0 * b, a - c) + units::pi / 2.0;
    // fold into (-pi/2, pi/2]
    while (blob.angle > units::pi / 2.0) blob.angle -= units::pi;
    while (blob.angle <= -units::pi / 2.0) blob.angle += units::pi;
    return blob;
}

double greens_width_estimate(double sigma_ccd, double sigma_psf, double sigma_pump,
                             double magnification) {
    const double rad = (sigma_ccd * sigma_ccd - sigma_psf * sigma_psf) /
                           (magnification * magnification) -
                       sigma_pump * sigma_pump;
    if (rad <= 0.0)
        throw NegativeRadicand(
            "greens_width_estimate: PSF/pump widths exceed the observed width");
    return std::sqrt(rad);
}

}  // namespace cavitykit
