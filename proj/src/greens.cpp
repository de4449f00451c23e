#include "cavitykit/greens.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace cavitykit {

namespace {

constexpr Cx I_UNIT{0.0, 1.0};

// Gauss-Legendre nodes/weights on [-1, 1], computed once per order by Newton
// iteration on the Legendre recurrence.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    const double eps = 1e-15;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(units::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < eps) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// The four symmetrization branches of t.
std::array<Cx, 4> branches(double t) {
    return {Cx(t, 0.0), Cx(-t, 0.0), Cx(0.0, t), Cx(0.0, -t)};
}

bool near_zero(Vec2 v, double scale) { return v.norm2() < scale * scale; }

}  // namespace

Cx mehler_kernel(Vec2 r, Vec2 rp, Cx t, double w0, double floor) {
    const Cx one_m_t2 = 1.0 - t * t;
    if (std::abs(one_m_t2) < floor)
        throw SingularKernel("mehler_kernel: |1 - t^2| below floor");
    const double a = (r.norm2() + rp.norm2()) / (w0 * w0);
    const double b = r.dot(rp) / (w0 * w0);
    return std::exp(-(1.0 + t * t) / one_m_t2 * a + 4.0 * t / one_m_t2 * b) / one_m_t2;
}

Cx symmetrize(Vec2 r, Vec2 rp, double t, double w0) {
    Cx s = 0.0;
    for (const Cx& b : branches(t)) s += mehler_kernel(r, rp, b, w0);
    return 0.25 * s;
}

Cx mode_sum_oracle(Vec2 r, Vec2 rp, const CavityParams& cavity, int n_max) {
    const double w0 = cavity.w0;
    n_max = std::min(n_max, 4000);
    if (cavity.single_mode) {
        return mode_function({0, 0}, r, w0) * mode_function({0, 0}, rp, w0) /
               Cx(1.0, cavity.kappa_tilde());
    }
    const int len = n_max + 1;
    std::vector<double> hx(len), hy(len), hpx(len), hpy(len);
    hermite_scaled_all(std::sqrt(2.0) * r.x / w0, hx);
    hermite_scaled_all(std::sqrt(2.0) * r.y / w0, hy);
    hermite_scaled_all(std::sqrt(2.0) * rp.x / w0, hpx);
    hermite_scaled_all(std::sqrt(2.0) * rp.y / w0, hpy);
    std::vector<double> ax(len), ay(len);
    for (int i = 0; i < len; ++i) {
        ax[i] = hx[i] * hpx[i];
        ay[i] = hy[i] * hpy[i];
    }
    const double gauss =
        std::exp(-(r.norm2() + rp.norm2()) / (w0 * w0));
    const double et = cavity.epsilon_tilde();
    const double kt = cavity.kappa_tilde();
    Cx total = 0.0;
    for (int n = 0; n <= n_max; n += 4) {
        double sn = 0.0;
        for (int l = 0; l <= n; ++l) sn += ax[l] * ay[n - l];
        total += sn * std::exp(-cavity.alpha * n) / Cx(1.0 + et * n, kt);
    }
    return total * gauss;
}

KernelSample greens_point(Vec2 r, Vec2 rp, const CavityParams& cavity,
                          const QuadratureSpec& spec) {
    const double w0 = cavity.w0;
    if (cavity.single_mode) {
        const Cx v = mode_function({0, 0}, r, w0) * mode_function({0, 0}, rp, w0) /
                     Cx(1.0, cavity.kappa_tilde());
        return {v, r, rp, KernelMethod::ClosedForm, 0.0};
    }
    if (cavity.alpha < 1e-9 &&
        (near_zero(r - rp, 1e-9 * w0) || near_zero(r + rp, 1e-9 * w0)))
        throw DivergentIntegral(
            "greens_point: alpha = 0 point kernel diverges on the local/mirror peak");

    const Cx u = cavity.u();
    const double et = cavity.epsilon_tilde();
    const double upper = std::exp(-cavity.alpha);
    auto f = [&](double t) {
        return symmetrize(r, rp, t, w0) * std::exp((u - 1.0) * std::log(t));
    };
    const QuadResult q = integrate_clustered(f, upper, spec);
    const Cx val = std::exp(u * cavity.alpha) / et * q.value;
    return {val, r, rp, KernelMethod::Quadrature, q.rel_err_est};
}

Cx nonlocal_term(Vec2 r, Vec2 rp, const CavityParams& cavity,
                 const QuadratureSpec& spec) {
    const double w0 = cavity.w0;
    const Cx u = cavity.u();
    const double upper = std::exp(-cavity.alpha);
    auto f_even = [&](double t) {
        const Cx g = 0.5 * (mehler_kernel(r, rp, Cx(t, 0.0), w0) +
                            mehler_kernel(r, rp, Cx(-t, 0.0), w0));
        return g * std::exp((u - 1.0) * std::log(t));
    };
    const Cx even = std::exp(u * cavity.alpha) / cavity.epsilon_tilde() *
                    integrate_clustered(f_even, upper, spec).value;
    return greens_point(r, rp, cavity, spec).value - even;
}

// ---------------------------------------------------------------------------
// 1-D smeared closed forms. The 2-D isotropic results in use are products of
// these per-axis factors; the symmetrization branches keep t^2 real, so the
// square roots below act on positive real arguments.
// ---------------------------------------------------------------------------

Cx gprime_1d(double xi, double xj, Cx t, double gamma, double w0) {
    const Cx t2 = t * t;
    const Cx den = 1.0 - gamma * gamma * t2;
    if (std::abs(den) < 1e-14) throw SingularKernel("gprime_1d: 1 - gamma^2 t^2 ~ 0");
    const Cx pref = 0.5 * (1.0 + gamma) / std::sqrt(den);
    const Cx c = (1.0 + gamma) / (4.0 * den) * 2.0 / (w0 * w0);
    const Cx quad = (1.0 + gamma * t2) * (xi * xi + xj * xj) -
                    2.0 * (1.0 + gamma) * t * (xi * xj);
    return pref * std::exp(-c * quad);
}

namespace {

Cx gdisp_a(Cx t2, Cx tp2, double g) {
    return 3.0 - g * (1.0 + t2 + tp2) - g * g * (t2 + tp2 + t2 * tp2) +
           3.0 * g * g * g * t2 * tp2;
}

Cx gdisp_b(Cx t2, Cx tp2, double g) {
    return 3.0 + t2 - g * (1.0 - t2) * (1.0 + tp2) - g * g * tp2 * (1.0 + 3.0 * t2);
}

}  // namespace

Cx gdisp_1d(double xi, double xj, double xk, Cx t, Cx tp, double gamma, double w0) {
    const Cx t2 = t * t, tp2 = tp * tp;
    const Cx a = gdisp_a(t2, tp2, gamma);
    if (std::abs(a) < 1e-14) throw SingularKernel("gdisp_1d: quadratic-form scale ~ 0");
    const Cx pref = std::pow(1.0 + gamma, 1.5) / (2.0 * std::sqrt(a));
    const double g = gamma;
    const Cx m11 = 4.0 * (1.0 - g * g * t2 * tp2);
    const Cx m22 = gdisp_b(t2, tp2, g);
    const Cx m33 = gdisp_b(tp2, t2, g);
    const Cx m12 = -2.0 * t * (1.0 + g) * (1.0 - g * tp2);
    const Cx m13 = -2.0 * tp * (1.0 + g) * (1.0 - g * t2);
    const Cx m23 = -2.0 * (1.0 - g * g) * t * tp;
    const Cx quad = m11 * xi * xi + m22 * xj * xj + m33 * xk * xk +
                    2.0 * (m12 * xi * xj + m13 * xi * xk + m23 * xj * xk);
    return pref * std::exp(-(1.0 + g) / (4.0 * a) * 2.0 / (w0 * w0) * quad);
}

Cx gprime_sym(Vec2 ri, Vec2 rj, double t, double gx, double gy, double w0) {
    Cx s = 0.0;
    for (const Cx& b : branches(t))
        s += gprime_1d(ri.x, rj.x, b, gx, w0) * gprime_1d(ri.y, rj.y, b, gy, w0);
    return 0.25 * s;
}

Cx gdisp_sym(Vec2 ri, Vec2 rj, Vec2 rk, double t, double tp, double gx, double gy,
             double w0) {
    Cx s = 0.0;
    for (const Cx& b : branches(t))
        for (const Cx& bp : branches(tp))
            s += gdisp_1d(ri.x, rj.x, rk.x, b, bp, gx, w0) *
                 gdisp_1d(ri.y, rj.y, rk.y, b, bp, gy, w0);
    return s / 16.0;
}

// ---------------------------------------------------------------------------
// Mode-overlap tables (fast mode-sum route)
// ---------------------------------------------------------------------------

// 1-D overlaps Ix_l = Int rho(x - x0) h_l(sqrt2 x/w0) e^{-x^2/w0^2} dx for all
// l <= lmax, by composite Gauss-Legendre over the density's support.
std::vector<double> axis_mode_overlaps(double sigma, double x0, double w0, int lmax) {
    const double half = 9.0 * sigma + 0.05 * w0;
    // resolve the fastest mode oscillation inside the window
    const double wavelength = units::pi * w0 / std::sqrt(2.0 * lmax + 1.0);
    const int panels = std::max(2, (int)std::ceil(2.0 * half / (8.0 * wavelength)));
    const int per_panel = 48;
    std::vector<double> gx, gw;
    gauss_legendre(per_panel, gx, gw);

    std::vector<double> out(lmax + 1, 0.0);
    std::vector<double> h(lmax + 1);
    const double norm = 1.0 / std::sqrt(2.0 * units::pi * sigma * sigma);
    for (int p = 0; p < panels; ++p) {
        const double a = x0 - half + 2.0 * half * p / panels;
        const double b = x0 - half + 2.0 * half * (p + 1) / panels;
        for (int q = 0; q < per_panel; ++q) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
            const double wq = 0.5 * (b - a) * gw[q];
            const double rho = norm * std::exp(-(x - x0) * (x - x0) / (2.0 * sigma * sigma));
            const double damp = std::exp(-x * x / (w0 * w0));
            if (rho * damp == 0.0) continue;
            hermite_scaled_all(std::sqrt(2.0) * x / w0, h);
            const double f = wq * rho * damp;
            for (int l = 0; l <= lmax; ++l) out[l] += f * h[l];
        }
    }
    return out;
}

// J Gram matrix J_{l,l'} = Int rho h_l h_l' e^{-2x^2/w0^2} dx for l,l' <= lmax.
std::vector<std::vector<double>> axis_mode_gram(double sigma, double x0, double w0,
                                                int lmax) {
    const double half = 9.0 * sigma + 0.05 * w0;
    const double wavelength = units::pi * w0 / std::sqrt(2.0 * lmax + 1.0);
    const int panels = std::max(2, (int)std::ceil(2.0 * half / (8.0 * wavelength)));
    const int per_panel = 48;
    std::vector<double> gx, gw;
    gauss_legendre(per_panel, gx, gw);

    std::vector<std::vector<double>> out(lmax + 1, std::vector<double>(lmax + 1, 0.0));
    std::vector<double> h(lmax + 1);
    const double norm = 1.0 / std::sqrt(2.0 * units::pi * sigma * sigma);
    for (int p = 0; p < panels; ++p) {
        const double a = x0 - half + 2.0 * half * p / panels;
        const double b = x0 - half + 2.0 * half * (p + 1) / panels;
        for (int q = 0; q < per_panel; ++q) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
            const double wq = 0.5 * (b - a) * gw[q];
            const double rho = norm * std::exp(-(x - x0) * (x - x0) / (2.0 * sigma * sigma));
            const double damp = std::exp(-2.0 * x * x / (w0 * w0));
            const double f = wq * rho * damp;
            if (f == 0.0) continue;
            hermite_scaled_all(std::sqrt(2.0) * x / w0, h);
            for (int l = 0; l <= lmax; ++l) {
                const double fl = f * h[l];
                for (int lp = l; lp <= lmax; ++lp) out[l][lp] += fl * h[lp];
            }
        }
    }
    for (int l = 0; l <= lmax; ++l)
        for (int lp = 0; lp < l; ++lp) out[l][lp] = out[lp][l];
    return out;
}

namespace {

int auto_truncation(double gx, double gy, double alpha, double tol, int cap) {
    const double decay = std::max(gx * gx, gy * gy) * std::exp(-2.0 * alpha);
    if (decay >= 1.0) return cap;
    int n = (int)std::ceil(std::log(tol) / std::log(decay));
    n = ((n + 3) / 4) * 4;
    return std::clamp(n, 64, cap);
}

}  // namespace

CloudModeTable::CloudModeTable(const CloudParams& cloud, double w0, int n_max_first,
                               int n_max_disp) {
    const double gx = gamma_factor(cloud.sigma_x, w0);
    const double gy = gamma_factor(cloud.sigma_y, w0);
    n1_ = n_max_first > 0 ? n_max_first : auto_truncation(gx, gy, 0.0, 1e-13, 4000);
    n2_ = n_max_disp > 0 ? n_max_disp : std::min(auto_truncation(gx, gy, 0.0, 1e-8, 480), n1_);

    const auto ix = axis_mode_overlaps(cloud.sigma_x, cloud.center.x, w0, n1_);
    const auto iy = axis_mode_overlaps(cloud.sigma_y, cloud.center.y, w0, n1_);

    std::vector<double> px(n1_ + 1), py(n1_ + 1);
    for (int l = 0; l <= n1_; ++l) {
        px[l] = ix[l] * ix[l];
        py[l] = iy[l] * iy[l];
    }
    s_n_.assign(n1_ / 4 + 1, 0.0);
    for (int j = 0; j < (int)s_n_.size(); ++j) {
        const int n = 4 * j;
        double s = 0.0;
        for (int l = 0; l <= n; ++l) s += px[l] * py[n - l];
        s_n_[j] = s;
    }
    // geometric tail estimate from the last families
    const std::size_t nf = s_n_.size();
    if (nf > 4) {
        const double tail = s_n_[nf - 1];
        const double prev = s_n_[nf - 2];
        const double rho = prev > 0.0 ? std::min(0.999, tail / prev) : 0.0;
        const double total = std::accumulate(s_n_.begin(), s_n_.end(), 0.0);
        tail_rel_ = total > 0.0 ? tail * rho / (1.0 - rho) / total : 0.0;
    }

    const auto jx = axis_mode_gram(cloud.sigma_x, cloud.center.x, w0, n2_);
    const auto jy = axis_mode_gram(cloud.sigma_y, cloud.center.y, w0, n2_);
    std::vector<std::vector<double>> fx(n2_ + 1, std::vector<double>(n2_ + 1));
    std::vector<std::vector<double>> fy(n2_ + 1, std::vector<double>(n2_ + 1));
    for (int l = 0; l <= n2_; ++l)
        for (int lp = 0; lp <= n2_; ++lp) {
            fx[l][lp] = ix[l] * jx[l][lp] * ix[lp];
            fy[l][lp] = iy[l] * jy[l][lp] * iy[lp];
        }
    const int nfam = n2_ / 4 + 1;
    q_.assign(nfam, std::vector<double>(nfam, 0.0));
    for (int j = 0; j < nfam; ++j) {
        const int n = 4 * j;
        for (int jp = 0; jp < nfam; ++jp) {
            const int np = 4 * jp;
            double s = 0.0;
            for (int l = 0; l <= n; ++l) {
                const auto& fxl = fx[l];
                const auto& fyl = fy[n - l];
                for (int lp = 0; lp <= np; ++lp) s += fxl[lp] * fyl[np - lp];
            }
            q_[j][jp] = s;
        }
    }
}

Cx CloudModeTable::eval_first(const CavityParams& cavity) const {
    const double et = cavity.epsilon_tilde();
    const double kt = cavity.kappa_tilde();
    Cx total = 0.0;
    for (int j = 0; j < (int)s_n_.size(); ++j) {
        const int n = 4 * j;
        total += s_n_[j] * std::exp(-cavity.alpha * n) / Cx(1.0 + et * n, kt);
    }
    return total;
}

Cx CloudModeTable::eval_disp(const CavityParams& cavity) const {
    const double et = cavity.epsilon_tilde();
    const double kt = cavity.kappa_tilde();
    const int nfam = (int)q_.size();
    std::vector<Cx> w(nfam);
    for (int j = 0; j < nfam; ++j) {
        const int n = 4 * j;
        w[j] = std::exp(-cavity.alpha * n) / Cx(1.0 + et * n, kt);
    }
    Cx total = 0.0;
    for (int j = 0; j < nfam; ++j) {
        Cx row = 0.0;
        for (int jp = 0; jp < nfam; ++jp) row += q_[j][jp] * w[jp];
        total += w[j] * row;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Smeared kernels
// ---------------------------------------------------------------------------

namespace {

// 1-D Gaussian overlap with the fundamental mode:
// Int rho(x - x0) e^{-x^2/w0^2} dx = sqrt((1+g)/2) exp(-(1+g) x0^2 / (2 w0^2)).
double i00_axis(double sigma, double x0, double w0) {
    const double g = gamma_factor(sigma, w0);
    return std::sqrt(0.5 * (1.0 + g)) * std::exp(-(1.0 + g) * x0 * x0 / (2.0 * w0 * w0));
}

// Int rho(x - x0) e^{-2 x^2/w0^2} dx (for the single-mode dispersive overlap).
double j00_axis(double sigma, double x0, double w0) {
    const double s = 4.0 * sigma * sigma / (w0 * w0);
    return std::exp(-2.0 * x0 * x0 / (w0 * w0 * (1.0 + s))) / std::sqrt(1.0 + s);
}

}  // namespace

KernelSample greens_cloud(Vec2 ri, Vec2 rj, const CloudParams& cloud,
                          const CavityParams& cavity, const QuadratureSpec& spec,
                          KernelMethod method) {
    const double w0 = cavity.w0;
    const double gx = gamma_factor(cloud.sigma_x, w0);
    const double gy = gamma_factor(cloud.sigma_y, w0);
    if (gx <= -1.0 || gx > 1.0 || gy <= -1.0 || gy > 1.0)
        throw ConfigError("greens_cloud: gamma outside (-1, 1]");
    if (cavity.single_mode) {
        const double i00 = i00_axis(cloud.sigma_x, ri.x, w0) * i00_axis(cloud.sigma_y, ri.y, w0) *
                           i00_axis(cloud.sigma_x, rj.x, w0) * i00_axis(cloud.sigma_y, rj.y, w0);
        return {i00 / Cx(1.0, cavity.kappa_tilde()), ri, rj, KernelMethod::ClosedForm, 0.0};
    }
    if (method == KernelMethod::ModeSum) {
        if (!(ri.x == rj.x && ri.y == rj.y))
            throw ConfigError("greens_cloud: ModeSum table route requires r_i = r_j");
        CloudParams shifted = cloud;
        shifted.center = ri;
        const CloudModeTable table(shifted, w0);
        return {table.eval_first(cavity), ri, rj, KernelMethod::ModeSum,
                table.tail_estimate()};
    }
    const Cx u = cavity.u();
    const double upper = std::exp(-cavity.alpha);
    auto f = [&](double t) {
        return gprime_sym(ri, rj, t, gx, gy, w0) * std::exp((u - 1.0) * std::log(t));
    };
    const QuadResult q = integrate_clustered(f, upper, spec);
    const Cx val = std::exp(u * cavity.alpha) / cavity.epsilon_tilde() * q.value;
    return {val, ri, rj, KernelMethod::Quadrature, q.rel_err_est};
}

KernelSample greens_dispersive(Vec2 ri, Vec2 rj, Vec2 rk, const CloudParams& cloud,
                               const CavityParams& cavity, const QuadratureSpec& spec,
                               KernelMethod method) {
    const double w0 = cavity.w0;
    const double gx = gamma_factor(cloud.sigma_x, w0);
    const double gy = gamma_factor(cloud.sigma_y, w0);
    if (cavity.single_mode) {
        const double v = i00_axis(cloud.sigma_x, rj.x, w0) * i00_axis(cloud.sigma_y, rj.y, w0) *
                         i00_axis(cloud.sigma_x, rk.x, w0) * i00_axis(cloud.sigma_y, rk.y, w0) *
                         j00_axis(cloud.sigma_x, ri.x, w0) * j00_axis(cloud.sigma_y, ri.y, w0);
        const Cx den = Cx(1.0, cavity.kappa_tilde());
        return {v / (den * den), ri, rj, KernelMethod::ClosedForm, 0.0};
    }
    if (method == KernelMethod::ModeSum) {
        if (!(ri.x == rj.x && ri.y == rj.y && ri.x == rk.x && ri.y == rk.y))
            throw ConfigError("greens_dispersive: ModeSum table route requires equal centers");
        CloudParams shifted = cloud;
        shifted.center = ri;
        const CloudModeTable table(shifted, w0);
        return {table.eval_disp(cavity), ri, rj, KernelMethod::ModeSum,
                table.tail_estimate()};
    }
    const Cx u = cavity.u();
    const double upper = std::exp(-cavity.alpha);
    QuadratureSpec dspec = spec;
    dspec.panels = std::min(spec.panels, 48);
    dspec.target_rel_err = std::max(spec.target_rel_err, 1e-6);
    dspec.initial_points = 2;
    auto f = [&](double t, double tp) {
        return gdisp_sym(ri, rj, rk, t, tp, gx, gy, w0) *
               std::exp((u - 1.0) * (std::log(t) + std::log(tp)));
    };
    const QuadResult q = integrate_clustered_2d(f, upper, upper, dspec);
    const Cx pref = std::exp(u * cavity.alpha) / cavity.epsilon_tilde();
    return {pref * pref * q.value, ri, rj, KernelMethod::Quadrature, q.rel_err_est};
}

// ---------------------------------------------------------------------------
// Grid-quadrature overlap oracles
// ---------------------------------------------------------------------------

namespace {

double grid_integral_2d(const std::function<double(double, double)>& f, Vec2 center,
                        double half, int per_axis) {
    std::vector<double> gx, gw;
    gauss_legendre(per_axis, gx, gw);
    double total = 0.0;
    for (int i = 0; i < per_axis; ++i) {
        const double x = center.x + half * gx[i];
        double row = 0.0;
        for (int j = 0; j < per_axis; ++j)
            row += gw[j] * f(x, center.y + half * gx[j]);
        total += gw[i] * row;
    }
    return total * half * half;
}

}  // namespace

double overlap_I(ModeIndex mode, const CloudParams& cloud, double w0) {
    const double sig = std::max(cloud.sigma_x, cloud.sigma_y);
    const double half = 8.0 * sig + 0.05 * w0;
    auto f = [&](double x, double y) {
        const double rho =
            std::exp(-(x - cloud.center.x) * (x - cloud.center.x) / (2.0 * cloud.sigma_x * cloud.sigma_x) -
                     (y - cloud.center.y) * (y - cloud.center.y) / (2.0 * cloud.sigma_y * cloud.sigma_y)) /
            (2.0 * units::pi * cloud.sigma_x * cloud.sigma_y);
        return rho * mode_function(mode, {x, y}, w0);
    };
    int n = 64;
    double prev = grid_integral_2d(f, cloud.center, half, n);
    for (int pass = 0; pass < 4; ++pass) {
        n *= 2;
        const double cur = grid_integral_2d(f, cloud.center, half, n);
        if (std::abs(cur - prev) <= 1e-10 * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

double overlap_J(ModeIndex a, ModeIndex b, const CloudParams& cloud, double w0) {
    const double sig = std::max(cloud.sigma_x, cloud.sigma_y);
    const double half = 8.0 * sig + 0.05 * w0;
    auto f = [&](double x, double y) {
        const double rho =
            std::exp(-(x - cloud.center.x) * (x - cloud.center.x) / (2.0 * cloud.sigma_x * cloud.sigma_x) -
                     (y - cloud.center.y) * (y - cloud.center.y) / (2.0 * cloud.sigma_y * cloud.sigma_y)) /
            (2.0 * units::pi * cloud.sigma_x * cloud.sigma_y);
        return rho * mode_function(a, {x, y}, w0) * mode_function(b, {x, y}, w0);
    };
    int n = 64;
    double prev = grid_integral_2d(f, cloud.center, half, n);
    for (int pass = 0; pass < 4; ++pass) {
        n *= 2;
        const double cur = grid_integral_2d(f, cloud.center, half, n);
        if (std::abs(cur - prev) <= 1e-10 * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

double kernel_field_hwhm(const CavityParams& cavity, const QuadratureSpec& spec) {
    auto profile = [&](double x) {
        return greens_point({x, 0.0}, {0.0, 0.0}, cavity, spec).value.real();
    };
    const double p0 = profile(0.0);
    // bracket the half crossing
    double lo = 0.0;
    double hi = 0.02 * cavity.w0;
    while (profile(hi) > 0.5 * p0 && hi < 4.0 * cavity.w0) {
        lo = hi;
        hi *= 1.6;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (profile(mid) > 0.5 * p0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-4) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace cavitykit
