#include "cavitykit/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "cavitykit/parallel.hpp"
#include "cavitykit/voigt.hpp"
#include "nlls.hpp"

namespace cavitykit {

namespace {

// Deterministic uniform in [0, 1) from a pinned generator (library
// distributions are implementation-defined, so roll the mapping by hand).
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform() { return (gen() >> 11) * 0x1.0p-53; }
    double normal() {
        // Box-Muller; consumes two uniforms per pair, caches the second
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * units::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * units::pi * u2);
    }
    bool has_spare_ = false;
    double spare_ = 0.0;
};

constexpr double EPS_SCALE = 2.0 * units::pi * 1e6;   // cyclic MHz
constexpr double ALPHA_SCALE = 1e-3;
constexpr double D0_SCALE = 2.0 * units::pi * 1e6;

}  // namespace

FitWorkspace::FitWorkspace(const std::vector<ScanDataset>& datasets,
                           const FitOptions& opts)
    : opts_(opts) {
    std::map<std::tuple<double, double, double, double, double>, int> table_of;
    for (const auto& ds : datasets) {
        n_amp_ = std::max(n_amp_, ds.amplitude_index + 1);
        for (const auto& row : ds.rows) {
            RowRef ref;
            ref.row = &row;
            ref.ds = &ds;
            CloudParams cl = row.cloud;
            cl.n_atoms = row.n_atoms;
            ref.e_dw = cloud_energies(cl, ds.cavity_ref.wavelength).e_dw;
            if (row.omega_c_sq <= 0.0)
                throw ConfigError("fit: omega_c_sq must be positive");
            ref.y = ref.e_dw / (row.n_atoms * row.omega_c_sq);
            ref.table = -1;
            if (opts.model_method == KernelMethod::ModeSum) {
                const auto key = std::make_tuple(cl.sigma_x, cl.sigma_y, cl.center.x,
                                                 cl.center.y, ds.cavity_ref.w0);
                auto it = table_of.find(key);
                if (it == table_of.end()) {
                    it = table_of.emplace(key, (int)table_of.size()).first;
                }
                ref.table = it->second;
            }
            index_.push_back(ref);
        }
    }
    if (opts.model_method == KernelMethod::ModeSum) {
        tables_.reserve(table_of.size());
        std::vector<std::pair<std::tuple<double, double, double, double, double>, int>>
            ordered(table_of.begin(), table_of.end());
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& a, const auto& b) { return a.second < b.second; });
        std::vector<CloudModeTable> built;
        built.reserve(ordered.size());
        // build in parallel into slots
        std::vector<std::unique_ptr<CloudModeTable>> slots(ordered.size());
        parallel_for(ordered.size(), [&](std::size_t i) {
            const auto& [key, id] = ordered[i];
            CloudParams cl;
            cl.sigma_x = std::get<0>(key);
            cl.sigma_y = std::get<1>(key);
            cl.center = {std::get<2>(key), std::get<3>(key)};
            slots[i] = std::make_unique<CloudModeTable>(cl, std::get<4>(key));
        });
        for (auto& s : slots) tables_.push_back(std::move(*s));
    }
}

double FitWorkspace::observed(std::size_t k) const { return index_[k].y; }
double FitWorkspace::weight(std::size_t k) const { return index_[k].row->weight; }
int FitWorkspace::amplitude_index(std::size_t k) const {
    return index_[k].ds->amplitude_index;
}

double FitWorkspace::model(std::size_t k, double epsilon, double alpha,
                           double delta_0) const {
    const RowRef& ref = index_[k];
    CavityParams cav = ref.ds->cavity_ref;
    cav.epsilon = epsilon;
    cav.alpha = alpha;
    cav.delta_0 = delta_0;
    cav.delta_c = ref.row->delta_c;
    const double deff = cav.delta_eff();
    if (deff >= 0.0)
        throw ModelEvaluationFailed("fit model: delta_c + delta_0 must stay negative");
    const PumpParams& pump = ref.ds->pump_ref;
    try {
        Cx d1, d2{0.0, 0.0};
        if (ref.table >= 0) {
            d1 = tables_[ref.table].eval_first(cav);
            if (opts_.include_dispersive) d2 = tables_[ref.table].eval_disp(cav);
        } else {
            CloudParams cl = ref.row->cloud;
            cl.n_atoms = ref.row->n_atoms;
            QuadratureSpec spec;
            d1 = greens_cloud(cl.center, cl.center, cl, cav, spec).value;
            if (opts_.include_dispersive)
                d2 = greens_dispersive(cl.center, cl.center, cl.center, cl, cav, spec).value;
        }
        Cx bracket = d1;
        if (opts_.include_dispersive) {
            const double coef = ref.row->n_atoms * cav.g0 * cav.g0 /
                                (2.0 * pump.delta_a * deff);
            bracket += coef * d2;
        }
        return -(cav.g0 * cav.g0 / (pump.delta_a * pump.delta_a * deff)) * bracket.real();
    } catch (const DomainError& e) {
        throw ModelEvaluationFailed(std::string("fit model row failed: ") + e.what());
    }
}

std::vector<double> residuals(const FitParams& params, const FitWorkspace& ws) {
    std::vector<double> r(ws.rows());
    for (std::size_t k = 0; k < ws.rows(); ++k) {
        const double m = ws.model(k, params.epsilon, params.alpha, params.delta_0);
        const double a = params.amplitudes.at(ws.amplitude_index(k));
        r[k] = ws.weight(k) * (ws.observed(k) - a * m);
    }
    return r;
}

std::vector<double> residuals(const FitParams& params,
                              const std::vector<ScanDataset>& datasets,
                              const FitOptions& opts) {
    const FitWorkspace ws(datasets, opts);
    return residuals(params, ws);
}

namespace {

struct GlobalFitEngine {
    const FitWorkspace& ws;
    const FitOptions& opts;
    std::vector<double> row_weights;  // bootstrap multiplicity weights (sqrt counts)

    int n_shape = 3;
    int n_amp;

    explicit GlobalFitEngine(const FitWorkspace& w, const FitOptions& o)
        : ws(w), opts(o), row_weights(w.rows(), 1.0), n_amp(w.n_amplitudes()) {}

    // models for all rows at given shape params (scaled units)
    std::vector<double> models(const Eigen::VectorXd& q) const {
        std::vector<double> m(ws.rows());
        const double eps = q(0) * EPS_SCALE;
        const double alpha = q(1) * ALPHA_SCALE;
        const double d0 = q(2) * D0_SCALE;
        for (std::size_t k = 0; k < ws.rows(); ++k)
            m[k] = ws.model(k, eps, alpha, d0);
        return m;
    }

    double chi2(const Eigen::VectorXd& q, const std::vector<double>& m) const {
        double s = 0.0;
        for (std::size_t k = 0; k < ws.rows(); ++k) {
            const double a = q(3 + ws.amplitude_index(k));
            const double r = effective_weight(k) * (ws.observed(k) - a * m[k]);
            s += r * r;
        }
        return s;
    }

    double effective_weight(std::size_t k) const { return ws.weight(k) * row_weights[k]; }

    FitResult run(const FitParams& init) {
        Eigen::VectorXd q(n_shape + n_amp);
        q(0) = init.epsilon / EPS_SCALE;
        q(1) = init.alpha / ALPHA_SCALE;
        q(2) = init.delta_0 / D0_SCALE;
        for (int i = 0; i < n_amp; ++i)
            q(3 + i) = i < (int)init.amplitudes.size() ? init.amplitudes[i] : 1.0;
        clamp(q);

        std::vector<double> m = models(q);
        double chi2_cur = chi2(q, m);
        double lambda = 1e-3;
        int it = 0;
        bool converged = false;
        for (; it < opts.max_iterations && !converged; ++it) {
            Eigen::MatrixXd jac = jacobian(q, m);
            const Eigen::MatrixXd h = jac.transpose() * jac;
            Eigen::VectorXd r = resid_vec(q, m);
            const Eigen::VectorXd g = jac.transpose() * r;
            if (!h.allFinite() || !g.allFinite())
                throw SingularJacobian("fit_global: non-finite normal equations");

            bool accepted = false;
            for (int trial = 0; trial < 40; ++trial) {
                Eigen::MatrixXd damped = h;
                for (int d = 0; d < damped.rows(); ++d)
                    damped(d, d) += lambda * std::max(h(d, d), 1e-300);
                Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
                Eigen::VectorXd step = ldlt.solve(-g);
                if (ldlt.info() != Eigen::Success || !step.allFinite())
                    throw SingularJacobian(
                        "fit_global: singular normal matrix (degenerate amplitude/scale direction)");
                Eigen::VectorXd qt = q + step;
                clamp(qt);
                const std::vector<double> mt = models(qt);
                const double chi2t = chi2(qt, mt);
                if (chi2t <= chi2_cur) {
                    const double drop = chi2_cur - chi2t;
                    q = qt;
                    m = mt;
                    converged = drop <= opts.chi2_rel_tol * std::max(chi2_cur, 1e-300);
                    chi2_cur = chi2t;
                    lambda = std::max(lambda / 3.0, 1e-14);
                    accepted = true;
                    break;
                }
                lambda *= 4.0;
            }
            if (!accepted) converged = true;  // damping exhausted at a stationary point
        }
        if (!converged) throw MaxIterations("fit_global: iteration budget exhausted");

        FitResult out;
        out.params.epsilon = q(0) * EPS_SCALE;
        out.params.alpha = q(1) * ALPHA_SCALE;
        out.params.delta_0 = q(2) * D0_SCALE;
        out.params.amplitudes.assign(q.data() + 3, q.data() + 3 + n_amp);
        out.n_iterations = it;

        const Eigen::MatrixXd jac = jacobian(q, m);
        const int dof = std::max<int>(1, (int)ws.rows() - (n_shape + n_amp));
        out.chi2_reduced = chi2_cur / dof;
        Eigen::MatrixXd h = jac.transpose() * jac;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        Eigen::MatrixXd cov_scaled;
        if (ldlt.info() == Eigen::Success)
            cov_scaled =
                ldlt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols())) * out.chi2_reduced;
        else
            cov_scaled = Eigen::MatrixXd::Constant(h.rows(), h.cols(),
                                                   std::numeric_limits<double>::quiet_NaN());
        const double scales[3] = {EPS_SCALE, ALPHA_SCALE, D0_SCALE};
        out.covariance.resize(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                out.covariance(i, j) = cov_scaled(i, j) * scales[i] * scales[j];
        out.sigma_epsilon = std::sqrt(std::max(0.0, out.covariance(0, 0)));
        out.sigma_alpha = std::sqrt(std::max(0.0, out.covariance(1, 1)));
        out.sigma_delta_0 = std::sqrt(std::max(0.0, out.covariance(2, 2)));
        return out;
    }

  private:
    void clamp(Eigen::VectorXd& q) const {
        q(0) = std::max(q(0), opts.epsilon_min / EPS_SCALE);
        q(1) = std::max(q(1), 0.0);  // negative alpha is unphysical
    }

    Eigen::VectorXd resid_vec(const Eigen::VectorXd& q,
                              const std::vector<double>& m) const {
        Eigen::VectorXd r(ws.rows());
        for (std::size_t k = 0; k < ws.rows(); ++k) {
            const double a = q(3 + ws.amplitude_index(k));
            r(k) = effective_weight(k) * (ws.observed(k) - a * m[k]);
        }
        return r;
    }

    // shape columns by central differences, amplitude columns analytic
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& q,
                             const std::vector<double>& m) const {
        Eigen::MatrixXd jac((int)ws.rows(), n_shape + n_amp);
        jac.setZero();
        for (int j = 0; j < n_shape; ++j) {
            const double h = opts.fd_rel_step * std::max(1.0, std::abs(q(j)));
            Eigen::VectorXd qp = q, qm = q;
            qp(j) += h;
            qm(j) -= h;
            bool one_sided = false;
            if (j == 1 && qm(1) < 0.0) one_sided = true;  // alpha bound
            const std::vector<double> mp = models(qp);
            const std::vector<double> mm = one_sided ? m : models(qm);
            const double den = one_sided ? h : 2.0 * h;
            for (std::size_t k = 0; k < ws.rows(); ++k) {
                const double a = q(3 + ws.amplitude_index(k));
                jac(k, j) = effective_weight(k) * (-(a) * (mp[k] - mm[k]) / den);
            }
        }
        for (std::size_t k = 0; k < ws.rows(); ++k)
            jac(k, 3 + ws.amplitude_index(k)) = -effective_weight(k) * m[k];
        return jac;
    }
};

}  // namespace

FitResult fit_global(const std::vector<ScanDataset>& datasets, const FitParams& init,
                     const FitOptions& opts) {
    if (datasets.empty()) throw ConfigError("fit_global: need at least one dataset");
    const FitWorkspace ws(datasets, opts);
    GlobalFitEngine engine(ws, opts);
    return engine.run(init);
}

BootstrapResult bootstrap_with_sampler(
    const std::vector<ScanDataset>& datasets, const FitParams& init, int n_resamples,
    const std::function<std::vector<int>(int, std::size_t)>& resampler,
    const FitOptions& opts) {
    if (n_resamples < 2) throw ConfigError("bootstrap: n_resamples must be >= 2");
    const FitWorkspace ws(datasets, opts);

    std::vector<FitParams> ensemble(n_resamples);
    std::vector<char> ok(n_resamples, 0);
    parallel_for((std::size_t)n_resamples, [&](std::size_t rep) {
        const std::vector<int> counts = resampler((int)rep, ws.rows());
        GlobalFitEngine engine(ws, opts);
        for (std::size_t k = 0; k < ws.rows(); ++k)
            engine.row_weights[k] = std::sqrt((double)counts[k]);
        try {
            ensemble[rep] = engine.run(init).params;
            ok[rep] = 1;
        } catch (const DomainError&) {
            ok[rep] = 0;
        }
    });

    BootstrapResult out;
    for (int i = 0; i < n_resamples; ++i)
        if (ok[i]) out.ensemble.push_back(ensemble[i]);
    out.n_failed = n_resamples - (int)out.ensemble.size();
    if (out.ensemble.empty()) throw FitDegenerate("bootstrap: every refit failed");

    const int n = (int)out.ensemble.size();
    auto comp = [&](auto get) {
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) v[i] = get(out.ensemble[i]);
        return v;
    };
    auto mean_of = [](std::vector<double> v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / v.size();
    };
    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    };
    const auto eps = comp([](const FitParams& p) { return p.epsilon; });
    const auto alp = comp([](const FitParams& p) { return p.alpha; });
    const auto d0 = comp([](const FitParams& p) { return p.delta_0; });
    out.mean.epsilon = mean_of(eps);
    out.mean.alpha = mean_of(alp);
    out.mean.delta_0 = mean_of(d0);
    out.median.epsilon = median_of(eps);
    out.median.alpha = median_of(alp);
    out.median.delta_0 = median_of(d0);
    const int n_amp = (int)out.ensemble.front().amplitudes.size();
    out.mean.amplitudes.resize(n_amp);
    out.median.amplitudes.resize(n_amp);
    for (int a = 0; a < n_amp; ++a) {
        auto va = comp([a](const FitParams& p) { return p.amplitudes[a]; });
        out.mean.amplitudes[a] = mean_of(va);
        out.median.amplitudes[a] = median_of(va);
    }
    out.covariance.setZero(3, 3);
    const double mu[3] = {out.mean.epsilon, out.mean.alpha, out.mean.delta_0};
    for (int i = 0; i < n; ++i) {
        const double d[3] = {eps[i] - mu[0], alp[i] - mu[1], d0[i] - mu[2]};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) out.covariance(a, b) += d[a] * d[b];
    }
    out.covariance /= std::max(1, n - 1);
    return out;
}

BootstrapResult bootstrap(const std::vector<ScanDataset>& datasets,
                          const FitParams& init, int n_resamples, std::uint64_t seed,
                          const FitOptions& opts) {
    auto sampler = [seed](int rep, std::size_t n_rows) {
        Rng rng(seed + 0x9E3779B97F4A7C15ull * (std::uint64_t)(rep + 1));
        std::vector<int> counts(n_rows, 0);
        for (std::size_t k = 0; k < n_rows; ++k) {
            const std::size_t idx =
                std::min(n_rows - 1, (std::size_t)(rng.uniform() * n_rows));
            counts[idx] += 1;
        }
        return counts;
    };
    return bootstrap_with_sampler(datasets, init, n_resamples, sampler, opts);
}

SynthesisReport synthesize_dataset(const FitParams& truth, const ScanDesign& design,
                                   double noise_frac, std::uint64_t seed,
                                   const FitOptions& opts) {
    SynthesisReport rep;
    Rng rng(seed);
    int amp_index = 0;
    for (const auto& dd : design.datasets) {
        ScanDataset ds;
        ds.amplitude_index = amp_index++;
        ds.cavity_ref = design.cavity_ref;
        ds.pump_ref = design.pump_ref;
        for (double x : dd.xs) {
            ScanRowData row;
            row.kind = dd.kind;
            row.x = x;
            row.delta_c = dd.kind == ScanKind::DetuningScan ? x : dd.delta_c;
            row.n_atoms = dd.n_atoms;
            row.cloud = dd.cloud;
            row.cloud.n_atoms = dd.n_atoms;
            if (dd.kind == ScanKind::PositionScan) row.cloud.center.x = x;
            row.omega_c_sq = 1.0;  // placeholder until the model fills it
            ds.rows.push_back(row);
        }
        rep.datasets.push_back(std::move(ds));
    }
    // forward-model thresholds with the same engine the fit will use
    FitWorkspace ws(rep.datasets, opts);
    std::size_t flat = 0;
    for (std::size_t d = 0; d < rep.datasets.size(); ++d) {
        auto& ds = rep.datasets[d];
        const double a_i = truth.amplitudes.empty()
                               ? 1.0
                               : truth.amplitudes.at(ds.amplitude_index);
        std::vector<ScanRowData> kept;
        for (auto& row : ds.rows) {
            const double m =
                ws.model(flat++, truth.epsilon, truth.alpha, truth.delta_0);
            if (!(m > 0.0)) {
                ++rep.dropped_rows;
                continue;
            }
            CloudParams cl = row.cloud;
            const double e_dw = cloud_energies(cl, ds.cavity_ref.wavelength).e_dw;
            double om2 = e_dw / (row.n_atoms * a_i * m);
            if (noise_frac > 0.0) om2 *= std::exp(noise_frac * rng.normal());
            row.omega_c_sq = om2;
            kept.push_back(row);
        }
        ds.rows = std::move(kept);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Profile analysis
// ---------------------------------------------------------------------------

double peak_offset_correction(std::span<double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 5)
        throw NoPeak("peak_offset_correction: need >= 5 samples");
    const std::size_t n = xs.size();
    std::size_t imax = 0;
    double ymin = ys[0], ymax = ys[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (ys[i] > ymax) {
            ymax = ys[i];
            imax = i;
        }
        ymin = std::min(ymin, ys[i]);
    }
    if (!(ymax > ymin) || (ymax - ymin) < 1e-12 * std::abs(ymax))
        throw NoPeak("peak_offset_correction: profile has no peak");

    detail::NllsProblem prob;
    prob.residual = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = xs[i] - q(1);
            r(i) = ys[i] - (q(3) + q(0) * std::exp(-dx * dx / (2.0 * q(2) * q(2))));
        }
        return r;
    };
    Eigen::VectorXd q0(4);
    const double span = xs[n - 1] - xs[0];
    q0 << ymax - ymin, xs[imax], std::max(0.05 * std::abs(span), 1e-3), ymin;
    prob.lower.resize(4);
    prob.lower << 0.0, -1e30, 1e-6, -1e30;
    detail::NllsResult res;
    try {
        res = detail::levenberg_marquardt(prob, q0);
    } catch (const DomainError&) {
        throw NoPeak("peak_offset_correction: peak fit failed");
    }
    if (res.q(0) <= 0.0) throw NoPeak("peak_offset_correction: non-positive amplitude");
    const double shift = res.q(1);
    for (auto& x : xs) x -= shift;
    return shift;
}

DeconvolutionResult voigt_deconvolve(std::span<const double> xs,
                                     std::span<const double> ys,
                                     const CloudParams& cloud) {
    if (xs.size() != ys.size() || xs.size() < 6)
        throw FitDegenerate("voigt_deconvolve: need >= 6 samples");
    const std::size_t n = xs.size();
    // density-kernel Gaussian width in scan coordinates (mirror-peak argument
    // compresses the axis by two)
    const double sigma_g = cloud.sigma_x / std::sqrt(2.0);

    double ymin = ys[0], ymax = ys[0];
    for (std::size_t i = 0; i < n; ++i) {
        ymin = std::min(ymin, ys[i]);
        ymax = std::max(ymax, ys[i]);
    }
    if (!(ymax > ymin)) throw FitDegenerate("voigt_deconvolve: flat profile");

    auto model_peak = [&](double x, double amp, double gamma, double off) {
        const double v = voigt_profile(x, sigma_g, gamma);
        const double v0 = voigt_profile(0.0, sigma_g, gamma);
        return off + amp * v / v0;
    };

    detail::NllsProblem prob;
    prob.residual = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i)
            r(i) = ys[i] - model_peak(xs[i], q(0), std::max(q(1), 1e-9), q(2));
        return r;
    };
    // crude width-based init
    double hwhm_obs = 0.0;
    {
        const double half = ymin + 0.5 * (ymax - ymin);
        for (std::size_t i = 0; i < n; ++i)
            if (ys[i] >= half) hwhm_obs = std::max(hwhm_obs, std::abs(xs[i]));
        hwhm_obs = std::max(hwhm_obs, 1e-3);
    }
    const double fg = sigma_g * std::sqrt(2.0 * std::log(2.0));
    Eigen::VectorXd q0(3);
    q0 << ymax - ymin, std::max(0.3 * std::max(hwhm_obs - fg, 0.05 * hwhm_obs), 1e-3),
        ymin;
    prob.lower.resize(3);
    prob.lower << 0.0, 0.0, -1e30;

    detail::NllsResult res;
    try {
        res = detail::levenberg_marquardt(prob, q0);
    } catch (const MaxIterations&) {
        throw FitDegenerate("voigt_deconvolve: profile fit did not converge");
    }
    const double gamma = res.q(1);
    const double sig_gamma =
        res.covariance.allFinite() ? std::sqrt(std::max(0.0, res.covariance(1, 1))) : 0.0;
    if (gamma <= 1e-3 || gamma < sig_gamma)
        throw FitDegenerate("voigt_deconvolve: Lorentzian width consistent with zero");

    DeconvolutionResult out;
    out.hwhm_lorentz = 2.0 * gamma;
    out.hwhm_total = 2.0 * voigt_hwhm(sigma_g, gamma);
    out.lorentz_unc = 2.0 * sig_gamma;
    return out;
}

}  // namespace cavitykit
