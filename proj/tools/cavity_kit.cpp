// cavity-kit: command-line front end. Subcommands map one-to-one onto the
// library modules; every output CSV/JSON gets a reproducibility manifest
// sidecar. Exit codes: 0 ok, 1 domain error, 2 usage error.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cavitykit/config.hpp"
#include "cavitykit/cooperativity.hpp"
#include "cavitykit/dynamics.hpp"
#include "cavitykit/fitting.hpp"
#include "cavitykit/imaging.hpp"
#include "cavitykit/threshold.hpp"

namespace ck = cavitykit;
using ck::units::angular_to_mhz;
using ck::units::mhz_to_angular;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<double> parse_range(const std::string& text) {
    // "start:stop:step" inclusive sweep; bare comma list also accepted
    std::vector<double> out;
    if (text.find(':') == std::string::npos) {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
        return out;
    }
    double start = 0, stop = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3)
        throw CLI::ValidationError("range", "expected start:stop:step");
    step = std::abs(step);
    if (step == 0.0) throw CLI::ValidationError("range", "step must be nonzero");
    const double dir = stop >= start ? 1.0 : -1.0;
    for (double v = start; dir * (v - stop) <= 1e-9 * std::max(1.0, std::abs(stop));
         v += dir * step)
        out.push_back(v);
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_sidecar(const std::string& command, const std::string& config_text,
                   std::uint64_t seed, const std::string& out_path) {
    ck::write_manifest(ck::make_manifest(command, config_text, seed),
                       out_path + ".manifest.json");
}

// Dataset exchange format:
// kind,x_value_MHz_or_um,omega_c_sq_MHz2,n_atoms,sigma_x_um,sigma_y_um,delta_c_MHz,amplitude_index
std::vector<ck::ScanDataset> load_datasets(const std::vector<std::string>& paths,
                                           const ck::Config& cfg) {
    std::map<int, ck::ScanDataset> by_amp;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw ck::ConfigError("fit: cannot open " + path);
        std::string line;
        if (!std::getline(in, line)) throw ck::ConfigError("fit: empty file " + path);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (cells.size() != 8)
                throw ck::ConfigError("fit: expected 8 columns in " + path);
            ck::ScanRowData row;
            row.kind = cells[0] == "position" ? ck::ScanKind::PositionScan
                                              : ck::ScanKind::DetuningScan;
            const double x = std::stod(cells[1]);
            row.omega_c_sq = std::stod(cells[2]) * mhz_to_angular(1.0) * mhz_to_angular(1.0);
            row.n_atoms = std::stod(cells[3]);
            row.cloud = cfg.cloud;
            row.cloud.sigma_x = std::stod(cells[4]);
            row.cloud.sigma_y = std::stod(cells[5]);
            row.cloud.n_atoms = row.n_atoms;
            row.delta_c = mhz_to_angular(std::stod(cells[6]));
            if (row.kind == ck::ScanKind::PositionScan) {
                row.x = x;
                row.cloud.center.x = x;
            } else {
                row.x = mhz_to_angular(x);
                row.delta_c = row.x;
            }
            const int amp = (int)std::stod(cells[7]);
            auto& ds = by_amp[amp];
            ds.amplitude_index = amp;
            ds.cavity_ref = cfg.cavity;
            ds.pump_ref = cfg.pump;
            ds.rows.push_back(row);
        }
    }
    std::vector<ck::ScanDataset> out;
    for (auto& [amp, ds] : by_amp) out.push_back(std::move(ds));
    return out;
}

nlohmann::json fit_result_json(const ck::FitResult& res) {
    nlohmann::json j;
    j["epsilon_over_2pi_MHz"] = angular_to_mhz(res.params.epsilon);
    j["alpha"] = res.params.alpha;
    j["delta_0_over_2pi_MHz"] = angular_to_mhz(res.params.delta_0);
    j["amplitudes"] = res.params.amplitudes;
    j["sigma_epsilon_over_2pi_MHz"] = angular_to_mhz(res.sigma_epsilon);
    j["sigma_alpha"] = res.sigma_alpha;
    j["sigma_delta_0_over_2pi_MHz"] = angular_to_mhz(res.sigma_delta_0);
    j["chi2_reduced"] = res.chi2_reduced;
    j["n_iterations"] = res.n_iterations;
    return j;
}

void write_pgm16(const ck::FieldMap& intensity, const std::string& path) {
    double vmax = 0.0;
    for (const auto& v : intensity.values) vmax = std::max(vmax, v.real());
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << intensity.n << " " << intensity.n << "\n65535\n";
    for (int j = intensity.n - 1; j >= 0; --j)
        for (int i = 0; i < intensity.n; ++i) {
            const double v = std::max(0.0, intensity.at(i, j).real());
            const unsigned val =
                vmax > 0.0 ? (unsigned)(65535.0 * v / vmax + 0.5) : 0u;
            out.put((char)(val >> 8));
            out.put((char)(val & 0xff));
        }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"confocal cavity QED toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path = "out.csv", mode = "detuning";
    std::string detunings_text = "-40:-320:20", positions_text = "-15:15:1";
    std::vector<std::string> data_paths;
    std::uint64_t seed = 12345;
    int n_resamples = 300;
    int grid = 128;
    double extent = 0.0;
    double source_x = 0.0, source_y = 0.0;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", config_path, "config file (.toml/.json)");
        if (needs_config) opt->required();
        sub->add_option("--out", out_path, "output path");
        sub->add_option("--seed", seed, "RNG seed recorded in the manifest");
    };

    auto* modes_cmd = app.add_subcommand("modes", "mode-family weights");
    add_common(modes_cmd);
    auto* greens_cmd = app.add_subcommand("greens-map", "kernel map around a source");
    add_common(greens_cmd);
    greens_cmd->add_option("--grid", grid, "samples per axis");
    greens_cmd->add_option("--extent", extent, "map extent in um (default 4 w0)");
    greens_cmd->add_option("--source-x", source_x, "source x (um)");
    greens_cmd->add_option("--source-y", source_y, "source y (um)");
    auto* coop_cmd = app.add_subcommand("coop-curve", "enhancement vs detuning");
    add_common(coop_cmd);
    coop_cmd->add_option("--detunings", detunings_text, "MHz sweep start:stop:step");
    auto* thr_cmd = app.add_subcommand("threshold-scan", "critical pump scans");
    add_common(thr_cmd);
    thr_cmd->add_option("--mode", mode, "detuning|position")
        ->check(CLI::IsMember({"detuning", "position"}));
    thr_cmd->add_option("--detunings", detunings_text, "MHz sweep");
    thr_cmd->add_option("--positions", positions_text, "um sweep");
    auto* fit_cmd = app.add_subcommand("fit", "global threshold fit");
    add_common(fit_cmd);
    fit_cmd->add_option("--data", data_paths, "dataset CSV files")->required();
    auto* boot_cmd = app.add_subcommand("bootstrap", "bootstrap the global fit");
    add_common(boot_cmd);
    boot_cmd->add_option("--data", data_paths, "dataset CSV files")->required();
    boot_cmd->add_option("--n", n_resamples, "number of resamples");
    auto* dec_cmd = app.add_subcommand("deconvolve", "Voigt resolution extraction");
    add_common(dec_cmd);
    dec_cmd->add_option("--data", data_paths, "position-scan CSV")->required();
    auto* img_cmd = app.add_subcommand("image", "transmission imaging pipeline");
    add_common(img_cmd);
    auto* dyn_cmd = app.add_subcommand("dynamics", "mean-field ramp trajectory");
    add_common(dyn_cmd);

    CLI11_PARSE(app, argc, argv);

    const std::string config_text = config_path.empty() ? "" : slurp(config_path);
    const ck::Config cfg =
        config_path.empty() ? ck::Config{} : ck::parse_config(ck::load_config_tree(config_path));
    ck::QuadratureSpec spec;

    if (modes_cmd->parsed()) {
        std::ofstream out(out_path);
        out << "n,re_weight,im_weight,cumulative_enhancement\n";
        double cum = 0.0;
        for (int n = 0; n <= cfg.cavity.n_max; n += 4) {
            const auto w = ck::mode_weight({n, 0}, cfg.cavity);
            cum += w.real();  // families contribute weight x (count factor 1 at center)
            out << n << "," << fmt(w.real()) << "," << fmt(w.imag()) << "," << fmt(cum)
                << "\n";
        }
        write_sidecar("modes", config_text, seed, out_path);
        return 0;
    }

    if (greens_cmd->parsed()) {
        if (extent <= 0.0) extent = 4.0 * cfg.cavity.w0;
        std::ofstream out(out_path);
        out << "x_um,y_um,re_D,im_D,method,rel_err_est\n";
        const ck::Vec2 src{source_x, source_y};
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                const double x = (i - 0.5 * (grid - 1)) * extent / grid;
                const double y = (j - 0.5 * (grid - 1)) * extent / grid;
                const auto s = ck::greens_point({x, y}, src, cfg.cavity, spec);
                out << fmt(x) << "," << fmt(y) << "," << fmt(s.value.real()) << ","
                    << fmt(s.value.imag()) << ","
                    << (s.method == ck::KernelMethod::ClosedForm ? "closed_form"
                                                                 : "quadrature")
                    << "," << fmt(s.rel_err_est) << "\n";
            }
        write_sidecar("greens-map", config_text, seed, out_path);
        return 0;
    }

    if (coop_cmd->parsed()) {
        const auto dets = parse_range(detunings_text);
        std::ofstream out(out_path);
        out << "detuning_MHz,ratio_quadrature,ratio_closed_form,c_mm\n";
        for (double det_mhz : dets) {
            ck::CavityParams cav = cfg.cavity;
            cav.delta_c = mhz_to_angular(det_mhz);
            const auto pair = ck::enhancement_cloud_aniso(cav, cfg.cloud, spec);
            out << fmt(det_mhz) << "," << fmt(pair.quadrature.ratio) << ","
                << fmt(pair.closed_form.ratio) << "," << fmt(pair.closed_form.c_mm)
                << "\n";
        }
        write_sidecar("coop-curve", config_text, seed, out_path);
        return 0;
    }

    if (thr_cmd->parsed()) {
        std::ofstream out(out_path);
        if (mode == "detuning") {
            std::vector<double> dets;
            for (double d : parse_range(detunings_text)) dets.push_back(mhz_to_angular(d));
            const auto rows = ck::scan_detuning(cfg.cloud, cfg.cavity, cfg.pump, dets, spec);
            out << "delta_c_MHz,omega_c_MHz,omega_c_norm_MHz,enhancement,ok\n";
            for (const auto& r : rows)
                out << fmt(angular_to_mhz(r.x)) << "," << fmt(angular_to_mhz(r.omega_c))
                    << "," << fmt(angular_to_mhz(r.omega_c_norm)) << ","
                    << fmt(r.enhancement) << "," << (r.ok ? 1 : 0) << "\n";
        } else {
            const auto xs = parse_range(positions_text);
            const auto rows = ck::scan_position(cfg.cloud, cfg.cavity, cfg.pump, xs, spec);
            out << "x_um,omega_c_MHz,omega_c_norm_MHz,enhancement,ok\n";
            for (const auto& r : rows)
                out << fmt(r.x) << "," << fmt(angular_to_mhz(r.omega_c)) << ","
                    << fmt(angular_to_mhz(r.omega_c_norm)) << "," << fmt(r.enhancement)
                    << "," << (r.ok ? 1 : 0) << "\n";
        }
        write_sidecar("threshold-scan", config_text, seed, out_path);
        return 0;
    }

    if (fit_cmd->parsed() || boot_cmd->parsed()) {
        const auto datasets = load_datasets(data_paths, cfg);
        ck::FitParams init;
        init.epsilon = cfg.cavity.epsilon;
        init.alpha = cfg.cavity.alpha;
        init.delta_0 = cfg.cavity.delta_0;
        int n_amp = 0;
        for (const auto& ds : datasets) n_amp = std::max(n_amp, ds.amplitude_index + 1);
        init.amplitudes.assign(n_amp, 1.5);
        const ck::FitResult res = ck::fit_global(datasets, init);
        nlohmann::json j = fit_result_json(res);
        if (boot_cmd->parsed()) {
            const auto boot = ck::bootstrap(datasets, res.params, n_resamples, seed);
            j["bootstrap"]["n_resamples"] = n_resamples;
            j["bootstrap"]["seed"] = seed;
            j["bootstrap"]["n_failed"] = boot.n_failed;
            j["bootstrap"]["mean_epsilon_over_2pi_MHz"] = angular_to_mhz(boot.mean.epsilon);
            j["bootstrap"]["median_epsilon_over_2pi_MHz"] =
                angular_to_mhz(boot.median.epsilon);
            j["bootstrap"]["mean_alpha"] = boot.mean.alpha;
            j["bootstrap"]["median_alpha"] = boot.median.alpha;
            j["bootstrap"]["sigma_epsilon_over_2pi_MHz"] =
                angular_to_mhz(std::sqrt(std::max(0.0, boot.covariance(0, 0))));
        }
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
        write_sidecar(boot_cmd->parsed() ? "bootstrap" : "fit", config_text, seed, out_path);
        return 0;
    }

    if (dec_cmd->parsed()) {
        std::ifstream in(data_paths.front());
        if (!in) throw ck::ConfigError("deconvolve: cannot open " + data_paths.front());
        std::string line;
        std::getline(in, line);  // header
        std::vector<double> xs, ys;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string a, b;
            std::getline(ss, a, ',');
            std::getline(ss, b, ',');
            xs.push_back(std::stod(a));
            ys.push_back(std::stod(b));
        }
        const double shift = ck::peak_offset_correction(xs, ys);
        const auto res = ck::voigt_deconvolve(xs, ys, cfg.cloud);
        nlohmann::json j;
        j["peak_shift_um"] = shift;
        j["hwhm_total_um"] = res.hwhm_total;
        j["hwhm_lorentz_um"] = res.hwhm_lorentz;
        j["hwhm_lorentz_unc_um"] = res.lorentz_unc;
        std::ofstream out(out_path);
        out << j.dump(2) << "\n";
        write_sidecar("deconvolve", config_text, seed, out_path);
        return 0;
    }

    if (img_cmd->parsed()) {
        const int n = (int)cfg.raw.number_or("image", "grid", 256);
        const double ext = cfg.raw.number_or("image", "extent_um", 4.0 * cfg.cavity.w0 + 40.0);
        const double waist = cfg.raw.number_or("image", "pump_waist_um", 1.7);
        const ck::Vec2 center{cfg.raw.number_or("image", "pump_x_um", 0.0),
                              cfg.raw.number_or("image", "pump_y_um", 0.0)};
        ck::OpticsChain chain;
        chain.magnification = cfg.raw.number_or("image", "magnification", 0.69);
        chain.psf_sigma = cfg.raw.number_or("image", "psf_sigma_um", 1.0);
        const auto pump = ck::make_gaussian_pump(n, ext, waist, center);
        const auto field = ck::steady_state_field(pump, cfg.cavity, spec);
        const auto img = ck::transmission_image(field, chain);
        std::ofstream out(out_path);
        out << "x_um,y_um,intensity\n";
        for (int i = 0; i < img.n; ++i)
            for (int j2 = 0; j2 < img.n; ++j2)
                out << fmt(img.coord(i)) << "," << fmt(img.coord(j2)) << ","
                    << fmt(img.at(i, j2).real()) << "\n";
        write_pgm16(img, out_path + ".pgm");
        write_sidecar("image", config_text, seed, out_path);
        return 0;
    }

    if (dyn_cmd->parsed()) {
        const int n_max = (int)cfg.raw.number_or("dynamics", "n_max", 20);
        const double t_end = cfg.raw.number_or("dynamics", "duration_us", 50.0) * 1e-6;
        const double om_start =
            mhz_to_angular(cfg.raw.number_or("dynamics", "omega_start_over_2pi_MHz", 0.0));
        const double om_end =
            mhz_to_angular(cfg.raw.number_or("dynamics", "omega_end_over_2pi_MHz", 10.0));
        const double tol = cfg.raw.number_or("dynamics", "tol", 1e-8);
        const double dt_out = cfg.raw.number_or("dynamics", "dt_out_us", 0.1) * 1e-6;
        const auto basis = ck::ModeBasis::build(cfg.cloud, cfg.cavity.w0, n_max);
        ck::RampProtocol ramp;
        ramp.seed_amplitude = cfg.raw.number_or("dynamics", "seed_amplitude", 1e-6);
        ramp.knots = {{0.0, om_start}, {t_end, om_end}};
        const auto state0 = ck::seeded_state(basis, ramp.seed_amplitude);
        const auto traj =
            ck::integrate(state0, basis, cfg.cloud, cfg.cavity, cfg.pump, ramp, tol, dt_out);
        std::ofstream out(out_path);
        out << "t_us,psi_f_sq,psi_b_sq,flux_proxy,omega_over_2pi_MHz\n";
        for (const auto& s : traj.samples)
            out << fmt(s.state.time * 1e6) << "," << fmt(std::norm(s.state.psi_f)) << ","
                << fmt(std::norm(s.state.psi_b)) << "," << fmt(s.flux) << ","
                << fmt(angular_to_mhz(s.omega)) << "\n";
        write_sidecar("dynamics", config_text, seed, out_path);
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ck::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
}
