#include "gpamr/solver.hpp"
#include "gpamr/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace gpamr;
using nlohmann::json;

namespace {

struct CommonFlags {
    int threads = 0;
    std::string config_path;
};

// --config JSON wins over command-line flags
json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j;
    in >> j;
    return j;
}

template <class T> void override_from(const json& cfg, const char* key, T& value) {
    if (cfg.contains(key)) value = cfg[key].get<T>();
}

std::array<int, 3> parse_ratio(const std::string& s, int dim) {
    std::array<int, 3> r = {1, 1, 1};
    int d = 0;
    size_t pos = 0;
    while (pos < s.size() && d < 3) {
        size_t next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        r[d++] = std::stoi(s.substr(pos, next - pos));
        pos = next + 1;
    }
    for (int k = d; k < dim; ++k) r[k] = r[d - 1];
    return r;
}

weights::GpConfig make_config(int dim, const std::string& ratio, const std::string& mode,
                              double ell_factor, double sigma_factor) {
    weights::GpConfig c;
    c.dim = dim;
    c.ratio = parse_ratio(ratio, dim);
    c.mode = (mode == "point") ? weights::DataMode::pointwise
                               : weights::DataMode::cell_averaged;
    c.ell_factor = ell_factor;
    c.sigma_factor = sigma_factor;
    return c;
}

// GP_PROLONG_CACHE_DIR persists weight dumps between runs
void persist_weights(const weights::ProlongWeights& W) {
    const char* dir = std::getenv("GP_PROLONG_CACHE_DIR");
    if (!dir || !*dir) return;
    std::filesystem::create_directories(dir);
    const auto& c = W.config;
    char name[160];
    std::snprintf(name, sizeof(name), "weights_d%d_r%d%d%d_%s_ell%g_sig%g.json", c.dim,
                  c.ratio[0], c.ratio[1], c.ratio[2],
                  c.mode == weights::DataMode::pointwise ? "point" : "cell", c.ell_factor,
                  c.sigma_factor_effective());
    const auto path = std::filesystem::path(dir) / name;
    if (std::filesystem::exists(path)) return;
    std::ofstream out(path);
    out << weights::weights_to_json(W);
}

int cmd_weights(int dim, const std::string& ratio, const std::string& mode,
                double ell_factor, double sigma_factor, const std::string& out_path) {
    auto cfg = make_config(dim, ratio, mode, ell_factor, sigma_factor);
    auto W = weights::get_weights(cfg);
    persist_weights(*W);

    const std::string dump = weights::weights_to_json(*W);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot open " + out_path);
        out << dump;
    } else {
        std::cout << dump << "\n";
    }

    for (int f = 0; f < W->fine_points.count(); ++f) {
        double s = 0.0;
        for (double w : W->w_total[f]) s += w;
        std::printf("fine point %d: sum(w) = %.17g, gamma residual = %.17g\n", f, s,
                    W->gamma_residual[f]);
    }
    std::printf("sigma eigenvalues: min = %.17g, max = %.17g\n",
                W->sigma_eigenvalues.front(), W->sigma_eigenvalues.back());
    return 0;
}

int cmd_convergence(const std::vector<int>& grids, const std::string& mode,
                    const std::string& out_path, const std::string& report_path) {
    const auto dm = (mode == "point") ? weights::DataMode::pointwise
                                      : weights::DataMode::cell_averaged;
    const auto t0 = std::chrono::steady_clock::now();
    auto res = solver::convergence_study(dm, grids);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::FILE* out = out_path.empty() ? stdout : std::fopen(out_path.c_str(), "w");
    if (!out) throw std::runtime_error("cannot open " + out_path);
    std::fprintf(out, "n,error_linear,error_switch,slope\n");
    for (size_t k = 0; k < res.rows.size(); ++k) {
        std::fprintf(out, "%d,%.17g,%.17g", res.rows[k].n, res.rows[k].error,
                     res.rows[k].error_switch);
        if (k > 0)
            std::fprintf(out, ",%.17g\n", res.slopes[k - 1]);
        else
            std::fprintf(out, ",\n");
    }
    if (out != stdout) std::fclose(out);

    if (!report_path.empty()) {
        json rep;
        rep["command"] = "convergence";
        rep["mode"] = mode;
        rep["grids"] = grids;
        rep["errors"] = json::array();
        for (const auto& r : res.rows) rep["errors"].push_back(r.error);
        rep["slopes"] = res.slopes;
        rep["switch_stayed_linear"] = res.switch_stayed_linear;
        rep["wall_seconds"] = secs;
        std::ofstream f(report_path);
        f << rep.dump(2) << "\n";
    }

    bool ok = true;
    for (size_t k = 0; k < res.slopes.size(); ++k) {
        std::printf("slope %d->%d: %.3f\n", res.rows[k].n, res.rows[k + 1].n,
                    res.slopes[k]);
        if (res.slopes[k] < 2.5) ok = false;
    }
    if (!ok) std::printf("regression floor: a slope fell below 2.5\n");
    return ok ? 0 : 1;
}

int cmd_advect(const std::string& problem, int base, int levels,
               const std::string& prolong, double tfinal, const std::string& out_dir,
               double tag_threshold, int regrid_interval, int plot_interval, double cfl) {
    amr::Prolongator P;
    P.cfg.dim = 2;
    P.cfg.ratio = {2, 2, 1};
    P.cfg.mode = weights::DataMode::cell_averaged;
    if (prolong == "gp-weno-always") P.cfg.alpha_c = 0.0;
    P.W = weights::get_weights(P.cfg);
    P.kind = (prolong == "mc-linear") ? amr::ProlongKind::mc_linear : amr::ProlongKind::gp;
    persist_weights(*P.W);

    solver::AdvectOptions opt;
    opt.profile = (problem == "slotted") ? solver::ProfileKind::slotted_cylinder
                                         : solver::ProfileKind::vortex_gaussian;
    opt.base_n = base;
    opt.max_levels = levels + 1; // flag counts refinements above the base
    opt.tfinal = tfinal;
    opt.cfl = cfl;
    opt.regrid_interval = regrid_interval;
    opt.plot_interval = plot_interval;
    opt.tag_threshold =
        tag_threshold > 0.0 ? tag_threshold : (problem == "slotted" ? 0.5 : 1.01);
    opt.out_dir = out_dir;

    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    const auto t0 = std::chrono::steady_clock::now();
    auto res = solver::run_advect(opt, P);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!out_dir.empty()) {
        std::ofstream csv(std::filesystem::path(out_dir) / "series.csv");
        csv << "step,t,dt,l1_vs_initial,cells_per_level,prolong_calls,weno_fraction\n";
        char buf[256];
        for (const auto& r : res.series) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,", r.step, r.t, r.dt,
                          r.l1_vs_initial);
            csv << buf;
            for (size_t k = 0; k < r.cells_per_level.size(); ++k)
                csv << (k ? "|" : "") << r.cells_per_level[k];
            std::snprintf(buf, sizeof(buf), ",%ld,%.17g\n", r.prolong_calls,
                          r.weno_fraction);
            csv << buf;
        }

        json rep;
        rep["command"] = "advect";
        rep["problem"] = problem;
        rep["base"] = base;
        rep["levels"] = levels;
        rep["prolong"] = prolong;
        rep["tfinal"] = tfinal;
        rep["cfl"] = cfl;
        rep["tag_threshold"] = opt.tag_threshold;
        rep["regrid_interval"] = regrid_interval;
        rep["gp_config"] = {
            {"dim", P.cfg.dim},
            {"ratio", {P.cfg.ratio[0], P.cfg.ratio[1], P.cfg.ratio[2]}},
            {"mode", P.cfg.mode == weights::DataMode::pointwise ? "point" : "cell"},
            {"ell_factor", P.cfg.ell_factor},
            {"sigma_factor", P.cfg.sigma_factor_effective()},
            {"alpha_c", P.cfg.alpha_c},
            {"eps", P.cfg.eps},
            {"p", P.cfg.p},
            {"eps2", P.cfg.eps2},
        };
        rep["final_l1"] = res.final_l1;
        rep["mass_initial"] = res.mass_initial;
        rep["mass_final"] = res.mass_final;
        rep["steps"] = res.steps;
        rep["prolong_calls"] = res.prolong_calls;
        rep["weno_calls"] = res.weno_calls;
        rep["min_prolonged"] = res.min_prolonged;
        rep["max_prolonged"] = res.max_prolonged;
        rep["wall_seconds"] = secs;
        rep["artifacts"] = {(std::filesystem::path(out_dir) / "series.csv").string()};
        std::ofstream f(std::filesystem::path(out_dir) / "report.json");
        f << rep.dump(2) << "\n";
    }

    std::printf("%s %s: steps=%d final_l1=%.17g prolong_calls=%ld weno_fraction=%.6f\n",
                problem.c_str(), prolong.c_str(), res.steps, res.final_l1,
                res.prolong_calls,
                res.prolong_calls ? double(res.weno_calls) / res.prolong_calls : 0.0);
    std::printf("mass drift (relative): %.3e  prolonged range: [%.6f, %.6f]\n",
                std::abs(res.mass_final - res.mass_initial) /
                    std::max(1e-300, std::abs(res.mass_initial)),
                res.min_prolonged, res.max_prolonged);
    return 0;
}

int cmd_alpha_demo(int n, const std::string& out_path) {
    auto demo = solver::alpha_demo(n);
    std::FILE* out = out_path.empty() ? stdout : std::fopen(out_path.c_str(), "w");
    if (!out) throw std::runtime_error("cannot open " + out_path);
    std::fprintf(out, "x,y,f,alpha\n");
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            std::fprintf(out, "%.17g,%.17g,%.17g,%.17g\n", -2.0 + (i + 0.5) * demo.dx,
                         -2.0 + (j + 0.5) * demo.dx, demo.f[size_t(j) * n + i],
                         demo.alpha[size_t(j) * n + i]);
    if (out != stdout) std::fclose(out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GP-based AMR prolongation toolkit"};
    app.require_subcommand(1);

    CommonFlags common;
    app.add_option("--threads", common.threads, "OpenMP thread count (0 = default)");
    app.add_option("--config", common.config_path, "JSON file overriding flags");

    // weights
    int dim = 2;
    std::string ratio = "2,2", mode = "cell", out_path;
    double ell_factor = 12.0, sigma_factor = -1.0;
    auto* w = app.add_subcommand("weights", "build and dump prolongation weights");
    w->add_option("--dim", dim)->check(CLI::Range(1, 3));
    w->add_option("--ratio", ratio);
    w->add_option("--mode", mode)->check(CLI::IsMember({"point", "cell"}));
    w->add_option("--ell-factor", ell_factor);
    w->add_option("--sigma-factor", sigma_factor);
    w->add_option("--out", out_path);

    // convergence
    std::vector<int> grids = {32, 64, 128, 256, 512};
    std::string conv_mode = "cell", conv_out, conv_report;
    auto* cv = app.add_subcommand("convergence", "pure-interpolation accuracy ladder");
    cv->add_option("--grids", grids)->delimiter(',');
    cv->add_option("--mode", conv_mode)->check(CLI::IsMember({"point", "cell"}));
    cv->add_option("--out", conv_out);
    cv->add_option("--report", conv_report);

    // advect
    std::string problem = "vortex", prolong = "gp", out_dir;
    int base = 64, levels = 2, regrid_interval = 2, plot_interval = 0;
    double tfinal = 2.0, tag_threshold = -1.0, cfl = 0.7;
    auto* ad = app.add_subcommand("advect", "run the AMR advection harness");
    ad->add_option("--problem", problem)->check(CLI::IsMember({"vortex", "slotted"}));
    ad->add_option("--base", base);
    ad->add_option("--levels", levels, "refinement levels above the base");
    ad->add_option("--prolong", prolong)
        ->check(CLI::IsMember({"gp", "gp-weno-always", "mc-linear"}));
    ad->add_option("--tfinal", tfinal);
    ad->add_option("--out-dir", out_dir);
    ad->add_option("--tag-threshold", tag_threshold);
    ad->add_option("--regrid-interval", regrid_interval);
    ad->add_option("--plot-interval", plot_interval);
    ad->add_option("--cfl", cfl);

    // alpha-demo
    int demo_n = 128;
    std::string demo_out;
    auto* al = app.add_subcommand("alpha-demo", "smoothness switch over the jump profile");
    al->add_option("--n", demo_n);
    al->add_option("--out", demo_out);

    CLI11_PARSE(app, argc, argv);

    try {
        const json cfg = load_config(common.config_path);
        override_from(cfg, "threads", common.threads);
        if (common.threads > 0) omp_set_num_threads(common.threads);

        if (app.got_subcommand(w)) {
            override_from(cfg, "dim", dim);
            override_from(cfg, "ratio", ratio);
            override_from(cfg, "mode", mode);
            override_from(cfg, "ell_factor", ell_factor);
            override_from(cfg, "sigma_factor", sigma_factor);
            override_from(cfg, "out", out_path);
            return cmd_weights(dim, ratio, mode, ell_factor, sigma_factor, out_path);
        }
        if (app.got_subcommand(cv)) {
            override_from(cfg, "grids", grids);
            override_from(cfg, "mode", conv_mode);
            override_from(cfg, "out", conv_out);
            override_from(cfg, "report", conv_report);
            return cmd_convergence(grids, conv_mode, conv_out, conv_report);
        }
        if (app.got_subcommand(ad)) {
            override_from(cfg, "problem", problem);
            override_from(cfg, "base", base);
            override_from(cfg, "levels", levels);
            override_from(cfg, "prolong", prolong);
            override_from(cfg, "tfinal", tfinal);
            override_from(cfg, "out_dir", out_dir);
            override_from(cfg, "tag_threshold", tag_threshold);
            override_from(cfg, "regrid_interval", regrid_interval);
            override_from(cfg, "plot_interval", plot_interval);
            override_from(cfg, "cfl", cfl);
            return cmd_advect(problem, base, levels, prolong, tfinal, out_dir,
                              tag_threshold, regrid_interval, plot_interval, cfl);
        }
        if (app.got_subcommand(al)) {
            override_from(cfg, "n", demo_n);
            override_from(cfg, "out", demo_out);
            return cmd_alpha_demo(demo_n, demo_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
