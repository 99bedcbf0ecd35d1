#include "gpamr/solver.hpp"
#include "gpamr/errors.hpp"
#include "gpamr/smallmat.hpp"

#include <algorithm>
#include <cmath>

namespace gpamr::solver {

using amr::Hierarchy;
using amr::Patch;
using amr::Prolongator;

namespace {

constexpr double kPi = 3.14159265358979323846;

double gauss_integral(double a, double b, double c, double x0) {
    // integral of exp(-c (x-x0)^2) over [a, b]
    const double s = std::sqrt(c);
    return 0.5 * std::sqrt(kPi / c) *
           (smallmat::erf(s * (b - x0)) - smallmat::erf(s * (a - x0)));
}

bool in_slot(double x, double y) {
    return std::abs(x - 0.5) < 0.025 && y < 0.6 + 0.25;
}

bool in_cylinder(double x, double y) {
    const double dx = x - 0.5, dy = y - 0.75;
    return dx * dx + dy * dy <= 0.15 * 0.15;
}

} // namespace

double profile_value(ProfileKind kind, double x, double y) {
    switch (kind) {
    case ProfileKind::vortex_gaussian:
        return 1.0 + std::exp(-100.0 * ((x - 0.5) * (x - 0.5) + (y - 0.75) * (y - 0.75)));
    case ProfileKind::slotted_cylinder:
        return (in_cylinder(x, y) && !in_slot(x, y)) ? 1.0 : 0.0;
    case ProfileKind::accuracy_gaussian:
        return std::exp(-(x * x + y * y));
    case ProfileKind::alpha_demo:
        return (x * x + y * y) < 0.5 ? 1.0 + std::exp(-(x * x + y * y)) : 0.25;
    }
    return 0.0;
}

double profile_cell_average(ProfileKind kind, double x0, double x1, double y0, double y1) {
    const double ax = x1 - x0, ay = y1 - y0;
    switch (kind) {
    case ProfileKind::vortex_gaussian:
        return 1.0 + gauss_integral(x0, x1, 100.0, 0.5) * gauss_integral(y0, y1, 100.0, 0.75) /
                         (ax * ay);
    case ProfileKind::accuracy_gaussian:
        return gauss_integral(x0, x1, 1.0, 0.0) * gauss_integral(y0, y1, 1.0, 0.0) /
               (ax * ay);
    case ProfileKind::slotted_cylinder:
    case ProfileKind::alpha_demo: {
        // 16-point subcell sampling
        double s = 0.0;
        for (int b = 0; b < 4; ++b)
            for (int a = 0; a < 4; ++a)
                s += profile_value(kind, x0 + (a + 0.5) * ax / 4.0,
                                   y0 + (b + 0.5) * ay / 4.0);
        return s / 16.0;
    }
    }
    return 0.0;
}

double velocity_u(double x, double y, double t) {
    const double sx = std::sin(kPi * x);
    return sx * sx * std::sin(2.0 * kPi * y) * std::cos(kPi * t / 2.0);
}

double velocity_v(double x, double y, double t) {
    const double sy = std::sin(kPi * y);
    return -std::sin(2.0 * kPi * x) * sy * sy * std::cos(kPi * t / 2.0);
}

double face_avg_u(double x, double y0, double y1, double t) {
    const double sx = std::sin(kPi * x);
    return sx * sx * (std::cos(2.0 * kPi * y0) - std::cos(2.0 * kPi * y1)) /
           (2.0 * kPi * (y1 - y0)) * std::cos(kPi * t / 2.0);
}

double face_avg_v(double x0, double x1, double y, double t) {
    const double sy = std::sin(kPi * y);
    return -sy * sy * (std::cos(2.0 * kPi * x0) - std::cos(2.0 * kPi * x1)) /
           (2.0 * kPi * (x1 - x0)) * std::cos(kPi * t / 2.0);
}

namespace {

double mc_slope(double lo, double c, double hi) {
    const double dc = 0.5 * (hi - lo);
    const double dp = 2.0 * (hi - c);
    const double dm = 2.0 * (c - lo);
    return (dp * dm > 0.0)
               ? std::copysign(std::min({std::abs(dc), std::abs(dp), std::abs(dm)}), dc)
               : 0.0;
}

// One cell of the conservative MUSCL update.
double stage_cell(const Patch& stage, const Patch& base, const Hierarchy& h, int i,
                  int j, int c, double t, double dt, double coef, double dx) {
    const double xlo = h.phys_lo[0], ylo = h.phys_lo[1];
    const double yc = ylo + (j + 0.5) * dx;
    const double xc = xlo + (i + 0.5) * dx;

    // Exact face-averaged velocities: their discrete divergence telescopes
    // to zero, so constants ride through the update untouched.
    auto xflux = [&](int fi) {
        const double u = face_avg_u(xlo + fi * dx, yc - 0.5 * dx, yc + 0.5 * dx, t);
        double q;
        if (u >= 0.0)
            q = stage.at(fi - 1, j, c) + 0.5 * mc_slope(stage.at(fi - 2, j, c),
                                                        stage.at(fi - 1, j, c),
                                                        stage.at(fi, j, c));
        else
            q = stage.at(fi, j, c) - 0.5 * mc_slope(stage.at(fi - 1, j, c),
                                                    stage.at(fi, j, c),
                                                    stage.at(fi + 1, j, c));
        return u * q;
    };
    auto yflux = [&](int fj) {
        const double v = face_avg_v(xc - 0.5 * dx, xc + 0.5 * dx, ylo + fj * dx, t);
        double q;
        if (v >= 0.0)
            q = stage.at(i, fj - 1, c) + 0.5 * mc_slope(stage.at(i, fj - 2, c),
                                                        stage.at(i, fj - 1, c),
                                                        stage.at(i, fj, c));
        else
            q = stage.at(i, fj, c) - 0.5 * mc_slope(stage.at(i, fj - 1, c),
                                                    stage.at(i, fj, c),
                                                    stage.at(i, fj + 1, c));
        return v * q;
    };

    const double div = (xflux(i + 1) - xflux(i)) / dx + (yflux(j + 1) - yflux(j)) / dx;
    return base.at(i, j, c) - coef * dt * div;
}

void muscl_stage_impl(const Patch& stage, const Patch& base, Patch& out,
                      const Hierarchy& h, double t, double dt, double coef,
                      bool parallel) {
    const double dx = h.levels[stage.level].dx;
    const amr::Box b = stage.box;
    const int ny = b.ny();
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int jj = 0; jj < ny; ++jj) {
            const int j = b.lo[1] + jj;
            for (int c = 0; c < stage.ncomp; ++c)
                for (int i = b.lo[0]; i <= b.hi[0]; ++i)
                    out.at(i, j, c) = stage_cell(stage, base, h, i, j, c, t, dt, coef, dx);
        }
    } else {
        for (int jj = 0; jj < ny; ++jj) {
            const int j = b.lo[1] + jj;
            for (int c = 0; c < stage.ncomp; ++c)
                for (int i = b.lo[0]; i <= b.hi[0]; ++i)
                    out.at(i, j, c) = stage_cell(stage, base, h, i, j, c, t, dt, coef, dx);
        }
    }
}

} // namespace

void muscl_stage(const Patch& stage, const Patch& base, Patch& out, const Hierarchy& h,
                 double t, double dt, double coef) {
    muscl_stage_impl(stage, base, out, h, t, dt, coef, true);
}

void muscl_stage_serial(const Patch& stage, const Patch& base, Patch& out,
                        const Hierarchy& h, double t, double dt, double coef) {
    muscl_stage_impl(stage, base, out, h, t, dt, coef, false);
}

void advance(Hierarchy& h, const Prolongator& P, double t, double dt, double cfl,
             bool parallel) {
    const double dx_fine = h.levels[h.finest()].dx;
    if (dt * 1.0 / dx_fine > cfl * (1.0 + 1e-12))
        throw CflViolation("dt " + std::to_string(dt) + " exceeds CFL " +
                           std::to_string(cfl) + " at dx " + std::to_string(dx_fine));

    amr::fill_all_halos(h, P);
    Hierarchy half = h;
    for (int lev = 0; lev <= h.finest(); ++lev)
        for (size_t k = 0; k < h.levels[lev].patches.size(); ++k)
            muscl_stage_impl(h.levels[lev].patches[k], h.levels[lev].patches[k],
                             half.levels[lev].patches[k], h, t, dt, 0.5, parallel);
    amr::average_down(half);
    amr::fill_all_halos(half, P);
    for (int lev = 0; lev <= h.finest(); ++lev)
        for (size_t k = 0; k < h.levels[lev].patches.size(); ++k)
            muscl_stage_impl(half.levels[lev].patches[k], h.levels[lev].patches[k],
                             h.levels[lev].patches[k], h, t + 0.5 * dt, dt, 1.0,
                             parallel);
    amr::average_down(h);
}

amr::Hierarchy build_initial_hierarchy(const AdvectOptions& opt, const Prolongator& P) {
    Hierarchy h;
    h.phys_lo = {0.0, 0.0};
    h.phys_hi = {1.0, 1.0};
    h.ratio = 2;
    h.ncomp = 1;

    amr::Level base;
    base.extent = {opt.base_n, opt.base_n};
    base.dx = 1.0 / opt.base_n;
    Patch p0;
    p0.level = 0;
    p0.box = {{0, 0}, {opt.base_n - 1, opt.base_n - 1}};
    p0.ncomp = 1;
    p0.allocate();
    base.patches.push_back(std::move(p0));
    h.levels.push_back(std::move(base));

    auto init_level = [&](int lev) {
        amr::Level& L = h.levels[lev];
        for (Patch& p : L.patches)
            for (int j = p.box.lo[1]; j <= p.box.hi[1]; ++j)
                for (int i = p.box.lo[0]; i <= p.box.hi[0]; ++i) {
                    const double x0 = h.phys_lo[0] + i * L.dx;
                    const double y0 = h.phys_lo[1] + j * L.dx;
                    p.at(i, j, 0) = profile_cell_average(opt.profile, x0, x0 + L.dx, y0,
                                                         y0 + L.dx);
                }
    };
    init_level(0);

    for (int lev = 1; lev < opt.max_levels; ++lev) {
        amr::TagField tags = amr::tag_cells(h, lev - 1, opt.tag_threshold);
        if (tags.count() == 0) break;
        amr::RegridOptions ropt;
        ropt.threshold = opt.tag_threshold;
        ropt.buffer = opt.regrid_buffer;
        ropt.max_levels = opt.max_levels;
        const auto boxes = amr::plan_boxes(h, lev - 1, ropt);
        if (boxes.empty()) break;
        amr::Level L;
        L.extent = {h.levels[lev - 1].extent[0] * h.ratio,
                    h.levels[lev - 1].extent[1] * h.ratio};
        L.dx = h.levels[lev - 1].dx / h.ratio;
        for (const amr::Box& cb : boxes) {
            Patch p;
            p.level = lev;
            p.box = cb.refined(h.ratio);
            p.ncomp = 1;
            p.allocate();
            L.patches.push_back(std::move(p));
        }
        h.levels.push_back(std::move(L));
        init_level(lev);
    }
    amr::fill_all_halos(h, P);
    return h;
}

double l1_vs_initial(const Hierarchy& h, ProfileKind kind) {
    double err = 0.0;
    for (int lev = 0; lev <= h.finest(); ++lev) {
        const amr::Level& L = h.levels[lev];
        const double vol = L.dx * L.dx;
        std::vector<std::uint8_t> covered(static_cast<size_t>(L.extent[0]) * L.extent[1],
                                          0);
        if (lev < h.finest())
            for (const Patch& fp : h.levels[lev + 1].patches) {
                const amr::Box cb = fp.box.coarsened(h.ratio);
                for (int j = cb.lo[1]; j <= cb.hi[1]; ++j)
                    for (int i = cb.lo[0]; i <= cb.hi[0]; ++i)
                        covered[static_cast<size_t>(j) * L.extent[0] + i] = 1;
            }
        for (const Patch& p : L.patches)
            for (int j = p.box.lo[1]; j <= p.box.hi[1]; ++j)
                for (int i = p.box.lo[0]; i <= p.box.hi[0]; ++i) {
                    if (covered[static_cast<size_t>(j) * L.extent[0] + i]) continue;
                    const double x0 = h.phys_lo[0] + i * L.dx;
                    const double y0 = h.phys_lo[1] + j * L.dx;
                    err += std::abs(p.at(i, j, 0) -
                                    profile_cell_average(kind, x0, x0 + L.dx, y0,
                                                         y0 + L.dx)) *
                           vol;
                }
    }
    const double domain = (h.phys_hi[0] - h.phys_lo[0]) * (h.phys_hi[1] - h.phys_lo[1]);
    return err / domain;
}

AdvectResult run_advect(const AdvectOptions& opt, const Prolongator& P) {
    Hierarchy h = build_initial_hierarchy(opt, P);
    P.reset_counters();

    AdvectResult res;
    res.mass_initial = amr::composite_integral(h);

    const double dx_finest = h.levels[0].dx / std::pow(h.ratio, opt.max_levels - 1);
    const double dt0 = opt.cfl * dx_finest; // velocity magnitudes stay below 1

    amr::RegridOptions ropt;
    ropt.threshold = opt.tag_threshold;
    ropt.buffer = opt.regrid_buffer;
    ropt.max_levels = opt.max_levels;

    auto record = [&](int step, double t, double dt) {
        StepRecord r;
        r.step = step;
        r.t = t;
        r.dt = dt;
        r.l1_vs_initial = l1_vs_initial(h, opt.profile);
        for (int lev = 0; lev <= h.finest(); ++lev) {
            long n = 0;
            for (const Patch& p : h.levels[lev].patches) n += p.box.cells();
            r.cells_per_level.push_back(n);
        }
        r.prolong_calls = P.cells_prolonged.load();
        r.weno_fraction = r.prolong_calls
                              ? static_cast<double>(P.weno_cells.load()) / r.prolong_calls
                              : 0.0;
        res.series.push_back(std::move(r));
    };

    auto plot = [&](int step) {
        if (opt.out_dir.empty() || opt.plot_interval <= 0) return;
        if (step % opt.plot_interval != 0) return;
        char name[32];
        std::snprintf(name, sizeof(name), "plt_%06d.csv", step);
        amr::write_plotfile_csv(h, opt.out_dir + "/" + name);
    };

    record(0, 0.0, 0.0);
    plot(0);
    double t = 0.0;
    int step = 0;
    while (t < opt.tfinal - 1e-12) {
        const double dt = std::min(dt0, opt.tfinal - t);
        advance(h, P, t, dt, opt.cfl, opt.parallel);
        t += dt;
        ++step;
        if (opt.regrid_interval > 0 && step % opt.regrid_interval == 0 &&
            opt.max_levels > 1)
            amr::regrid(h, P, ropt);
        record(step, t, dt);
        plot(step);
    }

    res.steps = step;
    res.final_l1 = res.series.back().l1_vs_initial;
    res.mass_final = amr::composite_integral(h);
    res.prolong_calls = P.cells_prolonged.load();
    res.weno_calls = P.weno_cells.load();
    res.min_prolonged = P.min_seen.load();
    res.max_prolonged = P.max_seen.load();
    return res;
}

ConvergenceResult convergence_study(weights::DataMode mode, const std::vector<int>& grids,
                                    bool parallel) {
    ConvergenceResult out;
    const bool cell = mode == weights::DataMode::cell_averaged;

    for (int n : grids) {
        const double dx = 4.0 / n;
        weights::GpConfig cfg;
        cfg.dim = 2;
        cfg.ratio = {2, 2, 1};
        cfg.mode = mode;
        cfg.dx = {dx, dx, 1.0};
        auto W = weights::get_weights(cfg);

        // coarse data with a two-cell analytic frame
        const int ext = n + 4;
        std::vector<double> coarse(static_cast<size_t>(ext) * ext);
        for (int j = -2; j < n + 2; ++j)
            for (int i = -2; i < n + 2; ++i) {
                const double x0 = -2.0 + i * dx, y0 = -2.0 + j * dx;
                coarse[static_cast<size_t>(j + 2) * ext + (i + 2)] =
                    cell ? profile_cell_average(ProfileKind::accuracy_gaussian, x0,
                                                x0 + dx, y0, y0 + dx)
                         : profile_value(ProfileKind::accuracy_gaussian, x0 + 0.5 * dx,
                                         y0 + 0.5 * dx);
            }

        std::vector<double> cell_err(static_cast<size_t>(n) * n, 0.0);
        std::vector<double> cell_err_sw(static_cast<size_t>(n) * n, 0.0);
        std::vector<std::uint8_t> stayed(static_cast<size_t>(n) * n, 1);
        const auto& geom = W->geometry;

        auto work = [&](int j) {
            double window[13];
            double fine_lin[4], fine_sw[4];
            for (int i = 0; i < n; ++i) {
                for (int tIdx = 0; tIdx < geom.total_size(); ++tIdx) {
                    const auto& o = geom.total_offsets[tIdx];
                    window[tIdx] =
                        coarse[static_cast<size_t>(j + o[1] + 2) * ext + (i + o[0] + 2)];
                }
                prolong::prolong_linear_into(std::span<const double>(window, 13), *W,
                                             fine_lin);
                const bool weno = prolong::prolong_cell_into(
                    std::span<const double>(window, 13), *W, cfg, fine_sw);
                bool same = !weno;
                for (int f = 0; f < 4; ++f) same = same && fine_sw[f] == fine_lin[f];
                stayed[static_cast<size_t>(j) * n + i] = same ? 1 : 0;

                double e = 0.0, esw = 0.0;
                for (int f = 0; f < 4; ++f) {
                    const auto& o = W->fine_points.offsets[f];
                    const double xc = -2.0 + (i + 0.5 + o[0]) * dx;
                    const double yc = -2.0 + (j + 0.5 + o[1]) * dx;
                    const double exact =
                        cell ? profile_cell_average(ProfileKind::accuracy_gaussian,
                                                    xc - 0.25 * dx, xc + 0.25 * dx,
                                                    yc - 0.25 * dx, yc + 0.25 * dx)
                             : profile_value(ProfileKind::accuracy_gaussian, xc, yc);
                    e += std::abs(fine_lin[f] - exact);
                    esw += std::abs(fine_sw[f] - exact);
                }
                cell_err[static_cast<size_t>(j) * n + i] = e;
                cell_err_sw[static_cast<size_t>(j) * n + i] = esw;
            }
        };
        if (parallel) {
#pragma omp parallel for schedule(static)
            for (int j = 0; j < n; ++j) work(j);
        } else {
            for (int j = 0; j < n; ++j) work(j);
        }

        double total = 0.0, total_sw = 0.0;
        for (double e : cell_err) total += e;
        for (double e : cell_err_sw) total_sw += e;
        for (auto s : stayed) out.switch_stayed_linear = out.switch_stayed_linear && s;
        const double fine_vol = 0.25 * dx * dx;
        out.rows.push_back({n, total * fine_vol / 16.0, total_sw * fine_vol / 16.0});
    }

    for (size_t k = 0; k + 1 < out.rows.size(); ++k)
        out.slopes.push_back(std::log2(out.rows[k].error / out.rows[k + 1].error));
    return out;
}

AlphaDemoResult alpha_demo(int n, bool parallel) {
    AlphaDemoResult out;
    out.n = n;
    out.dx = 4.0 / n;
    out.f.resize(static_cast<size_t>(n) * n);
    out.alpha.resize(static_cast<size_t>(n) * n);

    weights::GpConfig cfg;
    cfg.dim = 2;
    cfg.ratio = {2, 2, 1};
    cfg.mode = weights::DataMode::pointwise;
    cfg.dx = {out.dx, out.dx, 1.0};
    auto W = weights::get_weights(cfg);

    const int ext = n + 4;
    std::vector<double> samples(static_cast<size_t>(ext) * ext);
    for (int j = -2; j < n + 2; ++j)
        for (int i = -2; i < n + 2; ++i)
            samples[static_cast<size_t>(j + 2) * ext + (i + 2)] = profile_value(
                ProfileKind::alpha_demo, -2.0 + (i + 0.5) * out.dx, -2.0 + (j + 0.5) * out.dx);

    const auto& geom = W->geometry;
    auto work = [&](int j) {
        double window[13];
        for (int i = 0; i < n; ++i) {
            for (int tIdx = 0; tIdx < geom.total_size(); ++tIdx) {
                const auto& o = geom.total_offsets[tIdx];
                window[tIdx] =
                    samples[static_cast<size_t>(j + o[1] + 2) * ext + (i + o[0] + 2)];
            }
            out.f[static_cast<size_t>(j) * n + i] =
                samples[static_cast<size_t>(j + 2) * ext + (i + 2)];
            out.alpha[static_cast<size_t>(j) * n + i] =
                prolong::compute_alpha(std::span<const double>(window, 13), *W, cfg);
        }
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int j = 0; j < n; ++j) work(j);
    } else {
        for (int j = 0; j < n; ++j) work(j);
    }
    return out;
}

} // namespace gpamr::solver
