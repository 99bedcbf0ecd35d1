// Timings for the two data-parallel kernels against their serial
// references, plus a bitwise agreement check.

#include "gpamr/solver.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>

using namespace gpamr;
using clk = std::chrono::steady_clock;

namespace {

double seconds(clk::time_point a, clk::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

} // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 512;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 5;

    amr::Prolongator P;
    P.cfg.dim = 2;
    P.cfg.ratio = {2, 2, 1};
    P.cfg.mode = weights::DataMode::cell_averaged;
    P.W = weights::get_weights(P.cfg);

    // hierarchy: smooth bump on n/2 cells, one fine patch over the middle
    amr::Hierarchy h;
    h.phys_lo = {0.0, 0.0};
    h.phys_hi = {1.0, 1.0};
    h.ratio = 2;
    h.ncomp = 1;
    amr::Level L0;
    L0.extent = {n / 2, n / 2};
    L0.dx = 2.0 / n;
    amr::Patch p0;
    p0.level = 0;
    p0.box = {{0, 0}, {n / 2 - 1, n / 2 - 1}};
    p0.ncomp = 1;
    p0.allocate();
    for (int j = 0; j < n / 2; ++j)
        for (int i = 0; i < n / 2; ++i) {
            const double x = (i + 0.5) * L0.dx, y = (j + 0.5) * L0.dx;
            p0.at(i, j) = 1.0 + std::exp(-20.0 * ((x - 0.5) * (x - 0.5) +
                                                  (y - 0.5) * (y - 0.5)));
        }
    L0.patches.push_back(std::move(p0));
    h.levels.push_back(std::move(L0));
    amr::fill_halo(h, 0, P);

    amr::Level L1;
    L1.extent = {n, n};
    L1.dx = 1.0 / n;
    amr::Patch p1;
    p1.level = 1;
    p1.box = {{n / 4, n / 4}, {3 * n / 4 - 1, 3 * n / 4 - 1}};
    p1.ncomp = 1;
    p1.allocate();
    L1.patches.push_back(std::move(p1));
    h.levels.push_back(std::move(L1));

    std::vector<std::array<int, 2>> cells;
    for (int j = h.levels[1].patches[0].box.lo[1]; j <= h.levels[1].patches[0].box.hi[1]; ++j)
        for (int i = h.levels[1].patches[0].box.lo[0]; i <= h.levels[1].patches[0].box.hi[0]; ++i)
            cells.push_back({i, j});

    std::printf("threads available: %d\n", omp_get_max_threads());
    std::printf("prolongation fill: %zu fine cells\n", cells.size());

    auto t0 = clk::now();
    for (int r = 0; r < reps; ++r)
        amr::fill_from_parent_serial(h.levels[1].patches[0], h, P, cells);
    auto serial_data = h.levels[1].patches[0].data;
    auto t1 = clk::now();
    for (int r = 0; r < reps; ++r)
        amr::fill_from_parent(h.levels[1].patches[0], h, P, cells);
    auto t2 = clk::now();
    const bool same_fill = h.levels[1].patches[0].data == serial_data;

    const double fs = seconds(t0, t1) / reps, fp = seconds(t1, t2) / reps;
    std::printf("  serial  %8.4f s  (%7.2f Mcells/s)\n", fs, cells.size() / fs / 1e6);
    std::printf("  openmp  %8.4f s  (%7.2f Mcells/s)  speedup %.2fx  bitwise %s\n", fp,
                cells.size() / fp / 1e6, fs / fp, same_fill ? "equal" : "DIFFERENT");

    // advection stage on the base patch
    amr::Patch out_s = h.levels[0].patches[0];
    amr::Patch out_p = h.levels[0].patches[0];
    const long cells0 = h.levels[0].patches[0].box.cells();
    std::printf("advection stage: %ld cells\n", cells0);
    t0 = clk::now();
    for (int r = 0; r < reps; ++r)
        solver::muscl_stage_serial(h.levels[0].patches[0], h.levels[0].patches[0], out_s,
                                   h, 0.2, 1e-3, 1.0);
    t1 = clk::now();
    for (int r = 0; r < reps; ++r)
        solver::muscl_stage(h.levels[0].patches[0], h.levels[0].patches[0], out_p, h, 0.2,
                            1e-3, 1.0);
    t2 = clk::now();
    const bool same_stage = out_s.data == out_p.data;
    const double ss = seconds(t0, t1) / reps, sp = seconds(t1, t2) / reps;
    std::printf("  serial  %8.4f s  (%7.2f Mcells/s)\n", ss, cells0 / ss / 1e6);
    std::printf("  openmp  %8.4f s  (%7.2f Mcells/s)  speedup %.2fx  bitwise %s\n", sp,
                cells0 / sp / 1e6, ss / sp, same_stage ? "equal" : "DIFFERENT");

    return (same_fill && same_stage) ? 0 : 1;
}
