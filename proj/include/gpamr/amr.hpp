#ifndef GPAMR_AMR_HPP
#define GPAMR_AMR_HPP

#include "gpamr/prolong.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

namespace gpamr::amr {

/// Inclusive cell-centered index box.
struct Box {
    std::array<int, 2> lo = {0, 0};
    std::array<int, 2> hi = {-1, -1};

    int nx() const { return hi[0] - lo[0] + 1; }
    int ny() const { return hi[1] - lo[1] + 1; }
    long cells() const { return static_cast<long>(nx()) * ny(); }
    bool empty() const { return nx() <= 0 || ny() <= 0; }
    bool contains(int i, int j) const {
        return i >= lo[0] && i <= hi[0] && j >= lo[1] && j <= hi[1];
    }
    Box grown(int g) const { return {{lo[0] - g, lo[1] - g}, {hi[0] + g, hi[1] + g}}; }
    Box refined(int r) const {
        return {{lo[0] * r, lo[1] * r}, {(hi[0] + 1) * r - 1, (hi[1] + 1) * r - 1}};
    }
    Box coarsened(int r) const {
        auto fd = [](int v, int r) { return v >= 0 ? v / r : -((-v + r - 1) / r); };
        return {{fd(lo[0], r), fd(lo[1], r)}, {fd(hi[0], r), fd(hi[1], r)}};
    }
    static Box intersect(const Box& a, const Box& b) {
        return {{std::max(a.lo[0], b.lo[0]), std::max(a.lo[1], b.lo[1])},
                {std::min(a.hi[0], b.hi[0]), std::min(a.hi[1], b.hi[1])}};
    }
    bool operator==(const Box&) const = default;
};

/// Rectangular data block with a two-cell ghost frame (the multi-substencil
/// window needs both layers).
struct Patch {
    int level = 0;
    Box box;
    int ng = 2;
    int ncomp = 1;
    std::vector<double> data;

    void allocate() {
        data.assign(static_cast<size_t>(box.grown(ng).cells()) * ncomp, 0.0);
    }
    double& at(int i, int j, int c = 0) {
        const Box g = box.grown(ng);
        return data[(static_cast<size_t>(c) * g.ny() + (j - g.lo[1])) * g.nx() +
                    (i - g.lo[0])];
    }
    double at(int i, int j, int c = 0) const {
        return const_cast<Patch*>(this)->at(i, j, c);
    }
};

struct Level {
    std::vector<Patch> patches;
    std::array<int, 2> extent = {0, 0}; // level index space (periodic)
    double dx = 0.0;
};

struct Hierarchy {
    std::array<double, 2> phys_lo = {0.0, 0.0};
    std::array<double, 2> phys_hi = {1.0, 1.0};
    int ratio = 2;
    int ncomp = 1;
    std::vector<Level> levels;

    int finest() const { return static_cast<int>(levels.size()) - 1; }
    double cell_x(int lev, int i) const {
        return phys_lo[0] + (i + 0.5) * levels[lev].dx;
    }
    double cell_y(int lev, int j) const {
        return phys_lo[1] + (j + 0.5) * levels[lev].dx;
    }
};

struct TagField {
    std::array<int, 2> extent = {0, 0};
    std::vector<std::uint8_t> tags;

    bool get(int i, int j) const { return tags[static_cast<size_t>(j) * extent[0] + i]; }
    void set(int i, int j, bool v) {
        tags[static_cast<size_t>(j) * extent[0] + i] = v ? 1 : 0;
    }
    long count() const {
        long n = 0;
        for (auto t : tags) n += t;
        return n;
    }
};

enum class ProlongKind { gp, mc_linear };

/// Run-time prolongation policy plus bookkeeping shared by every fill.
/// Counters are commutative, so totals do not depend on thread count.
struct Prolongator {
    std::shared_ptr<const weights::ProlongWeights> W;
    weights::GpConfig cfg;
    ProlongKind kind = ProlongKind::gp;

    mutable std::atomic<long> cells_prolonged{0};
    mutable std::atomic<long> weno_cells{0};
    mutable std::atomic<double> min_seen{1e300};
    mutable std::atomic<double> max_seen{-1e300};

    Prolongator() = default;
    Prolongator(const Prolongator& o)
        : W(o.W), cfg(o.cfg), kind(o.kind), cells_prolonged(o.cells_prolonged.load()),
          weno_cells(o.weno_cells.load()), min_seen(o.min_seen.load()),
          max_seen(o.max_seen.load()) {}
    Prolongator& operator=(const Prolongator& o) {
        W = o.W;
        cfg = o.cfg;
        kind = o.kind;
        cells_prolonged = o.cells_prolonged.load();
        weno_cells = o.weno_cells.load();
        min_seen = o.min_seen.load();
        max_seen = o.max_seen.load();
        return *this;
    }

    void apply(std::span<const double> window, std::span<double> out) const;
    void reset_counters() const;
};

/// Value at a wrapped level index; patch interiors win, ghost data is the
/// fallback.  Throws NestingViolation when nothing covers the cell.
double level_value(const Hierarchy& h, int lev, int i, int j, int c = 0);

/// |value| >= threshold over every patch interior of one level.
TagField tag_cells(const Hierarchy& h, int lev, double threshold, int comp = 0);

/// Ghost fill for one level: same-level (and periodic) copies first, the
/// remainder prolonged from the parent level.  Parents must hold valid
/// ghosts already, so call coarse-to-fine.
void fill_halo(Hierarchy& h, int lev, const Prolongator& P);
void fill_all_halos(Hierarchy& h, const Prolongator& P);

/// Prolong-fill the listed (possibly ghost) fine cells of one patch from
/// the parent level; OpenMP over parent cells, plus a serial reference.
void fill_from_parent(Patch& p, const Hierarchy& h, const Prolongator& P,
                      const std::vector<std::array<int, 2>>& fine_cells);
void fill_from_parent_serial(Patch& p, const Hierarchy& h, const Prolongator& P,
                             const std::vector<std::array<int, 2>>& fine_cells);

/// Coarse cells covered by fine patches become the mean of their children.
void average_down(Hierarchy& h);

/// Rebuild levels above the base from fresh tags: buffered connected
/// components become patch boxes, retained regions are copied, new regions
/// prolonged.  Finer levels stay properly nested by construction.
struct RegridOptions {
    double threshold = 0.5;
    int buffer = 1;
    int max_levels = 3;
    int tag_comp = 0;
};
void regrid(Hierarchy& h, const Prolongator& P, const RegridOptions& opt);

/// Coarse-level boxes the next regrid would create above `lev` (tag,
/// buffer, nest, cluster); empty when nothing is tagged.
std::vector<Box> plan_boxes(const Hierarchy& h, int lev, const RegridOptions& opt);

/// Composite integral: finest-available data times cell volume.
double composite_integral(const Hierarchy& h, int comp = 0);
long composite_cells(const Hierarchy& h);

/// Level-averaged composite L1 distance; layouts must match.
double l1_error(const Hierarchy& a, const Hierarchy& b, int comp = 0);

/// Deterministic bounding boxes of the 4-connected tag components.
std::vector<Box> cluster_tags(const TagField& tags);

/// Composite dump as CSV rows (x, y, level, value...), finest data per cell.
void write_plotfile_csv(const Hierarchy& h, const std::string& path);

} // namespace gpamr::amr

#endif
