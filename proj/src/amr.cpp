#include "gpamr/amr.hpp"
#include "gpamr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace gpamr::amr {

namespace {

int wrap(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

void atomic_min(std::atomic<double>& a, double v) {
    double cur = a.load(std::memory_order_relaxed);
    while (v < cur && !a.compare_exchange_weak(cur, v)) {
    }
}

void atomic_max(std::atomic<double>& a, double v) {
    double cur = a.load(std::memory_order_relaxed);
    while (v > cur && !a.compare_exchange_weak(cur, v)) {
    }
}

} // namespace

void Prolongator::apply(std::span<const double> window, std::span<double> out) const {
    bool weno = false;
    if (kind == ProlongKind::mc_linear) {
        prolong::prolong_mc_linear_into(window, *W, out);
    } else {
        weno = prolong::prolong_cell_into(window, *W, cfg, out);
    }
    cells_prolonged.fetch_add(1, std::memory_order_relaxed);
    if (weno) weno_cells.fetch_add(1, std::memory_order_relaxed);
    double lo = out[0], hi = out[0];
    for (double v : out) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    atomic_min(min_seen, lo);
    atomic_max(max_seen, hi);
}

void Prolongator::reset_counters() const {
    cells_prolonged.store(0);
    weno_cells.store(0);
    min_seen.store(1e300);
    max_seen.store(-1e300);
}

double level_value(const Hierarchy& h, int lev, int i, int j, int c) {
    const Level& L = h.levels[lev];
    const int wi = wrap(i, L.extent[0]);
    const int wj = wrap(j, L.extent[1]);
    for (const Patch& p : L.patches)
        if (p.box.contains(wi, wj)) return p.at(wi, wj, c);
    // ghost fallback; ghost frames sticking out of the domain hold periodic
    // image data, so test the translated coordinates too
    for (const Patch& p : L.patches) {
        const Box g = p.box.grown(p.ng);
        for (int sy = -1; sy <= 1; ++sy)
            for (int sx = -1; sx <= 1; ++sx) {
                const int ti = wi + sx * L.extent[0];
                const int tj = wj + sy * L.extent[1];
                if (g.contains(ti, tj)) return p.at(ti, tj, c);
            }
    }
    throw NestingViolation("level " + std::to_string(lev) + " cell (" +
                           std::to_string(wi) + "," + std::to_string(wj) +
                           ") is not covered");
}

TagField tag_cells(const Hierarchy& h, int lev, double threshold, int comp) {
    const Level& L = h.levels[lev];
    TagField t;
    t.extent = L.extent;
    t.tags.assign(static_cast<size_t>(L.extent[0]) * L.extent[1], 0);
    for (const Patch& p : L.patches)
        for (int j = p.box.lo[1]; j <= p.box.hi[1]; ++j)
            for (int i = p.box.lo[0]; i <= p.box.hi[0]; ++i)
                if (std::abs(p.at(i, j, comp)) >= threshold) t.set(i, j, true);
    return t;
}

namespace {

// Gather the 13-cell window of one parent cell and prolong it; shared by
// the parallel and serial fill drivers.
void prolong_parent_cell(const Hierarchy& h, int parent_lev, int pi, int pj, int c,
                         const Prolongator& P, std::span<double> fine_out) {
    const auto& geom = P.W->geometry;
    double window[25];
    for (int t = 0; t < geom.total_size(); ++t) {
        const auto& o = geom.total_offsets[t];
        window[t] = level_value(h, parent_lev, pi + o[0], pj + o[1], c);
    }
    P.apply(std::span<const double>(window, geom.total_size()), fine_out);
}

struct ParentGroup {
    int pi, pj;
    std::vector<std::array<int, 3>> targets; // fine i, fine j, child index
};

std::vector<ParentGroup> group_by_parent(const Hierarchy& h, int lev,
                                         const std::vector<std::array<int, 2>>& cells) {
    const int r = h.ratio;
    const Level& L = h.levels[lev];
    std::map<std::pair<int, int>, ParentGroup> groups;
    for (const auto& [fi, fj] : cells) {
        const int wi = wrap(fi, L.extent[0]);
        const int wj = wrap(fj, L.extent[1]);
        const int pi = wi / r, pj = wj / r;
        auto& g = groups[{pi, pj}];
        g.pi = pi;
        g.pj = pj;
        g.targets.push_back({fi, fj, (wi - pi * r) + r * (wj - pj * r)});
    }
    std::vector<ParentGroup> out;
    out.reserve(groups.size());
    for (auto& [k, g] : groups) out.push_back(std::move(g));
    return out;
}

void fill_groups(Patch& p, const Hierarchy& h, const Prolongator& P,
                 const std::vector<ParentGroup>& groups, bool parallel) {
    const int r = h.ratio;
    const int nfine = r * r;
    const int n = static_cast<int>(groups.size());
    if (parallel) {
        std::exception_ptr err;
#pragma omp parallel for schedule(static)
        for (int g = 0; g < n; ++g) {
            try {
                double fine[16 * 16];
                for (int c = 0; c < p.ncomp; ++c) {
                    prolong_parent_cell(h, p.level - 1, groups[g].pi, groups[g].pj, c, P,
                                        std::span<double>(fine, nfine));
                    for (const auto& t : groups[g].targets)
                        p.at(t[0], t[1], c) = fine[t[2]];
                }
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    } else {
        for (int g = 0; g < n; ++g) {
            double fine[16 * 16];
            for (int c = 0; c < p.ncomp; ++c) {
                prolong_parent_cell(h, p.level - 1, groups[g].pi, groups[g].pj, c, P,
                                    std::span<double>(fine, nfine));
                for (const auto& t : groups[g].targets) p.at(t[0], t[1], c) = fine[t[2]];
            }
        }
    }
}

} // namespace

void fill_from_parent(Patch& p, const Hierarchy& h, const Prolongator& P,
                      const std::vector<std::array<int, 2>>& fine_cells) {
    fill_groups(p, h, P, group_by_parent(h, p.level, fine_cells), true);
}

void fill_from_parent_serial(Patch& p, const Hierarchy& h, const Prolongator& P,
                             const std::vector<std::array<int, 2>>& fine_cells) {
    fill_groups(p, h, P, group_by_parent(h, p.level, fine_cells), false);
}

void fill_halo(Hierarchy& h, int lev, const Prolongator& P) {
    Level& L = h.levels[lev];
    for (Patch& p : L.patches) {
        std::vector<std::array<int, 2>> from_parent;
        const Box g = p.box.grown(p.ng);
        for (int j = g.lo[1]; j <= g.hi[1]; ++j) {
            for (int i = g.lo[0]; i <= g.hi[0]; ++i) {
                if (p.box.contains(i, j)) continue;
                const int wi = wrap(i, L.extent[0]);
                const int wj = wrap(j, L.extent[1]);
                const Patch* src = nullptr;
                for (const Patch& q : L.patches)
                    if (q.box.contains(wi, wj)) {
                        src = &q;
                        break;
                    }
                if (src) {
                    for (int c = 0; c < p.ncomp; ++c) p.at(i, j, c) = src->at(wi, wj, c);
                } else if (lev > 0) {
                    from_parent.push_back({i, j});
                } else {
                    throw NestingViolation("base level does not cover its ghosts");
                }
            }
        }
        if (!from_parent.empty()) fill_from_parent(p, h, P, from_parent);
    }
}

void fill_all_halos(Hierarchy& h, const Prolongator& P) {
    for (int lev = 0; lev <= h.finest(); ++lev) fill_halo(h, lev, P);
}

void average_down(Hierarchy& h) {
    const int r = h.ratio;
    for (int lev = h.finest(); lev >= 1; --lev) {
        Level& fine = h.levels[lev];
        Level& coarse = h.levels[lev - 1];
        for (const Patch& fp : fine.patches) {
            const Box cb = fp.box.coarsened(r);
            for (int c = 0; c < h.ncomp; ++c) {
                for (int cj = cb.lo[1]; cj <= cb.hi[1]; ++cj) {
                    for (int ci = cb.lo[0]; ci <= cb.hi[0]; ++ci) {
                        double block[16 * 16];
                        for (int b = 0; b < r; ++b)
                            for (int a = 0; a < r; ++a)
                                block[a + r * b] = fp.at(ci * r + a, cj * r + b, c);
                        const double mean =
                            prolong::restrict_mean(std::span<const double>(block, r * r));
                        for (Patch& cp : coarse.patches)
                            if (cp.box.contains(ci, cj)) cp.at(ci, cj, c) = mean;
                    }
                }
            }
        }
    }
}

std::vector<Box> cluster_tags(const TagField& tags) {
    const int nx = tags.extent[0], ny = tags.extent[1];
    std::vector<int> label(static_cast<size_t>(nx) * ny, -1);
    std::vector<Box> boxes;
    std::vector<std::array<int, 2>> stack;
    for (int j0 = 0; j0 < ny; ++j0) {
        for (int i0 = 0; i0 < nx; ++i0) {
            if (!tags.get(i0, j0) || label[j0 * nx + i0] >= 0) continue;
            const int id = static_cast<int>(boxes.size());
            Box b{{i0, j0}, {i0, j0}};
            stack.push_back({i0, j0});
            label[j0 * nx + i0] = id;
            while (!stack.empty()) {
                auto [i, j] = stack.back();
                stack.pop_back();
                b.lo[0] = std::min(b.lo[0], i);
                b.lo[1] = std::min(b.lo[1], j);
                b.hi[0] = std::max(b.hi[0], i);
                b.hi[1] = std::max(b.hi[1], j);
                const int di[4] = {1, -1, 0, 0};
                const int dj[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int ii = i + di[k], jj = j + dj[k];
                    if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
                    if (!tags.get(ii, jj) || label[jj * nx + ii] >= 0) continue;
                    label[jj * nx + ii] = id;
                    stack.push_back({ii, jj});
                }
            }
            boxes.push_back(b);
        }
    }
    // overlapping bounding boxes collapse into one
    for (bool merged = true; merged;) {
        merged = false;
        for (size_t a = 0; a < boxes.size() && !merged; ++a)
            for (size_t b = a + 1; b < boxes.size() && !merged; ++b)
                if (!Box::intersect(boxes[a], boxes[b]).empty()) {
                    boxes[a].lo[0] = std::min(boxes[a].lo[0], boxes[b].lo[0]);
                    boxes[a].lo[1] = std::min(boxes[a].lo[1], boxes[b].lo[1]);
                    boxes[a].hi[0] = std::max(boxes[a].hi[0], boxes[b].hi[0]);
                    boxes[a].hi[1] = std::max(boxes[a].hi[1], boxes[b].hi[1]);
                    boxes.erase(boxes.begin() + b);
                    merged = true;
                }
    }
    return boxes;
}

namespace {

// Coverage mask of one level's patch interiors.
std::vector<std::uint8_t> coverage(const Level& L) {
    std::vector<std::uint8_t> cov(static_cast<size_t>(L.extent[0]) * L.extent[1], 0);
    for (const Patch& p : L.patches)
        for (int j = p.box.lo[1]; j <= p.box.hi[1]; ++j)
            for (int i = p.box.lo[0]; i <= p.box.hi[0]; ++i)
                cov[static_cast<size_t>(j) * L.extent[0] + i] = 1;
    return cov;
}

} // namespace

std::vector<Box> plan_boxes(const Hierarchy& h, int lev, const RegridOptions& opt) {
    TagField tags = tag_cells(h, lev, opt.threshold, opt.tag_comp);
    const Level& L = h.levels[lev];
    const auto cov = coverage(L);

    // nesting margin of two parent cells: ghost parents sit one cell out
    // and their stencil windows two more, which patch interiors plus their
    // own ghost frames then cover for any ragged multi-box layout
    auto allowed = [&](int i, int j) {
        if (lev == 0) return true;
        for (int dj = -2; dj <= 2; ++dj)
            for (int di = -2; di <= 2; ++di) {
                const int wi = wrap(i + di, L.extent[0]);
                const int wj = wrap(j + dj, L.extent[1]);
                if (!cov[static_cast<size_t>(wj) * L.extent[0] + wi]) return false;
            }
        return true;
    };

    TagField buffered;
    buffered.extent = tags.extent;
    buffered.tags.assign(tags.tags.size(), 0);
    bool any = false;
    for (int j = 0; j < tags.extent[1]; ++j)
        for (int i = 0; i < tags.extent[0]; ++i) {
            if (!tags.get(i, j)) continue;
            if (!cov[static_cast<size_t>(j) * L.extent[0] + i])
                throw NestingViolation("tag at level " + std::to_string(lev) +
                                       " lies outside the parent coverage");
            any = true;
            // tags at the coverage margin are clipped, the standard way of
            // enforcing proper nesting
            for (int dj = -opt.buffer; dj <= opt.buffer; ++dj)
                for (int di = -opt.buffer; di <= opt.buffer; ++di) {
                    const int wi = wrap(i + di, tags.extent[0]);
                    const int wj = wrap(j + dj, tags.extent[1]);
                    if (allowed(wi, wj)) buffered.set(wi, wj, true);
                }
        }
    if (!any) return {};

    // bounding boxes of clipped components can poke out of the nesting
    // region when it is not convex; bisect until every cell is allowed
    std::vector<Box> out;
    std::vector<Box> todo = cluster_tags(buffered);
    while (!todo.empty()) {
        Box b = todo.back();
        todo.pop_back();
        if (b.empty()) continue;
        bool clean = true;
        for (int j = b.lo[1]; j <= b.hi[1] && clean; ++j)
            for (int i = b.lo[0]; i <= b.hi[0] && clean; ++i)
                clean = allowed(i, j);
        if (clean) {
            out.push_back(b);
            continue;
        }
        if (b.cells() == 1) continue; // a lone disallowed cell is dropped
        if (b.nx() >= b.ny()) {
            const int mid = b.lo[0] + b.nx() / 2;
            todo.push_back({{b.lo[0], b.lo[1]}, {mid - 1, b.hi[1]}});
            todo.push_back({{mid, b.lo[1]}, {b.hi[0], b.hi[1]}});
        } else {
            const int mid = b.lo[1] + b.ny() / 2;
            todo.push_back({{b.lo[0], b.lo[1]}, {b.hi[0], mid - 1}});
            todo.push_back({{b.lo[0], mid}, {b.hi[0], b.hi[1]}});
        }
    }
    std::sort(out.begin(), out.end(), [](const Box& a, const Box& b) {
        return std::tie(a.lo[1], a.lo[0]) < std::tie(b.lo[1], b.lo[0]);
    });
    return out;
}

void regrid(Hierarchy& h, const Prolongator& P, const RegridOptions& opt) {
    const int r = h.ratio;
    for (int lev = 0; lev + 1 < opt.max_levels; ++lev) {
        if (lev > h.finest()) break;
        const auto boxes = plan_boxes(h, lev, opt);
        if (boxes.empty()) {
            h.levels.resize(lev + 1); // nothing to refine; drop finer levels
            return;
        }

        std::vector<Patch> fresh;
        for (const Box& cb : boxes) {
            Patch p;
            p.level = lev + 1;
            p.box = cb.refined(r);
            p.ncomp = h.ncomp;
            p.allocate();
            fresh.push_back(std::move(p));
        }

        const bool had_level = lev + 1 <= h.finest();
        std::vector<Patch> old;
        if (had_level) old = std::move(h.levels[lev + 1].patches);
        if (!had_level) {
            Level nl;
            nl.extent = {h.levels[lev].extent[0] * r, h.levels[lev].extent[1] * r};
            nl.dx = h.levels[lev].dx / r;
            h.levels.push_back(std::move(nl));
        }

        // prolong everywhere, then overwrite retained regions with copies
        for (Patch& p : fresh) {
            std::vector<std::array<int, 2>> all;
            all.reserve(p.box.cells());
            for (int j = p.box.lo[1]; j <= p.box.hi[1]; ++j)
                for (int i = p.box.lo[0]; i <= p.box.hi[0]; ++i) all.push_back({i, j});
            fill_from_parent(p, h, P, all);
            for (const Patch& q : old) {
                const Box ov = Box::intersect(p.box, q.box);
                if (ov.empty()) continue;
                for (int c = 0; c < h.ncomp; ++c)
                    for (int j = ov.lo[1]; j <= ov.hi[1]; ++j)
                        for (int i = ov.lo[0]; i <= ov.hi[0]; ++i)
                            p.at(i, j, c) = q.at(i, j, c);
            }
        }
        h.levels[lev + 1].patches = std::move(fresh);
        fill_halo(h, lev + 1, P);
    }
}

double composite_integral(const Hierarchy& h, int comp) {
    double total = 0.0;
    for (int lev = 0; lev <= h.finest(); ++lev) {
        const Level& L = h.levels[lev];
        const double vol = L.dx * L.dx;
        std::vector<std::uint8_t> covered(static_cast<size_t>(L.extent[0]) * L.extent[1], 0);
        if (lev < h.finest())
            for (const Patch& fp : h.levels[lev + 1].patches) {
                const Box cb = fp.box.coarsened(h.ratio);
                for (int j = cb.lo[1]; j <= cb.hi[1]; ++j)
                    for (int i = cb.lo[0]; i <= cb.hi[0]; ++i)
                        covered[static_cast<size_t>(j) * L.extent[0] + i] = 1;
            }
        for (const Patch& p : L.patches)
            for (int j = p.box.lo[1]; j <= p.box.hi[1]; ++j)
                for (int i = p.box.lo[0]; i <= p.box.hi[0]; ++i)
                    if (!covered[static_cast<size_t>(j) * L.extent[0] + i])
                        total += p.at(i, j, comp) * vol;
    }
    return total;
}

long composite_cells(const Hierarchy& h) {
    long total = 0;
    for (int lev = 0; lev <= h.finest(); ++lev)
        for (const Patch& p : h.levels[lev].patches) total += p.box.cells();
    return total;
}

void write_plotfile_csv(const Hierarchy& h, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    std::fprintf(fp, "x,y,level");
    for (int c = 0; c < h.ncomp; ++c) std::fprintf(fp, ",comp%d", c);
    std::fprintf(fp, "\n");
    for (int lev = 0; lev <= h.finest(); ++lev) {
        const Level& L = h.levels[lev];
        std::vector<std::uint8_t> covered(static_cast<size_t>(L.extent[0]) * L.extent[1], 0);
        if (lev < h.finest())
            for (const Patch& fp2 : h.levels[lev + 1].patches) {
                const Box cb = fp2.box.coarsened(h.ratio);
                for (int j = cb.lo[1]; j <= cb.hi[1]; ++j)
                    for (int i = cb.lo[0]; i <= cb.hi[0]; ++i)
                        covered[static_cast<size_t>(j) * L.extent[0] + i] = 1;
            }
        for (const Patch& p : L.patches)
            for (int j = p.box.lo[1]; j <= p.box.hi[1]; ++j)
                for (int i = p.box.lo[0]; i <= p.box.hi[0]; ++i) {
                    if (covered[static_cast<size_t>(j) * L.extent[0] + i]) continue;
                    std::fprintf(fp, "%.17g,%.17g,%d", h.cell_x(lev, i), h.cell_y(lev, j),
                                 lev);
                    for (int c = 0; c < h.ncomp; ++c)
                        std::fprintf(fp, ",%.17g", p.at(i, j, c));
                    std::fprintf(fp, "\n");
                }
    }
    std::fclose(fp);
}

double l1_error(const Hierarchy& a, const Hierarchy& b, int comp) {
    if (a.finest() != b.finest()) throw LayoutMismatch("different level counts");
    for (int lev = 0; lev <= a.finest(); ++lev) {
        if (a.levels[lev].patches.size() != b.levels[lev].patches.size())
            throw LayoutMismatch("different patch counts at level " + std::to_string(lev));
        for (size_t k = 0; k < a.levels[lev].patches.size(); ++k)
            if (!(a.levels[lev].patches[k].box == b.levels[lev].patches[k].box))
                throw LayoutMismatch("different patch boxes at level " +
                                     std::to_string(lev));
    }
    double err = 0.0;
    for (int lev = 0; lev <= a.finest(); ++lev) {
        const Level& L = a.levels[lev];
        const double vol = L.dx * L.dx;
        std::vector<std::uint8_t> covered(static_cast<size_t>(L.extent[0]) * L.extent[1], 0);
        if (lev < a.finest())
            for (const Patch& fp : a.levels[lev + 1].patches) {
                const Box cb = fp.box.coarsened(a.ratio);
                for (int j = cb.lo[1]; j <= cb.hi[1]; ++j)
                    for (int i = cb.lo[0]; i <= cb.hi[0]; ++i)
                        covered[static_cast<size_t>(j) * L.extent[0] + i] = 1;
            }
        for (size_t k = 0; k < L.patches.size(); ++k) {
            const Patch& pa = L.patches[k];
            const Patch& pb = b.levels[lev].patches[k];
            for (int j = pa.box.lo[1]; j <= pa.box.hi[1]; ++j)
                for (int i = pa.box.lo[0]; i <= pa.box.hi[0]; ++i)
                    if (!covered[static_cast<size_t>(j) * L.extent[0] + i])
                        err += std::abs(pa.at(i, j, comp) - pb.at(i, j, comp)) * vol;
        }
    }
    const double domain = (a.phys_hi[0] - a.phys_lo[0]) * (a.phys_hi[1] - a.phys_lo[1]);
    return err / domain;
}

} // namespace gpamr::amr
