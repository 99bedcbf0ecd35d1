#include "gpamr/stencil.hpp"
#include "gpamr/errors.hpp"

#include <algorithm>
#include <set>

namespace gpamr::stencil {

namespace {

// Last dimension major, first dimension fastest: in 2D this reads bottom
// row to top row.
bool offset_less(const Offset& a, const Offset& b) {
    if (a[2] != b[2]) return a[2] < b[2];
    if (a[1] != b[1]) return a[1] < b[1];
    return a[0] < b[0];
}

std::vector<Offset> cross_at(const Offset& c, int dim) {
    std::vector<Offset> cells;
    cells.push_back(c);
    for (int d = 0; d < dim; ++d) {
        Offset lo = c, hi = c;
        lo[d] -= 1;
        hi[d] += 1;
        cells.push_back(lo);
        cells.push_back(hi);
    }
    std::sort(cells.begin(), cells.end(), offset_less);
    return cells;
}

} // namespace

int StencilGeometry::total_index(const Offset& o) const {
    for (int t = 0; t < total_size(); ++t)
        if (total_offsets[t] == o) return t;
    return -1;
}

StencilGeometry build_geometry(int dim) {
    if (dim < 1 || dim > 3)
        throw UnsupportedDimension("build_geometry: dim must be 1, 2 or 3");

    StencilGeometry g;
    g.dim = dim;

    // Center cross first, then crosses on each face neighbor in canonical
    // offset order.
    std::vector<Offset> centers;
    centers.push_back({0, 0, 0});
    std::vector<Offset> neighbors;
    for (int d = 0; d < dim; ++d) {
        Offset lo{0, 0, 0}, hi{0, 0, 0};
        lo[d] = -1;
        hi[d] = +1;
        neighbors.push_back(lo);
        neighbors.push_back(hi);
    }
    std::sort(neighbors.begin(), neighbors.end(), offset_less);
    centers.insert(centers.end(), neighbors.begin(), neighbors.end());

    std::set<Offset> total_set;
    for (const Offset& c : centers) {
        auto cells = cross_at(c, dim);
        total_set.insert(cells.begin(), cells.end());
        g.sub_offsets.push_back(std::move(cells));
    }
    g.total_offsets.assign(total_set.begin(), total_set.end());
    std::sort(g.total_offsets.begin(), g.total_offsets.end(), offset_less);

    g.membership.resize(g.total_offsets.size());
    for (int m = 0; m < g.num_sub(); ++m) {
        for (int p = 0; p < static_cast<int>(g.sub_offsets[m].size()); ++p) {
            const int t = g.total_index(g.sub_offsets[m][p]);
            g.membership[t].push_back({m, p});
        }
    }
    return g;
}

FinePointSet fine_points(int dim, const std::array<int, 3>& ratio) {
    FinePointSet fp;
    fp.dim = dim;
    fp.ratio = ratio;

    int count = 1;
    for (int d = 0; d < dim; ++d) count *= ratio[d];
    fp.offsets.reserve(count);

    std::array<int, 3> m = {0, 0, 0};
    for (int k = 0; k < count; ++k) {
        std::array<double, 3> o = {0.0, 0.0, 0.0};
        for (int d = 0; d < dim; ++d)
            o[d] = (2.0 * m[d] + 1.0 - ratio[d]) / (2.0 * ratio[d]);
        fp.offsets.push_back(o);
        for (int d = 0; d < dim; ++d) {
            if (++m[d] < ratio[d]) break;
            m[d] = 0;
        }
    }
    return fp;
}

} // namespace gpamr::stencil
