#ifndef GPAMR_STENCIL_HPP
#define GPAMR_STENCIL_HPP

#include <array>
#include <vector>

namespace gpamr::stencil {

using Offset = std::array<int, 3>; // unused trailing dims stay 0

/// Total stencil S plus its 2D+1 cross substencils S_m for GP radius 1.
/// Offsets are sorted last-dimension-major, the same order the flattened
/// data windows use.  membership[t] lists every (substencil, position)
/// pair holding total cell t.
struct StencilGeometry {
    int dim = 0;
    std::vector<Offset> total_offsets;              // size M = 2D^2+2D+1
    std::vector<std::vector<Offset>> sub_offsets;   // 2D+1 crosses of 2D+1 cells
    std::vector<std::vector<std::array<int, 2>>> membership;

    int total_size() const { return static_cast<int>(total_offsets.size()); }
    int num_sub() const { return static_cast<int>(sub_offsets.size()); }
    int sub_size() const { return 2 * dim + 1; }

    /// Index of an offset in total order, -1 if absent.
    int total_index(const Offset& o) const;
};

/// Fine-cell centers inside one coarse cell, in coarse-cell-width units:
/// component m of ratio r sits at (2m+1-r)/(2r).  Ordered first dimension
/// fastest, matching the flattened fine blocks everywhere else.
struct FinePointSet {
    int dim = 0;
    std::array<int, 3> ratio = {1, 1, 1};
    std::vector<std::array<double, 3>> offsets;

    int count() const { return static_cast<int>(offsets.size()); }
};

StencilGeometry build_geometry(int dim);
FinePointSet fine_points(int dim, const std::array<int, 3>& ratio);

} // namespace gpamr::stencil

#endif
