#pragma once

#include <cstdint>
#include <vector>

#include "rpr/vec2.hpp"

namespace rpr {

/// Cell grid over an axis-aligned rectangle, optionally periodic per axis. Polylines block the
/// cells they pass through; the remaining cells split into 4-connected components.
class LabelGrid {
public:
    LabelGrid(Vec2 origin, Vec2 extent, int nx, int ny, bool periodic_x, bool periodic_y);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int index(int ix, int iy) const { return iy * nx_ + ix; }
    Vec2 cell_center(int ix, int iy) const;
    /// Cell containing p (wrapped on periodic axes); false when outside a bounded axis.
    bool cell_of(Vec2 p, int& ix, int& iy) const;

    void block_point(Vec2 p);
    /// Consecutive samples are at most a quarter cell apart, so a blocked chain is 8-connected
    /// and no 4-connected component can leak across it.
    void block_segment(Vec2 a, Vec2 b);
    bool blocked(int ix, int iy) const { return blocked_[index(ix, iy)] != 0; }

    /// Labels free cells 0..count-1 in scan order of first cell; blocked cells get -1.
    int label_components();
    const std::vector<int>& labels() const { return labels_; }
    int label(int ix, int iy) const { return labels_[index(ix, iy)]; }

    /// 4-connected step distance of each free cell to the nearest blocked cell or bounded edge.
    std::vector<int> clearance() const;

private:
    bool neighbor(int ix, int iy, int dx, int dy, int& jx, int& jy) const;

    Vec2 origin_, extent_;
    int nx_, ny_;
    bool periodic_x_, periodic_y_;
    std::vector<std::uint8_t> blocked_;
    std::vector<int> labels_;
};

}  // namespace rpr
