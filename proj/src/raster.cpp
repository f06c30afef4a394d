#include "rpr/raster.hpp"

#include <cmath>
#include <deque>

namespace rpr {

LabelGrid::LabelGrid(Vec2 origin, Vec2 extent, int nx, int ny, bool periodic_x, bool periodic_y)
    : origin_(origin), extent_(extent), nx_(nx), ny_(ny), periodic_x_(periodic_x),
      periodic_y_(periodic_y), blocked_(static_cast<std::size_t>(nx) * ny, 0),
      labels_(static_cast<std::size_t>(nx) * ny, -1) {}

Vec2 LabelGrid::cell_center(int ix, int iy) const {
    return {origin_.x + (ix + 0.5) * extent_.x / nx_, origin_.y + (iy + 0.5) * extent_.y / ny_};
}

static bool to_index(double u, int n, bool periodic, int& i) {
    auto k = static_cast<long long>(std::floor(u));
    if (periodic) {
        k %= n;
        if (k < 0) k += n;
    } else {
        if (u < 0.0 || u > n) return false;
        if (k == n) k = n - 1;
    }
    i = static_cast<int>(k);
    return true;
}

bool LabelGrid::cell_of(Vec2 p, int& ix, int& iy) const {
    const double u = (p.x - origin_.x) / extent_.x * nx_;
    const double v = (p.y - origin_.y) / extent_.y * ny_;
    return to_index(u, nx_, periodic_x_, ix) && to_index(v, ny_, periodic_y_, iy);
}

void LabelGrid::block_point(Vec2 p) {
    int ix, iy;
    if (cell_of(p, ix, iy)) blocked_[index(ix, iy)] = 1;
}

void LabelGrid::block_segment(Vec2 a, Vec2 b) {
    const double du = (b.x - a.x) / extent_.x * nx_;
    const double dv = (b.y - a.y) / extent_.y * ny_;
    const int steps = 1 + static_cast<int>(std::ceil(4.0 * std::max(std::abs(du), std::abs(dv))));
    for (int k = 0; k <= steps; ++k) block_point(a + (static_cast<double>(k) / steps) * (b - a));
}

bool LabelGrid::neighbor(int ix, int iy, int dx, int dy, int& jx, int& jy) const {
    jx = ix + dx;
    jy = iy + dy;
    if (jx < 0 || jx >= nx_) {
        if (!periodic_x_) return false;
        jx = (jx + nx_) % nx_;
    }
    if (jy < 0 || jy >= ny_) {
        if (!periodic_y_) return false;
        jy = (jy + ny_) % ny_;
    }
    return true;
}

static constexpr int kDx[4] = {1, -1, 0, 0};
static constexpr int kDy[4] = {0, 0, 1, -1};

int LabelGrid::label_components() {
    std::fill(labels_.begin(), labels_.end(), -1);
    int next = 0;
    std::deque<std::pair<int, int>> queue;
    for (int iy = 0; iy < ny_; ++iy) {
        for (int ix = 0; ix < nx_; ++ix) {
            if (blocked(ix, iy) || label(ix, iy) >= 0) continue;
            labels_[index(ix, iy)] = next;
            queue.emplace_back(ix, iy);
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop_front();
                for (int d = 0; d < 4; ++d) {
                    int jx, jy;
                    if (!neighbor(cx, cy, kDx[d], kDy[d], jx, jy)) continue;
                    if (blocked(jx, jy) || label(jx, jy) >= 0) continue;
                    labels_[index(jx, jy)] = next;
                    queue.emplace_back(jx, jy);
                }
            }
            ++next;
        }
    }
    return next;
}

std::vector<int> LabelGrid::clearance() const {
    std::vector<int> dist(blocked_.size(), -1);
    std::deque<std::pair<int, int>> queue;
    for (int iy = 0; iy < ny_; ++iy) {
        for (int ix = 0; ix < nx_; ++ix) {
            if (!blocked(ix, iy)) continue;
            dist[index(ix, iy)] = 0;
            queue.emplace_back(ix, iy);
        }
    }
    for (int iy = 0; iy < ny_; ++iy) {
        for (int ix = 0; ix < nx_; ++ix) {
            const bool edge = (!periodic_x_ && (ix == 0 || ix == nx_ - 1)) ||
                              (!periodic_y_ && (iy == 0 || iy == ny_ - 1));
            if (!edge || dist[index(ix, iy)] >= 0) continue;
            dist[index(ix, iy)] = 1;
            queue.emplace_back(ix, iy);
        }
    }
    while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        for (int d = 0; d < 4; ++d) {
            int jx, jy;
            if (!neighbor(cx, cy, kDx[d], kDy[d], jx, jy)) continue;
            if (dist[index(jx, jy)] >= 0) continue;
            dist[index(jx, jy)] = dist[index(cx, cy)] + 1;
            queue.emplace_back(jx, jy);
        }
    }
    return dist;
}

}  // namespace rpr
