#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "slice_fixture.hpp"

using namespace rpr;
using fixture::reference_atlas;
using fixture::reference_manipulator;

namespace {

Vec2 image_of(Vec2 pose) {
    return inverse_kinematics(reference_manipulator(), SlicePose::at(pose, 17.0)).slice();
}

/// Cell centres of a basic region, every `stride`-th one.
std::vector<Vec2> region_cells(const RegionDecomposition& r, int id, int stride) {
    std::vector<Vec2> out;
    int k = 0;
    for (int iy = 0; iy < r.ny; ++iy) {
        for (int ix = 0; ix < r.nx; ++ix) {
            if (r.labels[iy * r.nx + ix] != id) continue;
            if (k++ % stride == 0) out.push_back(r.cell_center(ix, iy));
        }
    }
    return out;
}

/// The (2k+1)^2 block of cells around p all belong to region id.
bool interior_cell(const RegionDecomposition& r, Vec2 p, int id, int k = 2) {
    const double hx = r.theta.width() / r.nx, hy = r.alpha.width() / r.ny;
    for (int dx = -k; dx <= k; ++dx) {
        for (int dy = -k; dy <= k; ++dy) {
            if (r.region_at({p.x + dx * hx, p.y + dy * hy}) != id) return false;
        }
    }
    return true;
}

/// Thin regions have no cell two cells clear of their boundary; they use a margin of one.
int margin(const RegionDecomposition& r, const std::vector<Vec2>& cells, int id) {
    return std::any_of(cells.begin(), cells.end(), [&](Vec2 p) { return interior_cell(r, p, id, 2); }) ? 2 : 1;
}

}  // namespace

TEST_SUITE("charsurf") {

TEST_CASE("characteristic points image their singular source point") {
    const auto& a = reference_atlas();
    const auto& m = reference_manipulator();
    for (const auto& c : a.chars.curves) {
        INFO("curve " << c.id);
        REQUIRE(c.source_s.size() == c.curve.size());
        REQUIRE(c.source_segment.size() == c.curve.size());
        const auto& ws = a.workspace[c.source_curve];
        for (std::size_t i = 0; i < c.curve.size(); ++i) {
            if (c.source_segment[i] < 0) continue;
            const Vec2 p = c.curve.samples[i].point;
            const Vec2 target = image_of(curve_point_at(m, ws, c.source_s[i]));
            CHECK(norm(image_of(p) - target) < 1e-8);
            const double d = singular_value(m, SlicePose::at(p, 17.0));
            CHECK(std::abs(d) >= 1e-7);
            CHECK(aspect_of(m, SlicePose::at(p, 17.0)) == c.aspect);
        }
    }
}

TEST_CASE("characteristic curves end exactly at cusp or node preimages") {
    const auto& a = reference_atlas();
    for (const auto& c : a.chars.curves) {
        INFO("curve " << c.id);
        for (int e = 0; e < 2; ++e) {
            const Vec2 p = e == 0 ? c.curve.samples.front().point : c.curve.samples.back().point;
            const auto& end = c.ends[e];
            REQUIRE((end.kind == EndKind::Cusp || end.kind == EndKind::Node));
            double gap = 1e9;
            if (end.kind == EndKind::Cusp) {
                gap = torus_distance(p, a.cusps.cusps[end.point_id].triple_pose.angles());
            } else {
                for (const auto& q : a.nodes.nodes[end.point_id].pair_poses) {
                    gap = std::min(gap, torus_distance(p, q.angles()));
                }
            }
            CHECK(gap < 1e-9);
        }
    }
    CHECK(a.chars.diagnostics.empty());
}

TEST_CASE("each segment has one workspace image fewer than its high count") {
    const auto& a = reference_atlas();
    std::map<int, int> rule{{6, 5}, {4, 3}, {2, 1}};
    for (const auto& seg : a.segments.segments) {
        INFO("segment " << seg.id);
        const auto& ws = a.workspace[seg.curve_id];
        CHECK(workspace_image_count(a.chars, ws, seg.s_mid()) == rule.at(seg.probe.high_count));
    }
}

TEST_CASE("characteristic curves carry one aspect and are split at cusps") {
    const auto& a = reference_atlas();
    REQUIRE(a.chars.curves.size() == 18);
    std::map<AspectLabel, int> by_aspect;
    for (const auto& c : a.chars.curves) {
        CHECK(c.kind == CharKind::NonsingularImage);
        CHECK((c.aspect == AspectLabel::WA1 || c.aspect == AspectLabel::WA2));
        ++by_aspect[c.aspect];
        CHECK_FALSE(c.segments().empty());
    }
    CHECK(by_aspect[AspectLabel::WA1] == 8);
    CHECK(by_aspect[AspectLabel::WA2] == 10);
    CHECK(a.chars.singular_images.size() == a.segments.segments.size());
}

TEST_CASE("the six-solution domain is covered by three basic regions per aspect") {
    const auto& a = reference_atlas();
    std::map<AspectLabel, std::vector<int>> six;
    for (const auto& r : a.basic_regions.regions) {
        if (r.joint_count == 6) six[r.aspect].push_back(r.id);
    }
    CHECK(six[AspectLabel::WA1].size() == 3);
    CHECK(six[AspectLabel::WA2].size() == 3);

    const auto hit = regions_containing(reference_manipulator(), a.basic_regions, {17.0, 15.0, 15.0});
    REQUIRE(hit.size() == 6);
    std::map<AspectLabel, int> per_aspect;
    for (int id : hit) {
        const auto& r = a.basic_regions.regions[id];
        ++per_aspect[r.aspect];
        CHECK(r.joint_count == 6);
    }
    CHECK(per_aspect[AspectLabel::WA1] == 3);
    CHECK(per_aspect[AspectLabel::WA2] == 3);
}

TEST_CASE("basic regions have one aspect, a joint count and a singular boundary") {
    const auto& a = reference_atlas();
    const auto& m = reference_manipulator();
    REQUIRE(a.basic_regions.regions.size() == 24);
    for (const auto& r : a.basic_regions.regions) {
        INFO(r.label);
        CHECK(r.label.rfind(r.aspect == AspectLabel::WA1 ? "WAb1" : "WAb2", 0) == 0);
        CHECK(aspect_of(m, r.representative) == r.aspect);
        CHECK(a.basic_regions.region_at(r.representative.angles()) == r.id);
        CHECK(r.joint_image == image_of(r.representative.angles()));
        CHECK(forward_kinematics(m, JointCoords::at(17.0, r.joint_image)).count() ==
              static_cast<std::size_t>(r.joint_count));
        CHECK(r.singular_boundary.size() == 1);
    }
}

TEST_CASE("property: the solution count is constant over each basic region") {
    const auto& a = reference_atlas();
    const auto& m = reference_manipulator();
    for (const auto& r : a.basic_regions.regions) {
        INFO(r.label);
        const int k = margin(a.basic_regions, region_cells(a.basic_regions, r.id, 1), r.id);
        int tested = 0;
        for (const Vec2 p : region_cells(a.basic_regions, r.id, std::max<int>(1, static_cast<int>(r.cells / 25)))) {
            if (!interior_cell(a.basic_regions, p, r.id, k)) continue;
            const auto set = forward_kinematics(m, JointCoords::at(17.0, image_of(p)));
            CHECK(set.count() == static_cast<std::size_t>(r.joint_count));
            ++tested;
        }
        CHECK(tested > 0);
    }
}

TEST_CASE("property: paths inside a basic region map to paths without coalescence") {
    const auto& a = reference_atlas();
    const auto& m = reference_manipulator();
    for (const auto& r : a.basic_regions.regions) {
        if (r.cells < 500) continue;
        INFO(r.label);
        const auto cells = region_cells(a.basic_regions, r.id, 1);
        const int k = margin(a.basic_regions, cells, r.id);
        const auto deep = std::find_if(cells.begin(), cells.end(),
                                       [&](Vec2 p) { return interior_cell(a.basic_regions, p, r.id, k); });
        REQUIRE(deep != cells.end());
        const Vec2 x0 = interior_cell(a.basic_regions, r.representative.angles(), r.id, k)
                            ? r.representative.angles()
                            : *deep;
        // Farthest sampled cell reachable by a straight segment that stays in the region.
        Vec2 x1 = x0;
        for (const Vec2 p : region_cells(a.basic_regions, r.id, 17)) {
            const Vec2 d = torus_delta(x0, p);
            bool inside = true;
            for (int step = 0; step <= 200 && inside; ++step) {
                const Vec2 q = x0 + (step / 200.0) * d;
                inside = interior_cell(a.basic_regions, q, r.id, k);
            }
            if (inside && norm(d) > norm(x1 - x0)) x1 = x0 + d;
        }
        REQUIRE(norm(x1 - x0) > 0.05);
        JointPath path;
        path.point = [&, x0, x1](double t) { return image_of(x0 + t * (x1 - x0)); };
        path.velocity = [&, x0, x1](double t) {
            return ik_jacobian(m, SlicePose::at(x0 + t * (x1 - x0), 17.0)) * (x1 - x0);
        };
        const auto start = forward_kinematics(m, JointCoords::at(17.0, path.point(0.0)));
        const auto run = continue_solutions(m, path, start);
        CHECK(run.events.empty());
        int mine = -1;
        for (std::size_t k = 0; k < start.count(); ++k) {
            if (torus_distance(start.solutions[k].pose.angles(), x0) < 1e-9) mine = static_cast<int>(k);
        }
        REQUIRE(mine >= 0);
        REQUIRE(run.final_poses[mine].has_value());
        CHECK(torus_distance(*run.final_poses[mine], x1) < 1e-6);
    }
}

TEST_CASE("basic component images stay in regions of the component's count") {
    const auto& a = reference_atlas();
    REQUIRE(a.components.size() == a.basic_regions.regions.size());
    for (const auto& comp : a.components) {
        const auto& r = a.basic_regions.regions[comp.region_id];
        INFO(r.label);
        CHECK(comp.aspect == r.aspect);
        REQUIRE_FALSE(comp.image.empty());
        int agree = 0, known = 0;
        for (const Vec2 q : comp.image) {
            const int c = a.region_map.count_at(q);
            if (c < 0) continue;
            ++known;
            agree += c == r.joint_count;
        }
        CHECK(agree >= 0.97 * known);
    }
}

}
