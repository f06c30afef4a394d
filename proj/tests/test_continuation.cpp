#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "slice_fixture.hpp"

using namespace rpr;
using fixture::reference_atlas;
using fixture::reference_manipulator;

namespace {

/// Loop around a cusp starting inside its wedge, clear of every other cusp and node.
JointPath cusp_loop(const CuspPoint& c) {
    const auto& a = reference_atlas();
    double gap = 1e9;
    for (const auto& o : a.cusps.cusps) {
        if (o.id != c.id) gap = std::min(gap, norm(o.location - c.location));
    }
    for (const auto& n : a.nodes.nodes) gap = std::min(gap, norm(n.location - c.location));
    return circle_path(c.location, std::min(0.5, 0.4 * gap), std::atan2(c.opening.y, c.opening.x));
}

}  // namespace

TEST_SUITE("continuation") {

TEST_CASE("the path from (15, 15) to (13.25, 20.39) loses one pair of opposite aspects") {
    const auto& m = reference_manipulator();
    const auto start = forward_kinematics(m, {17.0, 15.0, 15.0});
    REQUIRE(start.count() == 6);
    const auto run = continue_solutions(m, straight_path({15.0, 15.0}, {13.25, 20.39}), start);
    REQUIRE(run.events.size() == 1);
    const auto& e = run.events[0];
    CHECK(e.kind == BranchEventKind::Coalescence);
    CHECK(e.separation < 1e-4);
    CHECK(start.solutions[e.branch_ids.first].aspect != start.solutions[e.branch_ids.second].aspect);
    CHECK(std::abs(singular_value(m, e.location)) < 1e-6);
    CHECK(run.end_set.count() == 4);
    CHECK_FALSE(run.final_poses[e.branch_ids.first].has_value());
    CHECK_FALSE(run.final_poses[e.branch_ids.second].has_value());
    int survivors = 0;
    for (std::size_t k = 0; k < start.count(); ++k) {
        if (!run.final_poses[k]) continue;
        ++survivors;
        REQUIRE(run.end_index[k] >= 0);
        CHECK(run.end_set.solutions[run.end_index[k]].aspect == start.solutions[k].aspect);
    }
    CHECK(survivors == 4);
}

TEST_CASE("the reversed path gains the same pair back") {
    const auto& m = reference_manipulator();
    const auto start = forward_kinematics(m, {17.0, 13.25, 20.39});
    const auto run = continue_solutions(m, straight_path({13.25, 20.39}, {15.0, 15.0}), start);
    REQUIRE(run.events.size() == 1);
    CHECK(run.events[0].kind == BranchEventKind::Birth);
    CHECK(run.end_set.count() == 6);
    const auto [i, j] = run.events[0].branch_ids;
    CHECK(run.end_set.solutions[i].aspect != run.end_set.solutions[j].aspect);
}

TEST_CASE("a loop around each cusp moves one solution of the cusp aspect to another") {
    const auto& m = reference_manipulator();
    for (const auto& c : reference_atlas().cusps.cusps) {
        INFO(c.label);
        const auto loop = cusp_loop(c);
        CHECK(loop.closed());
        // The loop crosses the two cusp branches once each.
        const int n = 720;
        int crossings = 0;
        for (int k = 0; k < n; ++k) {
            crossings += static_cast<int>(
                fixture::crossings(reference_atlas().images, loop.point(double(k) / n), loop.point(double(k + 1) / n))
                    .size());
        }
        CHECK(crossings == 2);

        const auto start = forward_kinematics(m, JointCoords::at(17.0, loop.point(0.0)));
        const auto fwd = continue_solutions(m, loop, start);
        const auto rev = continue_solutions(m, reversed(loop), start);
        REQUIRE(fwd.permutation.has_value());
        REQUIRE(rev.permutation.has_value());
        const auto& pf = *fwd.permutation;
        const auto& pr = *rev.permutation;
        int moved = 0, lost = 0;
        for (std::size_t k = 0; k < pf.size(); ++k) {
            if (pf[k] < 0) {
                ++lost;
                continue;
            }
            if (pf[k] == static_cast<int>(k)) {
                CHECK(pr[k] == static_cast<int>(k));
                continue;
            }
            ++moved;
            CHECK(start.solutions[k].aspect == c.aspect);
            CHECK(start.solutions[pf[k]].aspect == c.aspect);
            CHECK(pr[pf[k]] == static_cast<int>(k));
        }
        CHECK(moved == 1);
        CHECK(lost == 2);
        std::vector<AspectLabel> lost_aspects;
        for (std::size_t k = 0; k < pf.size(); ++k) {
            if (pf[k] < 0) lost_aspects.push_back(start.solutions[k].aspect);
        }
        REQUIRE(lost_aspects.size() == 2);
        CHECK(lost_aspects[0] != lost_aspects[1]);
    }
}

TEST_CASE("a loop crossing no singular curve returns every solution to itself") {
    const auto& m = reference_manipulator();
    const auto loop = circle_path({15.0, 15.0}, 0.5, 0.0);
    for (int k = 0; k < 720; ++k) {
        CHECK(fixture::crossings(reference_atlas().images, loop.point(k / 720.0), loop.point((k + 1) / 720.0))
                  .empty());
    }
    const auto start = forward_kinematics(m, JointCoords::at(17.0, loop.point(0.0)));
    const auto run = continue_solutions(m, loop, start);
    REQUIRE(run.permutation.has_value());
    CHECK(run.events.empty());
    for (std::size_t k = 0; k < start.count(); ++k) CHECK((*run.permutation)[k] == static_cast<int>(k));
}

TEST_CASE("paths must start at the start joint point") {
    const auto& m = reference_manipulator();
    const auto start = forward_kinematics(m, {17.0, 15.0, 15.0});
    CHECK_THROWS_AS(continue_solutions(m, straight_path({15.5, 15.0}, {16.0, 15.0}), start), Error);
}

}
