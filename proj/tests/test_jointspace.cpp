#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "slice_fixture.hpp"

using namespace rpr;
using fixture::reference_atlas;
using fixture::reference_manipulator;

namespace {

const oracle::Closure& closure() {
    static const oracle::Closure c(ManipulatorGeometry::reference(), 17.0);
    return c;
}

int oracle_count(Vec2 q) { return static_cast<int>(oracle::brute_force_fk(closure(), q.x, q.y).size()); }

bool at_segment_boundary(const SliceAtlas& a, const CurveParam& p) {
    const double len = a.images[p.curve_id].length();
    for (const auto& seg : a.segments.segments) {
        if (seg.curve_id != p.curve_id) continue;
        for (double b : {seg.s_begin, seg.s_end}) {
            const double d = std::fmod(std::abs(b - p.s), len);
            if (std::min(d, len - d) < 1e-9) return true;
        }
    }
    return false;
}

}  // namespace

TEST_SUITE("jointspace") {

TEST_CASE("six cusps: one with four distinct solutions, five with two") {
    const auto& cusps = reference_atlas().cusps.cusps;
    REQUIRE(cusps.size() == 6);
    std::map<int, int> by_count;
    for (const auto& c : cusps) ++by_count[c.distinct_solutions];
    CHECK(by_count[4] == 1);
    CHECK(by_count[2] == 5);
    for (std::size_t i = 0; i < cusps.size(); ++i) CHECK(cusps[i].label == "C" + std::to_string(i + 1));
}

TEST_CASE("cusp triple poses are singular, map to the cusp and stall the image") {
    const auto& c = closure();
    for (const auto& cusp : reference_atlas().cusps.cusps) {
        INFO(cusp.label);
        const Vec2 x = cusp.triple_pose.angles();
        CHECK(norm(c.legs(x.x, x.y) - cusp.location) < 1e-6);
        CHECK(std::abs(oracle::concurrency_determinant(c, x.x, x.y)) < 1e-7);
        // Image of the singular curve has zero velocity at a cusp.
        const Vec2 g = oracle::gradient([&](Vec2 y) { return oracle::concurrency_determinant(c, y.x, y.y); }, x);
        const Vec2 t = normalized(perp(g));
        const double h = 1e-4;
        const Vec2 v = (c.legs(x.x + h * t.x, x.y + h * t.y) - c.legs(x.x - h * t.x, x.y - h * t.y)) / (2 * h);
        const Vec2 gx = oracle::gradient([&](Vec2 y) { return c.legs(y.x, y.y).x; }, x);
        const Vec2 gy = oracle::gradient([&](Vec2 y) { return c.legs(y.x, y.y).y; }, x);
        CHECK(norm(v) < 1e-3 * std::max(norm(gx), norm(gy)));
    }
}

TEST_CASE("the count inside a cusp wedge exceeds the count outside by two") {
    for (const auto& cusp : reference_atlas().cusps.cusps) {
        INFO(cusp.label);
        // Far enough out that the oracle grid separates the roots born at the cusp.
        const Vec2 in = cusp.location + 0.3 * cusp.opening, out = cusp.location - 0.3 * cusp.opening;
        const int inside = oracle_count(in);
        CHECK(inside == oracle_count(out) + 2);
        CHECK(inside == static_cast<int>(forward_kinematics(reference_manipulator(), JointCoords::at(17.0, in)).count()));
    }
}

TEST_CASE("six nodes: three with four distinct solutions, three with two") {
    const auto& nodes = reference_atlas().nodes.nodes;
    REQUIRE(nodes.size() == 6);
    std::map<int, int> by_count;
    for (const auto& n : nodes) ++by_count[n.distinct_solutions];
    CHECK(by_count[4] == 3);
    CHECK(by_count[2] == 3);
}

TEST_CASE("node sector counts alternate around the node and agree with the oracle") {
    for (const auto& n : reference_atlas().nodes.nodes) {
        INFO(n.label);
        const auto& s = n.sector_counts;
        CHECK(s[0] == s[2]);
        CHECK(std::abs(s[1] - s[3]) == 4);
        CHECK(std::abs(s[0] - s[1]) == 2);
        CHECK(n.distinct_solutions == s[0]);
        CHECK(n.angle > 1.0 * std::numbers::pi / 180);
        std::multiset<int> lib(s.begin(), s.end()), ref;
        const Vec2 t0 = n.tangents[0], t1 = n.tangents[1];
        for (const Vec2 d : {t0 + t1, t0 - t1, t1 - t0, -1.0 * (t0 + t1)}) {
            ref.insert(oracle_count(n.location + 0.2 * normalized(d)));
        }
        CHECK(lib == ref);
    }
}

TEST_CASE("cusps and nodes split the image curves into segments") {
    const auto& a = reference_atlas();
    for (const auto& c : a.cusps.cusps) CHECK(at_segment_boundary(a, c.source));
    for (const auto& n : a.nodes.nodes) {
        CHECK(at_segment_boundary(a, n.params[0]));
        CHECK(at_segment_boundary(a, n.params[1]));
    }
    CHECK(a.segments.segments.size() == 18);
}

TEST_CASE("region map counts at reference points") {
    const auto& map = reference_atlas().region_map;
    CHECK(map.count_at({15.0, 15.0}) == 6);
    CHECK(map.count_at({13.25, 20.39}) == 4);
    CHECK(map.count_at({map.window.rho2_min + 0.1, map.window.rho3_min + 0.1}) == 0);
    CHECK(map.count_at({map.window.rho2_max + 1.0, 15.0}) == -1);
}

TEST_CASE("region counts agree with the oracle at region representatives") {
    for (const auto& r : reference_atlas().region_map.regions) {
        if (r.cells < 40) continue;
        INFO("region " << r.id);
        CHECK(oracle_count(r.representative) == r.count);
    }
}

TEST_CASE("every segment separates counts differing by two, with one lost solution per aspect") {
    const auto& a = reference_atlas();
    for (const auto& seg : a.segments.segments) {
        INFO("segment " << seg.id);
        REQUIRE(seg.probed);
        CHECK(seg.probe.high_count - seg.probe.low_count == 2);
        // The oracle grid cannot split the nearly double roots right at the curve, so it is
        // evaluated further out along the probe normal, where only this curve is crossed.
        const Vec2 mid = 0.5 * (seg.probe.high_point + seg.probe.low_point);
        const Vec2 dir = normalized(seg.probe.high_point - seg.probe.low_point);
        bool compared = false;
        for (double r : {0.08, 0.15, 0.3}) {
            if (fixture::crossings(a.images, mid - r * dir, mid + r * dir).size() != 1) continue;
            CHECK(oracle_count(mid + r * dir) == seg.probe.high_count);
            CHECK(oracle_count(mid - r * dir) == seg.probe.low_count);
            compared = true;
            break;
        }
        CHECK(compared);
        const std::set<AspectLabel> aspects(seg.probe.lost_aspects.begin(), seg.probe.lost_aspects.end());
        CHECK(aspects == std::set<AspectLabel>{AspectLabel::WA1, AspectLabel::WA2});
        for (int k = 0; k < 2; ++k) {
            REQUIRE(seg.lost_roles[k] >= 0);
            const auto& region = a.basic_regions.regions[seg.lost_roles[k]];
            CHECK(region.aspect == seg.probe.lost_aspects[k]);
            CHECK(region.joint_count == seg.probe.high_count);
        }
    }
}

TEST_CASE("the crossing label is the same at two probes along a segment") {
    const auto& a = reference_atlas();
    const auto& m = reference_manipulator();
    for (const auto& seg : a.segments.segments) {
        INFO("segment " << seg.id);
        const auto& ws = a.workspace[seg.curve_id];
        const auto& im = a.images[seg.curve_id];
        const double w = seg.s_end - seg.s_begin;
        const auto p = probe_crossing(m, ws, im, seg.s_begin + w / 3);
        const auto q = probe_crossing(m, ws, im, seg.s_begin + 2 * w / 3);
        REQUIRE(p.has_value());
        REQUIRE(q.has_value());
        CHECK(p->high_count == seg.probe.high_count);
        CHECK(q->high_count == seg.probe.high_count);
        CHECK(p->low_count == seg.probe.low_count);
        CHECK(q->low_count == seg.probe.low_count);
        CHECK(segment_at(a.segments.segments, im, seg.s_begin + w / 3) == seg.id);
    }
}

TEST_CASE("the segment crossed from (15, 15) to (13.25, 20.39) loses the pair that continuation loses") {
    const auto& a = reference_atlas();
    const auto& m = reference_manipulator();
    const Vec2 from{15.0, 15.0}, to{13.25, 20.39};
    const auto xs = fixture::crossings(a.images, from, to);
    REQUIRE(xs.size() == 1);
    const int seg = segment_at(a.segments.segments, a.images[xs[0].image], xs[0].s);
    REQUIRE(seg >= 0);
    const auto& label = a.segments.segments[seg];
    CHECK(label.probe.high_count == 6);
    CHECK(label.probe.low_count == 4);

    const auto start = forward_kinematics(m, JointCoords::at(17.0, from));
    const auto run = continue_solutions(m, straight_path(from, to), start);
    REQUIRE(run.events.size() == 1);
    CHECK(std::abs(run.events[0].path_parameter - xs[0].lambda) < 1e-3);
    const auto [i, j] = run.events[0].branch_ids;
    const std::set<int> continued{a.basic_regions.region_at(start.solutions[i].pose.angles()),
                                  a.basic_regions.region_at(start.solutions[j].pose.angles())};
    const std::set<int> labelled(label.lost_roles.begin(), label.lost_roles.end());
    CHECK(continued == labelled);
}

TEST_CASE("distinct solutions absorb approximations of an anchored multiple root") {
    const auto& m = reference_manipulator();
    const auto& cusp = reference_atlas().cusps.cusps.front();
    const auto sols = distinct_solutions(m, JointCoords::at(17.0, cusp.location), {cusp.triple_pose.angles()});
    REQUIRE_FALSE(sols.empty());
    CHECK(sols.front() == cusp.triple_pose.angles());
    CHECK(static_cast<int>(sols.size()) == cusp.distinct_solutions);
    for (std::size_t k = 1; k < sols.size(); ++k) CHECK(torus_distance(sols[k], sols.front()) > 5e-3);
}

}
