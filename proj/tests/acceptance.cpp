// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include <fmt/core.h>

#include "oracles.hpp"
#include "rpr/atlas.hpp"

using namespace rpr;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int n, const std::string& title, double seconds, double budget, const Outcome& o) {
    const bool ok = o.pass && seconds < budget;
    if (!ok) ++failures;
    fmt::print("criterion {}: {}: {} ({}; {:.2f} s, budget {:.0f} s)\n", n, ok ? "PASS" : "FAIL", title, o.detail,
               seconds, budget);
    std::fflush(stdout);
}

Outcome timed(const std::function<Outcome()>& f, double& seconds) {
    const auto t0 = Clock::now();
    Outcome o = f();
    seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return o;
}

const Manipulator& reference() {
    static const Manipulator m(ManipulatorGeometry::reference());
    return m;
}

SliceAtlas analyze_at(int grid_n) {
    AnalysisConfig c;
    c.geometry = ManipulatorGeometry::reference();
    c.rho1 = 17.0;
    c.grid_n = grid_n;
    return analyze_slice(c);
}

std::string census_text(const Census& c) {
    return fmt::format("{} {} {} {} {} {}", c.cusps, c.nodes, c.tangencies, c.char_cusps, c.singular_char_crossings,
                       c.char_char_crossings);
}

Outcome fk_counts() {
    const auto six = forward_kinematics(reference(), {17.0, 15.0, 15.0});
    const auto four = forward_kinematics(reference(), {17.0, 13.25, 20.39});
    const bool ok = six.count() == 6 && six.count_in(AspectLabel::WA1) == 3 &&
                    six.count_in(AspectLabel::WA2) == 3 && four.count() == 4;
    return {ok, fmt::format("(17, 15, 15): {} solutions, {} + {}; (17, 13.25, 20.39): {} solutions", six.count(),
                            six.count_in(AspectLabel::WA1), six.count_in(AspectLabel::WA2), four.count())};
}

Outcome oracle_equivalence() {
    const oracle::Closure c(ManipulatorGeometry::reference(), 17.0);
    // Reachable points are drawn as images of uniformly random poses.
    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    int matched = 0;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const SlicePose p{u(rng), u(rng), 17.0};
        const Vec2 legs = c.legs(p.theta1, p.alpha);
        const auto roots = oracle::brute_force_fk(c, legs.x, legs.y);
        const auto set = forward_kinematics(reference(), JointCoords::at(17.0, legs));
        double gap = 0.0;
        for (const Vec2 r : roots) {
            double best = 1e9;
            for (const auto& s : set.solutions) best = std::min(best, oracle::torus_gap(r, s.pose.angles()));
            gap = std::max(gap, best);
        }
        worst = std::max(worst, gap);
        if (set.count() == roots.size() && gap < 1e-6) ++matched;
    }
    return {matched == 100, fmt::format("{}/100 matched, worst torus distance {:.2e}", matched, worst)};
}

Outcome cusps(const SliceAtlas& a) {
    std::map<int, int> by;
    for (const auto& c : a.cusps.cusps) ++by[c.distinct_solutions];
    const bool ok = a.cusps.cusps.size() == 6 && by[4] == 1 && by[2] == 5;
    return {ok, fmt::format("{} cusps, {} with 4 distinct solutions, {} with 2", a.cusps.cusps.size(), by[4], by[2])};
}

Outcome nodes(const SliceAtlas& a) {
    std::map<int, int> by;
    int patterned = 0;
    for (const auto& n : a.nodes.nodes) {
        ++by[n.distinct_solutions];
        const auto& s = n.sector_counts;
        // Some rotation reads (n, n-2, n-4, n-2).
        for (int r = 0; r < 4; ++r) {
            const int k = s[r];
            if (s[(r + 1) % 4] == k - 2 && s[(r + 2) % 4] == k - 4 && s[(r + 3) % 4] == k - 2) {
                ++patterned;
                break;
            }
        }
    }
    const bool ok = a.nodes.nodes.size() == 6 && by[4] == 3 && by[2] == 3 && patterned == 6;
    return {ok, fmt::format("{} nodes, {} with 4 distinct images, {} with 2, {} with sector pattern (n, n-2, n-4, n-2)",
                            a.nodes.nodes.size(), by[4], by[2], patterned)};
}

Outcome correspondence(const SliceAtlas& a) {
    const auto& r = a.report;
    constexpr double deg = std::numbers::pi / 180.0;
    double max_tangency = 0.0, min_crossing = std::numbers::pi;
    for (const auto& c : r.cusps) {
        for (const auto& i : c.images) {
            if (i.kind == ImageClass::TripleTangency) max_tangency = std::max(max_tangency, i.angle);
        }
    }
    for (const auto& n : r.nodes) {
        for (const auto& i : n.images) min_crossing = std::min(min_crossing, i.angle);
    }
    const Census want{6, 6, 6, 8, 12, 6};
    const bool ok = r.counts.tangencies == 6 && r.counts.char_cusps == 8 && r.counts.singular_char_crossings == 12 &&
                    r.counts.char_char_crossings == 6 && max_tangency < 2.0 * deg && min_crossing > 5.0 * deg;
    return {ok, fmt::format("census {} (expected {}), largest tangency angle {:.4f} deg, smallest crossing angle "
                            "{:.2f} deg",
                            census_text(r.counts), census_text(want), max_tangency / deg, min_crossing / deg)};
}

Outcome solution_loss() {
    const auto start = forward_kinematics(reference(), {17.0, 15.0, 15.0});
    const auto run = continue_solutions(reference(), straight_path({15.0, 15.0}, {13.25, 20.39}), start);
    int coalescences = 0;
    for (const auto& e : run.events) coalescences += e.kind == BranchEventKind::Coalescence;
    if (coalescences != 1 || run.events.size() != 1) {
        return {false, fmt::format("{} events, {} coalescences", run.events.size(), coalescences)};
    }
    const auto& e = run.events[0];
    const auto a = start.solutions[e.branch_ids.first].aspect, b = start.solutions[e.branch_ids.second].aspect;
    const bool ok = a != b && e.separation < 1e-4;
    return {ok, fmt::format("one coalescence at lambda {:.4f} of solutions {} ({}) and {} ({}), separation {:.2e}",
                            e.path_parameter, e.branch_ids.first + 1, to_string(a), e.branch_ids.second + 1,
                            to_string(b), e.separation)};
}

Outcome assembly_mode_change(const SliceAtlas& a) {
    int good = 0;
    for (const auto& c : a.cusps.cusps) {
        double gap = 1e9;
        for (const auto& o : a.cusps.cusps) {
            if (o.id != c.id) gap = std::min(gap, norm(o.location - c.location));
        }
        for (const auto& n : a.nodes.nodes) gap = std::min(gap, norm(n.location - c.location));
        const auto loop = circle_path(c.location, std::min(0.5, 0.4 * gap), std::atan2(c.opening.y, c.opening.x));
        const auto start = forward_kinematics(reference(), JointCoords::at(17.0, loop.point(0.0)));
        const auto fwd = continue_solutions(reference(), loop, start);
        const auto rev = continue_solutions(reference(), reversed(loop), start);
        if (!fwd.permutation || !rev.permutation) continue;
        const auto& pf = *fwd.permutation;
        const auto& pr = *rev.permutation;
        int moved = 0, from = -1, to = -1;
        bool fixed_ok = true;
        for (std::size_t k = 0; k < pf.size(); ++k) {
            if (pf[k] < 0 || pf[k] == static_cast<int>(k)) {
                if (pf[k] >= 0) fixed_ok = fixed_ok && pr[k] == static_cast<int>(k);
                continue;
            }
            ++moved;
            from = static_cast<int>(k);
            to = pf[k];
        }
        if (moved == 1 && fixed_ok && pr[to] == from && start.solutions[from].aspect == c.aspect &&
            start.solutions[to].aspect == c.aspect) {
            ++good;
        }
    }
    const auto loop = circle_path({15.0, 15.0}, 0.5, 0.0);
    const auto start = forward_kinematics(reference(), JointCoords::at(17.0, loop.point(0.0)));
    const auto run = continue_solutions(reference(), loop, start);
    bool identity = run.permutation.has_value() && run.events.empty();
    if (identity) {
        for (std::size_t k = 0; k < start.count(); ++k) identity = identity && (*run.permutation)[k] == static_cast<int>(k);
    }
    const bool ok = good == static_cast<int>(a.cusps.cusps.size()) && good == 6 && identity;
    return {ok, fmt::format("{}/{} cusp loops exchange two same-aspect solutions, empty loop {}", good,
                            a.cusps.cusps.size(), identity ? "is the identity" : "is not the identity")};
}

Outcome stability(const SliceAtlas& a512, const SliceAtlas& a1024) {
    auto distinct = [](const SliceAtlas& a) {
        std::string s;
        for (const auto& c : a.cusps.cusps) s += std::to_string(c.distinct_solutions);
        s += '/';
        for (const auto& n : a.nodes.nodes) s += std::to_string(n.distinct_solutions);
        return s;
    };
    auto sorted = [](std::string s) {
        const auto slash = s.find('/');
        std::sort(s.begin(), s.begin() + slash);
        std::sort(s.begin() + slash + 1, s.end());
        return s;
    };
    const bool ok = a512.report.counts == a1024.report.counts && sorted(distinct(a512)) == sorted(distinct(a1024));
    return {ok, fmt::format("512: {} [{}], 1024: {} [{}]", census_text(a512.report.counts), sorted(distinct(a512)),
                            census_text(a1024.report.counts), sorted(distinct(a1024)))};
}

}  // namespace

int main() {
    double t = 0.0, t_six = 0.0, t_four = 0.0;
    {
        auto t0 = Clock::now();
        forward_kinematics(reference(), {17.0, 15.0, 15.0});
        t_six = std::chrono::duration<double>(Clock::now() - t0).count();
        t0 = Clock::now();
        forward_kinematics(reference(), {17.0, 13.25, 20.39});
        t_four = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    const Outcome c1 = fk_counts();
    report(1, "forward kinematics multiplicity", std::max(t_six, t_four), 1.0, c1);

    const Outcome c2 = timed(oracle_equivalence, t);
    report(2, "agreement with the sign-change oracle", t, 600.0, c2);

    double t512 = 0.0;
    SliceAtlas a512;
    timed([&] {
        a512 = analyze_at(512);
        return Outcome{true, ""};
    }, t512);
    report(3, "cusp census at grid 512", t512, 120.0, cusps(a512));
    report(4, "node census and sector counts", t512, 120.0, nodes(a512));
    report(5, "workspace images of cusps and nodes", t512, 300.0, correspondence(a512));

    const Outcome c6 = timed(solution_loss, t);
    report(6, "solution loss from (15, 15) to (13.25, 20.39)", t, 60.0, c6);

    const Outcome c7 = timed([&] { return assembly_mode_change(a512); }, t);
    report(7, "assembly-mode change around each cusp", t, 300.0, c7);

    double t1024 = 0.0;
    SliceAtlas a1024;
    timed([&] {
        a1024 = analyze_at(1024);
        return Outcome{true, ""};
    }, t1024);
    report(8, "census unchanged from grid 512 to 1024", t1024, 600.0, stability(a512, a1024));

    fmt::print("{}\n", failures == 0 ? "all criteria PASS" : fmt::format("{} criteria FAIL", failures));
    return failures == 0 ? 0 : 1;
}
