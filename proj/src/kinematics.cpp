#include "rpr/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "rpr/singularity.hpp"

namespace rpr {

const char* to_string(AspectLabel a) {
    switch (a) {
        case AspectLabel::WA1: return "WA1";
        case AspectLabel::WA2: return "WA2";
        case AspectLabel::Singular: return "SINGULAR";
    }
    return "?";
}

Manipulator::Manipulator(ManipulatorGeometry g)
    : geometry_(std::move(g)), frame_(platform_frame(geometry_)) {}

PlatformPoints Manipulator::platform_points(const SlicePose& pose) const {
    const double ct = std::cos(pose.theta1), st = std::sin(pose.theta1);
    const double ca = std::cos(pose.alpha), sa = std::sin(pose.alpha);
    const Vec2 b1 = geometry_.a1 + pose.rho1 * Vec2{ct, st};
    return {b1, b1 + rotated(frame_.p2, ca, sa), b1 + rotated(frame_.p3, ca, sa)};
}

double Manipulator::max_leg_length(double rho1) const {
    const auto& g = geometry_;
    const double reach = rho1 + std::max(norm(frame_.p2), norm(frame_.p3));
    return reach + std::max({norm(g.a2 - g.a1), norm(g.a3 - g.a1)});
}

JointCoords inverse_kinematics(const Manipulator& m, const SlicePose& pose) {
    const auto p = m.platform_points(pose);
    const auto& g = m.geometry();
    return {pose.rho1, norm(p.b2 - g.a2), norm(p.b3 - g.a3)};
}

namespace {

// Derivatives of B1, B2, B3 with respect to theta1 and alpha.
struct PointDerivatives {
    PlatformPoints points;
    Vec2 db1_dtheta;
    Vec2 db2_dalpha;
    Vec2 db3_dalpha;
};

PointDerivatives point_derivatives(const Manipulator& m, const SlicePose& pose) {
    const double ct = std::cos(pose.theta1), st = std::sin(pose.theta1);
    const double ca = std::cos(pose.alpha), sa = std::sin(pose.alpha);
    const auto& f = m.frame();
    const Vec2 b1 = m.geometry().a1 + pose.rho1 * Vec2{ct, st};
    const Vec2 r2 = rotated(f.p2, ca, sa);
    const Vec2 r3 = rotated(f.p3, ca, sa);
    return {{b1, b1 + r2, b1 + r3}, pose.rho1 * Vec2{-st, ct}, perp(r2), perp(r3)};
}

}  // namespace

Mat2 ik_jacobian(const Manipulator& m, const SlicePose& pose) {
    const auto d = point_derivatives(m, pose);
    const auto& g = m.geometry();
    const Vec2 l2 = d.points.b2 - g.a2;
    const Vec2 l3 = d.points.b3 - g.a3;
    const double r2 = norm(l2), r3 = norm(l3);
    if (r2 == 0.0 || r3 == 0.0) throw Error(ErrorKind::ZeroLengthLeg, "leg length is zero");
    return {dot(l2, d.db1_dtheta) / r2, dot(l2, d.db2_dalpha) / r2, dot(l3, d.db1_dtheta) / r3,
            dot(l3, d.db3_dalpha) / r3};
}

std::pair<double, double> residuals(const Manipulator& m, const SlicePose& pose,
                                    const JointCoords& joint) {
    const auto p = m.platform_points(pose);
    const auto& g = m.geometry();
    const Vec2 l2 = p.b2 - g.a2, l3 = p.b3 - g.a3;
    return {dot(l2, l2) - joint.rho2 * joint.rho2, dot(l3, l3) - joint.rho3 * joint.rho3};
}

ResidualJacobian residuals_with_jacobian(const Manipulator& m, const SlicePose& pose,
                                         const JointCoords& joint) {
    const auto d = point_derivatives(m, pose);
    const auto& g = m.geometry();
    const Vec2 l2 = d.points.b2 - g.a2, l3 = d.points.b3 - g.a3;
    return {{dot(l2, l2) - joint.rho2 * joint.rho2, dot(l3, l3) - joint.rho3 * joint.rho3},
            {2.0 * dot(l2, d.db1_dtheta), 2.0 * dot(l2, d.db2_dalpha), 2.0 * dot(l3, d.db1_dtheta),
             2.0 * dot(l3, d.db3_dalpha)}};
}

std::pair<double, double> passive_angles(const Manipulator& m, const SlicePose& pose) {
    const auto p = m.platform_points(pose);
    const auto& g = m.geometry();
    const Vec2 l2 = p.b2 - g.a2, l3 = p.b3 - g.a3;
    if (norm(l2) == 0.0 || norm(l3) == 0.0) {
        throw Error(ErrorKind::ZeroLengthLeg, "passive angle undefined for a zero-length leg");
    }
    return {std::atan2(l2.y, l2.x), std::atan2(l3.y, l3.x)};
}

Configuration make_configuration(const Manipulator& m, const SlicePose& pose,
                                 double singular_tol) {
    Configuration c;
    c.pose = pose.normalized();
    c.platform = m.platform_points(c.pose);
    try {
        std::tie(c.theta2, c.theta3) = passive_angles(m, c.pose);
        c.det_j = singular_value(m, c.pose);
        c.aspect = aspect_of(m, c.pose, singular_tol);
    } catch (const Error&) {
        c.theta2 = c.theta3 = std::numeric_limits<double>::quiet_NaN();
        c.det_j = 0.0;
        c.aspect = AspectLabel::Singular;
    }
    return c;
}

int SolutionSet::count_in(AspectLabel a) const {
    return static_cast<int>(std::count_if(solutions.begin(), solutions.end(),
                                          [a](const Configuration& c) { return c.aspect == a; }));
}

namespace {

// Residuals expressed as leg-length errors.
double scaled_residual(Vec2 f, const JointCoords& joint) {
    return std::max(std::abs(f.x) / (2.0 * std::max(joint.rho2, 1.0)),
                    std::abs(f.y) / (2.0 * std::max(joint.rho3, 1.0)));
}

Vec2 solve_step(const Mat2& j, Vec2 f) {
    const double det = j.det();
    const double scale = j.a * j.a + j.b * j.b + j.c * j.c + j.d * j.d;
    if (std::abs(det) > 1e-13 * scale) {
        return {-(j.d * f.x - j.b * f.y) / det, -(-j.c * f.x + j.a * f.y) / det};
    }
    // Levenberg-Marquardt step for a (near) rank-deficient Jacobian.
    const double mu = 1e-10 * scale + 1e-300;
    const Mat2 n{j.a * j.a + j.c * j.c + mu, j.a * j.b + j.c * j.d, j.a * j.b + j.c * j.d,
                 j.b * j.b + j.d * j.d + mu};
    const Vec2 g{j.a * f.x + j.c * f.y, j.b * f.x + j.d * f.y};
    const double nd = n.det();
    return {-(n.d * g.x - n.b * g.y) / nd, -(-n.c * g.x + n.a * g.y) / nd};
}

constexpr double kAcceptResidual = 1e-9;
constexpr double kMaxNewtonStep = 0.5;

}  // namespace

std::optional<Vec2> newton_solve(const Manipulator& m, const JointCoords& joint, Vec2 seed,
                                 int max_iterations, double tol) {
    Vec2 x = seed;
    auto eval = [&](Vec2 at) { return residuals_with_jacobian(m, SlicePose::at(at, joint.rho1), joint); };
    auto r = eval(x);
    double e = scaled_residual(r.f, joint);
    for (int it = 0; it < max_iterations && e > tol; ++it) {
        Vec2 step = solve_step(r.jacobian, r.f);
        if (!std::isfinite(step.x) || !std::isfinite(step.y)) break;
        if (const double n = norm(step); n > kMaxNewtonStep) step = step * (kMaxNewtonStep / n);
        bool improved = false;
        double t = 1.0;
        for (int h = 0; h < 30; ++h, t *= 0.5) {
            const Vec2 xn = x + t * step;
            auto rn = eval(xn);
            const double en = scaled_residual(rn.f, joint);
            if (en < e) {
                x = xn;
                r = rn;
                e = en;
                improved = true;
                break;
            }
        }
        if (!improved || t * norm(step) < 1e-16) break;
    }
    if (!(e <= kAcceptResidual)) return std::nullopt;
    return Vec2{wrap_angle(x.x), wrap_angle(x.y)};
}

Clustering cluster_poses(const std::vector<Vec2>& poses, double tol) {
    const int n = static_cast<int>(poses.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (torus_distance(poses[i], poses[j]) < tol) parent[find(j)] = find(i);
        }
    }
    Clustering c;
    c.cluster_of.assign(n, -1);
    std::vector<int> label(n, -1);
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        if (label[root] < 0) {
            label[root] = static_cast<int>(c.sizes.size());
            c.sizes.push_back(0);
        }
        c.cluster_of[i] = label[root];
        ++c.sizes[label[root]];
    }
    return c;
}

SolutionSet forward_kinematics(const Manipulator& m, const JointCoords& joint,
                               const FkOptions& opts) {
    SolutionSet out;
    out.joint = joint;
    const int n = opts.grid_n;
    const double h = kTwoPi / n;
    const auto& g = m.geometry();
    const auto& f = m.frame();

    std::vector<Vec2> u2(n), u3(n), v2(n), v3(n);
    for (int i = 0; i < n; ++i) {
        const double t = i * h;
        const Vec2 b1 = g.a1 + joint.rho1 * Vec2{std::cos(t), std::sin(t)};
        u2[i] = b1 - g.a2;
        u3[i] = b1 - g.a3;
        v2[i] = rotated(f.p2, std::cos(t), std::sin(t));
        v3[i] = rotated(f.p3, std::cos(t), std::sin(t));
    }
    const double r2 = joint.rho2 * joint.rho2, r3 = joint.rho3 * joint.rho3;
    // Sign bits of f2 and f3 at every vertex: bit0 = f2 > 0, bit1 = f3 > 0; bit2/bit3 = exact zero.
    std::vector<unsigned char> sign(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 l2 = u2[i] + v2[j], l3 = u3[i] + v3[j];
            const double f2 = dot(l2, l2) - r2, f3 = dot(l3, l3) - r3;
            sign[i * n + j] = static_cast<unsigned char>((f2 > 0) | ((f3 > 0) << 1) |
                                                         ((f2 == 0) << 2) | ((f3 == 0) << 3));
        }
    }
    auto changes = [](unsigned char a, unsigned char b, unsigned char c, unsigned char d, int bit) {
        const unsigned pos = ((a >> bit) & 1) + ((b >> bit) & 1) + ((c >> bit) & 1) + ((d >> bit) & 1);
        const unsigned zero = ((a >> (bit + 2)) & 1) | ((b >> (bit + 2)) & 1) |
                              ((c >> (bit + 2)) & 1) | ((d >> (bit + 2)) & 1);
        return (pos > 0 && pos < 4) || zero;
    };

    std::vector<Vec2> seeds = opts.extra_seeds;
    for (int i = 0; i < n; ++i) {
        const int i1 = (i + 1) % n;
        for (int j = 0; j < n; ++j) {
            const int j1 = (j + 1) % n;
            const auto a = sign[i * n + j], b = sign[i1 * n + j], c = sign[i1 * n + j1],
                       d = sign[i * n + j1];
            if (changes(a, b, c, d, 0) && changes(a, b, c, d, 1)) {
                seeds.push_back({(i + 0.5) * h, (j + 0.5) * h});
            }
        }
    }

    std::vector<Vec2> roots;
    auto add_root = [&](Vec2 x) {
        for (const auto& r : roots) {
            if (torus_distance(r, x) < opts.dedupe_tol) return false;
        }
        roots.push_back(x);
        return true;
    };
    for (const auto& s : seeds) {
        if (auto x = newton_solve(m, joint, s, opts.max_iterations, opts.newton_tol)) {
            add_root(*x);
        } else {
            ++out.nonconverged;
        }
    }

    // Two roots close to a fold can share a grid cell; look for the partner along the kernel
    // direction of the closure Jacobian.
    const std::size_t found = roots.size();
    for (std::size_t k = 0; k < found; ++k) {
        const auto rj = residuals_with_jacobian(m, SlicePose::at(roots[k], joint.rho1), joint);
        const auto& jac = rj.jacobian;
        const double fro2 = jac.a * jac.a + jac.b * jac.b + jac.c * jac.c + jac.d * jac.d;
        if (fro2 == 0.0 || std::abs(jac.det()) > 0.05 * fro2) continue;
        // Smallest right singular vector of the Jacobian.
        const double p = jac.a * jac.a + jac.c * jac.c, q = jac.a * jac.b + jac.c * jac.d,
                     r = jac.b * jac.b + jac.d * jac.d;
        const double lmin = 0.5 * (p + r) - std::sqrt(0.25 * (p - r) * (p - r) + q * q);
        Vec2 kernel = std::abs(q) > 1e-300 ? Vec2{q, lmin - p} : (p < r ? Vec2{1, 0} : Vec2{0, 1});
        kernel = normalized(kernel);
        for (double c = 2.0 * h; c > h / 512.0; c /= 4.0) {
            for (double sgn : {1.0, -1.0}) {
                if (auto x = newton_solve(m, joint, roots[k] + sgn * c * kernel,
                                          opts.max_iterations, opts.newton_tol)) {
                    add_root(*x);
                }
            }
        }
    }

    std::sort(roots.begin(), roots.end(), [](Vec2 a, Vec2 b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    for (const auto& r : roots) {
        out.solutions.push_back(make_configuration(m, SlicePose::at(r, joint.rho1), opts.singular_tol));
    }
    for (std::size_t i = 0; i < roots.size(); ++i) {
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (torus_distance(roots[i], roots[j]) < 10.0 * opts.dedupe_tol) out.singular_input = true;
        }
        if (out.solutions[i].aspect == AspectLabel::Singular) out.singular_input = true;
    }
    if (out.singular_input) {
        out.diagnostics.push_back({DiagnosticKind::SingularInput,
                                   "joint point lies on or near the singular locus"});
    }
    if (out.nonconverged > 0) {
        out.diagnostics.push_back({DiagnosticKind::NonConvergence,
                                   fmt::format("{} seed(s) did not converge", out.nonconverged)});
    }
    return out;
}

// ---------------------------------------------------------------------------

JointPath straight_path(Vec2 from, Vec2 to) {
    return {[=](double t) { return from + t * (to - from); }, [=](double) { return to - from; }};
}

JointPath circle_path(Vec2 center, double radius, double phase, bool counter_clockwise) {
    const double dir = counter_clockwise ? 1.0 : -1.0;
    return {[=](double t) {
                // Exact closure at t = 1.
                const double a = t >= 1.0 ? phase : phase + dir * kTwoPi * t;
                return center + radius * Vec2{std::cos(a), std::sin(a)};
            },
            [=](double t) {
                const double a = phase + dir * kTwoPi * t;
                return dir * kTwoPi * radius * Vec2{-std::sin(a), std::cos(a)};
            }};
}

JointPath concatenate(const JointPath& first, const JointPath& second) {
    return {[=](double t) { return t <= 0.5 ? first.point(2.0 * t) : second.point(2.0 * t - 1.0); },
            [=](double t) {
                return t < 0.5 ? 2.0 * first.velocity(2.0 * t) : 2.0 * second.velocity(2.0 * t - 1.0);
            }};
}

JointPath reversed(const JointPath& p) {
    return {[=](double t) { return p.point(1.0 - t); }, [=](double t) { return -p.velocity(1.0 - t); }};
}

namespace {

struct TrackOutcome {
    std::vector<std::optional<Vec2>> final_poses;
    std::vector<BranchEvent> coalescences;
};

// Lockstep predictor-corrector tracking of `starts` along `path`.
TrackOutcome track(const Manipulator& m, const JointPath& path, double rho1,
                   const std::vector<Vec2>& starts, const ContinuationOptions& opts) {
    const int n = static_cast<int>(starts.size());
    std::vector<Vec2> x = starts;
    std::vector<bool> active(n, true);
    TrackOutcome out;
    out.final_poses.assign(n, std::nullopt);

    auto joint_at = [&](double l) { return JointCoords::at(rho1, path.point(l)); };
    auto nearest = [&](int k, const std::vector<Vec2>& pts) {
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (j == k || !active[j]) continue;
            const double d = torus_distance(pts[k], pts[j]);
            if (d < bd) { bd = d; best = j; }
        }
        return std::pair{best, bd};
    };

    double lambda = 0.0;
    double dl = opts.initial_step;
    const double sep_tol = opts.fk.dedupe_tol;
    while (lambda < 1.0 && std::find(active.begin(), active.end(), true) != active.end()) {
        dl = std::min(dl, 1.0 - lambda);
        const double l1 = lambda + dl;
        const JointCoords j0 = joint_at(lambda), j1 = joint_at(l1);
        const Vec2 vel = path.velocity(lambda);
        std::vector<Vec2> next = x;
        std::vector<int> failed;
        for (int k = 0; k < n; ++k) {
            if (!active[k]) continue;
            const auto rj = residuals_with_jacobian(m, SlicePose::at(x[k], rho1), j0);
            const Vec2 df_dl{-2.0 * j0.rho2 * vel.x, -2.0 * j0.rho3 * vel.y};
            const double det = rj.jacobian.det();
            Vec2 pred = x[k];
            if (std::abs(det) > 1e-300) {
                const Mat2& J = rj.jacobian;
                const Vec2 xdot{-(J.d * df_dl.x - J.b * df_dl.y) / det,
                                -(-J.c * df_dl.x + J.a * df_dl.y) / det};
                if (dl * norm(xdot) > opts.max_move) { failed.push_back(k); continue; }
                pred = x[k] + dl * xdot;
            }
            auto sol = newton_solve(m, j1, pred, 12, opts.fk.newton_tol);
            if (!sol) { failed.push_back(k); continue; }
            const double move = torus_distance(*sol, x[k]);
            const auto [nb, nd] = nearest(k, x);
            if (move > opts.max_move || (nb >= 0 && move > 0.3 * nd)) { failed.push_back(k); continue; }
            next[k] = *sol;
        }
        if (failed.empty()) {
            for (int k = 0; k < n; ++k) {
                if (!active[k]) continue;
                const auto [nb, nd] = nearest(k, next);
                if (nb >= 0 && nd < sep_tol) failed.push_back(k);
            }
        }
        if (failed.empty()) {
            x = std::move(next);
            lambda = l1;
            dl = std::min(1.5 * dl, opts.max_step);
            continue;
        }
        dl *= 0.5;
        if (dl >= opts.min_step) continue;

        // A branch cannot be continued past lambda: it meets its mirrored partner at a fold.
        const int k = failed.front();
        const auto [partner, dist] = nearest(k, x);
        if (partner < 0 || dist > 1e-2) {
            throw Error(ErrorKind::Numerical,
                        fmt::format("STEP_FAILURE: branch {} cannot be continued at lambda = {:.12g}",
                                    k, lambda));
        }
        BranchEvent ev;
        ev.path_parameter = lambda;
        ev.kind = BranchEventKind::Coalescence;
        ev.branch_ids = {std::min(k, partner), std::max(k, partner)};
        const Vec2 mid = x[k] + 0.5 * torus_delta(x[k], x[partner]);
        ev.location = SlicePose::at(mid, rho1).normalized();
        ev.separation = dist;
        out.coalescences.push_back(ev);
        active[k] = active[partner] = false;
        dl = opts.initial_step;
    }
    for (int k = 0; k < n; ++k) {
        if (active[k]) out.final_poses[k] = x[k];
    }
    return out;
}

}  // namespace

ContinuationResult continue_solutions(const Manipulator& m, const JointPath& path,
                                      const SolutionSet& start, const ContinuationOptions& opts) {
    const double rho1 = start.joint.rho1;
    if (norm(path.point(0.0) - start.joint.slice()) > 1e-9) {
        throw Error(ErrorKind::Validation, "path does not start at the start joint point");
    }
    std::vector<Vec2> starts;
    for (const auto& c : start.solutions) starts.push_back(c.pose.angles());

    ContinuationResult res;
    auto fwd = track(m, path, rho1, starts, opts);
    res.final_poses = fwd.final_poses;
    res.events = fwd.coalescences;

    FkOptions fk = opts.fk;
    for (const auto& p : res.final_poses) {
        if (p) fk.extra_seeds.push_back(*p);
    }
    res.end_set = forward_kinematics(m, JointCoords::at(rho1, path.point(1.0)), fk);

    std::vector<Vec2> end_poses;
    for (const auto& c : res.end_set.solutions) end_poses.push_back(c.pose.angles());
    const double match_tol = 1e-5;
    std::vector<bool> matched(end_poses.size(), false);
    res.end_index.assign(starts.size(), -1);
    for (std::size_t k = 0; k < starts.size(); ++k) {
        if (!res.final_poses[k]) continue;
        for (std::size_t e = 0; e < end_poses.size(); ++e) {
            if (!matched[e] && torus_distance(*res.final_poses[k], end_poses[e]) < match_tol) {
                res.end_index[k] = static_cast<int>(e);
                matched[e] = true;
                break;
            }
        }
        if (res.end_index[k] < 0) {
            res.diagnostics.push_back({DiagnosticKind::StepFailure,
                                       fmt::format("branch {} ended off the end solution set", k)});
        }
    }

    // Solutions present at the end but not reached by any branch were born on the way; find
    // where by tracking them backwards until they coalesce.
    std::vector<int> unmatched;
    std::vector<Vec2> back_starts;
    for (std::size_t e = 0; e < end_poses.size(); ++e) {
        if (!matched[e]) {
            unmatched.push_back(static_cast<int>(e));
            back_starts.push_back(end_poses[e]);
        }
    }
    if (!unmatched.empty()) {
        auto back = track(m, reversed(path), rho1, back_starts, opts);
        for (const auto& ev : back.coalescences) {
            BranchEvent b = ev;
            b.kind = BranchEventKind::Birth;
            b.path_parameter = 1.0 - ev.path_parameter;
            b.branch_ids = {unmatched[ev.branch_ids.first], unmatched[ev.branch_ids.second]};
            res.events.push_back(b);
        }
        for (std::size_t i = 0; i < back.final_poses.size(); ++i) {
            if (back.final_poses[i]) {
                res.diagnostics.push_back(
                    {DiagnosticKind::StepFailure,
                     fmt::format("end solution {} traces back to no start branch", unmatched[i])});
            }
        }
    }
    std::sort(res.events.begin(), res.events.end(),
              [](const BranchEvent& a, const BranchEvent& b) { return a.path_parameter < b.path_parameter; });

    if (path.closed()) {
        std::vector<int> perm(starts.size(), -1);
        for (std::size_t k = 0; k < starts.size(); ++k) {
            if (!res.final_poses[k]) continue;
            for (std::size_t j = 0; j < starts.size(); ++j) {
                if (torus_distance(*res.final_poses[k], starts[j]) < match_tol) {
                    perm[k] = static_cast<int>(j);
                    break;
                }
            }
        }
        res.permutation = std::move(perm);
    }
    return res;
}

}  // namespace rpr
