#include "rpr/singularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

namespace rpr {

namespace {

struct Row3 {
    double u, v, w;
};

double det3(const Row3& a, const Row3& b, const Row3& c) {
    return a.u * (b.v * c.w - b.w * c.v) - a.v * (b.u * c.w - b.w * c.u) + a.w * (b.u * c.v - b.v * c.u);
}

struct LegLine {
    Row3 row;
    Row3 d_theta;
    Row3 d_alpha;
};

LegLine leg_line(Vec2 anchor, Vec2 leg, Vec2 dleg_theta, Vec2 dleg_alpha) {
    const double r = norm(leg);
    if (!(r > 0.0)) throw Error(ErrorKind::ZeroLengthLeg, "leg line undefined for a zero-length leg");
    const Vec2 n = perp(leg) / r;
    auto dn = [&](Vec2 dl) { return perp(dl) / r - perp(leg) * (dot(leg, dl) / (r * r * r)); };
    const Vec2 nt = dn(dleg_theta), na = dn(dleg_alpha);
    return {{n.x, n.y, -dot(n, anchor)},
            {nt.x, nt.y, -dot(nt, anchor)},
            {na.x, na.y, -dot(na, anchor)}};
}

}  // namespace

SingularValueGradient singular_value_with_gradient(const Manipulator& m, const SlicePose& pose) {
    const auto& g = m.geometry();
    const auto& f = m.frame();
    const double ct = std::cos(pose.theta1), st = std::sin(pose.theta1);
    const double ca = std::cos(pose.alpha), sa = std::sin(pose.alpha);
    const Vec2 b1 = g.a1 + pose.rho1 * Vec2{ct, st};
    const Vec2 db1 = pose.rho1 * Vec2{-st, ct};
    const Vec2 r2 = rotated(f.p2, ca, sa), r3 = rotated(f.p3, ca, sa);
    const auto l1 = leg_line(g.a1, b1 - g.a1, db1, {});
    const auto l2 = leg_line(g.a2, b1 + r2 - g.a2, db1, perp(r2));
    const auto l3 = leg_line(g.a3, b1 + r3 - g.a3, db1, perp(r3));
    SingularValueGradient out;
    out.value = det3(l1.row, l2.row, l3.row);
    out.gradient.x = det3(l1.d_theta, l2.row, l3.row) + det3(l1.row, l2.d_theta, l3.row) +
                     det3(l1.row, l2.row, l3.d_theta);
    out.gradient.y = det3(l1.d_alpha, l2.row, l3.row) + det3(l1.row, l2.d_alpha, l3.row) +
                     det3(l1.row, l2.row, l3.d_alpha);
    return out;
}

double singular_value(const Manipulator& m, const SlicePose& pose) {
    const auto p = m.platform_points(pose);
    const auto& g = m.geometry();
    auto row = [](Vec2 anchor, Vec2 b) {
        const Vec2 leg = b - anchor;
        const double r = norm(leg);
        if (!(r > 0.0)) throw Error(ErrorKind::ZeroLengthLeg, "leg line undefined for a zero-length leg");
        const Vec2 n = perp(leg) / r;
        return Row3{n.x, n.y, -dot(n, anchor)};
    };
    return det3(row(g.a1, p.b1), row(g.a2, p.b2), row(g.a3, p.b3));
}

AspectLabel aspect_of(const Manipulator& m, const SlicePose& pose, double singular_tol) {
    const double s = singular_value(m, pose);
    if (std::abs(s) < singular_tol) return AspectLabel::Singular;
    return s > 0.0 ? AspectLabel::WA1 : AspectLabel::WA2;
}

Vec2 singular_tangent(const Manipulator& m, const SlicePose& pose) {
    return normalized(perp(singular_value_with_gradient(m, pose).gradient));
}

Vec2 project_to_singular(const Manipulator& m, Vec2 angles, double rho1, int iterations) {
    Vec2 x = angles;
    for (int i = 0; i < iterations; ++i) {
        const auto sv = singular_value_with_gradient(m, SlicePose::at(x, rho1));
        const double g2 = dot(sv.gradient, sv.gradient);
        if (!(g2 > 0.0) || sv.value == 0.0) break;
        Vec2 step = sv.gradient * (sv.value / g2);
        if (const double n = norm(step); n > 0.05) step = step * (0.05 / n);
        x -= step;
        if (norm(step) < 1e-16) break;
    }
    return x;
}

double image_speed(const Manipulator& m, const SlicePose& pose) {
    const Mat2 dg = ik_jacobian(m, pose);
    const Vec2 t = singular_tangent(m, pose);
    const double f = dg.frobenius();
    return f > 0.0 ? norm(dg * t) / f : 0.0;
}

namespace {

struct Axis {
    double lo = 0.0;
    double h = 0.0;
    int cells = 0;
    bool periodic = true;

    int vertices() const { return periodic ? cells : cells + 1; }
    int next(int i) const { return periodic ? (i + 1) % cells : i + 1; }
    double coord(int i) const { return lo + i * h; }
};

Axis make_axis(const AngleRange& r, int n) {
    return {r.lo, r.width() / n, n, r.full_period()};
}

struct EdgePoint {
    Vec2 point;  // unwrapped grid coordinates of the crossing
};

class Tracer {
public:
    Tracer(const Manipulator& m, const SliceConfig& slice, int n)
        : m_(m), rho1_(slice.rho1), ax_(make_axis(slice.theta_range, n)),
          ay_(make_axis(slice.alpha_range, n)) {}

    TraceResult run() {
        evaluate_grid();
        collect_segments();
        TraceResult out;
        out.grid_n_used = ax_.cells;
        out.ambiguous_cells = ambiguous_;
        link(out.curves);
        return out;
    }

private:
    double value(Vec2 p) const {
        try {
            return singular_value(m_, SlicePose::at(p, rho1_));
        } catch (const Error&) {
            // Leg through its anchor: nudge off the isolated point.
            return singular_value(m_, SlicePose::at(p + Vec2{1e-9, 1e-9}, rho1_));
        }
    }

    std::size_t vid(int i, int j) const { return static_cast<std::size_t>(i) * ay_.vertices() + j; }
    bool positive(int i, int j) const { return values_[vid(i, j)] >= 0.0; }

    void evaluate_grid() {
        values_.resize(static_cast<std::size_t>(ax_.vertices()) * ay_.vertices());
        for (int i = 0; i < ax_.vertices(); ++i) {
            for (int j = 0; j < ay_.vertices(); ++j) {
                values_[vid(i, j)] = value({ax_.coord(i), ay_.coord(j)});
            }
        }
    }

    // Edge ids: theta-direction edges first, then alpha-direction edges.
    long theta_edge(int i, int j) const { return static_cast<long>(i) * ay_.vertices() + j; }
    long alpha_edge(int i, int j) const {
        return static_cast<long>(ax_.cells) * ay_.vertices() + static_cast<long>(i) * ay_.cells + j;
    }

    // Root of the singular value along the edge from vertex (i, j) in direction `dir`.
    Vec2 refine(int i, int j, bool theta_dir) {
        const Vec2 p0{ax_.coord(i), ay_.coord(j)};
        const Vec2 dir = theta_dir ? Vec2{ax_.h, 0.0} : Vec2{0.0, ay_.h};
        const double f0 = values_[vid(i, j)];
        const double f1 = theta_dir ? values_[vid(ax_.next(i), j)] : values_[vid(i, ay_.next(j))];
        if (f0 == 0.0) return p0;
        if (f1 == 0.0) return p0 + dir;
        auto fn = [&](double u) { return value(p0 + u * dir); };
        std::uintmax_t iters = 200;
        const auto [a, b] = boost::math::tools::toms748_solve(
            fn, 0.0, 1.0, f0, f1, boost::math::tools::eps_tolerance<double>(52), iters);
        return p0 + (0.5 * (a + b)) * dir;
    }

    long edge_point(long id, int i, int j, bool theta_dir) {
        if (!points_.contains(id)) points_.emplace(id, EdgePoint{refine(i, j, theta_dir)});
        return id;
    }

    void add_segment(long a, long b) {
        adj_[a].push_back(b);
        adj_[b].push_back(a);
    }

    void collect_segments() {
        for (int i = 0; i < ax_.cells; ++i) {
            const int i1 = ax_.next(i);
            for (int j = 0; j < ay_.cells; ++j) {
                const int j1 = ay_.next(j);
                const bool s00 = positive(i, j), s10 = positive(i1, j), s11 = positive(i1, j1),
                           s01 = positive(i, j1);
                // Edges: bottom (alpha = j), right (theta = i + 1), top (alpha = j + 1), left (theta = i).
                std::array<long, 4> e{-1, -1, -1, -1};
                if (s00 != s10) e[0] = edge_point(theta_edge(i, j), i, j, true);
                if (s10 != s11) e[1] = edge_point(alpha_edge(i1, j), i1, j, false);
                if (s01 != s11) e[2] = edge_point(theta_edge(i, j1), i, j1, true);
                if (s00 != s01) e[3] = edge_point(alpha_edge(i, j), i, j, false);
                const int count = static_cast<int>(std::count_if(e.begin(), e.end(), [](long v) { return v >= 0; }));
                if (count == 2) {
                    std::array<long, 2> pair{};
                    int k = 0;
                    for (long v : e) {
                        if (v >= 0) pair[k++] = v;
                    }
                    add_segment(pair[0], pair[1]);
                } else if (count == 4) {
                    ++ambiguous_;
                    const Vec2 c{ax_.coord(i) + 0.5 * ax_.h, ay_.coord(j) + 0.5 * ay_.h};
                    const bool center = value(c) >= 0.0;
                    if (center == s00) {
                        // Corners 10 and 01 are cut off.
                        add_segment(e[0], e[1]);
                        add_segment(e[2], e[3]);
                    } else {
                        add_segment(e[3], e[0]);
                        add_segment(e[1], e[2]);
                    }
                }
            }
        }
    }

    Vec2 lift(Vec2 prev, Vec2 p) const {
        Vec2 d = p - prev;
        if (ax_.periodic) d.x = wrap_delta(d.x);
        if (ay_.periodic) d.y = wrap_delta(d.y);
        return prev + d;
    }

    void link(std::vector<TracedCurve>& curves) {
        std::map<long, bool> visited;
        auto walk = [&](long start) {
            std::vector<long> chain{start};
            visited[start] = true;
            long prev = -1, cur = start;
            bool closed = false;
            while (true) {
                // Neighbours of cur minus one occurrence of the point we came from.
                std::vector<long> nb = adj_[cur];
                if (const auto it = std::find(nb.begin(), nb.end(), prev); it != nb.end()) nb.erase(it);
                if (nb.empty()) break;
                const long nxt = nb.front();
                if (nxt == start) { closed = true; break; }
                if (visited[nxt]) break;
                visited[nxt] = true;
                chain.push_back(nxt);
                prev = cur;
                cur = nxt;
            }
            make_curve(chain, closed, curves);
        };
        // Open chains start at window-boundary points.
        for (const auto& [id, nb] : adj_) {
            if (nb.size() == 1 && !visited[id]) walk(id);
        }
        for (const auto& [id, nb] : adj_) {
            if (!visited[id]) walk(id);
        }
    }

    void make_curve(const std::vector<long>& chain, bool closed, std::vector<TracedCurve>& curves) {
        if (chain.size() < 2) return;
        TracedCurve c;
        c.id = static_cast<int>(curves.size());
        c.domain = CurveDomain::WorkspaceSlice;
        c.rho1 = rho1_;
        c.closed = closed;
        std::vector<Vec2> pts;
        pts.reserve(chain.size() + 1);
        for (long id : chain) {
            Vec2 p = points_.at(id).point;
            if (pts.empty()) {
                if (ax_.periodic) p.x = ax_.lo + wrap_angle(p.x - ax_.lo);
                if (ay_.periodic) p.y = ay_.lo + wrap_angle(p.y - ay_.lo);
            } else {
                p = lift(pts.back(), p);
                if (norm(p - pts.back()) < 1e-14) continue;
            }
            pts.push_back(p);
        }
        if (closed) pts.push_back(lift(pts.back(), pts.front()));
        // Orient along the level-set tangent perp(grad).
        const Vec2 t0 = singular_tangent(m_, SlicePose::at(pts[0], rho1_));
        if (dot(t0, pts[1] - pts[0]) < 0.0) std::reverse(pts.begin(), pts.end());
        if (closed) {
            const Vec2 w = pts.back() - pts.front();
            c.winding_theta = static_cast<int>(std::lround(w.x / kTwoPi));
            c.winding_alpha = static_cast<int>(std::lround(w.y / kTwoPi));
            // Repeat the first sample exactly, shifted by whole periods.
            pts.back() = pts.front() + Vec2{c.winding_theta * kTwoPi, c.winding_alpha * kTwoPi};
        }
        c.arc.reserve(pts.size());
        double s = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (k > 0) s += norm(pts[k] - pts[k - 1]);
            c.arc.push_back(s);
            c.samples.push_back({pts[k], singular_tangent(m_, SlicePose::at(pts[k], rho1_))});
        }
        curves.push_back(std::move(c));
    }

    const Manipulator& m_;
    double rho1_;
    Axis ax_, ay_;
    std::vector<double> values_;
    std::map<long, EdgePoint> points_;
    std::map<long, std::vector<long>> adj_;
    int ambiguous_ = 0;
};

}  // namespace

TraceResult trace_singular_curves(const Manipulator& m, const SliceConfig& slice) {
    slice.validate();
    TraceResult out = Tracer(m, slice, slice.grid_n).run();
    if (out.ambiguous_cells > 0) {
        // Retry once on a grid twice as fine before resolving saddles by the center sample.
        TraceResult fine = Tracer(m, slice, 2 * slice.grid_n).run();
        if (fine.ambiguous_cells > 0) {
            fine.diagnostics.push_back(
                {DiagnosticKind::ResolutionWarning,
                 fmt::format("{} cell(s) with four zero crossings at grid {}; resolved by center sample",
                             fine.ambiguous_cells, fine.grid_n_used)});
        }
        return fine;
    }
    return out;
}

TracedCurve map_curve_to_jointspace(const Manipulator& m, const TracedCurve& curve) {
    TracedCurve out;
    out.id = curve.id;
    out.domain = CurveDomain::JointSlice;
    out.rho1 = curve.rho1;
    out.closed = curve.closed;
    out.arc = curve.arc;
    out.source_id = curve.id;
    out.samples.reserve(curve.samples.size());
    out.speed.reserve(curve.samples.size());
    Vec2 last_tangent{1.0, 0.0};
    for (const auto& s : curve.samples) {
        const SlicePose pose = SlicePose::at(s.point, curve.rho1);
        const auto j = inverse_kinematics(m, pose);
        Vec2 t = last_tangent;
        double speed = 0.0;
        try {
            const Mat2 dg = ik_jacobian(m, pose);
            const Vec2 v = dg * s.tangent;
            speed = dg.frobenius() > 0.0 ? norm(v) / dg.frobenius() : 0.0;
            if (norm(v) > 0.0) t = normalized(v);
        } catch (const Error&) {
        }
        last_tangent = t;
        out.samples.push_back({j.slice(), t});
        out.speed.push_back(speed);
    }
    return out;
}

double wrap_arc(const TracedCurve& curve, double s) {
    const double len = curve.length();
    if (len <= 0.0) return 0.0;
    if (curve.closed) {
        s = std::fmod(s, len);
        if (s < 0.0) s += len;
        return s;
    }
    return std::clamp(s, 0.0, len);
}

std::size_t curve_segment_at(const TracedCurve& curve, double s) {
    s = wrap_arc(curve, s);
    const auto it = std::upper_bound(curve.arc.begin(), curve.arc.end(), s);
    std::size_t k = it == curve.arc.begin() ? 0 : static_cast<std::size_t>(it - curve.arc.begin()) - 1;
    return std::min(k, curve.arc.size() - 2);
}

Vec2 curve_point_at(const Manipulator& m, const TracedCurve& curve, double s) {
    if (curve.samples.size() == 1) return curve.samples[0].point;
    s = wrap_arc(curve, s);
    const std::size_t k = curve_segment_at(curve, s);
    const double span = curve.arc[k + 1] - curve.arc[k];
    const double t = span > 0.0 ? (s - curve.arc[k]) / span : 0.0;
    const Vec2 p = curve.samples[k].point + t * (curve.samples[k + 1].point - curve.samples[k].point);
    return project_to_singular(m, p, curve.rho1);
}

double polyline_length(const TracedCurve& curve) {
    double len = 0.0;
    for (std::size_t k = 1; k < curve.samples.size(); ++k) {
        len += norm(curve.samples[k].point - curve.samples[k - 1].point);
    }
    return len;
}

}  // namespace rpr
